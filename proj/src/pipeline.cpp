#include "rsimp/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rsimp/io.hpp"
#include "rsimp/wordpiece.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rsimp {

// ---------------------------------------------------------------------------
// TOML-subset config parsing

namespace {

std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

struct ConfigValue {
  std::string raw;
  int line = 0;
};

class ConfigTable {
 public:
  void put(const std::string& key, const std::string& value, int line) {
    values_[key] = {value, line};
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    std::istringstream ss(it->second.raw);
    if constexpr (std::is_same_v<T, std::string>) {
      out = unquote(it->second.raw);
    } else if constexpr (std::is_same_v<T, bool>) {
      if (it->second.raw == "true") out = true;
      else if (it->second.raw == "false") out = false;
      else throw std::runtime_error("config line " + std::to_string(it->second.line) +
                                    ": expected true/false for " + key);
    } else {
      if (!(ss >> out) || !ss.eof())
        throw std::runtime_error("config line " + std::to_string(it->second.line) +
                                 ": cannot parse value for " + key);
    }
    consumed_.insert(key);
  }

  void check_consumed(const std::string& path) const {
    for (const auto& [key, value] : values_)
      if (!consumed_.count(key))
        throw std::runtime_error(path + ": unknown config key \"" + key +
                                 "\" (line " + std::to_string(value.line) + ")");
  }

 private:
  static std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
      return s.substr(1, s.size() - 2);
    return s;
  }
  std::map<std::string, ConfigValue> values_;
  std::set<std::string> consumed_;
};

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
  ConfigTable table;
  std::string section;
  const auto lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    const size_t comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = strip(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                               ": expected key = value");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    table.put(section.empty() ? key : section + "." + key, value,
              static_cast<int>(i + 1));
  }

  PipelineConfig c;
  table.read("io.git_dir", c.io.git_dir);
  table.read("io.pairs_in", c.io.pairs_in);
  table.read("io.wiki_pairs", c.io.wiki_pairs);
  table.read("io.out_dir", c.io.out_dir);

  table.read("ingest.min_stars", c.ingest.min_stars);
  table.read("ingest.min_commits", c.ingest.min_commits);
  table.read("ingest.keywords_path", c.ingest.keywords_path);

  table.read("align.window", c.align.window);
  table.read("align.tfidf_threshold", c.align.tfidf_threshold);
  table.read("align.bleu_lo", c.align.bleu_lo);
  table.read("align.bleu_hi", c.align.bleu_hi);
  table.read("align.max_multiplicity", c.align.max_multiplicity);
  table.read("align.max_words", c.align.max_words);
  table.read("align.scorer", c.align.scorer);
  table.read("align.score_file", c.align.score_file);

  table.read("tokenizer.vocab_size", c.tokenizer.vocab_size);

  table.read("model.heads", c.model.heads);
  table.read("model.encoder_layers", c.model.encoder_layers);
  table.read("model.decoder_layers", c.model.decoder_layers);
  table.read("model.d_model", c.model.d_model);
  table.read("model.d_ff", c.model.d_ff);
  table.read("model.dropout", c.model.dropout);
  table.read("model.max_len", c.model.max_len);

  table.read("train.learning_rate", c.train.learning_rate);
  table.read("train.batch_size", c.train.batch_size);
  table.read("train.epochs", c.train.epochs);
  table.read("train.pretrain_epochs", c.train.pretrain_epochs);
  table.read("train.snapshot_every", c.train.snapshot_every);
  table.read("train.pretrain_snapshot_every", c.train.pretrain_snapshot_every);
  table.read("train.transfer_scheme", c.train.transfer_scheme);
  table.read("train.early_epoch", c.train.early_epoch);
  table.read("train.mid_epoch", c.train.mid_epoch);
  table.read("train.reset_optimizer", c.train.reset_optimizer);
  table.read("train.seed", c.train.seed);
  table.read("train.weight_decay", c.train.weight_decay);
  table.read("train.beam", c.train.beam);

  table.read("split.train", c.split.train);
  table.read("split.valid", c.split.valid);

  table.check_consumed(path);

  if (const char* env_seed = std::getenv("RS_SEED"))
    c.train.seed = std::stoull(env_seed);

  c.validate();
  return c;
}

void PipelineConfig::validate() const {
  if (ingest.min_stars < 0 || ingest.min_commits < 0)
    throw std::runtime_error("config: ingest thresholds must be nonnegative");
  if (align.window < 1) throw std::runtime_error("config: align.window must be >= 1");
  if (align.tfidf_threshold < 0 || align.tfidf_threshold > 1)
    throw std::runtime_error("config: align.tfidf_threshold must be in [0, 1]");
  if (align.bleu_lo < 0 || align.bleu_hi > 1 || align.bleu_lo > align.bleu_hi)
    throw std::runtime_error("config: align BLEU band must satisfy 0 <= lo <= hi <= 1");
  if (align.max_multiplicity < 1 || align.max_words < 1)
    throw std::runtime_error("config: align caps must be positive");
  if (align.scorer != "tfidf" && align.scorer != "file")
    throw std::runtime_error("config: align.scorer must be tfidf or file");
  if (align.scorer == "file" && align.score_file.empty())
    throw std::runtime_error("config: align.scorer=file needs align.score_file");
  if (tokenizer.vocab_size < 16)
    throw std::runtime_error("config: tokenizer.vocab_size too small");
  if (train.snapshot_every < 1 || train.pretrain_snapshot_every < 1)
    throw std::runtime_error("config: snapshot cadences must be >= 1");
  if (train.beam < 1) throw std::runtime_error("config: train.beam must be >= 1");
  if (split.train < 0 || split.valid < 0)
    throw std::runtime_error("config: split sizes must be nonnegative");
  transfer_scheme_from_name(train.transfer_scheme);  // validates the name
  // model/train numeric ranges reuse the module validators
  ModelConfig m = model;
  m.vocab_size = std::max(m.vocab_size, 16);
  m.validate();
  TrainConfig t;
  t.learning_rate = train.learning_rate;
  t.batch_size = train.batch_size;
  t.epochs = train.epochs;
  t.weight_decay = train.weight_decay;
  t.validate();
}

// ---------------------------------------------------------------------------
// masked JSONL

void store_masked(const std::vector<MaskedDocRecord>& docs, const std::string& path) {
  std::ostringstream out;
  for (const auto& d : docs) {
    json spans = json::array();
    for (const auto& s : d.spans)
      spans.push_back({mask_surface(s.token), s.original, s.char_offset});
    json j;
    j["repo_id"] = d.repo_id;
    j["sha"] = d.sha;
    j["side"] = d.side;
    j["sentences"] = d.sentences;
    j["spans"] = spans;
    out << j.dump() << "\n";
  }
  write_file(path, out.str());
}

std::vector<MaskedDocRecord> load_masked(const std::string& path) {
  std::vector<MaskedDocRecord> docs;
  const auto lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                               ": malformed JSON line: " + e.what());
    }
    MaskedDocRecord d;
    d.repo_id = j.at("repo_id").get<std::string>();
    d.sha = j.at("sha").get<std::string>();
    d.side = j.at("side").get<std::string>();
    for (const auto& s : j.at("sentences")) d.sentences.push_back(s.get<std::string>());
    for (const auto& s : j.at("spans")) {
      MaskSpan span;
      const std::string surface = s.at(0).get<std::string>();
      for (auto t : all_mask_tokens())
        if (mask_surface(t) == surface) span.token = t;
      span.original = s.at(1).get<std::string>();
      span.char_offset = s.at(2).get<size_t>();
      d.spans.push_back(std::move(span));
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

// ---------------------------------------------------------------------------
// stages

std::vector<DocumentPair> stage_harvest(const PipelineConfig& config,
                                        const std::string& out_pairs,
                                        std::vector<std::string>* warnings) {
  const KeywordSet keywords = config.ingest.keywords_path.empty()
                                  ? KeywordSet()
                                  : KeywordSet::load(config.ingest.keywords_path);
  std::vector<DocumentPair> pairs;
  if (!config.io.pairs_in.empty()) {
    // re-validate an existing pair file: recompute keyword matches, drop
    // pairs that no longer match, restore deterministic order
    for (auto& p : load_pairs(config.io.pairs_in)) {
      p.matched_keywords = keyword_match(p.commit_message, keywords);
      if (p.matched_keywords.empty()) continue;
      if (p.difficult_doc == p.simple_doc) continue;
      pairs.push_back(std::move(p));
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const DocumentPair& a, const DocumentPair& b) {
                return std::tie(a.repo_id, a.sha) < std::tie(b.repo_id, b.sha);
              });
  } else if (!config.io.git_dir.empty()) {
    HarvestFilters filters{config.ingest.min_stars, config.ingest.min_commits};
    pairs = scan_git_directory(config.io.git_dir, keywords, filters, warnings);
  } else {
    throw std::runtime_error("harvest: configure io.git_dir or io.pairs_in");
  }
  store_pairs(pairs, out_pairs);
  return pairs;
}

std::vector<MaskedDocRecord> stage_preprocess(const std::string& in_pairs,
                                              const std::string& out_masked) {
  std::vector<MaskedDocRecord> docs;
  for (const auto& pair : load_pairs(in_pairs)) {
    for (const auto& [side, text] :
         {std::make_pair("difficult", &pair.difficult_doc),
          std::make_pair("simple", &pair.simple_doc)}) {
      MaskedDocRecord rec;
      rec.repo_id = pair.repo_id;
      rec.sha = pair.sha;
      rec.side = side;
      MaskedDocument masked = mask(clean(*text));
      for (const auto& s : split_sentences(masked)) rec.sentences.push_back(s.text);
      rec.spans = std::move(masked.spans);
      docs.push_back(std::move(rec));
    }
  }
  store_masked(docs, out_masked);
  return docs;
}

namespace {

AlignConfig align_config_of(const PipelineConfig& config) {
  AlignConfig a;
  a.window = config.align.window;
  a.tfidf_threshold = config.align.tfidf_threshold;
  a.bleu_lo = config.align.bleu_lo;
  a.bleu_hi = config.align.bleu_hi;
  a.max_multiplicity = config.align.max_multiplicity;
  a.max_words = config.align.max_words;
  return a;
}

}  // namespace

std::vector<AlignedPair> stage_align(const PipelineConfig& config,
                                     const std::string& in_masked,
                                     const std::string& out_aligned) {
  const auto docs = load_masked(in_masked);

  std::vector<std::string> corpus;
  for (const auto& d : docs)
    for (const auto& s : d.sentences) corpus.push_back(s);
  if (corpus.empty()) throw std::runtime_error("align: no sentences to align");
  const TfidfModel model = fit_tfidf(corpus);

  TfidfScorer tfidf_scorer(&model, 1.0 - config.align.tfidf_threshold);
  std::optional<FileScorer> file_scorer;
  if (config.align.scorer == "file")
    file_scorer = FileScorer::load(config.align.score_file);
  const SimilarityScorer& scorer =
      file_scorer ? static_cast<const SimilarityScorer&>(*file_scorer)
                  : static_cast<const SimilarityScorer&>(tfidf_scorer);

  // pair the two sides of each (repo, sha)
  std::map<std::pair<std::string, std::string>, const MaskedDocRecord*> difficult,
      simple;
  for (const auto& d : docs) {
    if (d.side == "difficult") difficult[{d.repo_id, d.sha}] = &d;
    else simple[{d.repo_id, d.sha}] = &d;
  }

  std::vector<AlignedPair> all;
  for (const auto& [key, simple_doc] : simple) {
    auto it = difficult.find(key);
    if (it == difficult.end()) continue;
    AlignmentProblem problem;
    for (size_t i = 0; i < simple_doc->sentences.size(); ++i)
      problem.simple.push_back({simple_doc->sentences[i], static_cast<int>(i)});
    for (size_t i = 0; i < it->second->sentences.size(); ++i)
      problem.regular.push_back({it->second->sentences[i], static_cast<int>(i)});
    auto pairs = align_document(problem, scorer, model, align_config_of(config),
                                key.first + ":" + key.second);
    all.insert(all.end(), std::make_move_iterator(pairs.begin()),
               std::make_move_iterator(pairs.end()));
  }

  split_dataset(all, static_cast<size_t>(config.split.train),
                static_cast<size_t>(config.split.valid), config.train.seed);
  store_aligned(all, out_aligned);
  return all;
}

std::string stage_stats(const std::string& in_aligned, const std::string& out_json) {
  const auto pairs = load_aligned(in_aligned);
  std::vector<std::string> simple, regular;
  for (const auto& p : pairs) {
    simple.push_back(p.simple);
    for (const auto& r : p.regular) regular.push_back(r);
  }
  const CorpusStats stats = corpus_stats(simple, regular);

  json j;
  j["Average Length"] = {{"simple", stats.avg_len_simple},
                         {"regular", stats.avg_len_regular},
                         {"simple_regular_ratio_percent", stats.avg_len_ratio()}};
  j["Vocabulary Size"] = {{"simple", stats.vocab_simple},
                          {"regular", stats.vocab_regular},
                          {"simple_regular_ratio_percent", stats.vocab_ratio()}};
  j["Exclusive Vocab Size"] = {
      {"simple", stats.exclusive_simple},
      {"regular", stats.exclusive_regular},
      {"simple_regular_ratio_percent", stats.exclusive_ratio()}};
  j["pairs"] = pairs.size();
  const std::string text = j.dump(2) + "\n";
  write_file(out_json, text);
  return text;
}

namespace {

std::vector<std::string> training_sentences(const std::string& aligned_path) {
  std::vector<std::string> corpus;
  for (const auto& p : load_aligned(aligned_path)) {
    if (p.split != Split::Train && p.split != Split::Unassigned) continue;
    corpus.push_back(p.simple);
    for (const auto& r : p.regular) corpus.push_back(r);
  }
  return corpus;
}

std::string joined_regular(const AlignedPair& p) {
  std::string src;
  for (const auto& r : p.regular) {
    if (!src.empty()) src += " ";
    src += r;
  }
  return src;
}

void items_of(const std::string& aligned_path, const WordPieceModel& tok,
              int max_len, std::vector<TrainItem>& train_items,
              std::vector<TrainItem>& valid_items,
              std::vector<std::pair<std::string, std::string>>* test_pairs) {
  for (const auto& p : load_aligned(aligned_path)) {
    if (p.split == Split::Test) {
      if (test_pairs) test_pairs->emplace_back(joined_regular(p), p.simple);
      continue;
    }
    TrainItem item = make_train_item(tok, joined_regular(p), p.simple, max_len);
    if (p.split == Split::Valid) valid_items.push_back(std::move(item));
    else train_items.push_back(std::move(item));
  }
}

}  // namespace

void stage_train_tokenizer(const PipelineConfig& config,
                           const std::vector<std::string>& in_aligned_files,
                           const std::string& out_vocab) {
  std::vector<std::string> corpus;
  for (const auto& path : in_aligned_files) {
    auto sentences = training_sentences(path);
    corpus.insert(corpus.end(), std::make_move_iterator(sentences.begin()),
                  std::make_move_iterator(sentences.end()));
  }
  if (corpus.empty()) throw std::runtime_error("train-tokenizer: empty corpus");
  auto model = WordPieceModel::train(corpus,
                                     static_cast<size_t>(config.tokenizer.vocab_size));
  model.save(out_vocab);
}

TrainResult stage_train(const PipelineConfig& config, const std::string& in_aligned,
                        const std::string& in_vocab, const std::string& out_dir) {
  const WordPieceModel tok = WordPieceModel::load(in_vocab);
  ModelConfig model_config = config.model;
  model_config.vocab_size = static_cast<int>(tok.size());

  TrainConfig tc;
  tc.learning_rate = config.train.learning_rate;
  tc.batch_size = config.train.batch_size;
  tc.epochs = config.train.epochs;
  tc.snapshot_every = config.train.snapshot_every;
  tc.seed = config.train.seed;
  tc.weight_decay = config.train.weight_decay;

  std::vector<TrainItem> train_items, valid_items;
  items_of(in_aligned, tok, model_config.max_len, train_items, valid_items, nullptr);

  const auto scheme = transfer_scheme_from_name(config.train.transfer_scheme);
  std::optional<Checkpoint> base;
  if (scheme != TransferScheme::FromScratch) {
    if (config.io.wiki_pairs.empty())
      throw std::runtime_error("transfer schemes need io.wiki_pairs for pretraining");
    const std::string pretrain_dir = out_dir + "/pretrain";
    std::vector<TrainItem> wiki_train, wiki_valid;
    items_of(config.io.wiki_pairs, tok, model_config.max_len, wiki_train, wiki_valid,
             nullptr);
    if (wiki_valid.empty() && !wiki_train.empty()) {
      // unassigned wiki pairs: hold out a deterministic tail for validation
      const size_t hold = std::max<size_t>(1, wiki_train.size() / 10);
      wiki_valid.assign(wiki_train.end() - static_cast<long>(hold), wiki_train.end());
      wiki_train.resize(wiki_train.size() - hold);
    }
    TrainConfig pre = tc;
    pre.epochs = config.train.pretrain_epochs;
    pre.snapshot_every = config.train.pretrain_snapshot_every;
    train(model_config, pre, wiki_train, wiki_valid, pretrain_dir);
    const std::string ckpt_path = transfer_checkpoint_path(
        pretrain_dir, scheme,
        {.early = config.train.early_epoch, .mid = config.train.mid_epoch, .best = 0});
    base = load_checkpoint(ckpt_path);
  }

  TrainResult result = train(model_config, tc, train_items, valid_items, out_dir,
                             base ? &*base : nullptr, /*resume_epochs=*/false,
                             config.train.reset_optimizer);
  write_loss_curve_csv(result, out_dir + "/losscurve.csv");
  return result;
}

void stage_generate(const PipelineConfig& config, const std::string& in_aligned,
                    const std::string& in_vocab, const std::string& ckpt_path,
                    const std::string& out_jsonl) {
  const WordPieceModel tok = WordPieceModel::load(in_vocab);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  std::ostringstream out;
  for (const auto& p : load_aligned(in_aligned)) {
    if (p.split != Split::Test) continue;
    const std::string src = joined_regular(p);
    json j;
    j["pair_id"] = p.pair_id;
    j["source"] = src;
    j["reference"] = p.simple;
    j["hypothesis"] = beam_search(ckpt.model_config, ckpt.parameters, tok, src,
                                  config.train.beam);
    out << j.dump() << "\n";
  }
  write_file(out_jsonl, out.str());
}

void stage_bleu(const PipelineConfig& config, const std::string& in_aligned,
                const std::string& in_vocab, const std::string& train_dir,
                const std::string& out_csv) {
  const WordPieceModel tok = WordPieceModel::load(in_vocab);
  std::vector<TrainItem> unused_train, unused_valid;
  std::vector<std::pair<std::string, std::string>> test_pairs;
  items_of(in_aligned, tok, config.model.max_len, unused_train, unused_valid,
           &test_pairs);
  if (test_pairs.empty()) throw std::runtime_error("bleu: empty test split");

  std::ostringstream out;
  out << "scheme,epoch,bleu_x100\n";
  char buf[64];
  for (int epoch = 0;; epoch += config.train.snapshot_every) {
    const std::string path =
        train_dir + "/ckpt_epoch_" + std::to_string(epoch) + ".ckpt";
    if (!fs::exists(path)) {
      if (epoch == 0) continue;  // epoch-0 snapshot is optional
      break;
    }
    const Checkpoint ckpt = load_checkpoint(path);
    const double bleu = evaluate_bleu(ckpt, tok, test_pairs, config.train.beam);
    std::snprintf(buf, sizeof(buf), "%.9g", bleu);
    out << config.train.transfer_scheme << "," << epoch << "," << buf << "\n";
  }
  write_file(out_csv, out.str());
}

// ---------------------------------------------------------------------------
// orchestration

namespace {

class Manifest {
 public:
  explicit Manifest(const std::string& path) : path_(path) {}

  void record(const std::string& stage, const std::vector<std::string>& inputs,
              const std::vector<std::string>& outputs, const fs::path& root) {
    json entry;
    entry["stage"] = stage;
    json in = json::object(), out = json::object();
    for (const auto& p : inputs) in[rel(p, root)] = hash_of(p);
    for (const auto& p : outputs) out[rel(p, root)] = hash_of(p);
    entry["inputs"] = in;
    entry["outputs"] = out;
    stages_.push_back(entry);
    json root_json;
    root_json["stages"] = stages_;
    write_file(path_, root_json.dump(2) + "\n");
  }

 private:
  static std::string rel(const std::string& p, const fs::path& root) {
    std::error_code ec;
    const auto relative = fs::relative(p, root, ec);
    return ec ? p : relative.string();
  }
  static std::string hash_of(const std::string& p) {
    if (fs::is_directory(p)) return "dir";
    return fnv1a64_hex(read_file(p));
  }
  std::string path_;
  json stages_ = json::array();
};

}  // namespace

int run_pipeline(const PipelineConfig& config) {
  const fs::path out(config.io.out_dir);
  fs::create_directories(out);
  Manifest manifest((out / "manifest.json").string());

  const std::string pairs = (out / "pairs.jsonl").string();
  const std::string masked = (out / "masked.jsonl").string();
  const std::string aligned = (out / "aligned.jsonl").string();
  const std::string stats = (out / "stats.json").string();
  const std::string vocab = (out / "vocab.txt").string();
  const std::string train_dir = (out / "train").string();
  const std::string generations = (out / "generations.jsonl").string();
  const std::string bleu_csv = (out / "bleu.csv").string();

  std::string stage;
  try {
    stage = "harvest";
    std::vector<std::string> warnings;
    stage_harvest(config, pairs, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    const std::string harvest_input =
        config.io.pairs_in.empty() ? config.io.git_dir : config.io.pairs_in;
    manifest.record(stage, {harvest_input}, {pairs}, out);

    stage = "preprocess";
    stage_preprocess(pairs, masked);
    manifest.record(stage, {pairs}, {masked}, out);

    stage = "align";
    stage_align(config, masked, aligned);
    manifest.record(stage, {masked}, {aligned}, out);

    stage = "stats";
    stage_stats(aligned, stats);
    manifest.record(stage, {aligned}, {stats}, out);

    stage = "train-tokenizer";
    std::vector<std::string> tokenizer_inputs = {aligned};
    if (!config.io.wiki_pairs.empty()) tokenizer_inputs.push_back(config.io.wiki_pairs);
    stage_train_tokenizer(config, tokenizer_inputs, vocab);
    manifest.record(stage, tokenizer_inputs, {vocab}, out);

    stage = "train";
    stage_train(config, aligned, vocab, train_dir);
    manifest.record(stage, {aligned, vocab},
                    {train_dir + "/ckpt_best.ckpt", train_dir + "/ckpt_last.ckpt",
                     train_dir + "/losscurve.csv"},
                    out);

    stage = "generate";
    stage_generate(config, aligned, vocab, train_dir + "/ckpt_best.ckpt", generations);
    manifest.record(stage, {aligned, vocab, train_dir + "/ckpt_best.ckpt"},
                    {generations}, out);

    stage = "bleu";
    stage_bleu(config, aligned, vocab, train_dir, bleu_csv);
    manifest.record(stage, {aligned, vocab}, {bleu_csv}, out);
  } catch (const std::exception& e) {
    std::cerr << "pipeline failed at stage " << stage << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace rsimp
