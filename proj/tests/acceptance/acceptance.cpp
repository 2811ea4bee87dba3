// Acceptance suite: one checkable criterion per section, each printing a
// single PASS/FAIL line. Run everything or a single one with --criterion N.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../gitfixture.hpp"
#include "../gradcheck.hpp"
#include "../oracles.hpp"
#include "rsimp/align.hpp"
#include "rsimp/annotation.hpp"
#include "rsimp/checkpoint.hpp"
#include "rsimp/io.hpp"
#include "rsimp/pipeline.hpp"
#include "rsimp/train.hpp"
#include "rsimp/wordpiece.hpp"

using namespace rsimp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Criterion = std::function<Outcome()>;

fs::path work_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("rsimp_acceptance_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TokenList random_tokens(Rng& rng, size_t min_len, size_t max_len, int vocab) {
  TokenList out;
  const size_t len = min_len + rng.below(max_len - min_len + 1);
  for (size_t i = 0; i < len; ++i)
    out.push_back("tok" + std::to_string(rng.below(static_cast<uint64_t>(vocab))));
  return out;
}

// --------------------------------------------------------------------------
// 1. BLEU oracle equivalence

Outcome criterion_bleu_oracle() {
  Rng rng(101);
  double max_delta = 0;
  for (int it = 0; it < 200; ++it) {
    auto cand = random_tokens(rng, 1, 24, 9);
    auto ref = random_tokens(rng, 1, 24, 9);
    max_delta = std::max(max_delta, std::fabs(sentence_bleu(cand, ref) -
                                              oracle::bleu_sentence(cand, ref)));
  }
  for (int it = 0; it < 200; ++it) {
    std::vector<std::pair<TokenList, TokenList>> corpus;
    const size_t n = 1 + rng.below(8);
    for (size_t p = 0; p < n; ++p)
      corpus.emplace_back(random_tokens(rng, 2, 18, 7), random_tokens(rng, 2, 18, 7));
    max_delta =
        std::max(max_delta, std::fabs(corpus_bleu(corpus) - oracle::bleu_corpus(corpus)));
  }
  std::ostringstream detail;
  detail << "max |delta| = " << max_delta << " over 200+200 random pairs";
  return {max_delta < 1e-12, detail.str()};
}

// --------------------------------------------------------------------------
// 2. gradient check

Outcome criterion_gradient_check() {
  auto result = gradcheck::run(gradcheck::toy_config(), gradcheck::toy_batch(23),
                               /*seed=*/101, /*samples=*/1000, /*eps=*/1e-5);
  std::ostringstream detail;
  detail << "max relative error " << result.max_rel_error << " over "
         << result.checked << " coordinates (worst: " << result.worst_tensor << ")";
  return {result.checked >= 1000 && result.max_rel_error < 1e-4, detail.str()};
}

// --------------------------------------------------------------------------
// 3. overfit on the bracket-deletion corpus

struct SyntheticCorpus {
  std::vector<std::pair<std::string, std::string>> pairs;  // source -> target
};

// source sentences with spans wrapped in the given delimiters; the target
// deletes the wrapped spans
SyntheticCorpus make_deletion_corpus(size_t count, uint64_t seed, char open,
                                     char close, size_t pool = 24) {
  static const char* kWords[] = {
      "alpha", "beta",  "gamma", "delta", "omega", "sigma", "kappa", "lambda",
      "mu",    "nu",    "pi",    "rho",   "tau",   "phi",   "chi",   "psi",
      "zeta",  "eta",   "theta", "iota",  "node",  "graph", "table", "index",
      "queue", "stack", "tree",  "list",  "heap",  "map"};
  Rng rng(seed);
  SyntheticCorpus corpus;
  for (size_t i = 0; i < count; ++i) {
    std::vector<std::string> kept, source;
    const size_t words = 4 + rng.below(4);
    const size_t bracket_at = rng.below(words);
    for (size_t w = 0; w < words; ++w) {
      if (w == bracket_at) {
        source.push_back(std::string(1, open));
        const size_t span = 1 + rng.below(2);
        for (size_t s = 0; s < span; ++s)
          source.push_back(kWords[rng.below(std::min(pool, std::size(kWords)))]);
        source.push_back(std::string(1, close));
      }
      const std::string word = kWords[rng.below(std::min(pool, std::size(kWords)))];
      source.push_back(word);
      kept.push_back(word);
    }
    std::string src, tgt;
    for (const auto& w : source) src += (src.empty() ? "" : " ") + w;
    for (const auto& w : kept) tgt += (tgt.empty() ? "" : " ") + w;
    corpus.pairs.emplace_back(src, tgt);
  }
  return corpus;
}

Outcome criterion_overfit() {
  auto corpus = make_deletion_corpus(64, 7, '[', ']');
  std::vector<std::string> sentences;
  for (const auto& [src, tgt] : corpus.pairs) {
    sentences.push_back(src);
    sentences.push_back(tgt);
  }
  auto tok = WordPieceModel::train(sentences, 400);

  ModelConfig model = ModelConfig::desk(static_cast<int>(tok.size()));
  model.dropout = 0.0;

  std::vector<TrainItem> items;
  for (const auto& [src, tgt] : corpus.pairs)
    items.push_back(make_train_item(tok, src, tgt, model.max_len));

  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 8;
  tc.epochs = 300;
  tc.seed = 11;
  tc.patience = 0;

  // train in bursts so the run can stop as soon as the target is reached
  double train_ce = std::numeric_limits<double>::infinity();
  int epochs_used = 0;
  TrainResult result;
  Checkpoint state;
  bool have_state = false;
  while (epochs_used < 300) {
    TrainConfig burst = tc;
    burst.epochs = std::min(epochs_used + 25, 300);
    result = train(model, burst, items, items, "", have_state ? &state : nullptr,
                   /*resume_epochs=*/true);
    state = result.last;
    have_state = true;
    epochs_used = static_cast<int>(state.epoch);
    train_ce = result.curve.back().train_loss;
    if (train_ce < 0.08) break;
  }

  int exact = 0;
  for (const auto& [src, tgt] : corpus.pairs) {
    auto src_ids = tok.encode(src, true);
    auto hyp = greedy_decode_ids(model, state.parameters, src_ids, model.max_len,
                                 tok.sos_id(), tok.eos_id());
    if (tok.decode(hyp.ids) == tgt) ++exact;
  }

  std::ostringstream detail;
  detail << "train CE " << train_ce << " after " << epochs_used << " epochs, "
         << exact << "/64 exact greedy reproductions";
  return {train_ce < 0.1 && exact >= 58, detail.str()};  // 58/64 > 90%
}

// --------------------------------------------------------------------------
// 4. transfer-learning analogue

Outcome criterion_transfer() {
  // style A deletes parenthesized spans, style B bracketed ones
  ModelConfig model;
  model.heads = 2;
  model.encoder_layers = 1;
  model.decoder_layers = 1;
  model.d_model = 24;
  model.d_ff = 48;
  model.dropout = 0.1;
  model.max_len = 24;

  auto style_a = make_deletion_corpus(2000, 31, '(', ')');
  auto style_b_train = make_deletion_corpus(64, 32, '[', ']');
  auto style_b_valid = make_deletion_corpus(24, 33, '[', ']');

  std::vector<std::string> sentences;
  for (const auto* corpus : {&style_a, &style_b_train, &style_b_valid})
    for (const auto& [src, tgt] : corpus->pairs) {
      sentences.push_back(src);
      sentences.push_back(tgt);
    }
  auto tok = WordPieceModel::train(sentences, 400);
  model.vocab_size = static_cast<int>(tok.size());

  auto items_of = [&](const SyntheticCorpus& corpus) {
    std::vector<TrainItem> items;
    for (const auto& [src, tgt] : corpus.pairs)
      items.push_back(make_train_item(tok, src, tgt, model.max_len));
    return items;
  };
  const auto wiki_train = items_of(style_a);
  const auto sw_train = items_of(style_b_train);
  const auto sw_valid = items_of(style_b_valid);

  int seeds_ok = 0;
  std::ostringstream detail;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig pre;
    pre.learning_rate = 1e-3;
    pre.batch_size = 8;
    pre.epochs = 30;
    pre.seed = seed;
    auto pretrained = train(model, pre, wiki_train, sw_valid, "");

    TrainConfig fine;
    fine.learning_rate = 1e-3;
    fine.batch_size = 8;
    fine.epochs = 10;
    fine.seed = seed + 100;
    auto transfer = train(model, fine, sw_train, sw_valid, "", &pretrained.last,
                          /*resume_epochs=*/false);
    auto scratch = train(model, fine, sw_train, sw_valid, "");

    const bool lower_start =
        transfer.initial_valid_loss < scratch.initial_valid_loss;
    const bool no_worse_at_10 =
        transfer.curve.back().valid_loss <= scratch.curve.back().valid_loss;
    if (lower_start && no_worse_at_10) ++seeds_ok;
    detail << "seed " << seed << ": start " << transfer.initial_valid_loss << " vs "
           << scratch.initial_valid_loss << ", epoch10 "
           << transfer.curve.back().valid_loss << " vs "
           << scratch.curve.back().valid_loss << "; ";
  }
  detail << seeds_ok << "/5 seeds satisfied both conditions";
  return {seeds_ok >= 4, detail.str()};
}

// --------------------------------------------------------------------------
// 5. pipeline filter invariants under fuzz

Outcome criterion_filter_invariants() {
  Rng rng(71);
  const std::vector<std::string> pool = {
      "alpha", "beta", "gamma", "delta", "omega", "sigma", "kappa", "install",
      "parser", "config", "file",  "build", "test",  "binary"};
  auto sentence = [&](size_t len) {
    std::string s;
    for (size_t i = 0; i < len; ++i)
      s += (s.empty() ? "" : " ") + pool[rng.below(pool.size())];
    return s;
  };

  size_t candidates_total = 0, survivors_total = 0;
  bool all_ok = true;
  while (candidates_total < 10000) {
    AlignmentProblem problem;
    const size_t ns = 2 + rng.below(10), nr = 2 + rng.below(10);
    for (size_t i = 0; i < ns; ++i)
      problem.simple.push_back(
          {sentence(2 + rng.below(44)), static_cast<int>(i)});  // some exceed 40 words
    for (size_t i = 0; i < nr; ++i)
      problem.regular.push_back({sentence(2 + rng.below(44)), static_cast<int>(i)});

    std::vector<std::string> corpus;
    for (const auto& s : problem.simple) corpus.push_back(s.text);
    for (const auto& s : problem.regular) corpus.push_back(s.text);
    auto model = fit_tfidf(corpus);
    TfidfScorer scorer(&model, 0.5);

    auto cands = candidate_pairs(problem, 50);
    candidates_total += cands.size();
    auto scored = classify_candidates(problem, cands, scorer);
    if (scored.size() > cands.size()) all_ok = false;
    auto after_tfidf = filter_tfidf(problem, scored, model, 0.5);
    if (after_tfidf.size() > scored.size()) all_ok = false;
    auto after_bleu = filter_bleu(problem, after_tfidf, 0.1, 0.9);
    if (after_bleu.size() > after_tfidf.size()) all_ok = false;
    auto pairs = anomaly_filter(problem, after_bleu, "fuzz", 3, 40);
    if (pairs.size() > after_bleu.size()) all_ok = false;

    for (const auto& p : pairs) {
      ++survivors_total;
      if (!(p.tfidf_distance <= 0.5)) all_ok = false;
      if (!(p.bleu >= 0.1 && p.bleu <= 0.9)) all_ok = false;
      if (!(p.regular.size() >= 1 && p.regular.size() <= 3)) all_ok = false;
      if (alphabetic_word_count(p.simple) > 40) all_ok = false;
      for (const auto& r : p.regular)
        if (alphabetic_word_count(r) > 40) all_ok = false;
    }
  }
  std::ostringstream detail;
  detail << candidates_total << " candidates fuzzed, " << survivors_total
         << " survivors, all bounds held: " << (all_ok ? "yes" : "NO");
  return {all_ok, detail.str()};
}

// --------------------------------------------------------------------------
// 6. threshold sweep monotonicity + bundled fixture table

Outcome criterion_sweep() {
  auto labeled =
      load_labeled_pairs(std::string(RSIMP_SOURCE_DIR) + "/data/labeled_60.tsv");
  if (labeled.size() != 60) return {false, "fixture is not 60 pairs"};

  std::vector<std::string> corpus;
  for (const auto& p : labeled) {
    corpus.push_back(p.simple);
    corpus.push_back(p.regular);
  }
  auto model = fit_tfidf(corpus);
  std::vector<double> grid;
  for (double t = 0.1; t <= 0.901; t += 0.05) grid.push_back(t);
  auto sweep = threshold_sweep(labeled, model, grid);

  bool monotone = true;
  for (size_t i = 1; i < sweep.size(); ++i)
    if (sweep[i].recall < sweep[i - 1].recall) monotone = false;

  // random labeled sets keep recall monotone too
  Rng rng(83);
  const std::vector<std::string> pool = {"a", "b", "c", "d", "e", "f", "g", "h"};
  for (int it = 0; it < 25 && monotone; ++it) {
    std::vector<LabeledPair> random_set;
    for (int p = 0; p < 30; ++p) {
      std::string s, r;
      for (int w = 0; w < 5; ++w) {
        s += (s.empty() ? "" : " ") + pool[rng.below(pool.size())];
        r += (r.empty() ? "" : " ") + pool[rng.below(pool.size())];
      }
      random_set.push_back({s, r, rng.bernoulli(0.5)});
    }
    size_t positives = 0;
    for (const auto& p : random_set)
      if (p.gold_aligned) ++positives;
    if (positives == 0 || positives == random_set.size()) continue;
    std::vector<std::string> rc;
    for (const auto& p : random_set) {
      rc.push_back(p.simple);
      rc.push_back(p.regular);
    }
    auto rm = fit_tfidf(rc);
    auto rs = threshold_sweep(random_set, rm, grid);
    for (size_t i = 1; i < rs.size(); ++i)
      if (rs[i].recall < rs[i - 1].recall) monotone = false;
  }

  std::printf("    threshold precision recall f1 accuracy\n");
  for (const auto& pt : sweep)
    std::printf("    %9.2f %9.3f %6.3f %5.3f %8.3f\n", pt.threshold, pt.precision,
                pt.recall, pt.f1, pt.accuracy);

  std::ostringstream detail;
  detail << sweep.size() << " grid points on the 60-pair fixture, recall monotone: "
         << (monotone ? "yes" : "NO");
  return {monotone && sweep.size() == grid.size(), detail.str()};
}

// --------------------------------------------------------------------------
// 7. tokenizer contracts

Outcome criterion_tokenizer() {
  std::vector<std::string> corpus;
  for (int repo = 0; repo < 4; ++repo)
    for (int version = 0; version < 4; ++version) {
      auto doc = mask(clean(gitfixture::readme_text("proj" + std::to_string(repo),
                                                    version)));
      for (const auto& s : split_sentences(doc)) corpus.push_back(s.text);
    }
  auto a = WordPieceModel::train(corpus, 700);
  auto b = WordPieceModel::train(corpus, 700);
  const bool deterministic = a.tokens() == b.tokens();

  bool specials_atomic = true;
  for (const auto& s : a.specials())
    if (a.encode(s, false).size() != 1) specials_atomic = false;

  // fuzz in-vocabulary sentences from alphabetic corpus words
  std::set<std::string> word_set;
  for (const auto& s : corpus)
    for (const auto& w : split_whitespace(s)) {
      bool alpha = !w.empty();
      for (char c : w)
        if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'))) alpha = false;
      if (alpha) word_set.insert(w);
    }
  std::vector<std::string> words(word_set.begin(), word_set.end());
  words.push_back("<url>");
  words.push_back("<code_small>");

  Rng rng(91);
  size_t round_trips = 0;
  bool ids_in_range = true, round_trip_ok = true;
  for (int it = 0; it < 1000; ++it) {
    std::string sentence;
    const size_t len = 1 + rng.below(14);
    for (size_t i = 0; i < len; ++i)
      sentence += (sentence.empty() ? "" : " ") + words[rng.below(words.size())];
    const auto ids = a.encode(sentence, true);
    for (int id : ids)
      if (id < 0 || static_cast<size_t>(id) >= a.size()) ids_in_range = false;
    if (a.decode(ids) != sentence) round_trip_ok = false;
    ++round_trips;
  }

  std::ostringstream detail;
  detail << round_trips << " round trips ok: " << (round_trip_ok ? "yes" : "NO")
         << ", specials atomic: " << (specials_atomic ? "yes" : "NO")
         << ", deterministic: " << (deterministic ? "yes" : "NO");
  return {deterministic && specials_atomic && round_trip_ok && ids_in_range,
          detail.str()};
}

// --------------------------------------------------------------------------
// 8. checkpoint resume equivalence

Outcome criterion_resume() {
  const auto dir = work_dir("resume");
  ModelConfig model;
  model.heads = 2;
  model.encoder_layers = 1;
  model.decoder_layers = 1;
  model.d_model = 32;
  model.d_ff = 64;
  model.dropout = 0.1;
  model.vocab_size = 40;
  model.max_len = 16;

  auto corpus = make_deletion_corpus(24, 17, '[', ']');
  std::vector<std::string> sentences;
  for (const auto& [s, t] : corpus.pairs) {
    sentences.push_back(s);
    sentences.push_back(t);
  }
  auto tok = WordPieceModel::train(sentences, 120);
  model.vocab_size = static_cast<int>(tok.size());
  std::vector<TrainItem> items;
  for (const auto& [s, t] : corpus.pairs)
    items.push_back(make_train_item(tok, s, t, model.max_len));

  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 8;
  tc.epochs = 6;
  tc.seed = 21;

  auto straight = train(model, tc, items, items, "");

  TrainConfig half = tc;
  half.epochs = 3;
  auto part = train(model, half, items, items, "");
  const std::string ckpt_path = (dir / "half.ckpt").string();
  save_checkpoint(part.last, ckpt_path);
  auto reloaded = load_checkpoint(ckpt_path);
  auto resumed = train(model, tc, items, items, "", &reloaded, /*resume_epochs=*/true);

  auto equal = [](const ParamMap<float>& x, const ParamMap<float>& y) {
    for (const auto& [name, t] : x)
      for (int64_t i = 0; i < t.numel(); ++i)
        if (t[i] != y.at(name)[i]) return false;
    return true;
  };
  const bool params_ok = equal(straight.last.parameters, resumed.last.parameters);
  const bool moments_ok = equal(straight.last.adam_m, resumed.last.adam_m) &&
                          equal(straight.last.adam_v, resumed.last.adam_v);
  const bool state_ok = straight.last.step == resumed.last.step &&
                        straight.last.rng_state == resumed.last.rng_state;
  fs::remove_all(dir);

  std::ostringstream detail;
  detail << "parameters " << (params_ok ? "identical" : "DIFFER") << ", moments "
         << (moments_ok ? "identical" : "DIFFER") << ", step/rng "
         << (state_ok ? "identical" : "DIFFER");
  return {params_ok && moments_ok && state_ok, detail.str()};
}

// --------------------------------------------------------------------------
// 9. beam search contracts

Outcome criterion_beam() {
  ModelConfig model;
  model.heads = 2;
  model.encoder_layers = 1;
  model.decoder_layers = 1;
  model.d_model = 16;
  model.d_ff = 32;
  model.dropout = 0.0;
  model.vocab_size = 30;
  model.max_len = 12;

  Rng rng(121);
  int greedy_matches = 0, score_ok = 0;
  for (int it = 0; it < 100; ++it) {
    auto params = init_params<float>(model, rng.next_u64());
    std::vector<int> src = {0};
    const size_t len = 2 + rng.below(6);
    for (size_t i = 0; i < len; ++i)
      src.push_back(3 + static_cast<int>(rng.below(27)));
    src.push_back(1);

    auto greedy = greedy_decode_ids(model, params, src, model.max_len, 0, 1);
    auto k1 = beam_search_ids(model, params, src, 1, model.max_len, 0, 1);
    auto k5 = beam_search_ids(model, params, src, 5, model.max_len, 0, 1);

    if (k1.ids == greedy.ids) ++greedy_matches;
    if (k5.normalized() >= k1.normalized() - 1e-12) ++score_ok;
  }
  std::ostringstream detail;
  detail << "k=1 == greedy on " << greedy_matches
         << "/100 inputs, k=5 score >= k=1 score on " << score_ok << "/100";
  return {greedy_matches == 100 && score_ok == 100, detail.str()};
}

// --------------------------------------------------------------------------
// 10. end-to-end smoke on the 20-repository fixture

Outcome criterion_end_to_end() {
  const auto root = work_dir("run");
  const auto repos = root / "repos";
  gitfixture::build_corpus(repos);

  PipelineConfig config;
  config.io.git_dir = repos.string();
  config.io.out_dir = (root / "out1").string();
  config.ingest.min_commits = 3;
  config.tokenizer.vocab_size = 600;
  config.model = ModelConfig::desk(0);
  config.train.learning_rate = 3e-4;
  config.train.epochs = 24;
  config.train.snapshot_every = 4;
  config.train.beam = 5;
  config.split.train = 100;
  config.split.valid = 30;

  if (run_pipeline(config) != 0) return {false, "pipeline returned nonzero"};
  const fs::path out1 = root / "out1";

  // harvest honors the first/last selection
  auto pairs = load_pairs((out1 / "pairs.jsonl").string());
  if (static_cast<int>(pairs.size()) != gitfixture::expected_pair_count())
    return {false, "harvest produced " + std::to_string(pairs.size()) + " pairs, want " +
                       std::to_string(gitfixture::expected_pair_count())};
  std::map<std::string, int> per_repo;
  for (const auto& p : pairs) per_repo[p.repo_id]++;
  for (const auto& [repo, count] : per_repo)
    if (count > 2) return {false, repo + " yielded more than two pairs"};
  // proj0 has three qualifying commits: versions 0->1 and 2->3 survive,
  // the middle rewrite does not
  std::set<std::string> proj0_docs;
  for (const auto& p : pairs)
    if (p.repo_id == "proj0") {
      proj0_docs.insert(p.difficult_doc);
      proj0_docs.insert(p.simple_doc);
    }
  if (proj0_docs != std::set<std::string>{gitfixture::readme_text("proj0", 0),
                                          gitfixture::readme_text("proj0", 1),
                                          gitfixture::readme_text("proj0", 2),
                                          gitfixture::readme_text("proj0", 3)})
    return {false, "proj0 pairs are not the first and last qualifying commits"};

  // zero unmasked URLs in the masked sentences
  for (const auto& doc : load_masked((out1 / "masked.jsonl").string()))
    for (const auto& s : doc.sentences)
      if (s.find("http://") != std::string::npos ||
          s.find("https://") != std::string::npos)
        return {false, "unmasked URL in masked.jsonl: " + s};

  auto aligned = load_aligned((out1 / "aligned.jsonl").string());
  if (aligned.empty()) return {false, "aligned corpus is empty"};

  if (!fs::exists(out1 / "train" / "ckpt_best.ckpt"))
    return {false, "trained model missing"};

  // bleu.csv snapshot rows at epochs 4..24
  auto bleu_lines = read_lines((out1 / "bleu.csv").string());
  std::set<std::string> bleu_epochs;
  for (size_t i = 1; i < bleu_lines.size(); ++i) {
    const size_t c1 = bleu_lines[i].find(',');
    const size_t c2 = bleu_lines[i].find(',', c1 + 1);
    if (c1 != std::string::npos && c2 != std::string::npos)
      bleu_epochs.insert(bleu_lines[i].substr(c1 + 1, c2 - c1 - 1));
  }
  for (const char* epoch : {"4", "8", "12", "16", "20", "24"})
    if (!bleu_epochs.count(epoch))
      return {false, std::string("bleu.csv misses snapshot epoch ") + epoch};

  // rerun: byte-identical artifacts
  config.io.out_dir = (root / "out2").string();
  if (run_pipeline(config) != 0) return {false, "second run returned nonzero"};
  std::map<std::string, std::string> h1, h2;
  for (const auto& [idx, out] :
       std::map<int, fs::path>{{1, out1}, {2, root / "out2"}}) {
    for (const auto& entry : fs::recursive_directory_iterator(out)) {
      if (!entry.is_regular_file()) continue;
      (idx == 1 ? h1 : h2)[fs::relative(entry.path(), out).string()] =
          fnv1a64_hex(read_file(entry.path().string()));
    }
  }
  if (h1 != h2) return {false, "rerun artifacts are not byte-identical"};

  fs::remove_all(root);
  std::ostringstream detail;
  detail << pairs.size() << " pairs, " << aligned.size()
         << " aligned, snapshots 4..24 scored, rerun byte-identical";
  return {true, detail.str()};
}

// --------------------------------------------------------------------------
// 11. annotation analytics

Outcome criterion_annotation() {
  // perfect agreement
  RatingTable perfect;
  perfect.rows = {{1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}};
  const double alpha_perfect = krippendorff_alpha(perfect);
  if (std::fabs(alpha_perfect - 1.0) > 1e-12)
    return {false, "perfect-agreement alpha is " + std::to_string(alpha_perfect)};

  // 50 random small tables against the direct-formula oracle
  Rng rng(131);
  int tables = 0;
  double worst = 0;
  while (tables < 50) {
    RatingTable t;
    const size_t annotators = 2 + rng.below(4), items = 2 + rng.below(6);
    t.rows.assign(annotators, std::vector<std::optional<int>>(items));
    for (auto& row : t.rows)
      for (auto& cell : row)
        if (rng.uniform() < 0.85) cell = 1 + static_cast<int>(rng.below(5));
    size_t pairable = 0;
    for (size_t c = 0; c < items; ++c) {
      size_t cnt = 0;
      for (auto& row : t.rows)
        if (row[c].has_value()) ++cnt;
      if (cnt >= 2) ++pairable;
    }
    if (pairable < 2) continue;
    ++tables;
    for (auto metric : {AlphaMetric::Interval, AlphaMetric::Ordinal})
      worst = std::max(worst, std::fabs(krippendorff_alpha(t, metric) -
                                        oracle::krippendorff_direct(t, metric)));
  }
  if (worst > 1e-10)
    return {false, "alpha disagrees with the oracle by " + std::to_string(worst)};

  // Wilcoxon vs exhaustive enumeration, n <= 12
  double worst_p = 0;
  int cases = 0;
  while (cases < 40) {
    const size_t n = 6 + rng.below(7);
    std::vector<double> x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.below(8));
      y[i] = static_cast<double>(rng.below(8));
    }
    size_t nonzero = 0;
    for (size_t i = 0; i < n; ++i)
      if (x[i] != y[i]) ++nonzero;
    if (nonzero < 6) continue;
    ++cases;
    auto got = wilcoxon_signed_rank(x, y);
    auto expect = oracle::wilcoxon_enumerate(x, y);
    worst_p = std::max(worst_p, std::fabs(got.p_value - expect.p_value));
  }
  if (worst_p > 1e-10)
    return {false, "wilcoxon disagrees with enumeration by " + std::to_string(worst_p)};

  // gate filtering removes exactly the planted offenders
  std::vector<std::string> originals;
  for (int i = 0; i < 40; ++i)
    originals.push_back("original " + std::to_string(i));
  std::map<std::string, std::vector<std::string>> outputs;
  for (int i = 0; i < 40; ++i) {
    outputs["m1"].push_back("first " + std::to_string(i));
    outputs["m2"].push_back("second " + std::to_string(i));
  }
  auto batch = export_annotation_batch(originals, outputs, 19);
  const int gate_id = batch.items[static_cast<size_t>(batch.gate_position)].item_id;
  std::vector<Rating> ratings;
  const std::vector<std::string> offenders = {"lazy1", "lazy2"};
  for (const std::string rater : {"ok1", "ok2", "lazy1", "ok3", "lazy2"}) {
    const bool offender =
        std::find(offenders.begin(), offenders.end(), rater) != offenders.end();
    for (const auto& item : batch.items)
      for (size_t v = 0; v < item.variants.size(); ++v) {
        Rating r{rater, item.item_id, static_cast<int>(v), 4, 4, 3};
        if (item.item_id == gate_id) r.semantics = offender ? 4 : 2;
        ratings.push_back(r);
      }
  }
  auto report = analyze_annotations(batch, ratings);
  std::vector<std::string> excluded = report.excluded_raters;
  std::sort(excluded.begin(), excluded.end());
  if (excluded != offenders)
    return {false, "gate filtering removed the wrong raters"};

  return {true, "alpha, wilcoxon and gate filtering all verified"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, Criterion>> criteria = {
      {"BLEU oracle equivalence", criterion_bleu_oracle},
      {"gradient check vs finite differences", criterion_gradient_check},
      {"overfit on the bracket-deletion corpus", criterion_overfit},
      {"transfer learning lowers the starting loss", criterion_transfer},
      {"alignment filter invariants under fuzz", criterion_filter_invariants},
      {"threshold sweep monotonicity and fixture table", criterion_sweep},
      {"tokenizer contracts", criterion_tokenizer},
      {"checkpoint resume equivalence", criterion_resume},
      {"beam search contracts", criterion_beam},
      {"end-to-end run on the 20-repository fixture", criterion_end_to_end},
      {"annotation analytics", criterion_annotation},
  };

  int only = 0;
  for (int i = 1; i + 1 < argc + 1; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
      only = std::atoi(argv[i + 1]);
  }

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (only != 0 && number != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] criterion %d: %s (%.1fs) - %s\n",
                outcome.pass ? "PASS" : "FAIL", number, criteria[i].first.c_str(),
                seconds, outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
