#include "rsimp/align.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rsimp/io.hpp"
#include "rsimp/rng.hpp"

using nlohmann::json;

namespace rsimp {

double TfidfScorer::score(const std::string& simple, const std::string& regular) const {
  const double d =
      cosine_distance(vectorize(*model_, simple), vectorize(*model_, regular));
  return 1.0 - d;
}

FileScorer FileScorer::load(const std::string& path, double cutoff) {
  FileScorer scorer;
  scorer.cutoff_ = cutoff;
  const auto lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::istringstream ss(lines[i]);
    std::string simple_hash, regular_hash, score;
    if (!std::getline(ss, simple_hash, '\t') ||
        !std::getline(ss, regular_hash, '\t') || !std::getline(ss, score, '\t'))
      throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                               ": expected 3 tab-separated columns");
    scorer.scores_[simple_hash + ":" + regular_hash] = std::stod(score);
  }
  return scorer;
}

double FileScorer::score(const std::string& simple, const std::string& regular) const {
  const std::string key = fnv1a64_hex(simple) + ":" + fnv1a64_hex(regular);
  auto it = scores_.find(key);
  if (it == scores_.end())
    throw std::runtime_error("score file has no entry for pair " + key);
  return it->second;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
    default: return "unassigned";
  }
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "valid") return Split::Valid;
  if (name == "test") return Split::Test;
  if (name == "unassigned") return Split::Unassigned;
  throw std::runtime_error("unknown split name: " + name);
}

std::vector<std::pair<int, int>> candidate_pairs(const AlignmentProblem& problem,
                                                 int window) {
  std::vector<std::pair<int, int>> cands;
  for (size_t i = 0; i < problem.simple.size(); ++i) {
    for (size_t j = 0; j < problem.regular.size(); ++j) {
      const int gap =
          problem.simple[i].doc_position - problem.regular[j].doc_position;
      if (std::abs(gap) <= window)
        cands.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return cands;
}

std::vector<ScoredCandidate> classify_candidates(
    const AlignmentProblem& problem, const std::vector<std::pair<int, int>>& cands,
    const SimilarityScorer& scorer) {
  std::vector<ScoredCandidate> out;
  for (const auto& [si, ri] : cands) {
    const std::string& s = problem.simple[static_cast<size_t>(si)].text;
    const std::string& r = problem.regular[static_cast<size_t>(ri)].text;
    if (!scorer.aligned(s, r)) continue;
    ScoredCandidate c;
    c.simple_idx = si;
    c.regular_idx = ri;
    c.score = scorer.score(s, r);
    out.push_back(c);
  }
  return out;
}

std::vector<ScoredCandidate> filter_tfidf(const AlignmentProblem& problem,
                                          const std::vector<ScoredCandidate>& cands,
                                          const TfidfModel& model, double threshold) {
  std::vector<ScoredCandidate> out;
  for (auto c : cands) {
    const auto u = vectorize(model, problem.simple[static_cast<size_t>(c.simple_idx)].text);
    const auto v = vectorize(model, problem.regular[static_cast<size_t>(c.regular_idx)].text);
    c.tfidf_distance = cosine_distance(u, v);
    if (c.tfidf_distance <= threshold) out.push_back(c);
  }
  return out;
}

std::vector<ScoredCandidate> filter_bleu(const AlignmentProblem& problem,
                                         const std::vector<ScoredCandidate>& cands,
                                         double lo, double hi) {
  std::vector<ScoredCandidate> out;
  for (auto c : cands) {
    const auto s = split_whitespace(problem.simple[static_cast<size_t>(c.simple_idx)].text);
    const auto r = split_whitespace(problem.regular[static_cast<size_t>(c.regular_idx)].text);
    c.bleu = sentence_bleu(s, r);
    if (c.bleu >= lo && c.bleu <= hi) out.push_back(c);
  }
  return out;
}

std::vector<AlignedPair> anomaly_filter(const AlignmentProblem& problem,
                                        const std::vector<ScoredCandidate>& cands,
                                        const std::string& pair_id_prefix,
                                        int max_multiplicity, int max_words) {
  // group by identical simple-sentence text
  std::map<std::string, std::vector<ScoredCandidate>> groups;
  for (const auto& c : cands)
    groups[problem.simple[static_cast<size_t>(c.simple_idx)].text].push_back(c);
  if (groups.empty()) return {};

  double mean = 0;
  for (const auto& [_, members] : groups) mean += static_cast<double>(members.size());
  mean /= static_cast<double>(groups.size());
  double var = 0;
  for (const auto& [_, members] : groups) {
    const double d = static_cast<double>(members.size()) - mean;
    var += d * d;
  }
  var /= static_cast<double>(groups.size());
  const double cap3sigma = mean + 3.0 * std::sqrt(var);

  // deterministic order: by first simple position in the group
  std::vector<const std::pair<const std::string, std::vector<ScoredCandidate>>*> ordered;
  for (const auto& g : groups) ordered.push_back(&g);
  std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
    return a->second.front().simple_idx < b->second.front().simple_idx;
  });

  std::vector<AlignedPair> out;
  for (const auto* entry : ordered) {
    const auto& simple_text = entry->first;
    auto members = entry->second;
    const auto count = static_cast<double>(members.size());
    if (count > cap3sigma) continue;
    if (members.size() > static_cast<size_t>(max_multiplicity)) continue;
    if (alphabetic_word_count(simple_text) > max_words) continue;
    members.erase(std::remove_if(members.begin(), members.end(),
                                 [&](const ScoredCandidate& c) {
                                   const auto& r = problem.regular[static_cast<size_t>(
                                       c.regular_idx)];
                                   return alphabetic_word_count(r.text) > max_words;
                                 }),
                  members.end());
    if (members.empty()) continue;

    std::sort(members.begin(), members.end(),
              [](const ScoredCandidate& a, const ScoredCandidate& b) {
                return a.regular_idx < b.regular_idx;
              });
    AlignedPair pair;
    pair.pair_id =
        pair_id_prefix + ":s" + std::to_string(members.front().simple_idx);
    pair.simple = simple_text;
    pair.tfidf_distance = 0;
    pair.bleu = 1;
    for (const auto& m : members) {
      pair.regular.push_back(problem.regular[static_cast<size_t>(m.regular_idx)].text);
      pair.tfidf_distance = std::max(pair.tfidf_distance, m.tfidf_distance);
      pair.bleu = std::min(pair.bleu, m.bleu);
    }
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<AlignedPair> align_document(const AlignmentProblem& problem,
                                        const SimilarityScorer& scorer,
                                        const TfidfModel& model,
                                        const AlignConfig& config,
                                        const std::string& pair_id_prefix) {
  auto cands = candidate_pairs(problem, config.window);
  auto scored = classify_candidates(problem, cands, scorer);
  scored = filter_tfidf(problem, scored, model, config.tfidf_threshold);
  scored = filter_bleu(problem, scored, config.bleu_lo, config.bleu_hi);
  return anomaly_filter(problem, scored, pair_id_prefix, config.max_multiplicity,
                        config.max_words);
}

SweepResult threshold_sweep(const std::vector<LabeledPair>& labeled,
                            const TfidfModel& model, std::vector<double> grid) {
  if (labeled.empty()) throw std::invalid_argument("threshold_sweep: empty set");
  size_t gold_pos = 0;
  for (const auto& p : labeled)
    if (p.gold_aligned) ++gold_pos;
  if (gold_pos == 0 || gold_pos == labeled.size())
    throw std::invalid_argument("threshold_sweep: need both gold classes");

  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<double> distances;
  distances.reserve(labeled.size());
  for (const auto& p : labeled)
    distances.push_back(
        cosine_distance(vectorize(model, p.simple), vectorize(model, p.regular)));

  SweepResult result;
  for (double t : grid) {
    size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (size_t i = 0; i < labeled.size(); ++i) {
      const bool predicted = distances[i] <= t;
      if (predicted && labeled[i].gold_aligned) ++tp;
      else if (predicted) ++fp;
      else if (labeled[i].gold_aligned) ++fn;
      else ++tn;
    }
    SweepPoint point;
    point.threshold = t;
    point.precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
    point.recall = double(tp) / double(tp + fn);
    point.f1 = point.precision + point.recall > 0
                   ? 2 * point.precision * point.recall / (point.precision + point.recall)
                   : 0.0;
    point.accuracy = double(tp + tn) / double(labeled.size());
    result.push_back(point);
  }
  return result;
}

std::vector<LabeledPair> load_labeled_pairs(const std::string& path) {
  std::vector<LabeledPair> out;
  const auto lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i][0] == '#') continue;
    std::istringstream ss(lines[i]);
    LabeledPair p;
    std::string gold;
    if (!std::getline(ss, p.simple, '\t') || !std::getline(ss, p.regular, '\t') ||
        !std::getline(ss, gold, '\t'))
      throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                               ": expected 3 tab-separated columns");
    p.gold_aligned = gold == "1" || gold == "true";
    out.push_back(std::move(p));
  }
  return out;
}

void split_dataset(std::vector<AlignedPair>& pairs, size_t train, size_t valid,
                   uint64_t seed) {
  if (train + valid > pairs.size())
    throw std::invalid_argument("split_dataset: train + valid exceeds pair count");
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  for (size_t k = 0; k < order.size(); ++k) {
    Split s = k < train ? Split::Train : (k < train + valid ? Split::Valid : Split::Test);
    pairs[order[k]].split = s;
  }
}

void store_aligned(const std::vector<AlignedPair>& pairs, const std::string& path) {
  std::ostringstream out;
  for (const auto& p : pairs) {
    json j;
    j["pair_id"] = p.pair_id;
    j["regular"] = p.regular;
    j["simple"] = p.simple;
    j["tfidf_distance"] = p.tfidf_distance;
    j["bleu"] = p.bleu;
    j["split"] = split_name(p.split);
    out << j.dump() << "\n";
  }
  write_file(path, out.str());
}

std::vector<AlignedPair> load_aligned(const std::string& path) {
  std::vector<AlignedPair> pairs;
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
    auto require = [&](const char* field) -> const json& {
      if (!j.contains(field))
        throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                                 ": missing required field \"" + field + "\"");
      return j.at(field);
    };
    AlignedPair p;
    p.pair_id = require("pair_id").get<std::string>();
    for (const auto& r : require("regular")) p.regular.push_back(r.get<std::string>());
    p.simple = require("simple").get<std::string>();
    p.tfidf_distance = require("tfidf_distance").get<double>();
    p.bleu = require("bleu").get<double>();
    p.split = split_from_name(require("split").get<std::string>());
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace rsimp
