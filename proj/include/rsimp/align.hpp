#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "rsimp/mask.hpp"
#include "rsimp/textmetrics.hpp"

namespace rsimp {

/// S: sentences of the simplified document, C: sentences of the regular
/// (pre-commit) document, both ordered by doc_position.
struct AlignmentProblem {
  std::vector<MaskedSentence> simple;
  std::vector<MaskedSentence> regular;
};

/// Pluggable sentence-pair scorer; deterministic for fixed inputs.
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  /// Higher means more aligned, in [0,1].
  virtual double score(const std::string& simple, const std::string& regular) const = 0;
  virtual bool aligned(const std::string& simple, const std::string& regular) const = 0;
};

/// Default scorer: TF-IDF cosine similarity with a cutoff.
class TfidfScorer : public SimilarityScorer {
 public:
  TfidfScorer(const TfidfModel* model, double cutoff = 0.5)
      : model_(model), cutoff_(cutoff) {}
  double score(const std::string& simple, const std::string& regular) const override;
  bool aligned(const std::string& simple, const std::string& regular) const override {
    return score(simple, regular) >= cutoff_;
  }

 private:
  const TfidfModel* model_;
  double cutoff_;
};

/// Scores read from a precomputed TSV (simple_hash, regular_hash, score),
/// hashes being fnv1a64_hex of the sentence text. A queried pair that is
/// missing from the file is an error naming both hashes.
class FileScorer : public SimilarityScorer {
 public:
  static FileScorer load(const std::string& path, double cutoff = 0.5);
  double score(const std::string& simple, const std::string& regular) const override;
  bool aligned(const std::string& simple, const std::string& regular) const override {
    return score(simple, regular) >= cutoff_;
  }

 private:
  std::unordered_map<std::string, double> scores_;
  double cutoff_ = 0.5;
};

/// One scored candidate (simple_idx, regular_idx) flowing through the filters.
struct ScoredCandidate {
  int simple_idx = 0;
  int regular_idx = 0;
  double score = 0;
  double tfidf_distance = 1;
  double bleu = 0;
};

enum class Split { Train, Valid, Test, Unassigned };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

/// One to three regular sentences aligned to one simple sentence.
struct AlignedPair {
  std::string pair_id;
  std::vector<std::string> regular;
  std::string simple;
  double tfidf_distance = 0;  // max over members
  double bleu = 0;            // min over members
  Split split = Split::Unassigned;

  bool operator==(const AlignedPair&) const = default;
};

/// All (simple_idx, regular_idx) whose positions differ by at most `window`.
std::vector<std::pair<int, int>> candidate_pairs(const AlignmentProblem& problem,
                                                 int window = 50);

/// Keep candidates the scorer classifies as aligned, attaching scores.
std::vector<ScoredCandidate> classify_candidates(
    const AlignmentProblem& problem, const std::vector<std::pair<int, int>>& cands,
    const SimilarityScorer& scorer);

/// Keep candidates with cosine distance <= threshold (inclusive), filling
/// tfidf_distance.
std::vector<ScoredCandidate> filter_tfidf(const AlignmentProblem& problem,
                                          const std::vector<ScoredCandidate>& cands,
                                          const TfidfModel& model,
                                          double threshold = 0.5);

/// Keep candidates with lo <= bleu <= hi (inclusive band), filling bleu.
/// The simple sentence is scored as the candidate against the regular one.
std::vector<ScoredCandidate> filter_bleu(const AlignmentProblem& problem,
                                         const std::vector<ScoredCandidate>& cands,
                                         double lo = 0.1, double hi = 0.9);

/// Group candidates by simple-sentence text, drop groups whose alignment
/// count exceeds mean + 3 sigma of the per-group counts, apply the fixed
/// multiplicity cap, then the alphabetic-word cap on every sentence.
std::vector<AlignedPair> anomaly_filter(const AlignmentProblem& problem,
                                        const std::vector<ScoredCandidate>& cands,
                                        const std::string& pair_id_prefix,
                                        int max_multiplicity = 3,
                                        int max_words = 40);

struct AlignConfig {
  int window = 50;
  double tfidf_threshold = 0.5;
  double bleu_lo = 0.1;
  double bleu_hi = 0.9;
  int max_multiplicity = 3;
  int max_words = 40;
};

/// candidate_pairs -> classify -> tfidf filter -> bleu filter -> anomaly filter.
std::vector<AlignedPair> align_document(const AlignmentProblem& problem,
                                        const SimilarityScorer& scorer,
                                        const TfidfModel& model,
                                        const AlignConfig& config,
                                        const std::string& pair_id_prefix);

struct LabeledPair {
  std::string simple;
  std::string regular;
  bool gold_aligned = false;
};

struct SweepPoint {
  double threshold = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double accuracy = 0;
};
using SweepResult = std::vector<SweepPoint>;

/// Precision/recall/F1/accuracy of "aligned iff distance <= t" over a labeled
/// set, for each threshold of the grid. Throws when only one gold class is
/// present.
SweepResult threshold_sweep(const std::vector<LabeledPair>& labeled,
                            const TfidfModel& model, std::vector<double> grid);

/// TSV with three columns: simple, regular, gold (1/0).
std::vector<LabeledPair> load_labeled_pairs(const std::string& path);

/// Deterministic seeded shuffle, then the first `train` pairs become the
/// train split, the next `valid` the validation split, the rest test.
/// Throws when train + valid exceeds the pair count.
void split_dataset(std::vector<AlignedPair>& pairs, size_t train, size_t valid,
                   uint64_t seed);

void store_aligned(const std::vector<AlignedPair>& pairs, const std::string& path);
std::vector<AlignedPair> load_aligned(const std::string& path);

}  // namespace rsimp
