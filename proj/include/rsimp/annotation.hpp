#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rsimp {

/// One blinded text variant; several models collapse into one variant when
/// they emitted identical text.
struct AnnotationVariant {
  std::string text;
  std::vector<std::string> models;  // key-file only, sorted
};

struct AnnotationItem {
  int item_id = 0;  // positional id in the blinded file
  std::string original;
  std::vector<AnnotationVariant> variants;  // seeded-shuffled order
  bool is_gate = false;
};

struct AnnotationBatch {
  std::vector<AnnotationItem> items;  // gate item included
  int gate_position = 0;
  std::string gate_sentence;
};

/// The fixed attention-check sentence planted in every survey.
const std::string& quality_gate_sentence();

/// Build a survey batch: per-item deduplication of identical model outputs,
/// seeded shuffle of the variant order, and a quality-gate row inserted at a
/// seeded random position. Throws when a model's output count differs from
/// the original count.
AnnotationBatch export_annotation_batch(
    const std::vector<std::string>& originals,
    const std::map<std::string, std::vector<std::string>>& model_outputs,
    uint64_t seed);

/// blinded file: items with original + variant texts only (no model names);
/// key file: the full batch, inverting the blinding.
void write_annotation_files(const AnnotationBatch& batch,
                            const std::string& blinded_path,
                            const std::string& key_path);
AnnotationBatch load_annotation_key(const std::string& key_path);

/// One Likert row: rater, item, variant index within the item, three aspects
/// scored 1..5.
struct Rating {
  std::string rater;
  int item_id = 0;
  int variant = 0;
  int semantics = 0;
  int grammar = 0;
  int simplicity = 0;
};

/// CSV: rater,item_id,variant,semantics,grammar,simplicity (header required).
std::vector<Rating> load_ratings_csv(const std::string& path);
void store_ratings_csv(const std::vector<Rating>& ratings, const std::string& path);

struct ModelScores {
  std::string model;
  double mean_semantics = 0, mean_grammar = 0, mean_simplicity = 0;
  int n_semantics_ge4 = 0, n_grammar_ge4 = 0, n_good = 0;
  int rating_count = 0;
};

struct PairwiseTest {
  std::string aspect, model_a, model_b;
  double statistic = 0;
  double p_value = 1;
  int pairs_used = 0;
  bool valid = false;  // false when too few nonzero differences remained
};

struct AnnotationReport {
  std::vector<std::string> excluded_raters;  // failed or missing the gate
  std::vector<ModelScores> models;
  double alpha_semantics = 0, alpha_grammar = 0, alpha_simplicity = 0;
  std::vector<PairwiseTest> tests;
};

/// Gate-based rater filtering (a rater passes only with a gate semantic
/// score below three), per-model Likert aggregation, the "good" count
/// (semantics and grammar both at least four), Krippendorff's alpha per
/// aspect and pairwise Wilcoxon tests. Outputs identical to the original
/// sentence are excluded from the simplicity tests. Unknown item or variant
/// ids are an error.
AnnotationReport analyze_annotations(const AnnotationBatch& key,
                                     const std::vector<Rating>& ratings);

std::string annotation_report_json(const AnnotationReport& report);

}  // namespace rsimp
