#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rsimp {

using TokenList = std::vector<std::string>;

/// Whitespace tokenization (any run of ' ', '\t', '\n', '\r').
TokenList split_whitespace(const std::string& text);

/// Lowercased whitespace tokens, as used by the TF-IDF vocabulary.
TokenList split_whitespace_lower(const std::string& text);

std::string to_lower(const std::string& s);

// ---------------------------------------------------------------------------
// TF-IDF

struct TfidfModel {
  std::unordered_map<std::string, int> vocabulary;  // word -> index
  std::vector<double> idf;
  int document_count = 0;
};

/// One sentence as a sparse L2-normalized tf-idf vector.
/// Entries are sorted by index.
struct SparseVector {
  std::vector<std::pair<int, double>> entries;
};

/// Fit idf weights on a sentence corpus: idf(w) = ln((1+N)/(1+df(w))) + 1.
/// Throws std::invalid_argument on an empty corpus.
TfidfModel fit_tfidf(const std::vector<std::string>& corpus);

/// tf * idf, L2-normalized; out-of-vocabulary words are ignored.
SparseVector vectorize(const TfidfModel& model, const std::string& sentence);

/// 1 - cos(u, v); returns 1 when either vector has zero norm.
double cosine_distance(const SparseVector& u, const SparseVector& v);

// ---------------------------------------------------------------------------
// BLEU

struct BleuWeights {
  std::array<double, 4> w{0.25, 0.25, 0.25, 0.25};
};

/// Sentence BLEU over n-gram orders 1..4 with brevity penalty
/// exp(min(0, 1 - |ref|/|cand|)). Candidates shorter than four tokens are
/// scored with equal weights over orders 1..|cand| so that short pairs do
/// not collapse to zero on the missing orders. Returns 0 when the candidate
/// or reference is empty, or when any weighted precision is 0.
double sentence_bleu(const TokenList& candidate, const TokenList& reference,
                     const BleuWeights& weights = {});

/// Corpus BLEU with pooled clipped counts and pooled brevity penalty,
/// strict 4-gram, in [0,1]. Throws std::invalid_argument on empty input.
double corpus_bleu(const std::vector<std::pair<TokenList, TokenList>>& pairs);

// ---------------------------------------------------------------------------
// Corpus statistics

struct CorpusStats {
  double avg_len_simple = 0;
  double avg_len_regular = 0;
  size_t vocab_simple = 0;
  size_t vocab_regular = 0;
  size_t exclusive_simple = 0;
  size_t exclusive_regular = 0;

  double avg_len_ratio() const;    // simple/regular, in percent
  double vocab_ratio() const;
  double exclusive_ratio() const;
};

/// Per-side average token length, vocabulary size and exclusive vocabulary
/// size (words appearing on one side only). Throws on an empty side.
CorpusStats corpus_stats(const std::vector<std::string>& simple,
                         const std::vector<std::string>& regular);

// ---------------------------------------------------------------------------
// Annotation statistics

/// Rows are annotators, columns are items; absent cells are unrated.
struct RatingTable {
  std::vector<std::vector<std::optional<int>>> rows;

  size_t annotators() const { return rows.size(); }
  size_t items() const { return rows.empty() ? 0 : rows[0].size(); }
};

enum class AlphaMetric { Interval, Ordinal };

/// Krippendorff's alpha via the coincidence matrix. Returns exactly 1 under
/// perfect agreement. Throws std::invalid_argument when fewer than two items
/// carry two or more ratings.
double krippendorff_alpha(const RatingTable& ratings,
                          AlphaMetric metric = AlphaMetric::Interval);

struct WilcoxonResult {
  double statistic = 0;  // min(W+, W-)
  double p_value = 1;
};

/// Two-sided Wilcoxon signed-rank test. Zero differences are dropped, ties
/// get average ranks; exact (sign-pattern) distribution for n <= 25, normal
/// approximation with tie and continuity corrections above. Throws
/// std::invalid_argument when fewer than six nonzero differences remain.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                    const std::vector<double>& y);

}  // namespace rsimp
