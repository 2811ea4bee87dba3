#include "rsimp/textmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>

namespace rsimp {

TokenList split_whitespace(const std::string& text) {
  TokenList out;
  size_t i = 0;
  const size_t n = text.size();
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < n) {
    while (i < n && is_ws(text[i])) ++i;
    size_t start = i;
    while (i < n && !is_ws(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::string to_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

TokenList split_whitespace_lower(const std::string& text) {
  TokenList toks = split_whitespace(text);
  for (auto& t : toks) t = to_lower(t);
  return toks;
}

// ---------------------------------------------------------------------------
// TF-IDF

TfidfModel fit_tfidf(const std::vector<std::string>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("fit_tfidf: empty corpus");
  TfidfModel model;
  model.document_count = static_cast<int>(corpus.size());

  std::unordered_map<std::string, int> df;
  for (const auto& sentence : corpus) {
    std::set<std::string> seen;
    for (auto& tok : split_whitespace_lower(sentence)) seen.insert(std::move(tok));
    for (const auto& w : seen) ++df[w];
  }

  // stable word -> index assignment, sorted for reproducibility
  std::vector<std::string> words;
  words.reserve(df.size());
  for (const auto& [w, _] : df) words.push_back(w);
  std::sort(words.begin(), words.end());

  model.idf.resize(words.size());
  const double n = static_cast<double>(model.document_count);
  for (size_t i = 0; i < words.size(); ++i) {
    model.vocabulary.emplace(words[i], static_cast<int>(i));
    model.idf[i] = std::log((1.0 + n) / (1.0 + df[words[i]])) + 1.0;
  }
  return model;
}

SparseVector vectorize(const TfidfModel& model, const std::string& sentence) {
  std::map<int, double> weights;
  for (const auto& tok : split_whitespace_lower(sentence)) {
    auto it = model.vocabulary.find(tok);
    if (it == model.vocabulary.end()) continue;  // OOV ignored
    weights[it->second] += model.idf[it->second];
  }
  double norm_sq = 0;
  for (const auto& [_, w] : weights) norm_sq += w * w;
  const double norm = std::sqrt(norm_sq);

  SparseVector v;
  v.entries.reserve(weights.size());
  for (const auto& [idx, w] : weights)
    v.entries.emplace_back(idx, norm > 0 ? w / norm : 0.0);
  return v;
}

double cosine_distance(const SparseVector& u, const SparseVector& v) {
  double nu = 0, nv = 0, dot = 0;
  for (const auto& [_, w] : u.entries) nu += w * w;
  for (const auto& [_, w] : v.entries) nv += w * w;
  if (nu == 0 || nv == 0) return 1.0;

  size_t i = 0, j = 0;
  while (i < u.entries.size() && j < v.entries.size()) {
    if (u.entries[i].first < v.entries[j].first)
      ++i;
    else if (u.entries[i].first > v.entries[j].first)
      ++j;
    else
      dot += u.entries[i++].second * v.entries[j++].second;
  }
  double d = 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(d, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// BLEU

namespace {

// n-grams encoded as '\x1f'-joined strings
std::unordered_map<std::string, int> ngram_counts(const TokenList& toks, size_t n) {
  std::unordered_map<std::string, int> counts;
  if (toks.size() < n) return counts;
  for (size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key = toks[i];
    for (size_t k = 1; k < n; ++k) {
      key.push_back('\x1f');
      key += toks[i + k];
    }
    ++counts[key];
  }
  return counts;
}

// clipped matches and candidate n-gram total for one order
std::pair<int64_t, int64_t> clipped_matches(const TokenList& cand,
                                            const TokenList& ref, size_t n) {
  if (cand.size() < n) return {0, 0};
  auto cc = ngram_counts(cand, n);
  auto rc = ngram_counts(ref, n);
  int64_t matches = 0;
  for (const auto& [gram, count] : cc) {
    auto it = rc.find(gram);
    if (it != rc.end()) matches += std::min(count, it->second);
  }
  return {matches, static_cast<int64_t>(cand.size() - n + 1)};
}

}  // namespace

double sentence_bleu(const TokenList& candidate, const TokenList& reference,
                     const BleuWeights& weights) {
  if (candidate.empty() || reference.empty()) return 0.0;

  std::array<double, 4> w = weights.w;
  size_t max_order = 4;
  if (candidate.size() < 4) {
    // renormalize equal weights over the available orders
    max_order = candidate.size();
    w.fill(0.0);
    for (size_t n = 0; n < max_order; ++n) w[n] = 1.0 / max_order;
  }

  double log_sum = 0;
  for (size_t n = 1; n <= max_order; ++n) {
    if (w[n - 1] == 0.0) continue;
    auto [matches, total] = clipped_matches(candidate, reference, n);
    if (matches == 0 || total == 0) return 0.0;
    log_sum += w[n - 1] * std::log(static_cast<double>(matches) / total);
  }

  const double ratio =
      static_cast<double>(reference.size()) / static_cast<double>(candidate.size());
  const double bp = std::exp(std::min(0.0, 1.0 - ratio));
  return bp * std::exp(log_sum);
}

double corpus_bleu(const std::vector<std::pair<TokenList, TokenList>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("corpus_bleu: empty input");

  std::array<int64_t, 4> matches{}, totals{};
  int64_t cand_len = 0, ref_len = 0;
  for (const auto& [cand, ref] : pairs) {
    cand_len += static_cast<int64_t>(cand.size());
    ref_len += static_cast<int64_t>(ref.size());
    for (size_t n = 1; n <= 4; ++n) {
      auto [m, t] = clipped_matches(cand, ref, n);
      matches[n - 1] += m;
      totals[n - 1] += t;
    }
  }

  double log_sum = 0;
  for (size_t n = 0; n < 4; ++n) {
    if (matches[n] == 0 || totals[n] == 0) return 0.0;
    log_sum += 0.25 * std::log(static_cast<double>(matches[n]) / totals[n]);
  }
  if (cand_len == 0) return 0.0;
  const double ratio = static_cast<double>(ref_len) / static_cast<double>(cand_len);
  const double bp = std::exp(std::min(0.0, 1.0 - ratio));
  return bp * std::exp(log_sum);
}

// ---------------------------------------------------------------------------
// Corpus statistics

double CorpusStats::avg_len_ratio() const {
  return avg_len_regular > 0 ? 100.0 * avg_len_simple / avg_len_regular : 0;
}
double CorpusStats::vocab_ratio() const {
  return vocab_regular > 0 ? 100.0 * vocab_simple / vocab_regular : 0;
}
double CorpusStats::exclusive_ratio() const {
  return exclusive_regular > 0 ? 100.0 * exclusive_simple / exclusive_regular : 0;
}

CorpusStats corpus_stats(const std::vector<std::string>& simple,
                         const std::vector<std::string>& regular) {
  if (simple.empty() || regular.empty())
    throw std::invalid_argument("corpus_stats: empty side");

  auto side = [](const std::vector<std::string>& sentences, double& avg,
                 std::set<std::string>& vocab) {
    size_t tokens = 0;
    for (const auto& s : sentences) {
      auto toks = split_whitespace_lower(s);
      tokens += toks.size();
      for (auto& t : toks) vocab.insert(std::move(t));
    }
    avg = static_cast<double>(tokens) / sentences.size();
  };

  CorpusStats st;
  std::set<std::string> vs, vr;
  side(simple, st.avg_len_simple, vs);
  side(regular, st.avg_len_regular, vr);
  st.vocab_simple = vs.size();
  st.vocab_regular = vr.size();
  for (const auto& w : vs)
    if (!vr.count(w)) ++st.exclusive_simple;
  for (const auto& w : vr)
    if (!vs.count(w)) ++st.exclusive_regular;
  return st;
}

// ---------------------------------------------------------------------------
// Krippendorff's alpha

double krippendorff_alpha(const RatingTable& ratings, AlphaMetric metric) {
  const size_t items = ratings.items();

  // per-item list of present ratings; only items with >= 2 ratings are pairable
  std::vector<std::vector<int>> units;
  for (size_t col = 0; col < items; ++col) {
    std::vector<int> vals;
    for (const auto& row : ratings.rows) {
      if (col < row.size() && row[col].has_value()) vals.push_back(*row[col]);
    }
    if (vals.size() >= 2) units.push_back(std::move(vals));
  }
  if (units.size() < 2)
    throw std::invalid_argument("krippendorff_alpha: need >=2 items with >=2 ratings");

  std::map<int, double> marginals;  // n_c
  double n_total = 0;
  std::map<std::pair<int, int>, double> coincidence;  // o_ck
  for (const auto& unit : units) {
    const double m = static_cast<double>(unit.size());
    n_total += m;
    for (size_t a = 0; a < unit.size(); ++a) {
      marginals[unit[a]] += 1.0;
      for (size_t b = 0; b < unit.size(); ++b) {
        if (a == b) continue;
        coincidence[{unit[a], unit[b]}] += 1.0 / (m - 1.0);
      }
    }
  }

  // cumulative marginals for the ordinal metric
  std::vector<int> values;
  for (const auto& [v, _] : marginals) values.push_back(v);

  auto delta = [&](int c, int k) -> double {
    if (c == k) return 0.0;
    if (metric == AlphaMetric::Interval) {
      const double d = static_cast<double>(c - k);
      return d * d;
    }
    // ordinal: (sum of marginals from c..k minus endpoints averaged)^2
    int lo = std::min(c, k), hi = std::max(c, k);
    double sum = 0;
    for (int v : values)
      if (v >= lo && v <= hi) sum += marginals.at(v);
    sum -= (marginals.at(c) + marginals.at(k)) / 2.0;
    return sum * sum;
  };

  double d_observed = 0;
  for (const auto& [ck, o] : coincidence) d_observed += o * delta(ck.first, ck.second);

  double d_expected = 0;
  for (int c : values)
    for (int k : values) d_expected += marginals.at(c) * marginals.at(k) * delta(c, k);
  d_expected /= (n_total - 1.0);

  if (d_expected == 0) return 1.0;  // no variation anywhere: perfect agreement
  return 1.0 - d_observed / d_expected;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank

namespace {

double normal_sf(double z) {  // P(Z > z)
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                    const std::vector<double>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("wilcoxon_signed_rank: size mismatch");

  std::vector<double> diffs;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d != 0.0) diffs.push_back(d);
  }
  const size_t n = diffs.size();
  if (n < 6)
    throw std::invalid_argument(
        "wilcoxon_signed_rank: fewer than 6 nonzero differences");

  // average ranks of |d|
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::fabs(diffs[a]) < std::fabs(diffs[b]);
  });
  std::vector<double> rank(n);
  std::vector<double> tie_sizes;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && std::fabs(diffs[order[j]]) == std::fabs(diffs[order[i]])) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) rank[order[k]] = avg;
    if (j - i > 1) tie_sizes.push_back(static_cast<double>(j - i));
    i = j;
  }

  double w_plus = 0;
  for (size_t k = 0; k < n; ++k)
    if (diffs[k] > 0) w_plus += rank[k];
  const double w_total = static_cast<double>(n) * (n + 1) / 2.0;
  const double w_minus = w_total - w_plus;

  WilcoxonResult res;
  res.statistic = std::min(w_plus, w_minus);

  if (n <= 25) {
    // exact null distribution of W+, conditional on the observed ranks.
    // Ranks are doubled so that average ranks become integers, then a subset-
    // sum count gives the distribution over all 2^n sign patterns.
    std::vector<int64_t> r2(n);
    int64_t total2 = 0;
    for (size_t k = 0; k < n; ++k) {
      r2[k] = static_cast<int64_t>(std::llround(2.0 * rank[k]));
      total2 += r2[k];
    }
    std::vector<double> count(static_cast<size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    int64_t reach = 0;
    for (size_t k = 0; k < n; ++k) {
      reach += r2[k];
      for (int64_t s = reach; s >= r2[k]; --s)
        count[static_cast<size_t>(s)] += count[static_cast<size_t>(s - r2[k])];
    }
    const double denom = std::pow(2.0, static_cast<double>(n));
    const int64_t w2 = static_cast<int64_t>(std::llround(2.0 * w_plus));
    double p_low = 0, p_high = 0;
    for (int64_t s = 0; s <= total2; ++s) {
      if (s <= w2) p_low += count[static_cast<size_t>(s)];
      if (s >= w2) p_high += count[static_cast<size_t>(s)];
    }
    res.p_value = std::min(1.0, 2.0 * std::min(p_low, p_high) / denom);
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    for (double t : tie_sizes) var -= (t * t * t - t) / 48.0;
    const double sd = std::sqrt(var);
    double z = 0;
    if (w_plus > mean)
      z = (w_plus - mean - 0.5) / sd;
    else if (w_plus < mean)
      z = (w_plus - mean + 0.5) / sd;
    res.p_value = std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
  }
  return res;
}

}  // namespace rsimp
