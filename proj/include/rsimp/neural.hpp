#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsimp/rng.hpp"
#include "rsimp/tensor.hpp"

namespace rsimp {

struct ModelConfig {
  int heads = 8;
  int encoder_layers = 6;
  int decoder_layers = 6;
  int d_model = 512;
  int d_ff = 2048;
  double dropout = 0.1;
  int vocab_size = 0;
  int max_len = 512;

  void validate() const {
    if (d_model <= 0 || heads <= 0 || d_model % heads != 0)
      throw std::invalid_argument("d_model must be a positive multiple of heads");
    if (encoder_layers < 1 || decoder_layers < 1)
      throw std::invalid_argument("need at least one encoder and decoder layer");
    if (d_ff <= 0 || vocab_size <= 0 || max_len <= 0)
      throw std::invalid_argument("d_ff, vocab_size and max_len must be positive");
    if (dropout < 0 || dropout >= 1)
      throw std::invalid_argument("dropout must be in [0, 1)");
  }

  /// Scaled-down configuration for CPU-sized experiments.
  static ModelConfig desk(int vocab, int max_len = 64) {
    ModelConfig c;
    c.heads = 4;
    c.encoder_layers = 2;
    c.decoder_layers = 2;
    c.d_model = 64;
    c.d_ff = 256;
    c.vocab_size = vocab;
    c.max_len = max_len;
    return c;
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"heads", c.heads},
                     {"encoder_layers", c.encoder_layers},
                     {"decoder_layers", c.decoder_layers},
                     {"d_model", c.d_model},
                     {"d_ff", c.d_ff},
                     {"dropout", c.dropout},
                     {"vocab_size", c.vocab_size},
                     {"max_len", c.max_len}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("heads").get_to(c.heads);
  j.at("encoder_layers").get_to(c.encoder_layers);
  j.at("decoder_layers").get_to(c.decoder_layers);
  j.at("d_model").get_to(c.d_model);
  j.at("d_ff").get_to(c.d_ff);
  j.at("dropout").get_to(c.dropout);
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("max_len").get_to(c.max_len);
}

/// Padded id matrices plus masks; tgt_in is tgt_out shifted right with <sos>.
/// Pad positions use filler id 0 and are excluded from attention keys and
/// from the loss.
struct Batch {
  std::vector<std::vector<int>> src, tgt_in, tgt_out;
  std::vector<std::vector<char>> src_mask, tgt_mask;  // 1 = real token

  size_t size() const { return src.size(); }

  static Batch make(const std::vector<std::vector<int>>& src_seqs,
                    const std::vector<std::vector<int>>& tgt_seqs, int sos_id,
                    int eos_id) {
    if (src_seqs.size() != tgt_seqs.size())
      throw std::invalid_argument("batch: source/target count mismatch");
    for (const auto& s : src_seqs)
      if (s.empty()) throw std::invalid_argument("batch: empty source sequence");
    Batch b;
    size_t src_len = 1, tgt_len = 1;
    for (const auto& s : src_seqs) src_len = std::max(src_len, s.size());
    for (const auto& t : tgt_seqs) tgt_len = std::max(tgt_len, t.size() + 1);
    for (size_t i = 0; i < src_seqs.size(); ++i) {
      std::vector<int> s = src_seqs[i];
      std::vector<char> sm(s.size(), 1);
      s.resize(src_len, 0);
      sm.resize(src_len, 0);

      std::vector<int> tin = {sos_id}, tout = tgt_seqs[i];
      tin.insert(tin.end(), tgt_seqs[i].begin(), tgt_seqs[i].end());
      tout.push_back(eos_id);
      std::vector<char> tm(tout.size(), 1);
      tin.resize(tgt_len, 0);
      tout.resize(tgt_len, 0);
      tm.resize(tgt_len, 0);

      b.src.push_back(std::move(s));
      b.src_mask.push_back(std::move(sm));
      b.tgt_in.push_back(std::move(tin));
      b.tgt_out.push_back(std::move(tout));
      b.tgt_mask.push_back(std::move(tm));
    }
    return b;
  }
};

// ---------------------------------------------------------------------------
// parameters

namespace detail {

inline std::vector<std::pair<std::string, std::vector<int64_t>>> parameter_specs(
    const ModelConfig& c) {
  std::vector<std::pair<std::string, std::vector<int64_t>>> specs;
  const int64_t d = c.d_model, ff = c.d_ff, v = c.vocab_size;
  specs.push_back({"embed.tok", {v, d}});

  // q/k/v are pure linear projections; a key bias in particular would be
  // inert (softmax removes per-query constants), so only the output
  // projection carries a bias
  auto attention = [&](const std::string& prefix) {
    for (const char* w : {"wq", "wk", "wv", "wo"})
      specs.push_back({prefix + "." + w, {d, d}});
    specs.push_back({prefix + ".bo", {d}});
  };
  auto layer_norm = [&](const std::string& prefix) {
    specs.push_back({prefix + ".g", {d}});
    specs.push_back({prefix + ".b", {d}});
  };
  auto feed_forward = [&](const std::string& prefix) {
    specs.push_back({prefix + ".w1", {d, ff}});
    specs.push_back({prefix + ".b1", {ff}});
    specs.push_back({prefix + ".w2", {ff, d}});
    specs.push_back({prefix + ".b2", {d}});
  };

  for (int l = 0; l < c.encoder_layers; ++l) {
    const std::string p = "enc." + std::to_string(l);
    attention(p + ".attn");
    layer_norm(p + ".ln1");
    feed_forward(p + ".ff");
    layer_norm(p + ".ln2");
  }
  for (int l = 0; l < c.decoder_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    attention(p + ".self");
    layer_norm(p + ".ln1");
    attention(p + ".cross");
    layer_norm(p + ".ln2");
    feed_forward(p + ".ff");
    layer_norm(p + ".ln3");
  }
  specs.push_back({"out.w", {d, v}});
  specs.push_back({"out.b", {v}});
  return specs;
}

}  // namespace detail

/// Xavier-uniform weights, zero biases, unit layer-norm gains. Each tensor
/// draws from its own named RNG stream, so results do not depend on
/// construction order.
template <typename T>
ParamMap<T> init_params(const ModelConfig& config, uint64_t seed) {
  config.validate();
  ParamMap<T> params;
  for (const auto& [name, shape] : detail::parameter_specs(config)) {
    Tensor<T> t(shape);
    const bool is_gain = name.size() >= 2 && name.compare(name.size() - 2, 2, ".g") == 0;
    if (shape.size() == 2) {
      Rng rng(Rng::derive_seed(seed, name));
      const double bound =
          std::sqrt(6.0 / (static_cast<double>(shape[0]) + static_cast<double>(shape[1])));
      for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<T>(rng.uniform(-bound, bound));
    } else if (is_gain) {
      for (int64_t i = 0; i < t.numel(); ++i) t[i] = T{1};
    }
    params.emplace(name, std::move(t));
  }
  return params;
}

template <typename T>
ParamMap<T> zeros_like(const ParamMap<T>& params) {
  ParamMap<T> out;
  for (const auto& [name, t] : params) out.emplace(name, Tensor<T>(t.shape()));
  return out;
}

// ---------------------------------------------------------------------------
// forward / backward

template <typename T>
struct DropoutCache {
  Tensor<T> mult;  // elementwise multiplier, empty when inactive
  bool active = false;
};

template <typename T>
struct AttentionCache {
  Tensor<T> q_in, kv_in;
  Tensor<T> Q, K, V;
  std::vector<Tensor<T>> probs;      // per head, post-softmax
  std::vector<DropoutCache<T>> drop;  // per head, on the probabilities
  Tensor<T> concat;                  // heads merged, before the output proj
};

template <typename T>
struct FeedForwardCache {
  Tensor<T> in, pre_act;
};

template <typename T>
struct EncoderLayerCache {
  AttentionCache<T> attn;
  DropoutCache<T> attn_drop;
  LayerNormCache<T> ln1;
  Tensor<T> x1;
  FeedForwardCache<T> ff;
  DropoutCache<T> ff_drop;
  LayerNormCache<T> ln2;
};

template <typename T>
struct DecoderLayerCache {
  AttentionCache<T> self_attn;
  DropoutCache<T> self_drop;
  LayerNormCache<T> ln1;
  Tensor<T> y1;
  AttentionCache<T> cross_attn;
  DropoutCache<T> cross_drop;
  LayerNormCache<T> ln2;
  Tensor<T> y2;
  FeedForwardCache<T> ff;
  DropoutCache<T> ff_drop;
  LayerNormCache<T> ln3;
};

template <typename T>
struct SequenceCache {
  DropoutCache<T> enc_embed_drop, dec_embed_drop;
  std::vector<EncoderLayerCache<T>> enc;
  Tensor<T> memory;
  std::vector<DecoderLayerCache<T>> dec;
  Tensor<T> dec_out;
  Tensor<T> probs;  // softmax over the vocabulary, per target position
};

template <typename T>
struct ForwardCache {
  std::vector<SequenceCache<T>> seqs;
};

template <typename T>
struct ForwardResult {
  std::vector<Tensor<T>> logits;  // one (tgt_len × vocab) tensor per sequence
  ForwardCache<T> cache;
};

namespace detail {

template <typename T>
Tensor<T> apply_dropout(Tensor<T> x, double rate, Rng* rng, DropoutCache<T>& cache) {
  if (!rng || rate <= 0) {
    cache.active = false;
    return x;
  }
  cache.active = true;
  cache.mult = Tensor<T>({x.rows(), x.cols()});
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (int64_t i = 0; i < x.numel(); ++i) {
    const T m = rng->bernoulli(rate) ? T{0} : keep_scale;
    cache.mult[i] = m;
    x[i] *= m;
  }
  return x;
}

template <typename T>
Tensor<T> dropout_backward(Tensor<T> dy, const DropoutCache<T>& cache) {
  if (!cache.active) return dy;
  for (int64_t i = 0; i < dy.numel(); ++i) dy[i] *= cache.mult[i];
  return dy;
}

template <typename T>
Tensor<T> head_slice(const Tensor<T>& M, int head, int dk) {
  Tensor<T> H({M.rows(), dk});
  for (int64_t i = 0; i < M.rows(); ++i)
    for (int64_t j = 0; j < dk; ++j) H(i, j) = M(i, head * dk + j);
  return H;
}

template <typename T>
void head_unslice(const Tensor<T>& H, int head, int dk, Tensor<T>& M) {
  for (int64_t i = 0; i < H.rows(); ++i)
    for (int64_t j = 0; j < dk; ++j) M(i, head * dk + j) = H(i, j);
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const ParamMap<T>& p, const std::string& w,
                 const std::string& b) {
  Tensor<T> y = matmul(x, p.at(w));
  add_bias_rows(y, p.at(b));
  return y;
}

/// Multi-head attention; KeyAllow(query_row, key_col) gates the keys.
template <typename T, typename KeyAllow>
Tensor<T> attention_forward(const ModelConfig& c, const ParamMap<T>& p,
                            const std::string& prefix, const Tensor<T>& q_in,
                            const Tensor<T>& kv_in, KeyAllow&& allow, Rng* rng,
                            AttentionCache<T>& cache) {
  const int dk = c.d_model / c.heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));

  cache.q_in = q_in;
  cache.kv_in = kv_in;
  cache.Q = matmul(q_in, p.at(prefix + ".wq"));
  cache.K = matmul(kv_in, p.at(prefix + ".wk"));
  cache.V = matmul(kv_in, p.at(prefix + ".wv"));

  cache.concat = Tensor<T>({q_in.rows(), c.d_model});
  cache.probs.resize(static_cast<size_t>(c.heads));
  cache.drop.resize(static_cast<size_t>(c.heads));
  for (int h = 0; h < c.heads; ++h) {
    Tensor<T> Qh = head_slice(cache.Q, h, dk);
    Tensor<T> Kh = head_slice(cache.K, h, dk);
    Tensor<T> Vh = head_slice(cache.V, h, dk);
    Tensor<T> S = matmul_nt(Qh, Kh);
    for (int64_t i = 0; i < S.numel(); ++i) S[i] *= scale;
    Tensor<T> P = masked_softmax_rows(S, allow);
    cache.probs[static_cast<size_t>(h)] = P;
    Tensor<T> Pd = apply_dropout(P, c.dropout, rng, cache.drop[static_cast<size_t>(h)]);
    Tensor<T> Oh = matmul(Pd, Vh);
    head_unslice(Oh, h, dk, cache.concat);
  }
  return linear(cache.concat, p, prefix + ".wo", prefix + ".bo");
}

/// Backward through attention_forward. Returns grad wrt q_in; grad wrt kv_in
/// is accumulated into d_kv_in (they may alias the same upstream tensor).
template <typename T>
Tensor<T> attention_backward(const ModelConfig& c, const ParamMap<T>& p,
                             const std::string& prefix, const Tensor<T>& d_out,
                             const AttentionCache<T>& cache, ParamMap<T>& grads,
                             Tensor<T>& d_kv_in) {
  const int dk = c.d_model / c.heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));

  grads.at(prefix + ".wo").add_(matmul_tn(cache.concat, d_out));
  accumulate_colsum(d_out, grads.at(prefix + ".bo"));
  Tensor<T> d_concat = matmul_nt(d_out, p.at(prefix + ".wo"));

  Tensor<T> dQ({cache.Q.rows(), c.d_model});
  Tensor<T> dK({cache.K.rows(), c.d_model});
  Tensor<T> dV({cache.V.rows(), c.d_model});
  for (int h = 0; h < c.heads; ++h) {
    const auto hs = static_cast<size_t>(h);
    Tensor<T> dOh = head_slice(d_concat, h, dk);
    Tensor<T> Vh = head_slice(cache.V, h, dk);
    Tensor<T> Qh = head_slice(cache.Q, h, dk);
    Tensor<T> Kh = head_slice(cache.K, h, dk);

    // P was dropped out before the value product
    Tensor<T> Pd = cache.probs[hs];
    if (cache.drop[hs].active)
      for (int64_t i = 0; i < Pd.numel(); ++i) Pd[i] *= cache.drop[hs].mult[i];

    Tensor<T> dPd = matmul_nt(dOh, Vh);
    Tensor<T> dVh = matmul_tn(Pd, dOh);
    Tensor<T> dP = dropout_backward(std::move(dPd), cache.drop[hs]);
    Tensor<T> dS = softmax_backward_rows(cache.probs[hs], dP);
    for (int64_t i = 0; i < dS.numel(); ++i) dS[i] *= scale;

    Tensor<T> dQh = matmul(dS, Kh);
    Tensor<T> dKh = matmul_tn(dS, Qh);
    head_unslice(dQh, h, dk, dQ);
    head_unslice(dKh, h, dk, dK);
    head_unslice(dVh, h, dk, dV);
  }

  grads.at(prefix + ".wq").add_(matmul_tn(cache.q_in, dQ));
  grads.at(prefix + ".wk").add_(matmul_tn(cache.kv_in, dK));
  grads.at(prefix + ".wv").add_(matmul_tn(cache.kv_in, dV));

  d_kv_in.add_(matmul_nt(dK, p.at(prefix + ".wk")));
  d_kv_in.add_(matmul_nt(dV, p.at(prefix + ".wv")));
  return matmul_nt(dQ, p.at(prefix + ".wq"));
}

template <typename T>
Tensor<T> feed_forward(const ParamMap<T>& p, const std::string& prefix,
                       const Tensor<T>& x, FeedForwardCache<T>& cache) {
  cache.in = x;
  cache.pre_act = linear(x, p, prefix + ".w1", prefix + ".b1");
  Tensor<T> r = cache.pre_act;
  for (int64_t i = 0; i < r.numel(); ++i)
    if (r[i] < T{0}) r[i] = T{0};
  return linear(r, p, prefix + ".w2", prefix + ".b2");
}

template <typename T>
Tensor<T> feed_forward_backward(const ParamMap<T>& p, const std::string& prefix,
                                const Tensor<T>& d_out,
                                const FeedForwardCache<T>& cache, ParamMap<T>& grads) {
  Tensor<T> relu_out = cache.pre_act;
  for (int64_t i = 0; i < relu_out.numel(); ++i)
    if (relu_out[i] < T{0}) relu_out[i] = T{0};

  grads.at(prefix + ".w2").add_(matmul_tn(relu_out, d_out));
  accumulate_colsum(d_out, grads.at(prefix + ".b2"));
  Tensor<T> d_relu = matmul_nt(d_out, p.at(prefix + ".w2"));
  for (int64_t i = 0; i < d_relu.numel(); ++i)
    if (cache.pre_act[i] <= T{0}) d_relu[i] = T{0};

  grads.at(prefix + ".w1").add_(matmul_tn(cache.in, d_relu));
  accumulate_colsum(d_relu, grads.at(prefix + ".b1"));
  return matmul_nt(d_relu, p.at(prefix + ".w1"));
}

template <typename T>
Tensor<T> embed_sequence(const ModelConfig& c, const ParamMap<T>& p,
                         const std::vector<int>& ids) {
  const auto& E = p.at("embed.tok");
  const T scale = static_cast<T>(std::sqrt(static_cast<double>(c.d_model)));
  Tensor<T> x({static_cast<int64_t>(ids.size()), c.d_model});
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= c.vocab_size)
      throw std::out_of_range("token id out of range: " + std::to_string(ids[i]));
    for (int j = 0; j < c.d_model; ++j) {
      const double angle =
          static_cast<double>(i) /
          std::pow(10000.0, static_cast<double>(2 * (j / 2)) / c.d_model);
      const double pe = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
      x(static_cast<int64_t>(i), j) =
          E(ids[i], j) * scale + static_cast<T>(pe);
    }
  }
  return x;
}

template <typename T>
void embed_backward(const ModelConfig& c, const std::vector<int>& ids,
                    const Tensor<T>& dx, ParamMap<T>& grads) {
  auto& dE = grads.at("embed.tok");
  const T scale = static_cast<T>(std::sqrt(static_cast<double>(c.d_model)));
  for (size_t i = 0; i < ids.size(); ++i)
    for (int j = 0; j < c.d_model; ++j)
      dE(ids[i], j) += dx(static_cast<int64_t>(i), j) * scale;
}

template <typename T>
Tensor<T> encoder_forward(const ModelConfig& c, const ParamMap<T>& p,
                          const std::vector<int>& src,
                          const std::vector<char>& src_mask, Rng* rng,
                          SequenceCache<T>& cache) {
  Tensor<T> x = apply_dropout(embed_sequence(c, p, src), c.dropout, rng,
                              cache.enc_embed_drop);
  cache.enc.resize(static_cast<size_t>(c.encoder_layers));
  auto key_ok = [&](int64_t, int64_t j) { return src_mask[static_cast<size_t>(j)] != 0; };
  for (int l = 0; l < c.encoder_layers; ++l) {
    auto& lc = cache.enc[static_cast<size_t>(l)];
    const std::string prefix = "enc." + std::to_string(l);
    Tensor<T> a = attention_forward(c, p, prefix + ".attn", x, x, key_ok, rng, lc.attn);
    a = apply_dropout(std::move(a), c.dropout, rng, lc.attn_drop);
    a.add_(x);
    lc.x1 = layer_norm_forward(a, p.at(prefix + ".ln1.g"), p.at(prefix + ".ln1.b"),
                               lc.ln1);
    Tensor<T> f = feed_forward(p, prefix + ".ff", lc.x1, lc.ff);
    f = apply_dropout(std::move(f), c.dropout, rng, lc.ff_drop);
    f.add_(lc.x1);
    x = layer_norm_forward(f, p.at(prefix + ".ln2.g"), p.at(prefix + ".ln2.b"),
                           lc.ln2);
  }
  cache.memory = x;
  return x;
}

template <typename T>
Tensor<T> decoder_forward(const ModelConfig& c, const ParamMap<T>& p,
                          const std::vector<int>& tgt_in,
                          const std::vector<char>& tgt_mask,
                          const Tensor<T>& memory,
                          const std::vector<char>& src_mask, Rng* rng,
                          SequenceCache<T>& cache) {
  Tensor<T> y = apply_dropout(embed_sequence(c, p, tgt_in), c.dropout, rng,
                              cache.dec_embed_drop);
  cache.dec.resize(static_cast<size_t>(c.decoder_layers));
  auto causal_ok = [&](int64_t i, int64_t j) {
    return j <= i && tgt_mask[static_cast<size_t>(j)] != 0;
  };
  auto mem_ok = [&](int64_t, int64_t j) { return src_mask[static_cast<size_t>(j)] != 0; };
  for (int l = 0; l < c.decoder_layers; ++l) {
    auto& lc = cache.dec[static_cast<size_t>(l)];
    const std::string prefix = "dec." + std::to_string(l);
    Tensor<T> a = attention_forward(c, p, prefix + ".self", y, y, causal_ok, rng,
                                    lc.self_attn);
    a = apply_dropout(std::move(a), c.dropout, rng, lc.self_drop);
    a.add_(y);
    lc.y1 = layer_norm_forward(a, p.at(prefix + ".ln1.g"), p.at(prefix + ".ln1.b"),
                               lc.ln1);

    Tensor<T> x = attention_forward(c, p, prefix + ".cross", lc.y1, memory, mem_ok,
                                    rng, lc.cross_attn);
    x = apply_dropout(std::move(x), c.dropout, rng, lc.cross_drop);
    x.add_(lc.y1);
    lc.y2 = layer_norm_forward(x, p.at(prefix + ".ln2.g"), p.at(prefix + ".ln2.b"),
                               lc.ln2);

    Tensor<T> f = feed_forward(p, prefix + ".ff", lc.y2, lc.ff);
    f = apply_dropout(std::move(f), c.dropout, rng, lc.ff_drop);
    f.add_(lc.y2);
    y = layer_norm_forward(f, p.at(prefix + ".ln3.g"), p.at(prefix + ".ln3.b"),
                           lc.ln3);
  }
  cache.dec_out = y;
  return y;
}

}  // namespace detail

/// Full forward pass; dropout is applied only when `dropout_rng` is supplied.
template <typename T>
ForwardResult<T> forward(const ModelConfig& config, const ParamMap<T>& params,
                         const Batch& batch, Rng* dropout_rng = nullptr) {
  config.validate();
  ForwardResult<T> result;
  result.cache.seqs.resize(batch.size());
  for (size_t b = 0; b < batch.size(); ++b) {
    auto& sc = result.cache.seqs[b];
    Tensor<T> memory = detail::encoder_forward(config, params, batch.src[b],
                                               batch.src_mask[b], dropout_rng, sc);
    Tensor<T> dec = detail::decoder_forward(config, params, batch.tgt_in[b],
                                            batch.tgt_mask[b], memory,
                                            batch.src_mask[b], dropout_rng, sc);
    Tensor<T> logits = detail::linear(dec, params, std::string("out.w"),
                                      std::string("out.b"));
    result.logits.push_back(std::move(logits));
  }
  return result;
}

template <typename T>
struct LossGrad {
  double loss = 0;
  std::vector<double> per_sequence;  // token-mean loss per batch row
  ParamMap<T> grads;
};

/// Mean token-level cross entropy over non-pad target positions, with
/// analytic gradients for every parameter.
template <typename T>
LossGrad<T> loss_and_grad(const ModelConfig& config, const ParamMap<T>& params,
                          const Batch& batch, Rng* dropout_rng = nullptr) {
  ForwardResult<T> fwd = forward(config, params, batch, dropout_rng);

  int64_t total_tokens = 0;
  for (const auto& mask : batch.tgt_mask)
    for (char m : mask) total_tokens += m ? 1 : 0;
  if (total_tokens == 0)
    throw std::invalid_argument("loss_and_grad: batch has no unpadded target tokens");

  LossGrad<T> out;
  out.grads = zeros_like(params);
  out.per_sequence.assign(batch.size(), 0.0);

  double loss_sum = 0;
  for (size_t b = 0; b < batch.size(); ++b) {
    auto& sc = fwd.cache.seqs[b];
    const Tensor<T>& logits = fwd.logits[b];
    const int64_t len = logits.rows(), v = logits.cols();
    sc.probs = Tensor<T>({len, v});
    Tensor<T> dlogits({len, v});

    int64_t row_tokens = 0;
    double row_loss = 0;
    for (int64_t i = 0; i < len; ++i) {
      if (!batch.tgt_mask[b][static_cast<size_t>(i)]) continue;
      ++row_tokens;
      double max_logit = logits(i, 0);
      for (int64_t j = 1; j < v; ++j)
        max_logit = std::max(max_logit, static_cast<double>(logits(i, j)));
      double sum = 0;
      for (int64_t j = 0; j < v; ++j)
        sum += std::exp(static_cast<double>(logits(i, j)) - max_logit);
      const int gold = batch.tgt_out[b][static_cast<size_t>(i)];
      const double log_prob =
          static_cast<double>(logits(i, gold)) - max_logit - std::log(sum);
      row_loss -= log_prob;
      loss_sum -= log_prob;
      for (int64_t j = 0; j < v; ++j) {
        const double pj =
            std::exp(static_cast<double>(logits(i, j)) - max_logit) / sum;
        sc.probs(i, j) = static_cast<T>(pj);
        dlogits(i, j) = static_cast<T>(
            (pj - (j == gold ? 1.0 : 0.0)) / static_cast<double>(total_tokens));
      }
    }
    out.per_sequence[b] = row_tokens > 0 ? row_loss / static_cast<double>(row_tokens) : 0;

    // output projection
    out.grads.at("out.w").add_(matmul_tn(sc.dec_out, dlogits));
    accumulate_colsum(dlogits, out.grads.at("out.b"));
    Tensor<T> dy = matmul_nt(dlogits, params.at("out.w"));

    // decoder layers in reverse
    Tensor<T> d_memory(sc.memory.shape());
    for (int l = config.decoder_layers - 1; l >= 0; --l) {
      auto& lc = sc.dec[static_cast<size_t>(l)];
      const std::string prefix = "dec." + std::to_string(l);

      Tensor<T> d_f = layer_norm_backward(dy, params.at(prefix + ".ln3.g"), lc.ln3,
                                          out.grads.at(prefix + ".ln3.g"),
                                          out.grads.at(prefix + ".ln3.b"));
      Tensor<T> dy2 = d_f;  // residual branch
      Tensor<T> d_ff_out = detail::dropout_backward(d_f, lc.ff_drop);
      dy2.add_(detail::feed_forward_backward(params, prefix + ".ff", d_ff_out,
                                             lc.ff, out.grads));

      Tensor<T> d_x = layer_norm_backward(dy2, params.at(prefix + ".ln2.g"), lc.ln2,
                                          out.grads.at(prefix + ".ln2.g"),
                                          out.grads.at(prefix + ".ln2.b"));
      Tensor<T> dy1 = d_x;
      Tensor<T> d_cross_out = detail::dropout_backward(d_x, lc.cross_drop);
      dy1.add_(detail::attention_backward(config, params, prefix + ".cross",
                                          d_cross_out, lc.cross_attn, out.grads,
                                          d_memory));

      Tensor<T> d_a = layer_norm_backward(dy1, params.at(prefix + ".ln1.g"), lc.ln1,
                                          out.grads.at(prefix + ".ln1.g"),
                                          out.grads.at(prefix + ".ln1.b"));
      dy = d_a;  // residual
      Tensor<T> d_self_out = detail::dropout_backward(d_a, lc.self_drop);
      Tensor<T> d_self_kv(dy.shape());
      Tensor<T> d_q = detail::attention_backward(config, params, prefix + ".self",
                                                 d_self_out, lc.self_attn, out.grads,
                                                 d_self_kv);
      dy.add_(d_q);
      dy.add_(d_self_kv);
    }
    Tensor<T> d_dec_embed = detail::dropout_backward(dy, sc.dec_embed_drop);
    detail::embed_backward(config, batch.tgt_in[b], d_dec_embed, out.grads);

    // encoder layers in reverse
    Tensor<T> dx = d_memory;
    for (int l = config.encoder_layers - 1; l >= 0; --l) {
      auto& lc = sc.enc[static_cast<size_t>(l)];
      const std::string prefix = "enc." + std::to_string(l);

      Tensor<T> d_f = layer_norm_backward(dx, params.at(prefix + ".ln2.g"), lc.ln2,
                                          out.grads.at(prefix + ".ln2.g"),
                                          out.grads.at(prefix + ".ln2.b"));
      Tensor<T> dx1 = d_f;
      Tensor<T> d_ff_out = detail::dropout_backward(d_f, lc.ff_drop);
      dx1.add_(detail::feed_forward_backward(params, prefix + ".ff", d_ff_out,
                                             lc.ff, out.grads));

      Tensor<T> d_a = layer_norm_backward(dx1, params.at(prefix + ".ln1.g"), lc.ln1,
                                          out.grads.at(prefix + ".ln1.g"),
                                          out.grads.at(prefix + ".ln1.b"));
      dx = d_a;
      Tensor<T> d_attn_out = detail::dropout_backward(d_a, lc.attn_drop);
      Tensor<T> d_kv(dx.shape());
      Tensor<T> d_q = detail::attention_backward(config, params, prefix + ".attn",
                                                 d_attn_out, lc.attn, out.grads, d_kv);
      dx.add_(d_q);
      dx.add_(d_kv);
    }
    Tensor<T> d_enc_embed = detail::dropout_backward(dx, sc.enc_embed_drop);
    detail::embed_backward(config, batch.src[b], d_enc_embed, out.grads);
  }

  out.loss = loss_sum / static_cast<double>(total_tokens);
  return out;
}

// ---------------------------------------------------------------------------
// generation-time entry points (single unpadded sequence)

template <typename T>
Tensor<T> encode_sequence(const ModelConfig& config, const ParamMap<T>& params,
                          const std::vector<int>& src) {
  SequenceCache<T> scratch;
  std::vector<char> mask(src.size(), 1);
  return detail::encoder_forward(config, params, src, mask, nullptr, scratch);
}

/// Log-probabilities of the next token after `tgt_prefix` (which must start
/// with <sos>), given the encoded source memory.
template <typename T>
std::vector<double> next_token_logprobs(const ModelConfig& config,
                                        const ParamMap<T>& params,
                                        const Tensor<T>& memory,
                                        const std::vector<int>& tgt_prefix) {
  SequenceCache<T> scratch;
  std::vector<char> tgt_mask(tgt_prefix.size(), 1);
  std::vector<char> src_mask(static_cast<size_t>(memory.rows()), 1);
  Tensor<T> dec = detail::decoder_forward(config, params, tgt_prefix, tgt_mask,
                                          memory, src_mask, nullptr, scratch);
  const int64_t last = dec.rows() - 1;
  const auto& w = params.at("out.w");
  const auto& bias = params.at("out.b");
  std::vector<double> logits(static_cast<size_t>(config.vocab_size));
  for (int j = 0; j < config.vocab_size; ++j) {
    double acc = static_cast<double>(bias[j]);
    for (int k = 0; k < config.d_model; ++k)
      acc += static_cast<double>(dec(last, k)) * static_cast<double>(w(k, j));
    logits[static_cast<size_t>(j)] = acc;
  }
  double max_logit = logits[0];
  for (double v : logits) max_logit = std::max(max_logit, v);
  double sum = 0;
  for (double v : logits) sum += std::exp(v - max_logit);
  const double log_z = max_logit + std::log(sum);
  for (double& v : logits) v -= log_z;
  return logits;
}

}  // namespace rsimp
