#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsimp/checkpoint.hpp"
#include "rsimp/neural.hpp"
#include "rsimp/wordpiece.hpp"

namespace rsimp {

struct TrainConfig {
  double learning_rate = 1e-5;
  int batch_size = 8;
  int epochs = 10;
  int eval_every = 1;     // epochs between validation passes
  int snapshot_every = 0; // save ckpt_epoch_N.ckpt every N epochs (0 = off)
  int patience = 0;       // stop after this many evals without improvement (0 = off)
  uint64_t seed = 42;
  double weight_decay = 0;

  void validate() const;
};

/// Bias-corrected Adam with optional decoupled weight decay. The update is
/// evaluated in double and stored back in T. `step` is incremented first.
template <typename T>
void adam_step(ParamMap<T>& params, const ParamMap<T>& grads, ParamMap<T>& m,
               ParamMap<T>& v, uint64_t& step, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8, double weight_decay = 0) {
  ++step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (auto& [name, p] : params) {
    const auto& g = grads.at(name);
    auto& mt = m.at(name);
    auto& vt = v.at(name);
    if (!p.same_shape(g) || !p.same_shape(mt) || !p.same_shape(vt))
      throw std::invalid_argument("adam_step: shape mismatch for " + name);
    for (int64_t i = 0; i < p.numel(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = beta1 * static_cast<double>(mt[i]) + (1 - beta1) * gi;
      const double vi = beta2 * static_cast<double>(vt[i]) + (1 - beta2) * gi * gi;
      mt[i] = static_cast<T>(mi);
      vt[i] = static_cast<T>(vi);
      const double m_hat = static_cast<double>(mt[i]) / bc1;
      const double v_hat = static_cast<double>(vt[i]) / bc2;
      double update = lr * m_hat / (std::sqrt(v_hat) + eps);
      if (weight_decay > 0) update += lr * weight_decay * static_cast<double>(p[i]);
      p[i] = static_cast<T>(static_cast<double>(p[i]) - update);
    }
  }
}

/// One training example as token ids: source with bounds tokens already
/// attached, target without bounds (the batch assembler adds them).
struct TrainItem {
  std::vector<int> src;
  std::vector<int> tgt;
};

TrainItem make_train_item(const WordPieceModel& tok, const std::string& src_text,
                          const std::string& tgt_text, int max_len);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0;
  double valid_loss = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  double initial_valid_loss = 0;  // before the first update
  std::vector<EpochStats> curve;
  Checkpoint last;  // exact end-of-run state, resumable
  Checkpoint best;  // lowest validation loss seen
  std::vector<int> snapshot_epochs;
};

/// Deterministic training loop: seeded epoch shuffle, length-bucketed
/// batches, Adam updates, per-epoch loss curve, optional epoch snapshots
/// under out_dir (ckpt_epoch_N.ckpt) plus ckpt_best.ckpt / ckpt_last.ckpt.
/// With `start`, parameters AND optimizer moments resume from it;
/// `resume_epochs` continues the epoch counter (interrupted-run semantics)
/// while false restarts it at zero (fine-tuning semantics).
/// An empty out_dir disables all checkpoint files.
TrainResult train(const ModelConfig& model_config, const TrainConfig& config,
                  const std::vector<TrainItem>& train_items,
                  const std::vector<TrainItem>& valid_items,
                  const std::string& out_dir,
                  const Checkpoint* start = nullptr, bool resume_epochs = false,
                  bool reset_optimizer = false);

/// Transfer-learning starting points.
enum class TransferScheme { FromScratch, CheckpointEarly, CheckpointMid, CheckpointBest };
TransferScheme transfer_scheme_from_name(const std::string& name);
const char* transfer_scheme_name(TransferScheme s);

/// Source epochs of the named pretraining checkpoints (early/mid/best under
/// the reference schedule).
struct TransferSourceEpochs {
  int early = 3;
  int mid = 12;
  int best = 37;  // resolved as ckpt_best when present
};

/// Picks the staring checkpoint for a scheme from a pretraining output
/// directory (ckpt_epoch_N.ckpt / ckpt_best.ckpt files).
std::string transfer_checkpoint_path(const std::string& pretrain_dir,
                                     TransferScheme scheme,
                                     const TransferSourceEpochs& epochs = {});

// ---------------------------------------------------------------------------
// generation

struct BeamHypothesis {
  std::vector<int> ids;  // starts with <sos>
  double logprob_sum = 0;
  bool finished = false;

  double normalized() const {
    const auto len = static_cast<double>(ids.size() > 1 ? ids.size() - 1 : 1);
    return logprob_sum / len;
  }
};

/// Length-normalized beam search over token ids. Keeps the top-k partial
/// hypotheses per step by cumulative log-probability; the greedy rollout is
/// always part of the candidate pool, so widening the beam never selects a
/// worse-scored output. Ties break toward the lowest token id. Throws when
/// k < 1.
BeamHypothesis beam_search_ids(const ModelConfig& config,
                               const ParamMap<float>& params,
                               const std::vector<int>& src, int k, int max_len,
                               int sos_id, int eos_id);

/// Plain argmax decoding (independent of beam_search_ids, used as its k=1
/// reference).
BeamHypothesis greedy_decode_ids(const ModelConfig& config,
                                 const ParamMap<float>& params,
                                 const std::vector<int>& src, int max_len,
                                 int sos_id, int eos_id);

/// Sum of next-token log-probabilities of `ids` (sos-led, eos-terminated or
/// truncated) under the model.
double sequence_logprob(const ModelConfig& config, const ParamMap<float>& params,
                        const std::vector<int>& src, const std::vector<int>& ids);

/// Encode, beam-search, decode back to text.
std::string beam_search(const ModelConfig& config, const ParamMap<float>& params,
                        const WordPieceModel& tok, const std::string& src_text,
                        int k = 5, int max_len = 0);

/// Corpus BLEU (x100) of beam-search outputs against references.
double evaluate_bleu(const Checkpoint& ckpt, const WordPieceModel& tok,
                     const std::vector<std::pair<std::string, std::string>>& src_ref,
                     int k = 5);

void write_loss_curve_csv(const TrainResult& result, const std::string& path);

}  // namespace rsimp
