#include "rsimp/train.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "rsimp/io.hpp"
#include "rsimp/textmetrics.hpp"

namespace fs = std::filesystem;

namespace rsimp {

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (epochs < 0) throw std::invalid_argument("epochs must be nonnegative");
  if (eval_every <= 0) throw std::invalid_argument("eval_every must be positive");
  if (weight_decay < 0) throw std::invalid_argument("weight_decay must be nonnegative");
}

TrainItem make_train_item(const WordPieceModel& tok, const std::string& src_text,
                          const std::string& tgt_text, int max_len) {
  TrainItem item;
  item.src = tok.encode(src_text, /*add_bounds=*/true);
  item.tgt = tok.encode(tgt_text, /*add_bounds=*/false);
  if (static_cast<int>(item.src.size()) > max_len) {
    item.src.resize(static_cast<size_t>(max_len));
    item.src.back() = tok.eos_id();
  }
  if (static_cast<int>(item.tgt.size()) > max_len - 1)
    item.tgt.resize(static_cast<size_t>(max_len - 1));  // room for <sos>/<eos>
  return item;
}

namespace {

// deterministic length-bucketed batches: shuffle, stable-sort by source
// length, chunk, shuffle the chunk order
std::vector<std::vector<size_t>> plan_batches(size_t count, size_t batch_size,
                                              const std::vector<TrainItem>& items,
                                              Rng& rng) {
  std::vector<size_t> order(count);
  for (size_t i = 0; i < count; ++i) order[i] = i;
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return items[a].src.size() < items[b].src.size();
  });
  std::vector<std::vector<size_t>> batches;
  for (size_t at = 0; at < count; at += batch_size) {
    std::vector<size_t> batch;
    for (size_t i = at; i < std::min(count, at + batch_size); ++i)
      batch.push_back(order[i]);
    batches.push_back(std::move(batch));
  }
  rng.shuffle(batches);
  return batches;
}

Batch assemble(const std::vector<TrainItem>& items, const std::vector<size_t>& idx,
               int sos_id, int eos_id) {
  std::vector<std::vector<int>> src, tgt;
  for (size_t i : idx) {
    src.push_back(items[i].src);
    tgt.push_back(items[i].tgt);
  }
  return Batch::make(src, tgt, sos_id, eos_id);
}

double evaluate_loss(const ModelConfig& model_config, const ParamMap<float>& params,
                     const std::vector<TrainItem>& items, int batch_size) {
  double loss_sum = 0;
  int64_t tokens = 0;
  for (size_t at = 0; at < items.size(); at += static_cast<size_t>(batch_size)) {
    std::vector<size_t> idx;
    for (size_t i = at; i < std::min(items.size(), at + static_cast<size_t>(batch_size)); ++i)
      idx.push_back(i);
    Batch batch = assemble(items, idx, 0, 1);
    int64_t batch_tokens = 0;
    for (const auto& m : batch.tgt_mask)
      for (char c : m) batch_tokens += c ? 1 : 0;
    // forward only; dropout off
    auto res = loss_and_grad(model_config, params, batch);
    loss_sum += res.loss * static_cast<double>(batch_tokens);
    tokens += batch_tokens;
  }
  return tokens > 0 ? loss_sum / static_cast<double>(tokens) : 0.0;
}

Checkpoint snapshot_state(const ModelConfig& model_config,
                          const ParamMap<float>& params, const ParamMap<float>& m,
                          const ParamMap<float>& v, uint64_t step, int64_t epoch,
                          const Rng& rng, double best_val_loss) {
  Checkpoint ckpt;
  ckpt.model_config = model_config;
  ckpt.parameters = params;
  ckpt.adam_m = m;
  ckpt.adam_v = v;
  ckpt.step = step;
  ckpt.epoch = epoch;
  ckpt.rng_state = rng.state();
  ckpt.best_val_loss = best_val_loss;
  return ckpt;
}

}  // namespace

TrainResult train(const ModelConfig& model_config, const TrainConfig& config,
                  const std::vector<TrainItem>& train_items,
                  const std::vector<TrainItem>& valid_items,
                  const std::string& out_dir, const Checkpoint* start,
                  bool resume_epochs, bool reset_optimizer) {
  model_config.validate();
  config.validate();
  if (train_items.empty()) throw std::invalid_argument("train: empty training split");
  if (valid_items.empty()) throw std::invalid_argument("train: empty validation split");
  for (const auto& item : train_items)
    if (item.src.empty()) throw std::invalid_argument("train: empty source sequence");

  ParamMap<float> params;
  ParamMap<float> m, v;
  uint64_t step = 0;
  int64_t start_epoch = 0;
  Rng rng(config.seed);
  double best_val_loss = std::numeric_limits<double>::infinity();

  if (start) {
    if (start->model_config.vocab_size != model_config.vocab_size)
      throw std::invalid_argument("train: checkpoint vocabulary size mismatch");
    params = start->parameters;
    if (reset_optimizer) {
      m = zeros_like(params);
      v = zeros_like(params);
    } else {
      m = start->adam_m;
      v = start->adam_v;
      step = start->step;
    }
    if (resume_epochs) {
      start_epoch = start->epoch;
      rng.set_state(start->rng_state);
      best_val_loss = start->best_val_loss;
      if (!reset_optimizer) step = start->step;
    }
  } else {
    params = init_params<float>(model_config, config.seed);
    m = zeros_like(params);
    v = zeros_like(params);
  }

  const bool save_files = !out_dir.empty();
  if (save_files) fs::create_directories(out_dir);

  TrainResult result;
  result.initial_valid_loss =
      evaluate_loss(model_config, params, valid_items, config.batch_size);
  if (result.initial_valid_loss < best_val_loss) {
    best_val_loss = result.initial_valid_loss;
    result.best = snapshot_state(model_config, params, m, v, step, start_epoch, rng,
                                 best_val_loss);
  }

  // the pre-training state doubles as the epoch-0 snapshot
  if (save_files && config.snapshot_every > 0 && start_epoch == 0)
    save_checkpoint(snapshot_state(model_config, params, m, v, step, 0, rng,
                                   best_val_loss),
                    out_dir + "/ckpt_epoch_0.ckpt");

  int evals_since_improvement = 0;
  bool have_best = result.best.parameters.size() > 0;

  for (int64_t epoch = start_epoch + 1; epoch <= config.epochs; ++epoch) {
    auto batches = plan_batches(train_items.size(),
                                static_cast<size_t>(config.batch_size), train_items,
                                rng);
    double loss_sum = 0;
    int64_t tokens = 0;
    for (const auto& idx : batches) {
      if (idx.empty()) continue;
      Batch batch = assemble(train_items, idx, 0, 1);
      int64_t batch_tokens = 0;
      for (const auto& mask : batch.tgt_mask)
        for (char c : mask) batch_tokens += c ? 1 : 0;

      auto lg = loss_and_grad(model_config, params, batch,
                              model_config.dropout > 0 ? &rng : nullptr);
      adam_step(params, lg.grads, m, v, step, config.learning_rate, 0.9, 0.999,
                1e-8, config.weight_decay);
      loss_sum += lg.loss * static_cast<double>(batch_tokens);
      tokens += batch_tokens;
    }

    EpochStats stats;
    stats.epoch = static_cast<int>(epoch);
    stats.train_loss = tokens > 0 ? loss_sum / static_cast<double>(tokens) : 0.0;

    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      stats.valid_loss =
          evaluate_loss(model_config, params, valid_items, config.batch_size);
      if (stats.valid_loss < best_val_loss) {
        best_val_loss = stats.valid_loss;
        result.best = snapshot_state(model_config, params, m, v, step, epoch, rng,
                                     best_val_loss);
        have_best = true;
        evals_since_improvement = 0;
      } else {
        ++evals_since_improvement;
      }
    }
    result.curve.push_back(stats);

    if (config.snapshot_every > 0 && epoch % config.snapshot_every == 0 &&
        save_files) {
      save_checkpoint(snapshot_state(model_config, params, m, v, step, epoch, rng,
                                     best_val_loss),
                      out_dir + "/ckpt_epoch_" + std::to_string(epoch) + ".ckpt");
      result.snapshot_epochs.push_back(static_cast<int>(epoch));
    }

    if (config.patience > 0 && evals_since_improvement >= config.patience) break;
  }

  const int64_t final_epoch =
      result.curve.empty() ? start_epoch : result.curve.back().epoch;
  result.last = snapshot_state(model_config, params, m, v, step, final_epoch, rng,
                               best_val_loss);
  if (!have_best) result.best = result.last;

  if (save_files) {
    save_checkpoint(result.last, out_dir + "/ckpt_last.ckpt");
    save_checkpoint(result.best, out_dir + "/ckpt_best.ckpt");
  }
  return result;
}

TransferScheme transfer_scheme_from_name(const std::string& name) {
  if (name == "from_scratch") return TransferScheme::FromScratch;
  if (name == "checkpoint_early") return TransferScheme::CheckpointEarly;
  if (name == "checkpoint_mid") return TransferScheme::CheckpointMid;
  if (name == "checkpoint_best") return TransferScheme::CheckpointBest;
  throw std::runtime_error("unknown transfer scheme: " + name);
}

const char* transfer_scheme_name(TransferScheme s) {
  switch (s) {
    case TransferScheme::FromScratch: return "from_scratch";
    case TransferScheme::CheckpointEarly: return "checkpoint_early";
    case TransferScheme::CheckpointMid: return "checkpoint_mid";
    default: return "checkpoint_best";
  }
}

std::string transfer_checkpoint_path(const std::string& pretrain_dir,
                                     TransferScheme scheme,
                                     const TransferSourceEpochs& epochs) {
  if (scheme == TransferScheme::FromScratch)
    throw std::invalid_argument("from_scratch has no source checkpoint");
  if (scheme == TransferScheme::CheckpointBest)
    return pretrain_dir + "/ckpt_best.ckpt";
  const int epoch = scheme == TransferScheme::CheckpointEarly ? epochs.early
                                                              : epochs.mid;
  return pretrain_dir + "/ckpt_epoch_" + std::to_string(epoch) + ".ckpt";
}

// ---------------------------------------------------------------------------
// generation

namespace {

// deterministic order: higher score first, then lexicographically smaller ids
bool better_hypothesis(double score_a, const std::vector<int>& ids_a,
                       double score_b, const std::vector<int>& ids_b) {
  if (score_a != score_b) return score_a > score_b;
  return ids_a < ids_b;
}

}  // namespace

BeamHypothesis greedy_decode_ids(const ModelConfig& config,
                                 const ParamMap<float>& params,
                                 const std::vector<int>& src, int max_len,
                                 int sos_id, int eos_id) {
  Tensor<float> memory = encode_sequence(config, params, src);
  BeamHypothesis hyp;
  hyp.ids = {sos_id};
  while (static_cast<int>(hyp.ids.size()) < max_len) {
    const auto logprobs = next_token_logprobs(config, params, memory, hyp.ids);
    int best = 0;
    for (int j = 1; j < config.vocab_size; ++j)
      if (logprobs[static_cast<size_t>(j)] > logprobs[static_cast<size_t>(best)])
        best = j;  // ties keep the lowest id
    hyp.ids.push_back(best);
    hyp.logprob_sum += logprobs[static_cast<size_t>(best)];
    if (best == eos_id) break;
  }
  hyp.finished = true;
  return hyp;
}

BeamHypothesis beam_search_ids(const ModelConfig& config,
                               const ParamMap<float>& params,
                               const std::vector<int>& src, int k, int max_len,
                               int sos_id, int eos_id) {
  if (k < 1) throw std::invalid_argument("beam_search: k must be >= 1");
  if (max_len < 2) throw std::invalid_argument("beam_search: max_len must be >= 2");

  Tensor<float> memory = encode_sequence(config, params, src);

  std::vector<BeamHypothesis> finished;
  // the greedy rollout always competes, so beam(k) can never select a
  // hypothesis scoring below beam(1)'s
  finished.push_back(greedy_decode_ids(config, params, src, max_len, sos_id, eos_id));

  std::vector<BeamHypothesis> beams(1);
  beams[0].ids = {sos_id};

  while (!beams.empty()) {
    std::vector<BeamHypothesis> expanded;
    for (const auto& hyp : beams) {
      const auto logprobs = next_token_logprobs(config, params, memory, hyp.ids);

      // top-k tokens, ties toward the lower id
      std::vector<int> token_order(static_cast<size_t>(config.vocab_size));
      for (int j = 0; j < config.vocab_size; ++j) token_order[static_cast<size_t>(j)] = j;
      std::partial_sort(token_order.begin(),
                        token_order.begin() + std::min<size_t>(token_order.size(),
                                                               static_cast<size_t>(k)),
                        token_order.end(), [&](int a, int b) {
                          if (logprobs[size_t(a)] != logprobs[size_t(b)])
                            return logprobs[size_t(a)] > logprobs[size_t(b)];
                          return a < b;
                        });

      for (int c = 0; c < k && c < config.vocab_size; ++c) {
        const int token = token_order[static_cast<size_t>(c)];
        BeamHypothesis next = hyp;
        next.ids.push_back(token);
        next.logprob_sum += logprobs[static_cast<size_t>(token)];
        if (token == eos_id || static_cast<int>(next.ids.size()) >= max_len) {
          next.finished = true;
          finished.push_back(std::move(next));
        } else {
          expanded.push_back(std::move(next));
        }
      }
    }
    std::sort(expanded.begin(), expanded.end(),
              [](const BeamHypothesis& a, const BeamHypothesis& b) {
                return better_hypothesis(a.logprob_sum, a.ids, b.logprob_sum, b.ids);
              });
    if (expanded.size() > static_cast<size_t>(k)) expanded.resize(static_cast<size_t>(k));
    beams = std::move(expanded);
  }

  BeamHypothesis best = finished.front();
  for (const auto& hyp : finished)
    if (better_hypothesis(hyp.normalized(), hyp.ids, best.normalized(), best.ids))
      best = hyp;
  return best;
}

double sequence_logprob(const ModelConfig& config, const ParamMap<float>& params,
                        const std::vector<int>& src, const std::vector<int>& ids) {
  Tensor<float> memory = encode_sequence(config, params, src);
  double sum = 0;
  std::vector<int> prefix = {ids.empty() ? 0 : ids.front()};
  for (size_t i = 1; i < ids.size(); ++i) {
    const auto logprobs = next_token_logprobs(config, params, memory, prefix);
    sum += logprobs[static_cast<size_t>(ids[i])];
    prefix.push_back(ids[i]);
  }
  return sum;
}

std::string beam_search(const ModelConfig& config, const ParamMap<float>& params,
                        const WordPieceModel& tok, const std::string& src_text,
                        int k, int max_len) {
  if (max_len <= 0) max_len = config.max_len;
  std::vector<int> src = tok.encode(src_text, /*add_bounds=*/true);
  if (static_cast<int>(src.size()) > config.max_len) {
    src.resize(static_cast<size_t>(config.max_len));
    src.back() = tok.eos_id();
  }
  auto hyp = beam_search_ids(config, params, src, k, max_len, tok.sos_id(),
                             tok.eos_id());
  return tok.decode(hyp.ids);
}

double evaluate_bleu(const Checkpoint& ckpt, const WordPieceModel& tok,
                     const std::vector<std::pair<std::string, std::string>>& src_ref,
                     int k) {
  if (src_ref.empty()) throw std::invalid_argument("evaluate_bleu: empty test set");
  std::vector<std::pair<TokenList, TokenList>> pairs;
  for (const auto& [src, ref] : src_ref) {
    const std::string hyp = beam_search(ckpt.model_config, ckpt.parameters, tok,
                                        src, k);
    pairs.emplace_back(split_whitespace(hyp), split_whitespace(ref));
  }
  return 100.0 * corpus_bleu(pairs);
}

void write_loss_curve_csv(const TrainResult& result, const std::string& path) {
  std::ostringstream out;
  out << "epoch,train_loss,valid_loss\n";
  char buf[64];
  auto fmt = [&](double v) -> std::string {
    if (std::isnan(v)) return "";
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
  };
  out << "0,," << fmt(result.initial_valid_loss) << "\n";
  for (const auto& row : result.curve)
    out << row.epoch << "," << fmt(row.train_loss) << "," << fmt(row.valid_loss)
        << "\n";
  write_file(path, out.str());
}

}  // namespace rsimp
