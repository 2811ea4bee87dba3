#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsimp/align.hpp"
#include "rsimp/ingest.hpp"
#include "rsimp/mask.hpp"
#include "rsimp/neural.hpp"
#include "rsimp/train.hpp"

namespace rsimp {

/// End-to-end configuration; defaults reproduce the reference settings
/// (stars/commits thresholds, window 50, distance 0.5, BLEU band 0.1..0.9,
/// vocabulary 40k, 8x6+6x512 model, Adam at 1e-5, batch 8).
struct PipelineConfig {
  struct Io {
    std::string git_dir;     // harvest from local clones
    std::string pairs_in;    // or start from an existing pairs JSONL
    std::string wiki_pairs;  // optional general-domain pairs JSONL
    std::string out_dir = "out";
  } io;

  struct Ingest {
    int64_t min_stars = 10;
    int64_t min_commits = 100;
    std::string keywords_path;  // empty = built-in list
  } ingest;

  struct Align {
    int window = 50;
    double tfidf_threshold = 0.5;
    double bleu_lo = 0.1;
    double bleu_hi = 0.9;
    int max_multiplicity = 3;
    int max_words = 40;
    std::string scorer = "tfidf";  // or "file"
    std::string score_file;
  } align;

  struct Tokenizer {
    int vocab_size = 40000;
  } tokenizer;

  ModelConfig model;

  struct Train {
    double learning_rate = 1e-5;
    int batch_size = 8;
    int epochs = 50;            // main (sw) training epochs
    int pretrain_epochs = 40;   // wiki pretraining epochs
    int snapshot_every = 4;
    int pretrain_snapshot_every = 1;
    std::string transfer_scheme = "from_scratch";
    int early_epoch = 3;
    int mid_epoch = 12;
    bool reset_optimizer = false;
    uint64_t seed = 42;
    double weight_decay = 0;
    int beam = 5;
  } train;

  struct Splits {
    int64_t train = 28000;
    int64_t valid = 3500;
  } split;

  /// Parse the TOML config file ([section] headers, key = value). Unknown
  /// keys and out-of-range values are errors; the RS_SEED environment
  /// variable overrides the seed.
  static PipelineConfig load(const std::string& path);
  void validate() const;
};

// one masked side of a document pair
struct MaskedDocRecord {
  std::string repo_id, sha, side;  // side: "difficult" | "simple"
  std::vector<std::string> sentences;
  std::vector<MaskSpan> spans;
};

void store_masked(const std::vector<MaskedDocRecord>& docs, const std::string& path);
std::vector<MaskedDocRecord> load_masked(const std::string& path);

// ---------------------------------------------------------------------------
// pipeline stages (each reads/writes the named artifacts)

std::vector<DocumentPair> stage_harvest(const PipelineConfig& config,
                                        const std::string& out_pairs,
                                        std::vector<std::string>* warnings = nullptr);

std::vector<MaskedDocRecord> stage_preprocess(const std::string& in_pairs,
                                              const std::string& out_masked);

std::vector<AlignedPair> stage_align(const PipelineConfig& config,
                                     const std::string& in_masked,
                                     const std::string& out_aligned);

std::string stage_stats(const std::string& in_aligned, const std::string& out_json);

void stage_train_tokenizer(const PipelineConfig& config,
                           const std::vector<std::string>& in_aligned_files,
                           const std::string& out_vocab);

/// Pretrains on wiki pairs when configured, then trains or fine-tunes on the
/// aligned corpus with snapshots on the configured cadence.
TrainResult stage_train(const PipelineConfig& config, const std::string& in_aligned,
                        const std::string& in_vocab, const std::string& out_dir);

void stage_generate(const PipelineConfig& config, const std::string& in_aligned,
                    const std::string& in_vocab, const std::string& ckpt_path,
                    const std::string& out_jsonl);

/// BLEU of every training snapshot on the test split -> CSV rows
/// scheme,epoch,bleu_x100 (epoch 0 scores the pre-training state).
void stage_bleu(const PipelineConfig& config, const std::string& in_aligned,
                const std::string& in_vocab, const std::string& train_dir,
                const std::string& out_csv);

/// harvest -> preprocess -> align -> stats -> train-tokenizer -> train ->
/// generate -> bleu, writing everything plus manifest.json under
/// config.io.out_dir. Returns 0 on success; on a stage failure returns 1
/// with the manifest covering the completed stages.
int run_pipeline(const PipelineConfig& config);

}  // namespace rsimp
