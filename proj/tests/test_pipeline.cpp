#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>

#include "gitfixture.hpp"
#include "rsimp/io.hpp"
#include "rsimp/pipeline.hpp"

using namespace rsimp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("rsimp_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string small_config_toml(const fs::path& repos, const fs::path& out) {
  return "[io]\n"
         "git_dir = \"" + repos.string() + "\"\n"
         "out_dir = \"" + out.string() + "\"\n"
         "[ingest]\n"
         "min_commits = 3\n"
         "[tokenizer]\n"
         "vocab_size = 400\n"
         "[model]\n"
         "heads = 2\n"
         "encoder_layers = 1\n"
         "decoder_layers = 1\n"
         "d_model = 32\n"
         "d_ff = 64\n"
         "max_len = 48\n"
         "[train]\n"
         "learning_rate = 1e-3\n"
         "epochs = 4\n"
         "snapshot_every = 2\n"
         "beam = 2\n"
         "[split]\n"
         "train = 20\n"
         "valid = 6\n";
}

std::map<std::string, std::string> tree_hashes(const fs::path& root) {
  std::map<std::string, std::string> hashes;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    hashes[fs::relative(entry.path(), root).string()] =
        fnv1a64_hex(read_file(entry.path().string()));
  }
  return hashes;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("config parsing: defaults, overrides, validation") {
    const auto dir = temp_dir("config");
    const std::string path = (dir / "config.toml").string();

    write_file(path, "[align]\nwindow = 9\n[train]\nseed = 7\n");
    auto config = PipelineConfig::load(path);
    CHECK(config.align.window == 9);
    CHECK(config.train.seed == 7);
    // untouched values keep the reference defaults
    CHECK(config.ingest.min_stars == 10);
    CHECK(config.ingest.min_commits == 100);
    CHECK(config.align.tfidf_threshold == 0.5);
    CHECK(config.align.bleu_lo == 0.1);
    CHECK(config.align.bleu_hi == 0.9);
    CHECK(config.tokenizer.vocab_size == 40000);
    CHECK(config.model.d_model == 512);
    CHECK(config.model.heads == 8);
    CHECK(config.train.learning_rate == 1e-5);
    CHECK(config.train.batch_size == 8);
    CHECK(config.split.train == 28000);

    SUBCASE("invalid threshold fails before any work") {
      write_file(path, "[align]\ntfidf_threshold = 1.5\n");
      CHECK_THROWS_WITH_AS(PipelineConfig::load(path),
                           doctest::Contains("tfidf_threshold"), std::runtime_error);
    }
    SUBCASE("unknown keys are rejected") {
      write_file(path, "[align]\nwindoww = 9\n");
      CHECK_THROWS_WITH_AS(PipelineConfig::load(path), doctest::Contains("windoww"),
                           std::runtime_error);
    }
    SUBCASE("RS_SEED overrides the configured seed") {
      write_file(path, "[train]\nseed = 7\n");
      setenv("RS_SEED", "99", 1);
      auto c = PipelineConfig::load(path);
      unsetenv("RS_SEED");
      CHECK(c.train.seed == 99);
    }
    fs::remove_all(dir);
  }

  TEST_CASE("masked document JSONL round trip") {
    const auto dir = temp_dir("maskedio");
    const std::string path = (dir / "masked.jsonl").string();

    MaskedDocRecord rec;
    rec.repo_id = "r";
    rec.sha = "s";
    rec.side = "simple";
    rec.sentences = {"a <url> here", "second line"};
    rec.spans = {{MaskToken::Url, "https://x.y", 2}};
    store_masked({rec}, path);
    auto loaded = load_masked(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].sentences == rec.sentences);
    CHECK(loaded[0].spans.size() == 1);
    CHECK(loaded[0].spans[0].original == "https://x.y");
    CHECK(loaded[0].spans[0].char_offset == 2);
    CHECK(mask_surface(loaded[0].spans[0].token) == "<url>");
    fs::remove_all(dir);
  }

  TEST_CASE("full run on a small fixture, rerun byte-identical") {
    const auto root = temp_dir("pipeline_run");
    const auto repos = root / "repos";
    fs::create_directories(repos);
    for (int i = 0; i < 5; ++i) gitfixture::make_repo(repos, i);

    const std::string config_path = (root / "config.toml").string();
    write_file(config_path, small_config_toml(repos, root / "out1"));
    auto config = PipelineConfig::load(config_path);
    REQUIRE(run_pipeline(config) == 0);

    const fs::path out1 = root / "out1";
    for (const char* artifact :
         {"pairs.jsonl", "masked.jsonl", "aligned.jsonl", "stats.json", "vocab.txt",
          "generations.jsonl", "bleu.csv", "manifest.json",
          "train/ckpt_best.ckpt", "train/ckpt_last.ckpt", "train/losscurve.csv",
          "train/ckpt_epoch_2.ckpt", "train/ckpt_epoch_4.ckpt"}) {
      CAPTURE(artifact);
      CHECK(fs::exists(out1 / artifact));
    }

    // masked sentences really contain no unmasked URLs (the spans keep the
    // originals by design)
    for (const auto& doc : load_masked((out1 / "masked.jsonl").string()))
      for (const auto& sentence : doc.sentences) {
        CHECK(sentence.find("http://") == std::string::npos);
        CHECK(sentence.find("https://") == std::string::npos);
      }

    // bleu.csv carries one row per snapshot epoch
    auto bleu_lines = read_lines((out1 / "bleu.csv").string());
    REQUIRE(bleu_lines.size() >= 4);  // header + epochs 0,2,4
    CHECK(bleu_lines[0] == "scheme,epoch,bleu_x100");
    CHECK(bleu_lines[1].rfind("from_scratch,0,", 0) == 0);
    CHECK(bleu_lines[2].rfind("from_scratch,2,", 0) == 0);
    CHECK(bleu_lines[3].rfind("from_scratch,4,", 0) == 0);

    // the manifest names every stage in order
    auto manifest = read_file((out1 / "manifest.json").string());
    for (const char* stage : {"harvest", "preprocess", "align", "stats",
                              "train-tokenizer", "train", "generate", "bleu"})
      CHECK(manifest.find("\"" + std::string(stage) + "\"") != std::string::npos);

    // identical inputs and seed give a byte-identical second run
    config.io.out_dir = (root / "out2").string();
    REQUIRE(run_pipeline(config) == 0);
    CHECK(tree_hashes(out1) == tree_hashes(root / "out2"));

    SUBCASE("a failing stage reports cleanly and keeps the manifest") {
      PipelineConfig broken = config;
      broken.io.git_dir = (root / "missing").string();
      broken.io.out_dir = (root / "out3").string();
      CHECK(run_pipeline(broken) == 1);
      CHECK_FALSE(fs::exists(root / "out3" / "pairs.jsonl"));
    }
    fs::remove_all(root);
  }
}
