// rsimp: README simplification corpus + training pipeline
//
// subcommands: harvest, preprocess, align, sweep, stats, train-tokenizer,
// train, finetune, generate, bleu, export-annotation, analyze-annotation, run

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsimp/annotation.hpp"
#include "rsimp/checkpoint.hpp"
#include "rsimp/io.hpp"
#include "rsimp/pipeline.hpp"

using namespace rsimp;

namespace {

uint64_t resolve_seed(uint64_t seed) {
  if (const char* env = std::getenv("RS_SEED")) return std::stoull(env);
  return seed;
}

std::vector<double> parse_grid(const std::string& spec) {
  // start:end:step, inclusive end
  double lo, hi, step;
  char c1, c2;
  std::istringstream ss(spec);
  if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
    throw std::runtime_error("bad grid spec (want start:end:step): " + spec);
  std::vector<double> grid;
  for (double t = lo; t <= hi + 1e-12; t += step) grid.push_back(t);
  return grid;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) parts.push_back(item);
  return parts;
}

void add_model_options(CLI::App* cmd, ModelConfig& m) {
  cmd->add_option("--heads", m.heads);
  cmd->add_option("--enc-layers", m.encoder_layers);
  cmd->add_option("--dec-layers", m.decoder_layers);
  cmd->add_option("--d-model", m.d_model);
  cmd->add_option("--d-ff", m.d_ff);
  cmd->add_option("--dropout", m.dropout);
  cmd->add_option("--max-len", m.max_len);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"README simplification pipeline"};
  app.require_subcommand(1);

  try {
    // ---- harvest ----------------------------------------------------------
    auto* harvest = app.add_subcommand("harvest", "collect README pairs");
    PipelineConfig hc;
    std::string harvest_out = "pairs.jsonl";
    harvest->add_option("--git-dir", hc.io.git_dir);
    harvest->add_option("--in", hc.io.pairs_in);
    harvest->add_option("--keywords", hc.ingest.keywords_path);
    harvest->add_option("--min-stars", hc.ingest.min_stars);
    harvest->add_option("--min-commits", hc.ingest.min_commits);
    harvest->add_option("--out", harvest_out);
    harvest->callback([&] {
      std::vector<std::string> warnings;
      auto pairs = stage_harvest(hc, harvest_out, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "wrote " << pairs.size() << " pairs to " << harvest_out << "\n";
    });

    // ---- preprocess -------------------------------------------------------
    auto* preprocess = app.add_subcommand("preprocess", "clean, mask and split");
    std::string pre_in, pre_out = "masked.jsonl";
    preprocess->add_option("--in", pre_in)->required();
    preprocess->add_option("--out", pre_out);
    preprocess->callback([&] {
      auto docs = stage_preprocess(pre_in, pre_out);
      std::cout << "wrote " << docs.size() << " masked documents to " << pre_out
                << "\n";
    });

    // ---- align ------------------------------------------------------------
    auto* align = app.add_subcommand("align", "build the sentence-level corpus");
    PipelineConfig ac;
    std::string align_in, align_out = "aligned.jsonl";
    align->add_option("--in", align_in)->required();
    align->add_option("--scorer", ac.align.scorer);
    align->add_option("--score-file", ac.align.score_file);
    align->add_option("--window", ac.align.window);
    align->add_option("--tfidf-threshold", ac.align.tfidf_threshold);
    align->add_option("--bleu-lo", ac.align.bleu_lo);
    align->add_option("--bleu-hi", ac.align.bleu_hi);
    align->add_option("--train", ac.split.train);
    align->add_option("--valid", ac.split.valid);
    align->add_option("--seed", ac.train.seed);
    align->add_option("--out", align_out);
    align->callback([&] {
      ac.train.seed = resolve_seed(ac.train.seed);
      auto pairs = stage_align(ac, align_in, align_out);
      std::cout << "wrote " << pairs.size() << " aligned pairs to " << align_out
                << "\n";
    });

    // ---- sweep ------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "distance-threshold sweep");
    std::string sweep_labeled, sweep_grid = "0.1:0.9:0.05", sweep_out;
    sweep->add_option("--labeled", sweep_labeled)->required();
    sweep->add_option("--grid", sweep_grid);
    sweep->add_option("--out", sweep_out);
    sweep->callback([&] {
      auto labeled = load_labeled_pairs(sweep_labeled);
      std::vector<std::string> corpus;
      for (const auto& p : labeled) {
        corpus.push_back(p.simple);
        corpus.push_back(p.regular);
      }
      auto result = threshold_sweep(labeled, fit_tfidf(corpus), parse_grid(sweep_grid));
      std::ostringstream csv;
      csv << "threshold,precision,recall,f1,accuracy\n";
      char buf[160];
      for (const auto& pt : result) {
        std::snprintf(buf, sizeof(buf), "%.4g,%.9g,%.9g,%.9g,%.9g\n", pt.threshold,
                      pt.precision, pt.recall, pt.f1, pt.accuracy);
        csv << buf;
      }
      if (!sweep_out.empty()) write_file(sweep_out, csv.str());
      std::cout << csv.str();
    });

    // ---- stats ------------------------------------------------------------
    auto* stats = app.add_subcommand("stats", "corpus statistics report");
    std::string stats_in, stats_out = "stats.json";
    stats->add_option("--in", stats_in)->required();
    stats->add_option("--out", stats_out);
    stats->callback([&] { std::cout << stage_stats(stats_in, stats_out); });

    // ---- train-tokenizer --------------------------------------------------
    auto* train_tok = app.add_subcommand("train-tokenizer", "fit the subword vocabulary");
    PipelineConfig tkc;
    std::string tok_in, tok_out = "vocab.txt";
    train_tok->add_option("--in", tok_in)->required();
    train_tok->add_option("--vocab-size", tkc.tokenizer.vocab_size);
    train_tok->add_option("--out", tok_out);
    train_tok->callback([&] {
      stage_train_tokenizer(tkc, split_commas(tok_in), tok_out);
      std::cout << "wrote vocabulary to " << tok_out << "\n";
    });

    // ---- train ------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "train on the aligned corpus");
    PipelineConfig trc;
    trc.model = ModelConfig::desk(0);
    std::string train_in, train_vocab, train_out = "train";
    train_cmd->add_option("--in", train_in)->required();
    train_cmd->add_option("--vocab", train_vocab)->required();
    train_cmd->add_option("--out", train_out);
    train_cmd->add_option("--epochs", trc.train.epochs);
    train_cmd->add_option("--lr", trc.train.learning_rate);
    train_cmd->add_option("--batch-size", trc.train.batch_size);
    train_cmd->add_option("--snapshot-every", trc.train.snapshot_every);
    train_cmd->add_option("--seed", trc.train.seed);
    train_cmd->add_option("--weight-decay", trc.train.weight_decay);
    add_model_options(train_cmd, trc.model);
    train_cmd->callback([&] {
      trc.train.seed = resolve_seed(trc.train.seed);
      trc.train.transfer_scheme = "from_scratch";
      auto result = stage_train(trc, train_in, train_vocab, train_out);
      std::cout << "trained " << result.curve.size() << " epochs, best valid loss "
                << result.best.best_val_loss << "\n";
    });

    // ---- finetune ---------------------------------------------------------
    auto* finetune = app.add_subcommand("finetune", "continue from a checkpoint");
    std::string ft_base, ft_pretrain_dir, ft_scheme = "checkpoint_best";
    std::string ft_in, ft_vocab, ft_out = "finetune";
    PipelineConfig ftc;
    ftc.train.epochs = 24;
    int ft_early = 3, ft_mid = 12;
    bool ft_reset = false;
    finetune->add_option("--base", ft_base);
    finetune->add_option("--pretrain-dir", ft_pretrain_dir);
    finetune->add_option("--scheme", ft_scheme);
    finetune->add_option("--early-epoch", ft_early);
    finetune->add_option("--mid-epoch", ft_mid);
    finetune->add_option("--in", ft_in)->required();
    finetune->add_option("--vocab", ft_vocab)->required();
    finetune->add_option("--out", ft_out);
    finetune->add_option("--epochs", ftc.train.epochs);
    finetune->add_option("--lr", ftc.train.learning_rate);
    finetune->add_option("--batch-size", ftc.train.batch_size);
    finetune->add_option("--snapshot-every", ftc.train.snapshot_every);
    finetune->add_option("--seed", ftc.train.seed);
    finetune->add_flag("--reset-optimizer", ft_reset);
    finetune->callback([&] {
      std::string base_path = ft_base;
      if (base_path.empty()) {
        if (ft_pretrain_dir.empty())
          throw std::runtime_error("finetune: give --base or --pretrain-dir");
        base_path = transfer_checkpoint_path(
            ft_pretrain_dir, transfer_scheme_from_name(ft_scheme),
            {.early = ft_early, .mid = ft_mid, .best = 0});
      }
      Checkpoint base = load_checkpoint(base_path);
      const WordPieceModel tok = WordPieceModel::load(ft_vocab);
      if (static_cast<int>(tok.size()) != base.model_config.vocab_size)
        throw std::runtime_error("finetune: vocabulary size mismatch");

      TrainConfig tc;
      tc.learning_rate = ftc.train.learning_rate;
      tc.batch_size = ftc.train.batch_size;
      tc.epochs = ftc.train.epochs;
      tc.snapshot_every = ftc.train.snapshot_every;
      tc.seed = resolve_seed(ftc.train.seed);

      std::vector<TrainItem> train_items, valid_items;
      for (const auto& p : load_aligned(ft_in)) {
        if (p.split == Split::Test) continue;
        std::string src;
        for (const auto& r : p.regular) {
          if (!src.empty()) src += " ";
          src += r;
        }
        auto item = make_train_item(tok, src, p.simple, base.model_config.max_len);
        (p.split == Split::Valid ? valid_items : train_items).push_back(item);
      }
      auto result = train(base.model_config, tc, train_items, valid_items, ft_out,
                          &base, /*resume_epochs=*/false, ft_reset);
      write_loss_curve_csv(result, ft_out + "/losscurve.csv");
      std::cout << "fine-tuned " << result.curve.size() << " epochs from "
                << base_path << "\n";
    });

    // ---- generate ---------------------------------------------------------
    auto* generate = app.add_subcommand("generate", "beam-search simplification");
    PipelineConfig gc;
    std::string gen_ckpt, gen_vocab, gen_in, gen_text, gen_out = "generations.jsonl";
    generate->add_option("--ckpt", gen_ckpt)->required();
    generate->add_option("--vocab", gen_vocab)->required();
    generate->add_option("--in", gen_in);
    generate->add_option("--text", gen_text);
    generate->add_option("--beam", gc.train.beam);
    generate->add_option("--out", gen_out);
    generate->callback([&] {
      if (!gen_text.empty()) {
        const Checkpoint ckpt = load_checkpoint(gen_ckpt);
        const WordPieceModel tok = WordPieceModel::load(gen_vocab);
        std::cout << beam_search(ckpt.model_config, ckpt.parameters, tok, gen_text,
                                 gc.train.beam)
                  << "\n";
        return;
      }
      if (gen_in.empty())
        throw std::runtime_error("generate: give --in or --text");
      stage_generate(gc, gen_in, gen_vocab, gen_ckpt, gen_out);
      std::cout << "wrote generations to " << gen_out << "\n";
    });

    // ---- bleu -------------------------------------------------------------
    auto* bleu = app.add_subcommand("bleu", "score snapshots on the test split");
    PipelineConfig bc;
    std::string bleu_in, bleu_vocab, bleu_train_dir, bleu_out = "bleu.csv";
    std::string bleu_scheme = "from_scratch";
    bleu->add_option("--in", bleu_in)->required();
    bleu->add_option("--vocab", bleu_vocab)->required();
    bleu->add_option("--train-dir", bleu_train_dir)->required();
    bleu->add_option("--scheme", bleu_scheme);
    bleu->add_option("--snapshot-every", bc.train.snapshot_every);
    bleu->add_option("--beam", bc.train.beam);
    bleu->add_option("--out", bleu_out);
    bleu->callback([&] {
      bc.train.transfer_scheme = bleu_scheme;
      stage_bleu(bc, bleu_in, bleu_vocab, bleu_train_dir, bleu_out);
      std::cout << read_file(bleu_out);
    });

    // ---- export-annotation -------------------------------------------------
    auto* exp = app.add_subcommand("export-annotation", "build a blinded survey batch");
    std::string exp_originals, exp_blinded = "blinded.json", exp_key = "key.json";
    std::vector<std::string> exp_models;
    uint64_t exp_seed = 42;
    exp->add_option("--originals", exp_originals)->required();
    exp->add_option("--model", exp_models)
        ->description("NAME=FILE with one output per original line (repeatable)")
        ->required();
    exp->add_option("--seed", exp_seed);
    exp->add_option("--out-blinded", exp_blinded);
    exp->add_option("--out-key", exp_key);
    exp->callback([&] {
      const auto originals = read_lines(exp_originals);
      std::map<std::string, std::vector<std::string>> outputs;
      for (const auto& spec : exp_models) {
        const size_t eq = spec.find('=');
        if (eq == std::string::npos)
          throw std::runtime_error("--model expects NAME=FILE, got " + spec);
        outputs[spec.substr(0, eq)] = read_lines(spec.substr(eq + 1));
      }
      auto batch = export_annotation_batch(originals, outputs, resolve_seed(exp_seed));
      write_annotation_files(batch, exp_blinded, exp_key);
      std::cout << "wrote " << batch.items.size() << " survey rows (gate at "
                << batch.gate_position << ")\n";
    });

    // ---- analyze-annotation ------------------------------------------------
    auto* analyze = app.add_subcommand("analyze-annotation", "score survey results");
    std::string an_key, an_ratings, an_out = "annotation_report.json";
    analyze->add_option("--key", an_key)->required();
    analyze->add_option("--ratings", an_ratings)
        ->description("comma-separated ratings CSV files")
        ->required();
    analyze->add_option("--out", an_out);
    analyze->callback([&] {
      auto key = load_annotation_key(an_key);
      std::vector<Rating> ratings;
      for (const auto& path : split_commas(an_ratings)) {
        auto part = load_ratings_csv(path);
        ratings.insert(ratings.end(), part.begin(), part.end());
      }
      const std::string report = annotation_report_json(analyze_annotations(key, ratings));
      write_file(an_out, report);
      std::cout << report;
    });

    // ---- run ---------------------------------------------------------------
    auto* run = app.add_subcommand("run", "full pipeline from a config file");
    std::string run_config, run_out_override;
    run->add_option("--config", run_config)->required();
    run->add_option("--out", run_out_override);
    run->callback([&] {
      PipelineConfig config = PipelineConfig::load(run_config);
      if (!run_out_override.empty()) config.io.out_dir = run_out_override;
      const int status = run_pipeline(config);
      if (status != 0) std::exit(status);
      std::cout << "pipeline complete, artifacts under " << config.io.out_dir << "\n";
    });

    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
