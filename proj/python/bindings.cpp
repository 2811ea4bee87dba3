// python bindings for the main pipeline operations

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "rsimp/align.hpp"
#include "rsimp/checkpoint.hpp"
#include "rsimp/ingest.hpp"
#include "rsimp/mask.hpp"
#include "rsimp/textmetrics.hpp"
#include "rsimp/train.hpp"
#include "rsimp/wordpiece.hpp"

namespace py = pybind11;
using namespace rsimp;

namespace {

AlphaMetric metric_from(const std::string& name) {
  if (name == "interval") return AlphaMetric::Interval;
  if (name == "ordinal") return AlphaMetric::Ordinal;
  throw std::invalid_argument("metric must be 'interval' or 'ordinal'");
}

}  // namespace

PYBIND11_MODULE(_rsimp, m) {
  m.doc() = "README simplification pipeline: masking, alignment, metrics, "
            "subword tokenization and generation";

  // ---- cleaning / masking -------------------------------------------------
  m.def("clean", &clean, py::arg("text"));
  m.def(
      "mask",
      [](const std::string& markdown) {
        MaskedDocument doc = mask(markdown);
        py::list spans;
        for (const auto& s : doc.spans)
          spans.append(py::make_tuple(mask_surface(s.token), s.original,
                                      s.char_offset));
        py::dict out;
        out["text"] = doc.text;
        out["spans"] = spans;
        out["warnings"] = doc.warnings;
        return out;
      },
      py::arg("markdown"));
  m.def(
      "split_sentences",
      [](const std::string& masked_text) {
        std::vector<std::string> out;
        for (const auto& s : split_sentences(masked_text)) out.push_back(s.text);
        return out;
      },
      py::arg("masked_text"));
  m.def("alphabetic_word_count", &alphabetic_word_count, py::arg("sentence"));

  // ---- ingest helpers -----------------------------------------------------
  m.def(
      "keyword_match",
      [](const std::string& message, std::optional<std::vector<std::string>> keywords) {
        const KeywordSet set =
            keywords ? KeywordSet(*keywords) : KeywordSet();
        return keyword_match(message, set);
      },
      py::arg("message"), py::arg("keywords") = py::none());

  // ---- tf-idf ---------------------------------------------------------------
  py::class_<TfidfModel>(m, "TfidfModel")
      .def_static("fit", &fit_tfidf, py::arg("corpus"))
      .def_property_readonly("document_count",
                             [](const TfidfModel& t) { return t.document_count; })
      .def("distance",
           [](const TfidfModel& t, const std::string& a, const std::string& b) {
             return cosine_distance(vectorize(t, a), vectorize(t, b));
           })
      .def("similarity",
           [](const TfidfModel& t, const std::string& a, const std::string& b) {
             return 1.0 - cosine_distance(vectorize(t, a), vectorize(t, b));
           });

  // ---- BLEU ----------------------------------------------------------------
  m.def(
      "sentence_bleu",
      [](const TokenList& candidate, const TokenList& reference,
         std::optional<std::vector<double>> weights) {
        BleuWeights w;
        if (weights) {
          if (weights->size() != 4)
            throw std::invalid_argument("weights must have 4 entries");
          std::copy(weights->begin(), weights->end(), w.w.begin());
        }
        return sentence_bleu(candidate, reference, w);
      },
      py::arg("candidate"), py::arg("reference"), py::arg("weights") = py::none());
  m.def("corpus_bleu", &corpus_bleu, py::arg("pairs"));

  // ---- annotation statistics -----------------------------------------------
  m.def(
      "krippendorff_alpha",
      [](const std::vector<std::vector<std::optional<int>>>& rows,
         const std::string& metric) {
        RatingTable table;
        table.rows = rows;
        return krippendorff_alpha(table, metric_from(metric));
      },
      py::arg("ratings"), py::arg("metric") = "interval");
  m.def(
      "wilcoxon_signed_rank",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        auto res = wilcoxon_signed_rank(x, y);
        return py::make_tuple(res.statistic, res.p_value);
      },
      py::arg("x"), py::arg("y"));

  // ---- wordpiece -------------------------------------------------------------
  py::class_<WordPieceModel>(m, "WordPiece")
      .def_static("train", &WordPieceModel::train, py::arg("corpus"),
                  py::arg("vocab_size"),
                  py::arg("specials") = WordPieceModel::default_specials())
      .def_static("load", &WordPieceModel::load, py::arg("path"),
                  py::arg("n_specials") = 8)
      .def("save", &WordPieceModel::save, py::arg("path"))
      .def("encode", &WordPieceModel::encode, py::arg("text"),
           py::arg("add_bounds") = false)
      .def("decode", &WordPieceModel::decode, py::arg("ids"))
      .def("__len__", &WordPieceModel::size)
      .def_property_readonly("tokens", &WordPieceModel::tokens)
      .def_property_readonly("specials", &WordPieceModel::specials);

  // ---- alignment --------------------------------------------------------------
  m.def(
      "align_documents",
      [](const std::vector<std::string>& simple,
         const std::vector<std::string>& regular, int window,
         double tfidf_threshold, double bleu_lo, double bleu_hi) {
        AlignmentProblem problem;
        for (size_t i = 0; i < simple.size(); ++i)
          problem.simple.push_back({simple[i], static_cast<int>(i)});
        for (size_t i = 0; i < regular.size(); ++i)
          problem.regular.push_back({regular[i], static_cast<int>(i)});

        std::vector<std::string> corpus = simple;
        corpus.insert(corpus.end(), regular.begin(), regular.end());
        const TfidfModel model = fit_tfidf(corpus);
        TfidfScorer scorer(&model, 1.0 - tfidf_threshold);
        AlignConfig config;
        config.window = window;
        config.tfidf_threshold = tfidf_threshold;
        config.bleu_lo = bleu_lo;
        config.bleu_hi = bleu_hi;

        py::list out;
        for (const auto& p : align_document(problem, scorer, model, config, "doc")) {
          py::dict d;
          d["pair_id"] = p.pair_id;
          d["regular"] = p.regular;
          d["simple"] = p.simple;
          d["tfidf_distance"] = p.tfidf_distance;
          d["bleu"] = p.bleu;
          out.append(d);
        }
        return out;
      },
      py::arg("simple"), py::arg("regular"), py::arg("window") = 50,
      py::arg("tfidf_threshold") = 0.5, py::arg("bleu_lo") = 0.1,
      py::arg("bleu_hi") = 0.9);

  // ---- generation ----------------------------------------------------------
  m.def(
      "generate",
      [](const std::string& checkpoint_path, const std::string& vocab_path,
         const std::string& text, int beam) {
        const Checkpoint ckpt = load_checkpoint(checkpoint_path);
        const WordPieceModel tok = WordPieceModel::load(vocab_path);
        return beam_search(ckpt.model_config, ckpt.parameters, tok, text, beam);
      },
      py::arg("checkpoint_path"), py::arg("vocab_path"), py::arg("text"),
      py::arg("beam") = 5);
}
