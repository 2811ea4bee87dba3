#include <doctest.h>

#include <filesystem>

#include "rsimp/annotation.hpp"
#include "rsimp/io.hpp"
#include "rsimp/rng.hpp"

using namespace rsimp;
namespace fs = std::filesystem;

namespace {

// four models over `count` originals; models "a" and "b" agree on every
// third item, model "d" parrots the original on every fourth
std::map<std::string, std::vector<std::string>> fixture_outputs(
    const std::vector<std::string>& originals) {
  std::map<std::string, std::vector<std::string>> outputs;
  for (size_t i = 0; i < originals.size(); ++i) {
    const std::string tag = std::to_string(i);
    const std::string shared = "shared simplification " + tag;
    outputs["model_a"].push_back(i % 3 == 0 ? shared : "a version " + tag);
    outputs["model_b"].push_back(i % 3 == 0 ? shared : "b version " + tag);
    outputs["model_c"].push_back("c version " + tag);
    outputs["model_d"].push_back(i % 4 == 0 ? originals[i] : "d version " + tag);
  }
  return outputs;
}

std::vector<std::string> make_originals(size_t count) {
  std::vector<std::string> originals;
  for (size_t i = 0; i < count; ++i)
    originals.push_back("original sentence number " + std::to_string(i));
  return originals;
}

}  // namespace

TEST_SUITE("annotation") {
  TEST_CASE("batch export: dedup, shuffle, gate row") {
    auto originals = make_originals(100);
    auto outputs = fixture_outputs(originals);
    auto batch = export_annotation_batch(originals, outputs, 11);

    CHECK(batch.items.size() == 101);  // gate adds one row
    CHECK(batch.items[static_cast<size_t>(batch.gate_position)].is_gate);
    CHECK(batch.items[static_cast<size_t>(batch.gate_position)].variants[0].text ==
          quality_gate_sentence());

    int shared_items = 0;
    for (const auto& item : batch.items) {
      if (item.is_gate) continue;
      for (const auto& v : item.variants) {
        if (v.models.size() == 2) {
          ++shared_items;
          CHECK(v.models == std::vector<std::string>{"model_a", "model_b"});
        }
      }
    }
    CHECK(shared_items == 34);  // every third of 100 items deduplicated

    // same seed reproduces, different seed moves something
    auto again = export_annotation_batch(originals, outputs, 11);
    CHECK(again.gate_position == batch.gate_position);
    REQUIRE(again.items.size() == batch.items.size());
    for (size_t i = 0; i < again.items.size(); ++i) {
      REQUIRE(again.items[i].variants.size() == batch.items[i].variants.size());
      for (size_t v = 0; v < again.items[i].variants.size(); ++v)
        CHECK(again.items[i].variants[v].text == batch.items[i].variants[v].text);
    }
    auto other = export_annotation_batch(originals, outputs, 12);
    bool any_difference = other.gate_position != batch.gate_position;
    for (size_t i = 0; !any_difference && i < other.items.size(); ++i)
      if (other.items[i].variants[0].text != batch.items[i].variants[0].text)
        any_difference = true;
    CHECK(any_difference);

    SUBCASE("count mismatch is rejected") {
      outputs["model_a"].pop_back();
      CHECK_THROWS_AS(export_annotation_batch(originals, outputs, 1),
                      std::invalid_argument);
    }
  }

  TEST_CASE("blinded file hides models, key file inverts exactly") {
    const auto dir = fs::temp_directory_path() / "rsimp_annot";
    fs::create_directories(dir);
    auto originals = make_originals(20);
    auto outputs = fixture_outputs(originals);
    auto batch = export_annotation_batch(originals, outputs, 3);

    const std::string blinded = (dir / "blinded.json").string();
    const std::string key = (dir / "key.json").string();
    write_annotation_files(batch, blinded, key);

    const std::string blinded_text = read_file(blinded);
    for (const char* name : {"model_a", "model_b", "model_c", "model_d", "models"})
      CHECK(blinded_text.find(name) == std::string::npos);

    auto loaded = load_annotation_key(key);
    REQUIRE(loaded.items.size() == batch.items.size());
    CHECK(loaded.gate_position == batch.gate_position);
    int mismatches = 0;
    for (size_t i = 0; i < loaded.items.size(); ++i) {
      for (size_t v = 0; v < loaded.items[i].variants.size(); ++v) {
        if (loaded.items[i].variants[v].text != batch.items[i].variants[v].text ||
            loaded.items[i].variants[v].models != batch.items[i].variants[v].models)
          ++mismatches;
      }
    }
    CHECK(mismatches == 0);
    fs::remove_all(dir);
  }

  TEST_CASE("gate filtering removes exactly the planted offenders") {
    auto originals = make_originals(12);
    auto outputs = fixture_outputs(originals);
    auto batch = export_annotation_batch(originals, outputs, 7);
    const int gate_id = batch.items[static_cast<size_t>(batch.gate_position)].item_id;

    std::vector<Rating> ratings;
    // three raters rate every variant; "sloppy" scores the gate high,
    // "careful" and "steady" catch it
    for (const auto& rater : {"careful", "sloppy", "steady"}) {
      for (const auto& item : batch.items) {
        for (size_t v = 0; v < item.variants.size(); ++v) {
          Rating r;
          r.rater = rater;
          r.item_id = item.item_id;
          r.variant = static_cast<int>(v);
          const bool is_gate = item.item_id == gate_id;
          r.semantics = is_gate ? (std::string(rater) == "sloppy" ? 5 : 1) : 4;
          r.grammar = 4;
          r.simplicity = 3;
          ratings.push_back(r);
        }
      }
    }

    auto report = analyze_annotations(batch, ratings);
    CHECK(report.excluded_raters == std::vector<std::string>{"sloppy"});

    // all surviving ratings are uniform fours
    for (const auto& m : report.models) {
      CHECK(m.mean_semantics == doctest::Approx(4.0));
      CHECK(m.n_good == m.rating_count);
    }
    CHECK(report.alpha_semantics == doctest::Approx(1.0));
  }

  TEST_CASE("clear separation shows up in means and signed-rank tests") {
    auto originals = make_originals(30);
    std::map<std::string, std::vector<std::string>> outputs;
    for (size_t i = 0; i < originals.size(); ++i) {
      outputs["good"].push_back("good text " + std::to_string(i));
      outputs["poor"].push_back("poor text " + std::to_string(i));
    }
    auto batch = export_annotation_batch(originals, outputs, 5);
    const int gate_id = batch.items[static_cast<size_t>(batch.gate_position)].item_id;

    Rng rng(17);
    std::vector<Rating> ratings;
    for (const auto& rater : {"r1", "r2", "r3"}) {
      for (const auto& item : batch.items) {
        for (size_t v = 0; v < item.variants.size(); ++v) {
          Rating r;
          r.rater = rater;
          r.item_id = item.item_id;
          r.variant = static_cast<int>(v);
          if (item.item_id == gate_id) {
            r.semantics = 1;
            r.grammar = 1;
            r.simplicity = 1;
          } else {
            const bool good = item.variants[v].models[0] == "good";
            r.semantics = good ? 5 : 1 + static_cast<int>(rng.below(2));
            r.grammar = good ? 4 + static_cast<int>(rng.below(2)) : 2;
            r.simplicity = good ? 4 : 2;
          }
          ratings.push_back(r);
        }
      }
    }

    auto report = analyze_annotations(batch, ratings);
    REQUIRE(report.models.size() == 2);
    const auto& good = report.models[0].model == "good" ? report.models[0]
                                                        : report.models[1];
    const auto& poor = report.models[0].model == "poor" ? report.models[0]
                                                        : report.models[1];
    CHECK(good.mean_semantics == doctest::Approx(5.0));
    CHECK(good.n_good == good.rating_count);
    CHECK(poor.n_good == 0);
    CHECK(poor.mean_semantics < 2.1);

    bool found = false;
    for (const auto& t : report.tests) {
      if (t.aspect == "semantics") {
        found = true;
        CHECK(t.valid);
        CHECK(t.p_value < 0.001);
      }
    }
    CHECK(found);

    SUBCASE("unknown ids are rejected") {
      ratings[0].item_id = 999;
      CHECK_THROWS_AS(analyze_annotations(batch, ratings), std::runtime_error);
    }
  }

  TEST_CASE("identical-to-original outputs are excluded from simplicity tests") {
    auto originals = make_originals(12);
    std::map<std::string, std::vector<std::string>> outputs;
    for (size_t i = 0; i < originals.size(); ++i) {
      // "copycat" parrots the original everywhere, "writer" never does
      outputs["copycat"].push_back(originals[i]);
      outputs["writer"].push_back("rewritten " + std::to_string(i));
    }
    auto batch = export_annotation_batch(originals, outputs, 9);
    const int gate_id = batch.items[static_cast<size_t>(batch.gate_position)].item_id;

    std::vector<Rating> ratings;
    for (const auto& rater : {"r1", "r2"}) {
      for (const auto& item : batch.items) {
        for (size_t v = 0; v < item.variants.size(); ++v) {
          Rating r{rater, item.item_id, static_cast<int>(v), 1, 4, 3};
          if (item.item_id == gate_id) r.semantics = 1;
          ratings.push_back(r);
        }
      }
    }
    auto report = analyze_annotations(batch, ratings);
    for (const auto& t : report.tests) {
      if (t.aspect == "simplicity") {
        CHECK(t.pairs_used == 0);  // every pair involves a parroted output
        CHECK_FALSE(t.valid);
      } else {
        CHECK(t.pairs_used > 0);
      }
    }
  }

  TEST_CASE("ratings CSV round trip") {
    const auto dir = fs::temp_directory_path() / "rsimp_ratings";
    fs::create_directories(dir);
    std::vector<Rating> ratings = {{"r1", 0, 1, 5, 4, 3}, {"r2", 7, 0, 1, 2, 3}};
    const std::string path = (dir / "ratings.csv").string();
    store_ratings_csv(ratings, path);
    auto loaded = load_ratings_csv(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].rater == "r1");
    CHECK(loaded[0].semantics == 5);
    CHECK(loaded[1].item_id == 7);
    CHECK(loaded[1].simplicity == 3);
    fs::remove_all(dir);
  }
}
