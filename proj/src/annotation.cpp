#include "rsimp/annotation.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rsimp/io.hpp"
#include "rsimp/rng.hpp"
#include "rsimp/textmetrics.hpp"

using nlohmann::json;

namespace rsimp {

const std::string& quality_gate_sentence() {
  static const std::string gate =
      "The purple monkey dishwasher sang shenanigans on the moon with unicorns "
      "and marshmallow socks.";
  return gate;
}

AnnotationBatch export_annotation_batch(
    const std::vector<std::string>& originals,
    const std::map<std::string, std::vector<std::string>>& model_outputs,
    uint64_t seed) {
  for (const auto& [model, outputs] : model_outputs)
    if (outputs.size() != originals.size())
      throw std::invalid_argument("model \"" + model + "\" supplied " +
                                  std::to_string(outputs.size()) + " outputs for " +
                                  std::to_string(originals.size()) + " originals");

  Rng rng(seed);
  AnnotationBatch batch;
  batch.gate_sentence = quality_gate_sentence();

  for (size_t i = 0; i < originals.size(); ++i) {
    AnnotationItem item;
    item.original = originals[i];
    // identical outputs are reduced to one variant carrying all their models
    std::map<std::string, std::vector<std::string>> by_text;
    for (const auto& [model, outputs] : model_outputs)
      by_text[outputs[i]].push_back(model);
    for (auto& [text, models] : by_text) {
      std::sort(models.begin(), models.end());
      item.variants.push_back({text, models});
    }
    rng.shuffle(item.variants);
    batch.items.push_back(std::move(item));
  }

  // the gate masquerades as one more simplification of a random original
  AnnotationItem gate;
  gate.is_gate = true;
  gate.original =
      originals.empty() ? "" : originals[rng.below(originals.size())];
  gate.variants.push_back({batch.gate_sentence, {"__gate__"}});
  batch.gate_position = static_cast<int>(rng.below(batch.items.size() + 1));
  batch.items.insert(batch.items.begin() + batch.gate_position, std::move(gate));

  for (size_t i = 0; i < batch.items.size(); ++i)
    batch.items[i].item_id = static_cast<int>(i);
  return batch;
}

void write_annotation_files(const AnnotationBatch& batch,
                            const std::string& blinded_path,
                            const std::string& key_path) {
  json blinded = json::array();
  json key = json::array();
  for (const auto& item : batch.items) {
    json b;
    b["item_id"] = item.item_id;
    b["original"] = item.original;
    json texts = json::array();
    for (const auto& v : item.variants) texts.push_back(v.text);
    b["variants"] = texts;
    blinded.push_back(b);

    json k = b;
    json models = json::array();
    for (const auto& v : item.variants) models.push_back(v.models);
    k["models"] = models;
    k["is_gate"] = item.is_gate;
    key.push_back(k);
  }
  json key_root;
  key_root["items"] = key;
  key_root["gate_position"] = batch.gate_position;
  key_root["gate_sentence"] = batch.gate_sentence;

  write_file(blinded_path, blinded.dump(2) + "\n");
  write_file(key_path, key_root.dump(2) + "\n");
}

AnnotationBatch load_annotation_key(const std::string& key_path) {
  const json root = json::parse(read_file(key_path));
  AnnotationBatch batch;
  batch.gate_position = root.at("gate_position").get<int>();
  batch.gate_sentence = root.at("gate_sentence").get<std::string>();
  for (const auto& k : root.at("items")) {
    AnnotationItem item;
    item.item_id = k.at("item_id").get<int>();
    item.original = k.at("original").get<std::string>();
    item.is_gate = k.at("is_gate").get<bool>();
    const auto& texts = k.at("variants");
    const auto& models = k.at("models");
    for (size_t i = 0; i < texts.size(); ++i) {
      AnnotationVariant v;
      v.text = texts[i].get<std::string>();
      for (const auto& m : models[i]) v.models.push_back(m.get<std::string>());
      item.variants.push_back(std::move(v));
    }
    batch.items.push_back(std::move(item));
  }
  return batch;
}

std::vector<Rating> load_ratings_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty ratings file: " + path);
  std::vector<Rating> ratings;
  for (size_t i = 1; i < lines.size(); ++i) {  // skip header
    if (lines[i].empty()) continue;
    std::istringstream ss(lines[i]);
    std::string field;
    Rating r;
    auto next = [&]() {
      if (!std::getline(ss, field, ','))
        throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                                 ": expected 6 comma-separated columns");
      return field;
    };
    r.rater = next();
    r.item_id = std::stoi(next());
    r.variant = std::stoi(next());
    r.semantics = std::stoi(next());
    r.grammar = std::stoi(next());
    r.simplicity = std::stoi(next());
    ratings.push_back(std::move(r));
  }
  return ratings;
}

void store_ratings_csv(const std::vector<Rating>& ratings, const std::string& path) {
  std::ostringstream out;
  out << "rater,item_id,variant,semantics,grammar,simplicity\n";
  for (const auto& r : ratings)
    out << r.rater << "," << r.item_id << "," << r.variant << "," << r.semantics
        << "," << r.grammar << "," << r.simplicity << "\n";
  write_file(path, out.str());
}

AnnotationReport analyze_annotations(const AnnotationBatch& key,
                                     const std::vector<Rating>& ratings) {
  for (const auto& r : ratings) {
    if (r.item_id < 0 || static_cast<size_t>(r.item_id) >= key.items.size())
      throw std::runtime_error("rating references unknown item id " +
                               std::to_string(r.item_id));
    const auto& item = key.items[static_cast<size_t>(r.item_id)];
    if (r.variant < 0 || static_cast<size_t>(r.variant) >= item.variants.size())
      throw std::runtime_error("rating references unknown variant " +
                               std::to_string(r.variant) + " of item " +
                               std::to_string(r.item_id));
  }

  AnnotationReport report;

  // gate rule: keep raters whose gate semantic score is below three
  const int gate_id = key.items[static_cast<size_t>(key.gate_position)].item_id;
  std::set<std::string> all_raters, passing;
  for (const auto& r : ratings) {
    all_raters.insert(r.rater);
    if (r.item_id == gate_id && r.semantics < 3) passing.insert(r.rater);
  }
  for (const auto& rater : all_raters)
    if (!passing.count(rater)) report.excluded_raters.push_back(rater);

  // per-model attribution (a deduplicated variant credits all its models)
  std::set<std::string> model_names;
  for (const auto& item : key.items)
    if (!item.is_gate)
      for (const auto& v : item.variants)
        for (const auto& m : v.models) model_names.insert(m);

  struct Sample {
    int semantics, grammar, simplicity;
    std::string rater;
    int item_id;
    bool identical_to_original;
  };
  std::map<std::string, std::vector<Sample>> by_model;

  std::vector<Rating> kept;
  for (const auto& r : ratings) {
    if (!passing.count(r.rater)) continue;
    if (r.item_id == gate_id) continue;
    kept.push_back(r);
    const auto& item = key.items[static_cast<size_t>(r.item_id)];
    const auto& variant = item.variants[static_cast<size_t>(r.variant)];
    for (const auto& model : variant.models)
      by_model[model].push_back({r.semantics, r.grammar, r.simplicity, r.rater,
                                 r.item_id, variant.text == item.original});
  }

  for (const auto& model : model_names) {
    ModelScores s;
    s.model = model;
    const auto& samples = by_model[model];
    for (const auto& sm : samples) {
      s.mean_semantics += sm.semantics;
      s.mean_grammar += sm.grammar;
      s.mean_simplicity += sm.simplicity;
      if (sm.semantics >= 4) ++s.n_semantics_ge4;
      if (sm.grammar >= 4) ++s.n_grammar_ge4;
      if (sm.semantics >= 4 && sm.grammar >= 4) ++s.n_good;
    }
    s.rating_count = static_cast<int>(samples.size());
    if (!samples.empty()) {
      s.mean_semantics /= samples.size();
      s.mean_grammar /= samples.size();
      s.mean_simplicity /= samples.size();
    }
    report.models.push_back(s);
  }

  // agreement per aspect over (item, variant) columns and surviving raters
  std::vector<std::string> raters(passing.begin(), passing.end());
  std::map<std::pair<int, int>, size_t> column_of;
  for (const auto& r : kept)
    column_of.emplace(std::make_pair(r.item_id, r.variant), column_of.size());

  auto alpha_for = [&](auto pick) -> double {
    RatingTable table;
    table.rows.assign(raters.size(),
                      std::vector<std::optional<int>>(column_of.size()));
    for (const auto& r : kept) {
      const size_t row = static_cast<size_t>(
          std::find(raters.begin(), raters.end(), r.rater) - raters.begin());
      table.rows[row][column_of.at({r.item_id, r.variant})] = pick(r);
    }
    try {
      return krippendorff_alpha(table, AlphaMetric::Interval);
    } catch (const std::invalid_argument&) {
      return std::numeric_limits<double>::quiet_NaN();  // single-rated columns only
    }
  };
  report.alpha_semantics = alpha_for([](const Rating& r) { return r.semantics; });
  report.alpha_grammar = alpha_for([](const Rating& r) { return r.grammar; });
  report.alpha_simplicity = alpha_for([](const Rating& r) { return r.simplicity; });

  // pairwise signed-rank tests over (item, rater) matched samples
  std::vector<std::string> models(model_names.begin(), model_names.end());
  for (size_t a = 0; a < models.size(); ++a) {
    for (size_t b = a + 1; b < models.size(); ++b) {
      for (const std::string aspect : {"semantics", "grammar", "simplicity"}) {
        auto value = [&](const Sample& s) {
          if (aspect == "semantics") return s.semantics;
          if (aspect == "grammar") return s.grammar;
          return s.simplicity;
        };
        std::vector<double> xs, ys;
        for (const auto& sa : by_model[models[a]]) {
          if (aspect == "simplicity" && sa.identical_to_original) continue;
          for (const auto& sb : by_model[models[b]]) {
            if (sb.item_id != sa.item_id || sb.rater != sa.rater) continue;
            if (aspect == "simplicity" && sb.identical_to_original) continue;
            xs.push_back(value(sa));
            ys.push_back(value(sb));
          }
        }
        PairwiseTest test;
        test.aspect = aspect;
        test.model_a = models[a];
        test.model_b = models[b];
        test.pairs_used = static_cast<int>(xs.size());
        try {
          auto res = wilcoxon_signed_rank(xs, ys);
          test.statistic = res.statistic;
          test.p_value = res.p_value;
          test.valid = true;
        } catch (const std::invalid_argument&) {
          test.valid = false;
        }
        report.tests.push_back(std::move(test));
      }
    }
  }
  return report;
}

std::string annotation_report_json(const AnnotationReport& report) {
  json j;
  j["excluded_raters"] = report.excluded_raters;
  json models = json::array();
  for (const auto& m : report.models) {
    models.push_back({{"model", m.model},
                      {"semantics", m.mean_semantics},
                      {"grammar", m.mean_grammar},
                      {"simplicity", m.mean_simplicity},
                      {"n_semantics_ge4", m.n_semantics_ge4},
                      {"n_grammar_ge4", m.n_grammar_ge4},
                      {"n_good", m.n_good},
                      {"ratings", m.rating_count}});
  }
  j["models"] = models;
  j["krippendorff_alpha"] = {{"semantics", report.alpha_semantics},
                             {"grammar", report.alpha_grammar},
                             {"simplicity", report.alpha_simplicity}};
  json tests = json::array();
  for (const auto& t : report.tests) {
    tests.push_back({{"aspect", t.aspect},
                     {"model_a", t.model_a},
                     {"model_b", t.model_b},
                     {"statistic", t.statistic},
                     {"p_value", t.p_value},
                     {"pairs", t.pairs_used},
                     {"valid", t.valid}});
  }
  j["wilcoxon"] = tests;
  return j.dump(2) + "\n";
}

}  // namespace rsimp
