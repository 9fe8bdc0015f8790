#pragma once

// Test-set registry, run scoring, multi-seed aggregation and report
// rendering.
//
// Manifest schema (JSON):
//
//   {
//     "seeds": [41, 1512, 20235],                      // optional
//     "finetune_defaults": {"epochs": 20, ...},        // optional
//     "test_sets": [
//       {
//         "id": "mt-eng-hau",
//         "cluster": "machine_translation",
//         "languages": {"source": "eng", "target": "hau"},   // or {"language": "swa"}
//         "metric": {"name": "bleu", "smoothing": "none", "max_order": 4},
//         "paths": {"train": "...", "dev": "...", "test": "refs/mt-eng-hau.jsonl"},
//         "include_in_score": true,                     // optional, default true
//         "finetune": {"learning_rate": 1e-4}           // optional overrides
//       }
//     ]
//   }
//
// Paths are relative to the manifest's directory. `paths.test` is the
// reference file: JSONL rows {"id", "references": [...]}.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nlgkit/error.hpp"
#include "nlgkit/io.hpp"
#include "nlgkit/metrics.hpp"

namespace nlgkit::bench {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum class Cluster { cloze, machine_translation, paraphrase, question_answering, summarization, title_generation };

inline constexpr std::array<Cluster, 6> kAllClusters = {
    Cluster::cloze,         Cluster::machine_translation, Cluster::paraphrase,
    Cluster::question_answering, Cluster::summarization, Cluster::title_generation};

inline std::string_view to_string(Cluster c) noexcept {
  switch (c) {
    case Cluster::cloze: return "cloze";
    case Cluster::machine_translation: return "machine_translation";
    case Cluster::paraphrase: return "paraphrase";
    case Cluster::question_answering: return "question_answering";
    case Cluster::summarization: return "summarization";
    case Cluster::title_generation: return "title_generation";
  }
  return "?";
}

inline std::string_view display_name(Cluster c) noexcept {
  switch (c) {
    case Cluster::cloze: return "Cloze";
    case Cluster::machine_translation: return "Machine translation";
    case Cluster::paraphrase: return "Paraphrase";
    case Cluster::question_answering: return "Question answering";
    case Cluster::summarization: return "Summarization";
    case Cluster::title_generation: return "Title generation";
  }
  return "?";
}

inline std::optional<Cluster> cluster_from_string(std::string_view s) noexcept {
  for (auto c : kAllClusters) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

/// QA is scored with F1, summarization with ROUGE-L, everything else with
/// the BLEU family (BLEU, chrF, chrF++).
inline bool metric_compatible(Cluster c, metrics::MetricName m) noexcept {
  using metrics::MetricName;
  switch (c) {
    case Cluster::question_answering: return m == MetricName::f1;
    case Cluster::summarization: return m == MetricName::rouge_l;
    default: return m == MetricName::bleu || m == MetricName::chrf || m == MetricName::chrf_plus_plus;
  }
}

class ManifestError : public Error {
public:
  enum class Kind { malformed, unknown_cluster, metric_mismatch, missing_file, duplicate_id };
  ManifestError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

/// Hypothesis and reference ids disagree.
class IdMismatchError : public Error {
public:
  IdMismatchError(std::vector<std::string> missing, std::vector<std::string> extra,
                  std::vector<std::string> duplicates)
      : Error(describe(missing, extra, duplicates)),
        missing_(std::move(missing)),
        extra_(std::move(extra)),
        duplicates_(std::move(duplicates)) {}

  /// Reference ids without a hypothesis.
  const std::vector<std::string>& missing() const noexcept { return missing_; }
  /// Hypothesis ids without a reference.
  const std::vector<std::string>& extra() const noexcept { return extra_; }
  const std::vector<std::string>& duplicates() const noexcept { return duplicates_; }

private:
  static std::string list(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? ", " : "") + ids[i];
    return out;
  }
  static std::string describe(const std::vector<std::string>& missing, const std::vector<std::string>& extra,
                              const std::vector<std::string>& duplicates) {
    std::string msg = "hypothesis/reference id mismatch:";
    if (!missing.empty()) msg += " missing " + std::to_string(missing.size()) + " id(s) [" + list(missing) + "]";
    if (!extra.empty()) msg += " extra " + std::to_string(extra.size()) + " id(s) [" + list(extra) + "]";
    if (!duplicates.empty()) msg += " duplicate id(s) [" + list(duplicates) + "]";
    return msg;
  }

  std::vector<std::string> missing_, extra_, duplicates_;
};

/// Finetuning hyperparameters, recorded as provenance only.
struct FinetuneMetadata {
  int epochs = 20;
  int early_stopping_patience = 5;
  double learning_rate = 5e-5;
  int batch_size = 16;
  int max_seq_length = 512;

  friend bool operator==(const FinetuneMetadata&, const FinetuneMetadata&) = default;
};

inline const std::vector<std::uint64_t>& default_seeds() {
  static const std::vector<std::uint64_t> seeds = {41, 1512, 20235};
  return seeds;
}

struct Languages {
  std::string source;
  std::string target;  // empty for monolingual test sets

  std::string label() const { return target.empty() ? source : source + "-" + target; }
};

struct TestSetManifest {
  std::string id;
  Cluster cluster = Cluster::machine_translation;
  Languages languages;
  metrics::MetricConfig metric;
  fs::path train_path, dev_path, test_path;
  FinetuneMetadata finetune;
  bool include_in_score = true;
};

struct Manifest {
  std::vector<TestSetManifest> test_sets;
  std::vector<std::uint64_t> seeds = default_seeds();
  std::vector<std::string> warnings;

  std::map<Cluster, std::size_t> cluster_histogram() const {
    std::map<Cluster, std::size_t> h;
    for (const auto& t : test_sets) ++h[t.cluster];
    return h;
  }

  const TestSetManifest& find(std::string_view id) const {
    for (const auto& t : test_sets) {
      if (t.id == id) return t;
    }
    throw ManifestError(ManifestError::Kind::malformed, "no test set '" + std::string(id) + "' in manifest");
  }
};

namespace detail {

inline FinetuneMetadata read_finetune(const json& j, FinetuneMetadata base) {
  if (!j.is_object()) throw ManifestError(ManifestError::Kind::malformed, "finetune metadata must be an object");
  base.epochs = j.value("epochs", base.epochs);
  base.early_stopping_patience = j.value("early_stopping_patience", base.early_stopping_patience);
  base.learning_rate = j.value("learning_rate", base.learning_rate);
  base.batch_size = j.value("batch_size", base.batch_size);
  base.max_seq_length = j.value("max_seq_length", base.max_seq_length);
  return base;
}

inline metrics::MetricConfig read_metric(const json& j, const std::string& id) {
  metrics::MetricConfig cfg;
  std::string name;
  if (j.is_string()) {
    name = j.get<std::string>();
  } else if (j.is_object() && j.contains("name") && j["name"].is_string()) {
    name = j["name"].get<std::string>();
    cfg.max_order = j.value("max_order", cfg.max_order);
    cfg.char_order = j.value("char_order", cfg.char_order);
    cfg.word_order = j.value("word_order", cfg.word_order);
    cfg.beta = j.value("beta", cfg.beta);
    const auto smoothing = j.value("smoothing", std::string("none"));
    if (smoothing == "none") {
      cfg.smoothing = metrics::Smoothing::none;
    } else if (smoothing == "exp") {
      cfg.smoothing = metrics::Smoothing::exp;
    } else {
      throw ManifestError(ManifestError::Kind::malformed, id + ": unknown smoothing '" + smoothing + "'");
    }
  } else {
    throw ManifestError(ManifestError::Kind::malformed, id + ": metric must be a name or an object with a name");
  }
  auto m = metrics::metric_from_string(name);
  if (!m) throw ManifestError(ManifestError::Kind::malformed, id + ": unknown metric '" + name + "'");
  cfg.name = *m;
  return cfg;
}

inline std::string require_string(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
    throw ManifestError(ManifestError::Kind::malformed, where + ": missing string field '" + key + "'");
  }
  return j[key].get<std::string>();
}

}  // namespace detail

/// Validates a parsed manifest. With `check_files`, every listed path must
/// exist (relative paths resolve against `base_dir`).
inline Manifest parse_manifest(const json& doc, const fs::path& base_dir, bool check_files = true) {
  if (!doc.is_object()) throw ManifestError(ManifestError::Kind::malformed, "manifest must be a JSON object");
  Manifest m;
  if (doc.contains("seeds")) m.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
  FinetuneMetadata defaults;
  if (doc.contains("finetune_defaults")) defaults = detail::read_finetune(doc["finetune_defaults"], defaults);

  const json empty = json::array();
  const json& sets = doc.contains("test_sets") ? doc["test_sets"] : empty;
  if (!sets.is_array()) throw ManifestError(ManifestError::Kind::malformed, "'test_sets' must be an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& e = sets[i];
    const std::string where = "test_sets[" + std::to_string(i) + "]";
    if (!e.is_object()) throw ManifestError(ManifestError::Kind::malformed, where + " must be an object");
    TestSetManifest t;
    t.id = detail::require_string(e, "id", where);
    if (!ids.insert(t.id).second) {
      throw ManifestError(ManifestError::Kind::duplicate_id, "duplicate test set id '" + t.id + "'");
    }
    const auto cluster = detail::require_string(e, "cluster", t.id);
    auto c = cluster_from_string(cluster);
    if (!c) throw ManifestError(ManifestError::Kind::unknown_cluster, t.id + ": unknown cluster '" + cluster + "'");
    t.cluster = *c;

    if (!e.contains("languages") || !e["languages"].is_object()) {
      throw ManifestError(ManifestError::Kind::malformed, t.id + ": missing 'languages' object");
    }
    const auto& langs = e["languages"];
    if (langs.contains("language")) {
      t.languages.source = detail::require_string(langs, "language", t.id);
    } else {
      t.languages.source = detail::require_string(langs, "source", t.id);
      t.languages.target = detail::require_string(langs, "target", t.id);
    }

    if (!e.contains("metric")) throw ManifestError(ManifestError::Kind::malformed, t.id + ": missing 'metric'");
    t.metric = detail::read_metric(e["metric"], t.id);
    if (!metric_compatible(t.cluster, t.metric.name)) {
      throw ManifestError(ManifestError::Kind::metric_mismatch,
                          t.id + ": metric '" + std::string(metrics::to_string(t.metric.name)) +
                              "' is not valid for cluster '" + std::string(to_string(t.cluster)) + "'");
    }

    if (!e.contains("paths") || !e["paths"].is_object()) {
      throw ManifestError(ManifestError::Kind::malformed, t.id + ": missing 'paths' object");
    }
    const auto& paths = e["paths"];
    auto resolve = [&](const char* key, bool required) -> fs::path {
      if (!paths.contains(key)) {
        if (required) throw ManifestError(ManifestError::Kind::malformed, t.id + ": missing paths." + key);
        return {};
      }
      fs::path p = paths[key].get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      if (check_files && !fs::exists(p)) {
        throw ManifestError(ManifestError::Kind::missing_file,
                            t.id + ": " + key + " file '" + p.string() + "' does not exist");
      }
      return p;
    };
    t.train_path = resolve("train", false);
    t.dev_path = resolve("dev", false);
    t.test_path = resolve("test", true);

    t.finetune = e.contains("finetune") ? detail::read_finetune(e["finetune"], defaults) : defaults;
    t.include_in_score = e.value("include_in_score", true);
    m.test_sets.push_back(std::move(t));
  }
  if (m.test_sets.empty()) m.warnings.push_back("manifest lists no test sets");
  return m;
}

inline Manifest load_manifest(const fs::path& path, bool check_files = true) {
  const auto text = io::read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ManifestError(ManifestError::Kind::malformed, path.string() + ": " + e.what());
  }
  return parse_manifest(doc, path.parent_path(), check_files);
}

/// Reference rows in file order.
struct ReferenceRow {
  std::string id;
  std::vector<std::string> references;
};

struct HypothesisRow {
  std::string id;
  std::string hypothesis;
};

inline std::vector<ReferenceRow> parse_references(std::string_view contents, std::string_view source = "<references>") {
  std::vector<ReferenceRow> out;
  for (auto& row : io::parse_jsonl(contents, source)) {
    const auto where = std::string(source) + ":" + std::to_string(row.line);
    if (!row.value.contains("id") || !row.value["id"].is_string()) throw InvalidArgument(where + ": missing string 'id'");
    ReferenceRow r;
    r.id = row.value["id"].get<std::string>();
    const auto& refs = row.value.contains("references") ? row.value["references"] : row.value["reference"];
    if (refs.is_string()) {
      r.references.push_back(refs.get<std::string>());
    } else if (refs.is_array() && !refs.empty()) {
      r.references = refs.get<std::vector<std::string>>();
    } else {
      throw InvalidArgument(where + ": 'references' must be a non-empty array of strings");
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<HypothesisRow> parse_hypotheses(std::string_view contents, std::string_view source = "<hypotheses>") {
  std::vector<HypothesisRow> out;
  for (auto& row : io::parse_jsonl(contents, source)) {
    const auto where = std::string(source) + ":" + std::to_string(row.line);
    if (!row.value.contains("id") || !row.value["id"].is_string()) throw InvalidArgument(where + ": missing string 'id'");
    if (!row.value.contains("hypothesis") || !row.value["hypothesis"].is_string()) {
      throw InvalidArgument(where + ": missing string 'hypothesis'");
    }
    out.push_back({row.value["id"].get<std::string>(), row.value["hypothesis"].get<std::string>()});
  }
  return out;
}

/// Joins hypotheses to references by exact id, in reference order.
/// Throws IdMismatchError listing every offending id.
inline std::vector<metrics::ScoredPair> join_by_id(const std::vector<HypothesisRow>& hyps,
                                                   const std::vector<ReferenceRow>& refs) {
  std::map<std::string, const HypothesisRow*> by_id;
  std::vector<std::string> duplicates;
  for (const auto& h : hyps) {
    if (!by_id.emplace(h.id, &h).second) duplicates.push_back(h.id);
  }
  std::set<std::string> ref_ids;
  std::vector<std::string> missing;
  for (const auto& r : refs) {
    if (!ref_ids.insert(r.id).second) duplicates.push_back(r.id);
    if (!by_id.count(r.id)) missing.push_back(r.id);
  }
  std::vector<std::string> extra;
  for (const auto& [id, _] : by_id) {
    if (!ref_ids.count(id)) extra.push_back(id);
  }
  if (!missing.empty() || !extra.empty() || !duplicates.empty()) {
    throw IdMismatchError(std::move(missing), std::move(extra), std::move(duplicates));
  }
  std::vector<metrics::ScoredPair> pairs;
  pairs.reserve(refs.size());
  for (const auto& r : refs) pairs.push_back({r.id, by_id.at(r.id)->hypothesis, r.references});
  return pairs;
}

struct EvalRun {
  std::string model_id;
  std::string test_set_id;
  std::uint64_t seed = 0;
  std::string hypothesis_path;
  Cluster cluster = Cluster::machine_translation;
  bool include_in_score = true;
  std::optional<metrics::MetricScore> score;
};

/// Scores `run` against `references` with the manifest's metric. The
/// hypothesis file is read from run.hypothesis_path.
inline EvalRun score_run(EvalRun run, const TestSetManifest& manifest, const std::vector<ReferenceRow>& references) {
  if (run.test_set_id != manifest.id) {
    throw InvalidArgument("run is for test set '" + run.test_set_id + "', manifest entry is '" + manifest.id + "'");
  }
  const auto hyps = parse_hypotheses(io::read_file(run.hypothesis_path), run.hypothesis_path);
  const auto pairs = join_by_id(hyps, references);
  run.cluster = manifest.cluster;
  run.include_in_score = manifest.include_in_score;
  run.score = metrics::evaluate(manifest.metric, pairs);
  return run;
}

inline json to_json(const metrics::MetricScore& s) {
  return json{{"metric", metrics::to_string(s.metric)},
              {"value", s.value},
              {"components", s.components},
              {"warnings", s.warnings}};
}

inline metrics::MetricScore score_from_json(const json& j) {
  metrics::MetricScore s;
  const auto name = j.at("metric").get<std::string>();
  auto m = metrics::metric_from_string(name);
  if (!m) throw InvalidArgument("unknown metric '" + name + "'");
  s.metric = *m;
  s.value = j.at("value").get<double>();
  if (j.contains("components")) s.components = j["components"].get<std::map<std::string, double>>();
  if (j.contains("warnings")) s.warnings = j["warnings"].get<std::vector<std::string>>();
  return s;
}

inline json to_json(const EvalRun& r) {
  json j = {{"model", r.model_id},
            {"test_set", r.test_set_id},
            {"seed", r.seed},
            {"hypothesis_path", r.hypothesis_path},
            {"cluster", to_string(r.cluster)},
            {"include_in_score", r.include_in_score}};
  if (r.score) j["score"] = to_json(*r.score);
  return j;
}

inline EvalRun run_from_json(const json& j) {
  EvalRun r;
  r.model_id = j.at("model").get<std::string>();
  r.test_set_id = j.at("test_set").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.hypothesis_path = j.value("hypothesis_path", std::string());
  const auto cluster = j.at("cluster").get<std::string>();
  auto c = cluster_from_string(cluster);
  if (!c) throw InvalidArgument("unknown cluster '" + cluster + "'");
  r.cluster = *c;
  r.include_in_score = j.value("include_in_score", true);
  if (j.contains("score")) r.score = score_from_json(j["score"]);
  return r;
}

/// Mean and sample standard deviation of one (test set, model) group, on the
/// 0-100 table scale.
struct GroupStats {
  std::vector<std::uint64_t> seeds;  // ascending
  std::vector<double> values;        // aligned with seeds
  double mean = 0.0;
  double stddev = 0.0;
};

struct ReportRow {
  std::string test_set_id;
  Cluster cluster = Cluster::machine_translation;
  metrics::MetricName metric = metrics::MetricName::bleu;
  bool include_in_score = true;
  std::map<std::string, GroupStats> by_model;
};

struct ScoreReport {
  std::vector<std::string> models;  // ascending
  std::vector<ReportRow> rows;      // by cluster, then test set id
  std::map<std::string, double> benchmark_score;
  std::map<std::string, std::map<Cluster, double>> cluster_means;
  std::vector<std::string> warnings;
  json provenance = json::object();
};

class AggregationError : public Error {
public:
  using Error::Error;
};

/// Mean and sample (n-1) standard deviation; stddev is 0 for one value.
inline std::pair<double, double> mean_and_stddev(const std::vector<double>& values) {
  if (values.empty()) throw AggregationError("no values to aggregate");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

namespace detail {

inline void finalize(ScoreReport& report) {
  std::set<std::string> models;
  for (const auto& row : report.rows) {
    for (const auto& [m, _] : row.by_model) models.insert(m);
  }
  report.models.assign(models.begin(), models.end());
  report.benchmark_score.clear();
  report.cluster_means.clear();
  report.warnings.clear();
  for (const auto& model : report.models) {
    double total = 0.0;
    std::size_t n = 0;
    std::map<Cluster, std::pair<double, std::size_t>> per_cluster;
    for (const auto& row : report.rows) {
      auto it = row.by_model.find(model);
      if (it == row.by_model.end()) {
        report.warnings.push_back("model '" + model + "' has no runs for test set '" + row.test_set_id +
                                  "'; excluded from its scores");
        continue;
      }
      if (!row.include_in_score) continue;
      total += it->second.mean;
      ++n;
      auto& c = per_cluster[row.cluster];
      c.first += it->second.mean;
      ++c.second;
    }
    if (n > 0) report.benchmark_score[model] = total / static_cast<double>(n);
    for (const auto& [cluster, acc] : per_cluster) {
      report.cluster_means[model][cluster] = acc.first / static_cast<double>(acc.second);
    }
  }
}

inline std::size_t cluster_rank(Cluster c) {
  return static_cast<std::size_t>(std::find(kAllClusters.begin(), kAllClusters.end(), c) - kAllClusters.begin());
}

}  // namespace detail

/// Groups scored runs by (test set, model) and folds them into a report.
/// The result does not depend on the order of `runs`.
inline ScoreReport aggregate(std::vector<EvalRun> runs) {
  for (const auto& r : runs) {
    if (!r.score) {
      throw AggregationError("run " + r.model_id + "/" + r.test_set_id + "/seed " + std::to_string(r.seed) +
                             " has not been scored");
    }
  }
  std::sort(runs.begin(), runs.end(), [](const EvalRun& a, const EvalRun& b) {
    return std::tie(a.test_set_id, a.model_id, a.seed) < std::tie(b.test_set_id, b.model_id, b.seed);
  });

  std::map<std::string, ReportRow> rows;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    if (i > 0 && runs[i - 1].test_set_id == r.test_set_id && runs[i - 1].model_id == r.model_id &&
        runs[i - 1].seed == r.seed) {
      throw AggregationError("duplicate run for " + r.model_id + "/" + r.test_set_id + "/seed " +
                             std::to_string(r.seed));
    }
    auto [it, inserted] = rows.try_emplace(r.test_set_id);
    auto& row = it->second;
    if (inserted) {
      row.test_set_id = r.test_set_id;
      row.cluster = r.cluster;
      row.metric = r.score->metric;
      row.include_in_score = r.include_in_score;
    } else if (row.metric != r.score->metric) {
      throw AggregationError("test set '" + r.test_set_id + "' mixes metrics " +
                             std::string(metrics::to_string(row.metric)) + " and " +
                             std::string(metrics::to_string(r.score->metric)));
    } else if (row.cluster != r.cluster || row.include_in_score != r.include_in_score) {
      throw AggregationError("test set '" + r.test_set_id + "' has runs with inconsistent manifest data");
    }
    auto& g = row.by_model[r.model_id];
    g.seeds.push_back(r.seed);
    g.values.push_back(metrics::table_scale(r.score->metric, r.score->value));
  }

  ScoreReport report;
  for (auto& [_, row] : rows) {
    for (auto& [__, g] : row.by_model) std::tie(g.mean, g.stddev) = mean_and_stddev(g.values);
    report.rows.push_back(std::move(row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return detail::cluster_rank(a.cluster) < detail::cluster_rank(b.cluster);
  });
  detail::finalize(report);
  return report;
}

inline json to_json(const ScoreReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json models = json::object();
    for (const auto& [m, g] : row.by_model) {
      models[m] = {{"seeds", g.seeds}, {"values", g.values}, {"mean", g.mean}, {"std", g.stddev}};
    }
    rows.push_back({{"test_set", row.test_set_id},
                    {"cluster", to_string(row.cluster)},
                    {"metric", metrics::to_string(row.metric)},
                    {"include_in_score", row.include_in_score},
                    {"models", models}});
  }
  json clusters = json::object();
  for (const auto& [m, per] : report.cluster_means) {
    for (const auto& [c, v] : per) clusters[m][std::string(to_string(c))] = v;
  }
  return json{{"provenance", report.provenance},
              {"models", report.models},
              {"rows", rows},
              {"benchmark_score", report.benchmark_score},
              {"cluster_means", clusters},
              {"warnings", report.warnings}};
}

inline ScoreReport report_from_json(const json& j) {
  ScoreReport report;
  if (j.contains("provenance")) report.provenance = j["provenance"];
  for (const auto& r : j.at("rows")) {
    ReportRow row;
    row.test_set_id = r.at("test_set").get<std::string>();
    auto c = cluster_from_string(r.at("cluster").get<std::string>());
    auto m = metrics::metric_from_string(r.at("metric").get<std::string>());
    if (!c || !m) throw InvalidArgument("report row '" + row.test_set_id + "' has an unknown cluster or metric");
    row.cluster = *c;
    row.metric = *m;
    row.include_in_score = r.value("include_in_score", true);
    for (const auto& [model, g] : r.at("models").items()) {
      GroupStats s;
      s.seeds = g.at("seeds").get<std::vector<std::uint64_t>>();
      s.values = g.at("values").get<std::vector<double>>();
      s.mean = g.at("mean").get<double>();
      s.stddev = g.at("std").get<double>();
      row.by_model.emplace(model, std::move(s));
    }
    report.rows.push_back(std::move(row));
  }
  detail::finalize(report);
  return report;
}

/// round(x, 2) printed with at least one decimal: 12.345678 -> "12.35",
/// 2 -> "2.0", 0.5 -> "0.5".
inline std::string format_2dp(double x) {
  double r = std::round(x * 100.0) / 100.0;
  if (r == 0.0) r = 0.0;  // no "-0.0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", r);
  std::string s = buf;
  if (s.back() == '0') s.pop_back();
  return s;
}

enum class ReportFormat { json, markdown };

/// JSON (unrounded) or a markdown table grouped by cluster with mean±std
/// cells and the best model per row in bold.
inline std::string render_report(const ScoreReport& report, ReportFormat format) {
  if (format == ReportFormat::json) return to_json(report).dump(2) + "\n";

  std::ostringstream out;
  if (!report.provenance.empty()) out << "<!-- provenance: " << report.provenance.dump() << " -->\n\n";

  out << "| Cluster | Task | Metric |";
  for (const auto& m : report.models) out << ' ' << m << " |";
  out << "\n|---|---|---|";
  for (std::size_t i = 0; i < report.models.size(); ++i) out << "---|";
  out << '\n';

  std::optional<Cluster> current;
  for (const auto& row : report.rows) {
    double best = -1.0;
    for (const auto& [_, g] : row.by_model) best = std::max(best, g.mean);
    out << "| " << (current != row.cluster ? display_name(row.cluster) : "") << " | " << row.test_set_id
        << (row.include_in_score ? "" : " (not scored)") << " | " << metrics::to_string(row.metric) << " |";
    current = row.cluster;
    for (const auto& m : report.models) {
      auto it = row.by_model.find(m);
      if (it == row.by_model.end()) {
        out << " - |";
        continue;
      }
      const auto cell = format_2dp(it->second.mean) + "±" + format_2dp(it->second.stddev);
      if (it->second.mean == best) {
        out << " **" << cell << "** |";
      } else {
        out << ' ' << cell << " |";
      }
    }
    out << '\n';
  }
  out << "| | **Benchmark score** | |";
  for (const auto& m : report.models) {
    auto it = report.benchmark_score.find(m);
    out << ' ' << (it == report.benchmark_score.end() ? "-" : format_2dp(it->second)) << " |";
  }
  out << "\n\n";

  out << "| Cluster mean |";
  for (const auto& m : report.models) out << ' ' << m << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < report.models.size(); ++i) out << "---|";
  out << '\n';
  for (auto c : kAllClusters) {
    bool any = false;
    for (const auto& m : report.models) {
      auto it = report.cluster_means.find(m);
      any = any || (it != report.cluster_means.end() && it->second.count(c));
    }
    if (!any) continue;
    out << "| " << display_name(c) << " |";
    for (const auto& m : report.models) {
      auto it = report.cluster_means.find(m);
      if (it == report.cluster_means.end() || !it->second.count(c)) {
        out << " - |";
      } else {
        out << ' ' << format_2dp(it->second.at(c)) << " |";
      }
    }
    out << '\n';
  }
  if (!report.warnings.empty()) {
    out << '\n';
    for (const auto& w : report.warnings) out << "> warning: " << w << '\n';
  }
  return out.str();
}

}  // namespace nlgkit::bench
