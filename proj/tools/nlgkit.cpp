// nlgkit: command-line front end for grammar generation, cloze dataset
// construction, scoring, aggregation and human-evaluation tooling.
//
// Exit codes: 0 success, 1 data failure, 2 usage or validation failure.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "nlgkit/annotation.hpp"
#include "nlgkit/annotation_server.hpp"
#include "nlgkit/benchmark.hpp"
#include "nlgkit/cloze.hpp"
#include "nlgkit/grammar.hpp"
#include "nlgkit/io.hpp"
#include "nlgkit/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kDataFailure = 1;
constexpr int kUsage = 2;

struct GlobalConfig {
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  std::string log_level = "info";
};

class UsageError : public nlgkit::Error {
public:
  using Error::Error;
};

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw nlgkit::Error("SHA-256 digest failed");
  }
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

std::string digest(std::string_view contents) { return "sha256:" + sha256_hex(contents); }

fs::path resolve_out(const GlobalConfig& g, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : fs::path(g.output_dir) / path;
}

std::vector<int> parse_ratings(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("malformed rating '" + part + "'");
    }
  }
  return out;
}

// --- gen-grammar -----------------------------------------------------------

struct GenGrammarArgs {
  std::string grammar, out, category;
};

int cmd_gen_grammar(const GlobalConfig& g, const GenGrammarArgs& a) {
  namespace gr = nlgkit::grammar;
  const auto source = nlgkit::io::read_file(a.grammar);
  const auto grammar = gr::parse_grammar(source);
  auto sentences = gr::expand(grammar);
  spdlog::info("{}: {} rules, {} lexical items, {} sentences", a.grammar, grammar.rule_count(),
               grammar.lexical_item_count(), sentences.size());
  if (auto expected = grammar.expected_count(); expected && *expected != sentences.size()) {
    spdlog::error("grammar asserts {} sentences but expands to {}", *expected, sentences.size());
    return kDataFailure;
  }
  if (!a.category.empty()) sentences = gr::filter_by_category(sentences, gr::FeatureQuery::parse(a.category));

  std::vector<json> rows;
  std::map<std::string, std::size_t> histogram;
  for (const auto& s : sentences) {
    rows.push_back({{"text", s.text},
                    {"category", gr::to_string(s.category)},
                    {"features", s.features},
                    {"derivation", s.derivation}});
    ++histogram[std::string(gr::to_string(s.category))];
  }
  json prov_extra = {{"inputs", {{a.grammar, digest(source)}}}};
  if (!a.category.empty()) prov_extra["filter"] = a.category;
  nlgkit::io::write_file(resolve_out(g, a.out), nlgkit::io::to_jsonl(nlgkit::io::provenance(g.seed, prov_extra), rows));

  std::cout << "count: " << sentences.size() << '\n';
  for (const auto& [cat, n] : histogram) std::cout << cat << '\t' << n << '\n';
  return kOk;
}

// --- build-cloze -----------------------------------------------------------

struct BuildClozeArgs {
  std::string mode = "one", corpus, exclude, splits = "200,50,100", out;
};

std::vector<std::string> read_sentences(const fs::path& path, std::string& contents) {
  contents = nlgkit::io::read_file(path);
  std::vector<std::string> out;
  if (path.extension() == ".jsonl") {
    for (const auto& row : nlgkit::io::parse_jsonl(contents, path.string())) {
      if (!row.value.contains("text") || !row.value["text"].is_string()) {
        throw nlgkit::InvalidArgument(path.string() + ":" + std::to_string(row.line) + ": missing string 'text'");
      }
      out.push_back(row.value["text"].get<std::string>());
    }
  } else {
    for (auto& line : nlgkit::io::split_lines(contents)) out.push_back(std::move(line));
  }
  return out;
}

int cmd_build_cloze(const GlobalConfig& g, const BuildClozeArgs& a) {
  namespace cz = nlgkit::cloze;
  const auto splits = cz::SplitSpec::parse(a.splits);
  const auto mode = a.mode == "one" ? cz::Mode::one : cz::Mode::at_least_one;
  if (!fs::is_directory(a.corpus)) throw UsageError("corpus directory '" + a.corpus + "' does not exist");

  std::map<std::string, std::vector<std::string>> corpus;
  std::map<std::string, json> corpus_digest;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.corpus)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".txt" || ext == ".jsonl")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto lang = f.stem().string();
    if (corpus.count(lang)) throw UsageError("language '" + lang + "' has more than one corpus file");
    std::string contents;
    corpus[lang] = read_sentences(f, contents);
    corpus_digest[lang] = {{f.filename().string(), digest(contents)}};
  }
  if (corpus.empty()) throw UsageError("no <lang>.txt or <lang>.jsonl files in '" + a.corpus + "'");

  std::vector<std::string> exclusion;
  std::string exclusion_digest;
  if (!a.exclude.empty()) {
    std::string contents;
    exclusion = read_sentences(a.exclude, contents);
    exclusion_digest = digest(contents);
  }

  const auto result = cz::build_cloze_dataset(corpus, mode, splits, exclusion, g.seed);
  const auto out_dir = resolve_out(g, a.out);
  for (const auto& lang : result.built) {
    json extra = {{"mode", a.mode},
                  {"splits", {splits.train, splits.dev, splits.test}},
                  {"language", lang.language},
                  {"inputs", corpus_digest[lang.language]}};
    if (!a.exclude.empty()) extra["inputs"][fs::path(a.exclude).filename().string()] = exclusion_digest;
    const auto prov = nlgkit::io::provenance(g.seed, extra);
    auto write_split = [&](const char* name, const std::vector<cz::ClozeExample>& examples) {
      std::vector<json> rows;
      rows.reserve(examples.size());
      for (std::size_t i = 0; i < examples.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "-%s-%05zu", name, i);
        rows.push_back(cz::to_json_row(examples[i], lang.language + id));
      }
      nlgkit::io::write_file(out_dir / lang.language / (std::string(name) + ".jsonl"), nlgkit::io::to_jsonl(prov, rows));
    };
    write_split("train", lang.train);
    write_split("dev", lang.dev);
    write_split("test", lang.test);
    std::cout << lang.language << ": train=" << lang.train.size() << " dev=" << lang.dev.size()
              << " test=" << lang.test.size() << '\n';
  }
  for (const auto& f : result.failed) {
    std::cout << f.language << ": FAILED " << f.message << '\n';
    spdlog::warn("{}", f.message);
  }
  return result.built.empty() ? kDataFailure : kOk;
}

// --- score / aggregate / report -------------------------------------------

struct ScoreArgs {
  std::string manifest, hyp, model, test_set, out;
};

const nlgkit::bench::TestSetManifest& pick_test_set(const nlgkit::bench::Manifest& m, const ScoreArgs& a) {
  if (!a.test_set.empty()) return m.find(a.test_set);
  if (m.test_sets.size() == 1) return m.test_sets.front();
  const auto stem = fs::path(a.hyp).stem().string();
  for (const auto& t : m.test_sets) {
    if (t.id == stem) return t;
  }
  throw UsageError("cannot tell which test set '" + a.hyp + "' belongs to; pass --test-set");
}

int cmd_score(const GlobalConfig& g, const ScoreArgs& a) {
  namespace b = nlgkit::bench;
  const auto manifest = b::load_manifest(a.manifest);
  for (const auto& w : manifest.warnings) spdlog::warn("{}", w);
  const auto& ts = pick_test_set(manifest, a);
  const auto ref_contents = nlgkit::io::read_file(ts.test_path);
  const auto refs = b::parse_references(ref_contents, ts.test_path.string());
  const auto hyp_contents = nlgkit::io::read_file(a.hyp);

  b::EvalRun run;
  run.model_id = a.model;
  run.test_set_id = ts.id;
  run.seed = g.seed;
  run.hypothesis_path = a.hyp;
  run = b::score_run(std::move(run), ts, refs);
  for (const auto& w : run.score->warnings) spdlog::warn("{}: {}", ts.id, w);

  std::cout << ts.id << '\t' << a.model << "\tseed=" << g.seed << '\t' << nlgkit::metrics::to_string(run.score->metric)
            << '\t' << b::format_2dp(nlgkit::metrics::table_scale(run.score->metric, run.score->value)) << '\n';
  if (!a.out.empty()) {
    auto j = b::to_json(run);
    j[std::string(nlgkit::io::kProvenanceKey)] = nlgkit::io::provenance(
        g.seed, {{"inputs",
                  {{fs::path(a.hyp).filename().string(), digest(hyp_contents)},
                   {ts.test_path.filename().string(), digest(ref_contents)}}}});
    nlgkit::io::write_file(resolve_out(g, a.out), j.dump(2) + "\n");
  }
  return kOk;
}

struct AggregateArgs {
  std::string runs, out;
};

int cmd_aggregate(const GlobalConfig& g, const AggregateArgs& a) {
  namespace b = nlgkit::bench;
  if (!fs::is_directory(a.runs)) throw UsageError("runs directory '" + a.runs + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(a.runs)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<b::EvalRun> runs;
  json inputs = json::object();
  for (const auto& f : files) {
    const auto contents = nlgkit::io::read_file(f);
    json j;
    try {
      j = json::parse(contents);
      runs.push_back(b::run_from_json(j));
    } catch (const json::exception& e) {
      throw nlgkit::InvalidArgument(f.string() + ": not a scored run: " + e.what());
    }
    inputs[fs::relative(f, a.runs).generic_string()] = digest(contents);
  }
  if (runs.empty()) throw UsageError("no run files (*.json) under '" + a.runs + "'");
  auto report = b::aggregate(std::move(runs));
  report.provenance = nlgkit::io::provenance(g.seed, {{"inputs", inputs}});
  for (const auto& w : report.warnings) spdlog::warn("{}", w);
  nlgkit::io::write_file(resolve_out(g, a.out), b::render_report(report, b::ReportFormat::json));
  std::cout << files.size() << " runs, " << report.models.size() << " models, " << report.rows.size()
            << " test sets\n";
  return kOk;
}

struct ReportArgs {
  std::string in, format = "markdown", out;
};

int cmd_report(const GlobalConfig& g, const ReportArgs& a) {
  namespace b = nlgkit::bench;
  json j;
  try {
    j = json::parse(nlgkit::io::read_file(a.in));
  } catch (const json::parse_error& e) {
    throw nlgkit::InvalidArgument(a.in + ": malformed JSON: " + e.what());
  }
  const auto report = b::report_from_json(j);
  const auto text = b::render_report(report, a.format == "json" ? b::ReportFormat::json : b::ReportFormat::markdown);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    nlgkit::io::write_file(resolve_out(g, a.out), text);
  }
  return kOk;
}

// --- annotation ------------------------------------------------------------

struct KappaArgs {
  std::string a, b;
  bool weighted = false;
};

int cmd_kappa(const GlobalConfig& g, const KappaArgs& a) {
  namespace an = nlgkit::annotation;
  const auto ra = parse_ratings(a.a);
  const auto rb = parse_ratings(a.b);
  an::AgreementStats s;
  try {
    s = an::agreement(ra, rb);
  } catch (const an::AnnotationError& e) {
    throw UsageError(e.what());
  }
  json out = {{"provenance", nlgkit::io::provenance(g.seed)},
              {"items", s.items},
              {"kappa", s.kappa},
              {"kappa_x100", s.kappa_x100()},
              {"percent_agreement", s.percent_agreement()},
              {"observed", s.observed},
              {"expected", s.expected}};
  if (a.weighted) out["linear_weighted_kappa"] = an::linear_weighted_kappa(ra, rb);
  std::cout << out.dump(2) << '\n';
  return kOk;
}

struct BlindArgs {
  std::string outputs, out;
};

std::pair<nlgkit::annotation::Assignment, std::string> load_assignment(const GlobalConfig& g,
                                                                       const std::string& outputs) {
  const auto contents = nlgkit::io::read_file(outputs);
  return {nlgkit::annotation::blind_assignment(nlgkit::annotation::parse_model_outputs(contents, outputs), g.seed),
          digest(contents)};
}

int cmd_blind(const GlobalConfig& g, const BlindArgs& a) {
  const auto [assignment, dig] = load_assignment(g, a.outputs);
  auto j = nlgkit::annotation::to_json(assignment, true);
  j["provenance"] = nlgkit::io::provenance(g.seed, {{"inputs", {{fs::path(a.outputs).filename().string(), dig}}}});
  nlgkit::io::write_file(resolve_out(g, a.out), j.dump(2) + "\n");
  std::cout << assignment.items.size() << " items, " << assignment.key_to_model.size() << " models\n";
  return kOk;
}

struct ServeArgs {
  std::string outputs, log, host = "127.0.0.1", admin_token, static_dir, rubric;
  int port = 8080;
};

int cmd_serve(const GlobalConfig& g, const ServeArgs& a) {
  namespace an = nlgkit::annotation;
  auto [assignment, _] = load_assignment(g, a.outputs);
  if (a.admin_token.empty()) spdlog::warn("no --admin-token given; /api/export will refuse every request");
  an::AnnotationStore store(std::move(assignment), resolve_out(g, a.log), a.admin_token);
  an::ServerOptions options;
  if (!a.static_dir.empty()) options.static_dir = a.static_dir;
  if (!a.rubric.empty()) options.rubric_path = a.rubric;
  an::AnnotationServer server(store, options);
  if (!server.bind(a.host, a.port)) {
    spdlog::error("cannot bind {}:{}", a.host, a.port);
    return kDataFailure;
  }
  spdlog::info("serving {} items on http://{}:{}", store.assignment().items.size(), a.host, a.port);
  return server.serve() ? kOk : kDataFailure;
}

struct SummarizeArgs {
  std::string outputs, records, out;
  bool unblind = false;
};

int cmd_summarize(const GlobalConfig& g, const SummarizeArgs& a) {
  namespace an = nlgkit::annotation;
  const auto [assignment, out_digest] = load_assignment(g, a.outputs);
  const auto contents = nlgkit::io::read_file(a.records);
  const auto records = an::import_records(contents, a.records);
  const auto* key_map = a.unblind ? &assignment.key_to_model : nullptr;
  json j = {{"provenance", nlgkit::io::provenance(g.seed, {{"inputs",
                                                            {{fs::path(a.outputs).filename().string(), out_digest},
                                                             {fs::path(a.records).filename().string(), digest(contents)}}},
                                                           {"unblinded", a.unblind}})},
            {"summary", an::to_json(an::category_summary(records, assignment.items, key_map))},
            {"agreement", an::to_json(an::agreement_table(records, assignment.items, key_map))}};
  const auto text = j.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    nlgkit::io::write_file(resolve_out(g, a.out), text);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlgkit: controlled test-set generation, cloze datasets, scoring and human evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML or INI file with option defaults; command-line flags take precedence");

  GlobalConfig g;
  app.add_option("--seed", g.seed, "Seed recorded in every output's provenance")->capture_default_str();
  app.add_option("--output-dir", g.output_dir, "Directory that relative output paths are resolved against")
      ->envname("NLGKIT_OUTPUT_DIR")
      ->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, critical or off")
      ->envname("NLGKIT_LOG_LEVEL")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}))
      ->capture_default_str();

  std::function<int()> action;

  GenGrammarArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-grammar", "Expand a feature grammar into a sentence set (JSONL)");
  gen_cmd->add_option("--grammar", gen.grammar, "Grammar file")->required();
  gen_cmd->add_option("--out", gen.out, "Output JSONL")->required();
  gen_cmd->add_option("--category", gen.category, "Feature filter, e.g. 'transitive' or 'gender=feminine,number=plural'");
  gen_cmd->callback([&] { action = [&] { return cmd_gen_grammar(g, gen); }; });

  BuildClozeArgs cloze;
  auto* cloze_cmd = app.add_subcommand("build-cloze", "Build per-language masked-token train/dev/test splits");
  cloze_cmd->add_option("--mode", cloze.mode, "one: mask exactly one token; multi: mask 1..max(1, n/10) tokens")
      ->check(CLI::IsMember({"one", "multi"}))
      ->capture_default_str();
  cloze_cmd->add_option("--corpus", cloze.corpus, "Directory of <lang>.txt or <lang>.jsonl ({\"text\"}) files")
      ->required();
  cloze_cmd->add_option("--exclude", cloze.exclude, "Sentences that must not appear in any split");
  cloze_cmd->add_option("--splits", cloze.splits, "train,dev,test sizes")->capture_default_str();
  cloze_cmd->add_option("--out", cloze.out, "Output directory")->required();
  cloze_cmd->callback([&] { action = [&] { return cmd_build_cloze(g, cloze); }; });

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score a hypothesis file against a test set's references");
  score_cmd->add_option("--manifest", score.manifest, "Benchmark manifest (JSON)")->required();
  score_cmd->add_option("--hyp", score.hyp, "Hypotheses JSONL ({\"id\", \"hypothesis\"})")->required();
  score_cmd->add_option("--model", score.model, "Model name")->required();
  score_cmd->add_option("--test-set", score.test_set, "Test set id (default: the only one, or the --hyp file stem)");
  score_cmd->add_option("--out", score.out, "Write the scored run as JSON");
  score_cmd->callback([&] { action = [&] { return cmd_score(g, score); }; });

  AggregateArgs agg;
  auto* agg_cmd = app.add_subcommand("aggregate", "Fold scored runs into a report (mean and std over seeds)");
  agg_cmd->add_option("--runs", agg.runs, "Directory of scored run files")->required();
  agg_cmd->add_option("--out", agg.out, "Report JSON")->required();
  agg_cmd->callback([&] { action = [&] { return cmd_aggregate(g, agg); }; });

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Render a report as markdown or JSON");
  rep_cmd->add_option("--in", rep.in, "Report JSON from 'aggregate'")->required();
  rep_cmd->add_option("--format", rep.format, "markdown or json")
      ->check(CLI::IsMember({"markdown", "json"}))
      ->capture_default_str();
  rep_cmd->add_option("--out", rep.out, "Output file (default: stdout)");
  rep_cmd->callback([&] { action = [&] { return cmd_report(g, rep); }; });

  KappaArgs kappa;
  auto* kappa_cmd = app.add_subcommand("kappa", "Cohen's kappa between two rating vectors");
  kappa_cmd->add_option("--a", kappa.a, "Comma-separated ratings 1..5")->required();
  kappa_cmd->add_option("--b", kappa.b, "Comma-separated ratings 1..5")->required();
  kappa_cmd->add_flag("--weighted", kappa.weighted, "Also report linear weighted kappa");
  kappa_cmd->callback([&] { action = [&] { return cmd_kappa(g, kappa); }; });

  BlindArgs blind;
  auto* blind_cmd = app.add_subcommand("blind", "Write a blinded annotation assignment (server-side, with key map)");
  blind_cmd->add_option("--outputs", blind.outputs, "Model outputs JSONL")->required();
  blind_cmd->add_option("--out", blind.out, "Assignment JSON")->required();
  blind_cmd->callback([&] { action = [&] { return cmd_blind(g, blind); }; });

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the annotation HTTP service");
  serve_cmd->add_option("--outputs", serve.outputs, "Model outputs JSONL")->required();
  serve_cmd->add_option("--log", serve.log, "Append-only ratings log (JSONL)")->required();
  serve_cmd->add_option("--host", serve.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "Port")->capture_default_str();
  serve_cmd->add_option("--admin-token", serve.admin_token, "Bearer token required by /api/export");
  serve_cmd->add_option("--static", serve.static_dir, "Directory with the annotation frontend bundle");
  serve_cmd->add_option("--rubric", serve.rubric, "Rubric document served at /api/rubric");
  serve_cmd->callback([&] { action = [&] { return cmd_serve(g, serve); }; });

  SummarizeArgs summ;
  auto* summ_cmd = app.add_subcommand("summarize", "Per-category rating means and inter-annotator agreement");
  summ_cmd->add_option("--outputs", summ.outputs, "Model outputs JSONL used for the session")->required();
  summ_cmd->add_option("--records", summ.records, "Ratings log or export (JSONL)")->required();
  summ_cmd->add_flag("--unblind", summ.unblind, "Report model ids instead of blinded keys");
  summ_cmd->add_option("--out", summ.out, "Output file (default: stdout)");
  summ_cmd->callback([&] { action = [&] { return cmd_summarize(g, summ); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  auto logger = spdlog::stderr_color_mt("nlgkit");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^%l%$: %v");
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    return action();
  } catch (const nlgkit::bench::IdMismatchError& e) {
    spdlog::error("{}", e.what());
    return kDataFailure;
  } catch (const nlgkit::cloze::ClozeError& e) {
    spdlog::error("{}", e.what());
    return e.kind() == nlgkit::cloze::ClozeError::Kind::invalid_splits ? kUsage : kDataFailure;
  } catch (const nlgkit::grammar::GrammarError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const nlgkit::bench::ManifestError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const nlgkit::IoError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const nlgkit::InvalidArgument& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const nlgkit::Error& e) {
    spdlog::error("{}", e.what());
    return kDataFailure;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kDataFailure;
  }
}
