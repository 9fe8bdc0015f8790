#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <unistd.h>

#include "nlgkit/benchmark.hpp"

using namespace nlgkit;
using namespace nlgkit::bench;
using nlohmann::json;

namespace {

class TempDir {
public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            ("nlgkit-" + std::string(info->test_suite_name()) + "-" + info->name() + "-" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

EvalRun scored(const std::string& model, const std::string& test_set, std::uint64_t seed, double value,
               metrics::MetricName metric = metrics::MetricName::bleu, Cluster cluster = Cluster::machine_translation) {
  EvalRun r;
  r.model_id = model;
  r.test_set_id = test_set;
  r.seed = seed;
  r.cluster = cluster;
  metrics::MetricScore s;
  s.metric = metric;
  s.value = value;
  r.score = s;
  return r;
}

json entry(const std::string& id, const std::string& cluster, const json& metric) {
  return json{{"id", id},
              {"cluster", cluster},
              {"languages", {{"language", "swa"}}},
              {"metric", metric},
              {"paths", {{"test", "refs/" + id + ".jsonl"}}}};
}

}  // namespace

TEST(Aggregate, MeanAndSampleStd) {
  const auto [mean, sd] = mean_and_stddev({10, 12, 14});
  EXPECT_DOUBLE_EQ(mean, 12.0);
  EXPECT_DOUBLE_EQ(sd, 2.0);
  EXPECT_EQ(mean_and_stddev({5}).second, 0.0);
  EXPECT_THROW(mean_and_stddev({}), AggregationError);
}

TEST(Aggregate, SeedGroupsAndBenchmarkScore) {
  std::vector<EvalRun> runs = {scored("m", "a", 1, 10), scored("m", "a", 2, 12), scored("m", "a", 3, 14),
                               scored("m", "b", 1, 20), scored("m", "c", 1, 30)};
  const auto report = aggregate(runs);
  ASSERT_EQ(report.rows.size(), 3u);
  const auto& a = report.rows[0].by_model.at("m");
  EXPECT_DOUBLE_EQ(a.mean, 12.0);
  EXPECT_DOUBLE_EQ(a.stddev, 2.0);
  EXPECT_EQ(a.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  // Means 12, 20, 30.
  EXPECT_NEAR(report.benchmark_score.at("m"), 62.0 / 3.0, 1e-12);

  const auto simple = aggregate({scored("m", "a", 1, 10), scored("m", "b", 1, 20), scored("m", "c", 1, 30)});
  EXPECT_DOUBLE_EQ(simple.benchmark_score.at("m"), 20.0);
}

TEST(Aggregate, FractionalMetricsUseTableScale) {
  const auto report = aggregate({scored("m", "qa", 1, 0.8, metrics::MetricName::f1, Cluster::question_answering),
                                 scored("m", "sum", 1, 0.5, metrics::MetricName::rouge_l, Cluster::summarization)});
  EXPECT_DOUBLE_EQ(report.benchmark_score.at("m"), 65.0);
}

TEST(Aggregate, OrderInvariant) {
  std::vector<EvalRun> runs;
  for (const char* m : {"mt5", "afro", "byt5"}) {
    for (const char* t : {"a", "b", "c"}) {
      for (std::uint64_t s : {41, 1512, 20235}) runs.push_back(scored(m, t, s, static_cast<double>((s * 7 + t[0]) % 97)));
    }
  }
  const auto expected = render_report(aggregate(runs), ReportFormat::markdown);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(runs.begin(), runs.end(), rng);
    EXPECT_EQ(render_report(aggregate(runs), ReportFormat::markdown), expected);
  }
}

TEST(Aggregate, Errors) {
  EXPECT_THROW(aggregate({scored("m", "a", 1, 10), scored("m", "a", 1, 11)}), AggregationError);
  EXPECT_THROW(aggregate({scored("m", "a", 1, 10), scored("m", "a", 2, 0.5, metrics::MetricName::chrf)}),
               AggregationError);
  EvalRun unscored;
  unscored.model_id = "m";
  unscored.test_set_id = "a";
  EXPECT_THROW(aggregate({unscored}), AggregationError);
}

TEST(Aggregate, MissingCombinationWarns) {
  const auto report = aggregate({scored("x", "a", 1, 10), scored("x", "b", 1, 20), scored("y", "a", 1, 30)});
  ASSERT_EQ(report.warnings.size(), 1u);
  EXPECT_NE(report.warnings[0].find("'y'"), std::string::npos);
  EXPECT_DOUBLE_EQ(report.benchmark_score.at("y"), 30.0);
}

TEST(Aggregate, ExcludedTestSetsDoNotCount) {
  auto excluded = scored("m", "b", 1, 100);
  excluded.include_in_score = false;
  const auto report = aggregate({scored("m", "a", 1, 10), excluded});
  EXPECT_DOUBLE_EQ(report.benchmark_score.at("m"), 10.0);
  EXPECT_NE(render_report(report, ReportFormat::markdown).find("b (not scored)"), std::string::npos);
}

TEST(Render, TwoDecimalFormatting) {
  EXPECT_EQ(format_2dp(12.345678), "12.35");
  EXPECT_EQ(format_2dp(0.0), "0.0");
  EXPECT_EQ(format_2dp(2.0), "2.0");
  EXPECT_EQ(format_2dp(12.3), "12.3");
  EXPECT_EQ(format_2dp(-0.001), "0.0");
}

TEST(Render, MarkdownCellsAndBold) {
  const auto one = render_report(aggregate({scored("m", "a", 1, 12.345678)}), ReportFormat::markdown);
  EXPECT_NE(one.find("12.35±0.0"), std::string::npos);

  const auto two = render_report(
      aggregate({scored("lo", "a", 1, 10), scored("hi", "a", 1, 20), scored("lo", "b", 1, 5), scored("hi", "b", 1, 5)}),
      ReportFormat::markdown);
  EXPECT_NE(two.find("| **20.0±0.0** | 10.0±0.0 |"), std::string::npos) << two;
  EXPECT_NE(two.find("| **5.0±0.0** | **5.0±0.0** |"), std::string::npos) << two;
  EXPECT_NE(two.find("**Benchmark score**"), std::string::npos);
}

TEST(Render, JsonRoundTrip) {
  auto report = aggregate({scored("m", "a", 1, 10), scored("m", "a", 2, 14), scored("n", "a", 1, 3)});
  report.provenance = io::provenance(9);
  const auto text = render_report(report, ReportFormat::json);
  const auto back = report_from_json(json::parse(text));
  EXPECT_EQ(render_report(back, ReportFormat::json), text);
  EXPECT_EQ(render_report(back, ReportFormat::markdown), render_report(report, ReportFormat::markdown));
}

TEST(Manifest, MetricMismatchAndUnknownCluster) {
  auto expect_kind = [](const json& doc, ManifestError::Kind kind) {
    try {
      parse_manifest(doc, ".", false);
      ADD_FAILURE() << "accepted " << doc.dump();
    } catch (const ManifestError& e) {
      EXPECT_EQ(e.kind(), kind) << e.what();
    }
  };
  expect_kind({{"test_sets", {entry("qa", "question_answering", "bleu")}}}, ManifestError::Kind::metric_mismatch);
  expect_kind({{"test_sets", {entry("s", "summarization", "bleu")}}}, ManifestError::Kind::metric_mismatch);
  expect_kind({{"test_sets", {entry("x", "poetry", "bleu")}}}, ManifestError::Kind::unknown_cluster);
  expect_kind({{"test_sets", {entry("a", "paraphrase", "bleu"), entry("a", "paraphrase", "bleu")}}},
              ManifestError::Kind::duplicate_id);
  expect_kind({{"test_sets", {entry("a", "paraphrase", "meteor")}}}, ManifestError::Kind::malformed);
}

TEST(Manifest, EmptyWarns) {
  const auto m = parse_manifest(json::object(), ".", false);
  EXPECT_TRUE(m.test_sets.empty());
  EXPECT_EQ(m.warnings.size(), 1u);
  EXPECT_EQ(m.seeds, default_seeds());
}

TEST(Manifest, SixtySevenEntriesAcrossSixClusters) {
  const std::pair<const char*, const char*> clusters[] = {{"cloze", "bleu"},
                                                          {"machine_translation", "bleu"},
                                                          {"paraphrase", "bleu"},
                                                          {"question_answering", "f1"},
                                                          {"summarization", "rougeL"},
                                                          {"title_generation", "bleu"}};
  json sets = json::array();
  for (int i = 0; i < 67; ++i) {
    const auto& [cluster, metric] = clusters[i % 6];
    sets.push_back(entry("t" + std::to_string(i), cluster, metric));
  }
  const auto m = parse_manifest({{"test_sets", sets}, {"finetune_defaults", {{"epochs", 20}}}}, ".", false);
  EXPECT_EQ(m.test_sets.size(), 67u);
  const auto h = m.cluster_histogram();
  EXPECT_EQ(h.size(), 6u);
  std::size_t total = 0;
  for (const auto& [_, n] : h) total += n;
  EXPECT_EQ(total, 67u);
  EXPECT_EQ(m.test_sets[0].finetune, FinetuneMetadata{});
}

TEST(Manifest, FinetuneOverridesAndMetricObject) {
  auto e = entry("a", "machine_translation", json{{"name", "bleu"}, {"smoothing", "exp"}, {"max_order", 2}});
  e["finetune"] = {{"learning_rate", 1e-4}};
  const auto m = parse_manifest({{"test_sets", {e}}, {"finetune_defaults", {{"epochs", 3}}}}, ".", false);
  const auto& t = m.test_sets[0];
  EXPECT_EQ(t.metric.smoothing, metrics::Smoothing::exp);
  EXPECT_EQ(t.metric.max_order, 2);
  EXPECT_EQ(t.finetune.epochs, 3);
  EXPECT_DOUBLE_EQ(t.finetune.learning_rate, 1e-4);
}

TEST(Manifest, MissingFilesAreReported) {
  TempDir dir;
  const json doc = {{"test_sets", {entry("a", "paraphrase", "bleu")}}};
  EXPECT_THROW(parse_manifest(doc, dir.path(), true), ManifestError);
  io::write_file(dir.path() / "refs/a.jsonl", "{\"id\": \"1\", \"references\": [\"x\"]}\n");
  EXPECT_EQ(parse_manifest(doc, dir.path(), true).test_sets[0].test_path, dir.path() / "refs/a.jsonl");
}

TEST(Join, ReportsEveryMismatchedId) {
  const std::vector<ReferenceRow> refs = {{"1", {"a"}}, {"2", {"b"}}, {"3", {"c"}}};
  const std::vector<HypothesisRow> hyps = {{"1", "a"}, {"4", "d"}, {"1", "a"}};
  try {
    join_by_id(hyps, refs);
    FAIL() << "accepted";
  } catch (const IdMismatchError& e) {
    EXPECT_EQ(e.missing(), (std::vector<std::string>{"2", "3"}));
    EXPECT_EQ(e.extra(), (std::vector<std::string>{"4"}));
    EXPECT_EQ(e.duplicates(), (std::vector<std::string>{"1"}));
  }
}

TEST(Join, ReferenceOrder) {
  const auto pairs = join_by_id({{"b", "y"}, {"a", "x"}}, {{"a", {"x"}}, {"b", {"y"}}});
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].id, "a");
  EXPECT_EQ(pairs[1].hypothesis, "y");
}

TEST(Parse, ReferencesAcceptStringOrArray) {
  const auto refs = parse_references("{\"_provenance\": {}}\n{\"id\": \"1\", \"reference\": \"a\"}\n"
                                     "{\"id\": \"2\", \"references\": [\"b\", \"c\"]}\n");
  ASSERT_EQ(refs.size(), 2u);
  EXPECT_EQ(refs[1].references.size(), 2u);
  EXPECT_THROW(parse_references("{\"id\": \"1\"}\n"), InvalidArgument);
  EXPECT_THROW(parse_hypotheses("{\"id\": \"1\"}\n"), InvalidArgument);
  EXPECT_THROW(parse_hypotheses("not json\n"), InvalidArgument);
}

TEST(ScoreRun, IdentityHypothesesScoreMaximum) {
  TempDir dir;
  io::write_file(dir.path() / "hyp.jsonl", "{\"id\": \"1\", \"hypothesis\": \"a b c d\"}\n");
  TestSetManifest t;
  t.id = "a";
  EvalRun r;
  r.model_id = "m";
  r.test_set_id = "a";
  r.hypothesis_path = (dir.path() / "hyp.jsonl").string();
  const auto out = score_run(r, t, {{"1", {"a b c d"}}});
  ASSERT_TRUE(out.score);
  EXPECT_DOUBLE_EQ(out.score->value, 100.0);
  const auto back = run_from_json(to_json(out));
  EXPECT_EQ(back.score->value, 100.0);
  EXPECT_EQ(back.model_id, "m");
}
