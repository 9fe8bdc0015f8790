#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "nlgkit/metrics.hpp"
#include "oracles.hpp"

using namespace nlgkit::metrics;

namespace {

std::vector<ScoredPair> to_pairs(const std::vector<oracle::Pair>& corpus) {
  std::vector<ScoredPair> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) out.push_back({std::to_string(i), corpus[i].hyp, corpus[i].refs});
  return out;
}

std::vector<ScoredPair> single(const std::string& hyp, const std::string& ref) { return {{"0", hyp, {ref}}}; }

constexpr int kRandomCorpora = 60;

}  // namespace

// --- fixtures ---------------------------------------------------------------

TEST(Bleu, BrevityPenaltyFixture) {
  // Every precision is 1; BP = exp(1 - 5/4).
  const double expected = 100.0 * std::exp(1.0 - 5.0 / 4.0);
  EXPECT_NEAR(oracle::bleu({{"a b c d", {"a b c d e"}}}), expected, 1e-12);
  const auto s = bleu(single("a b c d", "a b c d e"));
  EXPECT_NEAR(s.value, expected, 1e-9);
  EXPECT_NEAR(s.value, 77.88, 0.005);
  EXPECT_DOUBLE_EQ(s.components.at("sys_len"), 4);
  EXPECT_DOUBLE_EQ(s.components.at("ref_len"), 5);
  EXPECT_DOUBLE_EQ(s.components.at("precision_4"), 100.0);
}

TEST(Bleu, NoOverlapIsZero) { EXPECT_DOUBLE_EQ(bleu(single("x y z w", "a b c d")).value, 0.0); }

TEST(Bleu, ClipsRepeatedNgrams) {
  // "the the the" vs "the cat": unigram precision 1/3.
  const auto s = bleu(single("the the the", "the cat"), 1);
  EXPECT_NEAR(s.components.at("precision_1"), 100.0 / 3.0, 1e-9);
}

TEST(Bleu, ClosestReferenceLengthPrefersShorterOnTie) {
  const auto s = bleu({{"0", "a b c", {"a b", "a b c d"}}});
  EXPECT_DOUBLE_EQ(s.components.at("ref_len"), 2);
}

TEST(Bleu, ExpSmoothingKeepsMissingOrdersNonZero) {
  const auto pairs = single("a b x c d", "a b c d e");
  EXPECT_DOUBLE_EQ(bleu(pairs).value, 0.0);
  EXPECT_GT(bleu(pairs, 4, Smoothing::exp).value, 0.0);
}

TEST(Bleu, AllEmptyHypothesesWarn) {
  const auto s = bleu(single("", "a b"));
  EXPECT_DOUBLE_EQ(s.value, 0.0);
  ASSERT_EQ(s.warnings.size(), 1u);
}

TEST(Bleu, RejectsBadInput) {
  EXPECT_THROW(bleu({}), MetricError);
  EXPECT_THROW(bleu({{"0", "a", {}}}), MetricError);
}

TEST(Chrf, CatCabFixture) {
  // Unigrams {c,a,t}/{c,a,b}: 2/3. Bigrams {ca,at}/{ca,ab}: 1/2. P = R = 7/12.
  const double expected = 100.0 * 7.0 / 12.0;
  EXPECT_NEAR(oracle::chrf({{"cat", {"cab"}}}, 2, 0, 2.0), expected, 1e-12);
  const auto s = chrf(single("cat", "cab"), 2, 0, 2.0);
  EXPECT_NEAR(s.value, expected, 1e-9);
  EXPECT_NEAR(s.value, 58.33, 0.005);
}

TEST(Chrf, IgnoresWhitespace) {
  EXPECT_NEAR(chrf(single("ab cd", "abcd")).value, 100.0, 1e-9);
}

TEST(Chrf, PlusPlusAddsWordOrders) {
  const auto plain = chrf(single("the cat sat", "the cat sat down"));
  const auto plus = chrf(single("the cat sat", "the cat sat down"), 6, 2);
  EXPECT_EQ(plus.metric, MetricName::chrf_plus_plus);
  EXPECT_NE(plain.value, plus.value);
}

TEST(Chrf, MultiReferenceUsesBestReference) {
  const auto one = chrf(single("abc", "abc")).value;
  const auto two = chrf({{"0", "abc", {"xyz", "abc"}}}).value;
  EXPECT_NEAR(one, two, 1e-12);
}

TEST(RougeL, LcsFixture) {
  EXPECT_EQ(oracle::lcs_bruteforce({"a", "b", "c"}, {"a", "c"}), 2u);
  EXPECT_NEAR(oracle::rouge_l({{"a b c", {"a c"}}}), 0.8, 1e-12);
  EXPECT_NEAR(rouge_l(single("a b c", "a c")).value, 0.8, 1e-12);
}

TEST(RougeL, EmptyHypothesisScoresZero) { EXPECT_DOUBLE_EQ(rouge_l(single("", "a b")).value, 0.0); }

TEST(QaF1, TokenBagFixture) {
  EXPECT_NEAR(oracle::qa_f1_item("the red car", {"red car"}), 0.8, 1e-12);
  EXPECT_NEAR(qa_f1("the red car", {"red car"}).value, 0.8, 1e-12);
}

TEST(QaF1, NormalisesCaseAndPunctuation) {
  EXPECT_DOUBLE_EQ(qa_f1("Red, CAR!", {"red car"}).value, 1.0);
  EXPECT_DOUBLE_EQ(qa_f1("Ọjọ́ Àìkú", {"ọjọ́ àìkú"}).value, 1.0);
}

TEST(QaF1, MaxOverGoldAnswers) {
  EXPECT_DOUBLE_EQ(qa_f1("Lagos", {"Abuja", "Lagos"}).value, 1.0);
}

TEST(QaF1, EmptyCases) {
  EXPECT_DOUBLE_EQ(qa_f1("", {""}).value, 1.0);
  EXPECT_DOUBLE_EQ(qa_f1("", {"x"}).value, 0.0);
  EXPECT_DOUBLE_EQ(qa_f1("x", {"!!"}).value, 0.0);
}

TEST(MetricName, RoundTrip) {
  for (auto m : {MetricName::bleu, MetricName::chrf, MetricName::chrf_plus_plus, MetricName::rouge_l, MetricName::f1}) {
    EXPECT_EQ(metric_from_string(to_string(m)), m);
  }
  EXPECT_FALSE(metric_from_string("meteor").has_value());
}

// --- oracle equivalence ----------------------------------------------------

TEST(OracleEquivalence, Bleu) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < kRandomCorpora; ++i) {
    const auto corpus = oracle::random_corpus(rng);
    EXPECT_NEAR(bleu(to_pairs(corpus)).value, oracle::bleu(corpus), 1e-9) << "corpus " << i;
  }
}

TEST(OracleEquivalence, Chrf) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < kRandomCorpora; ++i) {
    const auto corpus = oracle::random_corpus(rng);
    EXPECT_NEAR(chrf(to_pairs(corpus)).value, oracle::chrf(corpus), 1e-9) << "corpus " << i;
  }
}

TEST(OracleEquivalence, ChrfPlusPlus) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < kRandomCorpora; ++i) {
    const auto corpus = oracle::random_corpus(rng);
    EXPECT_NEAR(chrf(to_pairs(corpus), 6, 2).value, oracle::chrf(corpus, 6, 2), 1e-9) << "corpus " << i;
  }
}

TEST(OracleEquivalence, RougeL) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < kRandomCorpora; ++i) {
    const auto corpus = oracle::random_corpus(rng);
    EXPECT_NEAR(rouge_l(to_pairs(corpus)).value, oracle::rouge_l(corpus), 1e-9) << "corpus " << i;
  }
}

TEST(OracleEquivalence, QaF1) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < kRandomCorpora; ++i) {
    const auto corpus = oracle::random_corpus(rng);
    EXPECT_NEAR(qa_f1(to_pairs(corpus)).value, oracle::qa_f1(corpus), 1e-9) << "corpus " << i;
  }
}

TEST(OracleEquivalence, LcsDynamicProgrammingMatchesEnumeration) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    const auto a = oracle::split_spaces(oracle::random_text(rng, 0, 12, 3));
    const auto b = oracle::split_spaces(oracle::random_text(rng, 0, 12, 3));
    EXPECT_EQ(lcs_length(a, b), oracle::lcs_bruteforce(a, b));
  }
}

// --- properties -------------------------------------------------------------

TEST(Properties, IdentityScoresMaximum) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto t = oracle::random_text(rng, 1, 15, 10);
    const auto pairs = single(t, t);
    EXPECT_NEAR(bleu(pairs).value, 100.0, 1e-9) << t;
    EXPECT_NEAR(chrf(pairs).value, 100.0, 1e-9) << t;
    EXPECT_NEAR(chrf(pairs, 6, 2).value, 100.0, 1e-9) << t;
    EXPECT_NEAR(rouge_l(pairs).value, 1.0, 1e-12) << t;
    EXPECT_NEAR(qa_f1(pairs).value, 1.0, 1e-12) << t;
  }
}

TEST(Properties, ScoresStayInRange) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto pairs = to_pairs(oracle::random_corpus(rng));
    for (auto m : {MetricName::bleu, MetricName::chrf, MetricName::chrf_plus_plus, MetricName::rouge_l,
                   MetricName::f1}) {
      MetricConfig cfg;
      cfg.name = m;
      if (m == MetricName::chrf_plus_plus) cfg.word_order = 2;
      const auto v = evaluate(cfg, pairs).value;
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, max_value(m));
    }
  }
}

TEST(Properties, CorpusScoresIgnorePairOrder) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    auto pairs = to_pairs(oracle::random_corpus(rng));
    auto shuffled = pairs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_NEAR(bleu(pairs).value, bleu(shuffled).value, 1e-9);
    EXPECT_NEAR(chrf(pairs).value, chrf(shuffled).value, 1e-9);
    EXPECT_NEAR(rouge_l(pairs).value, rouge_l(shuffled).value, 1e-9);
    EXPECT_NEAR(qa_f1(pairs).value, qa_f1(shuffled).value, 1e-9);
  }
}

TEST(Properties, TableScaleIsPercent) {
  EXPECT_DOUBLE_EQ(table_scale(MetricName::rouge_l, 0.5), 50.0);
  EXPECT_DOUBLE_EQ(table_scale(MetricName::f1, 0.8), 80.0);
  EXPECT_DOUBLE_EQ(table_scale(MetricName::bleu, 12.5), 12.5);
}
