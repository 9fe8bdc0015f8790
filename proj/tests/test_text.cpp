#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "nlgkit/rng.hpp"
#include "nlgkit/text.hpp"

using namespace nlgkit;

TEST(Text, SplitWhitespaceHandlesUnicodeSpaces) {
  // U+00A0 no-break space and U+3000 ideographic space separate tokens.
  const auto t = text::split_whitespace("  a\xC2\xA0" "b\t c\xE3\x80\x80" "d\n");
  EXPECT_EQ(t, (std::vector<std::string>{"a", "b", "c", "d"}));
}

TEST(Text, NormalizeWhitespaceIsIdempotent) {
  for (const char* s : {"", " ", " a  b ", "x\t\ty\nz", "ẹ̀ ọ  ṣ"}) {
    const auto once = text::normalize_whitespace(s);
    EXPECT_EQ(text::normalize_whitespace(once), once);
  }
}

TEST(Text, TokenizeForMetricSplitsPunctuation) {
  EXPECT_EQ(text::tokenize_for_metric("Hello, world!"),
            (std::vector<std::string>{"Hello", ",", "world", "!"}));
  EXPECT_EQ(text::tokenize_for_metric("«Ẹ káàbọ̀»"), (std::vector<std::string>{"«", "Ẹ", "káàbọ̀", "»"}));
}

TEST(Text, TokenizeForMetricIsIdempotentOnJoinedOutput) {
  for (const char* s : {"a,b.c", "  x -- y ", "don't stop", "ʻŌlelo?"}) {
    const auto once = text::tokenize_for_metric(s);
    EXPECT_EQ(text::tokenize_for_metric(text::join(once)), once) << s;
  }
}

TEST(Text, LowercaseCoversLatinExtendedGreekCyrillic) {
  EXPECT_EQ(text::lowercase("ÀÉÎ ŁŚŻ ΑΒΓ ДЖЯ ABC"), "àéî łśż αβγ джя abc");
  EXPECT_EQ(text::lowercase("ỌṢẸ Ẹ̀"), "ọṣẹ ẹ̀");
}

TEST(Text, InvalidUtf8PassesThrough) {
  const std::string bad = "a\xFF" "b";
  EXPECT_EQ(text::normalize_whitespace(bad), bad);
  EXPECT_EQ(text::tokenize_for_metric(bad).size(), 1u);
}

TEST(Rng, DeriveIsStableAndLabelSensitive) {
  EXPECT_EQ(Rng::derive(7, "eng"), Rng::derive(7, "eng"));
  EXPECT_NE(Rng::derive(7, "eng"), Rng::derive(7, "hau"));
  EXPECT_NE(Rng::derive(7, "eng"), Rng::derive(8, "eng"));
}

TEST(Rng, BelowStaysInRange) {
  Rng rng(123);
  for (std::uint64_t bound : {1ull, 2ull, 3ull, 10ull, 1000ull}) {
    for (int i = 0; i < 200; ++i) EXPECT_LT(rng.below(bound), bound);
  }
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(99);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  rng.shuffle(w);
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(Rng, SampleWithoutReplacementIsDistinct) {
  Rng rng(5);
  for (std::size_t k = 0; k <= 20; ++k) {
    const auto s = rng.sample_without_replacement(20, k);
    ASSERT_EQ(s.size(), k);
    std::set<std::size_t> u(s.begin(), s.end());
    EXPECT_EQ(u.size(), k);
    for (auto x : s) EXPECT_LT(x, 20u);
  }
}

TEST(Rng, BelowIsRoughlyUniform) {
  Rng rng(2024);
  std::array<int, 6> counts{};
  for (int i = 0; i < 60000; ++i) ++counts[rng.below(6)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}
