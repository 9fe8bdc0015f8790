#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "nlgkit/grammar.hpp"
#include "nlgkit/text.hpp"
#include "nlgkit/io.hpp"
#include "oracles.hpp"

using namespace nlgkit::grammar;

namespace {

Grammar default_grammar() { return parse_grammar(nlgkit::io::read_file(NLGKIT_DATA_DIR "/default.grammar")); }

GrammarError::Kind error_kind(std::string_view source) {
  try {
    parse_grammar(source);
  } catch (const GrammarError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "grammar was accepted:\n" << source;
  return GrammarError::Kind::syntax;
}

}  // namespace

TEST(DefaultGrammar, ExpandsToAssertedCount) {
  const auto g = default_grammar();
  ASSERT_TRUE(g.expected_count().has_value());
  EXPECT_EQ(*g.expected_count(), 152u);
  EXPECT_EQ(count_derivations(g), 152u);
  EXPECT_EQ(expand(g).size(), 152u);
}

TEST(DefaultGrammar, RuleAndLexiconSize) {
  const auto g = default_grammar();
  EXPECT_EQ(g.rule_count(), 9u);
  std::set<std::string> lexical;
  for (const auto& [_, entries] : g.lexicon()) {
    for (const auto& e : entries) lexical.insert(e.surface);
  }
  EXPECT_EQ(lexical.size(), 17u);  // "did" and "not" appear inline in S
  std::set<std::string> forms;
  for (const auto& s : expand(g)) {
    for (const auto& w : nlgkit::text::split_whitespace(s.text)) forms.insert(w);
  }
  EXPECT_EQ(forms.size(), 19u);
}

TEST(DefaultGrammar, ContainsProbeSentences) {
  const auto sentences = expand(default_grammar());
  const std::map<std::string, Category> wanted = {{"He left", Category::intransitive},
                                                  {"We did not leave", Category::intransitive_negation},
                                                  {"You left Lagos", Category::transitive},
                                                  {"She did not leave them", Category::transitive_negation}};
  for (const auto& [text, cat] : wanted) {
    auto it = std::find_if(sentences.begin(), sentences.end(), [&](const auto& s) { return s.text == text; });
    ASSERT_NE(it, sentences.end()) << text;
    EXPECT_EQ(it->category, cat) << text;
  }
}

TEST(DefaultGrammar, MatchesRewritingExpander) {
  const auto g = default_grammar();
  const auto ours = expand(g);
  auto theirs = oracle::expand_by_rewriting(g);
  std::sort(theirs.begin(), theirs.end(),
            [](const auto& a, const auto& b) { return a.derivation < b.derivation; });
  ASSERT_EQ(ours.size(), theirs.size());
  for (std::size_t i = 0; i < ours.size(); ++i) {
    EXPECT_EQ(ours[i].text, theirs[i].text);
    EXPECT_EQ(ours[i].derivation, theirs[i].derivation);
  }
}

TEST(DefaultGrammar, FeaturesAreUnionOfDerivation) {
  const auto g = default_grammar();
  for (const auto& s : expand(g)) {
    std::map<std::string, std::string> expected = {
        {"transitivity", "intransitive"}, {"polarity", "affirmative"}, {"gender", "none"}, {"number", "singular"}};
    for (auto id : s.derivation) {
      for (const auto& [k, v] : g.production(id).features) expected[k] = v;
    }
    for (const auto& [k, v] : expected) EXPECT_EQ(s.features.at(k), v) << s.text << " " << k;
  }
}

TEST(DefaultGrammar, CategoriesPartition) {
  const auto all = expand(default_grammar());
  std::size_t total = 0;
  std::set<std::string> seen;
  for (auto c : kAllCategories) {
    const auto part = filter_by_category(all, FeatureQuery::parse(std::string(to_string(c))));
    EXPECT_FALSE(part.empty());
    total += part.size();
    for (const auto& s : part) {
      EXPECT_EQ(s.category, c);
      EXPECT_TRUE(seen.insert(s.text + "#" + std::to_string(s.derivation[0])).second);
    }
  }
  EXPECT_EQ(total, all.size());
}

TEST(DefaultGrammar, GenderPartition) {
  const auto all = expand(default_grammar());
  std::size_t total = 0;
  for (const char* g : {"masculine", "feminine", "none"}) {
    total += filter_by_category(all, FeatureQuery::parse(std::string("gender=") + g)).size();
  }
  EXPECT_EQ(total, all.size());
}

TEST(DefaultGrammar, ExpansionIsDeterministic) {
  const auto g = default_grammar();
  EXPECT_EQ(expand(g), expand(g));
}

TEST(Replay, RoundTripsEveryDerivation) {
  const auto g = default_grammar();
  for (const auto& s : expand(g)) EXPECT_EQ(replay(g, s.derivation), s);
}

TEST(Replay, RejectsMalformedDerivations) {
  const auto g = default_grammar();
  const auto s = expand(g).front();
  auto truncated = s.derivation;
  truncated.pop_back();
  EXPECT_THROW(replay(g, truncated), GrammarError);
  auto extended = s.derivation;
  extended.push_back(0);
  EXPECT_THROW(replay(g, extended), GrammarError);
  EXPECT_THROW(replay(g, std::vector<std::size_t>{999}), GrammarError);
}

TEST(Filter, ConjunctionAndAliases) {
  const auto all = expand(default_grammar());
  const auto a = filter_by_category(all, FeatureQuery::parse("cat=transitive, gender=feminine"));
  const auto b = filter_by_category(all, FeatureQuery::parse("transitive,gender=feminine"));
  EXPECT_EQ(a, b);
  for (const auto& s : a) {
    EXPECT_EQ(s.category, Category::transitive);
    EXPECT_EQ(s.features.at("gender"), "feminine");
  }
  // {She, Sara} x left x 8 objects
  EXPECT_EQ(a.size(), 16u);
}

TEST(Filter, UnknownFeatureOrValueIsAnError) {
  const auto all = expand(default_grammar());
  EXPECT_THROW(filter_by_category(all, FeatureQuery::parse("tense=past")), GrammarError);
  EXPECT_THROW(filter_by_category(all, FeatureQuery::parse("gender=neuter")), GrammarError);
  EXPECT_THROW(filter_by_category(all, FeatureQuery::parse("ditransitive")), GrammarError);
}

TEST(Parse, CustomFeaturesPassThrough) {
  const auto g = parse_grammar("S -> 'a' X [register=formal]\nX -> 'b' | 'c'\n");
  const auto all = expand(g);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].features.at("register"), "formal");
  EXPECT_EQ(filter_by_category(all, FeatureQuery::parse("register=formal")).size(), 2u);
}

TEST(Parse, EscapedQuotes) {
  const auto all = expand(parse_grammar("S -> 'don\\'t' 'a\\\\b'\n"));
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].text, "don't a\\b");
}

TEST(Parse, UndefinedNonterminalReportsPosition) {
  try {
    parse_grammar("S -> A B\nA -> 'x'\n");
    FAIL() << "accepted";
  } catch (const GrammarError& e) {
    EXPECT_EQ(e.kind(), GrammarError::Kind::undefined_nonterminal);
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 8u);
  }
}

TEST(Parse, Errors) {
  EXPECT_EQ(error_kind(""), GrammarError::Kind::empty_grammar);
  EXPECT_EQ(error_kind("# only a comment\n"), GrammarError::Kind::empty_grammar);
  EXPECT_EQ(error_kind("S -> 'a\n"), GrammarError::Kind::syntax);
  EXPECT_EQ(error_kind("S 'a'\n"), GrammarError::Kind::syntax);
  EXPECT_EQ(error_kind("| 'a'\n"), GrammarError::Kind::syntax);
  EXPECT_EQ(error_kind("S -> A\nA -> S\n"), GrammarError::Kind::recursive);
  EXPECT_EQ(error_kind("S -> 'a' S | 'b'\n"), GrammarError::Kind::recursive);
  EXPECT_EQ(error_kind("S -> 'a' | 'a'\n"), GrammarError::Kind::duplicate_production);
  EXPECT_EQ(error_kind("S -> 'a' [gender=masculine] | 'a' [gender=feminine]\n"),
            GrammarError::Kind::duplicate_production);
  EXPECT_EQ(error_kind("S -> A B\nA -> 'x' [gender=masculine]\nB -> 'y' [gender=feminine]\n"),
            GrammarError::Kind::feature_conflict);
  EXPECT_EQ(error_kind("S -> 'x' [gender=neuter]\n"), GrammarError::Kind::invalid_feature);
  EXPECT_EQ(error_kind("S -> 'x' [cat=ditransitive]\n"), GrammarError::Kind::invalid_feature);
}

TEST(Expand, CapIsEnforced) {
  const auto g = parse_grammar("S -> X X X\nX -> 'a' | 'b' | 'c' | 'd'\n");
  EXPECT_EQ(count_derivations(g), 64u);
  EXPECT_THROW(expand(g, 63), GrammarError);
  EXPECT_EQ(expand(g, 64).size(), 64u);
}

TEST(Expand, MatchesRewritingExpanderOnSmallGrammars) {
  const char* grammars[] = {
      "S -> A B | B\nA -> 'a' | 'b' C\nB -> 'x' | 'y'\nC -> 'c' | 'd'\n",
      "S -> 'p' | Q Q\nQ -> R | 's'\nR -> 't' | 'u' 'v'\n",
  };
  for (const char* src : grammars) {
    const auto g = parse_grammar(src);
    const auto ours = expand(g);
    auto theirs = oracle::expand_by_rewriting(g);
    std::sort(theirs.begin(), theirs.end(), [](const auto& a, const auto& b) { return a.derivation < b.derivation; });
    ASSERT_EQ(ours.size(), theirs.size()) << src;
    for (std::size_t i = 0; i < ours.size(); ++i) {
      EXPECT_EQ(ours[i].text, theirs[i].text);
      EXPECT_EQ(ours[i].derivation, theirs[i].derivation);
    }
  }
}
