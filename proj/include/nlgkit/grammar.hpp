#pragma once

// Annotated, non-recursive context-free grammars and their exhaustive
// expansion into tagged probe sentences.
//
// File format (UTF-8, line oriented):
//
//   # expected_count: 152
//   S    -> SUBJ VP             [cat=intransitive]
//        |  SUBJ 'did' 'not' V  [cat=intransitive+negation]
//   SUBJ -> 'He' [gender=masculine, number=singular] | 'We' [number=plural]
//
// Terminals are single-quoted (\' and \\ escape). A line starting with `|`
// continues the alternatives of the previous left-hand side. `#` starts a
// comment. The first left-hand side is the start symbol. Production ids are
// assigned to alternatives in file order, starting at 0.
//
// Feature keys with a closed vocabulary:
//   cat / category : intransitive | intransitive+negation | transitive | transitive+negation
//   transitivity   : intransitive | transitive
//   polarity       : affirmative | negative
//   gender         : masculine | feminine | none
//   number         : singular | plural
// `cat` is shorthand for the matching transitivity and polarity pair. Any
// other key is carried through untouched.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nlgkit/error.hpp"

namespace nlgkit::grammar {

using FeatureMap = std::map<std::string, std::string>;

struct Symbol {
  enum class Kind { terminal, nonterminal };
  Kind kind = Kind::terminal;
  std::string name;  // surface form for terminals

  bool is_terminal() const noexcept { return kind == Kind::terminal; }
  friend bool operator==(const Symbol&, const Symbol&) = default;
};

struct Production {
  std::size_t id = 0;
  std::string lhs;
  std::vector<Symbol> rhs;
  FeatureMap features;  // canonical keys (cat already split)
  std::size_t line = 0;
};

struct LexicalEntry {
  std::string surface;
  FeatureMap features;
  std::size_t production_id = 0;
};

class GrammarError : public Error {
public:
  enum class Kind {
    syntax,
    undefined_nonterminal,
    recursive,
    duplicate_production,
    feature_conflict,
    invalid_feature,
    empty_grammar,
    too_large,
    invalid_derivation,
    unknown_feature,
  };

  GrammarError(Kind kind, const std::string& message, std::size_t line = 0, std::size_t column = 0)
      : Error(line ? std::to_string(line) + ":" + std::to_string(column) + ": " + message : message),
        kind_(kind),
        line_(line),
        column_(column) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

private:
  Kind kind_;
  std::size_t line_;
  std::size_t column_;
};

class Grammar;
Grammar parse_grammar(std::string_view source);

class Grammar {
public:
  const std::string& start_symbol() const noexcept { return start_; }
  std::span<const Production> productions() const noexcept { return productions_; }
  const Production& production(std::size_t id) const { return productions_.at(id); }

  /// Production ids whose left-hand side is `lhs`, ascending.
  std::span<const std::size_t> alternatives(const std::string& lhs) const {
    auto it = by_lhs_.find(lhs);
    if (it == by_lhs_.end()) return {};
    return it->second;
  }

  bool has_nonterminal(const std::string& name) const { return by_lhs_.count(name) != 0; }

  /// Nonterminals in order of first definition.
  const std::vector<std::string>& nonterminals() const noexcept { return order_; }

  /// A preterminal is a nonterminal whose every alternative is one terminal.
  bool is_preterminal(const std::string& nt) const {
    const auto alts = alternatives(nt);
    return !alts.empty() && std::all_of(alts.begin(), alts.end(), [&](std::size_t id) {
      const auto& rhs = productions_[id].rhs;
      return rhs.size() == 1 && rhs[0].is_terminal();
    });
  }

  std::map<std::string, std::vector<LexicalEntry>> lexicon() const {
    std::map<std::string, std::vector<LexicalEntry>> out;
    for (const auto& nt : order_) {
      if (!is_preterminal(nt)) continue;
      auto& entries = out[nt];
      for (auto id : alternatives(nt)) {
        const auto& p = productions_[id];
        entries.push_back({p.rhs[0].name, p.features, p.id});
      }
    }
    return out;
  }

  std::size_t lexical_item_count() const {
    std::size_t n = 0;
    for (const auto& [_, entries] : lexicon()) n += entries.size();
    return n;
  }

  std::size_t rule_count() const { return productions_.size() - lexical_item_count(); }

  /// Value of a `# expected_count: N` header comment, if present.
  std::optional<std::uint64_t> expected_count() const noexcept { return expected_count_; }

private:
  friend Grammar parse_grammar(std::string_view source);

  std::string start_;
  std::vector<Production> productions_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_lhs_;
  std::vector<std::string> order_;
  std::optional<std::uint64_t> expected_count_;
};

enum class Category { intransitive, intransitive_negation, transitive, transitive_negation };

inline std::string_view to_string(Category c) noexcept {
  switch (c) {
    case Category::intransitive: return "intransitive";
    case Category::intransitive_negation: return "intransitive+negation";
    case Category::transitive: return "transitive";
    case Category::transitive_negation: return "transitive+negation";
  }
  return "?";
}

inline std::optional<Category> category_from_string(std::string_view s) noexcept {
  if (s == "intransitive") return Category::intransitive;
  if (s == "intransitive+negation") return Category::intransitive_negation;
  if (s == "transitive") return Category::transitive;
  if (s == "transitive+negation") return Category::transitive_negation;
  return std::nullopt;
}

inline constexpr std::array<Category, 4> kAllCategories = {
    Category::intransitive, Category::intransitive_negation, Category::transitive,
    Category::transitive_negation};

struct GeneratedSentence {
  std::string text;
  Category category = Category::intransitive;
  // Always holds category, transitivity, polarity, gender and number, plus
  // any custom keys used along the derivation.
  FeatureMap features;
  std::vector<std::size_t> derivation;  // production ids, leftmost preorder

  friend bool operator==(const GeneratedSentence&, const GeneratedSentence&) = default;
};

namespace detail {

inline const std::map<std::string, std::vector<std::string>, std::less<>>& closed_vocabularies() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> v = {
      {"category",
       {"intransitive", "intransitive+negation", "transitive", "transitive+negation"}},
      {"transitivity", {"intransitive", "transitive"}},
      {"polarity", {"affirmative", "negative"}},
      {"gender", {"masculine", "feminine", "none"}},
      {"number", {"singular", "plural"}},
  };
  return v;
}

/// Union of two feature maps; nullopt on a conflicting key.
inline std::optional<FeatureMap> merge(const FeatureMap& a, const FeatureMap& b,
                                       std::string* conflict_key = nullptr) {
  FeatureMap out = a;
  for (const auto& [k, v] : b) {
    auto [it, inserted] = out.emplace(k, v);
    if (!inserted && it->second != v) {
      if (conflict_key) *conflict_key = k;
      return std::nullopt;
    }
  }
  return out;
}

class Parser {
public:
  explicit Parser(std::string_view src) : src_(src) {}

  struct RawAlt {
    std::vector<Symbol> rhs;
    std::vector<std::size_t> columns;  // column of each symbol, for diagnostics
    FeatureMap features;
    std::size_t line = 0;
  };
  struct RawRule {
    std::string lhs;
    std::size_t line = 0, column = 0;
    std::vector<RawAlt> alts;
  };

  std::vector<RawRule> rules;
  std::optional<std::uint64_t> expected_count;

  void run() {
    std::size_t start = 0;
    line_no_ = 0;
    while (start <= src_.size()) {
      auto end = src_.find('\n', start);
      if (end == std::string_view::npos) end = src_.size();
      ++line_no_;
      line_ = src_.substr(start, end - start);
      if (!line_.empty() && line_.back() == '\r') line_.remove_suffix(1);
      pos_ = 0;
      parse_line();
      if (end == src_.size()) break;
      start = end + 1;
    }
  }

private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw GrammarError(GrammarError::Kind::syntax, msg, line_no_, pos_ + 1);
  }

  void skip_ws() {
    while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t')) ++pos_;
  }

  bool at_end_or_comment() {
    skip_ws();
    if (pos_ >= line_.size()) return true;
    if (line_[pos_] == '#') {
      read_comment(line_.substr(pos_ + 1));
      pos_ = line_.size();
      return true;
    }
    return false;
  }

  void read_comment(std::string_view c) {
    constexpr std::string_view key = "expected_count:";
    auto i = c.find_first_not_of(" \t");
    if (i == std::string_view::npos) return;
    c.remove_prefix(i);
    if (c.substr(0, key.size()) != key) return;
    c.remove_prefix(key.size());
    while (!c.empty() && (c.front() == ' ' || c.front() == '\t')) c.remove_prefix(1);
    std::uint64_t n = 0;
    auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), n);
    if (ec != std::errc() || ptr == c.data()) fail("malformed expected_count header");
    expected_count = n;
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }
  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool feature_char(char c) { return ident_char(c) || c == '+' || c == '.'; }

  std::string read_ident() {
    if (pos_ >= line_.size() || !ident_start(line_[pos_])) fail("expected a nonterminal name");
    const auto b = pos_;
    while (pos_ < line_.size() && ident_char(line_[pos_])) {
      // "->" terminates an identifier even without surrounding spaces
      if (line_[pos_] == '-' && pos_ + 1 < line_.size() && line_[pos_ + 1] == '>') break;
      ++pos_;
    }
    return std::string(line_.substr(b, pos_ - b));
  }

  std::string read_quoted() {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < line_.size()) {
      const char c = line_[pos_];
      if (c == '\\') {
        if (pos_ + 1 >= line_.size()) fail("dangling escape in terminal");
        const char e = line_[pos_ + 1];
        if (e != '\'' && e != '\\') fail("unknown escape in terminal");
        out.push_back(e);
        pos_ += 2;
      } else if (c == '\'') {
        ++pos_;
        if (out.empty()) {
          --pos_;
          fail("empty terminal");
        }
        return out;
      } else {
        out.push_back(c);
        ++pos_;
      }
    }
    fail("unterminated terminal");
  }

  std::string read_feature_token() {
    skip_ws();
    const auto b = pos_;
    while (pos_ < line_.size() && feature_char(line_[pos_])) ++pos_;
    if (b == pos_) fail("expected feature key or value");
    return std::string(line_.substr(b, pos_ - b));
  }

  FeatureMap read_features() {
    ++pos_;  // '['
    FeatureMap out;
    for (;;) {
      skip_ws();
      const auto key_col = pos_;
      auto key = read_feature_token();
      skip_ws();
      if (pos_ >= line_.size() || line_[pos_] != '=') fail("expected '=' in feature block");
      ++pos_;
      auto value = read_feature_token();
      if (!out.emplace(key, value).second) {
        pos_ = key_col;
        fail("feature '" + key + "' given twice");
      }
      skip_ws();
      if (pos_ < line_.size() && line_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (pos_ < line_.size() && line_[pos_] == ']') {
        ++pos_;
        return out;
      }
      fail("expected ',' or ']' in feature block");
    }
  }

  RawAlt read_alt() {
    RawAlt alt;
    alt.line = line_no_;
    for (;;) {
      skip_ws();
      if (pos_ >= line_.size() || line_[pos_] == '|' || line_[pos_] == '#') break;
      const char c = line_[pos_];
      if (c == '[') {
        if (alt.rhs.empty()) fail("feature block before any symbol");
        alt.features = read_features();
        skip_ws();
        if (pos_ < line_.size() && line_[pos_] != '|' && line_[pos_] != '#') {
          fail("feature block must end the alternative");
        }
        break;
      }
      alt.columns.push_back(pos_ + 1);
      if (c == '\'') {
        alt.rhs.push_back({Symbol::Kind::terminal, read_quoted()});
      } else if (ident_start(c)) {
        alt.rhs.push_back({Symbol::Kind::nonterminal, read_ident()});
      } else {
        fail(std::string("unexpected character '") + c + "'");
      }
    }
    if (alt.rhs.empty()) fail("empty alternative");
    return alt;
  }

  void read_alternatives(RawRule& rule) {
    for (;;) {
      rule.alts.push_back(read_alt());
      skip_ws();
      if (pos_ < line_.size() && line_[pos_] == '|') {
        ++pos_;
        continue;
      }
      if (!at_end_or_comment()) fail("unexpected trailing input");
      return;
    }
  }

  void parse_line() {
    if (at_end_or_comment()) return;
    if (line_[pos_] == '|') {
      if (rules.empty()) fail("continuation line without a rule");
      ++pos_;
      read_alternatives(rules.back());
      return;
    }
    RawRule rule;
    rule.line = line_no_;
    rule.column = pos_ + 1;
    rule.lhs = read_ident();
    skip_ws();
    if (line_.substr(pos_, 2) != "->") fail("expected '->'");
    pos_ += 2;
    read_alternatives(rule);
    rules.push_back(std::move(rule));
  }

  std::string_view src_;
  std::string_view line_;
  std::size_t line_no_ = 0;
  std::size_t pos_ = 0;
};

/// Splits `cat` into transitivity/polarity and checks closed vocabularies.
inline FeatureMap canonical_features(const FeatureMap& raw, std::size_t line) {
  FeatureMap out;
  auto put = [&](const std::string& k, const std::string& v) {
    auto [it, inserted] = out.emplace(k, v);
    if (!inserted && it->second != v) {
      throw GrammarError(GrammarError::Kind::feature_conflict,
                         "feature '" + k + "' set to both '" + it->second + "' and '" + v + "'",
                         line, 1);
    }
  };
  for (const auto& [key, value] : raw) {
    const std::string k = key == "cat" ? "category" : key;
    const auto& vocab = closed_vocabularies();
    if (auto it = vocab.find(k); it != vocab.end()) {
      if (std::find(it->second.begin(), it->second.end(), value) == it->second.end()) {
        throw GrammarError(GrammarError::Kind::invalid_feature,
                           "invalid value '" + value + "' for feature '" + key + "'", line, 1);
      }
    }
    if (k == "category") {
      const auto c = *category_from_string(value);
      const bool transitive = c == Category::transitive || c == Category::transitive_negation;
      const bool negative =
          c == Category::intransitive_negation || c == Category::transitive_negation;
      put("transitivity", transitive ? "transitive" : "intransitive");
      put("polarity", negative ? "negative" : "affirmative");
    } else {
      put(k, value);
    }
  }
  return out;
}

}  // namespace detail

/// Parses and validates a grammar. Throws GrammarError.
inline Grammar parse_grammar(std::string_view source) {
  detail::Parser parser(source);
  parser.run();

  Grammar g;
  g.expected_count_ = parser.expected_count;
  if (parser.rules.empty()) {
    throw GrammarError(GrammarError::Kind::empty_grammar, "grammar has no productions");
  }
  g.start_ = parser.rules.front().lhs;

  struct Use {
    std::size_t line, column;
  };
  std::map<std::string, Use> first_use;
  for (const auto& rule : parser.rules) {
    if (!g.by_lhs_.count(rule.lhs)) g.order_.push_back(rule.lhs);
    auto& ids = g.by_lhs_[rule.lhs];
    for (const auto& alt : rule.alts) {
      Production p;
      p.id = g.productions_.size();
      p.lhs = rule.lhs;
      p.rhs = alt.rhs;
      p.features = detail::canonical_features(alt.features, alt.line);
      p.line = alt.line;
      for (auto other : ids) {
        const auto& q = g.productions_[other];
        if (q.rhs == p.rhs) {
          throw GrammarError(GrammarError::Kind::duplicate_production,
                             q.features == p.features
                                 ? "duplicate production for '" + p.lhs + "' (first on line " +
                                       std::to_string(q.line) + ")"
                                 : "duplicate production for '" + p.lhs +
                                       "' with conflicting feature tags (first on line " +
                                       std::to_string(q.line) + ")",
                             alt.line, 1);
        }
      }
      for (std::size_t i = 0; i < alt.rhs.size(); ++i) {
        if (!alt.rhs[i].is_terminal()) first_use.try_emplace(alt.rhs[i].name, Use{alt.line, alt.columns[i]});
      }
      ids.push_back(p.id);
      g.productions_.push_back(std::move(p));
    }
  }

  for (const auto& [name, use] : first_use) {
    if (!g.by_lhs_.count(name)) {
      throw GrammarError(GrammarError::Kind::undefined_nonterminal,
                         "undefined nonterminal '" + name + "'", use.line, use.column);
    }
  }

  // Cycle detection over the nonterminal dependency graph.
  enum class Mark { unvisited, active, done };
  std::unordered_map<std::string, Mark> mark;
  std::vector<std::string> stack;
  auto visit = [&](auto&& self, const std::string& nt) -> void {
    mark[nt] = Mark::active;
    stack.push_back(nt);
    for (auto id : g.by_lhs_.at(nt)) {
      const auto& p = g.productions_[id];
      for (const auto& s : p.rhs) {
        if (s.is_terminal()) continue;
        const auto m = mark[s.name];
        if (m == Mark::active) {
          std::string cycle;
          auto from = std::find(stack.begin(), stack.end(), s.name);
          for (auto it = from; it != stack.end(); ++it) cycle += *it + " -> ";
          cycle += s.name;
          throw GrammarError(GrammarError::Kind::recursive, "recursive grammar: " + cycle, p.line, 1);
        }
        if (m == Mark::unvisited) self(self, s.name);
      }
    }
    stack.pop_back();
    mark[nt] = Mark::done;
  };
  for (const auto& nt : g.order_) {
    if (mark[nt] == Mark::unvisited) visit(visit, nt);
  }

  // Every derivation's accumulated features must be conflict free. The set of
  // reachable feature maps per nonterminal is computed bottom-up; it stays
  // small because it only grows with distinct tag combinations.
  std::unordered_map<std::string, std::set<FeatureMap>> signatures;
  auto sigs = [&](auto&& self, const std::string& nt) -> const std::set<FeatureMap>& {
    if (auto it = signatures.find(nt); it != signatures.end()) return it->second;
    std::set<FeatureMap> out;
    for (auto id : g.by_lhs_.at(nt)) {
      const auto& p = g.productions_[id];
      std::set<FeatureMap> acc = {p.features};
      for (const auto& s : p.rhs) {
        if (s.is_terminal()) continue;
        const auto& child = self(self, s.name);
        std::set<FeatureMap> next;
        for (const auto& a : acc) {
          for (const auto& b : child) {
            std::string key;
            auto merged = detail::merge(a, b, &key);
            if (!merged) {
              throw GrammarError(GrammarError::Kind::feature_conflict,
                                 "production of '" + p.lhs + "' can derive conflicting values for feature '" +
                                     key + "'",
                                 p.line, 1);
            }
            next.insert(std::move(*merged));
          }
        }
        acc = std::move(next);
      }
      out.insert(acc.begin(), acc.end());
    }
    return signatures.emplace(nt, std::move(out)).first->second;
  };
  for (const auto& nt : g.order_) sigs(sigs, nt);

  return g;
}

namespace detail {

inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) noexcept {
  return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max()
                                                           : a + b;
}
inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) noexcept {
  if (a == 0 || b == 0) return 0;
  return a > std::numeric_limits<std::uint64_t>::max() / b ? std::numeric_limits<std::uint64_t>::max()
                                                           : a * b;
}

}  // namespace detail

/// Number of derivations of the start symbol (sum over alternatives of the
/// product over their symbols), saturating at UINT64_MAX.
inline std::uint64_t count_derivations(const Grammar& g) {
  std::unordered_map<std::string, std::uint64_t> memo;
  auto count = [&](auto&& self, const std::string& nt) -> std::uint64_t {
    if (auto it = memo.find(nt); it != memo.end()) return it->second;
    std::uint64_t total = 0;
    for (auto id : g.alternatives(nt)) {
      std::uint64_t prod = 1;
      for (const auto& s : g.production(id).rhs) {
        if (!s.is_terminal()) prod = detail::sat_mul(prod, self(self, s.name));
      }
      total = detail::sat_add(total, prod);
    }
    memo.emplace(nt, total);
    return total;
  };
  return count(count, g.start_symbol());
}

inline constexpr std::size_t kDefaultExpansionCap = 100'000;

namespace detail {

struct Partial {
  std::vector<std::string> words;
  FeatureMap features;
  std::vector<std::size_t> derivation;
};

inline GeneratedSentence finish(Partial p) {
  GeneratedSentence s;
  s.derivation = std::move(p.derivation);
  s.features = std::move(p.features);
  s.features.try_emplace("transitivity", "intransitive");
  s.features.try_emplace("polarity", "affirmative");
  s.features.try_emplace("gender", "none");
  s.features.try_emplace("number", "singular");
  const bool transitive = s.features["transitivity"] == "transitive";
  const bool negative = s.features["polarity"] == "negative";
  s.category = transitive ? (negative ? Category::transitive_negation : Category::transitive)
                          : (negative ? Category::intransitive_negation : Category::intransitive);
  s.features["category"] = std::string(to_string(s.category));
  for (std::size_t i = 0; i < p.words.size(); ++i) {
    if (i) s.text.push_back(' ');
    s.text.append(p.words[i]);
  }
  return s;
}

}  // namespace detail

/// Every derivation of the start symbol, ordered lexicographically by
/// production-id sequence. Throws GrammarError(too_large) above `cap`.
inline std::vector<GeneratedSentence> expand(const Grammar& g,
                                             std::size_t cap = kDefaultExpansionCap) {
  const auto n = count_derivations(g);
  if (n > cap) {
    throw GrammarError(GrammarError::Kind::too_large,
                       "grammar yields " +
                           (n == std::numeric_limits<std::uint64_t>::max() ? std::string("over 2^64")
                                                                           : std::to_string(n)) +
                           " sentences, above the cap of " + std::to_string(cap));
  }

  using detail::Partial;
  std::unordered_map<std::string, std::vector<Partial>> memo;
  auto derive = [&](auto&& self, const std::string& nt) -> const std::vector<Partial>& {
    if (auto it = memo.find(nt); it != memo.end()) return it->second;
    std::vector<Partial> out;
    for (auto id : g.alternatives(nt)) {
      const auto& p = g.production(id);
      // Cartesian product over the right-hand side; earlier symbols vary
      // slowest, which keeps the id sequences in lexicographic order.
      std::vector<Partial> acc(1);
      acc[0].features = p.features;
      acc[0].derivation.push_back(id);
      for (const auto& s : p.rhs) {
        if (s.is_terminal()) {
          for (auto& a : acc) a.words.push_back(s.name);
          continue;
        }
        const auto& child = self(self, s.name);
        std::vector<Partial> next;
        next.reserve(acc.size() * child.size());
        for (const auto& a : acc) {
          for (const auto& c : child) {
            Partial m = a;
            m.words.insert(m.words.end(), c.words.begin(), c.words.end());
            m.derivation.insert(m.derivation.end(), c.derivation.begin(), c.derivation.end());
            // parse_grammar already rejected conflicting unions
            m.features = *detail::merge(m.features, c.features);
            next.push_back(std::move(m));
          }
        }
        acc = std::move(next);
      }
      for (auto& a : acc) out.push_back(std::move(a));
    }
    return memo.emplace(nt, std::move(out)).first->second;
  };

  const auto& all = derive(derive, g.start_symbol());
  std::vector<GeneratedSentence> sentences;
  sentences.reserve(all.size());
  for (const auto& p : all) sentences.push_back(detail::finish(p));
  return sentences;
}

/// Rebuilds a sentence from its derivation alone. Throws
/// GrammarError(invalid_derivation) if the ids do not form a leftmost
/// derivation of the start symbol.
inline GeneratedSentence replay(const Grammar& g, std::span<const std::size_t> derivation) {
  std::size_t next = 0;
  detail::Partial acc;
  auto bad = [](const std::string& msg) {
    return GrammarError(GrammarError::Kind::invalid_derivation, msg);
  };
  auto step = [&](auto&& self, const std::string& nt) -> void {
    if (next >= derivation.size()) throw bad("derivation ends early at '" + nt + "'");
    const auto id = derivation[next++];
    if (id >= g.productions().size()) throw bad("unknown production id " + std::to_string(id));
    const auto& p = g.production(id);
    if (p.lhs != nt) {
      throw bad("production " + std::to_string(id) + " rewrites '" + p.lhs + "', expected '" + nt + "'");
    }
    auto merged = detail::merge(acc.features, p.features);
    if (!merged) throw bad("conflicting features along derivation");
    acc.features = std::move(*merged);
    acc.derivation.push_back(id);
    for (const auto& s : p.rhs) {
      if (s.is_terminal()) {
        acc.words.push_back(s.name);
      } else {
        self(self, s.name);
      }
    }
  };
  step(step, g.start_symbol());
  if (next != derivation.size()) throw bad("trailing production ids in derivation");
  return detail::finish(std::move(acc));
}

/// Conjunction of key=value clauses over sentence features.
struct FeatureQuery {
  std::vector<std::pair<std::string, std::string>> clauses;

  /// "key=value,key=value". A bare value is read as category=value.
  static FeatureQuery parse(std::string_view spec) {
    FeatureQuery q;
    std::size_t start = 0;
    while (start <= spec.size()) {
      auto end = spec.find(',', start);
      if (end == std::string_view::npos) end = spec.size();
      auto clause = spec.substr(start, end - start);
      while (!clause.empty() && std::isspace(static_cast<unsigned char>(clause.front()))) clause.remove_prefix(1);
      while (!clause.empty() && std::isspace(static_cast<unsigned char>(clause.back()))) clause.remove_suffix(1);
      if (!clause.empty()) {
        const auto eq = clause.find('=');
        if (eq == std::string_view::npos) {
          q.clauses.emplace_back("category", std::string(clause));
        } else {
          std::string key(clause.substr(0, eq));
          if (key == "cat") key = "category";
          q.clauses.emplace_back(std::move(key), std::string(clause.substr(eq + 1)));
        }
      }
      if (end == spec.size()) break;
      start = end + 1;
    }
    return q;
  }
};

/// Order-preserving subset of `sentences` matching every clause of `query`.
/// Throws GrammarError(unknown_feature) for a key that is neither built in
/// nor present on any sentence, or a value outside a closed vocabulary.
inline std::vector<GeneratedSentence> filter_by_category(const std::vector<GeneratedSentence>& sentences,
                                                         const FeatureQuery& query) {
  const auto& vocab = detail::closed_vocabularies();
  for (const auto& [key, value] : query.clauses) {
    if (auto it = vocab.find(key); it != vocab.end()) {
      if (std::find(it->second.begin(), it->second.end(), value) == it->second.end()) {
        throw GrammarError(GrammarError::Kind::unknown_feature,
                           "invalid value '" + value + "' for feature '" + key + "'");
      }
      continue;
    }
    const bool seen = std::any_of(sentences.begin(), sentences.end(),
                                  [&](const GeneratedSentence& s) { return s.features.count(key) != 0; });
    if (!seen) throw GrammarError(GrammarError::Kind::unknown_feature, "unknown feature '" + key + "'");
  }
  std::vector<GeneratedSentence> out;
  for (const auto& s : sentences) {
    const bool ok = std::all_of(query.clauses.begin(), query.clauses.end(), [&](const auto& c) {
      auto it = s.features.find(c.first);
      return it != s.features.end() && it->second == c.second;
    });
    if (ok) out.push_back(s);
  }
  return out;
}

}  // namespace nlgkit::grammar
