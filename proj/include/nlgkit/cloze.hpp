#pragma once

// Cloze and span-corruption example construction.
//
// Masked positions are replaced by sentinel tokens <extra_id_K>. Consecutive
// masked positions collapse into one sentinel, and sentinels are numbered
// from 0 in order of appearance. Targets list each sentinel followed by the
// tokens it hides. Span-corruption targets end with one extra sentinel; cloze
// targets do not.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "nlgkit/error.hpp"
#include "nlgkit/rng.hpp"
#include "nlgkit/text.hpp"

namespace nlgkit::cloze {

using Tokens = std::vector<std::string>;

/// Turns a sentence into tokens. Swap in a subword tokenizer to mask
/// subwords instead of words.
using Tokenizer = std::function<Tokens(std::string_view)>;

inline Tokens whitespace_tokenizer(std::string_view sentence) { return text::split_whitespace(sentence); }

class ClozeError : public Error {
public:
  enum class Kind {
    too_short,
    degenerate_rate,
    sentinel_collision,
    invalid_positions,
    malformed_example,
    insufficient_corpus,
    invalid_splits,
  };
  ClozeError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

inline std::string sentinel(std::size_t index) { return "<extra_id_" + std::to_string(index) + ">"; }

/// Index K if `token` is exactly <extra_id_K>.
inline std::optional<std::size_t> sentinel_index(std::string_view token) {
  constexpr std::string_view prefix = "<extra_id_";
  if (token.size() <= prefix.size() + 1 || token.substr(0, prefix.size()) != prefix || token.back() != '>') {
    return std::nullopt;
  }
  const auto digits = token.substr(prefix.size(), token.size() - prefix.size() - 1);
  if (digits.empty() || (digits.size() > 1 && digits.front() == '0')) return std::nullopt;
  std::size_t k = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return k;
}

struct ClozeExample {
  Tokens original;
  Tokens masked_input;
  Tokens target;
  std::string language_code;
  std::uint64_t seed_record = 0;

  friend bool operator==(const ClozeExample&, const ClozeExample&) = default;
};

struct CorruptedPair {
  Tokens input;
  Tokens target;

  friend bool operator==(const CorruptedPair&, const CorruptedPair&) = default;
};

namespace detail {

inline void require_maskable(const Tokens& tokens) {
  if (tokens.size() < 2) {
    throw ClozeError(ClozeError::Kind::too_short,
                     "sentence too short: " + std::to_string(tokens.size()) + " token(s), need at least 2");
  }
  for (const auto& t : tokens) {
    if (sentinel_index(t)) {
      throw ClozeError(ClozeError::Kind::sentinel_collision, "token '" + t + "' collides with the sentinel form");
    }
  }
}

}  // namespace detail

/// Replaces `positions` (any order, no duplicates, all < size) with
/// collapsed sentinels. With `terminal_sentinel`, the target ends with one
/// extra sentinel.
inline CorruptedPair apply_mask(const Tokens& tokens, std::span<const std::size_t> positions,
                                bool terminal_sentinel) {
  std::vector<bool> masked(tokens.size(), false);
  for (auto p : positions) {
    if (p >= tokens.size() || masked[p]) {
      throw ClozeError(ClozeError::Kind::invalid_positions, "mask position " + std::to_string(p) +
                                                                " is out of range or repeated");
    }
    masked[p] = true;
  }
  CorruptedPair out;
  std::size_t next = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!masked[i]) {
      out.input.push_back(tokens[i]);
      continue;
    }
    if (i == 0 || !masked[i - 1]) {
      out.input.push_back(sentinel(next));
      out.target.push_back(sentinel(next));
      ++next;
    }
    out.target.push_back(tokens[i]);
  }
  if (terminal_sentinel) out.target.push_back(sentinel(next));
  return out;
}

/// Reconstructs the original tokens from a masked input and its target.
/// Throws ClozeError(malformed_example) when the pair violates the sentinel
/// discipline.
inline Tokens splice(const Tokens& masked_input, const Tokens& target) {
  auto malformed = [](const std::string& why) {
    return ClozeError(ClozeError::Kind::malformed_example, "malformed example: " + why);
  };
  // spans[k] = tokens hidden behind sentinel k
  std::vector<Tokens> spans;
  for (const auto& t : target) {
    if (auto k = sentinel_index(t)) {
      if (*k != spans.size()) throw malformed("target sentinels out of order");
      spans.emplace_back();
    } else {
      if (spans.empty()) throw malformed("target does not start with a sentinel");
      spans.back().push_back(t);
    }
  }
  Tokens out;
  std::size_t used = 0;
  bool prev_sentinel = false;
  for (const auto& t : masked_input) {
    if (auto k = sentinel_index(t)) {
      if (*k != used) throw malformed("input sentinels out of order");
      if (prev_sentinel) throw malformed("adjacent sentinels in input");
      if (used >= spans.size()) throw malformed("input sentinel missing from target");
      if (spans[used].empty()) throw malformed("empty span for an input sentinel");
      out.insert(out.end(), spans[used].begin(), spans[used].end());
      ++used;
      prev_sentinel = true;
    } else {
      out.push_back(t);
      prev_sentinel = false;
    }
  }
  // At most one trailing, empty, terminating sentinel may remain.
  if (spans.size() > used + 1 || (spans.size() == used + 1 && !spans.back().empty())) {
    throw malformed("target has spans that do not appear in the input");
  }
  return out;
}

/// Largest mask count for mask-at-least-one: max(1, floor(n / 10)).
inline std::size_t mask_cap(std::size_t n) noexcept { return std::max<std::size_t>(1, n / 10); }

/// Tokens dropped by span corruption: round(rate * n) clamped to [1, n - 1].
inline std::size_t corruption_count(std::size_t n, double rate) {
  if (!(rate > 0.0 && rate < 1.0)) {
    throw ClozeError(ClozeError::Kind::degenerate_rate, "corruption rate must lie strictly between 0 and 1");
  }
  if (n < 2) throw ClozeError(ClozeError::Kind::too_short, "sentence too short for span corruption");
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

inline ClozeExample make_example(const Tokens& tokens, std::span<const std::size_t> positions,
                                 std::uint64_t seed) {
  auto pair = apply_mask(tokens, positions, false);
  return ClozeExample{tokens, std::move(pair.input), std::move(pair.target), {}, seed};
}

/// Masks exactly one uniformly chosen token.
inline ClozeExample mask_one(const Tokens& tokens, std::uint64_t seed) {
  detail::require_maskable(tokens);
  Rng rng(seed);
  const std::size_t pos = rng.below(tokens.size());
  return make_example(tokens, std::span<const std::size_t>(&pos, 1), seed);
}

/// Masks k tokens, k uniform in [1, mask_cap(n)], positions uniform without
/// replacement.
inline ClozeExample mask_at_least_one(const Tokens& tokens, std::uint64_t seed) {
  detail::require_maskable(tokens);
  Rng rng(seed);
  const auto k = 1 + static_cast<std::size_t>(rng.below(mask_cap(tokens.size())));
  const auto positions = rng.sample_without_replacement(tokens.size(), k);
  return make_example(tokens, positions, seed);
}

/// Denoising pair: corruption_count(n, rate) tokens dropped uniformly,
/// consecutive drops collapsed, target terminated by an extra sentinel.
inline CorruptedPair span_corrupt(const Tokens& tokens, double corruption_rate, std::uint64_t seed) {
  const auto k = corruption_count(tokens.size(), corruption_rate);
  detail::require_maskable(tokens);
  Rng rng(seed);
  const auto positions = rng.sample_without_replacement(tokens.size(), k);
  return apply_mask(tokens, positions, true);
}

enum class Mode { one, at_least_one };

inline ClozeExample make_cloze(Mode mode, const Tokens& tokens, std::uint64_t seed) {
  return mode == Mode::one ? mask_one(tokens, seed) : mask_at_least_one(tokens, seed);
}

struct SplitSpec {
  std::size_t train = 200;
  std::size_t dev = 50;
  std::size_t test = 100;

  std::size_t total() const noexcept { return train + dev + test; }

  void validate() const {
    if (train == 0 || dev == 0 || test == 0) {
      throw ClozeError(ClozeError::Kind::invalid_splits, "every split size must be > 0");
    }
  }

  /// "train,dev,test", e.g. "200,50,100".
  static SplitSpec parse(std::string_view s) {
    std::size_t v[3] = {0, 0, 0};
    std::size_t idx = 0;
    std::size_t start = 0;
    while (true) {
      auto end = s.find(',', start);
      if (end == std::string_view::npos) end = s.size();
      if (idx >= 3) throw ClozeError(ClozeError::Kind::invalid_splits, "expected three split sizes");
      auto part = s.substr(start, end - start);
      auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v[idx]);
      if (ec != std::errc() || ptr != part.data() + part.size() || part.empty()) {
        throw ClozeError(ClozeError::Kind::invalid_splits, "malformed split size '" + std::string(part) + "'");
      }
      ++idx;
      if (end == s.size()) break;
      start = end + 1;
    }
    if (idx != 3) throw ClozeError(ClozeError::Kind::invalid_splits, "expected three split sizes");
    SplitSpec spec{v[0], v[1], v[2]};
    spec.validate();
    return spec;
  }
};

struct LanguageSplits {
  std::string language;
  std::vector<ClozeExample> train, dev, test;
};

struct LanguageFailure {
  std::string language;
  std::string message;
};

struct DatasetResult {
  std::vector<LanguageSplits> built;      // sorted by language code
  std::vector<LanguageFailure> failed;    // sorted by language code
};

/// Builds one language's splits. Sentences are whitespace-normalised,
/// deduplicated (first occurrence wins) and dropped if excluded, shorter than
/// two tokens or containing a sentinel-shaped token. The eligible pool is
/// shuffled with the stream derived from (seed, language) and cut into
/// train/dev/test in that order; each example's mask seed is the next draw
/// of the same stream.
inline LanguageSplits build_language(const std::string& language, const std::vector<std::string>& sentences,
                                     Mode mode, const SplitSpec& splits,
                                     const std::unordered_set<std::string>& exclusion, std::uint64_t seed,
                                     const Tokenizer& tokenizer = whitespace_tokenizer) {
  splits.validate();
  std::vector<Tokens> pool;
  std::unordered_set<std::string> seen;
  for (const auto& raw : sentences) {
    auto norm = text::normalize_whitespace(raw);
    if (norm.empty() || exclusion.count(norm) || !seen.insert(norm).second) continue;
    auto tokens = tokenizer(norm);
    if (tokens.size() < 2) continue;
    if (std::any_of(tokens.begin(), tokens.end(), [](const std::string& t) { return sentinel_index(t).has_value(); })) {
      continue;
    }
    pool.push_back(std::move(tokens));
  }
  if (pool.size() < splits.total()) {
    throw ClozeError(ClozeError::Kind::insufficient_corpus,
                     language + ": " + std::to_string(pool.size()) + " eligible sentences, need " +
                         std::to_string(splits.total()));
  }

  Rng rng(Rng::derive(seed, language));
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  LanguageSplits out;
  out.language = language;
  std::size_t cursor = 0;
  auto take = [&](std::vector<ClozeExample>& dst, std::size_t count) {
    dst.reserve(count);
    for (std::size_t i = 0; i < count; ++i, ++cursor) {
      auto ex = make_cloze(mode, pool[order[cursor]], rng.next());
      ex.language_code = language;
      dst.push_back(std::move(ex));
    }
  };
  take(out.train, splits.train);
  take(out.dev, splits.dev);
  take(out.test, splits.test);
  return out;
}

/// Builds every language independently (concurrently); a language with too
/// few eligible sentences is reported in `failed` and the rest proceed.
/// `exclusion` holds raw sentences and is normalised here.
inline DatasetResult build_cloze_dataset(const std::map<std::string, std::vector<std::string>>& corpus, Mode mode,
                                         const SplitSpec& splits, const std::vector<std::string>& exclusion,
                                         std::uint64_t seed, const Tokenizer& tokenizer = whitespace_tokenizer) {
  splits.validate();
  std::unordered_set<std::string> excluded;
  for (const auto& s : exclusion) excluded.insert(text::normalize_whitespace(s));

  std::vector<std::future<LanguageSplits>> jobs;
  jobs.reserve(corpus.size());
  for (const auto& [lang, sentences] : corpus) {
    jobs.push_back(std::async(std::launch::async, [&, lang = lang]() {
      return build_language(lang, sentences, mode, splits, excluded, seed, tokenizer);
    }));
  }
  DatasetResult result;
  auto it = corpus.begin();
  for (auto& job : jobs) {
    try {
      result.built.push_back(job.get());
    } catch (const ClozeError& e) {
      if (e.kind() != ClozeError::Kind::insufficient_corpus) throw;
      result.failed.push_back({it->first, e.what()});
    }
    ++it;
  }
  return result;
}

/// JSONL row {"id", "lang", "input", "target"} with tokens space-joined.
inline nlohmann::json to_json_row(const ClozeExample& ex, const std::string& id) {
  return nlohmann::json{{"id", id},
                        {"lang", ex.language_code},
                        {"input", text::join(ex.masked_input)},
                        {"target", text::join(ex.target)}};
}

}  // namespace nlgkit::cloze
