#pragma once

// UTF-8 helpers shared by the metric, cloze and annotation modules.
//
// Decoding is lenient: a byte that does not start a well-formed sequence is
// passed through as a single-byte "code unit" so no input is ever rejected and
// re-encoding reproduces the original bytes.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nlgkit::text {

struct CodePoint {
  char32_t value;
  std::string_view bytes;  // slice of the source this code point came from
  bool valid;
};

namespace detail {

inline bool is_continuation(unsigned char c) noexcept { return (c & 0xC0) == 0x80; }

}  // namespace detail

/// Decodes the code point starting at `pos`; advances `pos`.
inline CodePoint decode_one(std::string_view s, std::size_t& pos) noexcept {
  const auto start = pos;
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto fail = [&]() {
    pos = start + 1;
    return CodePoint{b0, s.substr(start, 1), false};
  };
  std::size_t len = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    pos = start + 1;
    return CodePoint{b0, s.substr(start, 1), true};
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return fail();
  }
  if (start + len > s.size()) return fail();
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[start + i]);
    if (!detail::is_continuation(b)) return fail();
    cp = (cp << 6) | (b & 0x3F);
  }
  // Overlong forms, surrogates and out-of-range values are malformed.
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return fail();
  pos = start + len;
  return CodePoint{cp, s.substr(start, len), true};
}

inline std::vector<CodePoint> decode(std::string_view s) {
  std::vector<CodePoint> out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) out.push_back(decode_one(s, pos));
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

/// Unicode White_Space property.
inline bool is_space(char32_t c) noexcept {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

/// Punctuation and symbol characters that the metric tokenizer splits off.
/// Covers ASCII punctuation, the Latin-1 punctuation/symbol range, General
/// Punctuation, CJK punctuation and fullwidth ASCII punctuation.
inline bool is_punct(char32_t c) noexcept {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  if (c >= 0xA1 && c <= 0xBF) {
    // ª º and the superscript digits/fractions are letters or numbers.
    return c != 0xAA && c != 0xBA && c != 0xB2 && c != 0xB3 && c != 0xB9 && c != 0xBC &&
           c != 0xBD && c != 0xBE && c != 0xB5;
  }
  if (c == 0xD7 || c == 0xF7) return true;
  if (c >= 0x2010 && c <= 0x2027) return true;
  if (c >= 0x2030 && c <= 0x205E) return true;
  if (c >= 0x3001 && c <= 0x3003) return true;
  if (c >= 0x3008 && c <= 0x3011) return true;
  if (c >= 0xFF01 && c <= 0xFF0F) return true;
  if (c >= 0xFF1A && c <= 0xFF20) return true;
  return c == 0x055C || c == 0x055D || c == 0x0589 || c == 0x060C || c == 0x061B ||
         c == 0x061F || c == 0x06D4 || c == 0x0964 || c == 0x0965 || c == 0x1362 ||
         c == 0x1363 || c == 0x1364 || c == 0x1367 || c == 0x1368;
}

/// Simple (1:1) lowercase mapping for ASCII, Latin-1, Latin Extended-A,
/// Latin Extended Additional, Greek and Cyrillic. Other code points are returned unchanged.
inline char32_t to_lower(char32_t c) noexcept {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if ((c >= 0xC0 && c <= 0xDE) && c != 0xD7) return c + 32;
  if (c >= 0x100 && c <= 0x17F) {
    if (c == 0x130) return 'i';
    if (c == 0x178) return 0xFF;
    const bool odd_pairs = (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
    if (odd_pairs) return (c % 2 == 1) ? c + 1 : c;
    if (c == 0x138 || c == 0x149) return c;
    return (c % 2 == 0) ? c + 1 : c;
  }
  if ((c >= 0x1E00 && c <= 0x1E95) || (c >= 0x1EA0 && c <= 0x1EFF)) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

inline std::string lowercase(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto cp = decode_one(s, pos);
    if (cp.valid) {
      append_utf8(out, to_lower(cp.value));
    } else {
      out.append(cp.bytes);
    }
  }
  return out;
}

/// Splits on Unicode whitespace; runs of whitespace collapse.
inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto cp = decode_one(s, pos);
    if (cp.valid && is_space(cp.value)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.append(cp.bytes);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.append(sep);
    out.append(tokens[i]);
  }
  return out;
}

/// Trims and collapses internal whitespace to single ASCII spaces.
inline std::string normalize_whitespace(std::string_view s) { return join(split_whitespace(s)); }

/// Tokenizer used by every word-level metric: whitespace separates tokens,
/// and each punctuation character becomes a token of its own.
inline std::vector<std::string> tokenize_for_metric(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&]() {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto cp = decode_one(s, pos);
    if (cp.valid && is_space(cp.value)) {
      flush();
    } else if (cp.valid && is_punct(cp.value)) {
      flush();
      out.emplace_back(cp.bytes);
    } else {
      cur.append(cp.bytes);
    }
  }
  flush();
  return out;
}

}  // namespace nlgkit::text
