#pragma once

// Corpus-level text generation metrics: BLEU, chrF / chrF++, ROUGE-L and
// token-overlap F1 for extractive QA.
//
// All word-level metrics use text::tokenize_for_metric. Counts are aggregated
// as integers over the corpus before any division so the result does not
// depend on pair order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlgkit/error.hpp"
#include "nlgkit/text.hpp"

namespace nlgkit::metrics {

struct ScoredPair {
  std::string id;
  std::string hypothesis;
  std::vector<std::string> references;
};

enum class MetricName { bleu, chrf, chrf_plus_plus, rouge_l, f1 };

inline std::string_view to_string(MetricName m) noexcept {
  switch (m) {
    case MetricName::bleu: return "bleu";
    case MetricName::chrf: return "chrf";
    case MetricName::chrf_plus_plus: return "chrf++";
    case MetricName::rouge_l: return "rougeL";
    case MetricName::f1: return "f1";
  }
  return "?";
}

inline std::optional<MetricName> metric_from_string(std::string_view s) noexcept {
  if (s == "bleu") return MetricName::bleu;
  if (s == "chrf") return MetricName::chrf;
  if (s == "chrf++") return MetricName::chrf_plus_plus;
  if (s == "rougeL" || s == "rouge_l" || s == "rougel") return MetricName::rouge_l;
  if (s == "f1") return MetricName::f1;
  return std::nullopt;
}

/// Upper end of the metric's native range: 100 for BLEU/chrF, 1 for ROUGE-L/F1.
inline double max_value(MetricName m) noexcept {
  return (m == MetricName::rouge_l || m == MetricName::f1) ? 1.0 : 100.0;
}

/// Value on the 0-100 scale used in result tables.
inline double table_scale(MetricName m, double value) noexcept {
  return value * (100.0 / max_value(m));
}

struct MetricScore {
  MetricName metric = MetricName::bleu;
  double value = 0.0;
  // Metric-specific breakdown, e.g. "precision_1", "bp", "sys_len".
  std::map<std::string, double> components;
  std::vector<std::string> warnings;
};

class MetricError : public Error {
public:
  using Error::Error;
};

enum class Smoothing { none, exp };

namespace detail {

inline void require_pairs(const std::vector<ScoredPair>& pairs, std::string_view metric) {
  if (pairs.empty()) throw MetricError(std::string(metric) + ": empty pair list");
  for (const auto& p : pairs) {
    if (p.references.empty()) {
      throw MetricError(std::string(metric) + ": pair '" + p.id + "' has no references");
    }
  }
}

using NgramCounts = std::unordered_map<std::string, std::int64_t>;

// N-gram keys are length-prefixed concatenations, so distinct unit
// sequences never share a key whatever bytes the units contain.
inline NgramCounts ngram_counts(const std::vector<std::string>& units, std::size_t n) {
  NgramCounts counts;
  if (units.size() < n) return counts;
  std::string key;
  for (std::size_t i = 0; i + n <= units.size(); ++i) {
    key.clear();
    for (std::size_t j = 0; j < n; ++j) {
      key.append(std::to_string(units[i + j].size()));
      key.push_back(':');
      key.append(units[i + j]);
    }
    ++counts[key];
  }
  return counts;
}

inline std::int64_t total(const NgramCounts& c) {
  std::int64_t t = 0;
  for (const auto& [_, v] : c) t += v;
  return t;
}

inline std::int64_t overlap(const NgramCounts& hyp, const NgramCounts& ref) {
  std::int64_t m = 0;
  for (const auto& [k, v] : hyp) {
    if (auto it = ref.find(k); it != ref.end()) m += std::min(v, it->second);
  }
  return m;
}

/// Code points of `s` with whitespace removed.
inline std::vector<std::string> characters(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto cp = text::decode_one(s, pos);
    if (cp.valid && text::is_space(cp.value)) continue;
    out.emplace_back(cp.bytes);
  }
  return out;
}

}  // namespace detail

/// Corpus BLEU on the 0-100 scale.
inline MetricScore bleu(const std::vector<ScoredPair>& pairs, int max_order = 4,
                        Smoothing smoothing = Smoothing::none) {
  detail::require_pairs(pairs, "bleu");
  if (max_order < 1) throw MetricError("bleu: max_order must be >= 1");
  const auto orders = static_cast<std::size_t>(max_order);

  std::vector<std::int64_t> correct(orders, 0), totals(orders, 0);
  std::int64_t sys_len = 0, ref_len = 0;
  for (const auto& p : pairs) {
    const auto hyp = text::tokenize_for_metric(p.hypothesis);
    std::vector<std::vector<std::string>> refs;
    refs.reserve(p.references.size());
    for (const auto& r : p.references) refs.push_back(text::tokenize_for_metric(r));

    const auto hlen = static_cast<std::int64_t>(hyp.size());
    sys_len += hlen;
    // Closest reference length; ties go to the shorter reference.
    std::int64_t best = -1;
    for (const auto& r : refs) {
      const auto rlen = static_cast<std::int64_t>(r.size());
      if (best < 0 || std::llabs(rlen - hlen) < std::llabs(best - hlen) ||
          (std::llabs(rlen - hlen) == std::llabs(best - hlen) && rlen < best)) {
        best = rlen;
      }
    }
    ref_len += best;

    for (std::size_t n = 1; n <= orders; ++n) {
      const auto hyp_counts = detail::ngram_counts(hyp, n);
      detail::NgramCounts max_ref;
      for (const auto& r : refs) {
        for (const auto& [k, v] : detail::ngram_counts(r, n)) {
          auto& slot = max_ref[k];
          slot = std::max(slot, v);
        }
      }
      correct[n - 1] += detail::overlap(hyp_counts, max_ref);
      totals[n - 1] += detail::total(hyp_counts);
    }
  }

  MetricScore score;
  score.metric = MetricName::bleu;
  score.components["sys_len"] = static_cast<double>(sys_len);
  score.components["ref_len"] = static_cast<double>(ref_len);

  std::vector<double> precisions(orders, 0.0);
  double smooth = 1.0;
  for (std::size_t n = 0; n < orders; ++n) {
    if (totals[n] == 0) continue;
    if (correct[n] == 0) {
      if (smoothing == Smoothing::exp) {
        smooth *= 2.0;
        precisions[n] = 1.0 / (smooth * static_cast<double>(totals[n]));
      }
    } else {
      precisions[n] = static_cast<double>(correct[n]) / static_cast<double>(totals[n]);
    }
  }
  for (std::size_t n = 0; n < orders; ++n) {
    score.components["precision_" + std::to_string(n + 1)] = 100.0 * precisions[n];
  }

  double bp = 0.0;
  if (sys_len > 0) {
    bp = sys_len < ref_len
             ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(sys_len))
             : 1.0;
  } else {
    score.warnings.push_back("bleu: all hypotheses are empty");
  }
  score.components["bp"] = bp;

  // Orders for which the whole corpus has no hypothesis n-grams (every
  // hypothesis shorter than n) drop out of the geometric mean.
  double log_sum = 0.0;
  std::size_t effective = 0;
  for (std::size_t n = 0; n < orders; ++n) {
    if (totals[n] == 0) continue;
    if (precisions[n] <= 0.0) {
      score.value = 0.0;
      return score;
    }
    log_sum += std::log(precisions[n]);
    ++effective;
  }
  score.components["effective_order"] = static_cast<double>(effective);
  if (effective == 0) {
    score.value = 0.0;
    return score;
  }
  score.value = std::min(100.0, 100.0 * bp * std::exp(log_sum / static_cast<double>(effective)));
  return score;
}

namespace detail {

struct ChrfStats {
  // Per order: matches, hypothesis n-grams, reference n-grams.
  std::vector<std::int64_t> match, hyp, ref;
};

inline ChrfStats chrf_stats(std::string_view hypothesis, std::string_view reference,
                            int char_order, int word_order) {
  const auto orders = static_cast<std::size_t>(char_order + word_order);
  ChrfStats s{std::vector<std::int64_t>(orders, 0), std::vector<std::int64_t>(orders, 0),
              std::vector<std::int64_t>(orders, 0)};
  const auto hc = characters(hypothesis);
  const auto rc = characters(reference);
  for (int n = 1; n <= char_order; ++n) {
    const auto h = ngram_counts(hc, static_cast<std::size_t>(n));
    const auto r = ngram_counts(rc, static_cast<std::size_t>(n));
    const auto i = static_cast<std::size_t>(n - 1);
    s.match[i] = overlap(h, r);
    s.hyp[i] = total(h);
    s.ref[i] = total(r);
  }
  if (word_order > 0) {
    const auto hw = text::tokenize_for_metric(hypothesis);
    const auto rw = text::tokenize_for_metric(reference);
    for (int n = 1; n <= word_order; ++n) {
      const auto h = ngram_counts(hw, static_cast<std::size_t>(n));
      const auto r = ngram_counts(rw, static_cast<std::size_t>(n));
      const auto i = static_cast<std::size_t>(char_order + n - 1);
      s.match[i] = overlap(h, r);
      s.hyp[i] = total(h);
      s.ref[i] = total(r);
    }
  }
  return s;
}

struct PrecisionRecallF {
  double precision = 0.0, recall = 0.0, f = 0.0;
};

inline PrecisionRecallF chrf_from_stats(const ChrfStats& s, double beta) {
  double p_sum = 0.0, r_sum = 0.0;
  std::size_t contributing = 0;
  for (std::size_t i = 0; i < s.match.size(); ++i) {
    if (s.hyp[i] == 0 && s.ref[i] == 0) continue;
    ++contributing;
    if (s.hyp[i] > 0) p_sum += static_cast<double>(s.match[i]) / static_cast<double>(s.hyp[i]);
    if (s.ref[i] > 0) r_sum += static_cast<double>(s.match[i]) / static_cast<double>(s.ref[i]);
  }
  PrecisionRecallF out;
  if (contributing == 0) return out;
  out.precision = p_sum / static_cast<double>(contributing);
  out.recall = r_sum / static_cast<double>(contributing);
  const double b2 = beta * beta;
  const double denom = b2 * out.precision + out.recall;
  out.f = denom > 0.0 ? (1.0 + b2) * out.precision * out.recall / denom : 0.0;
  return out;
}

}  // namespace detail

/// chrF (word_order = 0) or chrF++ (word_order = 2) on the 0-100 scale.
/// With several references, each pair contributes the statistics of the
/// reference with the highest sentence-level score (first one on ties).
inline MetricScore chrf(const std::vector<ScoredPair>& pairs, int char_order = 6,
                        int word_order = 0, double beta = 2.0) {
  detail::require_pairs(pairs, "chrf");
  if (char_order < 1) throw MetricError("chrf: char_order must be >= 1");
  if (word_order < 0) throw MetricError("chrf: word_order must be >= 0");
  if (!(beta > 0.0)) throw MetricError("chrf: beta must be > 0");

  const auto orders = static_cast<std::size_t>(char_order + word_order);
  detail::ChrfStats corpus{std::vector<std::int64_t>(orders, 0),
                           std::vector<std::int64_t>(orders, 0),
                           std::vector<std::int64_t>(orders, 0)};
  for (const auto& p : pairs) {
    std::optional<detail::ChrfStats> best;
    double best_f = -1.0;
    for (const auto& r : p.references) {
      auto s = detail::chrf_stats(p.hypothesis, r, char_order, word_order);
      const double f = detail::chrf_from_stats(s, beta).f;
      if (f > best_f) {
        best_f = f;
        best = std::move(s);
      }
    }
    for (std::size_t i = 0; i < orders; ++i) {
      corpus.match[i] += best->match[i];
      corpus.hyp[i] += best->hyp[i];
      corpus.ref[i] += best->ref[i];
    }
  }
  const auto prf = detail::chrf_from_stats(corpus, beta);
  MetricScore score;
  score.metric = word_order > 0 ? MetricName::chrf_plus_plus : MetricName::chrf;
  score.value = std::min(100.0, 100.0 * prf.f);
  score.components["precision"] = 100.0 * prf.precision;
  score.components["recall"] = 100.0 * prf.recall;
  score.components["char_order"] = char_order;
  score.components["word_order"] = word_order;
  score.components["beta"] = beta;
  return score;
}

/// Length of the longest common subsequence, O(|a|*|b|) time, O(|b|) space.
template <typename T>
std::size_t lcs_length(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;  // row[j-1] from the previous iteration of i
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(up, row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

/// Mean over pairs of the LCS F-measure against the best reference; 0-1 scale.
inline MetricScore rouge_l(const std::vector<ScoredPair>& pairs) {
  detail::require_pairs(pairs, "rougeL");
  double f_sum = 0.0, p_sum = 0.0, r_sum = 0.0;
  for (const auto& pair : pairs) {
    const auto hyp = text::tokenize_for_metric(pair.hypothesis);
    detail::PrecisionRecallF best{0.0, 0.0, -1.0};
    for (const auto& ref_text : pair.references) {
      const auto ref = text::tokenize_for_metric(ref_text);
      const auto l = static_cast<double>(lcs_length(hyp, ref));
      detail::PrecisionRecallF cur;
      cur.precision = hyp.empty() ? 0.0 : l / static_cast<double>(hyp.size());
      cur.recall = ref.empty() ? 0.0 : l / static_cast<double>(ref.size());
      const double pr = cur.precision + cur.recall;
      cur.f = pr > 0.0 ? 2.0 * cur.precision * cur.recall / pr : 0.0;
      if (cur.f > best.f) best = cur;
    }
    f_sum += best.f;
    p_sum += best.precision;
    r_sum += best.recall;
  }
  const auto n = static_cast<double>(pairs.size());
  MetricScore score;
  score.metric = MetricName::rouge_l;
  score.value = std::clamp(f_sum / n, 0.0, 1.0);
  score.components["precision"] = p_sum / n;
  score.components["recall"] = r_sum / n;
  return score;
}

/// QA answer normalization: lowercase, punctuation removed, whitespace
/// collapsed. Articles are kept (the normalization is language-neutral).
inline std::vector<std::string> normalize_answer(std::string_view s) {
  std::string stripped;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto cp = text::decode_one(s, pos);
    if (cp.valid && text::is_punct(cp.value)) {
      stripped.push_back(' ');
    } else {
      stripped.append(cp.bytes);
    }
  }
  return text::split_whitespace(text::lowercase(stripped));
}

/// Token-bag F1 of one prediction, maximised over gold answers; 0-1 scale.
inline MetricScore qa_f1(std::string_view prediction, const std::vector<std::string>& gold_answers) {
  if (gold_answers.empty()) throw MetricError("f1: no gold answers");
  const auto pred = normalize_answer(prediction);
  std::map<std::string, std::int64_t> pred_bag;
  for (const auto& t : pred) ++pred_bag[t];

  detail::PrecisionRecallF best{0.0, 0.0, -1.0};
  for (const auto& g : gold_answers) {
    const auto gold = normalize_answer(g);
    detail::PrecisionRecallF cur;
    if (pred.empty() || gold.empty()) {
      cur.f = (pred.empty() && gold.empty()) ? 1.0 : 0.0;
      cur.precision = cur.recall = cur.f;
    } else {
      std::map<std::string, std::int64_t> gold_bag;
      for (const auto& t : gold) ++gold_bag[t];
      std::int64_t common = 0;
      for (const auto& [tok, c] : pred_bag) {
        if (auto it = gold_bag.find(tok); it != gold_bag.end()) common += std::min(c, it->second);
      }
      if (common > 0) {
        cur.precision = static_cast<double>(common) / static_cast<double>(pred.size());
        cur.recall = static_cast<double>(common) / static_cast<double>(gold.size());
        cur.f = 2.0 * cur.precision * cur.recall / (cur.precision + cur.recall);
      }
    }
    if (cur.f > best.f) best = cur;
  }
  MetricScore score;
  score.metric = MetricName::f1;
  score.value = best.f;
  score.components["precision"] = best.precision;
  score.components["recall"] = best.recall;
  return score;
}

/// Mean of per-item QA F1 over a corpus; references are the gold answers.
inline MetricScore qa_f1(const std::vector<ScoredPair>& pairs) {
  detail::require_pairs(pairs, "f1");
  double f = 0.0, p = 0.0, r = 0.0;
  for (const auto& pair : pairs) {
    const auto s = qa_f1(pair.hypothesis, pair.references);
    f += s.value;
    p += s.components.at("precision");
    r += s.components.at("recall");
  }
  const auto n = static_cast<double>(pairs.size());
  MetricScore score;
  score.metric = MetricName::f1;
  score.value = std::clamp(f / n, 0.0, 1.0);
  score.components["precision"] = p / n;
  score.components["recall"] = r / n;
  return score;
}

/// Metric selection plus its parameters, as declared in a test-set manifest.
struct MetricConfig {
  MetricName name = MetricName::bleu;
  int max_order = 4;
  Smoothing smoothing = Smoothing::none;
  int char_order = 6;
  int word_order = 0;  // forced to 2 for chrF++ unless set explicitly
  double beta = 2.0;
};

inline MetricScore evaluate(const MetricConfig& cfg, const std::vector<ScoredPair>& pairs) {
  switch (cfg.name) {
    case MetricName::bleu: return bleu(pairs, cfg.max_order, cfg.smoothing);
    case MetricName::chrf: return chrf(pairs, cfg.char_order, cfg.word_order, cfg.beta);
    case MetricName::chrf_plus_plus:
      return chrf(pairs, cfg.char_order, cfg.word_order > 0 ? cfg.word_order : 2, cfg.beta);
    case MetricName::rouge_l: return rouge_l(pairs);
    case MetricName::f1: return qa_f1(pairs);
  }
  throw MetricError("unknown metric");
}

}  // namespace nlgkit::metrics
