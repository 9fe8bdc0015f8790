#pragma once

// Blinded human evaluation: assignment, rating records, agreement and
// per-category summaries.

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include <json.hpp>

#include "nlgkit/error.hpp"
#include "nlgkit/io.hpp"
#include "nlgkit/rng.hpp"

namespace nlgkit::annotation {

using json = nlohmann::json;

class AnnotationError : public Error {
public:
  enum class Kind {
    empty_input,
    duplicate_item,
    invalid_model_id,
    invalid_rating,
    length_mismatch,
    dangling_item,
    invalid_record,
    unauthorized,
    log_failure,
  };
  AnnotationError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

enum class Dimension { faithfulness, fluency };

inline std::string_view to_string(Dimension d) noexcept {
  return d == Dimension::faithfulness ? "faithfulness" : "fluency";
}

inline std::optional<Dimension> dimension_from_string(std::string_view s) noexcept {
  if (s == "faithfulness") return Dimension::faithfulness;
  if (s == "fluency") return Dimension::fluency;
  return std::nullopt;
}

/// One model's output for one probe, before blinding.
struct ModelOutput {
  std::string item_id;  // probe id, shared by every model's output for that probe
  std::string model_id;
  std::string source_text;
  std::string output_text;
  std::string language;
  std::string category;
};

/// What an annotator sees. Carries no model identity.
struct AnnotationItem {
  std::string item_id;
  std::string source_text;
  std::string output_text;
  std::string blinded_key;
  std::string language;
  std::string category;

  friend bool operator==(const AnnotationItem&, const AnnotationItem&) = default;
};

struct Assignment {
  std::vector<AnnotationItem> items;  // presentation order
  // Server-side only; never serialized into client payloads.
  std::map<std::string, std::string> key_to_model;
};

namespace detail {

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool related(std::string_view a, std::string_view b) {
  const auto la = ascii_lower(a), lb = ascii_lower(b);
  return la.find(lb) != std::string::npos || lb.find(la) != std::string::npos;
}

}  // namespace detail

/// Replaces model ids by per-session opaque keys and shuffles the items.
/// The output depends only on the set of outputs and `session_seed`, not on
/// their input order. Each annotation item id is "<probe id>.<key>".
inline Assignment blind_assignment(std::vector<ModelOutput> outputs, std::uint64_t session_seed) {
  if (outputs.empty()) throw AnnotationError(AnnotationError::Kind::empty_input, "no model outputs to assign");
  std::sort(outputs.begin(), outputs.end(), [](const ModelOutput& a, const ModelOutput& b) {
    return std::tie(a.item_id, a.model_id) < std::tie(b.item_id, b.model_id);
  });
  std::set<std::string> models;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& o = outputs[i];
    if (o.model_id.empty()) throw AnnotationError(AnnotationError::Kind::invalid_model_id, "empty model id");
    if (o.item_id.empty()) throw AnnotationError(AnnotationError::Kind::duplicate_item, "empty item id");
    if (i > 0 && outputs[i - 1].item_id == o.item_id && outputs[i - 1].model_id == o.model_id) {
      throw AnnotationError(AnnotationError::Kind::duplicate_item,
                            "duplicate item_id '" + o.item_id + "' for model '" + o.model_id + "'");
    }
    models.insert(o.model_id);
  }
  for (const auto& o : outputs) {
    for (const auto& m : models) {
      if (detail::ascii_lower(o.item_id).find(detail::ascii_lower(m)) != std::string::npos) {
        throw AnnotationError(AnnotationError::Kind::invalid_model_id,
                              "item id '" + o.item_id + "' reveals a model identifier");
      }
    }
  }

  Rng rng(Rng::derive(session_seed, "blind-assignment"));
  Assignment out;
  std::map<std::string, std::string> model_to_key;
  for (const auto& m : models) {
    for (;;) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "k%06llx", static_cast<unsigned long long>(rng.next() & 0xFFFFFF));
      std::string key = buf;
      const bool clash = out.key_to_model.count(key) ||
                         std::any_of(models.begin(), models.end(),
                                     [&](const std::string& other) { return detail::related(key, other); });
      if (clash) continue;
      out.key_to_model.emplace(key, m);
      model_to_key.emplace(m, std::move(key));
      break;
    }
  }
  out.items.reserve(outputs.size());
  for (const auto& o : outputs) {
    const auto& key = model_to_key.at(o.model_id);
    out.items.push_back({o.item_id + "." + key, o.source_text, o.output_text, key, o.language, o.category});
  }
  rng.shuffle(out.items);
  return out;
}

/// Client-facing JSON for one item.
inline json client_payload(const AnnotationItem& item) {
  return json{{"item_id", item.item_id},         {"source_text", item.source_text},
              {"output_text", item.output_text}, {"blinded_key", item.blinded_key},
              {"language", item.language},       {"category", item.category}};
}

/// JSONL rows {"item_id", "model_id", "source_text", "output_text",
/// "language", "category"}; "source_text" and "category" may be omitted.
inline std::vector<ModelOutput> parse_model_outputs(std::string_view contents, std::string_view source = "<outputs>") {
  std::vector<ModelOutput> out;
  for (const auto& row : io::parse_jsonl(contents, source)) {
    const auto& v = row.value;
    auto field = [&](const char* key, bool required) {
      if (v.contains(key) && v[key].is_string()) return v[key].get<std::string>();
      if (required) {
        throw AnnotationError(AnnotationError::Kind::invalid_record,
                              std::string(source) + ":" + std::to_string(row.line) + ": missing string '" + key + "'");
      }
      return std::string();
    };
    out.push_back({field("item_id", true), field("model_id", true), field("source_text", false),
                   field("output_text", true), field("language", true), field("category", false)});
  }
  return out;
}

inline json to_json(const Assignment& a, bool include_key_map) {
  json items = json::array();
  for (const auto& i : a.items) items.push_back(client_payload(i));
  json j = {{"items", items}};
  if (include_key_map) j["key_to_model"] = a.key_to_model;
  return j;
}

// ---------------------------------------------------------------------------
// Agreement

namespace detail {

inline void check_ratings(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw AnnotationError(AnnotationError::Kind::length_mismatch,
                          "rating vectors differ in length (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw AnnotationError(AnnotationError::Kind::empty_input, "no ratings to compare");
  for (auto v : a) {
    if (v < 1 || v > 5) throw AnnotationError(AnnotationError::Kind::invalid_rating, "rating outside 1..5");
  }
  for (auto v : b) {
    if (v < 1 || v > 5) throw AnnotationError(AnnotationError::Kind::invalid_rating, "rating outside 1..5");
  }
}

}  // namespace detail

struct AgreementStats {
  double kappa = 0.0;
  double observed = 0.0;  // p_o
  double expected = 0.0;  // p_e
  std::size_t items = 0;

  double kappa_x100() const noexcept { return 100.0 * kappa; }
  double percent_agreement() const noexcept { return 100.0 * observed; }
};

/// Unweighted Cohen's kappa with its observed and chance agreement.
inline AgreementStats agreement(std::span<const int> a, std::span<const int> b) {
  detail::check_ratings(a, b);
  const auto n = static_cast<double>(a.size());
  std::array<double, 6> pa{}, pb{};
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[static_cast<std::size_t>(a[i])] += 1.0;
    pb[static_cast<std::size_t>(b[i])] += 1.0;
    if (a[i] == b[i]) ++same;
  }
  AgreementStats s;
  s.items = a.size();
  s.observed = static_cast<double>(same) / n;
  for (std::size_t c = 1; c <= 5; ++c) s.expected += (pa[c] / n) * (pb[c] / n);
  if (s.expected >= 1.0) {
    s.kappa = s.observed >= 1.0 ? 1.0 : 0.0;
  } else {
    s.kappa = (s.observed - s.expected) / (1.0 - s.expected);
  }
  return s;
}

inline double cohen_kappa(std::span<const int> a, std::span<const int> b) { return agreement(a, b).kappa; }

/// Linearly weighted kappa over the 1..5 scale: disagreement weight |i-j|/4.
inline double linear_weighted_kappa(std::span<const int> a, std::span<const int> b) {
  detail::check_ratings(a, b);
  const auto n = static_cast<double>(a.size());
  std::array<double, 6> pa{}, pb{};
  double observed = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[static_cast<std::size_t>(a[i])] += 1.0 / n;
    pb[static_cast<std::size_t>(b[i])] += 1.0 / n;
    observed += std::abs(a[i] - b[i]) / 4.0 / n;
  }
  double expected = 0.0;
  for (int i = 1; i <= 5; ++i) {
    for (int j = 1; j <= 5; ++j) {
      expected += std::abs(i - j) / 4.0 * pa[static_cast<std::size_t>(i)] * pb[static_cast<std::size_t>(j)];
    }
  }
  if (expected <= 0.0) return observed <= 0.0 ? 1.0 : 0.0;
  return 1.0 - observed / expected;
}

// ---------------------------------------------------------------------------
// Records

struct AnnotationRecord {
  std::string item_id;
  std::string annotator_id;
  Dimension dimension = Dimension::faithfulness;
  int rating = 0;
  std::int64_t timestamp_ms = 0;
  std::uint64_t sequence = 0;  // append order; later sequence wins

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

inline void validate(const AnnotationRecord& r) {
  if (r.item_id.empty() || r.annotator_id.empty()) {
    throw AnnotationError(AnnotationError::Kind::invalid_record, "record needs item_id and annotator_id");
  }
  if (r.rating < 1 || r.rating > 5) {
    throw AnnotationError(AnnotationError::Kind::invalid_rating,
                          "rating " + std::to_string(r.rating) + " outside 1..5");
  }
}

inline json to_json(const AnnotationRecord& r) {
  return json{{"item_id", r.item_id},     {"annotator_id", r.annotator_id}, {"dimension", to_string(r.dimension)},
              {"rating", r.rating},       {"timestamp", r.timestamp_ms},    {"sequence", r.sequence}};
}

inline AnnotationRecord record_from_json(const json& j) {
  auto bad = [](const std::string& why) { return AnnotationError(AnnotationError::Kind::invalid_record, why); };
  if (!j.is_object()) throw bad("record must be a JSON object");
  AnnotationRecord r;
  try {
    r.item_id = j.at("item_id").get<std::string>();
    r.annotator_id = j.at("annotator_id").get<std::string>();
    const auto dim = j.at("dimension").get<std::string>();
    auto d = dimension_from_string(dim);
    if (!d) throw bad("unknown dimension '" + dim + "'");
    r.dimension = *d;
    if (!j.at("rating").is_number_integer()) throw bad("rating must be an integer");
    r.rating = j.at("rating").get<int>();
    r.timestamp_ms = j.value("timestamp", std::int64_t{0});
    r.sequence = j.value("sequence", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("malformed record: ") + e.what());
  }
  validate(r);
  return r;
}

/// One record per (item, annotator, dimension): the one with the highest
/// sequence number. Output is sorted by that key.
inline std::vector<AnnotationRecord> latest_view(const std::vector<AnnotationRecord>& records) {
  std::map<std::tuple<std::string, std::string, Dimension>, const AnnotationRecord*> latest;
  for (const auto& r : records) {
    auto& slot = latest[{r.item_id, r.annotator_id, r.dimension}];
    if (!slot || r.sequence >= slot->sequence) slot = &r;
  }
  std::vector<AnnotationRecord> out;
  out.reserve(latest.size());
  for (const auto& [_, r] : latest) out.push_back(*r);
  return out;
}

struct SummaryKey {
  std::string language;
  std::string model;  // model id when unblinded, otherwise the blinded key
  std::string category;
  Dimension dimension = Dimension::faithfulness;

  auto operator<=>(const SummaryKey&) const = default;
};

struct SummaryCell {
  double mean = 0.0;
  std::size_t count = 0;
};

using Summary = std::map<SummaryKey, SummaryCell>;

/// Mean rating per (language, model, category, dimension) over the
/// latest-wins view of `records`. Empty groups are absent.
inline Summary category_summary(const std::vector<AnnotationRecord>& records, const std::vector<AnnotationItem>& items,
                                const std::map<std::string, std::string>* key_to_model = nullptr) {
  std::map<std::string, const AnnotationItem*> by_id;
  for (const auto& i : items) by_id.emplace(i.item_id, &i);
  std::map<SummaryKey, std::pair<std::int64_t, std::size_t>> acc;
  for (const auto& r : latest_view(records)) {
    auto it = by_id.find(r.item_id);
    if (it == by_id.end()) {
      throw AnnotationError(AnnotationError::Kind::dangling_item, "record refers to unknown item '" + r.item_id + "'");
    }
    const auto& item = *it->second;
    std::string model = item.blinded_key;
    if (key_to_model) {
      if (auto m = key_to_model->find(item.blinded_key); m != key_to_model->end()) model = m->second;
    }
    auto& a = acc[{item.language, model, item.category, r.dimension}];
    a.first += r.rating;
    ++a.second;
  }
  Summary out;
  for (const auto& [k, a] : acc) {
    out.emplace(k, SummaryCell{static_cast<double>(a.first) / static_cast<double>(a.second), a.second});
  }
  return out;
}

inline json to_json(const Summary& s) {
  json rows = json::array();
  for (const auto& [k, c] : s) {
    rows.push_back({{"language", k.language},
                    {"model", k.model},
                    {"category", k.category},
                    {"dimension", to_string(k.dimension)},
                    {"mean", c.mean},
                    {"count", c.count}});
  }
  return rows;
}

/// Every record (full history) as JSONL, joined with item metadata. The
/// model_id field appears only when `unblind` is set.
inline std::string export_jsonl(const std::vector<AnnotationRecord>& records, const Assignment& assignment,
                                bool unblind) {
  std::map<std::string, const AnnotationItem*> by_id;
  for (const auto& i : assignment.items) by_id.emplace(i.item_id, &i);
  std::string out;
  for (const auto& r : records) {
    auto it = by_id.find(r.item_id);
    if (it == by_id.end()) {
      throw AnnotationError(AnnotationError::Kind::dangling_item, "record refers to unknown item '" + r.item_id + "'");
    }
    auto row = to_json(r);
    row["blinded_key"] = it->second->blinded_key;
    row["language"] = it->second->language;
    row["category"] = it->second->category;
    if (unblind) row["model_id"] = assignment.key_to_model.at(it->second->blinded_key);
    out += row.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<AnnotationRecord> import_records(std::string_view jsonl, std::string_view source = "<records>") {
  std::vector<AnnotationRecord> out;
  for (const auto& row : io::parse_jsonl(jsonl, source)) out.push_back(record_from_json(row.value));
  return out;
}

/// Pairwise agreement for one (language, model, dimension) group.
struct AgreementRow {
  std::string language;
  std::string model;
  Dimension dimension = Dimension::faithfulness;
  std::vector<std::string> annotators;  // the pair compared, or the lone annotator
  bool single_annotator = false;
  std::optional<AgreementStats> stats;  // empty when single_annotator or no shared items
};

/// Kappa between every pair of annotators over the items both rated, per
/// (language, model, dimension). Languages with one annotator get a
/// single-annotator row instead of a kappa.
inline std::vector<AgreementRow> agreement_table(const std::vector<AnnotationRecord>& records,
                                                 const std::vector<AnnotationItem>& items,
                                                 const std::map<std::string, std::string>* key_to_model = nullptr) {
  std::map<std::string, const AnnotationItem*> by_id;
  for (const auto& i : items) by_id.emplace(i.item_id, &i);
  // (language, model, dimension) -> annotator -> item -> rating
  std::map<std::tuple<std::string, std::string, Dimension>, std::map<std::string, std::map<std::string, int>>> groups;
  for (const auto& r : latest_view(records)) {
    auto it = by_id.find(r.item_id);
    if (it == by_id.end()) {
      throw AnnotationError(AnnotationError::Kind::dangling_item, "record refers to unknown item '" + r.item_id + "'");
    }
    std::string model = it->second->blinded_key;
    if (key_to_model) {
      if (auto m = key_to_model->find(model); m != key_to_model->end()) model = m->second;
    }
    groups[{it->second->language, model, r.dimension}][r.annotator_id][r.item_id] = r.rating;
  }
  std::vector<AgreementRow> out;
  for (const auto& [key, by_annotator] : groups) {
    const auto& [language, model, dimension] = key;
    std::vector<std::string> annotators;
    for (const auto& [a, _] : by_annotator) annotators.push_back(a);
    if (annotators.size() == 1) {
      out.push_back({language, model, dimension, annotators, true, std::nullopt});
      continue;
    }
    for (std::size_t i = 0; i < annotators.size(); ++i) {
      for (std::size_t j = i + 1; j < annotators.size(); ++j) {
        const auto& ra = by_annotator.at(annotators[i]);
        const auto& rb = by_annotator.at(annotators[j]);
        std::vector<int> a, b;
        for (const auto& [item, rating] : ra) {
          if (auto it = rb.find(item); it != rb.end()) {
            a.push_back(rating);
            b.push_back(it->second);
          }
        }
        AgreementRow row{language, model, dimension, {annotators[i], annotators[j]}, false, std::nullopt};
        if (!a.empty()) row.stats = agreement(a, b);
        out.push_back(std::move(row));
      }
    }
  }
  return out;
}

inline json to_json(const std::vector<AgreementRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json j = {{"language", r.language},
              {"model", r.model},
              {"dimension", to_string(r.dimension)},
              {"annotators", r.annotators}};
    if (r.single_annotator) {
      j["status"] = "single_annotator";
    } else if (!r.stats) {
      j["status"] = "no_shared_items";
    } else {
      j["status"] = "ok";
      j["kappa"] = r.stats->kappa;
      j["kappa_x100"] = r.stats->kappa_x100();
      j["percent_agreement"] = r.stats->percent_agreement();
      j["items"] = r.stats->items;
    }
    out.push_back(std::move(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

/// Append-only JSONL record log; each append is written with one write(2)
/// and fsync'd before returning.
class RecordLog {
public:
  explicit RecordLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      throw AnnotationError(AnnotationError::Kind::log_failure, "cannot open record log '" + path_.string() + "'");
    }
  }
  RecordLog(const RecordLog&) = delete;
  RecordLog& operator=(const RecordLog&) = delete;
  ~RecordLog() {
    if (fd_ >= 0) ::close(fd_);
  }

  std::vector<AnnotationRecord> load() const {
    if (!std::filesystem::exists(path_)) return {};
    return import_records(io::read_file(path_), path_.string());
  }

  void append(const AnnotationRecord& r) {
    const auto line = to_json(r).dump() + "\n";
    std::size_t written = 0;
    while (written < line.size()) {
      const auto n = ::write(fd_, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw AnnotationError(AnnotationError::Kind::log_failure, "write to record log failed");
      }
      written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw AnnotationError(AnnotationError::Kind::log_failure, "fsync of record log failed");
  }

  const std::filesystem::path& path() const noexcept { return path_; }

private:
  std::filesystem::path path_;
  int fd_ = -1;
};

struct Progress {
  std::string annotator_id;
  std::size_t total_items = 0;
  std::size_t completed_items = 0;  // both dimensions rated
  std::size_t records = 0;          // including superseded ones
};

inline json to_json(const Progress& p) {
  return json{{"annotator_id", p.annotator_id},
              {"total_items", p.total_items},
              {"completed_items", p.completed_items},
              {"remaining_items", p.total_items - p.completed_items},
              {"records", p.records}};
}

/// Thread-safe rating store over an assignment and its record log.
class AnnotationStore {
public:
  using Clock = std::function<std::int64_t()>;

  static std::int64_t system_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  }

  AnnotationStore(Assignment assignment, std::filesystem::path log_path, std::string admin_token,
                  Clock clock = system_clock_ms)
      : assignment_(std::move(assignment)),
        log_(std::move(log_path)),
        admin_token_(std::move(admin_token)),
        clock_(std::move(clock)) {
    for (std::size_t i = 0; i < assignment_.items.size(); ++i) index_.emplace(assignment_.items[i].item_id, i);
    records_ = log_.load();
    for (const auto& r : records_) {
      if (!index_.count(r.item_id)) {
        throw AnnotationError(AnnotationError::Kind::dangling_item,
                              "record log refers to unknown item '" + r.item_id + "'");
      }
      next_sequence_ = std::max(next_sequence_, r.sequence + 1);
    }
  }

  const Assignment& assignment() const noexcept { return assignment_; }

  /// First item, in presentation order, that `annotator` has not rated on
  /// both dimensions.
  std::optional<AnnotationItem> next_task(const std::string& annotator) const {
    std::lock_guard lock(mu_);
    const auto rated = rated_dimensions(annotator);
    for (const auto& item : assignment_.items) {
      auto it = rated.find(item.item_id);
      if (it == rated.end() || it->second.size() < 2) return item;
    }
    return std::nullopt;
  }

  Progress progress(const std::string& annotator) const {
    std::lock_guard lock(mu_);
    Progress p;
    p.annotator_id = annotator;
    p.total_items = assignment_.items.size();
    for (const auto& [_, dims] : rated_dimensions(annotator)) {
      if (dims.size() == 2) ++p.completed_items;
    }
    p.records = static_cast<std::size_t>(std::count_if(
        records_.begin(), records_.end(), [&](const AnnotationRecord& r) { return r.annotator_id == annotator; }));
    return p;
  }

  /// Validates, stamps (sequence, timestamp) and durably appends a record.
  AnnotationRecord submit(AnnotationRecord r) {
    validate(r);
    std::lock_guard lock(mu_);
    if (!index_.count(r.item_id)) {
      throw AnnotationError(AnnotationError::Kind::dangling_item, "unknown item '" + r.item_id + "'");
    }
    r.sequence = next_sequence_;
    r.timestamp_ms = clock_();
    log_.append(r);
    ++next_sequence_;
    records_.push_back(r);
    return r;
  }

  std::vector<AnnotationRecord> snapshot() const {
    std::lock_guard lock(mu_);
    return records_;
  }

  bool authorized(std::string_view token) const noexcept {
    return !admin_token_.empty() && token == admin_token_;
  }

  /// JSONL export of the full record history. Requires the admin token.
  std::string export_jsonl(bool unblind, std::string_view token) const {
    if (!authorized(token)) throw AnnotationError(AnnotationError::Kind::unauthorized, "export requires the admin token");
    return annotation::export_jsonl(snapshot(), assignment_, unblind);
  }

private:
  // item -> dimensions rated by `annotator`; caller holds mu_.
  std::map<std::string, std::set<Dimension>> rated_dimensions(const std::string& annotator) const {
    std::map<std::string, std::set<Dimension>> out;
    for (const auto& r : records_) {
      if (r.annotator_id == annotator) out[r.item_id].insert(r.dimension);
    }
    return out;
  }

  Assignment assignment_;
  RecordLog log_;
  std::string admin_token_;
  Clock clock_;
  std::map<std::string, std::size_t> index_;
  mutable std::mutex mu_;
  std::vector<AnnotationRecord> records_;
  std::uint64_t next_sequence_ = 0;
};

}  // namespace nlgkit::annotation
