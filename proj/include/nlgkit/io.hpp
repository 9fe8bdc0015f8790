#pragma once

// File and JSONL helpers shared by the pipeline modules.
//
// Every JSONL file the toolkit writes may begin with one provenance row of
// the form {"_provenance": {...}}. Readers skip such rows.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nlgkit/error.hpp"

namespace nlgkit::io {

using json = nlohmann::json;

inline constexpr std::string_view kProvenanceKey = "_provenance";
inline constexpr std::string_view kToolName = "nlgkit";
inline constexpr std::string_view kToolVersion = "0.1.0";

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// Lines of `contents` without their terminators; a trailing newline does
/// not produce an extra empty line.
inline std::vector<std::string> split_lines(std::string_view contents) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    auto line = contents.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = end + 1;
  }
  return lines;
}

struct JsonlRow {
  std::size_t line = 0;  // 1-based
  json value;
};

/// Parses JSONL, skipping blank lines and provenance rows. Malformed lines
/// raise InvalidArgument naming the source and line number.
inline std::vector<JsonlRow> parse_jsonl(std::string_view contents, std::string_view source = "<input>") {
  std::vector<JsonlRow> rows;
  const auto lines = split_lines(contents);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    json v;
    try {
      v = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw InvalidArgument(std::string(source) + ":" + std::to_string(i + 1) + ": malformed JSON: " + e.what());
    }
    if (!v.is_object()) {
      throw InvalidArgument(std::string(source) + ":" + std::to_string(i + 1) + ": expected a JSON object");
    }
    if (v.contains(kProvenanceKey)) continue;
    rows.push_back({i + 1, std::move(v)});
  }
  return rows;
}

inline std::vector<JsonlRow> read_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(read_file(path), path.string());
}

/// Provenance object: tool, version, seed and caller-supplied fields
/// (input digests, parameters). Contains nothing time dependent.
inline json provenance(std::uint64_t seed, json extra = json::object()) {
  json p = {{"tool", kToolName}, {"version", kToolVersion}, {"seed", seed}};
  for (auto& [k, v] : extra.items()) p[k] = v;
  return p;
}

inline std::string provenance_row(const json& prov) {
  return json{{std::string(kProvenanceKey), prov}}.dump() + "\n";
}

/// Writes rows as JSONL preceded by a provenance row.
inline std::string to_jsonl(const json& prov, const std::vector<json>& rows) {
  std::string out = provenance_row(prov);
  for (const auto& r : rows) {
    out += r.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace nlgkit::io
