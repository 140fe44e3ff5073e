#pragma once

// File formats shared by the CLI and the tests.
//
//   vocabulary  one keystep name per line; line order defines ids; lines
//               starting with '#' are comments.
//   scores      CSV blocks: a `video_id,modality,T,K` header line followed by
//               T rows of K decimals (6 significant digits). A file may hold
//               several blocks; '#' lines are comments.
//   labels      JSON lines: {"video_id": str, "labels": [int, ...]}.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "taskgraph/error.hpp"
#include "taskgraph/types.hpp"

namespace taskgraph {

/// Config hash and seed stamped into every file the CLI writes.
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::format, "cannot open input file '" + path.string() + "'");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::format, "cannot open output file '" + path.string() + "'");
  return out;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

// from_chars rejects "nan"/"inf" spellings only on some libraries; accept them
// here so the loader reports a value error instead of a format error.
inline std::optional<double> parse_decimal(std::string_view s) {
  if (auto v = parse_number<double>(s)) return v;
  s = trim(s);
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "nan" || lower == "-nan") return std::nan("");
  if (lower == "inf" || lower == "infinity") return HUGE_VAL;
  if (lower == "-inf" || lower == "-infinity") return -HUGE_VAL;
  return std::nullopt;
}

inline void write_comment(std::ostream& out, const std::optional<Provenance>& prov) {
  if (prov) out << "# config_hash=" << prov->config_hash << " seed=" << prov->seed << '\n';
}

}  // namespace detail

// ---------------------------------------------------------------- vocabulary

inline Vocabulary read_vocabulary(std::istream& in, const std::string& source = "<stream>") {
  std::vector<std::string> names;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::size_t> blank_lines;
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (!line.empty() && line.front() == '#') continue;
    if (line.empty()) {
      blank_lines.push_back(lineno);
      continue;
    }
    if (!blank_lines.empty())
      fail(ErrorKind::format,
           source + ": empty keystep name at line " + std::to_string(blank_lines.front()));
    names.push_back(line);
  }
  if (names.empty()) fail(ErrorKind::format, source + ": vocabulary file is empty");
  try {
    return Vocabulary(std::move(names));
  } catch (const Error& e) {
    fail(e.kind(), source + ": " + e.what());
  }
}

inline Vocabulary load_vocabulary(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_vocabulary(in, path.string());
}

inline void write_vocabulary(std::ostream& out, const Vocabulary& vocab,
                             const std::optional<Provenance>& prov = std::nullopt) {
  detail::write_comment(out, prov);
  for (const auto& name : vocab.names()) {
    if (name.find('\n') != std::string::npos || name.front() == '#')
      fail(ErrorKind::format, "keystep name '" + name + "' cannot be written one-per-line");
    out << name << '\n';
  }
}

inline void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab,
                            const std::optional<Provenance>& prov = std::nullopt) {
  auto out = detail::open_output(path);
  write_vocabulary(out, vocab, prov);
}

// -------------------------------------------------------------------- scores

/// Reads every score block in the stream. Column counts must equal the vocabulary size.
inline std::vector<ScoreMatrix> read_score_blocks(std::istream& in, const Vocabulary& vocab,
                                                  const std::string& source = "<stream>") {
  std::vector<ScoreMatrix> blocks;
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++lineno;
      detail::strip_cr(out);
      if (out.empty() || out.front() == '#') continue;
      return true;
    }
    return false;
  };
  const std::string where_prefix = source + ":";
  while (next_line(line)) {
    const auto fields = detail::split(line, ',');
    if (fields.size() != 4)
      fail(ErrorKind::format, where_prefix + std::to_string(lineno) +
                                  ": expected header 'video_id,modality,T,K'");
    const std::string video_id(detail::trim(fields[0]));
    const auto modality = parse_modality(detail::trim(fields[1]));
    const auto rows = detail::parse_number<std::size_t>(fields[2]);
    const auto cols = detail::parse_number<std::size_t>(fields[3]);
    if (video_id.empty() || !modality || !rows || !cols || *rows == 0)
      fail(ErrorKind::format, where_prefix + std::to_string(lineno) + ": malformed header '" +
                                  line + "'");
    if (*cols != vocab.size())
      fail(ErrorKind::dimension, where_prefix + std::to_string(lineno) + ": video '" + video_id +
                                     "' has K=" + std::to_string(*cols) +
                                     " but the vocabulary has " + std::to_string(vocab.size()) +
                                     " keysteps");
    std::vector<double> values;
    values.reserve(*rows * *cols);
    bool out_of_range = false;
    for (std::size_t t = 0; t < *rows; ++t) {
      if (!next_line(line))
        fail(ErrorKind::dimension, where_prefix + " video '" + video_id + "' declares T=" +
                                       std::to_string(*rows) + " but has " + std::to_string(t) +
                                       " rows");
      const auto cells = detail::split(line, ',');
      if (cells.size() != *cols)
        fail(ErrorKind::dimension, where_prefix + std::to_string(lineno) + ": row " +
                                       std::to_string(t) + " of video '" + video_id + "' has " +
                                       std::to_string(cells.size()) + " columns, expected " +
                                       std::to_string(*cols));
      for (auto cell : cells) {
        const auto v = detail::parse_decimal(cell);
        if (!v)
          fail(ErrorKind::format, where_prefix + std::to_string(lineno) + ": bad decimal '" +
                                      std::string(cell) + "'");
        if (!std::isfinite(*v))
          fail(ErrorKind::value, where_prefix + std::to_string(lineno) + ": non-finite score in row " +
                                     std::to_string(t) + " of video '" + video_id + "'");
        out_of_range = out_of_range || *v < -1.0 || *v > 1.0;
        values.push_back(*v);
      }
    }
    if (out_of_range)
      std::clog << "warning: " << source << ": video '" << video_id
                << "' has scores outside [-1, 1]\n";
    blocks.emplace_back(video_id, *modality, *rows, *cols, std::move(values));
  }
  return blocks;
}

inline std::vector<ScoreMatrix> load_score_blocks(const std::filesystem::path& path,
                                                  const Vocabulary& vocab) {
  auto in = detail::open_input(path);
  return read_score_blocks(in, vocab, path.string());
}

/// Loads a file holding exactly one score matrix.
inline ScoreMatrix load_scores(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto blocks = load_score_blocks(path, vocab);
  if (blocks.size() != 1)
    fail(ErrorKind::format, path.string() + ": expected one score block, found " +
                                std::to_string(blocks.size()));
  return std::move(blocks.front());
}

inline void write_scores(std::ostream& out, const ScoreMatrix& scores) {
  if (scores.video_id().find(',') != std::string::npos)
    fail(ErrorKind::format, "video id '" + scores.video_id() + "' contains a comma");
  out << scores.video_id() << ',' << to_string(scores.modality()) << ',' << scores.rows() << ','
      << scores.cols() << '\n';
  char buf[32];
  for (std::size_t t = 0; t < scores.rows(); ++t) {
    for (std::size_t k = 0; k < scores.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.6g", scores(t, k));
      if (k) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

inline void save_scores(const std::filesystem::path& path, std::span<const ScoreMatrix> blocks,
                        const std::optional<Provenance>& prov = std::nullopt) {
  auto out = detail::open_output(path);
  detail::write_comment(out, prov);
  for (const auto& m : blocks) write_scores(out, m);
}

// -------------------------------------------------------------------- labels

/// Reads label JSON lines. Background (-1) is accepted only when `allow_background`.
inline std::vector<LabelSequence> read_labels(std::istream& in, const Vocabulary& vocab,
                                              bool allow_background = true,
                                              const std::string& source = "<stream>") {
  std::vector<LabelSequence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (detail::trim(line).empty()) continue;
    const auto where = source + ":" + std::to_string(lineno);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::format, where + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("video_id") || !obj["video_id"].is_string() ||
        !obj.contains("labels") || !obj["labels"].is_array())
      fail(ErrorKind::format, where + ": expected {\"video_id\": str, \"labels\": [int,...]}");
    LabelSequence seq;
    seq.video_id = obj["video_id"].get<std::string>();
    seq.labels.reserve(obj["labels"].size());
    for (const auto& v : obj["labels"]) {
      if (!v.is_number_integer()) fail(ErrorKind::format, where + ": labels must be integers");
      seq.labels.push_back(v.get<KeystepId>());
    }
    try {
      check_labels(seq, vocab.size(), allow_background);
    } catch (const Error& e) {
      fail(e.kind(), where + ": " + e.what());
    }
    out.push_back(std::move(seq));
  }
  return out;
}

inline std::vector<LabelSequence> load_labels(const std::filesystem::path& path,
                                              const Vocabulary& vocab,
                                              bool allow_background = true) {
  auto in = detail::open_input(path);
  return read_labels(in, vocab, allow_background, path.string());
}

inline void write_labels(std::ostream& out, std::span<const LabelSequence> corpus,
                         const std::optional<Provenance>& prov = std::nullopt) {
  for (const auto& seq : corpus) {
    nlohmann::ordered_json obj;
    obj["video_id"] = seq.video_id;
    obj["labels"] = seq.labels;
    if (prov) {
      obj["config_hash"] = prov->config_hash;
      obj["seed"] = prov->seed;
    }
    out << obj.dump() << '\n';
  }
}

inline void save_labels(const std::filesystem::path& path, std::span<const LabelSequence> corpus,
                        const std::optional<Provenance>& prov = std::nullopt) {
  auto out = detail::open_output(path);
  write_labels(out, corpus, prov);
}

}  // namespace taskgraph
