#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "taskgraph/error.hpp"

namespace taskgraph {

using KeystepId = int;

/// Ground-truth frames without a keystep. Never produced by a decoder.
inline constexpr KeystepId kBackground = -1;

/// Ordered set of keystep names; a keystep's id is its position.
class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) fail(ErrorKind::format, "vocabulary is empty");
    index_.reserve(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty())
        fail(ErrorKind::format, "empty keystep name at id " + std::to_string(i));
      if (!index_.emplace(names_[i], static_cast<KeystepId>(i)).second)
        fail(ErrorKind::format, "duplicate keystep name '" + names_[i] + "'");
    }
  }

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(KeystepId id) const { return names_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  std::optional<KeystepId> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, KeystepId> index_;
};

enum class Modality { text, video };

inline std::string to_string(Modality m) { return m == Modality::text ? "text" : "video"; }

inline std::optional<Modality> parse_modality(std::string_view s) {
  if (s == "text") return Modality::text;
  if (s == "video") return Modality::video;
  return std::nullopt;
}

/// Per-video T x K similarity scores for one modality, row-major, one row per second.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;

  ScoreMatrix(std::string video_id, Modality modality, std::size_t rows, std::size_t cols,
              std::vector<double> values)
      : video_id_(std::move(video_id)), modality_(modality), rows_(rows), cols_(cols),
        values_(std::move(values)) {
    if (rows_ == 0) fail(ErrorKind::dimension, "score matrix '" + video_id_ + "' has no rows");
    if (cols_ == 0) fail(ErrorKind::dimension, "score matrix '" + video_id_ + "' has no columns");
    if (values_.size() != rows_ * cols_)
      fail(ErrorKind::dimension, "score matrix '" + video_id_ + "' expects " +
                                     std::to_string(rows_ * cols_) + " values, got " +
                                     std::to_string(values_.size()));
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]))
        fail(ErrorKind::value, "score matrix '" + video_id_ + "' has a non-finite value in row " +
                                   std::to_string(i / cols_));
    }
  }

  const std::string& video_id() const noexcept { return video_id_; }
  Modality modality() const noexcept { return modality_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t t, std::size_t k) const { return values_[t * cols_ + k]; }
  std::span<const double> row(std::size_t t) const {
    return std::span<const double>(values_).subspan(t * cols_, cols_);
  }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::string video_id_;
  Modality modality_ = Modality::text;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct LabelSequence {
  std::string video_id;
  std::vector<KeystepId> labels;

  std::size_t size() const noexcept { return labels.size(); }
  friend bool operator==(const LabelSequence&, const LabelSequence&) = default;
};

/// Confident frames; kept fixed by the path-search correction.
using AnchorMask = std::vector<bool>;

inline void check_labels(const LabelSequence& seq, std::size_t num_keysteps, bool allow_background) {
  for (std::size_t t = 0; t < seq.labels.size(); ++t) {
    const KeystepId id = seq.labels[t];
    const bool ok = (id >= 0 && static_cast<std::size_t>(id) < num_keysteps) ||
                    (allow_background && id == kBackground);
    if (!ok)
      fail(ErrorKind::range, "video '" + seq.video_id + "' frame " + std::to_string(t) +
                                 ": keystep id " + std::to_string(id) + " outside vocabulary of " +
                                 std::to_string(num_keysteps));
  }
}

}  // namespace taskgraph
