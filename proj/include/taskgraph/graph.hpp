#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "taskgraph/error.hpp"
#include "taskgraph/types.hpp"

namespace taskgraph {

/// Dense K x K transition tallies. Mergeable, so mining can be split across
/// workers and reduced in any order.
class TransitionCounts {
 public:
  explicit TransitionCounts(std::size_t k = 0) : k_(k), counts_(k * k, 0.0) {}

  std::size_t size() const noexcept { return k_; }

  void add(KeystepId from, KeystepId to, double n = 1.0) {
    counts_[index(from, to)] += n;
  }

  /// Tallies consecutive pairs of one video. Background frames are skipped
  /// and their neighbours treated as consecutive.
  void add_sequence(std::span<const KeystepId> labels) {
    KeystepId prev = kBackground;
    for (KeystepId k : labels) {
      if (k == kBackground) continue;
      if (k < 0 || static_cast<std::size_t>(k) >= k_)
        fail(ErrorKind::range, "keystep id " + std::to_string(k) + " outside graph of size " +
                                   std::to_string(k_));
      if (prev != kBackground) add(prev, k);
      prev = k;
    }
  }

  void merge(const TransitionCounts& other) {
    if (other.k_ != k_) fail(ErrorKind::dimension, "cannot merge transition counts of different size");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  double operator()(KeystepId from, KeystepId to) const { return counts_[index(from, to)]; }
  const std::vector<double>& data() const noexcept { return counts_; }

 private:
  std::size_t index(KeystepId from, KeystepId to) const {
    if (from < 0 || to < 0 || static_cast<std::size_t>(from) >= k_ ||
        static_cast<std::size_t>(to) >= k_)
      fail(ErrorKind::range, "transition (" + std::to_string(from) + ", " + std::to_string(to) +
                                 ") outside graph of size " + std::to_string(k_));
    return static_cast<std::size_t>(from) * k_ + static_cast<std::size_t>(to);
  }

  std::size_t k_;
  std::vector<double> counts_;
};

/// Row-stochastic task graph. Counts are the source of truth; weights are
/// counts normalised by their row total. Rows without any outgoing
/// transition are all zero.
class TaskGraph {
 public:
  TaskGraph() = default;

  explicit TaskGraph(TransitionCounts counts)
      : k_(counts.size()), counts_(counts.data()), weights_(k_ * k_, 0.0), row_totals_(k_, 0.0) {
    for (double c : counts_)
      if (!(c >= 0.0) || !std::isfinite(c))
        fail(ErrorKind::value, "transition counts must be finite and non-negative");
    for (std::size_t i = 0; i < k_; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < k_; ++j) total += counts_[i * k_ + j];
      row_totals_[i] = total;
      if (total > 0.0)
        for (std::size_t j = 0; j < k_; ++j) weights_[i * k_ + j] = counts_[i * k_ + j] / total;
    }
  }

  std::size_t size() const noexcept { return k_; }
  double count(KeystepId i, KeystepId j) const { return counts_[at(i, j)]; }
  double weight(KeystepId i, KeystepId j) const { return weights_[at(i, j)]; }
  double row_total(KeystepId i) const { return row_totals_[at(i, 0) / k_]; }
  bool has_support(KeystepId i) const { return row_total(i) > 0.0; }

  std::span<const double> weights_row(KeystepId i) const {
    return std::span<const double>(weights_).subspan(at(i, 0), k_);
  }
  std::span<const double> counts_row(KeystepId i) const {
    return std::span<const double>(counts_).subspan(at(i, 0), k_);
  }
  const std::vector<double>& counts() const noexcept { return counts_; }

 private:
  std::size_t at(KeystepId i, KeystepId j) const {
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= k_ || static_cast<std::size_t>(j) >= k_)
      fail(ErrorKind::range, "keystep pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                 ") outside graph of size " + std::to_string(k_));
    return static_cast<std::size_t>(i) * k_ + static_cast<std::size_t>(j);
  }

  std::size_t k_ = 0;
  std::vector<double> counts_;
  std::vector<double> weights_;
  std::vector<double> row_totals_;
};

/// Edge costs -log w; absent edges are +infinity.
class CostGraph {
 public:
  static constexpr double kInfinity = std::numeric_limits<double>::infinity();

  CostGraph() = default;
  CostGraph(std::size_t k, std::vector<double> costs) : k_(k), costs_(std::move(costs)) {
    if (costs_.size() != k_ * k_) fail(ErrorKind::dimension, "cost matrix must be K x K");
  }

  std::size_t size() const noexcept { return k_; }
  double operator()(std::size_t i, std::size_t j) const { return costs_[i * k_ + j]; }
  bool has_edge(std::size_t i, std::size_t j) const { return std::isfinite((*this)(i, j)); }

 private:
  std::size_t k_ = 0;
  std::vector<double> costs_;
};

inline TaskGraph mine_graph(std::span<const LabelSequence> corpus, std::size_t num_keysteps) {
  TransitionCounts counts(num_keysteps);
  for (const auto& seq : corpus) counts.add_sequence(seq.labels);
  return TaskGraph(std::move(counts));
}

/// With smoothing s > 0 the weights are first recomputed as
/// (count + s) / (row_total + K * s), which makes every edge finite.
inline CostGraph to_cost(const TaskGraph& graph, double smoothing = 0.0) {
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing))
    fail(ErrorKind::value, "smoothing must be finite and non-negative");
  const std::size_t K = graph.size();
  std::vector<double> costs(K * K, CostGraph::kInfinity);
  for (std::size_t i = 0; i < K; ++i) {
    const auto row = graph.counts_row(static_cast<KeystepId>(i));
    const double total = graph.row_total(static_cast<KeystepId>(i));
    for (std::size_t j = 0; j < K; ++j) {
      double w;
      if (smoothing > 0.0)
        w = (row[j] + smoothing) / (total + static_cast<double>(K) * smoothing);
      else
        w = graph.weight(static_cast<KeystepId>(i), static_cast<KeystepId>(j));
      if (w > 0.0) costs[i * K + j] = std::max(0.0, -std::log(w));
    }
  }
  return CostGraph(K, std::move(costs));
}

/// Non-probabilistic ablation: uniform weight over each row's observed successors.
inline TaskGraph binarize(const TaskGraph& graph) {
  const std::size_t K = graph.size();
  TransitionCounts counts(K);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j)
      if (graph.count(static_cast<KeystepId>(i), static_cast<KeystepId>(j)) > 0.0)
        counts.add(static_cast<KeystepId>(i), static_cast<KeystepId>(j));
  return TaskGraph(std::move(counts));
}

/// The n most likely successors of `from`, descending by weight, ties to the lowest id.
inline std::vector<std::pair<KeystepId, double>> top_transitions(const TaskGraph& graph,
                                                                 KeystepId from, std::size_t n) {
  if (n == 0) fail(ErrorKind::usage, "top_transitions needs n >= 1");
  const auto row = graph.weights_row(from);
  std::vector<std::pair<KeystepId, double>> out;
  for (std::size_t j = 0; j < row.size(); ++j)
    if (row[j] > 0.0) out.emplace_back(static_cast<KeystepId>(j), row[j]);
  const auto take = std::min(n, out.size());
  std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(take), out.end(),
                    [](const auto& a, const auto& b) {
                      return a.second != b.second ? a.second > b.second : a.first < b.first;
                    });
  out.resize(take);
  return out;
}

/// Shannon entropy (nats) of a keystep's outgoing distribution; 0 for unsupported rows.
inline double row_entropy(const TaskGraph& graph, KeystepId from) {
  double h = 0.0;
  for (double w : graph.weights_row(from))
    if (w > 0.0) h -= w * std::log(w);
  return std::max(0.0, h);
}

/// Entropy of each keystep that starts at least one video; nullopt elsewhere.
inline std::vector<std::optional<double>> start_entropy(const TaskGraph& graph,
                                                        std::span<const std::size_t> start_counts) {
  if (start_counts.size() != graph.size())
    fail(ErrorKind::dimension, "start counts must have one entry per keystep");
  std::vector<std::optional<double>> out(graph.size());
  for (std::size_t k = 0; k < graph.size(); ++k)
    if (start_counts[k] > 0) out[k] = row_entropy(graph, static_cast<KeystepId>(k));
  return out;
}

}  // namespace taskgraph
