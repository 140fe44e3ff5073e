#pragma once

// Graph-based correction of preliminary keystep labels.
//
// Confident frames (anchors) keep their preliminary label. Every run of
// unconfident frames between two anchors at t- and t+ is relabelled with the
// most probable keystep path between the two anchor keysteps, found as a
// shortest path over -log transition probabilities. The path, with both
// anchors re-attached at its ends, is spread over frames t-..t+ in equal
// contiguous blocks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "taskgraph/assign.hpp"
#include "taskgraph/error.hpp"
#include "taskgraph/graph.hpp"
#include "taskgraph/metrics.hpp"
#include "taskgraph/types.hpp"

namespace taskgraph {

struct DecodeConfig {
  double gamma_text = 0.5;
  double gamma_video = 0.3;
  bool adaptive_threshold = false;
  double smoothing = 0.0;

  double gamma(Modality m) const { return m == Modality::text ? gamma_text : gamma_video; }
};

struct BrfConfig {
  double epsilon = 0.1;
  bool normalize_belief = true;
};

struct PathSearchResult {
  bool found = false;
  std::vector<KeystepId> interior;  // path nodes strictly between the endpoints
  double cost = std::numeric_limits<double>::infinity();
  std::size_t relaxations = 0;      // edges examined
};

namespace detail {

// Relative tolerance under which two path costs count as equal, so the
// hop/lexicographic tie-break is not at the mercy of summation order.
inline constexpr double kCostTieTolerance = 1e-12;

inline int compare_cost(double a, double b) {
  if (a == b) return 0;
  if (std::isinf(a) || std::isinf(b)) return a < b ? -1 : 1;
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  if (std::abs(a - b) <= kCostTieTolerance * scale) return 0;
  return a < b ? -1 : 1;
}

inline std::vector<std::size_t> trace(std::span<const std::ptrdiff_t> prev, std::size_t node) {
  std::vector<std::size_t> path;
  for (std::ptrdiff_t v = static_cast<std::ptrdiff_t>(node); v >= 0; v = prev[static_cast<std::size_t>(v)])
    path.push_back(static_cast<std::size_t>(v));
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

/// Most probable path from `from` to `to`: dense Dijkstra, O(K^2).
/// Equal-cost paths prefer fewer hops, then the lexicographically smallest
/// id sequence.
inline PathSearchResult path_search(const CostGraph& cost, KeystepId from, KeystepId to) {
  const std::size_t K = cost.size();
  if (from < 0 || to < 0 || static_cast<std::size_t>(from) >= K || static_cast<std::size_t>(to) >= K)
    fail(ErrorKind::range, "path endpoints (" + std::to_string(from) + ", " + std::to_string(to) +
                               ") outside graph of size " + std::to_string(K));
  PathSearchResult result;
  if (from == to) {
    result.found = true;
    result.cost = 0.0;
    return result;
  }

  const auto src = static_cast<std::size_t>(from), dst = static_cast<std::size_t>(to);
  std::vector<double> dist(K, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> hops(K, 0);
  std::vector<std::ptrdiff_t> prev(K, -1);
  std::vector<bool> settled(K, false);
  dist[src] = 0.0;

  // Three-level key: cost, then hops, then the id sequence from the source.
  // Comparing sequences only happens on exact ties in the first two.
  auto precedes = [&](double d1, std::size_t h1, std::size_t via1, double d2, std::size_t h2,
                      std::ptrdiff_t via2) {
    if (const int c = detail::compare_cost(d1, d2); c != 0) return c < 0;
    if (h1 != h2) return h1 < h2;
    if (via2 < 0) return true;
    return detail::trace(prev, via1) < detail::trace(prev, static_cast<std::size_t>(via2));
  };

  for (;;) {
    std::ptrdiff_t u = -1;
    for (std::size_t v = 0; v < K; ++v) {
      if (settled[v] || std::isinf(dist[v])) continue;
      if (u < 0) {
        u = static_cast<std::ptrdiff_t>(v);
        continue;
      }
      const auto cu = static_cast<std::size_t>(u);
      const int c = detail::compare_cost(dist[v], dist[cu]);
      if (c < 0 || (c == 0 && (hops[v] < hops[cu] ||
                               (hops[v] == hops[cu] && detail::trace(prev, v) < detail::trace(prev, cu)))))
        u = static_cast<std::ptrdiff_t>(v);
    }
    if (u < 0) break;
    const auto cu = static_cast<std::size_t>(u);
    settled[cu] = true;
    if (cu == dst) break;
    for (std::size_t v = 0; v < K; ++v) {
      if (v == cu || settled[v]) continue;
      ++result.relaxations;
      const double w = cost(cu, v);
      if (std::isinf(w)) continue;
      const double nd = dist[cu] + w;
      if (precedes(nd, hops[cu] + 1, cu, dist[v], hops[v], prev[v])) {
        dist[v] = nd;
        hops[v] = hops[cu] + 1;
        prev[v] = static_cast<std::ptrdiff_t>(cu);
      }
    }
  }

  if (!settled[dst]) return result;
  result.found = true;
  result.cost = dist[dst];
  const auto path = detail::trace(prev, dst);
  for (std::size_t i = 1; i + 1 < path.size(); ++i)
    result.interior.push_back(static_cast<KeystepId>(path[i]));
  return result;
}

/// Labels for frames t_minus..t_plus (inclusive). The path
/// [k_minus] + interior + [k_plus] is laid out in |P| contiguous blocks with
/// boundaries at floor(m * N / |P|). When the path is longer than the span,
/// interior nodes are dropped from the tail until it fits.
inline std::vector<KeystepId> uniform_fill(KeystepId k_minus, KeystepId k_plus,
                                           std::span<const KeystepId> interior,
                                           std::size_t t_minus, std::size_t t_plus) {
  if (t_minus >= t_plus)
    fail(ErrorKind::range, "uniform fill needs t- < t+ (got " + std::to_string(t_minus) + ", " +
                               std::to_string(t_plus) + ")");
  const std::size_t n = t_plus - t_minus + 1;
  std::vector<KeystepId> path;
  path.reserve(interior.size() + 2);
  path.push_back(k_minus);
  const std::size_t keep = std::min(interior.size(), n - 2);
  path.insert(path.end(), interior.begin(), interior.begin() + static_cast<std::ptrdiff_t>(keep));
  path.push_back(k_plus);

  const std::size_t p = path.size();
  std::vector<KeystepId> out(n);
  for (std::size_t m = 0; m < p; ++m) {
    const std::size_t begin = m * n / p, end = (m + 1) * n / p;
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(begin),
              out.begin() + static_cast<std::ptrdiff_t>(end), path[m]);
  }
  return out;
}

/// Anchored frames keep their label; unanchored runs between two anchors are
/// filled from the path between them. Runs before the first or after the last
/// anchor, and runs whose anchors are not connected, keep their labels.
inline LabelSequence correct_sequence(const LabelSequence& prelim, const AnchorMask& anchors,
                                      const CostGraph& cost) {
  if (anchors.size() != prelim.size())
    fail(ErrorKind::dimension, "video '" + prelim.video_id + "': anchor mask has " +
                                   std::to_string(anchors.size()) + " frames, labels " +
                                   std::to_string(prelim.size()));
  LabelSequence out = prelim;
  std::map<std::pair<KeystepId, KeystepId>, PathSearchResult> cache;
  std::optional<std::size_t> last_anchor;
  for (std::size_t t = 0; t < anchors.size(); ++t) {
    if (!anchors[t]) continue;
    if (last_anchor && t - *last_anchor > 1) {
      const std::size_t t_minus = *last_anchor;
      const KeystepId a = prelim.labels[t_minus], b = prelim.labels[t];
      auto it = cache.find({a, b});
      if (it == cache.end()) it = cache.emplace(std::pair{a, b}, path_search(cost, a, b)).first;
      if (it->second.found) {
        const auto fill = uniform_fill(a, b, it->second.interior, t_minus, t);
        std::copy(fill.begin(), fill.end(), out.labels.begin() + static_cast<std::ptrdiff_t>(t_minus));
      }
    }
    last_anchor = t;
  }
  return out;
}

inline LabelSequence correct_sequence(const LabelSequence& prelim, const AnchorMask& anchors,
                                      const TaskGraph& graph, const DecodeConfig& cfg = {}) {
  return correct_sequence(prelim, anchors, to_cost(graph, cfg.smoothing));
}

/// Preliminary labels and anchors for one modality under `cfg`.
inline AnchoredLabels anchored_assignment(const ScoreMatrix& scores, const DecodeConfig& cfg) {
  auto prelim = preliminary_assign(scores);
  const double gamma =
      cfg.adaptive_threshold ? adaptive_gamma(prelim.confidence) : cfg.gamma(scores.modality());
  return {std::move(prelim.labels.labels), anchor_mask(prelim.confidence, gamma)};
}

/// Bayesian recursive filter over the transition matrix A:
///   B(0) = s(0);  B(t) = s(t) * (A^T B(t-1)) + epsilon * s(t)
/// with s(t) the score row shifted by +1 so every measurement is non-negative.
inline LabelSequence brf_decode(const ScoreMatrix& scores, const TaskGraph& graph,
                                const BrfConfig& cfg = {}) {
  if (scores.cols() != graph.size())
    fail(ErrorKind::dimension, "video '" + scores.video_id() + "' has " +
                                   std::to_string(scores.cols()) + " score columns but the graph has " +
                                   std::to_string(graph.size()) + " keysteps");
  if (!(cfg.epsilon >= 0.0) || !std::isfinite(cfg.epsilon))
    fail(ErrorKind::value, "BRF epsilon must be finite and non-negative");
  const std::size_t K = scores.cols();
  LabelSequence out{scores.video_id(), std::vector<KeystepId>(scores.rows())};
  std::vector<double> belief(K), prior(K), s(K);

  auto measure = [&](std::size_t t) {
    const auto row = scores.row(t);
    for (std::size_t k = 0; k < K; ++k) s[k] = std::max(0.0, row[k] + 1.0);
  };
  auto normalize = [&] {
    if (!cfg.normalize_belief) return;
    const double total = std::accumulate(belief.begin(), belief.end(), 0.0);
    if (total > 0.0 && std::isfinite(total))
      for (double& b : belief) b /= total;
    else
      std::fill(belief.begin(), belief.end(), 1.0 / static_cast<double>(K));
  };

  for (std::size_t t = 0; t < scores.rows(); ++t) {
    measure(t);
    if (t == 0) {
      belief = s;
    } else {
      std::fill(prior.begin(), prior.end(), 0.0);
      for (std::size_t i = 0; i < K; ++i) {
        const double b = belief[i];
        if (b == 0.0) continue;
        const auto row = graph.weights_row(static_cast<KeystepId>(i));
        for (std::size_t j = 0; j < K; ++j) prior[j] += row[j] * b;
      }
      for (std::size_t k = 0; k < K; ++k) belief[k] = s[k] * prior[k] + cfg.epsilon * s[k];
    }
    out.labels[t] = argmax(belief);
    normalize();
  }
  return out;
}

// ------------------------------------------------------ predictability split

/// One decoded video with everything needed to score it.
struct DecodedVideo {
  LabelSequence ground_truth;
  LabelSequence preliminary;
  LabelSequence corrected;
  AnchorMask anchors;
};

struct PredictabilitySplit {
  std::vector<double> entropy;                     // per video, of its starting keystep
  std::vector<std::size_t> high_predictability;    // low-entropy half
  std::vector<std::size_t> low_predictability;     // high-entropy half
  double threshold = 0.0;                          // largest entropy in the low-entropy half
  EvalReport baseline_high, corrected_high, baseline_low, corrected_low;
};

/// Orders video indices by entropy (stable) and returns the cut point: the
/// first ceil(n/2) form the low-entropy half.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_entropy(
    std::span<const double> entropy) {
  std::vector<std::size_t> order(entropy.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return entropy[a] < entropy[b]; });
  const std::size_t cut = (order.size() + 1) / 2;
  std::vector<std::size_t> low(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<std::size_t> high(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  std::sort(low.begin(), low.end());
  std::sort(high.begin(), high.end());
  return {std::move(low), std::move(high)};
}

/// Splits the corpus in half by the entropy of each video's starting keystep
/// and scores baseline and corrected labels on the unanchored frames of each half.
inline PredictabilitySplit predictability_split(const TaskGraph& graph,
                                                std::span<const DecodedVideo> corpus) {
  PredictabilitySplit out;
  out.entropy.reserve(corpus.size());
  for (const auto& v : corpus) {
    if (v.preliminary.labels.empty()) {
      out.entropy.push_back(0.0);
      continue;
    }
    out.entropy.push_back(row_entropy(graph, v.preliminary.labels.front()));
  }
  auto [low_entropy, high_entropy] = split_by_entropy(out.entropy);
  for (std::size_t i : low_entropy) out.threshold = std::max(out.threshold, out.entropy[i]);

  auto score = [&](std::span<const std::size_t> ids, EvalReport& base, EvalReport& corr) {
    MetricAccumulator b, c;
    for (std::size_t i : ids) {
      const auto& v = corpus[i];
      if (v.anchors.size() != v.ground_truth.size())
        fail(ErrorKind::dimension, "video '" + v.ground_truth.video_id + "': anchors and labels differ in length");
      std::vector<KeystepId> gt = v.ground_truth.labels;
      for (std::size_t t = 0; t < gt.size(); ++t)
        if (v.anchors[t]) gt[t] = kBackground;
      b.add(v.preliminary.labels, gt, v.ground_truth.video_id);
      c.add(v.corrected.labels, gt, v.ground_truth.video_id);
    }
    base = b.report();
    corr = c.report();
  };
  score(low_entropy, out.baseline_high, out.corrected_high);
  score(high_entropy, out.baseline_low, out.corrected_low);
  out.high_predictability = std::move(low_entropy);
  out.low_predictability = std::move(high_entropy);
  return out;
}

}  // namespace taskgraph
