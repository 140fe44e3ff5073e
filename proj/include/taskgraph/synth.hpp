#pragma once

// Synthetic corpora with a planted task graph. Every generator is a pure
// function of its seed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "taskgraph/assign.hpp"
#include "taskgraph/error.hpp"
#include "taskgraph/graph.hpp"
#include "taskgraph/hash.hpp"
#include "taskgraph/types.hpp"

namespace taskgraph {

/// Per-frame similarity model.
///
/// A clean frame scores its true keystep ~ N(mu_true, sigma) and every other
/// keystep ~ N(mu_false, sigma). With probability rho a frame is corrupted:
/// it carries no signal (all keysteps ~ N(mu_false, sigma)) and the row
/// maximum is swapped onto a uniformly chosen wrong keystep. Scores are
/// clamped to [-1, 1].
struct ScoreModel {
  double mu_true = 0.7;
  double mu_false = 0.0;
  double sigma = 0.15;
  double rho = 0.4;

  void validate() const {
    if (!(mu_true > mu_false)) fail(ErrorKind::usage, "score model needs mu_true > mu_false");
    if (!(rho >= 0.0 && rho <= 1.0)) fail(ErrorKind::usage, "corruption rate must lie in [0, 1]");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail(ErrorKind::usage, "sigma must be finite and >= 0");
  }
};

struct SynthConfig {
  std::size_t num_keysteps = 50;
  std::size_t num_videos = 200;
  std::size_t min_length = 50;
  std::size_t max_length = 50;
  std::size_t branching = 4;
  double self_loop = 0.7;  // probability a keystep persists into the next frame
  ScoreModel scores;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_keysteps < 1) fail(ErrorKind::usage, "need at least one keystep");
    if (branching < 1 || branching > num_keysteps)
      fail(ErrorKind::usage, "branching factor must lie in [1, K]");
    if (!(self_loop >= 0.0 && self_loop < 1.0))
      fail(ErrorKind::usage, "self-loop probability must lie in [0, 1)");
    if (min_length < 1 || min_length > max_length)
      fail(ErrorKind::usage, "video length range must satisfy 1 <= min <= max");
    scores.validate();
  }
};

namespace detail {

inline double draw_score(std::mt19937_64& rng, double mean, double sigma) {
  double v = mean;
  if (sigma > 0.0) v = std::normal_distribution<double>(mean, sigma)(rng);
  return std::clamp(v, -1.0, 1.0);
}

inline bool strongly_connected(const TaskGraph& g) {
  const std::size_t K = g.size();
  auto reach = [&](bool reverse) {
    std::vector<bool> seen(K, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < K; ++v) {
        const double w = reverse ? g.weight(static_cast<KeystepId>(v), static_cast<KeystepId>(u))
                                 : g.weight(static_cast<KeystepId>(u), static_cast<KeystepId>(v));
        if (w > 0.0 && !seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  };
  return reach(false) && reach(true);
}

}  // namespace detail

inline bool is_strongly_connected(const TaskGraph& g) { return g.size() > 0 && detail::strongly_connected(g); }

/// Random row-stochastic graph where every keystep has `branching`
/// successors with Dirichlet(1, ..., 1) weights. One successor of each node
/// follows a random Hamiltonian cycle, so the result is strongly connected;
/// the check and retry loop guard that construction.
///
/// With `self_loop` > 0 every keystep also stays put with that probability
/// and its successors share the remaining mass: a frame-level chain whose
/// keysteps last a geometric number of frames.
inline TaskGraph gen_graph(std::size_t num_keysteps, std::size_t branching, std::uint64_t seed,
                           double self_loop = 0.0) {
  if (num_keysteps < 1 || branching < 1 || branching > num_keysteps)
    fail(ErrorKind::usage, "gen_graph needs 1 <= branching <= K");
  if (!(self_loop >= 0.0 && self_loop < 1.0))
    fail(ErrorKind::usage, "self-loop probability must lie in [0, 1)");
  const std::size_t K = num_keysteps;
  for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
    std::mt19937_64 rng(derive_seed(seed, "graph", attempt));
    std::vector<std::size_t> cycle(K);
    std::iota(cycle.begin(), cycle.end(), std::size_t{0});
    std::shuffle(cycle.begin(), cycle.end(), rng);
    std::vector<std::size_t> next(K);
    for (std::size_t i = 0; i < K; ++i) next[cycle[i]] = cycle[(i + 1) % K];

    TransitionCounts counts(K);
    std::exponential_distribution<double> gamma1(1.0);
    for (std::size_t i = 0; i < K; ++i) {
      std::vector<std::size_t> succ{next[i]};
      std::vector<std::size_t> others;
      for (std::size_t j = 0; j < K; ++j)
        if (j != i && j != next[i]) others.push_back(j);
      std::shuffle(others.begin(), others.end(), rng);
      for (std::size_t j = 0; succ.size() < branching && j < others.size(); ++j) succ.push_back(others[j]);
      if (succ.size() < branching && next[i] != i) succ.push_back(i);
      std::vector<double> w(succ.size());
      for (double& x : w) x = gamma1(rng);
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      const double moving = K > 1 ? 1.0 - self_loop : 1.0;
      if (K > 1 && self_loop > 0.0) counts.add(static_cast<KeystepId>(i), static_cast<KeystepId>(i), self_loop);
      for (std::size_t s = 0; s < succ.size(); ++s)
        counts.add(static_cast<KeystepId>(i), static_cast<KeystepId>(succ[s]), moving * w[s] / total);
    }
    TaskGraph g(std::move(counts));
    if (detail::strongly_connected(g)) return g;
  }
  fail(ErrorKind::generation, "could not generate a strongly connected graph in 10 attempts");
}

/// Markov walk of length T; the start is uniform unless given.
inline LabelSequence sample_walk(const TaskGraph& graph, std::size_t length, std::uint64_t seed,
                                 std::optional<KeystepId> start = std::nullopt,
                                 std::string video_id = {}) {
  const std::size_t K = graph.size();
  if (K == 0) fail(ErrorKind::usage, "cannot walk an empty graph");
  std::mt19937_64 rng(derive_seed(seed, "walk"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LabelSequence seq{std::move(video_id), {}};
  seq.labels.reserve(length);
  KeystepId cur = start ? *start
                        : static_cast<KeystepId>(std::uniform_int_distribution<std::size_t>(0, K - 1)(rng));
  if (cur < 0 || static_cast<std::size_t>(cur) >= K) fail(ErrorKind::range, "walk start outside graph");
  for (std::size_t t = 0; t < length; ++t) {
    seq.labels.push_back(cur);
    if (t + 1 == length) break;
    if (!graph.has_support(cur))
      fail(ErrorKind::generation, "walk reached keystep " + std::to_string(cur) + " with no successors");
    const auto row = graph.weights_row(cur);
    const double u = unit(rng);
    double acc = 0.0;
    KeystepId nxt = kBackground;
    for (std::size_t j = 0; j < K; ++j) {
      if (row[j] <= 0.0) continue;
      nxt = static_cast<KeystepId>(j);
      acc += row[j];
      if (u < acc) break;
    }
    cur = nxt;
  }
  return seq;
}

/// Similarity scores for a label sequence under `model`.
inline ScoreMatrix emit_scores(const LabelSequence& labels, std::size_t num_keysteps,
                               const ScoreModel& model, std::uint64_t seed,
                               Modality modality = Modality::text) {
  model.validate();
  check_labels(labels, num_keysteps, false);
  const std::size_t K = num_keysteps;
  std::mt19937_64 rng(derive_seed(seed, "scores"));
  std::bernoulli_distribution corrupt(model.rho);
  std::vector<double> values(labels.size() * K);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    double* row = values.data() + t * K;
    const auto truth = static_cast<std::size_t>(labels.labels[t]);
    const bool corrupted = corrupt(rng) && K > 1;
    for (std::size_t k = 0; k < K; ++k)
      row[k] = detail::draw_score(rng, (!corrupted && k == truth) ? model.mu_true : model.mu_false,
                                  model.sigma);
    if (corrupted) {
      std::size_t wrong = std::uniform_int_distribution<std::size_t>(0, K - 2)(rng);
      if (wrong >= truth) ++wrong;
      const auto top = static_cast<std::size_t>(argmax(std::span<const double>(row, K)));
      std::swap(row[wrong], row[top]);
      for (std::size_t k = 0; k < K; ++k)
        if (k != wrong && row[k] >= row[wrong]) row[k] = std::nextafter(row[wrong], -2.0);
    }
  }
  return ScoreMatrix(labels.video_id, modality, labels.size(), K, std::move(values));
}

struct SynthCorpus {
  Vocabulary vocabulary;
  TaskGraph planted;
  std::vector<LabelSequence> ground_truth;
  std::vector<ScoreMatrix> text_scores;
  std::vector<ScoreMatrix> video_scores;
};

inline std::string synth_video_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "vid_%05zu", i);
  return buf;
}

inline Vocabulary synth_vocabulary(std::size_t k, const char* prefix = "keystep") {
  std::vector<std::string> names;
  names.reserve(k);
  char buf[64];
  for (std::size_t i = 0; i < k; ++i) {
    std::snprintf(buf, sizeof buf, "%s_%04zu", prefix, i);
    names.emplace_back(buf);
  }
  return Vocabulary(std::move(names));
}

/// Planted graph, walks, and independent text and video score views.
inline SynthCorpus generate_corpus(const SynthConfig& cfg) {
  cfg.validate();
  SynthCorpus c;
  c.vocabulary = synth_vocabulary(cfg.num_keysteps);
  c.planted = gen_graph(cfg.num_keysteps, cfg.branching, derive_seed(cfg.seed, "planted"), cfg.self_loop);
  std::mt19937_64 len_rng(derive_seed(cfg.seed, "lengths"));
  std::uniform_int_distribution<std::size_t> len(cfg.min_length, cfg.max_length);
  for (std::size_t v = 0; v < cfg.num_videos; ++v) {
    auto walk = sample_walk(c.planted, len(len_rng), derive_seed(cfg.seed, "video", v), std::nullopt,
                            synth_video_id(v));
    c.text_scores.push_back(emit_scores(walk, cfg.num_keysteps, cfg.scores,
                                        derive_seed(cfg.seed, "text", v), Modality::text));
    c.video_scores.push_back(emit_scores(walk, cfg.num_keysteps, cfg.scores,
                                         derive_seed(cfg.seed, "video-scores", v), Modality::video));
    c.ground_truth.push_back(std::move(walk));
  }
  return c;
}

// ------------------------------------------------------------ vocabulary noise

/// Number of distractors injected into an N-keystep vocabulary: ceil(alpha * N).
inline std::size_t distractor_count(std::size_t n, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail(ErrorKind::usage, "alpha must be finite and >= 0");
  // guard against 0.1 * 30 = 3.0000000000000004
  return static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n) - 1e-9));
}

/// Appends ceil(alpha * N) distractor names drawn from `pool` (names already
/// in the vocabulary are skipped). The selection for a smaller alpha is a
/// prefix of the selection for a larger one under the same seed.
inline Vocabulary extend_vocabulary(const Vocabulary& vocab, const Vocabulary& pool, double alpha,
                                    std::uint64_t seed) {
  const std::size_t need = distractor_count(vocab.size(), alpha);
  if (need == 0) return vocab;
  std::vector<std::string> candidates;
  for (const auto& name : pool.names())
    if (!vocab.find(name)) candidates.push_back(name);
  if (candidates.size() < need)
    fail(ErrorKind::usage, "distractor pool has " + std::to_string(candidates.size()) +
                               " usable names, need " + std::to_string(need));
  std::mt19937_64 rng(derive_seed(seed, "distractor-pool"));
  std::shuffle(candidates.begin(), candidates.end(), rng);
  std::vector<std::string> names = vocab.names();
  names.insert(names.end(), candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(need));
  return Vocabulary(std::move(names));
}

/// Appends `extra` distractor columns drawn from the false-keystep model.
/// Columns are generated one after another, so fewer columns are a prefix of more.
inline ScoreMatrix append_distractor_columns(const ScoreMatrix& scores, std::size_t extra,
                                             const ScoreModel& model, std::uint64_t seed) {
  if (extra == 0) return scores;
  const std::size_t T = scores.rows(), K = scores.cols(), K2 = K + extra;
  std::mt19937_64 rng(derive_seed(seed ^ fnv1a(scores.video_id()), "distractor-scores"));
  std::vector<double> values(T * K2);
  for (std::size_t t = 0; t < T; ++t)
    std::copy_n(scores.row(t).begin(), K, values.begin() + static_cast<std::ptrdiff_t>(t * K2));
  for (std::size_t j = 0; j < extra; ++j)
    for (std::size_t t = 0; t < T; ++t)
      values[t * K2 + K + j] = detail::draw_score(rng, model.mu_false, model.sigma);
  return ScoreMatrix(scores.video_id(), scores.modality(), T, K2, std::move(values));
}

/// Vocabulary-noise injection for one video. Original columns and
/// ground-truth ids are untouched.
inline std::pair<Vocabulary, ScoreMatrix> inject_vocab_noise(const Vocabulary& vocab,
                                                             const Vocabulary& pool,
                                                             const ScoreMatrix& scores, double alpha,
                                                             std::uint64_t seed,
                                                             const ScoreModel& model = {}) {
  if (scores.cols() != vocab.size())
    fail(ErrorKind::dimension, "score columns do not match the vocabulary");
  auto extended = extend_vocabulary(vocab, pool, alpha, seed);
  auto noisy = append_distractor_columns(scores, extended.size() - vocab.size(), model, seed);
  return {std::move(extended), std::move(noisy)};
}

// ------------------------------------------------------------- linear chains

/// Chain graph step[0] -> step[1] -> ... with weight 1 on each link.
inline TaskGraph linear_chain_graph(std::span<const KeystepId> ordered_steps, std::size_t num_keysteps) {
  TransitionCounts counts(num_keysteps);
  std::vector<bool> seen(num_keysteps, false);
  for (KeystepId k : ordered_steps) {
    if (k < 0 || static_cast<std::size_t>(k) >= num_keysteps)
      fail(ErrorKind::range, "chain step " + std::to_string(k) + " outside vocabulary");
    if (seen[static_cast<std::size_t>(k)]) fail(ErrorKind::usage, "chain steps must be distinct");
    seen[static_cast<std::size_t>(k)] = true;
  }
  for (std::size_t m = 0; m + 1 < ordered_steps.size(); ++m)
    counts.add(ordered_steps[m], ordered_steps[m + 1]);
  return TaskGraph(std::move(counts));
}

/// Keysteps ordered by their mean relative position within videos; unseen
/// keysteps go last. Ties resolve to the lowest id.
inline std::vector<KeystepId> linear_order(std::span<const LabelSequence> corpus, std::size_t num_keysteps) {
  std::vector<double> pos_sum(num_keysteps, 0.0);
  std::vector<std::size_t> n(num_keysteps, 0);
  for (const auto& seq : corpus) {
    const double denom = seq.size() > 1 ? static_cast<double>(seq.size() - 1) : 1.0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const KeystepId k = seq.labels[t];
      if (k == kBackground) continue;
      pos_sum[static_cast<std::size_t>(k)] += static_cast<double>(t) / denom;
      ++n[static_cast<std::size_t>(k)];
    }
  }
  std::vector<double> mean(num_keysteps, 2.0);
  for (std::size_t k = 0; k < num_keysteps; ++k)
    if (n[k]) mean[k] = pos_sum[k] / static_cast<double>(n[k]);
  std::vector<KeystepId> order(num_keysteps);
  std::iota(order.begin(), order.end(), KeystepId{0});
  std::stable_sort(order.begin(), order.end(), [&](KeystepId a, KeystepId b) {
    return mean[static_cast<std::size_t>(a)] < mean[static_cast<std::size_t>(b)];
  });
  return order;
}

}  // namespace taskgraph
