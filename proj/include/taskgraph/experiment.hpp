#pragma once

// End-to-end runs over in-memory corpora: modality handling, corpus-level
// mining and decoding, and the threshold / vocabulary-noise sweeps.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "taskgraph/assign.hpp"
#include "taskgraph/decode.hpp"
#include "taskgraph/error.hpp"
#include "taskgraph/graph.hpp"
#include "taskgraph/metrics.hpp"
#include "taskgraph/parallel.hpp"
#include "taskgraph/synth.hpp"
#include "taskgraph/types.hpp"

namespace taskgraph {

enum class ModalitySelection { text, video, both };
enum class DecoderKind { pathsearch, brf };
enum class FusionMode { priority, weighted };

struct PipelineConfig {
  ModalitySelection modality = ModalitySelection::text;
  DecoderKind decoder = DecoderKind::pathsearch;
  FusionMode fusion = FusionMode::priority;
  double fusion_weight = 0.5;  // video share in weighted fusion
  DecodeConfig decode;
  BrfConfig brf;
};

/// The score views available for one video.
struct VideoScores {
  std::string video_id;
  std::optional<ScoreMatrix> text;
  std::optional<ScoreMatrix> video;

  std::size_t length() const { return text ? text->rows() : video->rows(); }
};

/// Groups score blocks by video id (sorted) and checks that every video has
/// the views `selection` needs.
inline std::vector<VideoScores> group_scores(std::vector<ScoreMatrix> blocks, ModalitySelection selection) {
  std::map<std::string, VideoScores> by_id;
  for (auto& m : blocks) {
    auto& slot = by_id[m.video_id()];
    slot.video_id = m.video_id();
    auto& view = m.modality() == Modality::text ? slot.text : slot.video;
    if (view)
      fail(ErrorKind::format, "duplicate " + std::string(to_string(m.modality())) + " scores for video '" +
                                  m.video_id() + "'");
    view = std::move(m);
  }
  std::vector<VideoScores> out;
  for (auto& [id, v] : by_id) {
    const bool need_text = selection != ModalitySelection::video;
    const bool need_video = selection != ModalitySelection::text;
    if (need_text && !v.text) fail(ErrorKind::dimension, "video '" + id + "' has no text scores");
    if (need_video && !v.video) fail(ErrorKind::dimension, "video '" + id + "' has no video scores");
    if (!need_text) v.text.reset();
    if (!need_video) v.video.reset();
    if (v.text && v.video && v.text->rows() != v.video->rows())
      fail(ErrorKind::dimension, "video '" + id + "': text and video scores differ in length");
    if (v.text || v.video) out.push_back(std::move(v));
  }
  if (out.empty()) fail(ErrorKind::dimension, "no videos with the requested modality");
  return out;
}

inline std::vector<VideoScores> single_modality(std::span<const ScoreMatrix> blocks) {
  std::vector<VideoScores> out;
  out.reserve(blocks.size());
  for (const auto& m : blocks) {
    VideoScores v{m.video_id(), std::nullopt, std::nullopt};
    (m.modality() == Modality::text ? v.text : v.video) = m;
    out.push_back(std::move(v));
  }
  return out;
}

/// Weighted thresholds follow the fusion weight.
inline double fused_gamma(const PipelineConfig& cfg) {
  return cfg.fusion_weight * cfg.decode.gamma_video + (1.0 - cfg.fusion_weight) * cfg.decode.gamma_text;
}

/// Preliminary labels and anchors, fused across modalities when both are present.
inline AnchoredLabels prepare_video(const VideoScores& v, const PipelineConfig& cfg) {
  if (v.text && v.video) {
    if (cfg.fusion == FusionMode::weighted) {
      const auto fused = weighted_fusion(*v.video, *v.text, cfg.fusion_weight);
      auto prelim = preliminary_assign(fused);
      const double gamma = cfg.decode.adaptive_threshold ? adaptive_gamma(prelim.confidence) : fused_gamma(cfg);
      return {std::move(prelim.labels.labels), anchor_mask(prelim.confidence, gamma)};
    }
    return fuse_modalities(anchored_assignment(*v.video, cfg.decode), anchored_assignment(*v.text, cfg.decode));
  }
  return anchored_assignment(v.text ? *v.text : *v.video, cfg.decode);
}

/// Score rows a filter sees: the single view, or the weighted blend of both.
inline ScoreMatrix measurement_rows(const VideoScores& v, const PipelineConfig& cfg) {
  if (v.text && v.video) return weighted_fusion(*v.video, *v.text, cfg.fusion_weight);
  return v.text ? *v.text : *v.video;
}

inline std::vector<LabelSequence> preliminary_corpus(std::span<const VideoScores> corpus,
                                                     const PipelineConfig& cfg, std::size_t threads = 1) {
  return parallel_map(corpus.size(), threads, [&](std::size_t i) {
    return LabelSequence{corpus[i].video_id, prepare_video(corpus[i], cfg).labels};
  });
}

inline TaskGraph mine_corpus_graph(std::span<const VideoScores> corpus, std::size_t num_keysteps,
                                   const PipelineConfig& cfg, std::size_t threads = 1) {
  const auto prelim = preliminary_corpus(corpus, cfg, threads);
  return mine_graph(prelim, num_keysteps);
}

struct CorpusDecode {
  std::vector<LabelSequence> preliminary;
  std::vector<LabelSequence> corrected;
  std::vector<AnchorMask> anchors;
};

inline CorpusDecode decode_corpus(std::span<const VideoScores> corpus, const TaskGraph& graph,
                                  const PipelineConfig& cfg, std::size_t threads = 1) {
  const CostGraph cost = to_cost(graph, cfg.decode.smoothing);
  struct One {
    LabelSequence prelim, corrected;
    AnchorMask anchors;
  };
  auto results = parallel_map(corpus.size(), threads, [&](std::size_t i) {
    const auto& v = corpus[i];
    auto prepared = prepare_video(v, cfg);
    LabelSequence prelim{v.video_id, prepared.labels};
    One r;
    if (cfg.decoder == DecoderKind::brf) {
      r.corrected = brf_decode(measurement_rows(v, cfg), graph, cfg.brf);
    } else {
      r.corrected = correct_sequence(prelim, prepared.anchors, cost);
    }
    r.prelim = std::move(prelim);
    r.anchors = std::move(prepared.anchors);
    return r;
  });
  CorpusDecode out;
  for (auto& r : results) {
    out.preliminary.push_back(std::move(r.prelim));
    out.corrected.push_back(std::move(r.corrected));
    out.anchors.push_back(std::move(r.anchors));
  }
  return out;
}

// ------------------------------------------------------------------ benchmark

struct BenchmarkResult {
  EvalReport baseline;
  EvalReport corrected;

  double baseline_accuracy() const { return baseline.mean_accuracy.value_or(0.0); }
  double corrected_accuracy() const { return corrected.mean_accuracy.value_or(0.0); }
  double relative_gain() const {
    const double b = baseline_accuracy();
    return b > 0.0 ? (corrected_accuracy() - b) / b : 0.0;
  }
};

/// Mines the graph from the corpus' own preliminary labels (or uses `graph`
/// when given), decodes, and scores both label sets against ground truth.
inline BenchmarkResult run_benchmark(std::span<const VideoScores> corpus, std::span<const LabelSequence> truth,
                                     std::size_t num_keysteps, const PipelineConfig& cfg,
                                     const TaskGraph* graph = nullptr, std::size_t threads = 1) {
  TaskGraph mined;
  if (!graph) {
    mined = mine_corpus_graph(corpus, num_keysteps, cfg, threads);
    graph = &mined;
  }
  const auto decoded = decode_corpus(corpus, *graph, cfg, threads);
  return {evaluate_corpus(decoded.preliminary, truth), evaluate_corpus(decoded.corrected, truth)};
}

struct SweepRow {
  std::string setting;
  double baseline_accuracy = 0.0;
  double corrected_accuracy = 0.0;
  double relative_gain = 0.0;
};

inline SweepRow make_row(std::string setting, const BenchmarkResult& r) {
  return {std::move(setting), r.baseline_accuracy(), r.corrected_accuracy(), r.relative_gain()};
}

inline std::string format_setting(const char* key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=%.2f", key, value);
  return buf;
}

/// Text-only decoding of the synthetic corpus at each threshold.
inline std::vector<SweepRow> gamma_sweep(const SynthCorpus& corpus, std::span<const double> gammas,
                                         std::size_t threads = 1) {
  const auto views = single_modality(corpus.text_scores);
  PipelineConfig cfg;
  const TaskGraph graph = mine_corpus_graph(views, corpus.vocabulary.size(), cfg, threads);
  std::vector<SweepRow> rows;
  for (double g : gammas) {
    cfg.decode.gamma_text = g;
    rows.push_back(make_row(format_setting("gamma", g),
                            run_benchmark(views, corpus.ground_truth, corpus.vocabulary.size(), cfg, &graph, threads)));
  }
  return rows;
}

inline Vocabulary distractor_pool(std::size_t size) { return synth_vocabulary(size, "distractor"); }

/// Text-only decoding after injecting ceil(alpha * N) distractor keysteps.
/// The graph is re-mined from the noisy preliminary labels at every alpha.
inline std::vector<SweepRow> alpha_sweep(const SynthCorpus& corpus, std::span<const double> alphas,
                                         double gamma, const ScoreModel& model, std::uint64_t seed,
                                         std::size_t threads = 1) {
  const std::size_t n = corpus.vocabulary.size();
  double max_alpha = 0.0;
  for (double a : alphas) max_alpha = std::max(max_alpha, a);
  const Vocabulary pool = distractor_pool(std::max<std::size_t>(1, distractor_count(n, max_alpha)));
  PipelineConfig cfg;
  cfg.decode.gamma_text = gamma;
  std::vector<SweepRow> rows;
  for (double alpha : alphas) {
    const Vocabulary vocab = extend_vocabulary(corpus.vocabulary, pool, alpha, seed);
    const std::size_t extra = vocab.size() - n;
    auto noisy = parallel_map(corpus.text_scores.size(), threads, [&](std::size_t i) {
      return append_distractor_columns(corpus.text_scores[i], extra, model, seed);
    });
    const auto views = single_modality(noisy);
    rows.push_back(make_row(format_setting("alpha", alpha),
                            run_benchmark(views, corpus.ground_truth, vocab.size(), cfg, nullptr, threads)));
  }
  return rows;
}

}  // namespace taskgraph
