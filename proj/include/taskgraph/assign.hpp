#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "taskgraph/error.hpp"
#include "taskgraph/types.hpp"

namespace taskgraph {

/// Preliminary labels and, per frame, the score of the chosen keystep.
struct Preliminary {
  LabelSequence labels;
  std::vector<double> confidence;
};

/// Labels plus which frames count as anchors.
struct AnchoredLabels {
  std::vector<KeystepId> labels;
  AnchorMask anchors;
};

/// Index of the row maximum; ties resolve to the lowest id.
inline KeystepId argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return static_cast<KeystepId>(best);
}

inline Preliminary preliminary_assign(const ScoreMatrix& scores) {
  Preliminary out;
  out.labels.video_id = scores.video_id();
  out.labels.labels.resize(scores.rows());
  out.confidence.resize(scores.rows());
  for (std::size_t t = 0; t < scores.rows(); ++t) {
    const auto row = scores.row(t);
    const KeystepId k = argmax(row);
    out.labels.labels[t] = k;
    out.confidence[t] = row[static_cast<std::size_t>(k)];
  }
  return out;
}

/// mask[t] is set iff confidence[t] >= gamma (inclusive).
inline AnchorMask anchor_mask(std::span<const double> confidence, double gamma) {
  if (!std::isfinite(gamma)) fail(ErrorKind::value, "confidence threshold must be finite");
  AnchorMask mask(confidence.size());
  for (std::size_t t = 0; t < confidence.size(); ++t) mask[t] = confidence[t] >= gamma;
  return mask;
}

/// Per-video threshold keeping half the frames: the ceil(T/2)-th largest
/// confidence, so at least ceil(T/2) frames pass (more only on ties).
inline double adaptive_gamma(std::span<const double> confidence) {
  if (confidence.empty()) fail(ErrorKind::dimension, "adaptive threshold needs at least one frame");
  std::vector<double> sorted(confidence.begin(), confidence.end());
  const std::size_t keep = (sorted.size() + 1) / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(keep - 1),
                   sorted.end(), std::greater<>());
  return sorted[keep - 1];
}

/// Video-priority fusion. A frame confident in either modality becomes an
/// anchor with the confident modality's label (video wins when both are);
/// otherwise the video's preliminary label is kept unanchored.
inline AnchoredLabels fuse_modalities(const AnchoredLabels& video, const AnchoredLabels& text) {
  const std::size_t T = video.labels.size();
  if (video.anchors.size() != T || text.labels.size() != T || text.anchors.size() != T)
    fail(ErrorKind::dimension, "fusion needs equal-length video and text sequences (video " +
                                   std::to_string(T) + ", text " +
                                   std::to_string(text.labels.size()) + ")");
  AnchoredLabels out{std::vector<KeystepId>(T), AnchorMask(T)};
  for (std::size_t t = 0; t < T; ++t) {
    if (video.anchors[t]) {
      out.labels[t] = video.labels[t];
      out.anchors[t] = true;
    } else if (text.anchors[t]) {
      out.labels[t] = text.labels[t];
      out.anchors[t] = true;
    } else {
      out.labels[t] = video.labels[t];
      out.anchors[t] = false;
    }
  }
  return out;
}

/// Ablation mode: beta * video + (1 - beta) * text, row by row.
inline ScoreMatrix weighted_fusion(const ScoreMatrix& video, const ScoreMatrix& text, double beta) {
  if (video.rows() != text.rows() || video.cols() != text.cols())
    fail(ErrorKind::dimension, "weighted fusion of '" + video.video_id() +
                                   "' needs matrices of equal shape");
  if (!(beta >= 0.0 && beta <= 1.0)) fail(ErrorKind::value, "fusion weight must lie in [0, 1]");
  std::vector<double> fused(video.values().size());
  for (std::size_t i = 0; i < fused.size(); ++i)
    fused[i] = beta * video.values()[i] + (1.0 - beta) * text.values()[i];
  return ScoreMatrix(video.video_id(), Modality::video, video.rows(), video.cols(), std::move(fused));
}

}  // namespace taskgraph
