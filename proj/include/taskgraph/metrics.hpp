#pragma once

// Frame-level segmentation metrics. Frames whose ground truth is background
// are dropped from every metric before anything is counted.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "taskgraph/error.hpp"
#include "taskgraph/ingest.hpp"
#include "taskgraph/types.hpp"

namespace taskgraph {

struct KeystepTally {
  std::size_t gt = 0;       // frames with this ground truth
  std::size_t pred = 0;     // frames predicted as this keystep
  std::size_t correct = 0;  // frames where both agree on it
};

struct KeystepMetrics {
  std::optional<double> accuracy;   // defined when present in gt
  double iou = 0.0;
  std::optional<double> precision;  // defined when predicted at least once
  std::optional<double> recall;     // defined when present in gt
  double f1 = 0.0;
};

struct EvalReport {
  std::map<KeystepId, KeystepMetrics> per_keystep;
  std::optional<double> mean_accuracy;
  std::optional<double> mean_iou;
  std::optional<double> macro_f1;
  std::vector<std::pair<std::string, double>> edit_distance;  // per video
  std::optional<double> mean_edit_distance;
  std::size_t frames_evaluated = 0;
};

/// Levenshtein distance normalised by the longer length; 0 when both are empty.
inline double normalized_edit_distance(std::span<const KeystepId> a, std::span<const KeystepId> b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 && m == 0) return 0.0;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[m]) / static_cast<double>(std::max(n, m));
}

inline std::vector<KeystepId> collapse_runs(std::span<const KeystepId> seq) {
  std::vector<KeystepId> out;
  for (KeystepId k : seq)
    if (out.empty() || out.back() != k) out.push_back(k);
  return out;
}

/// Corpus-wide accumulator; per-keystep counts are pooled over all frames.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(bool collapse_for_edit_distance = false)
      : collapse_(collapse_for_edit_distance) {}

  void add(std::span<const KeystepId> pred, std::span<const KeystepId> gt,
           const std::string& video_id = {}) {
    if (pred.size() != gt.size())
      fail(ErrorKind::dimension, "video '" + video_id + "': prediction has " +
                                     std::to_string(pred.size()) + " frames, ground truth " +
                                     std::to_string(gt.size()));
    std::vector<KeystepId> p, g;
    for (std::size_t t = 0; t < gt.size(); ++t) {
      if (gt[t] == kBackground) continue;
      ++frames_;
      ++tally_[gt[t]].gt;
      if (pred[t] != kBackground) {
        ++tally_[pred[t]].pred;
        p.push_back(pred[t]);
      }
      if (pred[t] == gt[t]) ++tally_[gt[t]].correct;
      g.push_back(gt[t]);
    }
    const double ed = collapse_ ? normalized_edit_distance(collapse_runs(p), collapse_runs(g))
                                : normalized_edit_distance(p, g);
    edit_distance_.emplace_back(video_id, ed);
  }

  void add(const LabelSequence& pred, const LabelSequence& gt) {
    add(pred.labels, gt.labels, gt.video_id);
  }

  const std::map<KeystepId, KeystepTally>& tallies() const noexcept { return tally_; }

  EvalReport report() const {
    EvalReport r;
    r.frames_evaluated = frames_;
    double acc_sum = 0.0, iou_sum = 0.0, f1_sum = 0.0;
    std::size_t n_gt = 0, n_union = 0;
    for (const auto& [k, c] : tally_) {
      KeystepMetrics m;
      const std::size_t uni = c.gt + c.pred - c.correct;
      m.iou = uni ? static_cast<double>(c.correct) / static_cast<double>(uni) : 0.0;
      if (c.pred) m.precision = static_cast<double>(c.correct) / static_cast<double>(c.pred);
      if (c.gt) {
        m.accuracy = static_cast<double>(c.correct) / static_cast<double>(c.gt);
        m.recall = m.accuracy;
      }
      const double p = m.precision.value_or(0.0), rc = m.recall.value_or(0.0);
      m.f1 = (p + rc) > 0.0 ? 2.0 * p * rc / (p + rc) : 0.0;
      if (uni) {
        iou_sum += m.iou;
        ++n_union;
      }
      if (c.gt) {
        acc_sum += *m.accuracy;
        f1_sum += m.f1;
        ++n_gt;
      }
      r.per_keystep.emplace(k, m);
    }
    if (n_gt) {
      r.mean_accuracy = acc_sum / static_cast<double>(n_gt);
      r.macro_f1 = f1_sum / static_cast<double>(n_gt);
    }
    if (n_union) r.mean_iou = iou_sum / static_cast<double>(n_union);
    r.edit_distance = edit_distance_;
    if (!edit_distance_.empty()) {
      double s = 0.0;
      for (const auto& e : edit_distance_) s += e.second;
      r.mean_edit_distance = s / static_cast<double>(edit_distance_.size());
    }
    return r;
  }

 private:
  bool collapse_;
  std::map<KeystepId, KeystepTally> tally_;
  std::vector<std::pair<std::string, double>> edit_distance_;
  std::size_t frames_ = 0;
};

inline EvalReport evaluate(std::span<const KeystepId> pred, std::span<const KeystepId> gt) {
  MetricAccumulator acc;
  acc.add(pred, gt);
  return acc.report();
}

/// Pairs predictions with ground truth by video id. Every ground-truth video
/// must have a prediction of the same length.
inline EvalReport evaluate_corpus(std::span<const LabelSequence> pred,
                                  std::span<const LabelSequence> gt, bool collapse = false) {
  std::map<std::string, const LabelSequence*> by_id;
  for (const auto& p : pred) by_id[p.video_id] = &p;
  MetricAccumulator acc(collapse);
  for (const auto& g : gt) {
    auto it = by_id.find(g.video_id);
    if (it == by_id.end())
      fail(ErrorKind::dimension, "no prediction for ground-truth video '" + g.video_id + "'");
    acc.add(*it->second, g);
  }
  return acc.report();
}

inline std::optional<double> framewise_accuracy(std::span<const KeystepId> pred,
                                                std::span<const KeystepId> gt) {
  return evaluate(pred, gt).mean_accuracy;
}
inline std::optional<double> mean_iou(std::span<const KeystepId> pred, std::span<const KeystepId> gt) {
  return evaluate(pred, gt).mean_iou;
}
inline std::optional<double> macro_f1(std::span<const KeystepId> pred, std::span<const KeystepId> gt) {
  return evaluate(pred, gt).macro_f1;
}

/// Edit distance after dropping frames whose ground truth is background.
inline double edit_distance(std::span<const KeystepId> pred, std::span<const KeystepId> gt,
                            bool collapse = false) {
  MetricAccumulator acc(collapse);
  acc.add(pred, gt);
  return acc.report().edit_distance.front().second;
}

// ------------------------------------------------------------------ report IO

namespace detail {
inline nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}
inline std::optional<double> json_opt(const nlohmann::ordered_json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) fail(ErrorKind::format, std::string("report field '") + key + "' is not a number");
  return j[key].get<double>();
}
}  // namespace detail

inline nlohmann::ordered_json report_to_json(const EvalReport& r,
                                             const std::optional<Provenance>& prov = std::nullopt) {
  nlohmann::ordered_json j;
  auto per = nlohmann::ordered_json::object();
  for (const auto& [k, m] : r.per_keystep) {
    per[std::to_string(k)] = {{"acc", detail::opt_json(m.accuracy)},
                              {"iou", m.iou},
                              {"f1", m.f1},
                              {"precision", detail::opt_json(m.precision)},
                              {"recall", detail::opt_json(m.recall)}};
  }
  j["per_keystep"] = std::move(per);
  j["mean_acc"] = detail::opt_json(r.mean_accuracy);
  j["mean_iou"] = detail::opt_json(r.mean_iou);
  j["macro_f1"] = detail::opt_json(r.macro_f1);
  j["mean_ed"] = detail::opt_json(r.mean_edit_distance);
  j["frames_evaluated"] = r.frames_evaluated;
  auto ed = nlohmann::ordered_json::object();
  for (const auto& [vid, d] : r.edit_distance) ed[vid] = d;
  j["edit_distance"] = std::move(ed);
  if (prov) j["provenance"] = {{"config_hash", prov->config_hash}, {"seed", prov->seed}};
  return j;
}

inline EvalReport report_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || !j.contains("per_keystep") || !j["per_keystep"].is_object())
    fail(ErrorKind::format, "report must be an object with 'per_keystep'");
  EvalReport r;
  for (const auto& [key, m] : j["per_keystep"].items()) {
    const auto id = detail::parse_number<KeystepId>(key);
    if (!id) fail(ErrorKind::format, "report keystep key '" + key + "' is not an integer");
    KeystepMetrics km;
    km.accuracy = detail::json_opt(m, "acc");
    km.iou = detail::json_opt(m, "iou").value_or(0.0);
    km.f1 = detail::json_opt(m, "f1").value_or(0.0);
    km.precision = detail::json_opt(m, "precision");
    km.recall = detail::json_opt(m, "recall");
    r.per_keystep.emplace(*id, km);
  }
  r.mean_accuracy = detail::json_opt(j, "mean_acc");
  r.mean_iou = detail::json_opt(j, "mean_iou");
  r.macro_f1 = detail::json_opt(j, "macro_f1");
  r.mean_edit_distance = detail::json_opt(j, "mean_ed");
  if (j.contains("frames_evaluated")) r.frames_evaluated = j["frames_evaluated"].get<std::size_t>();
  if (j.contains("edit_distance"))
    for (const auto& [vid, d] : j["edit_distance"].items()) r.edit_distance.emplace_back(vid, d.get<double>());
  return r;
}

inline void save_report(const std::filesystem::path& path, const EvalReport& report,
                        const std::optional<Provenance>& prov = std::nullopt) {
  auto out = detail::open_output(path);
  out << report_to_json(report, prov).dump(2) << '\n';
}

inline EvalReport load_report(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  try {
    return report_from_json(nlohmann::ordered_json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, path.string() + ": " + e.what());
  }
}

}  // namespace taskgraph
