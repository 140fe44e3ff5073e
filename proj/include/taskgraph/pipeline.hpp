#pragma once

// File-to-file pipeline steps behind the CLI subcommands. Logs go to
// std::clog; data only to the named output files.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "taskgraph/error.hpp"
#include "taskgraph/experiment.hpp"
#include "taskgraph/graph_io.hpp"
#include "taskgraph/hash.hpp"
#include "taskgraph/ingest.hpp"
#include "taskgraph/metrics.hpp"
#include "taskgraph/synth.hpp"

namespace taskgraph {

/// Canonical "key=value" lines hashed into the provenance stamp. Inputs
/// contribute their content hash, never their path.
class ConfigDigest {
 public:
  template <typename T>
  ConfigDigest& add(const std::string& key, const T& value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    lines_.push_back(key + "=" + os.str());
    return *this;
  }

  ConfigDigest& add_file(const std::string& key, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::format, "cannot open input file '" + path.string() + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return add(key, hex64(fnv1a(bytes)));
  }

  Provenance finish(std::uint64_t seed) const {
    std::string joined;
    for (const auto& l : lines_) joined += l + '\n';
    joined += "seed=" + std::to_string(seed) + '\n';
    return {hex64(fnv1a(joined)), seed};
  }

 private:
  std::vector<std::string> lines_;
};

inline std::string to_string(ModalitySelection m) {
  switch (m) {
    case ModalitySelection::text: return "text";
    case ModalitySelection::video: return "video";
    default: return "both";
  }
}

inline void digest_pipeline(ConfigDigest& d, const PipelineConfig& cfg) {
  d.add("modality", to_string(cfg.modality))
      .add("decoder", cfg.decoder == DecoderKind::brf ? "brf" : "pathsearch")
      .add("fusion", cfg.fusion == FusionMode::weighted ? "weighted" : "priority")
      .add("fusion_weight", cfg.fusion_weight)
      .add("gamma_text", cfg.decode.gamma_text)
      .add("gamma_video", cfg.decode.gamma_video)
      .add("adaptive", cfg.decode.adaptive_threshold)
      .add("smoothing", cfg.decode.smoothing)
      .add("epsilon", cfg.brf.epsilon)
      .add("normalize_belief", cfg.brf.normalize_belief);
}

inline void digest_synth(ConfigDigest& d, const SynthConfig& c) {
  d.add("K", c.num_keysteps)
      .add("videos", c.num_videos)
      .add("min_length", c.min_length)
      .add("max_length", c.max_length)
      .add("branching", c.branching)
      .add("self_loop", c.self_loop)
      .add("mu_true", c.scores.mu_true)
      .add("mu_false", c.scores.mu_false)
      .add("sigma", c.scores.sigma)
      .add("rho", c.scores.rho);
}

inline std::vector<ScoreMatrix> load_all_scores(const std::vector<std::filesystem::path>& files,
                                                const Vocabulary& vocab) {
  if (files.empty()) fail(ErrorKind::usage, "no score files given");
  std::vector<ScoreMatrix> blocks;
  for (const auto& f : files) {
    auto part = load_score_blocks(f, vocab);
    blocks.insert(blocks.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return blocks;
}

// ---------------------------------------------------------------- subcommands

struct SynthOptions {
  SynthConfig config;
  std::filesystem::path out_dir;
};

struct SynthOutputs {
  std::filesystem::path vocabulary, ground_truth, text_scores, video_scores, planted_graph;
};

inline SynthOutputs run_synth(const SynthOptions& opt) {
  ConfigDigest d;
  d.add("command", "synth");
  digest_synth(d, opt.config);
  const auto prov = d.finish(opt.config.seed);
  const auto corpus = generate_corpus(opt.config);
  SynthOutputs out{opt.out_dir / "vocab.txt", opt.out_dir / "ground_truth.jsonl",
                   opt.out_dir / "scores_text.csv", opt.out_dir / "scores_video.csv",
                   opt.out_dir / "planted_graph.json"};
  save_vocabulary(out.vocabulary, corpus.vocabulary, prov);
  save_labels(out.ground_truth, corpus.ground_truth, prov);
  save_scores(out.text_scores, corpus.text_scores, prov);
  save_scores(out.video_scores, corpus.video_scores, prov);
  save_graph(out.planted_graph, corpus.planted, prov);
  std::clog << "synth: " << corpus.ground_truth.size() << " videos, K=" << corpus.vocabulary.size()
            << " -> " << opt.out_dir.string() << '\n';
  return out;
}

struct MineOptions {
  std::filesystem::path vocabulary;
  std::vector<std::filesystem::path> scores;
  PipelineConfig pipeline;
  std::filesystem::path out;
  std::optional<std::filesystem::path> dot;
  std::size_t top_n = 4;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
};

inline TaskGraph run_mine(const MineOptions& opt) {
  ConfigDigest d;
  d.add("command", "mine").add_file("vocab", opt.vocabulary);
  for (const auto& f : opt.scores) d.add_file("scores", f);
  digest_pipeline(d, opt.pipeline);
  d.add("top", opt.top_n);
  const auto prov = d.finish(opt.seed);

  const auto vocab = load_vocabulary(opt.vocabulary);
  const auto videos = group_scores(load_all_scores(opt.scores, vocab), opt.pipeline.modality);
  const auto graph = mine_corpus_graph(videos, vocab.size(), opt.pipeline, opt.threads);
  save_graph(opt.out, graph, prov);
  if (opt.dot) {
    auto out = detail::open_output(*opt.dot);
    write_dot(out, graph, &vocab, opt.top_n, prov);
  }
  std::clog << "mine: " << videos.size() << " videos -> " << opt.out.string() << '\n';
  return graph;
}

struct DecodeOptions {
  std::filesystem::path vocabulary;
  std::filesystem::path graph;
  std::vector<std::filesystem::path> scores;
  PipelineConfig pipeline;
  std::filesystem::path out;
  std::optional<std::filesystem::path> preliminary_out;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
};

inline CorpusDecode run_decode(const DecodeOptions& opt) {
  ConfigDigest d;
  d.add("command", "decode").add_file("vocab", opt.vocabulary).add_file("graph", opt.graph);
  for (const auto& f : opt.scores) d.add_file("scores", f);
  digest_pipeline(d, opt.pipeline);
  const auto prov = d.finish(opt.seed);

  const auto vocab = load_vocabulary(opt.vocabulary);
  const auto graph = load_graph(opt.graph);
  if (graph.size() != vocab.size())
    fail(ErrorKind::dimension, opt.graph.string() + ": graph has K=" + std::to_string(graph.size()) +
                                   " but the vocabulary has " + std::to_string(vocab.size()));
  const auto videos = group_scores(load_all_scores(opt.scores, vocab), opt.pipeline.modality);
  auto decoded = decode_corpus(videos, graph, opt.pipeline, opt.threads);
  save_labels(opt.out, decoded.corrected, prov);
  if (opt.preliminary_out) save_labels(*opt.preliminary_out, decoded.preliminary, prov);
  std::clog << "decode: " << videos.size() << " videos -> " << opt.out.string() << '\n';
  return decoded;
}

struct EvalOptions {
  std::filesystem::path vocabulary;
  std::filesystem::path predictions;
  std::filesystem::path ground_truth;
  std::filesystem::path out;
  bool collapse = false;
  std::uint64_t seed = 0;
};

inline EvalReport run_eval(const EvalOptions& opt) {
  ConfigDigest d;
  d.add("command", "eval")
      .add_file("vocab", opt.vocabulary)
      .add_file("pred", opt.predictions)
      .add_file("gt", opt.ground_truth)
      .add("collapse", opt.collapse);
  const auto prov = d.finish(opt.seed);
  const auto vocab = load_vocabulary(opt.vocabulary);
  const auto pred = load_labels(opt.predictions, vocab, false);
  const auto gt = load_labels(opt.ground_truth, vocab, true);
  auto report = evaluate_corpus(pred, gt, opt.collapse);
  save_report(opt.out, report, prov);
  std::clog << "eval: mean_acc=" << report.mean_accuracy.value_or(0.0) << " -> " << opt.out.string() << '\n';
  return report;
}

struct SweepOptions {
  SynthConfig synth;
  std::vector<double> alphas{0.0, 0.5, 1.0, 4.0, 5.0, 10.0};
  std::vector<double> gammas{0.30, 0.35, 0.40, 0.45, 0.50};
  double gamma = 0.5;  // threshold used across the alpha grid
  std::filesystem::path out;
  std::size_t threads = 1;
};

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                            const std::optional<Provenance>& prov = std::nullopt) {
  detail::write_comment(out, prov);
  out << "setting,baseline_acc,corrected_acc,relative_gain\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f", r.setting.c_str(), r.baseline_accuracy,
                  r.corrected_accuracy, r.relative_gain);
    out << buf << '\n';
  }
}

inline std::vector<SweepRow> run_sweep(const SweepOptions& opt) {
  ConfigDigest d;
  d.add("command", "sweep");
  digest_synth(d, opt.synth);
  for (double a : opt.alphas) d.add("alpha", a);
  for (double g : opt.gammas) d.add("gamma_grid", g);
  d.add("gamma", opt.gamma);
  const auto prov = d.finish(opt.synth.seed);

  const auto corpus = generate_corpus(opt.synth);
  auto rows = gamma_sweep(corpus, opt.gammas, opt.threads);
  auto alpha_rows = alpha_sweep(corpus, opt.alphas, opt.gamma, opt.synth.scores, opt.synth.seed, opt.threads);
  rows.insert(rows.end(), alpha_rows.begin(), alpha_rows.end());
  auto out = detail::open_output(opt.out);
  write_sweep_csv(out, rows, prov);
  std::clog << "sweep: " << rows.size() << " settings -> " << opt.out.string() << '\n';
  return rows;
}

struct GraphvizOptions {
  std::filesystem::path graph;
  std::optional<std::filesystem::path> vocabulary;
  std::size_t top_n = 4;
  std::filesystem::path out;
  std::uint64_t seed = 0;
};

inline void run_graphviz(const GraphvizOptions& opt) {
  ConfigDigest d;
  d.add("command", "graphviz").add_file("graph", opt.graph).add("top", opt.top_n);
  if (opt.vocabulary) d.add_file("vocab", *opt.vocabulary);
  const auto prov = d.finish(opt.seed);
  const auto graph = load_graph(opt.graph);
  std::optional<Vocabulary> vocab;
  if (opt.vocabulary) vocab = load_vocabulary(*opt.vocabulary);
  auto out = detail::open_output(opt.out);
  write_dot(out, graph, vocab ? &*vocab : nullptr, opt.top_n, prov);
}

/// Process exit code for an error kind.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 2;
    case ErrorKind::format:
    case ErrorKind::value: return 3;
    case ErrorKind::dimension:
    case ErrorKind::range: return 4;
    default: return 5;
  }
}

}  // namespace taskgraph
