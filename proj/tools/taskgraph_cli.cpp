// taskgraph: mine a keystep task graph from per-frame similarity scores and
// use it to correct preliminary keystep labels.
//
//   taskgraph synth    --out-dir DIR [synthetic corpus options]
//   taskgraph mine     --vocab V --scores F... --out graph.json [--dot g.dot]
//   taskgraph decode   --vocab V --graph G --scores F... --out labels.jsonl
//   taskgraph eval     --vocab V --pred P --gt G --out report.json
//   taskgraph sweep    --out sweep.csv [synthetic corpus options]
//   taskgraph graphviz --graph G [--vocab V] --out g.dot
//
// Every option may also come from a TOML file given with --config; flags on
// the command line win.

#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "taskgraph/pipeline.hpp"

namespace fs = std::filesystem;
using namespace taskgraph;

namespace {

void add_synth_options(CLI::App* cmd, SynthConfig& c) {
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--keysteps,-K", c.num_keysteps, "Vocabulary size")->capture_default_str();
  cmd->add_option("--videos", c.num_videos, "Number of videos")->capture_default_str();
  cmd->add_option("--min-length", c.min_length, "Shortest video (frames)")->capture_default_str();
  cmd->add_option("--max-length", c.max_length, "Longest video (frames)")->capture_default_str();
  cmd->add_option("--branching", c.branching, "Successors per keystep in the planted graph")
      ->capture_default_str();
  cmd->add_option("--self-loop", c.self_loop, "Probability a keystep persists to the next frame")
      ->capture_default_str();
  cmd->add_option("--mu-true", c.scores.mu_true, "Mean score of the true keystep")->capture_default_str();
  cmd->add_option("--mu-false", c.scores.mu_false, "Mean score of other keysteps")->capture_default_str();
  cmd->add_option("--sigma", c.scores.sigma, "Score standard deviation")->capture_default_str();
  cmd->add_option("--rho", c.scores.rho, "Fraction of corrupted frames")->capture_default_str();
}

const std::map<std::string, ModalitySelection> kModalities{
    {"text", ModalitySelection::text}, {"video", ModalitySelection::video}, {"both", ModalitySelection::both}};
const std::map<std::string, DecoderKind> kDecoders{{"pathsearch", DecoderKind::pathsearch},
                                                   {"brf", DecoderKind::brf}};
const std::map<std::string, FusionMode> kFusion{{"priority", FusionMode::priority},
                                                {"weighted", FusionMode::weighted}};

void add_pipeline_options(CLI::App* cmd, PipelineConfig& p) {
  cmd->add_option("--modality", p.modality, "text, video or both")
      ->transform(CLI::CheckedTransformer(kModalities, CLI::ignore_case))
      ->capture_default_str();
  cmd->add_option("--gamma-text", p.decode.gamma_text, "Anchor threshold for text scores")->capture_default_str();
  cmd->add_option("--gamma-video", p.decode.gamma_video, "Anchor threshold for video scores")
      ->capture_default_str();
  cmd->add_flag("--adaptive", p.decode.adaptive_threshold, "Per-video threshold keeping half the frames");
  cmd->add_option("--smoothing", p.decode.smoothing, "Additive smoothing of transition counts")
      ->capture_default_str();
  cmd->add_option("--fusion", p.fusion, "priority (video wins) or weighted")
      ->transform(CLI::CheckedTransformer(kFusion, CLI::ignore_case))
      ->capture_default_str();
  cmd->add_option("--beta", p.fusion_weight, "Video weight for weighted fusion")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keystep task-graph mining and label correction"};
  app.set_config("--config", "", "TOML configuration file");
  app.require_subcommand(1);
  std::size_t threads = default_threads();
  app.add_option("--threads", threads, "Worker threads")->capture_default_str();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with a planted task graph");
  add_synth_options(synth_cmd, synth.config);
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  MineOptions mine;
  auto* mine_cmd = app.add_subcommand("mine", "Mine a task graph from preliminary keystep labels");
  mine_cmd->add_option("--vocab", mine.vocabulary, "Vocabulary file")->required()->check(CLI::ExistingFile);
  mine_cmd->add_option("--scores", mine.scores, "Score CSV file(s)")->required()->check(CLI::ExistingFile);
  add_pipeline_options(mine_cmd, mine.pipeline);
  mine_cmd->add_option("--out", mine.out, "Graph JSON output")->required();
  mine_cmd->add_option("--dot", mine.dot, "Optional DOT dump of the top transitions");
  mine_cmd->add_option("--top", mine.top_n, "Successors per keystep in the DOT dump")->capture_default_str();
  mine_cmd->add_option("--seed", mine.seed, "Seed recorded for provenance")->capture_default_str();

  DecodeOptions decode;
  auto* decode_cmd = app.add_subcommand("decode", "Correct keystep labels with a task graph");
  decode_cmd->add_option("--vocab", decode.vocabulary, "Vocabulary file")->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("--graph", decode.graph, "Graph JSON")->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("--scores", decode.scores, "Score CSV file(s)")->required()->check(CLI::ExistingFile);
  add_pipeline_options(decode_cmd, decode.pipeline);
  decode_cmd->add_option("--decoder", decode.pipeline.decoder, "pathsearch or brf")
      ->transform(CLI::CheckedTransformer(kDecoders, CLI::ignore_case))
      ->capture_default_str();
  decode_cmd->add_option("--epsilon", decode.pipeline.brf.epsilon, "BRF measurement weight")
      ->capture_default_str();
  decode_cmd->add_option("--out", decode.out, "Corrected labels (JSON lines)")->required();
  decode_cmd->add_option("--prelim-out", decode.preliminary_out, "Also write the preliminary labels");
  decode_cmd->add_option("--seed", decode.seed, "Seed recorded for provenance")->capture_default_str();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted labels against ground truth");
  eval_cmd->add_option("--vocab", eval.vocabulary, "Vocabulary file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--pred", eval.predictions, "Predicted labels")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--gt", eval.ground_truth, "Ground-truth labels")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval.out, "Report JSON output")->required();
  eval_cmd->add_flag("--collapse", eval.collapse, "Run-length-collapse sequences before edit distance");
  eval_cmd->add_option("--seed", eval.seed, "Seed recorded for provenance")->capture_default_str();

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Threshold and vocabulary-noise sweeps on synthetic data");
  add_synth_options(sweep_cmd, sweep.synth);
  sweep_cmd->add_option("--alphas", sweep.alphas, "Vocabulary scaling factors")->capture_default_str();
  sweep_cmd->add_option("--gammas", sweep.gammas, "Thresholds for the sensitivity sweep")->capture_default_str();
  sweep_cmd->add_option("--gamma", sweep.gamma, "Threshold used across the alpha grid")->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out, "CSV output")->required();

  GraphvizOptions gv;
  auto* gv_cmd = app.add_subcommand("graphviz", "Export the top transitions of a graph as DOT");
  gv_cmd->add_option("--graph", gv.graph, "Graph JSON")->required()->check(CLI::ExistingFile);
  gv_cmd->add_option("--vocab", gv.vocabulary, "Vocabulary for node labels")->check(CLI::ExistingFile);
  gv_cmd->add_option("--top", gv.top_n, "Successors per keystep")->capture_default_str();
  gv_cmd->add_option("--out", gv.out, "DOT output")->required();
  gv_cmd->add_option("--seed", gv.seed, "Seed recorded for provenance")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth_cmd) {
      run_synth(synth);
    } else if (*mine_cmd) {
      mine.threads = threads;
      run_mine(mine);
    } else if (*decode_cmd) {
      decode.threads = threads;
      run_decode(decode);
    } else if (*eval_cmd) {
      run_eval(eval);
    } else if (*sweep_cmd) {
      sweep.threads = threads;
      run_sweep(sweep);
    } else if (*gv_cmd) {
      run_graphviz(gv);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 5;
  }
  return 0;
}
