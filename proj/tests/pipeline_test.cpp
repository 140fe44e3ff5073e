#include <gtest/gtest.h>

#include "oracles.hpp"
#include "run_pipeline.hpp"

using namespace taskgraph;
using testing_support::run_pipeline;
using testing_support::slurp;

TEST(Pipeline, EndToEndThroughFiles) {
  const auto dir = oracle::scratch_dir("pipeline_e2e");
  const auto f = run_pipeline(dir, 7);
  for (const auto& p : testing_support::all_files(f)) EXPECT_TRUE(std::filesystem::exists(p)) << p;
  const auto report = load_report(f.report);
  ASSERT_TRUE(report.mean_accuracy);
  EXPECT_GE(*report.mean_accuracy, 0.0);
  EXPECT_LE(*report.mean_accuracy, 1.0);
  const auto vocab = load_vocabulary(f.synth.vocabulary);
  EXPECT_EQ(load_labels(f.corrected, vocab, false).size(), 30u);
}

TEST(Pipeline, EveryOutputCarriesProvenance) {
  const auto dir = oracle::scratch_dir("pipeline_prov");
  const auto f = run_pipeline(dir, 3);
  for (const auto& p : testing_support::all_files(f)) {
    const auto text = slurp(p);
    EXPECT_NE(text.find("config_hash"), std::string::npos) << p;
    EXPECT_NE(text.find("seed"), std::string::npos) << p;
  }
}

TEST(Pipeline, RerunsAreByteIdentical) {
  const auto a = run_pipeline(oracle::scratch_dir("pipeline_det_a"), 11, DecoderKind::pathsearch, 1);
  const auto b = run_pipeline(oracle::scratch_dir("pipeline_det_b"), 11, DecoderKind::pathsearch, 4);
  const auto fa = testing_support::all_files(a), fb = testing_support::all_files(b);
  for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_EQ(slurp(fa[i]), slurp(fb[i])) << fa[i].filename();
}

TEST(Pipeline, DecodersProduceDistinctValidLabels) {
  const auto ps = run_pipeline(oracle::scratch_dir("pipeline_ps"), 5, DecoderKind::pathsearch);
  const auto brf = run_pipeline(oracle::scratch_dir("pipeline_brf"), 5, DecoderKind::brf);
  const auto vocab = load_vocabulary(ps.synth.vocabulary);
  const auto a = load_labels(ps.corrected, vocab, false), b = load_labels(brf.corrected, vocab, false);
  EXPECT_EQ(a.size(), b.size());
  EXPECT_NE(a, b);
  EXPECT_NE(slurp(ps.corrected), slurp(brf.corrected));
}

TEST(Pipeline, InputsAreNotModified) {
  const auto dir = oracle::scratch_dir("pipeline_ro");
  const auto f = run_pipeline(dir, 2);
  const auto before = slurp(f.synth.text_scores);
  PipelineConfig pipe;
  run_decode({f.synth.vocabulary, f.graph, {f.synth.text_scores}, pipe, dir / "again.jsonl", std::nullopt, 1, 2});
  EXPECT_EQ(slurp(f.synth.text_scores), before);
}

TEST(Pipeline, ErrorsMapToDistinctExitCodes) {
  const auto dir = oracle::scratch_dir("pipeline_err");
  const auto f = run_pipeline(dir, 4);
  auto code_of = [](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return exit_code(e.kind());
    }
    return 0;
  };
  {
    std::ofstream bad(dir / "bad.jsonl");
    bad << "{broken\n";
  }
  EXPECT_EQ(code_of([&] { run_eval({f.synth.vocabulary, dir / "bad.jsonl", f.synth.ground_truth, dir / "r.json", false, 0}); }), 3);
  {
    std::ofstream small(dir / "small_vocab.txt");
    small << "only\ntwo\n";
  }
  PipelineConfig pipe;
  EXPECT_EQ(code_of([&] {
              run_decode({dir / "small_vocab.txt", f.graph, {f.synth.text_scores}, pipe, dir / "x.jsonl", std::nullopt, 1, 0});
            }),
            4);
  EXPECT_EQ(code_of([&] { run_mine({dir / "missing.txt", {f.synth.text_scores}, pipe, dir / "g.json", std::nullopt, 4, 1, 0}); }), 3);
  SweepOptions sweep;
  sweep.synth.branching = 0;
  sweep.out = dir / "s.csv";
  EXPECT_EQ(code_of([&] { run_sweep(sweep); }), 2);
  EXPECT_EQ(exit_code(ErrorKind::generation), 5);
}
