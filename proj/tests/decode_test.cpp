#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "oracles.hpp"
#include "taskgraph/decode.hpp"
#include "taskgraph/synth.hpp"

using namespace taskgraph;

namespace {

TaskGraph graph_from_counts(const std::vector<std::vector<double>>& rows) {
  TransitionCounts c(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j)
      if (rows[i][j] > 0) c.add(static_cast<KeystepId>(i), static_cast<KeystepId>(j), rows[i][j]);
  return TaskGraph(std::move(c));
}

TaskGraph chain(std::size_t K) {
  TransitionCounts c(K);
  for (std::size_t i = 0; i + 1 < K; ++i) c.add(static_cast<KeystepId>(i), static_cast<KeystepId>(i + 1));
  return TaskGraph(std::move(c));
}

ScoreMatrix matrix(std::vector<std::vector<double>> rows) {
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return ScoreMatrix("v", Modality::text, rows.size(), rows.front().size(), flat);
}

ScoreMatrix random_scores(std::mt19937_64& rng, std::size_t T, std::size_t K) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(T * K);
  for (double& x : v) x = u(rng);
  return ScoreMatrix("r", Modality::text, T, K, v);
}

}  // namespace

TEST(PathSearch, PrefersLikelyDetour) {
  // w(0,1)=0.1, w(0,2)=0.6, w(2,1)=0.8
  const auto g = graph_from_counts({{3, 1, 6}, {0, 0, 0}, {0, 8, 2}});
  const auto r = path_search(to_cost(g), 0, 1);
  ASSERT_TRUE(r.found);
  EXPECT_EQ(r.interior, std::vector<KeystepId>{2});
  EXPECT_NEAR(r.cost, -std::log(0.6 * 0.8), 1e-12);
}

TEST(PathSearch, SameEndpointsHaveEmptyInterior) {
  const auto r = path_search(to_cost(chain(3)), 1, 1);
  EXPECT_TRUE(r.found);
  EXPECT_TRUE(r.interior.empty());
  EXPECT_EQ(r.cost, 0.0);
}

TEST(PathSearch, UnreachableTargetIsNotAnError) {
  const auto r = path_search(to_cost(chain(3)), 2, 0);
  EXPECT_FALSE(r.found);
  EXPECT_THROW(path_search(to_cost(chain(3)), 0, 3), Error);
}

TEST(PathSearch, EqualCostsPreferFewerHopsThenSmallerIds) {
  // 0->3 direct at 0.25 vs 0->1->3 at 0.5*0.5: same probability, fewer hops wins
  const auto g = graph_from_counts({{0, 2, 0, 1, 1}, {0, 0, 0, 1, 1}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}});
  EXPECT_TRUE(path_search(to_cost(g), 0, 3).interior.empty());
  // two 2-hop routes with equal probability: 0->1->3 and 0->2->3
  const auto h = graph_from_counts({{0, 1, 1, 0}, {0, 0, 0, 1}, {0, 0, 0, 1}, {0, 0, 0, 0}});
  EXPECT_EQ(path_search(to_cost(h), 0, 3).interior, std::vector<KeystepId>{1});
}

TEST(PathSearch, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(2, 7), count(0, 4);
  std::bernoulli_distribution sparse(0.5);
  int found = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const int K = size(rng);
    TransitionCounts c(static_cast<std::size_t>(K));
    for (KeystepId i = 0; i < K; ++i)
      for (KeystepId j = 0; j < K; ++j)
        if (!sparse(rng)) c.add(i, j, count(rng));
    const TaskGraph g(std::move(c));
    std::vector<std::vector<double>> w(static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(K)));
    for (KeystepId i = 0; i < K; ++i)
      for (KeystepId j = 0; j < K; ++j) w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = g.weight(i, j);
    std::uniform_int_distribution<int> node(0, K - 1);
    const int s = node(rng);
    int t = node(rng);
    if (t == s) t = (s + 1) % K;
    const auto expected = oracle::best_simple_path(w, s, t);
    const auto r = path_search(to_cost(g), s, t);
    ASSERT_EQ(r.found, std::isfinite(expected.cost)) << "trial " << trial;
    if (!r.found) continue;
    ++found;
    EXPECT_NEAR(r.cost, expected.cost, 1e-9) << "trial " << trial;
    std::vector<int> nodes{s};
    nodes.insert(nodes.end(), r.interior.begin(), r.interior.end());
    nodes.push_back(t);
    EXPECT_EQ(nodes, expected.nodes) << "trial " << trial;
  }
  EXPECT_GE(found, 100);
}

TEST(PathSearch, RelaxationsAreQuadraticAtMost) {
  const std::size_t K = 60;
  TransitionCounts c(K);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) c.add(static_cast<KeystepId>(i), static_cast<KeystepId>(j), 1.0 + double((i * 7 + j * 13) % 5));
  const auto r = path_search(to_cost(TaskGraph(std::move(c))), 0, static_cast<KeystepId>(K - 1));
  EXPECT_LE(r.relaxations, K * K);
}

TEST(UniformFill, WorkedExample) {
  const std::vector<KeystepId> interior{11, 12, 13};
  const auto fill = uniform_fill(0, 9, interior, 1, 10);
  EXPECT_EQ(fill, (std::vector<KeystepId>{0, 0, 11, 11, 12, 12, 13, 13, 9, 9}));
}

TEST(UniformFill, TwoBlocksAndFloorBoundaries) {
  EXPECT_EQ(uniform_fill(4, 5, std::vector<KeystepId>{}, 0, 3), (std::vector<KeystepId>{4, 4, 5, 5}));
  const std::vector<KeystepId> x{7};
  EXPECT_EQ(uniform_fill(1, 2, x, 1, 10), (std::vector<KeystepId>{1, 1, 1, 7, 7, 7, 2, 2, 2, 2}));
}

TEST(UniformFill, LongPathsLoseTailInteriorNodes) {
  const std::vector<KeystepId> interior{10, 11, 12, 13};
  EXPECT_EQ(uniform_fill(0, 1, interior, 5, 8), (std::vector<KeystepId>{0, 10, 11, 1}));
  EXPECT_EQ(uniform_fill(0, 1, interior, 5, 6), (std::vector<KeystepId>{0, 1}));
  EXPECT_THROW(uniform_fill(0, 1, interior, 5, 5), Error);
}

TEST(UniformFill, ConservesPathOrderAndAnchors) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> n_interior(0, 8), span(1, 30);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<KeystepId> interior(static_cast<std::size_t>(n_interior(rng)));
    std::iota(interior.begin(), interior.end(), 100);
    const std::size_t t_minus = 3, t_plus = t_minus + static_cast<std::size_t>(span(rng));
    const auto fill = uniform_fill(1, 2, interior, t_minus, t_plus);
    ASSERT_EQ(fill.size(), t_plus - t_minus + 1);
    EXPECT_EQ(fill.front(), 1);
    EXPECT_EQ(fill.back(), 2);
    std::vector<KeystepId> path{1};
    path.insert(path.end(), interior.begin(), interior.end());
    path.push_back(2);
    // labels appear in path order, each as one contiguous block
    std::size_t pos = 0;
    for (std::size_t i = 0; i < fill.size(); ++i) {
      while (pos < path.size() && path[pos] != fill[i]) ++pos;
      ASSERT_LT(pos, path.size()) << "trial " << trial;
    }
  }
}

TEST(CorrectSequence, ChainFillsBetweenAnchors) {
  const LabelSequence prelim{"v", {0, 2, 2, 0, 0, 2}};
  const AnchorMask anchors{true, false, false, false, false, true};
  const auto out = correct_sequence(prelim, anchors, chain(3));
  EXPECT_EQ(out.labels, (std::vector<KeystepId>{0, 0, 1, 1, 2, 2}));
}

TEST(CorrectSequence, FullOrEmptyAnchorsAreIdentity) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> id(0, 4);
  const auto g = gen_graph(5, 2, 3);
  for (int trial = 0; trial < 20; ++trial) {
    LabelSequence prelim{"v", {}};
    for (int t = 0; t < 25; ++t) prelim.labels.push_back(id(rng));
    EXPECT_EQ(correct_sequence(prelim, AnchorMask(25, true), g), prelim);
    EXPECT_EQ(correct_sequence(prelim, AnchorMask(25, false), g), prelim);
  }
}

TEST(CorrectSequence, AnchorsAndBoundaryRunsAreKept) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> id(0, 5);
  std::bernoulli_distribution coin(0.3);
  const auto g = gen_graph(6, 2, 8);
  for (int trial = 0; trial < 100; ++trial) {
    LabelSequence prelim{"v", {}};
    AnchorMask anchors;
    for (int t = 0; t < 40; ++t) {
      prelim.labels.push_back(id(rng));
      anchors.push_back(coin(rng));
    }
    const auto out = correct_sequence(prelim, anchors, g);
    const auto first = std::find(anchors.begin(), anchors.end(), true) - anchors.begin();
    const auto last = anchors.rend() - std::find(anchors.rbegin(), anchors.rend(), true) - 1;
    for (std::ptrdiff_t t = 0; t < 40; ++t) {
      const auto i = static_cast<std::size_t>(t);
      if (anchors[i] || t < first || t > last) {
        EXPECT_EQ(out.labels[i], prelim.labels[i]);
      }
    }
  }
}

TEST(CorrectSequence, DisconnectedAnchorsKeepPreliminaryRun) {
  const LabelSequence prelim{"v", {2, 1, 1, 0}};
  const AnchorMask anchors{true, false, false, true};
  EXPECT_EQ(correct_sequence(prelim, anchors, chain(3)), prelim);
  EXPECT_THROW(correct_sequence(prelim, AnchorMask(3, true), chain(3)), Error);
}

TEST(Brf, FirstFrameIsPreliminaryArgmax) {
  std::mt19937_64 rng(1);
  const auto g = gen_graph(6, 2, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_scores(rng, 10, 6);
    EXPECT_EQ(brf_decode(s, g).labels[0], argmax(s.row(0)));
  }
}

TEST(Brf, UniformTransitionsReduceToArgmax) {
  std::mt19937_64 rng(2);
  TransitionCounts c(5);
  for (KeystepId i = 0; i < 5; ++i)
    for (KeystepId j = 0; j < 5; ++j) c.add(i, j);
  const TaskGraph uniform(std::move(c));
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_scores(rng, 30, 5);
    EXPECT_EQ(brf_decode(s, uniform, {0.3, true}).labels, preliminary_assign(s).labels.labels);
  }
}

TEST(Brf, AlternatingTwoStateExample) {
  const auto g = graph_from_counts({{0, 1}, {1, 0}});
  const auto s = matrix({{0.9, 0.1}, {0.45, 0.55}, {0.9, 0.1}});
  EXPECT_EQ(brf_decode(s, g, {0.0, true}).labels, (std::vector<KeystepId>{0, 1, 0}));
  EXPECT_EQ(brf_decode(s, g, {0.0, false}).labels, (std::vector<KeystepId>{0, 1, 0}));
}

TEST(Brf, IsCausal) {
  std::mt19937_64 rng(3);
  const auto g = gen_graph(6, 3, 4, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_scores(rng, 25, 6);
    const auto full = brf_decode(s, g);
    for (std::size_t t = 1; t < 25; ++t) {
      const std::vector<double> prefix(s.values().begin(), s.values().begin() + static_cast<std::ptrdiff_t>(t * 6));
      const ScoreMatrix head("r", Modality::text, t, 6, prefix);
      const auto part = brf_decode(head, g);
      EXPECT_TRUE(std::equal(part.labels.begin(), part.labels.end(), full.labels.begin()));
    }
  }
}

TEST(Brf, RejectsBadInputs) {
  const auto s = matrix({{0.1, 0.2, 0.3}});
  EXPECT_THROW(brf_decode(s, chain(2)), Error);
  EXPECT_THROW(brf_decode(s, chain(3), {-1.0, true}), Error);
}

TEST(PredictabilitySplit, SplitsAtTheMedian) {
  const std::vector<double> h{3, 0, 2, 1};
  const auto [low, high] = split_by_entropy(h);
  EXPECT_EQ(low, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(high, (std::vector<std::size_t>{0, 2}));
  const std::vector<double> flat(7, 0.5);
  const auto [a, b] = split_by_entropy(flat);
  EXPECT_LE(a.size() > b.size() ? a.size() - b.size() : b.size() - a.size(), 1u);
}

TEST(PredictabilitySplit, HalvesAreBalancedOnRandomCorpora) {
  const SynthConfig cfg{.num_keysteps = 8, .num_videos = 31, .min_length = 10, .max_length = 20,
                        .branching = 3, .self_loop = 0.3, .scores = {}, .seed = 5};
  const auto corpus = generate_corpus(cfg);
  std::vector<DecodedVideo> decoded;
  for (std::size_t v = 0; v < corpus.ground_truth.size(); ++v) {
    const auto a = anchored_assignment(corpus.text_scores[v], {});
    LabelSequence prelim{corpus.ground_truth[v].video_id, a.labels};
    decoded.push_back({corpus.ground_truth[v], prelim, correct_sequence(prelim, a.anchors, corpus.planted), a.anchors});
  }
  const auto split = predictability_split(corpus.planted, decoded);
  EXPECT_EQ(split.high_predictability.size() + split.low_predictability.size(), 31u);
  EXPECT_EQ(split.high_predictability.size(), 16u);
  for (std::size_t i : split.high_predictability) EXPECT_LE(split.entropy[i], split.threshold);
  for (std::size_t i : split.low_predictability) EXPECT_GE(split.entropy[i], split.threshold);
}
