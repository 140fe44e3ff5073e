#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "taskgraph/ingest.hpp"

using namespace taskgraph;

namespace {

Vocabulary vocab_of(std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < k; ++i) names.push_back("step " + std::to_string(i));
  return Vocabulary(names);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::usage;
}

}  // namespace

TEST(Vocabulary, ParsesOneNamePerLine) {
  std::istringstream in("whisk eggs\nsift flour\n");
  const auto v = read_vocabulary(in);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.name(0), "whisk eggs");
  EXPECT_EQ(v.name(1), "sift flour");
  EXPECT_EQ(v.find("sift flour"), 1);
  EXPECT_FALSE(v.find("fold batter"));
}

TEST(Vocabulary, DuplicateNameIsNamed) {
  std::istringstream in("whisk eggs\nsift flour\nwhisk eggs\n");
  try {
    read_vocabulary(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::format);
    EXPECT_NE(std::string(e.what()).find("whisk eggs"), std::string::npos);
  }
}

TEST(Vocabulary, EmptyFileIsFormatError) {
  std::istringstream empty("");
  EXPECT_EQ(kind_of([&] { read_vocabulary(empty); }), ErrorKind::format);
  std::istringstream only_comments("# nothing here\n");
  EXPECT_EQ(kind_of([&] { read_vocabulary(only_comments); }), ErrorKind::format);
}

TEST(Vocabulary, BlankLineInsideIsRejectedButCrlfAndTrailingNewlinesAreFine) {
  std::istringstream gap("a\n\nb\n");
  EXPECT_EQ(kind_of([&] { read_vocabulary(gap); }), ErrorKind::format);
  std::istringstream crlf("a\r\nb\r\n\n");
  const auto v = read_vocabulary(crlf);
  EXPECT_EQ(v.names(), (std::vector<std::string>{"a", "b"}));
}

TEST(Vocabulary, RoundTripOfRandomNames) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 24), ch(0, 61);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::vector<std::string> names;
  while (names.size() < 100) {
    std::string s;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) s.push_back(alphabet[static_cast<std::size_t>(ch(rng))]);
    if (std::find(names.begin(), names.end(), s) != names.end()) continue;
    names.push_back(s);
  }
  const Vocabulary v(names);
  const auto dir = oracle::scratch_dir("vocab_roundtrip");
  save_vocabulary(dir / "v.txt", v, Provenance{"abc", 3});
  EXPECT_EQ(load_vocabulary(dir / "v.txt").names(), names);
}

TEST(Scores, LoadsZeros) {
  const auto vocab = vocab_of(2);
  std::istringstream in("v1,text,3,2\n0,0\n0,0\n0,0\n");
  const auto blocks = read_score_blocks(in, vocab);
  ASSERT_EQ(blocks.size(), 1u);
  const auto& m = blocks[0];
  EXPECT_EQ(m.video_id(), "v1");
  EXPECT_EQ(m.modality(), Modality::text);
  EXPECT_EQ(m.rows(), 3u);
  for (double x : m.values()) EXPECT_EQ(x, 0.0);
}

TEST(Scores, ColumnMismatchIsDimensionError) {
  const auto vocab = vocab_of(2);
  std::istringstream header("v1,text,3,5\n0,0,0,0,0\n0,0,0,0,0\n0,0,0,0,0\n");
  EXPECT_EQ(kind_of([&] { read_score_blocks(header, vocab); }), ErrorKind::dimension);
  std::istringstream row("v1,video,2,2\n0,0\n0,0,0\n");
  EXPECT_EQ(kind_of([&] { read_score_blocks(row, vocab); }), ErrorKind::dimension);
  std::istringstream short_block("v1,video,3,2\n0,0\n");
  EXPECT_EQ(kind_of([&] { read_score_blocks(short_block, vocab); }), ErrorKind::dimension);
}

TEST(Scores, NonFiniteValueNamesTheRow) {
  const auto vocab = vocab_of(2);
  for (const char* bad : {"nan", "inf", "-inf"}) {
    std::istringstream in(std::string("v1,text,3,2\n0,0\n0.5,") + bad + "\n0,0\n");
    try {
      read_score_blocks(in, vocab);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::value);
      EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
    }
  }
}

TEST(Scores, MalformedHeaderAndDecimalsAreFormatErrors) {
  const auto vocab = vocab_of(2);
  std::istringstream header("v1,audio,1,2\n0,0\n");
  EXPECT_EQ(kind_of([&] { read_score_blocks(header, vocab); }), ErrorKind::format);
  std::istringstream cell("v1,text,1,2\n0,zero\n");
  EXPECT_EQ(kind_of([&] { read_score_blocks(cell, vocab); }), ErrorKind::format);
}

TEST(Scores, OutOfRangeValuesOnlyWarn) {
  const auto vocab = vocab_of(2);
  std::istringstream in("v1,text,1,2\n3.5,-2\n");
  const auto blocks = read_score_blocks(in, vocab);
  EXPECT_EQ(blocks[0](0, 0), 3.5);
}

TEST(Scores, MultipleBlocksAndComments) {
  const auto vocab = vocab_of(2);
  std::istringstream in("# made by hand\nv1,text,1,2\n0.1,0.2\nv1,video,2,2\n0.3,0.4\n-0.5,0.6\n");
  const auto blocks = read_score_blocks(in, vocab);
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_EQ(blocks[1].modality(), Modality::video);
  EXPECT_DOUBLE_EQ(blocks[1](1, 0), -0.5);
}

TEST(Scores, RoundTripWithinFilePrecision) {
  const auto vocab = vocab_of(20);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> values(50 * 20);
  for (double& x : values) x = u(rng);
  const ScoreMatrix m("clip-7", Modality::video, 50, 20, values);
  const auto dir = oracle::scratch_dir("scores_roundtrip");
  save_scores(dir / "s.csv", std::vector<ScoreMatrix>{m}, Provenance{"ff", 1});
  const auto back = load_scores(dir / "s.csv", vocab);
  EXPECT_EQ(back.video_id(), "clip-7");
  EXPECT_EQ(back.modality(), Modality::video);
  ASSERT_EQ(back.values().size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) EXPECT_NEAR(back.values()[i], values[i], 1e-6);
}

TEST(Scores, MissingFileIsFormatError) {
  const auto vocab = vocab_of(2);
  EXPECT_EQ(kind_of([&] { load_scores("/nonexistent/scores.csv", vocab); }), ErrorKind::format);
}

TEST(Labels, BackgroundIsAccepted) {
  const auto vocab = vocab_of(2);
  std::istringstream in(R"({"video_id": "v1", "labels": [0, 1, -1]})" "\n");
  const auto seqs = read_labels(in, vocab);
  ASSERT_EQ(seqs.size(), 1u);
  EXPECT_EQ(seqs[0].labels, (std::vector<KeystepId>{0, 1, kBackground}));
}

TEST(Labels, OutOfVocabularyIdIsRangeError) {
  const auto vocab = vocab_of(2);
  std::istringstream in(R"({"video_id": "v1", "labels": [5]})" "\n");
  EXPECT_EQ(kind_of([&] { read_labels(in, vocab); }), ErrorKind::range);
  std::istringstream bg(R"({"video_id": "v1", "labels": [-1]})" "\n");
  EXPECT_EQ(kind_of([&] { read_labels(bg, vocab, false); }), ErrorKind::range);
}

TEST(Labels, SchemaViolationsAreFormatErrors) {
  const auto vocab = vocab_of(2);
  for (const char* line : {"{not json", R"({"labels": [0]})", R"({"video_id": "v", "labels": [0.5]})",
                           R"([1, 2])"}) {
    std::istringstream in(std::string(line) + "\n");
    EXPECT_EQ(kind_of([&] { read_labels(in, vocab); }), ErrorKind::format) << line;
  }
}

TEST(Labels, RoundTripOfRandomSequences) {
  const auto vocab = vocab_of(7);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> id(-1, 6), len(0, 40);
  std::vector<LabelSequence> seqs;
  for (int v = 0; v < 10; ++v) {
    LabelSequence s{"video_" + std::to_string(v), {}};
    const int n = len(rng);
    for (int t = 0; t < n; ++t) s.labels.push_back(id(rng));
    seqs.push_back(s);
  }
  const auto dir = oracle::scratch_dir("labels_roundtrip");
  save_labels(dir / "l.jsonl", seqs, Provenance{"0123", 9});
  EXPECT_EQ(load_labels(dir / "l.jsonl", vocab), seqs);
}
