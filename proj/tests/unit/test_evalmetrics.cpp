#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "ocsi/evalmetrics.hpp"

using namespace ocsi;
using ocsi::testkit::make_distractor;
using ocsi::testkit::make_item;

namespace {

// Precision at each relevant rank, averaged; computed with fractions.
double ap_oracle(const std::vector<std::uint8_t>& rel) {
  double total = 0.0;
  int r = 0;
  for (std::size_t k = 0; k < rel.size(); ++k) {
    if (!rel[k]) continue;
    int hits = 0;
    for (std::size_t j = 0; j <= k; ++j) hits += rel[j];
    total += static_cast<double>(hits) / static_cast<double>(k + 1);
    ++r;
  }
  return total / r;
}

}  // namespace

TEST(AveragePrecision, Examples) {
  EXPECT_NEAR(average_precision(std::vector<std::uint8_t>{1, 0, 1}), 5.0 / 6.0, 1e-15);
  EXPECT_DOUBLE_EQ(average_precision(std::vector<std::uint8_t>{1, 1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(average_precision(std::vector<std::uint8_t>{1}), 1.0);
  EXPECT_DOUBLE_EQ(average_precision(std::vector<std::uint8_t>{0, 0, 0, 1}), 0.25);
  EXPECT_THROW(average_precision(std::vector<std::uint8_t>{0, 0}), InvalidInput);
}

TEST(FirstRelevantRank, Examples) {
  EXPECT_EQ(first_relevant_rank(std::vector<std::uint8_t>{1, 0}), 1u);
  EXPECT_EQ(first_relevant_rank(std::vector<std::uint8_t>{0, 0, 1, 0, 1}), 3u);
  EXPECT_THROW(first_relevant_rank(std::vector<std::uint8_t>{0}), InvalidInput);
}

TEST(AveragePrecision, RandomRankingsMatchOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::uint8_t> rel(1 + rng.below(20));
    for (auto& r : rel) r = rng.below(3) == 0;
    rel[rng.below(rel.size())] = 1;
    EXPECT_NEAR(average_precision(rel), ap_oracle(rel), 1e-12);
    const auto ap = average_precision(rel);
    EXPECT_GT(ap, 0.0);
    EXPECT_LE(ap, 1.0);
  }
}

TEST(Evaluate, TieBreakByCandidateId) {
  const Catalog cat({make_item("q", "W", "s", "v"), make_distractor("a", "x"), make_item("b", "W", "s", "v")});
  const SimilarityMatrix sim({ItemId("q")}, {ItemId("a"), ItemId("b")}, {0.5f, 0.5f}, SimilarityKind::cosine);
  const auto report = evaluate(sim, cat);
  ASSERT_EQ(report.queries.size(), 1u);
  EXPECT_EQ(report.queries[0].first_relevant_rank, 2u);
  EXPECT_DOUBLE_EQ(report.queries[0].average_precision, 0.5);
}

TEST(Evaluate, PerfectRetrieval) {
  std::vector<Item> items;
  std::vector<ItemId> ids;
  for (int w = 0; w < 4; ++w)
    for (int k = 0; k < 2; ++k) {
      items.push_back(make_item("i" + std::to_string(w) + std::to_string(k), "W" + std::to_string(w), "s", "v"));
      ids.push_back(items.back().id);
    }
  std::vector<float> scores(64, 0.0f);
  for (int r = 0; r < 8; ++r) scores[r * 8 + (r ^ 1)] = 1.0f;
  const auto report = evaluate(SimilarityMatrix(ids, ids, scores, SimilarityKind::cosine), Catalog(items));
  EXPECT_DOUBLE_EQ(report.map, 1.0);
  EXPECT_DOUBLE_EQ(report.mr1, 1.0);
  EXPECT_EQ(report.evaluated, 8u);
  EXPECT_EQ(report.skipped, 0u);
}

TEST(Evaluate, MeanRankAndSkips) {
  // q1 finds its partner at rank 3, q2 at rank 5; lone has no other item of its work.
  const Catalog cat({make_item("q1", "A", "s", "v"), make_item("p1", "A", "s", "v"), make_item("q2", "B", "s", "v"),
                     make_item("p2", "B", "s", "v"), make_item("lone", "C", "s", "v"), make_distractor("x1", "v"),
                     make_distractor("x2", "v"), make_distractor("x3", "v")});
  const std::vector<ItemId> cands{ItemId("p1"), ItemId("p2"), ItemId("x1"), ItemId("x2"), ItemId("x3")};
  const std::vector<float> scores{0.5f, 0.9f, 0.8f, 0.1f, 0.0f,   // q1: p2, x1, p1
                                  0.9f, 0.1f, 0.8f, 0.7f, 0.6f,   // q2: p1, x1, x2, x3, p2
                                  0.9f, 0.9f, 0.9f, 0.9f, 0.9f};  // lone
  const auto report =
      evaluate(SimilarityMatrix({ItemId("q1"), ItemId("q2"), ItemId("lone")}, cands, scores, SimilarityKind::cosine), cat);
  EXPECT_EQ(report.evaluated, 2u);
  EXPECT_EQ(report.skipped, 1u);
  EXPECT_DOUBLE_EQ(report.mr1, 4.0);
  EXPECT_NEAR(report.map, (1.0 / 3.0 + 1.0 / 5.0) / 2.0, 1e-15);
}

TEST(Evaluate, DistractorRowsAreNotQueries) {
  const Catalog cat({make_item("q", "W", "s", "v"), make_item("p", "W", "s", "v"), make_distractor("d", "v")});
  const SimilarityMatrix sim({ItemId("q"), ItemId("d")}, {ItemId("p"), ItemId("d")}, {0.9f, 0.1f, 0.5f, 0.5f},
                             SimilarityKind::cosine);
  const auto report = evaluate(sim, cat);
  EXPECT_EQ(report.evaluated, 1u);
  EXPECT_EQ(report.skipped, 0u);
}

TEST(Evaluate, UnknownIds) {
  const Catalog cat({make_item("q", "W", "s", "v")});
  EXPECT_THROW(evaluate(SimilarityMatrix({ItemId("q")}, {ItemId("zz")}, {0.f}, SimilarityKind::cosine), cat),
               InvalidInput);
}

TEST(Report, RoundTripAndVersion) {
  EvalReport r;
  r.queries = {{ItemId("a"), 2, 0.8333333333333334, 1}, {ItemId("b"), 1, 0.1, 10}};
  r.evaluated = 2;
  r.skipped = 3;
  r.map = (r.queries[0].average_precision + r.queries[1].average_precision) / 2;
  r.mr1 = 5.5;
  std::ostringstream a;
  write_report(r, a);
  std::istringstream in(a.str());
  const auto back = read_report(in);
  std::ostringstream b;
  write_report(back, b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(back.queries[1].query_id.str(), "b");

  std::string v2 = a.str();
  v2.replace(v2.find("EVAL/1"), 6, "EVAL/2");
  std::istringstream bad(v2);
  try {
    read_report(bad);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), FormatErrc::version_mismatch);
  }
}

TEST(Report, TableMentionsEveryQuery) {
  EvalReport r;
  r.queries = {{ItemId("query-one"), 2, 0.5, 2}};
  r.evaluated = 1;
  r.map = 0.5;
  r.mr1 = 2;
  const auto table = format_table(r);
  EXPECT_NE(table.find("query-one"), std::string::npos);
  EXPECT_NE(table.find("MAP 0.5000"), std::string::npos);
}
