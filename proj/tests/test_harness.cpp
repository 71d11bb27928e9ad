#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "nsmfm/harness.hpp"

using namespace nsmfm;

namespace {

McRecord rec(std::string caseId, Index p1, Index T, int rep, std::string criterion, std::string metric, double value) {
  McRecord r;
  r.caseId = std::move(caseId);
  r.p1 = p1;
  r.p2 = 20;
  r.T = T;
  r.rep = rep;
  r.criterion = std::move(criterion);
  r.metric = std::move(metric);
  r.value = value;
  return r;
}

StudyGrid tiny_grid(int reps) {
  StudyGrid g;
  g.p1 = {10};
  g.p2 = 10;
  g.T = {30};
  g.reps = reps;
  g.masterSeed = 4;
  g.threads = 1;
  return g;
}

ErConfig cfg4() {
  ErConfig c;
  c.hMax = 4;
  return c;
}

double median_of(const McResult& r, const std::string& caseId, Index T, const std::string& metric) {
  for (const AggregateRow& row : summarize(r, {"case", "T"}, {metric}))
    if (row.keys[0] == caseId && row.keys[1] == std::to_string(T)) return row.median;
  ADD_FAILURE() << "no row for " << metric;
  return 0;
}

}  // namespace

TEST(Cases, Catalogue) {
  EXPECT_EQ(rate_cases().size(), 8u);
  EXPECT_EQ(rank_cases().size(), 8u);
  EXPECT_EQ(rate_case("3.2").ranks, (Ranks{1, 1, 2, 2}));
  EXPECT_EQ(rate_case("1.2").sigma0, 2.0);
  EXPECT_EQ(rate_case("4.1").a0, 10.0);
  EXPECT_EQ(rank_case("8").ranks, (Ranks{2, 1, 1, 1}));
  EXPECT_EQ(rank_case("7").ranks, (Ranks{1, 1, 2, 1}));
  EXPECT_THROW(rank_case("9"), Error);
  EXPECT_THROW(rate_case("5.1"), Error);
}

TEST(Grids, DeskAndFull) {
  const StudyGrid d = desk_grid();
  EXPECT_EQ(d.p1, (std::vector<Index>{10, 20, 50}));
  EXPECT_EQ(d.reps, 200);
  const StudyGrid f = full_grid();
  EXPECT_EQ(f.T, (std::vector<Index>{20, 50, 100, 200}));
  EXPECT_EQ(f.reps, 1000);
}

TEST(Seeds, DistinctPerCoordinate) {
  const std::uint64_t s = replication_seed(1, "1.1", 20, 50, 0);
  EXPECT_EQ(s, replication_seed(1, "1.1", 20, 50, 0));
  EXPECT_NE(s, replication_seed(1, "1.1", 20, 50, 1));
  EXPECT_NE(s, replication_seed(1, "1.2", 20, 50, 0));
  EXPECT_NE(s, replication_seed(1, "1.1", 50, 20, 0));
  EXPECT_NE(s, replication_seed(2, "1.1", 20, 50, 0));
}

TEST(RateStudy, SingleRepDeterministic) {
  const McResult a = run_rate_study({rate_case("1.1")}, tiny_grid(1));
  const McResult b = run_rate_study({rate_case("1.1")}, tiny_grid(1));
  ASSERT_FALSE(a.records.empty());
  EXPECT_EQ(a.cells, 1u);
  ASSERT_EQ(a.records.size(), b.records.size());
  std::map<std::string, int> perMetric;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].value, b.records[i].value);
    EXPECT_EQ(a.records[i].seed, replication_seed(4, "1.1", 10, 30, 0));
    ++perMetric[a.records[i].metric];
  }
  for (const auto& [m, n] : perMetric) EXPECT_EQ(n, 1) << m;
  for (const char* m : {"D_flat_R1", "D_proj_R1", "ratio_R1", "D_dagger_C1", "ratio_dagger_R1", "D_proj_C0"})
    EXPECT_EQ(perMetric.count(m), 1u) << m;
}

TEST(RateStudy, RejectsDegenerateGrid) {
  StudyGrid g = tiny_grid(1);
  g.p1 = {1};
  try {
    run_rate_study({rate_case("1.1")}, g);
    FAIL() << "expected InvalidConfig";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
  g = tiny_grid(0);
  EXPECT_THROW(run_rate_study({rate_case("1.1")}, g), Error);
}

TEST(RateStudy, RefinementGainOnSingleDesign) {
  StudyGrid g;
  g.p1 = {20};
  g.p2 = 20;
  g.T = {200};
  g.reps = 200;
  g.masterSeed = 1;
  const McResult r = run_rate_study({rate_case("1.1")}, g);
  EXPECT_TRUE(r.failures.empty());
  for (const AggregateRow& row : summarize(r, {"case"}, {"ratio_R1", "ratio_C1"})) EXPECT_GT(row.mean, 1.2) << row.metric;
}

// Cell averages of D_flat and D_proj over all eight designs; the median of
// their ratios grows with T.
TEST(RateStudy, PooledRefinementGainGrowsWithT) {
  StudyGrid g;
  g.p1 = {10, 20};
  g.p2 = 20;
  g.T = {50, 200};
  g.reps = 50;
  g.masterSeed = 1;
  const McResult r = run_rate_study(rate_cases(), g);
  EXPECT_TRUE(r.failures.empty());
  for (const std::string side : {"R1", "C1"}) {
    std::map<std::string, std::vector<double>> ratios;  // by T
    const auto flat = summarize(r, {"case", "p1", "T"}, {"D_flat_" + side});
    const auto proj = summarize(r, {"case", "p1", "T"}, {"D_proj_" + side});
    ASSERT_EQ(flat.size(), proj.size());
    for (std::size_t i = 0; i < flat.size(); ++i) ratios[flat[i].keys[2]].push_back(flat[i].mean / proj[i].mean);
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    };
    EXPECT_GT(median(ratios["200"]), median(ratios["50"])) << side;
    EXPECT_GT(median(ratios["200"]), 1.2) << side;
  }
}

TEST(RateStudy, DaggerNoOrderOfMagnitudeGain) {
  StudyGrid g;
  g.p1 = {20};
  g.p2 = 20;
  g.T = {50, 100, 200};
  g.reps = 100;
  g.masterSeed = 3;
  const McResult r = run_rate_study({rate_case("1.1")}, g);
  for (const AggregateRow& row : summarize(r, {"T"}, {"ratio_dagger_R1"})) {
    EXPECT_GE(row.mean, 0.5) << row.keys[0];
    EXPECT_LE(row.mean, 2.0) << row.keys[0];
  }
}

// Without noise the only misses are trend ranks of zero: the mock
// eigenvalue can outrank a small trend eigenvalue when the integrated
// squared random walk is small. Whenever a trend is found, all four ranks
// are right.
TEST(RankStudy, NoiselessMissesOnlyThroughMockEigenvalue) {
  StudyGrid g = tiny_grid(40);
  g.p1 = {20};
  g.p2 = 20;
  g.T = {100};
  g.noiseStd = 0.0;
  const McResult r = run_rank_study({rank_case("1")}, g, cfg4(), {Criterion::Static, Criterion::It0,
                                                                   Criterion::It1, Criterion::It2});
  EXPECT_TRUE(r.failures.empty());
  std::map<std::pair<std::string, int>, std::map<std::string, double>> byRep;
  for (const McRecord& rec : r.records) byRep[{rec.criterion, rec.rep}][rec.metric] = rec.value;
  int correct = 0;
  for (auto& [key, m] : byRep) {
    if (m["correct_all"] == 1.0) {
      ++correct;
      continue;
    }
    EXPECT_EQ(m["hR1"], 0.0) << key.first << " rep " << key.second;
    EXPECT_EQ(m["hC1"], 0.0) << key.first << " rep " << key.second;
  }
  EXPECT_GE(correct, static_cast<int>(byRep.size()) / 2);
}

TEST(RankStudy, MetricsAndDifferences) {
  const McResult r = run_rank_study({rank_case("3")}, tiny_grid(5), cfg4(), {Criterion::Static, Criterion::It2});
  const auto rows = summarize(r, {"criterion"}, {"hR1", "correct_hR1"});
  EXPECT_EQ(rows.size(), 4u);
  const auto diffs = differences_vs_static(r);
  ASSERT_FALSE(diffs.empty());
  for (const DifferenceRow& d : diffs) EXPECT_EQ(d.criterion, "it2");
}

TEST(RankStudy, ThreadCountDoesNotChangeRecords) {
  StudyGrid g = tiny_grid(6);
  g.p1 = {10, 12};
  const McResult a = run_rank_study({rank_case("1"), rank_case("8")}, g, cfg4(), {Criterion::Static, Criterion::It2});
  g.threads = 4;
  const McResult b = run_rank_study({rank_case("1"), rank_case("8")}, g, cfg4(), {Criterion::Static, Criterion::It2});
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].caseId, b.records[i].caseId);
    EXPECT_EQ(a.records[i].rep, b.records[i].rep);
    EXPECT_EQ(a.records[i].metric, b.records[i].metric);
    EXPECT_EQ(a.records[i].value, b.records[i].value);
  }
}

TEST(Summarize, SingleRecord) {
  McResult r;
  r.records = {rec("1", 10, 50, 0, "static", "x", 3.5)};
  const auto rows = summarize(r, {"case"});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].n, 1u);
  EXPECT_EQ(rows[0].mean, 3.5);
  EXPECT_EQ(rows[0].median, 3.5);
  EXPECT_EQ(rows[0].min, 3.5);
  EXPECT_EQ(rows[0].q75, 3.5);
  EXPECT_EQ(rows[0].variance, 0.0);
}

TEST(Summarize, ConstantMetricHasZeroVariance) {
  McResult r;
  for (int i = 0; i < 7; ++i) r.records.push_back(rec("1", 10, 50, i, "static", "x", 0.25));
  EXPECT_EQ(summarize(r, {"case"})[0].variance, 0.0);
}

TEST(Summarize, HandFixture) {
  McResult r;
  r.records = {rec("1", 10, 50, 0, "static", "x", 1), rec("1", 10, 50, 1, "static", "x", 10),
               rec("1", 10, 50, 2, "static", "x", 3), rec("1", 10, 50, 3, "static", "x", 2)};
  const auto rows = summarize(r, {"case", "p1"});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].keys, (std::vector<std::string>{"1", "10"}));
  EXPECT_DOUBLE_EQ(rows[0].mean, 4.0);
  EXPECT_DOUBLE_EQ(rows[0].median, 2.5);
  EXPECT_DOUBLE_EQ(rows[0].variance, 50.0 / 3.0);
  EXPECT_DOUBLE_EQ(rows[0].q25, 1.75);
  EXPECT_DOUBLE_EQ(rows[0].q75, 4.75);
  EXPECT_EQ(rows[0].min, 1.0);
  EXPECT_EQ(rows[0].max, 10.0);
}

TEST(Summarize, NumericOrderingOfKeys) {
  McResult r;
  r.records = {rec("10", 100, 50, 0, "static", "x", 1), rec("2", 20, 50, 0, "static", "x", 1),
               rec("1.2", 20, 50, 0, "static", "x", 1)};
  const auto rows = summarize(r, {"p1", "case"});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].keys[1], "1.2");
  EXPECT_EQ(rows[1].keys[1], "2");
  EXPECT_EQ(rows[2].keys[0], "100");
}

TEST(Summarize, Errors) {
  McResult r;
  try {
    summarize(r, {"case"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
  }
  r.records = {rec("1", 10, 50, 0, "static", "x", 1)};
  try {
    summarize(r, {"case"}, {"y"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidQuery);
  }
  EXPECT_THROW(summarize(r, {"colour"}), Error);
}

TEST(Differences, AgainstStaticPerCell) {
  McResult r;
  r.records = {rec("1", 10, 50, 0, "static", "correct_all", 0), rec("1", 10, 50, 1, "static", "correct_all", 1),
               rec("1", 10, 50, 0, "it2", "correct_all", 1),    rec("1", 10, 50, 1, "it2", "correct_all", 1),
               rec("1", 20, 50, 0, "static", "correct_all", 1), rec("1", 20, 50, 0, "it2", "correct_all", 0)};
  auto d = differences_vs_static(r);
  ASSERT_EQ(d.size(), 2u);
  std::sort(d.begin(), d.end(), [](const DifferenceRow& a, const DifferenceRow& b) { return a.p1 < b.p1; });
  EXPECT_DOUBLE_EQ(d[0].difference, 0.5);
  EXPECT_DOUBLE_EQ(d[1].difference, -1.0);
}
