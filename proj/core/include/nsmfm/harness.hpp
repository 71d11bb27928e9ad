#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nsmfm/model.hpp"
#include "nsmfm/ranksel.hpp"

namespace nsmfm {

// Library version string, recorded in run manifests.
const char* library_version() noexcept;

struct RateCase {
  std::string id;
  Ranks ranks;
  double a0 = 1.0;
  double a1 = 1.0;
  double sigma0 = 1.0;
};

struct RankCase {
  std::string id;
  Ranks ranks;
};

// Loading-estimation designs, ids "1.1" .. "4.2".
const std::vector<RateCase>& rate_cases();
const RateCase& rate_case(std::string_view id);

// Rank-selection designs, ids "1" .. "8".
const std::vector<RankCase>& rank_cases();
const RankCase& rank_case(std::string_view id);

struct StudyGrid {
  std::vector<Index> p1{10, 20, 50};
  Index p2 = 20;
  std::vector<Index> T{50, 100, 200};
  int reps = 200;
  std::uint64_t masterSeed = 0;
  int threads = 0;  // 0: hardware concurrency
  double noiseStd = 1.0;

  void validate() const;
};

StudyGrid desk_grid();
// p1 in {10, 20, 50, 100}, T in {20, 50, 100, 200}, 1000 replications.
StudyGrid full_grid();

struct McRecord {
  std::string caseId;
  Index p1 = 0, p2 = 0, T = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  std::string criterion;  // "pipeline" for rate studies
  std::string metric;
  double value = 0.0;
};

struct McFailure {
  std::string caseId;
  Index p1 = 0, p2 = 0, T = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct McResult {
  std::vector<McRecord> records;
  std::vector<McFailure> failures;
  int reps = 0;
  std::size_t cells = 0;
  double wallSeconds = 0.0;
};

// seed(rep) = combine(masterSeed, caseId, p1, T, rep).
std::uint64_t replication_seed(std::uint64_t masterSeed, std::string_view caseId, Index p1, Index T, int rep);

// Distances D(estimate, truth) of the flattened/projected pairs for R1, C1
// (stage one vs refined), R0, C0 (first vs second round), their
// flat/proj ratios, the dagger distances for R1, C1 and dagger/flat ratios.
McResult run_rate_study(const std::vector<RateCase>& cases, const StudyGrid& grid);

// Per criterion: estimated ranks and 0/1 correctness of each coordinate
// and of the full quadruple.
McResult run_rank_study(const std::vector<RankCase>& cases, const StudyGrid& grid, const ErConfig& cfg,
                        const std::vector<Criterion>& criteria);

struct AggregateRow {
  std::vector<std::string> keys;  // values of the group-by fields, in order
  std::string metric;
  std::size_t n = 0;
  double mean = 0.0, median = 0.0, variance = 0.0;
  double q25 = 0.0, q75 = 0.0, min = 0.0, max = 0.0;
};

// Group-by fields: case, p1, p2, T, criterion, rep. Rows are always split by
// metric as well. An empty metric list keeps every metric. Rows are sorted
// by keys (numerically for numeric fields), then metric.
std::vector<AggregateRow> summarize(const McResult& result, const std::vector<std::string>& groupBy,
                                    const std::vector<std::string>& metrics = {});

struct DifferenceRow {
  std::string caseId;
  Index p1 = 0, p2 = 0, T = 0;
  std::string criterion;
  std::string metric;
  double difference = 0.0;  // mean(criterion) - mean(static) for the cell
};

// Cell-level differences of every non-static criterion against static.
std::vector<DifferenceRow> differences_vs_static(const McResult& result);

}  // namespace nsmfm
