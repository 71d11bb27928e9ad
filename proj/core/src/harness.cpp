#include "nsmfm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>
#include <tuple>
#include <utility>

#include "nsmfm/estimators.hpp"
#include "nsmfm/rng.hpp"

namespace nsmfm {

namespace {

struct Task {
  std::string caseId;
  std::size_t caseIndex = 0;
  Index p1 = 0, p2 = 0, T = 0;
  int rep = 0;
  std::uint64_t seed = 0;
};

struct Outcome {
  std::vector<McRecord> records;
  bool failed = false;
  std::string message;
};

template <class Fn>
void parallel_for(std::size_t n, int threads, const Fn& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

template <class Case>
std::vector<Task> make_tasks(const std::vector<Case>& cases, const StudyGrid& grid) {
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const Ranks& h = cases[c].ranks;
    for (Index p1 : grid.p1) {
      if (p1 <= std::max(h.hR1, h.hR0) || grid.p2 <= std::max(h.hC1, h.hC0)) {
        fail(ErrorCode::InvalidConfig, "case " + cases[c].id + ": dimensions p1=" + std::to_string(p1) +
                                           " p2=" + std::to_string(grid.p2) + " must exceed the ranks " + h.to_string());
      }
      for (Index T : grid.T) {
        for (int rep = 0; rep < grid.reps; ++rep) {
          tasks.push_back(Task{cases[c].id, c, p1, grid.p2, T, rep,
                               replication_seed(grid.masterSeed, cases[c].id, p1, T, rep)});
        }
      }
    }
  }
  return tasks;
}

McResult collect(const std::vector<Task>& tasks, std::vector<Outcome>& outcomes, const StudyGrid& grid,
                 std::size_t cells, double seconds) {
  McResult result;
  result.reps = grid.reps;
  result.cells = cells;
  result.wallSeconds = seconds;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    Outcome& o = outcomes[i];
    if (o.failed) {
      const Task& t = tasks[i];
      result.failures.push_back(McFailure{t.caseId, t.p1, t.p2, t.T, t.rep, t.seed, o.message});
      continue;
    }
    for (McRecord& r : o.records) result.records.push_back(std::move(r));
  }
  return result;
}

template <class Case, class Body>
McResult run_study(const std::vector<Case>& cases, const StudyGrid& grid, const Body& body) {
  grid.validate();
  if (cases.empty()) fail(ErrorCode::InvalidConfig, "study needs at least one case");
  const std::vector<Task> tasks = make_tasks(cases, grid);
  std::vector<Outcome> outcomes(tasks.size());
  const auto start = std::chrono::steady_clock::now();
  parallel_for(tasks.size(), grid.threads, [&](std::size_t i) {
    const Task& t = tasks[i];
    Outcome& o = outcomes[i];
    auto add = [&](const std::string& criterion, const std::string& metric, double value) {
      o.records.push_back(McRecord{t.caseId, t.p1, t.p2, t.T, t.rep, t.seed, criterion, metric, value});
    };
    try {
      body(cases[t.caseIndex], t, add);
    } catch (const Error& e) {
      o.records.clear();
      o.failed = true;
      o.message = e.what();
    }
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return collect(tasks, outcomes, grid, cases.size() * grid.p1.size() * grid.T.size(), seconds);
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

AggregateRow aggregate(std::vector<std::string> keys, std::string metric, std::vector<double> values) {
  AggregateRow row;
  row.keys = std::move(keys);
  row.metric = std::move(metric);
  std::sort(values.begin(), values.end());
  row.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  row.mean = sum / static_cast<double>(row.n);
  double ss = 0.0;
  for (double v : values) ss += (v - row.mean) * (v - row.mean);
  row.variance = row.n > 1 ? ss / static_cast<double>(row.n - 1) : 0.0;
  row.median = quantile(values, 0.5);
  row.q25 = quantile(values, 0.25);
  row.q75 = quantile(values, 0.75);
  row.min = values.front();
  row.max = values.back();
  return row;
}

// Sort key for a group-by field: numeric fields compare as numbers.
struct FieldValue {
  bool numeric = false;
  double number = 0.0;
  std::string text;

  friend bool operator<(const FieldValue& a, const FieldValue& b) {
    if (a.numeric != b.numeric) return a.numeric;
    if (a.numeric && a.number != b.number) return a.number < b.number;
    return a.text < b.text;
  }
};

FieldValue field_of(const McRecord& r, const std::string& field) {
  auto num = [](double v, std::string s) { return FieldValue{true, v, std::move(s)}; };
  if (field == "case") {
    // Case ids are numeric labels ("1.1", "8") and sort as such.
    char* end = nullptr;
    const double v = std::strtod(r.caseId.c_str(), &end);
    if (end && *end == '\0' && !r.caseId.empty()) return num(v, r.caseId);
    return FieldValue{false, 0.0, r.caseId};
  }
  if (field == "p1") return num(static_cast<double>(r.p1), std::to_string(r.p1));
  if (field == "p2") return num(static_cast<double>(r.p2), std::to_string(r.p2));
  if (field == "T") return num(static_cast<double>(r.T), std::to_string(r.T));
  if (field == "rep") return num(r.rep, std::to_string(r.rep));
  if (field == "criterion") return FieldValue{false, 0.0, r.criterion};
  fail(ErrorCode::InvalidQuery, "unknown group-by field '" + field + "' (expected case, p1, p2, T, criterion or rep)");
}

int criterion_rank(const std::string& c) {
  static const std::vector<std::string> order{"static", "it0", "it1", "it2"};
  const auto it = std::find(order.begin(), order.end(), c);
  return it == order.end() ? 99 : static_cast<int>(it - order.begin());
}

}  // namespace

const char* library_version() noexcept { return NSMFM_VERSION; }

void StudyGrid::validate() const {
  if (p1.empty() || T.empty()) fail(ErrorCode::InvalidConfig, "p1 and T grids must be nonempty");
  if (reps < 1) fail(ErrorCode::InvalidConfig, "reps must be at least 1");
  if (p2 < 1) fail(ErrorCode::InvalidConfig, "p2 must be positive");
  for (Index p : p1)
    if (p < 1) fail(ErrorCode::InvalidConfig, "p1 values must be positive");
  for (Index t : T)
    if (t < 2) fail(ErrorCode::InvalidConfig, "T values must be at least 2");
  if (threads < 0) fail(ErrorCode::InvalidConfig, "threads must be nonnegative");
  if (!(noiseStd >= 0.0)) fail(ErrorCode::InvalidConfig, "noise standard deviation must be nonnegative");
}

StudyGrid desk_grid() { return StudyGrid{}; }

StudyGrid full_grid() {
  StudyGrid g;
  g.p1 = {10, 20, 50, 100};
  g.T = {20, 50, 100, 200};
  g.reps = 1000;
  return g;
}

const std::vector<RateCase>& rate_cases() {
  static const std::vector<RateCase> cases{
      {"1.1", {1, 1, 1, 1}, 1, 1, 1},   {"1.2", {1, 1, 1, 1}, 1, 1, 2},
      {"2.1", {2, 2, 1, 1}, 1, 1, 1},   {"2.2", {2, 2, 1, 1}, 1, 1, 2},
      {"3.1", {1, 1, 2, 2}, 1, 1, 1},   {"3.2", {1, 1, 2, 2}, 1, 1, 2},
      {"4.1", {1, 1, 1, 1}, 10, 10, 1}, {"4.2", {1, 1, 1, 1}, 10, 10, 2},
  };
  return cases;
}

const RateCase& rate_case(std::string_view id) {
  for (const RateCase& c : rate_cases())
    if (c.id == id) return c;
  fail(ErrorCode::InvalidConfig, "unknown rate case '" + std::string(id) + "'");
}

const std::vector<RankCase>& rank_cases() {
  // Ranks are (hR1, hC1, hR0, hC0).
  static const std::vector<RankCase> cases{
      {"1", {1, 1, 1, 1}}, {"2", {2, 2, 2, 2}}, {"3", {2, 2, 1, 1}}, {"4", {3, 3, 1, 1}},
      {"5", {1, 1, 2, 2}}, {"6", {1, 1, 3, 3}}, {"7", {1, 1, 2, 1}}, {"8", {2, 1, 1, 1}},
  };
  return cases;
}

const RankCase& rank_case(std::string_view id) {
  for (const RankCase& c : rank_cases())
    if (c.id == id) return c;
  fail(ErrorCode::InvalidConfig, "unknown rank case '" + std::string(id) + "'");
}

std::uint64_t replication_seed(std::uint64_t masterSeed, std::string_view caseId, Index p1, Index T, int rep) {
  return combine_seed(masterSeed, {hash_label(caseId), static_cast<std::uint64_t>(p1), static_cast<std::uint64_t>(T),
                                   static_cast<std::uint64_t>(rep)});
}

McResult run_rate_study(const std::vector<RateCase>& cases, const StudyGrid& grid) {
  return run_study(cases, grid, [&](const RateCase& c, const Task& t, const auto& add) {
    DgpConfig dgp;
    dgp.p1 = t.p1;
    dgp.p2 = t.p2;
    dgp.T = t.T;
    dgp.ranks = c.ranks;
    dgp.a0 = c.a0;
    dgp.a1 = c.a1;
    dgp.sigma0 = c.sigma0;
    dgp.noiseStd = grid.noiseStd;
    dgp.seed = t.seed;
    const Simulation sim = simulate(dgp);
    const EstimationOutput est = estimate_pipeline(sim.panel, c.ranks);
    const StageOneEstimate dagger = dagger_estimate(sim.panel, est.stage1, c.ranks);

    struct Pair {
      const char* name;
      const Loadings& flat;
      const Loadings& proj;
      const Loadings& truth;
    };
    const Pair pairs[] = {
        {"R1", est.stage1.R1hat, est.refined.R1tilde, sim.truth.R1},
        {"C1", est.stage1.C1hat, est.refined.C1tilde, sim.truth.C1},
        {"R0", est.stationary.R0hat, est.secondRound.R0hat, sim.truth.R0},
        {"C0", est.stationary.C0hat, est.secondRound.C0hat, sim.truth.C0},
    };
    for (const Pair& p : pairs) {
      const double flat = subspace_distance(p.flat, p.truth);
      const double proj = subspace_distance(p.proj, p.truth);
      add("pipeline", std::string("D_flat_") + p.name, flat);
      add("pipeline", std::string("D_proj_") + p.name, proj);
      if (proj > 0.0) add("pipeline", std::string("ratio_") + p.name, flat / proj);
    }
    const double dR = subspace_distance(dagger.R1hat, sim.truth.R1);
    const double dC = subspace_distance(dagger.C1hat, sim.truth.C1);
    add("pipeline", "D_dagger_R1", dR);
    add("pipeline", "D_dagger_C1", dC);
    const double fR = subspace_distance(est.stage1.R1hat, sim.truth.R1);
    const double fC = subspace_distance(est.stage1.C1hat, sim.truth.C1);
    if (fR > 0.0) add("pipeline", "ratio_dagger_R1", dR / fR);
    if (fC > 0.0) add("pipeline", "ratio_dagger_C1", dC / fC);
  });
}

McResult run_rank_study(const std::vector<RankCase>& cases, const StudyGrid& grid, const ErConfig& cfg,
                        const std::vector<Criterion>& criteria) {
  if (criteria.empty()) fail(ErrorCode::InvalidConfig, "rank study needs at least one criterion");
  for (Index p1 : grid.p1)
    for (Index T : grid.T) cfg.validate_for(p1, grid.p2, T);
  return run_study(cases, grid, [&](const RankCase& c, const Task& t, const auto& add) {
    DgpConfig dgp;
    dgp.p1 = t.p1;
    dgp.p2 = t.p2;
    dgp.T = t.T;
    dgp.ranks = c.ranks;
    dgp.noiseStd = grid.noiseStd;
    dgp.seed = t.seed;
    const Simulation sim = simulate(dgp);
    const RankSelection sel = select_all(sim.panel, cfg);
    const Ranks& truth = c.ranks;
    for (Criterion k : criteria) {
      const std::string name(to_string(k));
      const Ranks& r = sel.get(k);
      add(name, "hR1", r.hR1);
      add(name, "hC1", r.hC1);
      add(name, "hR0", r.hR0);
      add(name, "hC0", r.hC0);
      add(name, "correct_hR1", r.hR1 == truth.hR1 ? 1.0 : 0.0);
      add(name, "correct_hC1", r.hC1 == truth.hC1 ? 1.0 : 0.0);
      add(name, "correct_hR0", r.hR0 == truth.hR0 ? 1.0 : 0.0);
      add(name, "correct_hC0", r.hC0 == truth.hC0 ? 1.0 : 0.0);
      add(name, "correct_all", r == truth ? 1.0 : 0.0);
    }
  });
}

std::vector<AggregateRow> summarize(const McResult& result, const std::vector<std::string>& groupBy,
                                    const std::vector<std::string>& metrics) {
  if (result.records.empty()) fail(ErrorCode::InvalidInput, "cannot summarize an empty result");
  for (const std::string& m : metrics) {
    const bool known = std::any_of(result.records.begin(), result.records.end(),
                                   [&](const McRecord& r) { return r.metric == m; });
    if (!known) fail(ErrorCode::InvalidQuery, "unknown metric '" + m + "'");
  }
  using Key = std::pair<std::vector<FieldValue>, std::string>;
  std::map<Key, std::vector<double>> groups;
  for (const McRecord& r : result.records) {
    if (!metrics.empty() && std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) continue;
    std::vector<FieldValue> key;
    key.reserve(groupBy.size());
    for (const std::string& f : groupBy) key.push_back(field_of(r, f));
    groups[Key{std::move(key), r.metric}].push_back(r.value);
  }
  std::vector<AggregateRow> rows;
  rows.reserve(groups.size());
  for (auto& [key, values] : groups) {
    std::vector<std::string> keys;
    for (const FieldValue& v : key.first) keys.push_back(v.text);
    rows.push_back(aggregate(std::move(keys), key.second, std::move(values)));
  }
  return rows;
}

std::vector<DifferenceRow> differences_vs_static(const McResult& result) {
  struct Cell {
    FieldValue caseId;
    Index p1, p2, T;
    std::string metric;
    bool operator<(const Cell& o) const {
      if (caseId < o.caseId) return true;
      if (o.caseId < caseId) return false;
      return std::tie(p1, p2, T, metric) < std::tie(o.p1, o.p2, o.T, o.metric);
    }
  };
  std::map<Cell, std::map<std::string, std::pair<double, std::size_t>>> sums;
  for (const McRecord& r : result.records) {
    auto& s = sums[Cell{field_of(r, "case"), r.p1, r.p2, r.T, r.metric}][r.criterion];
    s.first += r.value;
    ++s.second;
  }
  std::vector<DifferenceRow> rows;
  for (const auto& [cell, byCriterion] : sums) {
    const auto base = byCriterion.find("static");
    if (base == byCriterion.end()) continue;
    const double baseMean = base->second.first / static_cast<double>(base->second.second);
    std::vector<std::pair<std::string, double>> diffs;
    for (const auto& [criterion, s] : byCriterion) {
      if (criterion == "static") continue;
      diffs.emplace_back(criterion, s.first / static_cast<double>(s.second) - baseMean);
    }
    std::sort(diffs.begin(), diffs.end(),
              [](const auto& a, const auto& b) { return criterion_rank(a.first) < criterion_rank(b.first); });
    for (auto& [criterion, d] : diffs) {
      rows.push_back(DifferenceRow{cell.caseId.text, cell.p1, cell.p2, cell.T, criterion, cell.metric, d});
    }
  }
  return rows;
}

}  // namespace nsmfm
