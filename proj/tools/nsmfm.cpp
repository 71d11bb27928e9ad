// nsmfm: simulate matrix panels with stochastic trends, estimate the factor
// structure, select ranks and run Monte Carlo studies.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nsmfm/estimators.hpp"
#include "nsmfm/harness.hpp"
#include "nsmfm/io.hpp"
#include "nsmfm/model.hpp"
#include "nsmfm/ranksel.hpp"

namespace fs = std::filesystem;
using namespace nsmfm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularGram:
    case ErrorCode::SingularInput:
    case ErrorCode::NumericalFailure:
    case ErrorCode::DegenerateAntiProjection:
      return kExitNumerical;
    case ErrorCode::IoError:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

// Manifest entries that describe a run rather than configure one.
const std::set<std::string> kInformationalKeys{"command", "version", "wall_seconds", "failures", "records", "cells"};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char ch : text) {
    if (ch == ',') {
      out.push_back(item);
      item.clear();
    } else if (ch != ' ') {
      item += ch;
    }
  }
  out.push_back(item);
  return out;
}

std::vector<Index> parse_index_list(const std::string& text, const std::string& name) {
  std::vector<Index> out;
  for (const std::string& s : split_list(text)) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used != s.size() || v < 1) throw std::invalid_argument(s);
      out.push_back(static_cast<Index>(v));
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidConfig, "--" + name + ": invalid entry '" + s + "' in '" + text + "'");
    }
  }
  return out;
}

std::string join(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct ErOptions {
  int hMax = 0;  // 0: default for the command
  std::optional<double> c, cR1, cC1, cR1d, cC1d, cR0, cC0;
  double omegaScale = 1.0;
  int maxIter = 10;
  bool clusterFirst = false;
  std::string stationaryScale = "balanced";

  void add_to(CLI::App* cmd, const std::string& hmaxHelp) {
    cmd->add_option("--hmax", hMax, hmaxHelp);
    cmd->add_option("--c", c, "ER penalty constant applied to all six criteria");
    cmd->add_option("--c-r1", cR1, "constant for the flattened row criterion");
    cmd->add_option("--c-c1", cC1, "constant for the flattened column criterion");
    cmd->add_option("--c-r1d", cR1d, "constant for the filtered row criterion");
    cmd->add_option("--c-c1d", cC1d, "constant for the filtered column criterion");
    cmd->add_option("--c-r0", cR0, "constant for the stationary row criterion");
    cmd->add_option("--c-c0", cC0, "constant for the stationary column criterion");
    cmd->add_option("--omega-scale", omegaScale, "mock eigenvalue multiplier")->capture_default_str();
    cmd->add_option("--max-iter", maxIter, "iteration cap for it0")->capture_default_str();
    cmd->add_flag("--it1-cluster-first", clusterFirst, "it1 ranks candidates by basin size before ER value");
    cmd->add_option("--stationary-scale", stationaryScale, "anti-projected spectra in the ER criterion")
        ->check(CLI::IsMember({"balanced", "as-estimated"}))
        ->capture_default_str();
  }

  [[nodiscard]] ErConfig build(int defaultHMax) const {
    ErConfig cfg;
    cfg.hMax = hMax > 0 ? hMax : defaultHMax;
    if (c) cfg = cfg.with_constant(*c);
    if (cR1) cfg.cR1 = *cR1;
    if (cC1) cfg.cC1 = *cC1;
    if (cR1d) cfg.cR1d = *cR1d;
    if (cC1d) cfg.cC1d = *cC1d;
    if (cR0) cfg.cR0 = *cR0;
    if (cC0) cfg.cC0 = *cC0;
    cfg.omegaScale = omegaScale;
    cfg.maxIter = maxIter;
    cfg.it1ClusterFirst = clusterFirst;
    cfg.stationaryScale = stationaryScale == "balanced" ? StationaryErScale::Balanced : StationaryErScale::AsEstimated;
    return cfg;
  }

  void record(io::KeyValues& kv) const {
    const ErConfig cfg = build(4);
    kv["hmax"] = std::to_string(cfg.hMax);
    kv["c-r1"] = io::format_double(cfg.cR1);
    kv["c-c1"] = io::format_double(cfg.cC1);
    kv["c-r1d"] = io::format_double(cfg.cR1d);
    kv["c-c1d"] = io::format_double(cfg.cC1d);
    kv["c-r0"] = io::format_double(cfg.cR0);
    kv["c-c0"] = io::format_double(cfg.cC0);
    kv["omega-scale"] = io::format_double(omegaScale);
    kv["max-iter"] = std::to_string(maxIter);
    kv["it1-cluster-first"] = clusterFirst ? "true" : "false";
    kv["stationary-scale"] = stationaryScale;
  }
};

// Library default hMax of 8, lowered to fit small panels.
int fitted_hmax(const MatrixPanel& panel) {
  const Index m = std::min({panel.p1(), panel.p2(), panel.T()});
  return static_cast<int>(std::max<Index>(1, std::min<Index>(8, m - 1)));
}

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  int threads = 0;

  // simulate
  Index p1 = 0, p2 = 0, T = 0;
  std::string ranks;
  double a0 = 1.0, a1 = 1.0, sigma0 = 1.0, noiseStd = 1.0;
  std::optional<std::uint64_t> loadingSeed;
  std::string out;

  // estimate / ranks / graph
  std::string panel;
  std::string criterion = "static";
  std::string criteria = "static,it0,it1,it2";
  std::string truth;
  bool calibrate = false;
  ErOptions er;

  // mc
  std::string cases;
  std::string p1Grid, TGrid;
  Index mcP2 = 20;
  int reps = 0;
  bool fullGrid = false;
};

ErConfig maybe_calibrate(const MatrixPanel& panel, const ErConfig& cfg, const Options& o) {
  if (!o.calibrate) return cfg;
  CalibrationGrid grid;
  grid.seed = o.seed;
  const ErConfig out = calibrate_constants(panel, cfg, grid);
  std::cout << "calibrated_constant=" << io::format_double(out.cR1) << '\n';
  return out;
}

int cmd_simulate(const Options& o) {
  DgpConfig dgp;
  dgp.p1 = o.p1;
  dgp.p2 = o.p2;
  dgp.T = o.T;
  dgp.ranks = parse_ranks(o.ranks);
  dgp.a0 = o.a0;
  dgp.a1 = o.a1;
  dgp.sigma0 = o.sigma0;
  dgp.noiseStd = o.noiseStd;
  dgp.seed = o.seed;
  dgp.loadingSeed = o.loadingSeed;
  const Simulation sim = simulate(dgp);

  const fs::path dir(o.out);
  const fs::path panelPath = dir / "panel.csv";
  io::write_panel(panelPath, sim.panel);
  io::KeyValues meta = io::read_key_values(panelPath.string() + ".meta");
  meta["ranks"] = dgp.ranks.to_string();
  meta["seed"] = std::to_string(dgp.seed);
  meta["a0"] = io::format_double(dgp.a0);
  meta["a1"] = io::format_double(dgp.a1);
  meta["sigma0"] = io::format_double(dgp.sigma0);
  meta["noise-std"] = io::format_double(dgp.noiseStd);
  if (dgp.loadingSeed) meta["loading-seed"] = std::to_string(*dgp.loadingSeed);
  io::write_key_values(panelPath.string() + ".meta", meta);

  const fs::path truth = dir / "truth";
  io::write_loadings(truth / "R1.csv", sim.truth.R1);
  io::write_loadings(truth / "C1.csv", sim.truth.C1);
  io::write_loadings(truth / "R0.csv", sim.truth.R0);
  io::write_loadings(truth / "C0.csv", sim.truth.C0);
  io::write_factors(truth / "F1.csv", sim.truth.F1);
  io::write_factors(truth / "F0.csv", sim.truth.F0);
  io::write_ranks(truth / "ranks.txt", dgp.ranks);
  std::cout << "wrote " << panelPath.string() << " (" << o.p1 * o.p2 * o.T << " rows)\n";
  return kExitOk;
}

Loadings read_truth_loadings(const fs::path& path, Index p) {
  Loadings l = io::read_loadings(path);
  if (l.h() == 0) return Loadings::none(p);
  if (l.p() != p) {
    fail(ErrorCode::ShapeError, path.string() + " has " + std::to_string(l.p()) + " rows, panel dimension is " + std::to_string(p));
  }
  return l;
}

int cmd_estimate(const Options& o) {
  const MatrixPanel panel = io::read_panel(o.panel);
  Ranks ranks;
  if (o.ranks == "auto") {
    const ErConfig cfg = maybe_calibrate(panel, o.er.build(fitted_hmax(panel)), o);
    ranks = select_ranks(panel, cfg, parse_criterion(o.criterion));
  } else {
    ranks = parse_ranks(o.ranks);
  }
  const EstimationOutput est = estimate_pipeline(panel, ranks);

  const fs::path dir(o.out);
  io::write_ranks(dir / "ranks.txt", ranks);
  io::write_loadings(dir / "R1hat.csv", est.stage1.R1hat);
  io::write_loadings(dir / "C1hat.csv", est.stage1.C1hat);
  io::write_factors(dir / "F1hat.csv", est.stage1.F1hat);
  io::write_loadings(dir / "R0hat.csv", est.stationary.R0hat);
  io::write_loadings(dir / "C0hat.csv", est.stationary.C0hat);
  io::write_factors(dir / "F0hat.csv", est.stationary.F0hat);
  io::write_loadings(dir / "R1tilde.csv", est.refined.R1tilde);
  io::write_loadings(dir / "C1tilde.csv", est.refined.C1tilde);
  io::write_factors(dir / "F1tilde.csv", est.refined.F1tilde);
  io::write_loadings(dir / "R0tilde.csv", est.secondRound.R0hat);
  io::write_loadings(dir / "C0tilde.csv", est.secondRound.C0hat);
  io::write_factors(dir / "F0tilde.csv", est.secondRound.F0hat);
  io::write_spectra(dir / "spectra.csv", {{"flat_R", &est.stage1.specR},
                                         {"flat_C", &est.stage1.specC},
                                         {"perp_R", &est.stationary.specRperp},
                                         {"perp_C", &est.stationary.specCperp},
                                         {"filtered_R", &est.refined.specRdiamond},
                                         {"filtered_C", &est.refined.specCdiamond},
                                         {"perp2_R", &est.secondRound.specRperp},
                                         {"perp2_C", &est.secondRound.specCperp}});
  std::cout << "ranks=" << ranks.to_string() << '\n';

  if (!o.truth.empty()) {
    const fs::path t(o.truth);
    const Loadings R1 = read_truth_loadings(t / "R1.csv", panel.p1());
    const Loadings C1 = read_truth_loadings(t / "C1.csv", panel.p2());
    const Loadings R0 = read_truth_loadings(t / "R0.csv", panel.p1());
    const Loadings C0 = read_truth_loadings(t / "C0.csv", panel.p2());
    struct Row {
      const char* name;
      const Loadings& est;
      const Loadings& truth;
    };
    const Row rows[] = {
        {"D_flat_R1", est.stage1.R1hat, R1},      {"D_proj_R1", est.refined.R1tilde, R1},
        {"D_flat_C1", est.stage1.C1hat, C1},      {"D_proj_C1", est.refined.C1tilde, C1},
        {"D_flat_R0", est.stationary.R0hat, R0},  {"D_proj_R0", est.secondRound.R0hat, R0},
        {"D_flat_C0", est.stationary.C0hat, C0},  {"D_proj_C0", est.secondRound.C0hat, C0},
    };
    io::KeyValues distances;
    for (const Row& r : rows) {
      if (r.est.empty() || r.truth.empty()) continue;
      const double d = subspace_distance(r.est, r.truth);
      distances[r.name] = io::format_double(d);
      std::cout << r.name << '=' << io::format_double(d) << '\n';
    }
    io::write_key_values(dir / "distances.txt", distances);
  }
  return kExitOk;
}

int cmd_ranks(const Options& o) {
  const MatrixPanel panel = io::read_panel(o.panel);
  const ErConfig cfg = maybe_calibrate(panel, o.er.build(fitted_hmax(panel)), o);
  std::vector<Criterion> wanted;
  for (const std::string& c : split_list(o.criteria)) wanted.push_back(parse_criterion(c));
  const RankSelection sel = select_all(panel, cfg);
  io::KeyValues kv;
  for (Criterion c : wanted) {
    kv[std::string(to_string(c))] = sel.get(c).to_string();
    std::cout << to_string(c) << '=' << sel.get(c).to_string() << '\n';
  }
  kv["it0_converged"] = sel.it0.converged ? "true" : "false";
  kv["it0_iterations"] = std::to_string(sel.it0.iterations);
  kv["hmax"] = std::to_string(cfg.hMax);
  std::cout << "it0_converged=" << kv["it0_converged"] << '\n';
  if (!o.out.empty()) io::write_key_values(o.out, kv);
  return kExitOk;
}

int cmd_graph(const Options& o) {
  const MatrixPanel panel = io::read_panel(o.panel);
  const ErConfig cfg = o.er.build(std::min(4, fitted_hmax(panel)));
  const RankGraph graph = build_rank_graph(panel, cfg);
  io::write_graph(o.out, graph);
  std::cout << "fixed_points=";
  for (std::size_t i = 0; i < graph.fixedPoints().size(); ++i) {
    const RankNode& n = graph.fixedPoints()[i];
    std::cout << (i ? ";" : "") << '(' << n.hR1 << ',' << n.hC1 << ')';
  }
  std::cout << '\n';
  return kExitOk;
}

StudyGrid study_grid(const Options& o) {
  StudyGrid g = o.fullGrid ? full_grid() : desk_grid();
  if (!o.p1Grid.empty()) g.p1 = parse_index_list(o.p1Grid, "p1");
  if (!o.TGrid.empty()) g.T = parse_index_list(o.TGrid, "T");
  g.p2 = o.mcP2;
  if (o.reps > 0) g.reps = o.reps;
  g.masterSeed = o.seed;
  g.threads = o.threads;
  g.noiseStd = o.noiseStd;
  return g;
}

io::KeyValues study_manifest(const std::string& command, const Options& o, const StudyGrid& g, const McResult& r,
                             const std::string& cases) {
  io::KeyValues kv;
  kv["command"] = command;
  kv["version"] = library_version();
  kv["case"] = cases;
  kv["p1"] = join(g.p1);
  kv["p2"] = std::to_string(g.p2);
  kv["T"] = join(g.T);
  kv["reps"] = std::to_string(g.reps);
  kv["seed"] = std::to_string(g.masterSeed);
  kv["noise-std"] = io::format_double(g.noiseStd);
  kv["threads"] = std::to_string(o.threads);
  kv["records"] = std::to_string(r.records.size());
  kv["failures"] = std::to_string(r.failures.size());
  kv["cells"] = std::to_string(r.cells);
  kv["wall_seconds"] = io::format_double(r.wallSeconds);
  return kv;
}

void report_failures(const McResult& r) {
  if (r.failures.empty()) return;
  std::cerr << r.failures.size() << " replication(s) failed and were excluded:\n";
  for (const McFailure& f : r.failures) {
    std::cerr << "  case " << f.caseId << " p1=" << f.p1 << " T=" << f.T << " rep=" << f.rep << ": " << f.message << '\n';
  }
}

int cmd_mc_rates(const Options& o) {
  std::vector<RateCase> cases;
  std::string ids = o.cases;
  if (ids.empty()) {
    cases = rate_cases();
    for (const RateCase& c : cases) ids += (ids.empty() ? "" : ",") + c.id;
  } else {
    for (const std::string& id : split_list(ids)) cases.push_back(rate_case(id));
  }
  const StudyGrid grid = study_grid(o);
  const McResult result = run_rate_study(cases, grid);
  const fs::path dir(o.out);
  const std::vector<std::string> groupBy{"case", "p1", "p2", "T"};
  io::write_long_csv(dir / "records.csv", result);
  std::vector<AggregateRow> rows;
  if (!result.records.empty()) rows = summarize(result, groupBy);
  io::write_aggregate_csv(dir / "aggregate.csv", groupBy, rows);
  io::write_seeds_csv(dir / "seeds.csv", result);
  io::write_key_values(dir / "manifest.txt", study_manifest("mc rates", o, grid, result, ids));
  report_failures(result);
  for (const AggregateRow& r : rows) {
    if (r.metric == "ratio_R1" || r.metric == "ratio_C1") {
      std::cout << "case=" << r.keys[0] << " p1=" << r.keys[1] << " T=" << r.keys[3] << ' ' << r.metric
                << " median=" << io::format_double(r.median) << '\n';
    }
  }
  std::cout << "records=" << result.records.size() << " failures=" << result.failures.size() << '\n';
  return kExitOk;
}

int cmd_mc_ranks(const Options& o) {
  std::vector<RankCase> cases;
  std::string ids = o.cases;
  if (ids.empty()) {
    cases = rank_cases();
    for (const RankCase& c : cases) ids += (ids.empty() ? "" : ",") + c.id;
  } else {
    for (const std::string& id : split_list(ids)) cases.push_back(rank_case(id));
  }
  std::vector<Criterion> criteria;
  for (const std::string& c : split_list(o.criteria)) criteria.push_back(parse_criterion(c));
  const StudyGrid grid = study_grid(o);
  const ErConfig cfg = o.er.build(4);
  const McResult result = run_rank_study(cases, grid, cfg, criteria);

  const fs::path dir(o.out);
  const std::vector<std::string> groupBy{"case", "p1", "p2", "T", "criterion"};
  io::write_long_csv(dir / "records.csv", result);
  std::vector<AggregateRow> rows;
  if (!result.records.empty()) rows = summarize(result, groupBy);
  io::write_aggregate_csv(dir / "aggregate.csv", groupBy, rows);
  io::write_differences_csv(dir / "differences.csv", differences_vs_static(result));
  io::write_seeds_csv(dir / "seeds.csv", result);
  io::KeyValues manifest = study_manifest("mc ranks", o, grid, result, ids);
  manifest["criteria"] = o.criteria;
  o.er.record(manifest);
  io::write_key_values(dir / "manifest.txt", manifest);
  report_failures(result);
  for (const AggregateRow& r : rows) {
    if (r.metric.rfind("correct_", 0) != 0) continue;
    std::cout << "case=" << r.keys[0] << " p1=" << r.keys[1] << " T=" << r.keys[3] << " criterion=" << r.keys[4] << ' '
              << r.metric << '=' << io::format_double(r.mean) << '\n';
  }
  std::cout << "records=" << result.records.size() << " failures=" << result.failures.size() << '\n';
  return kExitOk;
}

// Turns config-file entries and NSMFM_SEED into "--key=value" tokens placed
// ahead of the user's flags; every option keeps its last value, so explicit
// flags win over the file, which wins over the environment.
std::vector<std::string> expand_arguments(int argc, char** argv, CLI::App& app) {
  std::vector<std::string> raw(argv + 1, argv + argc);
  std::size_t firstFlag = 0;
  CLI::App* leaf = &app;
  while (firstFlag < raw.size() && !raw[firstFlag].empty() && raw[firstFlag][0] != '-') {
    CLI::App* sub = leaf->get_subcommand_no_throw(raw[firstFlag]);
    if (sub == nullptr) break;
    leaf = sub;
    ++firstFlag;
  }

  std::vector<std::string> injected;
  if (const char* env = std::getenv("NSMFM_SEED"); env != nullptr && leaf->get_option_no_throw("--seed") != nullptr) {
    injected.push_back(std::string("--seed=") + env);
  }
  std::string config;
  for (std::size_t i = firstFlag; i < raw.size(); ++i) {
    if (raw[i] == "--config" && i + 1 < raw.size()) config = raw[i + 1];
    if (raw[i].rfind("--config=", 0) == 0) config = raw[i].substr(9);
  }
  if (!config.empty()) {
    for (const auto& [rawKey, value] : io::read_key_values(config)) {
      if (kInformationalKeys.count(rawKey)) continue;
      std::string key = rawKey;
      std::replace(key.begin(), key.end(), '_', '-');
      if (key == "config" || leaf->get_option_no_throw("--" + key) == nullptr) {
        fail(ErrorCode::InvalidConfig, config + ": unknown key '" + key + "'");
      }
      injected.push_back("--" + key + "=" + value);
    }
  }

  std::vector<std::string> args(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(firstFlag));
  args.insert(args.end(), injected.begin(), injected.end());
  args.insert(args.end(), raw.begin() + static_cast<std::ptrdiff_t>(firstFlag), raw.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimation and rank selection for matrix factor models with common stochastic trends", "nsmfm"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  Options o;

  auto common = [&](CLI::App* cmd, bool withSeed) {
    cmd->add_option("--config", o.config, "flat key=value file; keys are flag names without dashes");
    if (withSeed) cmd->add_option("--seed", o.seed, "master seed (default: $NSMFM_SEED, else 0)");
  };

  CLI::App* simulateCmd = app.add_subcommand("simulate", "simulate a panel and its latent components");
  common(simulateCmd, true);
  simulateCmd->add_option("--p1", o.p1, "rows")->required()->check(CLI::PositiveNumber);
  simulateCmd->add_option("--p2", o.p2, "columns")->required()->check(CLI::PositiveNumber);
  simulateCmd->add_option("--T", o.T, "time points")->required()->check(CLI::PositiveNumber);
  simulateCmd->add_option("--ranks", o.ranks, "hR1,hC1,hR0,hC0")->required();
  simulateCmd->add_option("--a0", o.a0, "stationary loadings ~ U[-a0, a0]")->capture_default_str();
  simulateCmd->add_option("--a1", o.a1, "trend loadings ~ U[-a1, a1]")->capture_default_str();
  simulateCmd->add_option("--sigma0", o.sigma0, "variance of the stationary factors")->capture_default_str();
  simulateCmd->add_option("--noise-std", o.noiseStd, "idiosyncratic standard deviation")->capture_default_str();
  simulateCmd->add_option("--loading-seed", o.loadingSeed, "draw loadings from this seed instead");
  simulateCmd->add_option("--out", o.out, "output directory")->required();

  CLI::App* estimateCmd = app.add_subcommand("estimate", "run the estimation pipeline on a panel");
  common(estimateCmd, true);
  estimateCmd->add_option("--panel", o.panel, "panel CSV (with .meta alongside)")->required();
  estimateCmd->add_option("--ranks", o.ranks, "hR1,hC1,hR0,hC0 or 'auto'")->required();
  estimateCmd->add_option("--criterion", o.criterion, "rank criterion for --ranks auto")
      ->check(CLI::IsMember({"static", "it0", "it1", "it2"}))
      ->capture_default_str();
  estimateCmd->add_flag("--calibrate", o.calibrate, "calibrate ER constants on subsamples (uses --seed)");
  estimateCmd->add_option("--truth", o.truth, "directory with true R1, C1, R0, C0 CSVs; prints distances");
  estimateCmd->add_option("--out", o.out, "output directory")->required();
  o.er.add_to(estimateCmd, "largest rank considered (default min(8, min(p1,p2,T)-1))");

  CLI::App* ranksCmd = app.add_subcommand("ranks", "select ranks by eigenvalue ratios");
  common(ranksCmd, true);
  ranksCmd->add_option("--panel", o.panel, "panel CSV (with .meta alongside)")->required();
  ranksCmd->add_option("--criteria", o.criteria, "comma-separated subset of static,it0,it1,it2")->capture_default_str();
  ranksCmd->add_flag("--calibrate", o.calibrate, "calibrate ER constants on subsamples (uses --seed)");
  ranksCmd->add_option("--out", o.out, "key=value output file");
  o.er.add_to(ranksCmd, "largest rank considered (default min(8, min(p1,p2,T)-1))");

  CLI::App* graphCmd = app.add_subcommand("graph", "export the fixed-point graph over starting ranks");
  common(graphCmd, false);
  graphCmd->add_option("--panel", o.panel, "panel CSV (with .meta alongside)")->required();
  graphCmd->add_option("--out", o.out, "edge-list CSV")->required();
  o.er.add_to(graphCmd, "grid size (default min(4, min(p1,p2,T)-1))");

  CLI::App* mcCmd = app.add_subcommand("mc", "Monte Carlo studies");
  mcCmd->require_subcommand(1);
  auto mcCommon = [&](CLI::App* cmd) {
    common(cmd, true);
    cmd->add_option("--case", o.cases, "comma-separated case ids (default: all)");
    cmd->add_option("--p1", o.p1Grid, "comma-separated row dimensions (default 10,20,50)");
    cmd->add_option("--p2", o.mcP2, "column dimension")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--T", o.TGrid, "comma-separated sample sizes (default 50,100,200)");
    cmd->add_option("--reps", o.reps, "replications per cell (default 200)")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--full-grid", o.fullGrid, "p1 in 10,20,50,100, T in 20,50,100,200, 1000 replications");
    cmd->add_option("--noise-std", o.noiseStd, "idiosyncratic standard deviation")->capture_default_str();
    cmd->add_option("--threads", o.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", o.out, "output directory")->required();
  };
  CLI::App* ratesCmd = mcCmd->add_subcommand("rates", "loading-estimation study (cases 1.1-4.2)");
  mcCommon(ratesCmd);
  CLI::App* ranksStudyCmd = mcCmd->add_subcommand("ranks", "rank-selection study (cases 1-8)");
  mcCommon(ranksStudyCmd);
  ranksStudyCmd->add_option("--criteria", o.criteria, "comma-separated subset of static,it0,it1,it2")
      ->capture_default_str();
  o.er.add_to(ranksStudyCmd, "largest rank considered (default 4)");

  try {
    std::vector<std::string> args = expand_arguments(argc, argv, app);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "nsmfm: " << e.what() << '\n';
    return exit_code_for(e.code());
  }

  try {
    if (simulateCmd->parsed()) return cmd_simulate(o);
    if (estimateCmd->parsed()) return cmd_estimate(o);
    if (ranksCmd->parsed()) return cmd_ranks(o);
    if (graphCmd->parsed()) return cmd_graph(o);
    if (ratesCmd->parsed()) return cmd_mc_rates(o);
    if (ranksStudyCmd->parsed()) return cmd_mc_ranks(o);
  } catch (const Error& e) {
    std::cerr << "nsmfm: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "nsmfm: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitValidation;
}
