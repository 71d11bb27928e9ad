#include "nsmfm/ranksel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nsmfm/rng.hpp"

namespace nsmfm {

namespace {

double as_double(Index n) { return static_cast<double>(n); }

void pair_block(int& a, int& b) {
  if (a == 0 || b == 0) a = b = 0;
}

struct Omegas {
  double R1, C1, R1d, C1d, R0, C0;
};

// Everything shared by the passes over one panel.
struct Context {
  const MatrixPanel& panel;
  const ErConfig& cfg;
  DeltaSequences delta;
  Omegas omega;
  Spectrum specR, specC;
};

Context make_context(const MatrixPanel& panel, const ErConfig& cfg) {
  cfg.validate_for(panel.p1(), panel.p2(), panel.T());
  const Index p1 = panel.p1(), p2 = panel.p2(), T = panel.T();
  const DeltaSequences d = delta_sequences(p1, p2, T);
  const double s = cfg.omegaScale;
  Omegas w{mock_eigenvalue(d.R1, p1, p2, T, s),  mock_eigenvalue(d.C1, p1, p2, T, s),
           mock_eigenvalue(d.R1d, p1, p2, T, s), mock_eigenvalue(d.C1d, p1, p2, T, s),
           mock_eigenvalue(d.R0, p1, p2, T, s),  mock_eigenvalue(d.C0, p1, p2, T, s)};
  auto [mr, mc] = flattened_covariances(panel);
  return Context{panel, cfg, d, w, sym_eig_desc(mr), sym_eig_desc(mc)};
}

struct StationaryPass {
  int hR0 = 0, hC0 = 0;
  Spectrum specRperp, specCperp;
  Projector pr, pc;
};

// Anti-projected spectra for the given trend loadings and the ranks they imply.
StationaryPass stationary_pass(const Context& ctx, const Loadings& R1, const Loadings& C1) {
  const Index p1 = ctx.panel.p1(), p2 = ctx.panel.p2();
  StationaryPass out{0, 0, {}, {}, orth_projector_complement(R1), orth_projector_complement(C1)};
  auto [mr, mc] = anti_projected_covariances(ctx.panel, out.pr, out.pc);
  out.specRperp = sym_eig_desc(mr);
  out.specCperp = sym_eig_desc(mc);
  const bool balanced = ctx.cfg.stationaryScale == StationaryErScale::Balanced;
  const Vector row = balanced ? Vector(out.specRperp.eigenvalues * as_double(p2)) : out.specRperp.eigenvalues;
  const Vector col = balanced ? Vector(out.specCperp.eigenvalues * as_double(p1)) : out.specCperp.eigenvalues;
  out.hR0 = er_scan(row, ctx.delta.R0, ctx.cfg.cR0, ctx.omega.R0, ctx.cfg.hMax).argmax;
  out.hC0 = er_scan(col, ctx.delta.C0, ctx.cfg.cC0, ctx.omega.C0, ctx.cfg.hMax).argmax;
  pair_block(out.hR0, out.hC0);
  return out;
}

struct NodePass {
  Ranks ranks;  // node trend ranks with re-estimated stationary ranks
  ErScan rowScan, colScan;
};

// One pipeline pass started at (hR1, hC1), followed by the diamond-spectrum
// ER scans that refine the trend ranks.
NodePass node_pass(const Context& ctx, RankNode node) {
  const MatrixPanel& panel = ctx.panel;
  const Ranks trend{node.hR1, node.hC1, 0, 0};
  const StageOneEstimate s1 = stage_one(panel, trend, ctx.specR, ctx.specC);
  StationaryPass sp = stationary_pass(ctx, s1.R1hat, s1.C1hat);
  const Ranks ranks{node.hR1, node.hC1, sp.hR0, sp.hC0};

  StationaryEstimate st;
  st.R0hat = top_k_loadings(sp.specRperp, ranks.hR0, panel.p1());
  st.C0hat = top_k_loadings(sp.specCperp, ranks.hC0, panel.p2());
  st.F0hat = stationary_factors(panel, st.R0hat, st.C0hat, sp.pr, sp.pc);
  const RefinedEstimate ref = filtered_projection(panel, s1, st, ranks);

  NodePass out;
  out.ranks = ranks;
  out.rowScan = er_scan(ref.specRdiamond.eigenvalues, ctx.delta.R1d, ctx.cfg.cR1d, ctx.omega.R1d, ctx.cfg.hMax);
  out.colScan = er_scan(ref.specCdiamond.eigenvalues, ctx.delta.C1d, ctx.cfg.cC1d, ctx.omega.C1d, ctx.cfg.hMax);
  return out;
}

RankNode refined_node(const NodePass& pass, int hMax) {
  return RankNode{std::clamp(pass.rowScan.argmax, 1, hMax), std::clamp(pass.colScan.argmax, 1, hMax)};
}

Ranks static_ranks(const Context& ctx) {
  const ErConfig& cfg = ctx.cfg;
  Ranks r;
  r.hR1 = er_scan(ctx.specR.eigenvalues, ctx.delta.R1, cfg.cR1, ctx.omega.R1, cfg.hMax).argmax;
  r.hC1 = er_scan(ctx.specC.eigenvalues, ctx.delta.C1, cfg.cC1, ctx.omega.C1, cfg.hMax).argmax;
  pair_block(r.hR1, r.hC1);
  const StageOneEstimate s1 = stage_one(ctx.panel, Ranks{r.hR1, r.hC1, 0, 0}, ctx.specR, ctx.specC);
  const StationaryPass sp = stationary_pass(ctx, s1.R1hat, s1.C1hat);
  r.hR0 = sp.hR0;
  r.hC0 = sp.hC0;
  return r;
}

It0Result it0_from(const Context& ctx, const Ranks& start) {
  if (!start.has_trend()) return It0Result{start, true, 0};
  RankNode cur{start.hR1, start.hC1};
  for (int iter = 1; iter <= ctx.cfg.maxIter; ++iter) {
    NodePass pass;
    try {
      pass = node_pass(ctx, cur);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateAntiProjection) throw;
      break;
    }
    const RankNode next = refined_node(pass, ctx.cfg.hMax);
    if (next == cur) return It0Result{pass.ranks, true, iter};
    cur = next;
  }
  return It0Result{start, false, ctx.cfg.maxIter};
}

RankGraph graph_from(const Context& ctx) {
  const int hMax = ctx.cfg.hMax;
  std::vector<RankEdge> edges;
  edges.reserve(static_cast<std::size_t>(hMax * hMax));
  for (int hC1 = 1; hC1 <= hMax; ++hC1) {
    for (int hR1 = 1; hR1 <= hMax; ++hR1) {
      RankEdge e;
      e.from = RankNode{hR1, hC1};
      try {
        const NodePass pass = node_pass(ctx, e.from);
        e.to = refined_node(pass, hMax);
        e.erValue = 0.5 * (pass.rowScan.max_value() + pass.colScan.max_value());
        e.hR0 = pass.ranks.hR0;
        e.hC0 = pass.ranks.hC0;
        e.rowRatios = pass.rowScan.ratios;
        e.colRatios = pass.colScan.ratios;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::DegenerateAntiProjection) throw;
        e.to = e.from;
        e.degenerate = true;
      }
      edges.push_back(std::move(e));
    }
  }
  return RankGraph(hMax, std::move(edges));
}

// ER objective of `target` evaluated with the scans stored at `at`.
double objective_at(const RankEdge& at, RankNode target) {
  if (at.rowRatios.empty() || at.colRatios.empty()) return at.erValue;
  return 0.5 * (at.rowRatios.at(static_cast<std::size_t>(target.hR1)) +
                at.colRatios.at(static_cast<std::size_t>(target.hC1)));
}

}  // namespace

DeltaSequences delta_sequences(Index p1, Index p2, Index T) {
  if (p1 < 1 || p2 < 1 || T < 1) fail(ErrorCode::InvalidInput, "dimensions must be at least 1");
  const double a = as_double(p1), b = as_double(p2), t = as_double(T);
  const double pmin = std::min(a, b);
  DeltaSequences d;
  d.R1 = 1.0 / t;
  d.C1 = 1.0 / t;
  const double common = 1.0 / (std::sqrt(pmin) * std::pow(t, 1.5)) + 1.0 / (t * t) + 1.0 / (std::sqrt(a * b) * t);
  d.R1d = common + 1.0 / (b * t);
  d.C1d = common + 1.0 / (a * t);
  d.R0 = 1.0 / std::sqrt(b * t) + 1.0 / (a * b);
  d.C0 = 1.0 / std::sqrt(a * t) + 1.0 / (a * b);
  return d;
}

double mock_eigenvalue(double delta, Index p1, Index p2, Index T, double scale) {
  if (!(delta > 0.0)) fail(ErrorCode::InvalidInput, "delta must be positive");
  const Index m = std::min({p1, p2, T});
  if (m < 2) fail(ErrorCode::InvalidInput, "mock eigenvalue needs min(p1, p2, T) >= 2");
  return scale * delta * std::log(as_double(m));
}

ErScan er_scan(const Vector& eigenvalues, double delta, double c, double omega, int hMax) {
  if (hMax < 0) fail(ErrorCode::InvalidConfig, "hMax must be nonnegative");
  if (eigenvalues.size() < hMax + 1) {
    fail(ErrorCode::RankTooLarge, "hMax=" + std::to_string(hMax) + " needs at least " + std::to_string(hMax + 1) +
                                      " eigenvalues, got " + std::to_string(eigenvalues.size()));
  }
  const double pen = c * delta;
  auto lambda = [&](int j) { return j == 0 ? omega : std::max(eigenvalues[j - 1], 0.0); };
  ErScan out;
  out.ratios.resize(static_cast<std::size_t>(hMax + 1));
  for (int j = 0; j <= hMax; ++j) {
    out.ratios[static_cast<std::size_t>(j)] = lambda(j) / (lambda(j + 1) + pen);
    if (out.ratios[static_cast<std::size_t>(j)] > out.ratios[static_cast<std::size_t>(out.argmax)]) out.argmax = j;
  }
  return out;
}

int er_argmax(const Spectrum& spectrum, double delta, double c, double omega, int hMax) {
  return er_scan(spectrum.eigenvalues, delta, c, omega, hMax).argmax;
}

void ErConfig::validate_for(Index p1, Index p2, Index T) const {
  if (hMax < 1) fail(ErrorCode::InvalidConfig, "hMax must be positive");
  if (maxIter < 1) fail(ErrorCode::InvalidConfig, "maxIter must be positive");
  for (double c : {cR1, cC1, cR1d, cC1d, cR0, cC0}) {
    if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorCode::InvalidConfig, "ER constants must be positive and finite");
  }
  if (!(omegaScale > 0.0) || !std::isfinite(omegaScale)) fail(ErrorCode::InvalidConfig, "omega scale must be positive");
  if (hMax >= std::min({p1, p2, T})) {
    fail(ErrorCode::InvalidConfig, "hMax=" + std::to_string(hMax) + " must be below min(p1, p2, T)=" +
                                       std::to_string(std::min({p1, p2, T})));
  }
}

ErConfig ErConfig::with_constant(double c) const {
  ErConfig out = *this;
  out.cR1 = out.cC1 = out.cR1d = out.cC1d = out.cR0 = out.cC0 = c;
  return out;
}

std::string_view to_string(Criterion c) noexcept {
  switch (c) {
    case Criterion::Static: return "static";
    case Criterion::It0: return "it0";
    case Criterion::It1: return "it1";
    case Criterion::It2: return "it2";
  }
  return "unknown";
}

Criterion parse_criterion(std::string_view text) {
  if (text == "static") return Criterion::Static;
  if (text == "it0") return Criterion::It0;
  if (text == "it1") return Criterion::It1;
  if (text == "it2") return Criterion::It2;
  fail(ErrorCode::InvalidConfig, "unknown criterion '" + std::string(text) + "' (expected static, it0, it1 or it2)");
}

RankGraph::RankGraph(int hMax, std::vector<RankEdge> edges) : hMax_(hMax), edges_(std::move(edges)) {
  if (hMax < 1) fail(ErrorCode::InvalidInput, "graph needs hMax >= 1");
  if (edges_.size() != static_cast<std::size_t>(hMax * hMax)) {
    fail(ErrorCode::InvalidInput, "graph with hMax=" + std::to_string(hMax) + " needs " + std::to_string(hMax * hMax) +
                                      " edges, got " + std::to_string(edges_.size()));
  }
  std::vector<bool> seen(edges_.size(), false);
  for (const RankEdge& e : edges_) {
    for (const RankNode& n : {e.from, e.to}) {
      if (n.hR1 < 1 || n.hR1 > hMax || n.hC1 < 1 || n.hC1 > hMax) {
        fail(ErrorCode::InvalidInput, "graph node (" + std::to_string(n.hR1) + "," + std::to_string(n.hC1) +
                                          ") outside {1.." + std::to_string(hMax) + "}^2");
      }
    }
    const std::size_t k = index_of(e.from);
    if (seen[k]) fail(ErrorCode::InvalidInput, "graph node has more than one outgoing edge");
    seen[k] = true;
  }
  std::sort(edges_.begin(), edges_.end(),
            [this](const RankEdge& a, const RankEdge& b) { return index_of(a.from) < index_of(b.from); });
  for (RankEdge& e : edges_) {
    e.fixedPoint = e.to == e.from && !e.degenerate;
    if (e.fixedPoint) fixed_.push_back(e.from);
  }
}

std::size_t RankGraph::index_of(RankNode node) const {
  if (node.hR1 < 1 || node.hR1 > hMax_ || node.hC1 < 1 || node.hC1 > hMax_) {
    fail(ErrorCode::InvalidQuery, "node outside the rank grid");
  }
  return static_cast<std::size_t>((node.hC1 - 1) * hMax_ + (node.hR1 - 1));
}

const RankEdge& RankGraph::edge(RankNode node) const { return edges_[index_of(node)]; }

std::vector<RankNode> RankGraph::basin(RankNode target) const {
  std::vector<RankNode> out;
  for (const RankEdge& start : edges_) {
    RankNode cur = start.from;
    for (std::size_t step = 0; step <= edges_.size(); ++step) {
      if (cur == target) {
        out.push_back(start.from);
        break;
      }
      const RankNode next = edge(cur).to;
      if (next == cur) break;
      cur = next;
    }
  }
  return out;
}

Ranks estimate_ranks_static(const MatrixPanel& panel, const ErConfig& cfg) {
  return static_ranks(make_context(panel, cfg));
}

It0Result estimate_ranks_it0(const MatrixPanel& panel, const ErConfig& cfg) {
  const Context ctx = make_context(panel, cfg);
  return it0_from(ctx, static_ranks(ctx));
}

RankGraph build_rank_graph(const MatrixPanel& panel, const ErConfig& cfg) {
  return graph_from(make_context(panel, cfg));
}

Ranks choose_it1(const RankGraph& graph, const It0Result& it0, bool clusterFirst) {
  if (it0.converged || graph.fixedPoints().empty()) return it0.ranks;
  struct Score {
    RankNode node;
    double er;
    std::size_t size;
  };
  std::vector<Score> scores;
  for (const RankNode& c : graph.fixedPoints()) {
    const std::vector<RankNode> basin = graph.basin(c);
    double sum = 0.0;
    for (const RankNode& n : basin) sum += objective_at(graph.edge(n), c);
    scores.push_back(Score{c, sum / static_cast<double>(basin.size()), basin.size()});
  }
  auto better = [clusterFirst](const Score& a, const Score& b) {
    if (clusterFirst) {
      if (a.size != b.size) return a.size > b.size;
      return a.er > b.er;
    }
    if (a.er != b.er) return a.er > b.er;
    return a.size > b.size;
  };
  Score best = scores.front();
  for (const Score& s : scores)
    if (better(s, best)) best = s;
  const RankEdge& e = graph.edge(best.node);
  return Ranks{best.node.hR1, best.node.hC1, e.hR0, e.hC0};
}

Ranks choose_it2(const RankGraph& graph, const It0Result& it0) {
  if (it0.converged || graph.fixedPoints().empty()) return it0.ranks;
  int hR1 = 0, hC1 = 0;
  double bestRow = -1.0, bestCol = -1.0;
  for (const RankNode& c : graph.fixedPoints()) {
    const RankEdge& e = graph.edge(c);
    const double row = e.rowRatios.empty() ? e.erValue : e.rowRatios.at(static_cast<std::size_t>(c.hR1));
    const double col = e.colRatios.empty() ? e.erValue : e.colRatios.at(static_cast<std::size_t>(c.hC1));
    if (row > bestRow) {
      bestRow = row;
      hR1 = c.hR1;
    }
    if (col > bestCol) {
      bestCol = col;
      hC1 = c.hC1;
    }
  }
  return Ranks{hR1, hC1, it0.ranks.hR0, it0.ranks.hC0};
}

const Ranks& RankSelection::get(Criterion c) const {
  switch (c) {
    case Criterion::Static: return staticRanks;
    case Criterion::It0: return it0.ranks;
    case Criterion::It1: return it1;
    case Criterion::It2: return it2;
  }
  return staticRanks;
}

RankSelection select_all(const MatrixPanel& panel, const ErConfig& cfg) {
  const Context ctx = make_context(panel, cfg);
  RankSelection out;
  out.staticRanks = static_ranks(ctx);
  out.it0 = it0_from(ctx, out.staticRanks);
  if (out.it0.converged) {
    out.it1 = out.it2 = out.it0.ranks;
    return out;
  }
  out.graph = graph_from(ctx);
  out.it1 = choose_it1(*out.graph, out.it0, cfg.it1ClusterFirst);
  out.it2 = choose_it2(*out.graph, out.it0);
  return out;
}

Ranks estimate_ranks_it1(const MatrixPanel& panel, const ErConfig& cfg) { return select_all(panel, cfg).it1; }
Ranks estimate_ranks_it2(const MatrixPanel& panel, const ErConfig& cfg) { return select_all(panel, cfg).it2; }

Ranks select_ranks(const MatrixPanel& panel, const ErConfig& cfg, Criterion criterion) {
  switch (criterion) {
    case Criterion::Static: return estimate_ranks_static(panel, cfg);
    case Criterion::It0: return estimate_ranks_it0(panel, cfg).ranks;
    case Criterion::It1: return estimate_ranks_it1(panel, cfg);
    case Criterion::It2: return estimate_ranks_it2(panel, cfg);
  }
  return estimate_ranks_static(panel, cfg);
}

ErConfig calibrate_constants(const MatrixPanel& panel, const ErConfig& cfg, const CalibrationGrid& grid) {
  if (grid.constants.empty()) fail(ErrorCode::InvalidConfig, "calibration needs at least one constant");
  for (double c : grid.constants)
    if (!(c > 0.0)) fail(ErrorCode::InvalidConfig, "calibration constants must be positive");
  if (grid.subsamples.empty()) fail(ErrorCode::InvalidConfig, "calibration needs at least one subsample spec");
  cfg.validate_for(panel.p1(), panel.p2(), panel.T());

  const Index p1 = panel.p1(), p2 = panel.p2(), T = panel.T();
  std::vector<MatrixPanel> subs;
  for (std::size_t s = 0; s < grid.subsamples.size(); ++s) {
    const SubsampleSpec& spec = grid.subsamples[s];
    if (!(spec.fraction > 0.0 && spec.fraction <= 1.0) || spec.count < 1) {
      fail(ErrorCode::InvalidConfig, "subsample fraction must be in (0, 1] and count positive");
    }
    const auto len = static_cast<Index>(std::lround(spec.fraction * as_double(T)));
    const auto rows = static_cast<Index>(std::lround(spec.fraction * as_double(p1)));
    const auto cols = static_cast<Index>(std::lround(spec.fraction * as_double(p2)));
    if (len <= cfg.hMax || rows <= cfg.hMax || cols <= cfg.hMax) {
      fail(ErrorCode::InvalidConfig, "subsample fraction " + std::to_string(spec.fraction) +
                                         " leaves a panel too small for hMax=" + std::to_string(cfg.hMax));
    }
    for (int k = 0; k < spec.count; ++k) {
      // Contiguous time block.
      const Index start = spec.count == 1 ? 0 : (T - len) * k / (spec.count - 1);
      subs.emplace_back(std::vector<Matrix>(panel.frames().begin() + start, panel.frames().begin() + start + len));

      // Random rows and columns over the full sample.
      Rng rng(combine_seed(grid.seed, {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(k)}));
      std::vector<Index> ri(static_cast<std::size_t>(p1)), ci(static_cast<std::size_t>(p2)), rs, cs;
      std::iota(ri.begin(), ri.end(), Index{0});
      std::iota(ci.begin(), ci.end(), Index{0});
      std::sample(ri.begin(), ri.end(), std::back_inserter(rs), rows, rng);
      std::sample(ci.begin(), ci.end(), std::back_inserter(cs), cols, rng);
      std::vector<Matrix> frames;
      frames.reserve(static_cast<std::size_t>(T));
      for (const Matrix& x : panel.frames()) frames.emplace_back(x(rs, cs));
      subs.emplace_back(std::move(frames));
    }
  }

  std::vector<double> constants = grid.constants;
  if (constants.size() == 1) return cfg.with_constant(constants.front());
  std::sort(constants.begin(), constants.end());
  for (double c : constants) {
    const ErConfig trial = cfg.with_constant(c);
    bool stable = true;
    std::optional<Ranks> first;
    for (const MatrixPanel& sub : subs) {
      Ranks r;
      try {
        r = estimate_ranks_static(sub, trial);
      } catch (const Error&) {
        stable = false;
        break;
      }
      if (!first) first = r;
      else if (!(r == *first)) {
        stable = false;
        break;
      }
    }
    if (stable) return trial;
  }
  return cfg.with_constant(1.0);
}

AutoEstimate estimate_pipeline_auto(const MatrixPanel& panel, const ErConfig& cfg, Criterion criterion) {
  AutoEstimate out;
  out.ranks = select_ranks(panel, cfg, criterion);
  out.output = estimate_pipeline(panel, out.ranks);
  return out;
}

}  // namespace nsmfm
