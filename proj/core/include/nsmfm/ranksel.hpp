#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nsmfm/estimators.hpp"
#include "nsmfm/linalg.hpp"
#include "nsmfm/model.hpp"

namespace nsmfm {

// Penalty sequences of the eigenvalue-ratio criteria.
struct DeltaSequences {
  double R1 = 0.0;   // flattened, rows
  double C1 = 0.0;   // flattened, columns
  double R1d = 0.0;  // filtered projection, rows
  double C1d = 0.0;  // filtered projection, columns
  double R0 = 0.0;   // anti-projected, rows
  double C0 = 0.0;   // anti-projected, columns
};

DeltaSequences delta_sequences(Index p1, Index p2, Index T);

// omega = scale * delta * log(min(p1, p2, T)); omega -> 0 and omega / delta -> inf.
double mock_eigenvalue(double delta, Index p1, Index p2, Index T, double scale = 1.0);

// ratios[j] = lambda_j / (lambda_{j+1} + c * delta) for j = 0..hMax with
// lambda_0 = omega and lambda_j the j-th largest eigenvalue clipped at 0.
struct ErScan {
  std::vector<double> ratios;
  int argmax = 0;

  [[nodiscard]] double max_value() const { return ratios[static_cast<std::size_t>(argmax)]; }
  [[nodiscard]] double at(int j) const { return ratios[static_cast<std::size_t>(j)]; }
};

ErScan er_scan(const Vector& eigenvalues, double delta, double c, double omega, int hMax);

// Ties go to the smallest j.
int er_argmax(const Spectrum& spectrum, double delta, double c, double omega, int hMax);

// How the anti-projected spectra enter the stationary-rank criterion.
enum class StationaryErScale {
  // Eigenvalues of M_{R1,perp}, M_{C1,perp} exactly as used by the estimator.
  AsEstimated,
  // Eigenvalues multiplied by p2 (rows) and p1 (columns), i.e. the
  // (p1 p2 T)^{-1} normalization under which the signal eigenvalues stay
  // bounded away from zero.
  Balanced,
};

struct ErConfig {
  int hMax = 8;
  double cR1 = 1.0;
  double cC1 = 1.0;
  double cR1d = 1.0;
  double cC1d = 1.0;
  double cR0 = 1.0;
  double cC0 = 1.0;
  double omegaScale = 1.0;
  int maxIter = 10;
  // it1 ranks candidates by basin size before average ER value.
  bool it1ClusterFirst = false;
  StationaryErScale stationaryScale = StationaryErScale::Balanced;

  void validate_for(Index p1, Index p2, Index T) const;
  [[nodiscard]] ErConfig with_constant(double c) const;
};

enum class Criterion { Static, It0, It1, It2 };

std::string_view to_string(Criterion c) noexcept;
Criterion parse_criterion(std::string_view text);

struct It0Result {
  Ranks ranks;
  bool converged = false;
  int iterations = 0;
};

struct RankNode {
  int hR1 = 0;
  int hC1 = 0;
  friend bool operator==(const RankNode&, const RankNode&) = default;
};

struct RankEdge {
  RankNode from;
  RankNode to;
  double erValue = 0.0;  // mean of the row and column ER maxima at this node
  bool fixedPoint = false;
  bool degenerate = false;
  // Stationary ranks re-estimated with the node's trend ranks.
  int hR0 = 0;
  int hC0 = 0;
  std::vector<double> rowRatios;
  std::vector<double> colRatios;
};

// Out-degree-1 graph over {1..hMax}^2. Nodes are ordered hC1-major, so
// node k (1-based) is (hR1, hC1) = (1 + (k-1) % hMax, 1 + (k-1) / hMax).
class RankGraph {
 public:
  RankGraph() = default;
  RankGraph(int hMax, std::vector<RankEdge> edges);

  [[nodiscard]] int hMax() const noexcept { return hMax_; }
  [[nodiscard]] const std::vector<RankEdge>& edges() const noexcept { return edges_; }
  [[nodiscard]] const std::vector<RankNode>& fixedPoints() const noexcept { return fixed_; }
  [[nodiscard]] const RankEdge& edge(RankNode node) const;
  [[nodiscard]] std::size_t index_of(RankNode node) const;

  // Nodes whose forward path reaches `target` (including target itself).
  [[nodiscard]] std::vector<RankNode> basin(RankNode target) const;

 private:
  int hMax_ = 0;
  std::vector<RankEdge> edges_;
  std::vector<RankNode> fixed_;
};

Ranks estimate_ranks_static(const MatrixPanel& panel, const ErConfig& cfg);
It0Result estimate_ranks_it0(const MatrixPanel& panel, const ErConfig& cfg);
RankGraph build_rank_graph(const MatrixPanel& panel, const ErConfig& cfg);
Ranks estimate_ranks_it1(const MatrixPanel& panel, const ErConfig& cfg);
Ranks estimate_ranks_it2(const MatrixPanel& panel, const ErConfig& cfg);

// Candidate choice given an it0 result and the graph.
Ranks choose_it1(const RankGraph& graph, const It0Result& it0, bool clusterFirst = false);
Ranks choose_it2(const RankGraph& graph, const It0Result& it0);

// All four criteria with shared intermediate work. The graph is only built
// when it0 does not converge.
struct RankSelection {
  Ranks staticRanks;
  It0Result it0;
  std::optional<RankGraph> graph;
  Ranks it1;
  Ranks it2;

  [[nodiscard]] const Ranks& get(Criterion c) const;
};

RankSelection select_all(const MatrixPanel& panel, const ErConfig& cfg);
Ranks select_ranks(const MatrixPanel& panel, const ErConfig& cfg, Criterion criterion);

struct SubsampleSpec {
  double fraction = 0.5;
  int count = 2;
};

struct CalibrationGrid {
  std::vector<SubsampleSpec> subsamples{{0.5, 2}, {0.75, 2}};
  std::vector<double> constants{0.1, 0.1778279410, 0.3162277660, 0.5623413252, 1.0,
                                1.7782794100, 3.1622776602, 5.6234132519, 10.0};
  std::uint64_t seed = 0;
};

// Smallest constant (applied to all six) whose static ranks agree across
// contiguous time blocks and random row/column subsets; c = 1 otherwise.
ErConfig calibrate_constants(const MatrixPanel& panel, const ErConfig& cfg, const CalibrationGrid& grid);

// Pipeline with ranks chosen by the given criterion.
struct AutoEstimate {
  Ranks ranks;
  EstimationOutput output;
};

AutoEstimate estimate_pipeline_auto(const MatrixPanel& panel, const ErConfig& cfg, Criterion criterion);

}  // namespace nsmfm
