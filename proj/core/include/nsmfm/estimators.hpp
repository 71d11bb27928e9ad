#pragma once

#include <utility>

#include "nsmfm/linalg.hpp"
#include "nsmfm/model.hpp"

namespace nsmfm {

struct StageOneEstimate {
  Loadings R1hat, C1hat;
  Spectrum specR, specC;  // full spectra of the second-moment matrices used
  FactorPath F1hat;
};

struct StationaryEstimate {
  Loadings R0hat, C0hat;
  FactorPath F0hat;
  Spectrum specRperp, specCperp;
};

struct RefinedEstimate {
  Loadings R1tilde, C1tilde;
  FactorPath F1tilde;
  Spectrum specRdiamond, specCdiamond;
};

struct EstimationOutput {
  StageOneEstimate stage1;
  StationaryEstimate stationary;
  RefinedEstimate refined;
  StationaryEstimate secondRound;
  Ranks ranksUsed;
};

// M_R1 = (p1 p2 T^2)^{-1} sum X_t X_t',  M_C1 = (p1 p2 T^2)^{-1} sum X_t' X_t.
std::pair<SymmetricMatrix, SymmetricMatrix> flattened_covariances(const MatrixPanel& panel);

// Flattened estimators of R1, C1 and F1_t = (p1 p2)^{-1} R1hat' X_t C1hat.
StageOneEstimate stage_one(const MatrixPanel& panel, const Ranks& ranks);

// Same as stage_one but reuses precomputed flattened spectra (they do not
// depend on the ranks).
StageOneEstimate stage_one(const MatrixPanel& panel, const Ranks& ranks, Spectrum specR, Spectrum specC);

// One projection pass onto the stage-one loadings without removing the
// stationary component first.
StageOneEstimate dagger_estimate(const MatrixPanel& panel, const StageOneEstimate& stage1, const Ranks& ranks);

// Second moments of the data anti-projected onto the complements of
// the given trend loadings: (p1 p2^2 T)^{-1} sum (X P_C)(X P_C)' and
// (p1^2 p2 T)^{-1} sum (X' P_R)(X' P_R)'.
std::pair<SymmetricMatrix, SymmetricMatrix> anti_projected_covariances(const MatrixPanel& panel,
                                                                       const Projector& rowComplement,
                                                                       const Projector& colComplement);

// Least-squares stationary factors
//   F0_t = (R0' P_R R0)^{-1} R0' P_R X_t P_C C0 (C0' P_C C0)^{-1},
// the Kronecker-structured solve evaluated through the two small Gram
// systems. Throws DegenerateAntiProjection when either Gram is singular.
FactorPath stationary_factors(const MatrixPanel& panel, const Loadings& R0, const Loadings& C0,
                              const Projector& rowComplement, const Projector& colComplement);

StationaryEstimate antiproject_stationary(const MatrixPanel& panel, const StageOneEstimate& stage1,
                                          const Ranks& ranks);

// Removes the estimated stationary component and projects onto the
// stage-one loadings of the other side.
RefinedEstimate filtered_projection(const MatrixPanel& panel, const StageOneEstimate& stage1,
                                    const StationaryEstimate& stationary, const Ranks& ranks);

// Anti-projection repeated with the refined trend loadings. The factors
// reuse the first-round stationary loadings.
StationaryEstimate second_round_stationary(const MatrixPanel& panel, const RefinedEstimate& refined,
                                           const StationaryEstimate& stationary, const Ranks& ranks);

EstimationOutput estimate_pipeline(const MatrixPanel& panel, const Ranks& ranks);

// Common component R F_t C' for each t.
MatrixPanel common_component(const Loadings& R, const FactorPath& F, const Loadings& C);

}  // namespace nsmfm
