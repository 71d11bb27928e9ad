#include "nsmfm/estimators.hpp"

#include <cmath>
#include <string>

#include "nsmfm/summation.hpp"

namespace nsmfm {

namespace {

constexpr double kGramDegeneracy = 1e-10;

double as_double(Index n) { return static_cast<double>(n); }

// (1/scale) * sum_t Y_t Y_t' with Y_t = factor(t) of size dim x k.
template <class Factor>
SymmetricMatrix outer_sum(Index T, Index dim, double scale, const Factor& factor) {
  Matrix lower = cascade_sum(0, T, dim, dim, [&](Index t, Matrix& acc) {
    acc.selfadjointView<Eigen::Lower>().rankUpdate(factor(t));
  });
  Matrix full = lower.selfadjointView<Eigen::Lower>();
  return SymmetricMatrix(full / scale);
}

FactorPath sandwich_path(const MatrixPanel& panel, const Loadings& R, const Loadings& C, double scale) {
  std::vector<Matrix> frames;
  frames.reserve(static_cast<std::size_t>(panel.T()));
  for (Index t = 0; t < panel.T(); ++t) {
    frames.emplace_back((R.matrix().transpose() * panel[t] * C.matrix()) / scale);
  }
  return FactorPath(R.h(), C.h(), std::move(frames));
}

Matrix gram_inverse_checked(const Matrix& projected, const Loadings& raw, const char* side) {
  const Index h = raw.h();
  const Matrix gram = projected.transpose() * projected;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  // For sqrt(p)-normalized loadings the reference scale is p, and
  // gram / p holds the squared cosines of the principal angles between
  // the stationary loadings and the trend complement.
  const double reference = raw.matrix().squaredNorm() / as_double(h);
  const double lo = es.eigenvalues().minCoeff();
  if (!(reference > 0.0) || !(lo > kGramDegeneracy * reference)) {
    fail(ErrorCode::DegenerateAntiProjection,
         std::string(side) + " stationary loadings are (numerically) inside the trend loading space; "
                             "smallest Gram eigenvalue " + std::to_string(lo) + " vs scale " + std::to_string(reference));
  }
  return gram.ldlt().solve(Matrix::Identity(h, h));
}

void require_ranks(const MatrixPanel& panel, const Ranks& ranks) { ranks.validate_for(panel.p1(), panel.p2()); }

template <class Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + stage + ": " + e.what());
  }
}

}  // namespace

std::pair<SymmetricMatrix, SymmetricMatrix> flattened_covariances(const MatrixPanel& panel) {
  const Index p1 = panel.p1(), p2 = panel.p2(), T = panel.T();
  if (T < 2) fail(ErrorCode::InvalidInput, "flattened covariances need T >= 2");
  const double scale = as_double(p1) * as_double(p2) * as_double(T) * as_double(T);
  auto row = outer_sum(T, p1, scale, [&](Index t) -> const Matrix& { return panel[t]; });
  auto col = outer_sum(T, p2, scale, [&](Index t) { return panel[t].transpose(); });
  return {std::move(row), std::move(col)};
}

StageOneEstimate stage_one(const MatrixPanel& panel, const Ranks& ranks, Spectrum specR, Spectrum specC) {
  require_ranks(panel, ranks);
  StageOneEstimate out;
  out.R1hat = top_k_loadings(specR, ranks.hR1, panel.p1());
  out.C1hat = top_k_loadings(specC, ranks.hC1, panel.p2());
  out.specR = std::move(specR);
  out.specC = std::move(specC);
  out.F1hat = sandwich_path(panel, out.R1hat, out.C1hat, as_double(panel.p1()) * as_double(panel.p2()));
  return out;
}

StageOneEstimate stage_one(const MatrixPanel& panel, const Ranks& ranks) {
  require_ranks(panel, ranks);
  auto [mr, mc] = flattened_covariances(panel);
  return stage_one(panel, ranks, sym_eig_desc(mr), sym_eig_desc(mc));
}

StageOneEstimate dagger_estimate(const MatrixPanel& panel, const StageOneEstimate& stage1, const Ranks& ranks) {
  require_ranks(panel, ranks);
  const Index p1 = panel.p1(), p2 = panel.p2(), T = panel.T();
  const double tt = as_double(T) * as_double(T);
  const Matrix& c1 = stage1.C1hat.matrix();
  const Matrix& r1 = stage1.R1hat.matrix();
  if (c1.rows() != p2 || r1.rows() != p1) fail(ErrorCode::ShapeError, "stage-one loadings do not match the panel");

  const auto mr = outer_sum(T, p1, as_double(p1) * as_double(p2) * as_double(p2) * tt,
                            [&](Index t) { return Matrix(panel[t] * c1); });
  const auto mc = outer_sum(T, p2, as_double(p1) * as_double(p1) * as_double(p2) * tt,
                            [&](Index t) { return Matrix(panel[t].transpose() * r1); });
  StageOneEstimate out;
  out.specR = sym_eig_desc(mr);
  out.specC = sym_eig_desc(mc);
  out.R1hat = top_k_loadings(out.specR, ranks.hR1, p1);
  out.C1hat = top_k_loadings(out.specC, ranks.hC1, p2);
  out.F1hat = sandwich_path(panel, out.R1hat, out.C1hat, as_double(p1) * as_double(p2));
  return out;
}

std::pair<SymmetricMatrix, SymmetricMatrix> anti_projected_covariances(const MatrixPanel& panel,
                                                                       const Projector& rowComplement,
                                                                       const Projector& colComplement) {
  const Index p1 = panel.p1(), p2 = panel.p2(), T = panel.T();
  if (rowComplement.dim() != p1 || colComplement.dim() != p2) {
    fail(ErrorCode::ShapeError, "projector dimensions do not match the panel");
  }
  const Matrix& pr = rowComplement.matrix();
  const Matrix& pc = colComplement.matrix();
  auto row = outer_sum(T, p1, as_double(p1) * as_double(p2) * as_double(p2) * as_double(T),
                       [&](Index t) { return Matrix(panel[t] * pc); });
  auto col = outer_sum(T, p2, as_double(p1) * as_double(p1) * as_double(p2) * as_double(T),
                       [&](Index t) { return Matrix(panel[t].transpose() * pr); });
  return {std::move(row), std::move(col)};
}

FactorPath stationary_factors(const MatrixPanel& panel, const Loadings& R0, const Loadings& C0,
                              const Projector& rowComplement, const Projector& colComplement) {
  const Index T = panel.T();
  if (R0.empty() || C0.empty()) return FactorPath::zeros(R0.h(), C0.h(), T);
  if (R0.p() != panel.p1() || C0.p() != panel.p2()) fail(ErrorCode::ShapeError, "stationary loadings do not match the panel");

  const Matrix a = rowComplement.matrix() * R0.matrix();  // P_R R0
  const Matrix b = colComplement.matrix() * C0.matrix();  // P_C C0
  const Matrix row_inv = gram_inverse_checked(a, R0, "row");
  const Matrix col_inv = gram_inverse_checked(b, C0, "column");
  const Matrix left = row_inv * a.transpose();
  const Matrix right = b * col_inv;

  std::vector<Matrix> frames;
  frames.reserve(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) frames.emplace_back(left * panel[t] * right);
  return FactorPath(R0.h(), C0.h(), std::move(frames));
}

StationaryEstimate antiproject_stationary(const MatrixPanel& panel, const StageOneEstimate& stage1,
                                          const Ranks& ranks) {
  require_ranks(panel, ranks);
  const Projector pr = orth_projector_complement(stage1.R1hat);
  const Projector pc = orth_projector_complement(stage1.C1hat);
  auto [mr, mc] = anti_projected_covariances(panel, pr, pc);

  StationaryEstimate out;
  out.specRperp = sym_eig_desc(mr);
  out.specCperp = sym_eig_desc(mc);
  out.R0hat = top_k_loadings(out.specRperp, ranks.hR0, panel.p1());
  out.C0hat = top_k_loadings(out.specCperp, ranks.hC0, panel.p2());
  out.F0hat = stationary_factors(panel, out.R0hat, out.C0hat, pr, pc);
  return out;
}

RefinedEstimate filtered_projection(const MatrixPanel& panel, const StageOneEstimate& stage1,
                                    const StationaryEstimate& stationary, const Ranks& ranks) {
  require_ranks(panel, ranks);
  const Index p1 = panel.p1(), p2 = panel.p2(), T = panel.T();
  RefinedEstimate out;
  if (!ranks.has_trend()) {
    out.R1tilde = Loadings::none(p1);
    out.C1tilde = Loadings::none(p2);
    out.F1tilde = FactorPath::zeros(0, 0, T);
    return out;
  }

  const Matrix& r0 = stationary.R0hat.matrix();
  const Matrix& c0 = stationary.C0hat.matrix();
  const FactorPath& f0 = stationary.F0hat;
  std::vector<Matrix> filtered;
  filtered.reserve(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) {
    filtered.emplace_back(panel[t] - (r0 * f0[t]) * c0.transpose());
  }

  const double tt = as_double(T) * as_double(T);
  const Matrix& c1 = stage1.C1hat.matrix();
  const Matrix& r1 = stage1.R1hat.matrix();
  const auto mr = outer_sum(T, p1, as_double(p1) * as_double(p2) * as_double(p2) * tt,
                            [&](Index t) { return Matrix(filtered[static_cast<std::size_t>(t)] * c1); });
  const auto mc = outer_sum(T, p2, as_double(p1) * as_double(p1) * as_double(p2) * tt,
                            [&](Index t) { return Matrix(filtered[static_cast<std::size_t>(t)].transpose() * r1); });
  out.specRdiamond = sym_eig_desc(mr);
  out.specCdiamond = sym_eig_desc(mc);
  out.R1tilde = top_k_loadings(out.specRdiamond, ranks.hR1, p1);
  out.C1tilde = top_k_loadings(out.specCdiamond, ranks.hC1, p2);

  const double scale = as_double(p1) * as_double(p2);
  std::vector<Matrix> frames;
  frames.reserve(static_cast<std::size_t>(T));
  for (const Matrix& x : filtered) {
    frames.emplace_back((out.R1tilde.matrix().transpose() * x * out.C1tilde.matrix()) / scale);
  }
  out.F1tilde = FactorPath(ranks.hR1, ranks.hC1, std::move(frames));
  return out;
}

StationaryEstimate second_round_stationary(const MatrixPanel& panel, const RefinedEstimate& refined,
                                           const StationaryEstimate& stationary, const Ranks& ranks) {
  require_ranks(panel, ranks);
  const Projector pr = orth_projector_complement(refined.R1tilde);
  const Projector pc = orth_projector_complement(refined.C1tilde);
  auto [mr, mc] = anti_projected_covariances(panel, pr, pc);

  StationaryEstimate out;
  out.specRperp = sym_eig_desc(mr);
  out.specCperp = sym_eig_desc(mc);
  out.R0hat = top_k_loadings(out.specRperp, ranks.hR0, panel.p1());
  out.C0hat = top_k_loadings(out.specCperp, ranks.hC0, panel.p2());
  out.F0hat = stationary_factors(panel, stationary.R0hat, stationary.C0hat, pr, pc);
  return out;
}

EstimationOutput estimate_pipeline(const MatrixPanel& panel, const Ranks& ranks) {
  require_ranks(panel, ranks);
  EstimationOutput out;
  out.ranksUsed = ranks;
  out.stage1 = in_stage("flattened", [&] { return stage_one(panel, ranks); });
  out.stationary = in_stage("anti-projection", [&] { return antiproject_stationary(panel, out.stage1, ranks); });
  out.refined = in_stage("filtered-projection", [&] { return filtered_projection(panel, out.stage1, out.stationary, ranks); });
  out.secondRound = in_stage("second-round", [&] {
    return second_round_stationary(panel, out.refined, out.stationary, ranks);
  });
  return out;
}

MatrixPanel common_component(const Loadings& R, const FactorPath& F, const Loadings& C) {
  if (R.h() != F.hR() || C.h() != F.hC()) fail(ErrorCode::ShapeError, "loadings do not match factor dimensions");
  std::vector<Matrix> frames;
  frames.reserve(static_cast<std::size_t>(F.T()));
  for (Index t = 0; t < F.T(); ++t) frames.emplace_back((R.matrix() * F[t]) * C.matrix().transpose());
  return MatrixPanel(std::move(frames));
}

}  // namespace nsmfm
