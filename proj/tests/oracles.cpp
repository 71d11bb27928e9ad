#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace oracle {

std::pair<Matrix, Matrix> flattened_covariances(const nsmfm::MatrixPanel& panel) {
  const Index p1 = panel.p1(), p2 = panel.p2(), T = panel.T();
  Matrix mr = Matrix::Zero(p1, p1);
  Matrix mc = Matrix::Zero(p2, p2);
  for (Index t = 0; t < T; ++t) {
    const Matrix& x = panel[t];
    for (Index i = 0; i < p1; ++i)
      for (Index k = 0; k < p1; ++k)
        for (Index j = 0; j < p2; ++j) mr(i, k) += x(i, j) * x(k, j);
    for (Index j = 0; j < p2; ++j)
      for (Index l = 0; l < p2; ++l)
        for (Index i = 0; i < p1; ++i) mc(j, l) += x(i, j) * x(i, l);
  }
  const double scale = 1.0 / (static_cast<double>(p1 * p2) * static_cast<double>(T) * static_cast<double>(T));
  return {mr * scale, mc * scale};
}

Matrix complement_projector(const Matrix& L) {
  const Index p = L.rows();
  if (L.cols() == 0) return Matrix::Identity(p, p);
  const Matrix gram = L.transpose() * L;
  return Matrix::Identity(p, p) - L * gram.inverse() * L.transpose();
}

Matrix complement_projector_2col(const Matrix& L) {
  const double a = L.col(0).dot(L.col(0));
  const double b = L.col(0).dot(L.col(1));
  const double d = L.col(1).dot(L.col(1));
  const double det = a * d - b * b;
  Matrix inv(2, 2);
  inv << d / det, -b / det, -b / det, a / det;
  const Index p = L.rows();
  Matrix out = Matrix::Identity(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index k = 0; k < p; ++k)
      for (Index r = 0; r < 2; ++r)
        for (Index s = 0; s < 2; ++s) out(i, k) -= L(i, r) * inv(r, s) * L(k, s);
  return out;
}

std::vector<Matrix> kronecker_factors(const nsmfm::MatrixPanel& panel, const Matrix& R, const Matrix& C,
                                      const Matrix& rowComplement, const Matrix& colComplement) {
  const Index p1 = panel.p1(), p2 = panel.p2();
  const Index hr = R.cols(), hc = C.cols();
  const Matrix a = rowComplement * R;
  const Matrix b = colComplement * C;
  // vec is column-major: vec(A F B') = (B kron A) vec(F).
  Matrix design(p1 * p2, hr * hc);
  for (Index j = 0; j < p2; ++j)
    for (Index i = 0; i < p1; ++i)
      for (Index l = 0; l < hc; ++l)
        for (Index k = 0; k < hr; ++k) design(j * p1 + i, l * hr + k) = b(j, l) * a(i, k);
  Matrix proj(p1 * p2, p1 * p2);
  for (Index j = 0; j < p2; ++j)
    for (Index i = 0; i < p1; ++i)
      for (Index l = 0; l < p2; ++l)
        for (Index k = 0; k < p1; ++k) proj(j * p1 + i, l * p1 + k) = colComplement(j, l) * rowComplement(i, k);
  const Matrix normal = design.transpose() * design;
  std::vector<Matrix> out;
  for (Index t = 0; t < panel.T(); ++t) {
    Eigen::VectorXd y(p1 * p2);
    for (Index j = 0; j < p2; ++j)
      for (Index i = 0; i < p1; ++i) y(j * p1 + i) = panel[t](i, j);
    const Eigen::VectorXd f = normal.fullPivLu().solve(design.transpose() * (proj * y));
    Matrix F(hr, hc);
    for (Index l = 0; l < hc; ++l)
      for (Index k = 0; k < hr; ++k) F(k, l) = f(l * hr + k);
    out.push_back(F);
  }
  return out;
}

double subspace_distance(const Matrix& a, const Matrix& b) {
  const Index p = a.rows();
  const Matrix pa = Matrix::Identity(p, p) - complement_projector(a);
  const Matrix pb = Matrix::Identity(p, p) - complement_projector(b);
  const double q = static_cast<double>(std::max(a.cols(), b.cols()));
  return std::sqrt(std::max(0.0, 1.0 - (pa * pb).trace() / q));
}

Matrix gaussian(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = n01(rng);
  return m;
}

std::vector<Matrix> orthogonal_blocks(Index p, const std::vector<Index>& widths, std::uint64_t seed) {
  Index total = 0;
  for (Index w : widths) total += w;
  const Eigen::HouseholderQR<Matrix> qr(gaussian(p, total, seed));
  const Matrix q = qr.householderQ() * Matrix::Identity(p, total);
  std::vector<Matrix> out;
  Index at = 0;
  for (Index w : widths) {
    out.push_back(std::sqrt(static_cast<double>(p)) * q.middleCols(at, w));
    at += w;
  }
  return out;
}

nsmfm::MatrixPanel random_panel(Index p1, Index p2, Index T, std::uint64_t seed) {
  std::vector<Matrix> frames;
  for (Index t = 0; t < T; ++t) frames.push_back(gaussian(p1, p2, seed * 1000003u + static_cast<std::uint64_t>(t)));
  return nsmfm::MatrixPanel(std::move(frames));
}

NoiselessModel noiseless(Index p1, Index p2, Index T, const nsmfm::Ranks& ranks, std::uint64_t seed) {
  const auto rows = orthogonal_blocks(p1, {ranks.hR1, ranks.hR0}, seed);
  const auto cols = orthogonal_blocks(p2, {ranks.hC1, ranks.hC0}, seed + 1);
  NoiselessModel m;
  m.truth.R1 = nsmfm::Loadings(rows[0]);
  m.truth.R0 = nsmfm::Loadings(rows[1]);
  m.truth.C1 = nsmfm::Loadings(cols[0]);
  m.truth.C0 = nsmfm::Loadings(cols[1]);
  std::vector<Matrix> f1, f0;
  Matrix level = Matrix::Zero(ranks.hR1, ranks.hC1);
  for (Index t = 0; t < T; ++t) {
    level += gaussian(ranks.hR1, ranks.hC1, seed * 7919u + 2 * static_cast<std::uint64_t>(t));
    f1.push_back(level);
    f0.push_back(gaussian(ranks.hR0, ranks.hC0, seed * 7919u + 2 * static_cast<std::uint64_t>(t) + 1));
  }
  m.truth.F1 = nsmfm::FactorPath(ranks.hR1, ranks.hC1, std::move(f1));
  m.truth.F0 = nsmfm::FactorPath(ranks.hR0, ranks.hC0, std::move(f0));
  m.truth.E = nsmfm::MatrixPanel::zeros(p1, p2, T);
  m.panel = nsmfm::assemble_panel(m.truth);
  return m;
}

}  // namespace oracle
