#include "nsmfm/linalg.hpp"

#include <cmath>
#include <string>

namespace nsmfm {

namespace {

constexpr double kGramConditionLimit = 1e12;
constexpr double kRankThreshold = 1e-12;

void canonicalize_sign(Eigen::Ref<Vector> v) {
  Index best = 0;
  double best_abs = -1.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (v.size() > 0 && v(best) < 0.0) v = -v;
}

}  // namespace

SymmetricMatrix::SymmetricMatrix(const Matrix& entries) {
  if (entries.rows() != entries.cols()) {
    fail(ErrorCode::ShapeError, "symmetric matrix must be square, got " + std::to_string(entries.rows()) +
                                    "x" + std::to_string(entries.cols()));
  }
  if (!entries.allFinite()) fail(ErrorCode::InvalidInput, "symmetric matrix has non-finite entries");
  entries_ = 0.5 * (entries + entries.transpose());
}

Loadings::Loadings(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.cols() > entries_.rows()) {
    fail(ErrorCode::RankTooLarge, "loadings with h=" + std::to_string(entries_.cols()) +
                                      " > p=" + std::to_string(entries_.rows()));
  }
}

Spectrum sym_eig_desc(const SymmetricMatrix& s) {
  const Index n = s.dim();
  Spectrum out;
  if (n == 0) return out;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    // Eigen's tridiagonal QR stops after 30 * n sweeps.
    fail(ErrorCode::NumericalFailure,
         "symmetric eigensolver did not converge within " + std::to_string(30 * n) + " iterations");
  }

  // Eigen returns ascending order; reverse it.
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  for (Index j = 0; j < n; ++j) canonicalize_sign(out.eigenvectors.col(j));
  return out;
}

Loadings top_k_loadings(const Spectrum& spectrum, Index k, Index p) {
  if (k < 0) fail(ErrorCode::InvalidInput, "negative factor count");
  if (k > spectrum.size()) {
    fail(ErrorCode::RankTooLarge,
         "requested " + std::to_string(k) + " loadings from a spectrum of size " + std::to_string(spectrum.size()));
  }
  if (p != spectrum.eigenvectors.rows()) {
    fail(ErrorCode::ShapeError, "p=" + std::to_string(p) + " does not match dimension " +
                                    std::to_string(spectrum.eigenvectors.rows()));
  }
  return Loadings(std::sqrt(static_cast<double>(p)) * spectrum.eigenvectors.leftCols(k));
}

Loadings top_k_loadings(const SymmetricMatrix& s, Index k, Index p) {
  if (k > s.dim()) {
    fail(ErrorCode::RankTooLarge,
         "requested " + std::to_string(k) + " loadings from a " + std::to_string(s.dim()) + "-dimensional matrix");
  }
  return top_k_loadings(sym_eig_desc(s), k, p);
}

Projector orth_projector_complement(const Loadings& loadings) {
  const Index p = loadings.p();
  if (loadings.empty()) return Projector::identity(p);

  const Matrix& l = loadings.matrix();
  const Matrix gram = l.transpose() * l;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || lo <= hi / kGramConditionLimit) {
    fail(ErrorCode::SingularGram, "loading Gram matrix is singular (eigenvalues " + std::to_string(lo) + ", " +
                                      std::to_string(hi) + ")");
  }
  Matrix p_mat = Matrix::Identity(p, p) - l * gram.ldlt().solve(l.transpose());
  return Projector(0.5 * (p_mat + p_mat.transpose()));
}

Matrix orthonormalize(const Matrix& m) {
  const Index p = m.rows();
  const Index q = m.cols();
  if (q == 0) fail(ErrorCode::InvalidInput, "cannot orthonormalize an empty column set");
  if (q > p) fail(ErrorCode::SingularInput, "more columns than rows; column space is rank deficient");
  if (!m.allFinite()) fail(ErrorCode::InvalidInput, "non-finite entries");

  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < q) {
    fail(ErrorCode::SingularInput,
         "matrix has rank " + std::to_string(qr.rank()) + " < " + std::to_string(q) + " columns");
  }
  Matrix basis = qr.householderQ() * Matrix::Identity(p, q);
  return basis;
}

double subspace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    fail(ErrorCode::ShapeError, "subspace distance needs equal row counts, got " + std::to_string(a.rows()) +
                                    " and " + std::to_string(b.rows()));
  }
  Matrix wide = orthonormalize(a);
  Matrix narrow = orthonormalize(b);
  if (narrow.cols() > wide.cols()) std::swap(wide, narrow);
  // With q = q_wide >= q_narrow:
  //   q - tr(Pw Pn) = (q_wide - q_narrow) + ||(I - Pw) On||_F^2.
  // Evaluating the residual directly avoids the cancellation in 1 - tr/q,
  // which would put a sqrt(eps) floor under the distance.
  const Matrix residual = narrow - wide * (wide.transpose() * narrow);
  const double q = static_cast<double>(wide.cols());
  const double gap = static_cast<double>(wide.cols() - narrow.cols());
  const double inner = (gap + residual.squaredNorm()) / q;
  return std::min(1.0, std::sqrt(std::max(0.0, inner)));
}

}  // namespace nsmfm
