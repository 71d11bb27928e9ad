#pragma once

#include <Eigen/Dense>

#include <utility>

#include "nsmfm/error.hpp"

namespace nsmfm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Dense real symmetric matrix. Construction symmetrizes (S + S') / 2 and
// rejects non-square or non-finite input.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(const Matrix& entries);

  [[nodiscard]] Index dim() const noexcept { return entries_.rows(); }
  [[nodiscard]] const Matrix& matrix() const noexcept { return entries_; }

 private:
  Matrix entries_;
};

// Full eigendecomposition with eigenvalues sorted non-increasing and
// eigenvector columns aligned with them.
struct Spectrum {
  Vector eigenvalues;
  Matrix eigenvectors;

  [[nodiscard]] Index size() const noexcept { return eigenvalues.size(); }
};

// p x h loading matrix. Estimators produce columns with (1/p) L'L = I_h.
class Loadings {
 public:
  Loadings() = default;
  explicit Loadings(Matrix entries);

  static Loadings none(Index p) { return Loadings(Matrix(p, 0)); }

  [[nodiscard]] Index p() const noexcept { return entries_.rows(); }
  [[nodiscard]] Index h() const noexcept { return entries_.cols(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.cols() == 0; }
  [[nodiscard]] const Matrix& matrix() const noexcept { return entries_; }

 private:
  Matrix entries_;
};

// Symmetric idempotent matrix; here always I - L (L'L)^{-1} L'.
class Projector {
 public:
  static Projector identity(Index n) { return Projector(Matrix::Identity(n, n)); }

  [[nodiscard]] Index dim() const noexcept { return entries_.rows(); }
  [[nodiscard]] const Matrix& matrix() const noexcept { return entries_; }

 private:
  friend Projector orth_projector_complement(const Loadings& loadings);
  explicit Projector(Matrix entries) : entries_(std::move(entries)) {}

  Matrix entries_;
};

// Sign convention: the entry of largest magnitude in each eigenvector is
// positive (first such index on ties).
Spectrum sym_eig_desc(const SymmetricMatrix& s);

// Top-k eigenvectors scaled by sqrt(p). k == 0 yields an empty p x 0 result.
Loadings top_k_loadings(const SymmetricMatrix& s, Index k, Index p);
Loadings top_k_loadings(const Spectrum& spectrum, Index k, Index p);

// I - L (L'L)^{-1} L'. An empty L gives the identity.
Projector orth_projector_complement(const Loadings& loadings);

// Orthonormal basis (p x q) of the column space of m.
Matrix orthonormalize(const Matrix& m);

// (1 - tr(O1 O1' O2 O2') / max(q1, q2))^{1/2} on orthonormalized inputs.
double subspace_distance(const Matrix& a, const Matrix& b);
inline double subspace_distance(const Loadings& a, const Loadings& b) {
  return subspace_distance(a.matrix(), b.matrix());
}

}  // namespace nsmfm
