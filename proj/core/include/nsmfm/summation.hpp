#pragma once

#include <Eigen/Dense>

namespace nsmfm {

// Pairwise (cascade) sum over t in [first, last). `accumulate(t, acc)` adds
// the t-th term into acc. Leaves of up to kLeaf terms are accumulated
// sequentially, so rounding error grows like O(log n) rather than O(n).
template <class Accumulate>
Eigen::MatrixXd cascade_sum(Eigen::Index first, Eigen::Index last, Eigen::Index rows, Eigen::Index cols,
                            const Accumulate& accumulate) {
  constexpr Eigen::Index kLeaf = 8;
  if (last - first <= kLeaf) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index t = first; t < last; ++t) accumulate(t, acc);
    return acc;
  }
  const Eigen::Index mid = first + (last - first) / 2;
  Eigen::MatrixXd left = cascade_sum(first, mid, rows, cols, accumulate);
  left += cascade_sum(mid, last, rows, cols, accumulate);
  return left;
}

}  // namespace nsmfm
