#pragma once

#include "rsnl/types.hpp"

#include <utility>

namespace rsnl {

// Dense symmetric matrix. Symmetrizes on construction so downstream solvers
// can rely on exact symmetry.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Mat& a);

  int order() const { return static_cast<int>(m_.rows()); }
  const Mat& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Mat m_;
};

// Solves A x = b for symmetric positive definite A.
// Throws std::runtime_error("not positive definite") when the factorization
// meets a non-positive pivot.
Vec solve_spd(const SymMatrix& a, const Vec& b);

// Convenience overload; the input is symmetrized first.
Vec solve_spd(const Mat& a, const Vec& b);

// Full symmetric eigendecomposition, eigenvalues sorted descending and
// eigenvectors orthonormal (column k pairs with eigenvalue k).
std::pair<Vec, Mat> eig_sym(const SymMatrix& x);
std::pair<Vec, Mat> eig_sym(const Mat& x);

}  // namespace rsnl
