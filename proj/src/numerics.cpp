#include "rsnl/numerics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace rsnl {

SymMatrix::SymMatrix(const Mat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("SymMatrix: input not square");
  m_ = 0.5 * (a + a.transpose());
}

Vec solve_spd(const SymMatrix& a, const Vec& b) {
  if (a.order() != b.size()) throw std::invalid_argument("solve_spd: size mismatch");
  Eigen::LLT<Mat> llt(a.mat());
  if (llt.info() != Eigen::Success) throw std::runtime_error("not positive definite");
  Vec x = llt.solve(b);
  // one step of iterative refinement tightens the residual on ill-conditioned systems
  x += llt.solve(b - a.mat() * x);
  return x;
}

Vec solve_spd(const Mat& a, const Vec& b) { return solve_spd(SymMatrix(a), b); }

std::pair<Vec, Mat> eig_sym(const SymMatrix& x) {
  Eigen::SelfAdjointEigenSolver<Mat> es(x.mat());
  if (es.info() != Eigen::Success) throw std::runtime_error("eig_sym: failed to converge");
  const int m = x.order();
  Vec vals(m);
  Mat vecs(m, m);
  for (int k = 0; k < m; ++k) {  // ascending -> descending
    vals[k] = es.eigenvalues()[m - 1 - k];
    vecs.col(k) = es.eigenvectors().col(m - 1 - k);
  }
  return {vals, vecs};
}

std::pair<Vec, Mat> eig_sym(const Mat& x) { return eig_sym(SymMatrix(x)); }

}  // namespace rsnl
