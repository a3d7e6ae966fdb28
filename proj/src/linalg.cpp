#include "pdgd/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace pdgd::linalg {

double spectral_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

Vec eigenvalues(const Mat& S) {
  if (S.rows() != S.cols()) throw PreconditionError("eigenvalues: matrix must be square");
  if (S.size() == 0) return Vec();
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eig(const Mat& S) {
  const Vec ev = eigenvalues(S);
  return ev.size() == 0 ? 0.0 : ev(0);
}

double max_eig(const Mat& S) {
  const Vec ev = eigenvalues(S);
  return ev.size() == 0 ? 0.0 : ev(ev.size() - 1);
}

Mat null_space(const Mat& M, double rel_tol) {
  const Eigen::Index cols = M.cols();
  if (cols == 0) return Mat(0, 0);
  if (M.rows() == 0) return Mat::Identity(cols, cols);
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  if (smax == 0.0) return Mat::Identity(cols, cols);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * smax) ++rank;
  }
  return svd.matrixV().rightCols(cols - rank);
}

Mat symmetrized(const Mat& M) { return 0.5 * (M + M.transpose()); }

double asymmetry(const Mat& M) {
  if (M.size() == 0) return 0.0;
  return (M - M.transpose()).norm() / std::max(1.0, M.norm());
}

QuadratureRule gauss_legendre_unit(int n_nodes) {
  if (n_nodes < 1) throw PreconditionError("quadrature needs at least one node");
  // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix of the Legendre recurrence.
  Mat J = Mat::Zero(n_nodes, n_nodes);
  for (int i = 1; i < n_nodes; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  QuadratureRule rule;
  rule.nodes.resize(n_nodes);
  rule.weights.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    rule.nodes[i] = 0.5 * (es.eigenvalues()(i) + 1.0);
    // weight on [-1,1] is 2 v0^2; halve for [0,1]
    rule.weights[i] = v0 * v0;
  }
  return rule;
}

}  // namespace pdgd::linalg
