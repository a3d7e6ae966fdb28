#pragma once

#include <vector>

#include "pdgd/types.hpp"

namespace pdgd::linalg {

/// Largest singular value; zero for empty matrices.
double spectral_norm(const Mat& M);

/// Extreme eigenvalues of a symmetric matrix (only the lower triangle is read).
double min_eig(const Mat& S);
double max_eig(const Mat& S);

/// Ascending eigenvalues of a symmetric matrix.
Vec eigenvalues(const Mat& S);

/// Orthonormal basis (columns) of ker(M). Singular values at or below
/// rel_tol * sigma_max count as zero; if M is identically zero the whole
/// space is returned.
Mat null_space(const Mat& M, double rel_tol);

Mat symmetrized(const Mat& M);

/// Relative asymmetry ||M - M^T|| / max(1, ||M||) in the Frobenius norm.
double asymmetry(const Mat& M);

/// Gauss-Legendre rule mapped to [0, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

QuadratureRule gauss_legendre_unit(int n_nodes);

}  // namespace pdgd::linalg
