#include "pdgd/random.hpp"

#include <cmath>
#include <numbers>

namespace pdgd {

double NormalStream::uniform() {
  for (;;) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

double NormalStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Vec NormalStream::vector(Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Mat NormalStream::matrix(Eigen::Index rows, Eigen::Index cols) {
  Mat M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = normal();
  }
  return M;
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Mat haar_orthogonal(Eigen::Index n, NormalStream& rng) {
  if (n == 0) return Mat(0, 0);
  const Mat X = rng.matrix(n, n);
  Eigen::HouseholderQR<Mat> qr(X);
  Mat Q = qr.householderQ() * Mat::Identity(n, n);
  const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  }
  return Q;
}

Mat random_symmetric_with_spectrum(Eigen::Index n, double lo, double hi, NormalStream& rng) {
  const Mat Q = haar_orthogonal(n, rng);
  Vec s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = lo + (hi - lo) * rng.uniform();
  Mat S = Q * s.asDiagonal() * Q.transpose();
  return 0.5 * (S + S.transpose());
}

}  // namespace pdgd
