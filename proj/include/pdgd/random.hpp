#pragma once

#include <cstdint>
#include <random>

#include "pdgd/types.hpp"

namespace pdgd {

/// Seeded standard-normal stream with a fixed, platform-independent
/// transform (std::normal_distribution is implementation-defined).
class NormalStream {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64+box-muller/v1";

  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double normal();

  Vec vector(Eigen::Index n);
  /// Row-major fill, so the entry order matches the JSON layout.
  Mat matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stream seed for sample `index` of a run seeded with `seed`; independent
/// of how samples are partitioned across threads.
std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t index);

/// Haar-distributed random orthogonal matrix (QR of a Gaussian, sign-fixed).
Mat haar_orthogonal(Eigen::Index n, NormalStream& rng);

/// Symmetric matrix Q diag(s) Q^T with Haar Q and eigenvalues uniform in [lo, hi].
Mat random_symmetric_with_spectrum(Eigen::Index n, double lo, double hi, NormalStream& rng);

}  // namespace pdgd
