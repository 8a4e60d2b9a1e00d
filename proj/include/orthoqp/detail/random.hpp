#pragma once

// Deterministic sampling helpers. All draws go through explicit bit
// manipulation of the mt19937_64 stream so that outputs are identical
// across standard-library implementations.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace orthoqp::detail {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of the engine.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller (cosine branch only).
inline double gaussian(Rng& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline Eigen::MatrixXd matrix_uniform(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd out(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) out(i, j) = uniform01(rng);
  return out;
}

inline Eigen::MatrixXd matrix_gaussian(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd out(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) out(i, j) = gaussian(rng);
  return out;
}

/// Thin Q factor of M with the R diagonal forced positive, so the
/// factorization (and hence the caller's output) is a function of M.
inline Eigen::MatrixXd qr_positive(const Eigen::MatrixXd& m) {
  const int cols = static_cast<int>(m.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), cols);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(cols);
  for (int j = 0; j < cols; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

/// Haar-distributed n x n orthogonal matrix (QR of a Gaussian matrix).
inline Eigen::MatrixXd random_orthogonal(int n, Rng& rng) {
  return qr_positive(matrix_gaussian(n, n, rng));
}

}  // namespace orthoqp::detail
