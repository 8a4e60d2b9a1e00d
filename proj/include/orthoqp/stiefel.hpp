#pragma once

// Geometry of the Stiefel manifold St(m,n) = { X in R^{m x n} : X'X = I }:
// feasibility measurement, tangent projection, random points, and the four
// retractions used by the line-search solver (polar, QR, Cayley, exponential).

#include "orthoqp/detail/random.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace orthoqp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kFeasibilityTol = 1e-10;   // StiefelPoint construction
inline constexpr double kTangencyTol = 1e-10;      // TangentVector construction
inline constexpr double kPolishTol = 1e-12;        // reorthonormalize guarantee

/// || X'X - I ||_F, the measured violation of the orthogonality constraint.
inline double feasibility_error(const MatrixXd& x) {
  const int n = static_cast<int>(x.cols());
  return (x.transpose() * x - MatrixXd::Identity(n, n)).norm();
}

/// A point on St(m,n); the constructor rejects matrices that are not
/// orthonormal to within `tol`.
class StiefelPoint {
 public:
  explicit StiefelPoint(MatrixXd entries, double tol = kFeasibilityTol)
      : x_(std::move(entries)) {
    if (x_.rows() < x_.cols() || x_.cols() < 1)
      throw std::invalid_argument("StiefelPoint: need m >= n >= 1, got " +
                                  std::to_string(x_.rows()) + "x" + std::to_string(x_.cols()));
    feas_err_ = feasibility_error(x_);
    if (!(feas_err_ <= tol))
      throw std::invalid_argument("StiefelPoint: feasibility error " +
                                  std::to_string(feas_err_) + " exceeds tolerance");
  }

  int rows() const { return static_cast<int>(x_.rows()); }
  int cols() const { return static_cast<int>(x_.cols()); }
  const MatrixXd& matrix() const { return x_; }

  /// Feasibility error measured when the point was constructed.
  double construction_feasibility() const { return feas_err_; }

 private:
  MatrixXd x_;
  double feas_err_ = 0;
};

/// An element of the tangent space at `base`: X'xi + xi'X = 0.
class TangentVector {
 public:
  TangentVector(MatrixXd entries, const StiefelPoint& base, double tol = kTangencyTol)
      : xi_(std::move(entries)), base_(base.matrix()) {
    if (xi_.rows() != base_.rows() || xi_.cols() != base_.cols())
      throw std::invalid_argument("TangentVector: dimension mismatch with base point");
    const MatrixXd s = base_.transpose() * xi_;
    const double err = (s + s.transpose()).norm();
    if (!(err <= tol))
      throw std::invalid_argument("TangentVector: tangency violation " + std::to_string(err));
  }

  const MatrixXd& matrix() const { return xi_; }
  const MatrixXd& base() const { return base_; }
  double norm() const { return xi_.norm(); }

  /// Scaling keeps tangency; used for step-size trials.
  TangentVector scaled(double s) const {
    TangentVector out(*this);
    out.xi_ *= s;
    return out;
  }

 private:
  MatrixXd xi_;
  MatrixXd base_;
};

enum class RetractionKind { Polar, QR, Cayley, Exponential };

inline const char* to_string(RetractionKind kind) {
  switch (kind) {
    case RetractionKind::Polar: return "polar";
    case RetractionKind::QR: return "qr";
    case RetractionKind::Cayley: return "cayley";
    case RetractionKind::Exponential: return "exp";
  }
  return "?";
}

inline RetractionKind retraction_from_string(const std::string& s) {
  if (s == "polar") return RetractionKind::Polar;
  if (s == "qr") return RetractionKind::QR;
  if (s == "cayley") return RetractionKind::Cayley;
  if (s == "exp" || s == "exponential") return RetractionKind::Exponential;
  throw std::invalid_argument("unknown retraction kind: " + s);
}

/// Numerical failure inside a retraction (singular solve, bad exponential).
/// Callers fall back to the polar retraction.
struct retraction_error : std::runtime_error {
  retraction_error(RetractionKind k, const std::string& what)
      : std::runtime_error(std::string(to_string(k)) + " retraction: " + what), kind(k) {}
  RetractionKind kind;
};

/// Orthogonal projection of V onto the tangent space at X:
///   (I - XX')V + X(X'V - V'X)/2  ==  V - X(X'V + V'X)/2.
inline TangentVector project_tangent(const StiefelPoint& x, const MatrixXd& v) {
  const MatrixXd& xm = x.matrix();
  if (v.rows() != xm.rows() || v.cols() != xm.cols())
    throw std::invalid_argument("project_tangent: dimension mismatch");
  const MatrixXd s = xm.transpose() * v;
  return TangentVector(v - 0.5 * (xm * (s + s.transpose())), x);
}

/// Polar factor of a full-column-rank matrix: X (X'X)^{-1/2}.
/// This is the nearest matrix with orthonormal columns.
inline StiefelPoint reorthonormalize(const MatrixXd& x) {
  Eigen::JacobiSVD<MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().tail<1>()(0);
  const double smax = svd.singularValues()(0);
  if (!(smin > smax * 1e-13) || smax == 0.0)
    throw std::invalid_argument("reorthonormalize: rank-deficient input");
  return StiefelPoint(svd.matrixU() * svd.matrixV().transpose(), kPolishTol);
}

namespace detail {

// Polar retraction via the n x n Gram matrix: for Y = X + xi with xi tangent,
// Y'Y = I + xi'xi is well conditioned (eigenvalues >= 1), so
// Y (Y'Y)^{-1/2} is cheap and stable at any step length. For small steps the
// inverse square root is evaluated by a truncated series (error O(||K||^3),
// far below the feasibility tolerance at the 1e-5 threshold).
inline MatrixXd retract_polar(const MatrixXd& x, const MatrixXd& xi) {
  const int n = static_cast<int>(x.cols());
  const MatrixXd y = x + xi;
  const MatrixXd k = y.transpose() * y - MatrixXd::Identity(n, n);  // = xi'xi for tangent xi
  if (k.norm() <= 1e-3) {
    // (I + K)^{-1/2} by five series terms; remainder below 63/256 ||K||^5.
    const MatrixXd eye = MatrixXd::Identity(n, n);
    MatrixXd acc = -5.0 / 16.0 * eye + k * (35.0 / 128.0);
    acc = 3.0 / 8.0 * eye + k * acc;
    acc = -0.5 * eye + k * acc;
    return y * (eye + k * acc);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(k);
  if (es.info() != Eigen::Success)
    throw retraction_error(RetractionKind::Polar, "eigen solve failed");
  const VectorXd inv_sqrt =
      (es.eigenvalues().array() + 1.0).max(1e-300).sqrt().inverse().matrix();
  return y * (es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose());
}

inline MatrixXd retract_qr(const MatrixXd& x, const MatrixXd& xi) {
  return orthoqp::detail::qr_positive(x + xi);
}

// Cayley transform (I - W/2)^{-1} (I + W/2) X with the skew operator
// W = C X' - X C', C = (I - XX'/2) xi, which satisfies W X = xi.
inline MatrixXd retract_cayley(const MatrixXd& x, const MatrixXd& xi) {
  const int m = static_cast<int>(x.rows());
  const MatrixXd c = xi - 0.5 * x * (x.transpose() * xi);
  MatrixXd w = c * x.transpose();
  w -= w.transpose().eval();
  const MatrixXd lhs = MatrixXd::Identity(m, m) - 0.5 * w;
  const MatrixXd rhs = x + 0.5 * (w * x);
  Eigen::PartialPivLU<MatrixXd> lu(lhs);
  const MatrixXd out = lu.solve(rhs);
  const double resid = (lhs * out - rhs).norm() / std::max(1.0, rhs.norm());
  if (!std::isfinite(resid) || resid > 1e-8)
    throw retraction_error(RetractionKind::Cayley, "singular linear solve");
  return out;
}

// Geodesic of the canonical metric via the 2n x 2n block exponential:
//   R(X, xi) = [X Q] expm([[A, -R'], [R, 0]]) [I; 0],
// with A = X'xi (skew) and QR the thin QR factorization of (I - XX')xi.
// Cost scales with n, not m.
inline MatrixXd retract_exponential(const MatrixXd& x, const MatrixXd& xi) {
  const int n = static_cast<int>(x.cols());
  MatrixXd a = x.transpose() * xi;
  a = 0.5 * (a - a.transpose().eval());  // kill symmetric round-off
  const MatrixXd k = xi - x * a;
  Eigen::HouseholderQR<MatrixXd> qr(k);
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(x.rows(), n);
  const MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();

  MatrixXd block = MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, n) = -r.transpose();
  block.bottomLeftCorner(n, n) = r;
  const MatrixXd e = block.exp();
  if (!e.allFinite())
    throw retraction_error(RetractionKind::Exponential, "matrix exponential failed");
  return x * e.topLeftCorner(n, n) + q * e.bottomLeftCorner(n, n);
}

}  // namespace detail

/// Map a tangent vector at X back onto the manifold. All four kinds agree
/// with X + xi to first order and fix X at xi = 0.
inline StiefelPoint retract(const StiefelPoint& x, const TangentVector& xi, RetractionKind kind) {
  if ((xi.base() - x.matrix()).norm() > 1e-12 * std::max(1.0, x.matrix().norm()))
    throw std::invalid_argument("retract: tangent vector is based at a different point");
  MatrixXd out;
  switch (kind) {
    case RetractionKind::Polar: out = detail::retract_polar(x.matrix(), xi.matrix()); break;
    case RetractionKind::QR: out = detail::retract_qr(x.matrix(), xi.matrix()); break;
    case RetractionKind::Cayley: out = detail::retract_cayley(x.matrix(), xi.matrix()); break;
    case RetractionKind::Exponential:
      out = detail::retract_exponential(x.matrix(), xi.matrix());
      break;
  }
  return StiefelPoint(std::move(out));
}

/// Orthonormal basis of the range of an m x n matrix with i.i.d. uniform
/// entries; deterministic in `seed`.
inline StiefelPoint random_point(int m, int n, std::uint64_t seed) {
  if (m < n || n < 1) throw std::invalid_argument("random_point: need m >= n >= 1");
  detail::Rng rng(seed);
  return StiefelPoint(detail::qr_positive(detail::matrix_uniform(m, n, rng)), kPolishTol);
}

}  // namespace orthoqp
