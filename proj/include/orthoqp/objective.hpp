#pragma once

// The quadratic objective F(X) = tr(X'AXB) over St(m,n), its Euclidean and
// Riemannian gradients, the descent-direction family D_rho, criticality
// residuals, and the diagonalizing change of variables.

#include "orthoqp/stiefel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace orthoqp {

/// Problem data: symmetric A (m x m) and B (n x n) with cached spectral
/// decompositions, eigenvalues sorted non-increasing.
struct ProblemInstance {
  MatrixXd a;
  MatrixXd b;
  MatrixXd u_a;        // columns are eigenvectors matching eig_a
  MatrixXd u_b;
  VectorXd eig_a;      // non-increasing
  VectorXd eig_b;
  bool canonical = false;    // both diagonal with sorted diagonals
  bool a_diagonal = false;
  bool b_diagonal = false;

  ProblemInstance(MatrixXd a_in, MatrixXd b_in) : a(std::move(a_in)), b(std::move(b_in)) {
    check_symmetric(a, "A");
    check_symmetric(b, "B");
    std::tie(u_a, eig_a, a_diagonal) = decompose(a, "A");
    std::tie(u_b, eig_b, b_diagonal) = decompose(b, "B");
    canonical = a_diagonal && b_diagonal;
  }

  /// Builds the instance Diag(a), Diag(b) with entries sorted non-increasing.
  static ProblemInstance from_diagonals(VectorXd da, VectorXd db) {
    std::sort(da.data(), da.data() + da.size(), std::greater<double>());
    std::sort(db.data(), db.data() + db.size(), std::greater<double>());
    return ProblemInstance(MatrixXd(da.asDiagonal()), MatrixXd(db.asDiagonal()));
  }

  int m() const { return static_cast<int>(a.rows()); }
  int n() const { return static_cast<int>(b.rows()); }

  double a_norm2() const { return eig_a.cwiseAbs().maxCoeff(); }
  double b_norm2() const { return eig_b.cwiseAbs().maxCoeff(); }

  /// Lipschitz constant of the Euclidean gradient: 2 ||A||_2 ||B||_2.
  double gradient_lipschitz() const { return 2.0 * a_norm2() * b_norm2(); }

  /// Absolute tolerance for treating eigenvalues as equal.
  double grouping_tol_a() const { return 1e-10 * std::max(1.0, a_norm2()); }
  double grouping_tol_b() const { return 1e-10 * std::max(1.0, b_norm2()); }

  // A * X, X * B and B * X with fast paths for diagonal data.
  MatrixXd a_times(const MatrixXd& x) const {
    return a_diagonal ? MatrixXd(eig_diag_a().asDiagonal() * x) : MatrixXd(a * x);
  }
  MatrixXd times_b(const MatrixXd& x) const {
    return b_diagonal ? MatrixXd(x * eig_diag_b().asDiagonal()) : MatrixXd(x * b);
  }
  MatrixXd b_times(const MatrixXd& x) const {
    return b_diagonal ? MatrixXd(eig_diag_b().asDiagonal() * x) : MatrixXd(b * x);
  }

 private:
  VectorXd eig_diag_a() const { return a.diagonal(); }
  VectorXd eig_diag_b() const { return b.diagonal(); }

  static void check_symmetric(const MatrixXd& m, const char* name) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw std::invalid_argument(std::string(name) + " must be square");
    if ((m - m.transpose()).norm() > 1e-12 * m.norm())
      throw std::invalid_argument(std::string(name) + " is not symmetric");
  }

  // Returns (eigenvectors, eigenvalues non-increasing, was-diagonal-sorted).
  static std::tuple<MatrixXd, VectorXd, bool> decompose(const MatrixXd& m, const char* name) {
    const int dim = static_cast<int>(m.rows());
    const double off = (m - MatrixXd(m.diagonal().asDiagonal())).norm();
    bool sorted = true;
    for (int i = 0; i + 1 < dim; ++i)
      if (m.diagonal()(i) < m.diagonal()(i + 1)) sorted = false;
    if (off == 0.0 && sorted) {
      return {MatrixXd::Identity(dim, dim), m.diagonal(), true};
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    if (es.info() != Eigen::Success)
      throw std::runtime_error(std::string("eigen-decomposition of ") + name + " failed");
    // Eigen sorts ascending; flip to non-increasing.
    VectorXd vals(dim);
    MatrixXd vecs(dim, dim);
    for (int i = 0; i < dim; ++i) {
      vals(i) = es.eigenvalues()(dim - 1 - i);
      vecs.col(i) = es.eigenvectors().col(dim - 1 - i);
    }
    const double rec_err = (vecs * vals.asDiagonal() * vecs.transpose() - m).norm();
    if (rec_err > 1e-10 * std::max(1.0, m.norm()))
      throw std::runtime_error(std::string("eigen-decomposition of ") + name +
                               " failed to reconstruct");
    return {std::move(vecs), std::move(vals), false};
  }
};

inline void check_dims(const ProblemInstance& p, const StiefelPoint& x, const char* where) {
  if (x.rows() != p.m() || x.cols() != p.n())
    throw std::invalid_argument(std::string(where) + ": point does not match instance dims");
}

/// F(X) = tr(X'AXB).
inline double eval_f(const ProblemInstance& p, const StiefelPoint& x) {
  check_dims(p, x, "eval_f");
  return x.matrix().cwiseProduct(p.times_b(p.a_times(x.matrix()))).sum();
}

/// Euclidean gradient 2AXB.
inline MatrixXd grad_euclidean(const ProblemInstance& p, const StiefelPoint& x) {
  check_dims(p, x, "grad_euclidean");
  return 2.0 * p.times_b(p.a_times(x.matrix()));
}

/// Riemannian gradient 2AXB - XX'AXB - XBX'AX (projection of 2AXB onto T(X)).
inline TangentVector grad_riemannian(const ProblemInstance& p, const StiefelPoint& x) {
  const MatrixXd g = grad_euclidean(p, x);
  const MatrixXd s = x.matrix().transpose() * g;
  return TangentVector(g - 0.5 * (x.matrix() * (s + s.transpose())), x);
}

/// Descent-direction family
///   D_rho(X) = gradF - X (2 rho gradF'X + (1 - 2 rho) X'gradF),   rho > 0.
/// -D_rho is a descent direction, vanishing exactly at critical points.
inline TangentVector direction_rho(const ProblemInstance& p, const StiefelPoint& x, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("direction_rho: rho must be positive");
  const MatrixXd g = grad_euclidean(p, x);
  const MatrixXd s = x.matrix().transpose() * g;  // X'gradF; gradF'X = s'
  return TangentVector(g - x.matrix() * (2.0 * rho * s.transpose() + (1.0 - 2.0 * rho) * s), x);
}

/// || AXB - XBX'AX ||_F; zero exactly on the critical set.
inline double criticality_residual(const ProblemInstance& p, const StiefelPoint& x) {
  check_dims(p, x, "criticality_residual");
  const MatrixXd ax = p.a_times(x.matrix());
  return (p.times_b(ax) - x.matrix() * p.b_times(x.matrix().transpose() * ax)).norm();
}

/// Canonical form: instance with sorted diagonal A and B, plus the transform
/// pair (U_A, U_B). Xbar = U_A' X U_B maps feasible points to feasible points
/// and preserves F.
struct CanonicalForm {
  ProblemInstance instance;
  MatrixXd u_a;
  MatrixXd u_b;

  MatrixXd to_canonical(const MatrixXd& x) const { return u_a.transpose() * x * u_b; }
  MatrixXd from_canonical(const MatrixXd& xbar) const { return u_a * xbar * u_b.transpose(); }
};

inline CanonicalForm canonicalize(const ProblemInstance& p) {
  if (p.canonical) {
    return CanonicalForm{p, MatrixXd::Identity(p.m(), p.m()), MatrixXd::Identity(p.n(), p.n())};
  }
  return CanonicalForm{ProblemInstance(MatrixXd(p.eig_a.asDiagonal()), MatrixXd(p.eig_b.asDiagonal())),
                       p.u_a, p.u_b};
}

}  // namespace orthoqp
