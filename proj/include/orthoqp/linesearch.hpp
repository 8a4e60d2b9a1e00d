#pragma once

// Armijo backtracking along -D_rho and the retracted line-search iteration
//   X_{k+1} = R(X_k, -alpha_k D_rho(X_k)),
// producing a complete per-iteration trace.

#include "orthoqp/objective.hpp"
#include "orthoqp/stiefel.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace orthoqp {

enum class InitialStepPolicy {
  Constant,  // trial step gamma at every iteration
  Adaptive,  // trial step max(1, previous alpha / beta)
};

struct LineSearchConfig {
  double rho = 0.5;
  double gamma = 1.0;                // base trial step, >= 1
  double beta = 0.5;                 // backtracking factor in (0,1)
  double c = 0.001;                  // sufficient-decrease constant in (0,1)
  InitialStepPolicy step_policy = InitialStepPolicy::Constant;
  RetractionKind retraction = RetractionKind::Polar;
  double stop_tol = 1e-8;            // stop when F(X_k) - F(X_{k+1}) < stop_tol; 0 disables
  double grad_tol = 1e-12;           // stop when ||D_rho|| <= grad_tol
  int max_iters = 100000;
  int max_backtracks = 60;
  double feas_correction_tol = 1e-12;  // reorthonormalize when exceeded
  double armijo_slack = 1e-15;         // accept equality within this slack

  void validate() const {
    if (!(rho > 0.0)) throw std::invalid_argument("LineSearchConfig: rho must be > 0");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("LineSearchConfig: beta in (0,1)");
    if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("LineSearchConfig: c in (0,1)");
    if (!(gamma >= 1.0)) throw std::invalid_argument("LineSearchConfig: gamma must be >= 1");
    if (!(stop_tol >= 0.0)) throw std::invalid_argument("LineSearchConfig: stop_tol must be >= 0");
    if (max_iters < 1 || max_backtracks < 1)
      throw std::invalid_argument("LineSearchConfig: iteration limits must be positive");
  }
};

enum class Termination { FDecrease, Stationary, MaxIters, Failed };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::FDecrease: return "f_decrease";
    case Termination::Stationary: return "stationary";
    case Termination::MaxIters: return "max_iters";
    case Termination::Failed: return "failed";
  }
  return "?";
}

/// One row per visited iterate. Row k carries the step taken from X_k;
/// the final row has step = move_norm = backtracks = 0.
struct IterateRecord {
  int iter = 0;
  double f = 0;
  double grad_norm = 0;   // ||D_rho(X_k)||_F
  double step = 0;        // alpha_k
  double move_norm = 0;   // ||X_{k+1} - X_k||_F
  double feas_err = 0;    // feasibility error of X_k
  int backtracks = 0;
};

struct IterateTrace {
  std::vector<IterateRecord> records;
  StiefelPoint final_point;
  Termination termination;

  int iterations() const { return static_cast<int>(records.size()) - 1; }
  double final_f() const { return records.back().f; }
  double final_grad_norm() const { return records.back().grad_norm; }

  std::vector<double> f_values() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.f);
    return out;
  }
};

/// Backtracking exhausted max_backtracks; signals a broken retraction or a
/// direction at numerical noise level.
struct armijo_failure : std::runtime_error {
  armijo_failure(int backtracks, double dir_norm, double f, double last_alpha)
      : std::runtime_error("Armijo search failed after " + std::to_string(backtracks) +
                           " backtracks (||D|| = " + std::to_string(dir_norm) +
                           ", F = " + std::to_string(f) +
                           ", last alpha = " + std::to_string(last_alpha)),
        backtracks(backtracks), dir_norm(dir_norm), f(f), last_alpha(last_alpha) {}
  int backtracks;
  double dir_norm;
  double f;
  double last_alpha;
};

/// armijo_failure propagated out of solve(), with the partial trace attached.
struct solve_failure : std::runtime_error {
  solve_failure(const std::string& what, IterateTrace partial)
      : std::runtime_error(what), partial(std::move(partial)) {}
  IterateTrace partial;
};

struct ArmijoResult {
  double alpha;
  StiefelPoint next;
  int backtracks;
  double f_next;
  double dir_deriv;   // <gradF, D_rho> under the trace inner product
  double feas_next;   // feasibility error of `next` (after any correction)
};

/// Search data at one iterate, computed once and shared by the step search.
struct DirectionInfo {
  TangentVector direction;
  double norm;
  double slope;  // <gradF, D_rho>
  double f;
};

inline DirectionInfo direction_info(const ProblemInstance& p, const StiefelPoint& x, double rho,
                                    std::optional<double> f_x = std::nullopt) {
  TangentVector d = direction_rho(p, x, rho);
  const double slope = grad_euclidean(p, x).cwiseProduct(d.matrix()).sum();
  const double dn = d.norm();
  return DirectionInfo{std::move(d), dn, slope, f_x ? *f_x : eval_f(p, x)};
}

namespace detail {

// Retraction with polar fallback on numerical failure (Cayley/exponential
// failure is measure-zero).
inline StiefelPoint retract_with_fallback(const StiefelPoint& x, const TangentVector& xi,
                                          RetractionKind kind) {
  try {
    return retract(x, xi, kind);
  } catch (const retraction_error&) {
    return retract(x, xi, RetractionKind::Polar);
  }
}

}  // namespace detail

/// Armijo point with parameters (gamma_bar, beta, c): the largest step of the
/// form beta^j * gamma_bar satisfying
///   F(R(X, -alpha D)) - F(X) <= -c alpha <gradF(X), D_rho(X)>.
inline ArmijoResult armijo_step(const ProblemInstance& p, const StiefelPoint& x,
                                const LineSearchConfig& cfg, double gamma_bar,
                                const DirectionInfo& info) {
  if (info.norm <= cfg.grad_tol)
    throw std::invalid_argument("armijo_step: direction is numerically zero (critical point)");
  double alpha = gamma_bar;
  for (int j = 0; j <= cfg.max_backtracks; ++j, alpha *= cfg.beta) {
    StiefelPoint next =
        detail::retract_with_fallback(x, info.direction.scaled(-alpha), cfg.retraction);
    double feas = next.construction_feasibility();
    if (feas > cfg.feas_correction_tol) {
      next = reorthonormalize(next.matrix());
      feas = next.construction_feasibility();
    }
    const double f_next = eval_f(p, next);
    if (f_next - info.f <= -cfg.c * alpha * info.slope + cfg.armijo_slack)
      return ArmijoResult{alpha, std::move(next), j, f_next, info.slope, feas};
  }
  throw armijo_failure(cfg.max_backtracks, info.norm, info.f, alpha / cfg.beta);
}

inline ArmijoResult armijo_step(const ProblemInstance& p, const StiefelPoint& x,
                                const LineSearchConfig& cfg, double gamma_bar,
                                std::optional<double> f_x = std::nullopt) {
  cfg.validate();
  return armijo_step(p, x, cfg, gamma_bar, direction_info(p, x, cfg.rho, f_x));
}

inline ArmijoResult armijo_step(const ProblemInstance& p, const StiefelPoint& x,
                                const LineSearchConfig& cfg) {
  return armijo_step(p, x, cfg, cfg.gamma);
}

/// Full line-search minimization from x0. Terminates when the F-decrease
/// falls below stop_tol, when ||D_rho|| <= grad_tol, or at max_iters.
inline IterateTrace solve(const ProblemInstance& p, const StiefelPoint& x0,
                          const LineSearchConfig& cfg) {
  cfg.validate();
  check_dims(p, x0, "solve");

  std::vector<IterateRecord> records;
  StiefelPoint x = x0;
  double f = eval_f(p, x);
  double feas = feasibility_error(x.matrix());
  double gamma_bar = cfg.gamma;

  for (int k = 0;; ++k) {
    const DirectionInfo info = direction_info(p, x, cfg.rho, f);
    IterateRecord rec;
    rec.iter = k;
    rec.f = f;
    rec.feas_err = feas;
    rec.grad_norm = info.norm;

    if (rec.grad_norm <= cfg.grad_tol) {
      records.push_back(rec);
      return IterateTrace{std::move(records), std::move(x), Termination::Stationary};
    }
    if (k >= cfg.max_iters) {
      records.push_back(rec);
      return IterateTrace{std::move(records), std::move(x), Termination::MaxIters};
    }

    ArmijoResult step = [&] {
      try {
        return armijo_step(p, x, cfg, gamma_bar, info);
      } catch (const armijo_failure& e) {
        records.push_back(rec);
        throw solve_failure(e.what(),
                            IterateTrace{std::move(records), std::move(x), Termination::Failed});
      }
    }();

    rec.step = step.alpha;
    rec.move_norm = (step.next.matrix() - x.matrix()).norm();
    rec.backtracks = step.backtracks;
    records.push_back(rec);

    const double decrease = f - step.f_next;
    x = std::move(step.next);
    f = step.f_next;
    feas = step.feas_next;
    if (cfg.step_policy == InitialStepPolicy::Adaptive)
      gamma_bar = std::max(1.0, step.alpha / cfg.beta);

    if (cfg.stop_tol > 0.0 && decrease < cfg.stop_tol) {
      IterateRecord last;
      last.iter = k + 1;
      last.f = f;
      last.grad_norm = direction_rho(p, x, cfg.rho).norm();
      last.feas_err = feas;
      records.push_back(last);
      return IterateTrace{std::move(records), std::move(x), Termination::FDecrease};
    }
  }
}

}  // namespace orthoqp
