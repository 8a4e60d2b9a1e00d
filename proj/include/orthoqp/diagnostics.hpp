#pragma once

// Empirical measurement of the quantities behind the linear-convergence
// theory: Lojasiewicz and error-bound ratios, the quadratic growth bound
// around critical points, Q-linear rate fitting, and the small-step
// safeguard profile.

#include "orthoqp/critical.hpp"
#include "orthoqp/linesearch.hpp"
#include "orthoqp/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace orthoqp {

/// |F(X) - F(X*)|^{1/2} / ||D_rho(X)||_F for non-critical X and critical X*.
inline double lojasiewicz_ratio(const ProblemInstance& p, const StiefelPoint& x,
                                const StiefelPoint& xstar, double rho) {
  const double dn = direction_rho(p, x, rho).norm();
  if (dn <= 1e-12)
    throw std::invalid_argument("lojasiewicz_ratio: X is numerically critical");
  return std::sqrt(std::abs(eval_f(p, x) - eval_f(p, xstar))) / dn;
}

/// dist(X, critical set) divided by ||D_rho(X)||_F and by the criticality
/// residual ||AXB - XBX'AX||_F.
struct ErrorBoundRatios {
  double vs_direction;
  double vs_residual;
  double distance;
  bool distance_is_upper_bound;
};

inline ErrorBoundRatios error_bound_ratio(const ProblemInstance& p, const StiefelPoint& x,
                                          double rho, int restarts = 8,
                                          std::uint64_t cap = 1000000) {
  const double dn = direction_rho(p, x, rho).norm();
  if (dn <= 1e-12)
    throw std::invalid_argument("error_bound_ratio: X is numerically critical");
  const double resid = criticality_residual(p, x);
  const CriticalSetDistance d = distance_to_critical_set(p, x, restarts, cap);
  return ErrorBoundRatios{d.value / dn, d.value / resid, d.value, d.upper_bound_only};
}

/// Quadratic growth check |F(X) - F(X*)| <= eta ||X - X*||_F^2 with
/// eta = (L + ||gradF(X*)'X*||_F) / 2 and L = 2 ||A||_2 ||B||_2.
struct HolderCheck {
  double lhs;
  double rhs;
  double margin;  // rhs - lhs
  double eta;
};

inline HolderCheck holder_check(const ProblemInstance& p, const StiefelPoint& x,
                                const StiefelPoint& xstar) {
  const MatrixXd gstar = grad_euclidean(p, xstar);
  const double eta =
      0.5 * (p.gradient_lipschitz() + (gstar.transpose() * xstar.matrix()).norm());
  const double lhs = std::abs(eval_f(p, x) - eval_f(p, xstar));
  const double rhs = eta * (x.matrix() - xstar.matrix()).squaredNorm();
  return HolderCheck{lhs, rhs, rhs - lhs, eta};
}

struct RateFit {
  double rate = 0;        // per-iteration contraction factor, exp(fitted slope)
  double r_squared = 0;
  int points = 0;
  bool sublinear = false; // rate indistinguishable from 1 or the fit is poor
};

/// Least-squares fit of log(f_k - f_inf) against k over the post-burn-in
/// window. Gaps below 1e-13 are excluded; f_inf defaults to the final value.
inline RateFit fit_linear_rate(const std::vector<double>& f, double burn_in_fraction,
                               std::optional<double> f_inf = std::nullopt) {
  if (burn_in_fraction < 0.0 || burn_in_fraction >= 1.0)
    throw std::invalid_argument("fit_linear_rate: burn-in fraction in [0,1)");
  for (size_t k = 0; k + 1 < f.size(); ++k)
    if (f[k + 1] > f[k] + 1e-12 * std::max(1.0, std::abs(f[k])))
      throw std::invalid_argument("fit_linear_rate: sequence is not non-increasing");
  const double fin = f_inf.value_or(f.empty() ? 0.0 : f.back());

  std::vector<std::pair<double, double>> pts;  // (k, log gap)
  const size_t start = static_cast<size_t>(burn_in_fraction * static_cast<double>(f.size()));
  for (size_t k = start; k < f.size(); ++k) {
    const double gap = f[k] - fin;
    if (gap > 1e-13) pts.emplace_back(static_cast<double>(k), std::log(gap + 1e-16));
  }
  if (pts.size() < 10)
    throw std::invalid_argument("fit_linear_rate: fewer than 10 usable points");

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : pts) {
    sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
  }
  const double np = static_cast<double>(pts.size());
  const double slope = (np * sxy - sx * sy) / (np * sxx - sx * sx);
  const double ss_tot = syy - sy * sy / np;
  const double intercept = (sy - slope * sx) / np;
  double ss_res = 0;
  for (const auto& [x, y] : pts) {
    const double r = y - (slope * x + intercept);
    ss_res += r * r;
  }
  RateFit out;
  out.rate = std::exp(slope);
  out.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  out.points = static_cast<int>(pts.size());
  out.sublinear = out.rate > 0.995 || out.r_squared < 0.5;
  return out;
}

inline RateFit fit_linear_rate(const IterateTrace& trace, double burn_in_fraction,
                               std::optional<double> f_inf = std::nullopt) {
  return fit_linear_rate(trace.f_values(), burn_in_fraction, f_inf);
}

/// Per-iteration safeguard ratios for the moving steps of a trace:
///   raw        = ||X_{k+1} - X_k|| / ||D_rho(X_k)||
///   normalized = ||X_{k+1} - X_k|| / (alpha_k ||D_rho(X_k)||),
/// the latter approaching 1 as steps shrink (first-order retraction accuracy).
struct SafeguardSample {
  int iter;
  double alpha;
  double raw;
  double normalized;
};

inline std::vector<SafeguardSample> safeguard_profile(const IterateTrace& trace) {
  std::vector<SafeguardSample> out;
  for (const auto& r : trace.records) {
    if (r.step <= 0.0 || r.move_norm <= 0.0 || r.grad_norm <= 0.0) continue;
    out.push_back(SafeguardSample{r.iter, r.step, r.move_norm / r.grad_norm,
                                  r.move_norm / (r.step * r.grad_norm)});
  }
  return out;
}

/// Aggregate diagnostics for one converged run.
struct DiagnosticsReport {
  RateFit f_rate;                      // fit of the F-gaps
  double f_inf = 0;                    // limit value from the reference solve
  double eta_loj_max = 0;              // max tail Lojasiewicz ratio
  double eta_loj_median = 0;
  double kappa_hat = 0;                // min raw safeguard ratio over the tail
  double min_normalized_tail = 0;      // min normalized safeguard ratio over the tail
  double sigma_hat = 0;                // min decrease / (||D|| * move) over moving steps
  std::vector<SafeguardSample> safeguard;
  double eta_eb_max = std::numeric_limits<double>::quiet_NaN();  // optional sweep
  double holder_margin_min = std::numeric_limits<double>::quiet_NaN();
  double delta = 0;                    // perturbation radius used by the sweep
};

struct DiagnoseOptions {
  double burn_in_fraction = 0.4;
  int tail = 20;                 // iterations considered "tail"
  bool error_bound_sweep = false;
  double sweep_radius = 0.1;     // largest perturbation norm
  int sweep_samples = 10;
  std::uint64_t seed = 2024;
};

/// Post-processes a converged trace: reference solve for F_inf, rate fit,
/// Lojasiewicz/safeguard/primary-descent statistics from the records, and an
/// optional perturbation sweep around the limit point for the error bound.
inline DiagnosticsReport diagnose(const ProblemInstance& p, const IterateTrace& trace,
                                  const LineSearchConfig& used,
                                  const DiagnoseOptions& opts = {}) {
  DiagnosticsReport rep;

  LineSearchConfig ref_cfg = used;
  ref_cfg.stop_tol = 1e-14;
  ref_cfg.max_iters = 20000;
  double f_inf = trace.final_f();
  StiefelPoint limit = trace.final_point;
  try {
    IterateTrace ref = solve(p, trace.final_point, ref_cfg);
    f_inf = std::min(f_inf, ref.final_f());
    limit = ref.final_point;
  } catch (const solve_failure& e) {
    f_inf = std::min(f_inf, e.partial.final_f());
    limit = e.partial.final_point;
  }
  rep.f_inf = f_inf;
  rep.f_rate = fit_linear_rate(trace, opts.burn_in_fraction, f_inf);

  const auto& recs = trace.records;
  const size_t tail_start = recs.size() > static_cast<size_t>(opts.tail)
                                ? recs.size() - static_cast<size_t>(opts.tail)
                                : 0;
  std::vector<double> loj;
  for (size_t k = tail_start; k < recs.size(); ++k) {
    const double gap = recs[k].f - f_inf;
    if (recs[k].grad_norm > 1e-12 && gap > 0)
      loj.push_back(std::sqrt(gap) / recs[k].grad_norm);
  }
  if (!loj.empty()) {
    std::sort(loj.begin(), loj.end());
    rep.eta_loj_max = loj.back();
    rep.eta_loj_median = loj[loj.size() / 2];
  }

  rep.safeguard = safeguard_profile(trace);
  double kappa = std::numeric_limits<double>::infinity();
  double min_norm = std::numeric_limits<double>::infinity();
  int counted = 0;
  for (auto it = rep.safeguard.rbegin(); it != rep.safeguard.rend() && counted < opts.tail;
       ++it, ++counted) {
    kappa = std::min(kappa, it->raw);
    min_norm = std::min(min_norm, it->normalized);
  }
  rep.kappa_hat = counted ? kappa : 0.0;
  rep.min_normalized_tail = counted ? min_norm : 0.0;

  double sigma = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k + 1 < recs.size(); ++k) {
    const double decrease = recs[k].f - recs[k + 1].f;
    const double denom = recs[k].grad_norm * recs[k].move_norm;
    if (denom > 0 && decrease > 0) sigma = std::min(sigma, decrease / denom);
  }
  rep.sigma_hat = std::isfinite(sigma) ? sigma : 0.0;

  if (opts.error_bound_sweep) {
    rep.delta = opts.sweep_radius;
    detail::Rng rng(opts.seed);
    double eb_max = 0, margin_min = std::numeric_limits<double>::infinity();
    for (int s = 0; s < opts.sweep_samples; ++s) {
      const double tau = opts.sweep_radius * std::pow(10.0, -2.0 * s / opts.sweep_samples);
      TangentVector dir = project_tangent(limit, detail::matrix_gaussian(p.m(), p.n(), rng));
      if (dir.norm() == 0) continue;
      const StiefelPoint y = retract(limit, dir.scaled(tau / dir.norm()), RetractionKind::Polar);
      margin_min = std::min(margin_min, holder_check(p, y, limit).margin);
      try {
        eb_max = std::max(eb_max, error_bound_ratio(p, y, used.rho).vs_direction);
      } catch (const std::invalid_argument&) {
        // numerically critical sample; skip
      }
    }
    rep.eta_eb_max = eb_max;
    rep.holder_margin_min = margin_min;
  }
  return rep;
}

}  // namespace orthoqp
