#pragma once

// Exact characterization of the critical set of F(X) = tr(X'AXB) on St(m,n).
// After diagonalizing A and B, every critical point factors as
//   X = BlkDiag(P_1..P_nA) * E * BlkDiag(Q_1..Q_nB)
// with orthogonal blocks sized by the eigenvalue multiplicities and a 0/1
// selection matrix E pairing eigenvectors of A with eigenvalue slots of B.
// Components are indexed two ways:
//   - CriticalComponent h: how many columns come from each eigenspace of A,
//     with the selected eigenvectors laid out in eigenspace order (E(h));
//   - AssignmentPattern k: additionally, how many columns of each B-group
//     come from each eigenspace (k[i][j], with row sums h_i).
// The h-indexed family covers only the order-aligned assignments; distance
// queries against the full critical set enumerate assignment patterns, since
// descent limits routinely pair small eigenvalues of A with large ones of B,
// which no aligned selection realizes.
// This module enumerates both families, samples components, tests
// membership, and computes distances by alternating block Procrustes.

#include "orthoqp/linesearch.hpp"
#include "orthoqp/objective.hpp"
#include "orthoqp/stiefel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace orthoqp {

/// Distinct-eigenvalue grouping of a canonical instance: group boundaries
/// 0 = s_0 < ... < s_nA = m for A and 0 = t_0 < ... < t_nB = n for B.
struct SpectrumStructure {
  std::vector<int> s;          // A-group boundaries, size nA + 1
  std::vector<int> t;          // B-group boundaries, size nB + 1
  std::vector<double> a_value; // distinct eigenvalue per A-group
  std::vector<double> b_value; // distinct eigenvalue per B-group
  int b_zero_count = 0;        // eigenvalues of B within tolerance of zero

  int num_a_groups() const { return static_cast<int>(s.size()) - 1; }
  int num_b_groups() const { return static_cast<int>(t.size()) - 1; }
  int a_multiplicity(int i) const { return s[i + 1] - s[i]; }
  int b_multiplicity(int j) const { return t[j + 1] - t[j]; }
  int m() const { return s.back(); }
  int n() const { return t.back(); }
};

/// A selection pattern h with sum(h) = n and 0 <= h_i <= multiplicity_i,
/// identifying one connected component of the critical set.
struct CriticalComponent {
  std::vector<int> h;
};

namespace detail {

inline std::vector<int> group_boundaries(const VectorXd& sorted_vals, double tol) {
  std::vector<int> bounds{0};
  for (int i = 1; i < sorted_vals.size(); ++i)
    if (sorted_vals(i - 1) - sorted_vals(i) > tol) bounds.push_back(i);
  bounds.push_back(static_cast<int>(sorted_vals.size()));
  return bounds;
}

}  // namespace detail

inline SpectrumStructure spectrum_structure(const ProblemInstance& p,
                                            std::optional<double> tol = std::nullopt) {
  SpectrumStructure out;
  const double tol_a = tol.value_or(p.grouping_tol_a());
  const double tol_b = tol.value_or(p.grouping_tol_b());
  out.s = detail::group_boundaries(p.eig_a, tol_a);
  out.t = detail::group_boundaries(p.eig_b, tol_b);
  for (size_t i = 0; i + 1 < out.s.size(); ++i) out.a_value.push_back(p.eig_a(out.s[i]));
  for (size_t j = 0; j + 1 < out.t.size(); ++j) out.b_value.push_back(p.eig_b(out.t[j]));
  for (int j = 0; j < p.n(); ++j)
    if (std::abs(p.eig_b(j)) <= tol_b) ++out.b_zero_count;
  return out;
}

/// Number of valid selection patterns |H|, saturating at `cap + 1`.
inline std::uint64_t count_components(const SpectrumStructure& st,
                                      std::uint64_t cap = 1000000) {
  const int n = st.n();
  std::vector<std::uint64_t> ways(n + 1, 0);
  ways[0] = 1;
  for (int i = 0; i < st.num_a_groups(); ++i) {
    std::vector<std::uint64_t> next(n + 1, 0);
    for (int total = 0; total <= n; ++total) {
      if (ways[total] == 0) continue;
      for (int h = 0; h <= st.a_multiplicity(i) && total + h <= n; ++h) {
        next[total + h] += ways[total];
        if (next[total + h] > cap) next[total + h] = cap + 1;
      }
    }
    ways.swap(next);
  }
  return ways[n];
}

/// Complete, duplicate-free enumeration of H. Refuses when |H| exceeds `cap`.
inline std::vector<CriticalComponent> enumerate_components(const SpectrumStructure& st,
                                                           std::uint64_t cap = 1000000) {
  const std::uint64_t count = count_components(st, cap);
  if (count > cap)
    throw std::runtime_error("enumerate_components: |H| exceeds cap of " + std::to_string(cap));
  std::vector<CriticalComponent> out;
  out.reserve(static_cast<size_t>(count));
  std::vector<int> h(st.num_a_groups(), 0);
  const auto recurse = [&](auto&& self, int group, int remaining) -> void {
    if (group == st.num_a_groups()) {
      if (remaining == 0) out.push_back(CriticalComponent{h});
      return;
    }
    const int hi = std::min(st.a_multiplicity(group), remaining);
    for (int v = 0; v <= hi; ++v) {
      h[group] = v;
      self(self, group + 1, remaining - v);
    }
    h[group] = 0;
  };
  recurse(recurse, 0, st.n());
  return out;
}

inline void validate_component(const SpectrumStructure& st, const CriticalComponent& c) {
  if (static_cast<int>(c.h.size()) != st.num_a_groups())
    throw std::invalid_argument("component: wrong number of groups");
  int sum = 0;
  for (int i = 0; i < st.num_a_groups(); ++i) {
    if (c.h[i] < 0 || c.h[i] > st.a_multiplicity(i))
      throw std::invalid_argument("component: h_i out of range");
    sum += c.h[i];
  }
  if (sum != st.n()) throw std::invalid_argument("component: sum(h) != n");
}

/// The m x n selection matrix E(h): for each A-group i, the h_i standard
/// basis columns e_{s_{i-1}+1} .. e_{s_{i-1}+h_i}. Satisfies E'E = I_n.
inline MatrixXd selection_matrix(const SpectrumStructure& st, const CriticalComponent& c) {
  validate_component(st, c);
  MatrixXd e = MatrixXd::Zero(st.m(), st.n());
  int col = 0;
  for (int i = 0; i < st.num_a_groups(); ++i)
    for (int k = 0; k < c.h[i]; ++k, ++col) e(st.s[i] + k, col) = 1.0;
  return e;
}

/// Assignment pattern: k[i][j] columns of B-group j drawn from the i-th
/// eigenspace of A. Row sums bounded by the A-multiplicities; column sums
/// equal the B-group sizes. The h-indexed components correspond to the
/// aligned patterns, where selected eigenspaces meet the B-groups in index
/// order.
struct AssignmentPattern {
  std::vector<std::vector<int>> k;

  CriticalComponent row_sums() const {
    CriticalComponent c;
    for (const auto& row : k) {
      int s = 0;
      for (int v : row) s += v;
      c.h.push_back(s);
    }
    return c;
  }
};

inline void validate_pattern(const SpectrumStructure& st, const AssignmentPattern& pat) {
  if (static_cast<int>(pat.k.size()) != st.num_a_groups())
    throw std::invalid_argument("pattern: wrong number of A-groups");
  std::vector<int> col(st.num_b_groups(), 0);
  for (int i = 0; i < st.num_a_groups(); ++i) {
    if (static_cast<int>(pat.k[i].size()) != st.num_b_groups())
      throw std::invalid_argument("pattern: wrong number of B-groups");
    int row = 0;
    for (int j = 0; j < st.num_b_groups(); ++j) {
      if (pat.k[i][j] < 0) throw std::invalid_argument("pattern: negative entry");
      row += pat.k[i][j];
      col[j] += pat.k[i][j];
    }
    if (row > st.a_multiplicity(i))
      throw std::invalid_argument("pattern: row sum exceeds A-multiplicity");
  }
  for (int j = 0; j < st.num_b_groups(); ++j)
    if (col[j] != st.b_multiplicity(j))
      throw std::invalid_argument("pattern: column sum != B-multiplicity");
}

/// The aligned pattern realized by E(h): overlap of the cumulative-h column
/// partition with the B-group partition.
inline AssignmentPattern aligned_pattern(const SpectrumStructure& st,
                                         const CriticalComponent& c) {
  validate_component(st, c);
  AssignmentPattern pat;
  pat.k.assign(st.num_a_groups(), std::vector<int>(st.num_b_groups(), 0));
  int lo = 0;
  for (int i = 0; i < st.num_a_groups(); ++i) {
    const int hi = lo + c.h[i];
    for (int j = 0; j < st.num_b_groups(); ++j) {
      const int overlap = std::min(hi, st.t[j + 1]) - std::max(lo, st.t[j]);
      if (overlap > 0) pat.k[i][j] = overlap;
    }
    lo = hi;
  }
  return pat;
}

namespace detail {

// Depth-first walk over assignment patterns. Branches whose remaining
// eigenspace capacity cannot cover the remaining column need are pruned, so
// every surviving node completes to at least one pattern and the walk is
// proportional to the number of patterns visited.
template <typename Visit>
inline void visit_assignments(const SpectrumStructure& st, const std::vector<int>& suffix_cap,
                              std::vector<int>& need, std::vector<std::vector<int>>& rows,
                              int group, Visit&& visit) {
  int total_need = 0;
  for (int v : need) total_need += v;
  if (total_need > suffix_cap[group]) return;
  if (group == st.num_a_groups()) {
    visit(rows);
    return;
  }
  // Distribute up to mult(group) columns of this eigenspace over the B-groups.
  std::vector<int> row(st.num_b_groups(), 0);
  const int budget = st.a_multiplicity(group);
  const auto rec = [&](auto&& self, int j, int used) -> void {
    if (j == st.num_b_groups()) {
      rows.push_back(row);
      visit_assignments(st, suffix_cap, need, rows, group + 1, visit);
      rows.pop_back();
      return;
    }
    const int cap = std::min(budget - used, need[j]);
    for (int v = 0; v <= cap; ++v) {
      row[j] = v;
      need[j] -= v;
      self(self, j + 1, used + v);
      need[j] += v;
    }
    row[j] = 0;
  };
  rec(rec, 0, 0);
}

inline std::vector<int> suffix_capacities(const SpectrumStructure& st) {
  std::vector<int> out(st.num_a_groups() + 1, 0);
  for (int i = st.num_a_groups() - 1; i >= 0; --i)
    out[i] = out[i + 1] + st.a_multiplicity(i);
  return out;
}

}  // namespace detail

/// Number of assignment patterns, saturating at `cap + 1`.
inline std::uint64_t count_assignments(const SpectrumStructure& st,
                                       std::uint64_t cap = 1000000) {
  if (count_components(st, cap) > cap) return cap + 1;  // components <= assignments
  std::vector<int> need;
  for (int j = 0; j < st.num_b_groups(); ++j) need.push_back(st.b_multiplicity(j));
  const auto suffix = detail::suffix_capacities(st);
  std::vector<std::vector<int>> rows;
  std::uint64_t count = 0;
  try {
    detail::visit_assignments(st, suffix, need, rows, 0, [&](const auto&) {
      if (++count > cap) throw std::overflow_error("cap");
    });
  } catch (const std::overflow_error&) {
    return cap + 1;
  }
  return count;
}

inline std::vector<AssignmentPattern> enumerate_assignments(const SpectrumStructure& st,
                                                            std::uint64_t cap = 1000000) {
  if (count_assignments(st, cap) > cap)
    throw std::runtime_error("enumerate_assignments: pattern count exceeds cap of " +
                             std::to_string(cap));
  std::vector<AssignmentPattern> out;
  std::vector<int> need;
  for (int j = 0; j < st.num_b_groups(); ++j) need.push_back(st.b_multiplicity(j));
  const auto suffix = detail::suffix_capacities(st);
  std::vector<std::vector<int>> rows;
  detail::visit_assignments(st, suffix, need, rows, 0,
                            [&](const std::vector<std::vector<int>>& k) {
                              out.push_back(AssignmentPattern{k});
                            });
  return out;
}

/// Selection matrix of an assignment pattern; E(h) == the aligned case.
inline MatrixXd selection_matrix(const SpectrumStructure& st, const AssignmentPattern& pat) {
  validate_pattern(st, pat);
  MatrixXd e = MatrixXd::Zero(st.m(), st.n());
  std::vector<int> used_rows(st.num_a_groups(), 0);
  std::vector<int> used_cols(st.num_b_groups(), 0);
  for (int j = 0; j < st.num_b_groups(); ++j) {
    for (int i = 0; i < st.num_a_groups(); ++i) {
      for (int c = 0; c < pat.k[i][j]; ++c)
        e(st.s[i] + used_rows[i]++, st.t[j] + used_cols[j]++) = 1.0;
    }
  }
  return e;
}

namespace detail {

// Column layout of BlkDiag(P) * E(pat): for each A-group i, the global column
// positions its selected eigenvectors occupy, in the order the columns of
// P_i are consumed (B-group index ascending).
struct PatternLayout {
  std::vector<int> k_i;
  std::vector<std::vector<int>> cols_of_i;
};

inline PatternLayout pattern_layout(const SpectrumStructure& st, const AssignmentPattern& pat) {
  PatternLayout out;
  out.k_i.assign(st.num_a_groups(), 0);
  out.cols_of_i.assign(st.num_a_groups(), {});
  std::vector<int> used_cols(st.num_b_groups(), 0);
  for (int j = 0; j < st.num_b_groups(); ++j) {
    for (int i = 0; i < st.num_a_groups(); ++i) {
      for (int c = 0; c < pat.k[i][j]; ++c) {
        out.cols_of_i[i].push_back(st.t[j] + used_cols[j]++);
        ++out.k_i[i];
      }
    }
  }
  return out;
}

// Assembles BlkDiag(P) * E(pat) * BlkDiag(Q) given the selected columns W_i
// (m_i x k_i) of each P_i.
inline MatrixXd assemble_factorized(const SpectrumStructure& st, const PatternLayout& layout,
                                    const std::vector<MatrixXd>& w,
                                    const std::vector<MatrixXd>& q) {
  MatrixXd pe = MatrixXd::Zero(st.m(), st.n());
  for (int i = 0; i < st.num_a_groups(); ++i)
    for (int c = 0; c < layout.k_i[i]; ++c)
      pe.block(st.s[i], layout.cols_of_i[i][c], st.a_multiplicity(i), 1) = w[i].col(c);
  MatrixXd out(st.m(), st.n());
  for (int j = 0; j < st.num_b_groups(); ++j)
    out.middleCols(st.t[j], st.b_multiplicity(j)) =
        pe.middleCols(st.t[j], st.b_multiplicity(j)) * q[j];
  return out;
}

}  // namespace detail

/// A random point of the component X_h (orthogonal blocks Haar-distributed),
/// mapped back to the instance's own coordinates. Deterministic in `seed`.
inline StiefelPoint sample_critical_point(const ProblemInstance& p, const CriticalComponent& c,
                                          std::uint64_t seed) {
  const CanonicalForm cf = canonicalize(p);
  const SpectrumStructure st = spectrum_structure(cf.instance);
  const auto layout = detail::pattern_layout(st, aligned_pattern(st, c));
  detail::Rng rng(seed);
  std::vector<MatrixXd> w, q;
  for (int i = 0; i < st.num_a_groups(); ++i) {
    const MatrixXd pi = detail::random_orthogonal(st.a_multiplicity(i), rng);
    w.push_back(pi.leftCols(layout.k_i[i]));
  }
  for (int j = 0; j < st.num_b_groups(); ++j)
    q.push_back(detail::random_orthogonal(st.b_multiplicity(j), rng));
  return StiefelPoint(cf.from_canonical(detail::assemble_factorized(st, layout, w, q)),
                      kPolishTol);
}

inline bool is_critical(const ProblemInstance& p, const StiefelPoint& x, double tol = 1e-8) {
  return criticality_residual(p, x) <= tol;
}

/// Gap of a Stiefel block to the nearest embedded orthogonal matrix:
///   v* = min { ||S - [I;0] X||_F^2 : X in O(q) },  S'S = I_q.
/// Solved in closed form by the SVD of the top block S_1 = U Sigma V':
/// X* = UV' and v* = ||Sigma - I||_F^2 + ||S_2||_F^2.
struct ProcrustesGap {
  double v_star;
  MatrixXd x_star;
};

inline ProcrustesGap procrustes_gap(const MatrixXd& s) {
  const int q = static_cast<int>(s.cols());
  if (s.rows() < q) throw std::invalid_argument("procrustes_gap: need p >= q");
  if (feasibility_error(s) > 1e-8)
    throw std::invalid_argument("procrustes_gap: input does not have orthonormal columns");
  const MatrixXd s1 = s.topRows(q);
  const MatrixXd s2 = s.bottomRows(s.rows() - q);
  Eigen::JacobiSVD<MatrixXd> svd(s1, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double v = (svd.singularValues().array() - 1.0).matrix().squaredNorm() +
                   s2.squaredNorm();
  return ProcrustesGap{v, svd.matrixU() * svd.matrixV().transpose()};
}

/// Result of the alternating distance solve for one component.
struct DistanceReport {
  CriticalComponent component;         // row sums of the assignment
  AssignmentPattern assignment;
  double distance = 0;
  bool certified = false;              // an independent oracle confirmed the value
  std::vector<MatrixXd> p_blocks;      // full orthogonal blocks, canonical coordinates
  std::vector<MatrixXd> q_blocks;
  int restarts_used = 0;
};

namespace detail {

// Completes W (orthonormal columns) to a square orthogonal matrix whose first
// columns equal W.
inline MatrixXd complete_orthogonal(const MatrixXd& w, int dim) {
  if (w.cols() == 0) return MatrixXd::Identity(dim, dim);
  Eigen::HouseholderQR<MatrixXd> qr(w);
  MatrixXd full = qr.householderQ();
  const MatrixXd r = qr.matrixQR().topRows(w.cols());
  for (int j = 0; j < w.cols(); ++j)
    if (r(j, j) < 0.0) full.col(j) = -full.col(j);
  return full;
}

struct AlternationState {
  std::vector<MatrixXd> w;  // selected columns of each P_i
  std::vector<MatrixXd> q;
  double objective = -std::numeric_limits<double>::infinity();  // <Xbar, M>
};

// One full sweep (P-step then Q-step) of the alternating maximization of
// <Xbar, BlkDiag(P) E BlkDiag(Q)>. Each half-step is a closed-form
// orthogonal Procrustes solve, so the objective never decreases.
inline void alternate_sweep(const SpectrumStructure& st, const PatternLayout& layout,
                            const MatrixXd& xbar, AlternationState& state) {
  // P-step: with Q fixed, maximize sum_i <Y_i, W_i> over W_i in St(m_i, k_i),
  // where Y = Xbar * BlkDiag(Q)' and Y_i gathers the columns assigned to
  // eigenspace i.
  MatrixXd y(st.m(), st.n());
  for (int j = 0; j < st.num_b_groups(); ++j)
    y.middleCols(st.t[j], st.b_multiplicity(j)) =
        xbar.middleCols(st.t[j], st.b_multiplicity(j)) * state.q[j].transpose();
  for (int i = 0; i < st.num_a_groups(); ++i) {
    if (layout.k_i[i] == 0) continue;
    MatrixXd yi(st.a_multiplicity(i), layout.k_i[i]);
    for (int c = 0; c < layout.k_i[i]; ++c)
      yi.col(c) = y.block(st.s[i], layout.cols_of_i[i][c], st.a_multiplicity(i), 1);
    Eigen::JacobiSVD<MatrixXd> svd(yi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    state.w[i] = svd.matrixU() * svd.matrixV().transpose();
  }

  // Q-step: with P fixed, maximize sum_j tr(M_j' Q_j) over Q_j in O(d_j),
  // where M_j = (BlkDiag(P) E)_j' Xbar_j.
  MatrixXd pe = MatrixXd::Zero(st.m(), st.n());
  for (int i = 0; i < st.num_a_groups(); ++i)
    for (int c = 0; c < layout.k_i[i]; ++c)
      pe.block(st.s[i], layout.cols_of_i[i][c], st.a_multiplicity(i), 1) = state.w[i].col(c);
  double g = 0;
  for (int j = 0; j < st.num_b_groups(); ++j) {
    const int d = st.b_multiplicity(j);
    const MatrixXd mj = pe.middleCols(st.t[j], d).transpose() * xbar.middleCols(st.t[j], d);
    Eigen::JacobiSVD<MatrixXd> svd(mj, Eigen::ComputeFullU | Eigen::ComputeFullV);
    state.q[j] = svd.matrixU() * svd.matrixV().transpose();
    g += svd.singularValues().sum();
  }
  if (g < state.objective - 1e-10 * std::max(1.0, std::abs(state.objective)))
    throw std::logic_error("distance solve: alternating objective decreased");
  state.objective = g;
}

// Alternating minimization of ||Xbar - BlkDiag(P) E BlkDiag(Q)||_F over the
// orthogonal blocks, best of `restarts` random initializations after the
// identity start.
inline DistanceReport pattern_distance(const SpectrumStructure& st,
                                       const AssignmentPattern& pat, const MatrixXd& xbar,
                                       int restarts, std::uint64_t seed) {
  const PatternLayout layout = pattern_layout(st, pat);
  Rng rng(seed);
  AlternationState best;
  bool have_best = false;
  for (int r = 0; r <= restarts; ++r) {
    AlternationState state;
    state.w.resize(st.num_a_groups());
    for (int i = 0; i < st.num_a_groups(); ++i)
      state.w[i] = MatrixXd::Identity(st.a_multiplicity(i), layout.k_i[i]);
    for (int j = 0; j < st.num_b_groups(); ++j)
      state.q.push_back(r == 0 ? MatrixXd::Identity(st.b_multiplicity(j), st.b_multiplicity(j))
                               : random_orthogonal(st.b_multiplicity(j), rng));
    double prev = -std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < 500; ++sweep) {
      alternate_sweep(st, layout, xbar, state);
      if (state.objective - prev <= 1e-13 * std::max(1.0, std::abs(state.objective))) break;
      prev = state.objective;
    }
    if (!have_best || state.objective > best.objective) {
      best = std::move(state);
      have_best = true;
    }
  }

  DistanceReport report;
  report.component = pat.row_sums();
  report.assignment = pat;
  report.restarts_used = restarts;
  report.distance = (xbar - assemble_factorized(st, layout, best.w, best.q)).norm();
  for (int i = 0; i < st.num_a_groups(); ++i)
    report.p_blocks.push_back(complete_orthogonal(best.w[i], st.a_multiplicity(i)));
  report.q_blocks = best.q;
  return report;
}

}  // namespace detail

/// Optional independent confirmation hook for distance values.
using DistanceOracle = std::function<double(const CriticalComponent&)>;

/// dist(X, X_h) for the aligned component, by alternating closed-form
/// Procrustes over the P- and Q-blocks, globalized over `restarts` random
/// initializations (restart 0 is the identity). Distances are evaluated in
/// canonical coordinates, which is exact by unitary invariance of the
/// Frobenius norm.
inline DistanceReport distance_to_component(const ProblemInstance& p, const StiefelPoint& x,
                                            const CriticalComponent& c, int restarts = 8,
                                            std::uint64_t seed = 12345,
                                            const DistanceOracle& oracle = nullptr) {
  check_dims(p, x, "distance_to_component");
  const CanonicalForm cf = canonicalize(p);
  const SpectrumStructure st = spectrum_structure(cf.instance);
  DistanceReport report = detail::pattern_distance(st, aligned_pattern(st, c),
                                                   cf.to_canonical(x.matrix()), restarts, seed);
  if (oracle) report.certified = std::abs(report.distance - oracle(c)) <= 1e-6;
  return report;
}

/// dist(X, X_k) for one assignment pattern.
inline DistanceReport distance_to_assignment(const ProblemInstance& p, const StiefelPoint& x,
                                             const AssignmentPattern& pat, int restarts = 8,
                                             std::uint64_t seed = 12345) {
  check_dims(p, x, "distance_to_assignment");
  const CanonicalForm cf = canonicalize(p);
  const SpectrumStructure st = spectrum_structure(cf.instance);
  validate_pattern(st, pat);
  return detail::pattern_distance(st, pat, cf.to_canonical(x.matrix()), restarts, seed);
}

/// Minimum distance to the critical set: the minimum over all assignment
/// patterns (the full factorized family, not only the aligned components),
/// with the rank-deficient reduction applied when B has zero eigenvalues.
struct CriticalSetDistance {
  double value = 0;
  CriticalComponent argmin;       // row sums of the best pattern
  AssignmentPattern assignment;   // the best pattern itself
  bool upper_bound_only = false;  // true when the pattern count exceeded the cap
};

inline CriticalSetDistance distance_to_critical_set(const ProblemInstance& p,
                                                    const StiefelPoint& x, int restarts = 8,
                                                    std::uint64_t cap = 1000000,
                                                    std::uint64_t seed = 12345) {
  check_dims(p, x, "distance_to_critical_set");
  const CanonicalForm cf = canonicalize(p);
  SpectrumStructure st = spectrum_structure(cf.instance);

  ProblemInstance inst = cf.instance;
  MatrixXd xbar = cf.to_canonical(x.matrix());
  if (st.b_zero_count > 0 && st.b_zero_count < p.n()) {
    // Keep only the columns paired with nonzero eigenvalues of B.
    std::vector<int> keep;
    for (int j = 0; j < p.n(); ++j)
      if (std::abs(inst.eig_b(j)) > inst.grouping_tol_b()) keep.push_back(j);
    MatrixXd x1(p.m(), static_cast<int>(keep.size()));
    VectorXd b1(static_cast<int>(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) {
      x1.col(static_cast<int>(j)) = xbar.col(keep[j]);
      b1(static_cast<int>(j)) = inst.eig_b(keep[j]);
    }
    inst = ProblemInstance::from_diagonals(inst.eig_a, b1);
    xbar = std::move(x1);
    st = spectrum_structure(inst);
  } else if (st.b_zero_count == p.n()) {
    // B = 0: every feasible point is critical.
    return CriticalSetDistance{0.0, CriticalComponent{}, AssignmentPattern{}, false};
  }

  const StiefelPoint xred(xbar, 1e-8);
  if (count_assignments(st, cap) > cap) {
    // Fallback: distance to the limit of a high-precision solve started at X.
    LineSearchConfig cfg;
    cfg.stop_tol = 0.0;
    cfg.grad_tol = 1e-12;
    cfg.max_iters = 50000;
    MatrixXd limit;
    try {
      limit = solve(inst, xred, cfg).final_point.matrix();
    } catch (const solve_failure& e) {
      limit = e.partial.final_point.matrix();
    }
    return CriticalSetDistance{(xbar - limit).norm(), CriticalComponent{}, AssignmentPattern{},
                               true};
  }

  CriticalSetDistance out;
  out.value = std::numeric_limits<double>::infinity();
  for (const auto& pat : enumerate_assignments(st, cap)) {
    const DistanceReport r = detail::pattern_distance(st, pat, xbar, restarts, seed);
    if (r.distance < out.value) {
      out.value = r.distance;
      out.argmin = r.component;
      out.assignment = pat;
    }
  }
  return out;
}

/// Rank-deficient reduction of B: the sub-problem over the columns paired
/// with nonzero eigenvalues. For canonical X = [X1 X2] split accordingly,
///   ||AXB - XBX'AX||_F^2 = ||A X1 B1 - X1 B1 X1'A X1||_F^2
///                          + ||X2'(A X1 B1 - X1 B1 X1'A X1) X1'||_F^2.
struct RankReduction {
  std::optional<ProblemInstance> reduced;  // empty when B == 0 (degenerate)
  int rank_b = 0;
  std::vector<int> nonzero_cols;
  std::vector<int> zero_cols;
  bool degenerate = false;
};

inline RankReduction reduce_rank_deficient(const ProblemInstance& p) {
  if (!p.canonical)
    throw std::invalid_argument("reduce_rank_deficient: canonicalize the instance first");
  RankReduction out;
  const double tol = p.grouping_tol_b();
  for (int j = 0; j < p.n(); ++j) {
    if (std::abs(p.eig_b(j)) > tol)
      out.nonzero_cols.push_back(j);
    else
      out.zero_cols.push_back(j);
  }
  out.rank_b = static_cast<int>(out.nonzero_cols.size());
  if (out.rank_b == 0) {
    out.degenerate = true;  // every feasible X is critical
    return out;
  }
  VectorXd b1(out.rank_b);
  for (int j = 0; j < out.rank_b; ++j) b1(j) = p.eig_b(out.nonzero_cols[j]);
  out.reduced = ProblemInstance::from_diagonals(p.eig_a, b1);
  return out;
}

/// Splits X into (X1, X2): the columns paired with nonzero / zero b's.
inline std::pair<MatrixXd, MatrixXd> split_columns(const MatrixXd& x, const RankReduction& r) {
  MatrixXd x1(x.rows(), static_cast<int>(r.nonzero_cols.size()));
  MatrixXd x2(x.rows(), static_cast<int>(r.zero_cols.size()));
  for (size_t j = 0; j < r.nonzero_cols.size(); ++j) x1.col(static_cast<int>(j)) = x.col(r.nonzero_cols[j]);
  for (size_t j = 0; j < r.zero_cols.size(); ++j) x2.col(static_cast<int>(j)) = x.col(r.zero_cols[j]);
  return {std::move(x1), std::move(x2)};
}

}  // namespace orthoqp
