#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lolipop {

inline constexpr double kLpTol = 1e-9;  // pivot and feasibility tolerance

struct LpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LpInfeasibleError : LpError {
  LpInfeasibleError() : LpError("linear program infeasible") {}
};
struct LpUnboundedError : LpError {
  LpUnboundedError() : LpError("linear program unbounded") {}
};

// Equality-form program: maximize c.x subject to A x = b, x >= 0.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;

  std::size_t num_vars() const { return objective.size(); }
  std::size_t num_rows() const { return rows.size(); }
};

struct LpSolution {
  double value = 0.0;
  std::vector<double> x;
};

// maximize (c.x + c0) / (d.x + d0) subject to A x = b, x >= 0, with the
// denominator strictly positive on the feasible region.
struct LinearFractionalProgram {
  std::vector<double> numerator;
  double numerator_const = 0.0;
  std::vector<double> denominator;
  double denominator_const = 0.0;
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
};

// Dense two-phase primal simplex with Bland's rule (entering: smallest
// index with positive reduced cost; leaving: smallest basic index among
// minimum ratios). Bland's rule rules out cycling, which matters here
// because the occupancy-polytope programs are heavily degenerate.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LinearProgram& lp) : lp_(lp) {}

  LpSolution solve() {
    const std::size_t n = lp_.num_vars();
    const std::size_t m = lp_.num_rows();
    for (const auto& row : lp_.rows)
      if (row.size() != n) throw std::invalid_argument("lp row size mismatch");
    if (lp_.rhs.size() != m) throw std::invalid_argument("lp rhs size mismatch");

    // Tableau over [original vars | artificials | rhs]; b flipped >= 0.
    width_ = n + m + 1;
    tableau_.assign(m, std::vector<double>(width_, 0.0));
    basis_.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      const double sign = lp_.rhs[i] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n; ++j)
        tableau_[i][j] = sign * lp_.rows[i][j];
      tableau_[i][n + i] = 1.0;
      tableau_[i][width_ - 1] = sign * lp_.rhs[i];
      basis_[i] = n + i;
    }

    // Phase 1: maximize -sum(artificials). Reduced cost of column j is the
    // column sum over rows (artificial columns have cost 0 in the basis).
    obj_.assign(width_, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i) obj_[j] += tableau_[i][j];
    for (std::size_t i = 0; i < m; ++i)
      obj_[width_ - 1] += tableau_[i][width_ - 1];  // stores -z
    run_simplex(n + m);
    if (obj_[width_ - 1] > kLpTol) throw LpInfeasibleError();
    purge_artificials(n);

    // Phase 2: true objective. obj_[j] = reduced cost, obj_.back() = -z.
    obj_.assign(width_, 0.0);
    for (std::size_t j = 0; j < n; ++j) obj_[j] = lp_.objective[j];
    for (std::size_t i = 0; i < tableau_.size(); ++i) {
      const double cb =
          basis_[i] < n ? lp_.objective[basis_[i]] : 0.0;
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j)
        obj_[j] -= cb * tableau_[i][j];
    }
    // Basic columns must read exactly zero in the objective row.
    for (std::size_t i = 0; i < tableau_.size(); ++i) obj_[basis_[i]] = 0.0;
    run_simplex(n);

    LpSolution sol;
    sol.x.assign(n, 0.0);
    for (std::size_t i = 0; i < tableau_.size(); ++i)
      if (basis_[i] < n) sol.x[basis_[i]] = tableau_[i][width_ - 1];
    sol.value = -obj_[width_ - 1];
    return sol;
  }

 private:
  void run_simplex(std::size_t num_cols) {
    for (;;) {
      std::size_t enter = num_cols;
      for (std::size_t j = 0; j < num_cols; ++j) {
        if (obj_[j] > kLpTol) {
          enter = j;
          break;  // Bland: smallest eligible index
        }
      }
      if (enter == num_cols) return;  // optimal

      std::size_t leave = tableau_.size();
      double best_ratio = 0.0;
      for (std::size_t i = 0; i < tableau_.size(); ++i) {
        if (tableau_[i][enter] <= kLpTol) continue;
        const double ratio = tableau_[i][width_ - 1] / tableau_[i][enter];
        if (leave == tableau_.size() || ratio < best_ratio - kLpTol ||
            (std::abs(ratio - best_ratio) <= kLpTol &&
             basis_[i] < basis_[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave == tableau_.size()) throw LpUnboundedError();
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t row, std::size_t col) {
    auto& pr = tableau_[row];
    const double p = pr[col];
    for (double& v : pr) v /= p;
    pr[col] = 1.0;
    for (std::size_t i = 0; i < tableau_.size(); ++i) {
      if (i == row) continue;
      const double f = tableau_[i][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j)
        tableau_[i][j] -= f * pr[j];
      tableau_[i][col] = 0.0;
    }
    const double f = obj_[col];
    if (f != 0.0) {
      for (std::size_t j = 0; j < width_; ++j) obj_[j] -= f * pr[j];
      obj_[col] = 0.0;
    }
    basis_[row] = col;
  }

  // After phase 1, pivot basic artificials out on any original column;
  // rows that are zero across original columns are redundant and dropped.
  void purge_artificials(std::size_t n) {
    for (std::size_t i = 0; i < tableau_.size();) {
      if (basis_[i] < n) {
        ++i;
        continue;
      }
      std::size_t col = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(tableau_[i][j]) > kLpTol) {
          col = j;
          break;
        }
      }
      if (col < n) {
        pivot(i, col);
        ++i;
      } else {
        tableau_.erase(tableau_.begin() + static_cast<std::ptrdiff_t>(i));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
      }
    }
  }

  const LinearProgram& lp_;
  std::size_t width_ = 0;
  std::vector<std::vector<double>> tableau_;
  std::vector<double> obj_;
  std::vector<std::size_t> basis_;
};

inline LpSolution solve_lp(const LinearProgram& lp) {
  return SimplexSolver(lp).solve();
}

// Charnes-Cooper transformation: with y = t*x and t = 1/(d.x + d0), the
// fractional program becomes
//   maximize c.y + c0*t  subject to  A y - b t = 0,  d.y + d0*t = 1,
//   y >= 0, t >= 0.
// The transformed variable vector is [y..., t] with t last.
inline LinearProgram charnes_cooper(const LinearFractionalProgram& lfp) {
  const std::size_t n = lfp.numerator.size();
  if (lfp.denominator.size() != n)
    throw std::invalid_argument("lfp: numerator/denominator size mismatch");
  LinearProgram lp;
  lp.objective = lfp.numerator;
  lp.objective.push_back(lfp.numerator_const);
  for (std::size_t i = 0; i < lfp.rows.size(); ++i) {
    std::vector<double> row = lfp.rows[i];
    row.push_back(-lfp.rhs[i]);
    lp.rows.push_back(std::move(row));
    lp.rhs.push_back(0.0);
  }
  std::vector<double> norm = lfp.denominator;
  norm.push_back(lfp.denominator_const);
  lp.rows.push_back(std::move(norm));
  lp.rhs.push_back(1.0);
  return lp;
}

// Solve an LFP end to end and recover x = y / t. t* = 0 signals an
// unbounded-ratio pathology and is a hard error; it cannot occur when the
// denominator is bounded below by a positive constant on the feasible set.
inline LpSolution solve_lfp(const LinearFractionalProgram& lfp) {
  const LinearProgram lp = charnes_cooper(lfp);
  LpSolution transformed = solve_lp(lp);
  const double t = transformed.x.back();
  if (t <= 1e-12)
    throw LpError("charnes-cooper: t* = 0 (unbounded ratio)");
  LpSolution sol;
  sol.value = transformed.value;
  sol.x.assign(transformed.x.begin(), transformed.x.end() - 1);
  for (double& v : sol.x) v /= t;
  return sol;
}

}  // namespace lolipop
