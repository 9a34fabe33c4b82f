#ifndef SCVN_LP_HPP
#define SCVN_LP_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace scvn {
namespace lp {

enum class LpStatus { Optimal, Infeasible, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
};

// Dense two-phase primal simplex for  min c'x  s.t.  Ax = b, x >= 0.
// A is row-major m x n. Dantzig pricing with a fallback to Bland's rule
// after a run of degenerate pivots, which guarantees termination.
class SimplexSolver {
 public:
  SimplexSolver(std::size_t m, std::size_t n, std::vector<double> a,
                std::vector<double> b, std::vector<double> c)
      : m_(m), n_(n), a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {}

  LpResult solve() {
    build_tableau();
    set_phase1_objective();
    if (!iterate(true)) return {LpStatus::IterationLimit, {}, 0.0};
    if (tab_obj(cols_) > kFeasTol) return {LpStatus::Infeasible, {}, 0.0};
    drive_out_artificials();
    set_phase2_objective();
    if (!iterate(false)) return {LpStatus::IterationLimit, {}, 0.0};

    LpResult res;
    res.status = LpStatus::Optimal;
    res.x.assign(n_, 0.0);
    for (std::size_t r = 0; r < m_; ++r)
      if (basis_[r] < n_) res.x[basis_[r]] = tab(r, cols_);
    res.objective = 0.0;
    for (std::size_t j = 0; j < n_; ++j) res.objective += c_[j] * res.x[j];
    return res;
  }

 private:
  static constexpr double kPivotTol = 1e-9;
  static constexpr double kFeasTol = 1e-7;

  std::size_t m_, n_;
  std::vector<double> a_, b_, c_;
  std::size_t cols_ = 0;  // structural + artificial columns (rhs is extra)
  std::vector<double> t_;
  std::vector<double> obj_;  // reduced-cost row, cols_ + 1 wide
  std::vector<std::size_t> basis_;

  double& tab(std::size_t r, std::size_t cc) { return t_[r * (cols_ + 1) + cc]; }
  double& tab_obj(std::size_t cc) { return obj_[cc]; }

  void build_tableau() {
    cols_ = n_ + m_;
    t_.assign(m_ * (cols_ + 1), 0.0);
    basis_.resize(m_);
    for (std::size_t r = 0; r < m_; ++r) {
      const double sign = b_[r] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) tab(r, j) = sign * a_[r * n_ + j];
      tab(r, n_ + r) = 1.0;
      tab(r, cols_) = sign * b_[r];
      basis_[r] = n_ + r;
    }
  }

  void set_phase1_objective() {
    // Minimize the sum of artificials; with artificials basic, the reduced
    // cost row is minus the sum of constraint rows over structural columns.
    obj_.assign(cols_ + 1, 0.0);
    for (std::size_t r = 0; r < m_; ++r)
      for (std::size_t j = 0; j <= cols_; ++j)
        if (j < n_ || j == cols_) obj_[j] -= tab(r, j);
  }

  void set_phase2_objective() {
    obj_.assign(cols_ + 1, 0.0);
    for (std::size_t j = 0; j < n_; ++j) obj_[j] = c_[j];
    // Eliminate basic columns from the objective row.
    for (std::size_t r = 0; r < m_; ++r) {
      const std::size_t bj = basis_[r];
      if (bj >= n_) continue;  // zero-level artificial on a redundant row
      const double factor = obj_[bj];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) obj_[j] -= factor * tab(r, j);
    }
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      std::size_t pivot_col = cols_;
      for (std::size_t j = 0; j < n_; ++j)
        if (std::abs(tab(r, j)) > kPivotTol) {
          pivot_col = j;
          break;
        }
      if (pivot_col < cols_) pivot(r, pivot_col);
      // Otherwise the row is redundant; the artificial stays basic at zero.
    }
  }

  void pivot(std::size_t pr, std::size_t pc) {
    const double pd = tab(pr, pc);
    for (std::size_t j = 0; j <= cols_; ++j) tab(pr, j) /= pd;
    tab(pr, pc) = 1.0;
    for (std::size_t r = 0; r < m_; ++r) {
      if (r == pr) continue;
      const double f = tab(r, pc);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) tab(r, j) -= f * tab(pr, j);
      tab(r, pc) = 0.0;
    }
    const double f = obj_[pc];
    if (f != 0.0) {
      for (std::size_t j = 0; j <= cols_; ++j) obj_[j] -= f * tab(pr, j);
      obj_[pc] = 0.0;
    }
    basis_[pr] = pc;
  }

  // In phase 1 artificials may re-enter; in phase 2 they are priced out.
  bool column_allowed(std::size_t j, bool phase1) const {
    return phase1 || j < n_;
  }

  bool iterate(bool phase1) {
    const std::size_t max_iters = 200 * (m_ + cols_) + 1000;
    std::size_t stall = 0;
    bool bland = false;
    for (std::size_t it = 0; it < max_iters; ++it) {
      // Entering column.
      std::size_t pc = cols_;
      if (!bland) {
        double best = -kPivotTol;
        for (std::size_t j = 0; j < cols_; ++j)
          if (column_allowed(j, phase1) && obj_[j] < best) {
            best = obj_[j];
            pc = j;
          }
      } else {
        for (std::size_t j = 0; j < cols_; ++j)
          if (column_allowed(j, phase1) && obj_[j] < -kPivotTol) {
            pc = j;
            break;
          }
      }
      if (pc == cols_) return true;  // optimal

      // Leaving row by minimum ratio; ties to the smallest basis index
      // (Bland-compatible).
      std::size_t pr = m_;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < m_; ++r) {
        const double arc = tab(r, pc);
        if (arc > kPivotTol) {
          const double ratio = tab(r, cols_) / arc;
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 &&
               (pr == m_ || basis_[r] < basis_[pr]))) {
            best_ratio = ratio;
            pr = r;
          }
        }
      }
      if (pr == m_) {
        // Unbounded direction; cannot happen for the bounded matching LP
        // but handled to keep the solver total.
        return false;
      }
      if (best_ratio < 1e-12) {
        if (++stall > m_ + 10) bland = true;  // degenerate run: anti-cycle
      } else {
        stall = 0;
      }
      pivot(pr, pc);
    }
    return false;
  }
};

inline LpResult solve_equality_form(std::size_t m, std::size_t n,
                                    std::vector<double> a,
                                    std::vector<double> b,
                                    std::vector<double> c) {
  return SimplexSolver(m, n, std::move(a), std::move(b), std::move(c)).solve();
}

}  // namespace lp
}  // namespace scvn

#endif  // SCVN_LP_HPP
