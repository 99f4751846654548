#pragma once

// Dense bounded-variable primal simplex returning basic (vertex) solutions.
//
// The tableau is templated on the scalar so that the same code runs in double
// precision and in exact rational arithmetic. Exact scalars use zero tolerances.

#include "fairclust/errors.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/gmp.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace fairclust {

using Rational =
    boost::multiprecision::number<boost::multiprecision::gmp_rational, boost::multiprecision::et_off>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Relation { less_equal, greater_equal, equal };
enum class LPStatus { optimal, infeasible, unbounded, iteration_limit };
enum class PivotRule { bland, dantzig };

const char* to_string(LPStatus status);

template <typename Scalar>
struct LinearConstraint {
  std::vector<std::pair<std::size_t, Scalar>> terms;
  Relation relation = Relation::less_equal;
  Scalar rhs{0};
  std::string name;
};

/// minimize c^T x  s.t.  rows, lower <= x <= upper. Lower bounds must be finite.
template <typename Scalar>
class LinearProgram {
 public:
  std::size_t add_variable(Scalar lower, std::optional<Scalar> upper, Scalar cost,
                           std::string name = {}) {
    if (upper && *upper < lower) throw ParameterError("variable bounds require lower <= upper");
    lower_.push_back(std::move(lower));
    upper_.push_back(std::move(upper));
    cost_.push_back(std::move(cost));
    names_.push_back(name.empty() ? "v" + std::to_string(names_.size()) : std::move(name));
    return lower_.size() - 1;
  }

  void add_constraint(LinearConstraint<Scalar> row) {
    for (const auto& [j, a] : row.terms) {
      if (j >= num_variables()) throw ParameterError("constraint references unknown variable");
      (void)a;
    }
    if (row.name.empty()) row.name = "c" + std::to_string(rows_.size());
    rows_.push_back(std::move(row));
  }

  std::size_t num_variables() const { return lower_.size(); }
  std::size_t num_constraints() const { return rows_.size(); }
  const Scalar& lower(std::size_t j) const { return lower_[j]; }
  const std::optional<Scalar>& upper(std::size_t j) const { return upper_[j]; }
  const Scalar& cost(std::size_t j) const { return cost_[j]; }
  void set_cost(std::size_t j, Scalar c) { cost_[j] = std::move(c); }
  const std::string& name(std::size_t j) const { return names_[j]; }
  const std::vector<LinearConstraint<Scalar>>& constraints() const { return rows_; }

  Scalar objective(const VectorX<Scalar>& x) const {
    Scalar total{0};
    for (std::size_t j = 0; j < num_variables(); ++j)
      total += cost_[j] * x(static_cast<Eigen::Index>(j));
    return total;
  }

  Scalar row_activity(std::size_t i, const VectorX<Scalar>& x) const {
    Scalar s{0};
    for (const auto& [j, a] : rows_[i].terms) s += a * x(static_cast<Eigen::Index>(j));
    return s;
  }

  /// Largest violation over rows and bounds, each scaled by 1/(1+|rhs|).
  Scalar max_violation(const VectorX<Scalar>& x) const {
    using std::abs;
    Scalar worst{0};
    auto upd = [&](Scalar v, const Scalar& scale) {
      v = v / (Scalar(1) + abs(scale));
      if (v > worst) worst = v;
    };
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const Scalar act = row_activity(i, x);
      const Scalar& b = rows_[i].rhs;
      switch (rows_[i].relation) {
        case Relation::less_equal: upd(act - b, b); break;
        case Relation::greater_equal: upd(b - act, b); break;
        case Relation::equal: upd(abs(act - b), b); break;
      }
    }
    for (std::size_t j = 0; j < num_variables(); ++j) {
      const Scalar& v = x(static_cast<Eigen::Index>(j));
      upd(lower_[j] - v, lower_[j]);
      if (upper_[j]) upd(v - *upper_[j], *upper_[j]);
    }
    return worst;
  }

  template <typename To>
  LinearProgram<To> cast() const {
    LinearProgram<To> out;
    for (std::size_t j = 0; j < num_variables(); ++j) {
      std::optional<To> up;
      if (upper_[j]) up = To(*upper_[j]);
      out.add_variable(To(lower_[j]), up, To(cost_[j]), names_[j]);
    }
    for (const auto& r : rows_) {
      LinearConstraint<To> c;
      c.relation = r.relation;
      c.rhs = To(r.rhs);
      c.name = r.name;
      for (const auto& [j, a] : r.terms) c.terms.emplace_back(j, To(a));
      out.add_constraint(std::move(c));
    }
    return out;
  }

 private:
  std::vector<Scalar> lower_;
  std::vector<std::optional<Scalar>> upper_;
  std::vector<Scalar> cost_;
  std::vector<std::string> names_;
  std::vector<LinearConstraint<Scalar>> rows_;
};

template <typename Scalar>
struct LPSolution {
  VectorX<Scalar> values;
  Scalar objective{0};
  LPStatus status = LPStatus::infeasible;
  bool is_vertex = false;
  std::size_t iterations = 0;
};

struct SimplexOptions {
  /// Dantzig pricing drops to Bland's rule after this many consecutive
  /// degenerate pivots; PivotRule::bland uses Bland's rule throughout.
  PivotRule rule = PivotRule::dantzig;
  std::size_t degenerate_switch = 64;
  std::size_t max_iterations = 500000;
};

namespace detail {

template <typename Scalar>
constexpr bool is_exact_v = !std::is_floating_point_v<Scalar>;

template <typename Scalar>
class Tableau {
 public:
  Tableau(const LinearProgram<Scalar>& lp, const SimplexOptions& opts) : lp_(lp), opts_(opts) {
    build();
  }

  LPSolution<Scalar> run() {
    LPSolution<Scalar> out;
    if (num_art_ > 0) {
      set_phase_costs(true);
      const LPStatus s1 = iterate(true);
      out.iterations = iterations_;
      if (s1 == LPStatus::iteration_limit) {
        out.status = s1;
        return out;
      }
      refresh_basic_values();
      Scalar infeas{0};
      for (std::size_t i = 0; i < m_; ++i)
        if (is_artificial(basis_[i])) infeas += abs_(xb_[i]);
      if (infeas > feas_tol_ * (Scalar(1) + rhs_scale_)) {
        out.status = LPStatus::infeasible;
        return out;
      }
      drive_out_artificials();
    }
    set_phase_costs(false);
    const LPStatus s2 = iterate(false);
    out.iterations = iterations_;
    out.status = s2;
    if (s2 != LPStatus::optimal) return out;
    refresh_basic_values();
    out.values = extract();
    out.objective = lp_.objective(out.values);
    out.is_vertex = true;
    return out;
  }

 private:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  const LinearProgram<Scalar>& lp_;
  SimplexOptions opts_;
  std::size_t n_ = 0;        // structural columns
  std::size_t m_ = 0;        // rows
  std::size_t num_slack_ = 0;
  std::size_t num_art_ = 0;
  std::size_t art_begin_ = 0;
  std::size_t ncols_ = 0;    // n + slacks + artificials; the rhs is stored in column ncols_
  Matrix tab_;
  std::vector<Scalar> upper_;  // shifted upper bounds, valid when has_upper_
  std::vector<char> has_upper_;
  std::vector<char> at_upper_;
  std::vector<char> excluded_;
  std::vector<std::size_t> basis_;
  std::vector<long> row_of_;
  std::vector<Scalar> xb_;
  std::vector<Scalar> cost_;
  std::vector<Scalar> red_;
  std::size_t iterations_ = 0;
  Scalar pivot_tol_{0}, cost_tol_{0}, feas_tol_{0}, rhs_scale_{0};

  static Scalar abs_(const Scalar& v) { return v < Scalar(0) ? Scalar(-v) : v; }
  bool is_artificial(std::size_t j) const { return j >= art_begin_ && j < ncols_; }

  void build() {
    n_ = lp_.num_variables();
    m_ = lp_.num_constraints();
    for (std::size_t j = 0; j < n_; ++j) {
      using std::isfinite;
      if constexpr (!is_exact_v<Scalar>) {
        if (!isfinite(lp_.lower(j))) throw ParameterError("finite lower bounds required");
      }
    }

    // Shifted rhs and normalized relations.
    std::vector<Scalar> b(m_);
    std::vector<Relation> rel(m_);
    std::vector<Scalar> sign(m_, Scalar(1));
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& row = lp_.constraints()[i];
      Scalar bi = row.rhs;
      for (const auto& [j, a] : row.terms) bi -= a * lp_.lower(j);
      rel[i] = row.relation;
      if (bi < Scalar(0)) {
        sign[i] = Scalar(-1);
        bi = -bi;
        if (rel[i] == Relation::less_equal) rel[i] = Relation::greater_equal;
        else if (rel[i] == Relation::greater_equal) rel[i] = Relation::less_equal;
      }
      b[i] = bi;
      if (abs_(bi) > rhs_scale_) rhs_scale_ = abs_(bi);
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (rel[i] != Relation::equal) ++num_slack_;
      if (rel[i] != Relation::less_equal) ++num_art_;
    }
    art_begin_ = n_ + num_slack_;
    ncols_ = art_begin_ + num_art_;

    tab_ = Matrix::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(ncols_ + 1));
    upper_.assign(ncols_, Scalar(0));
    has_upper_.assign(ncols_, 0);
    at_upper_.assign(ncols_, 0);
    excluded_.assign(ncols_, 0);
    row_of_.assign(ncols_, -1);
    basis_.assign(m_, 0);
    xb_.assign(m_, Scalar(0));

    for (std::size_t j = 0; j < n_; ++j) {
      if (lp_.upper(j)) {
        has_upper_[j] = 1;
        upper_[j] = *lp_.upper(j) - lp_.lower(j);
        if (upper_[j] == Scalar(0)) excluded_[j] = 1;
      }
    }

    Scalar cmax{1};
    for (std::size_t j = 0; j < n_; ++j)
      if (abs_(lp_.cost(j)) > cmax) cmax = abs_(lp_.cost(j));
    if constexpr (!is_exact_v<Scalar>) {
      pivot_tol_ = Scalar(1e-9);
      cost_tol_ = Scalar(1e-9) * cmax;
      feas_tol_ = Scalar(1e-7);
    }

    std::size_t slack = n_;
    std::size_t art = art_begin_;
    for (std::size_t i = 0; i < m_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      for (const auto& [j, a] : lp_.constraints()[i].terms)
        tab_(ii, static_cast<Eigen::Index>(j)) += sign[i] * a;
      tab_(ii, static_cast<Eigen::Index>(ncols_)) = b[i];
      if (rel[i] == Relation::less_equal) {
        tab_(ii, static_cast<Eigen::Index>(slack)) = Scalar(1);
        basis_[i] = slack++;
      } else {
        if (rel[i] == Relation::greater_equal)
          tab_(ii, static_cast<Eigen::Index>(slack++)) = Scalar(-1);
        tab_(ii, static_cast<Eigen::Index>(art)) = Scalar(1);
        basis_[i] = art++;
      }
      row_of_[basis_[i]] = static_cast<long>(i);
      xb_[i] = b[i];
    }
  }

  void set_phase_costs(bool phase_one) {
    cost_.assign(ncols_, Scalar(0));
    if (phase_one) {
      for (std::size_t j = art_begin_; j < ncols_; ++j) cost_[j] = Scalar(1);
    } else {
      for (std::size_t j = 0; j < n_; ++j) cost_[j] = lp_.cost(j);
    }
    red_.assign(ncols_, Scalar(0));
    for (std::size_t j = 0; j < ncols_; ++j) red_[j] = cost_[j];
    for (std::size_t i = 0; i < m_; ++i) {
      const Scalar& cb = cost_[basis_[i]];
      if (cb == Scalar(0)) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      for (std::size_t j = 0; j < ncols_; ++j) {
        const Scalar& t = tab_(ii, static_cast<Eigen::Index>(j));
        if (t != Scalar(0)) red_[j] -= cb * t;
      }
    }
    for (std::size_t i = 0; i < m_; ++i) red_[basis_[i]] = Scalar(0);
  }

  Scalar nonbasic_value(std::size_t j) const { return at_upper_[j] ? upper_[j] : Scalar(0); }

  // x_B = B^{-1} b - sum_{j nonbasic at upper} B^{-1} A_j u_j
  void refresh_basic_values() {
    for (std::size_t i = 0; i < m_; ++i)
      xb_[i] = tab_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ncols_));
    for (std::size_t j = 0; j < ncols_; ++j) {
      if (row_of_[j] >= 0 || !at_upper_[j]) continue;
      for (std::size_t i = 0; i < m_; ++i) {
        const Scalar& t = tab_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (t != Scalar(0)) xb_[i] -= t * upper_[j];
      }
    }
  }

  void pivot(std::size_t r, std::size_t q) {
    const auto rr = static_cast<Eigen::Index>(r);
    const auto qq = static_cast<Eigen::Index>(q);
    const Scalar piv = tab_(rr, qq);
    std::vector<Eigen::Index> nz;
    nz.reserve(ncols_ + 1);
    for (Eigen::Index j = 0; j <= static_cast<Eigen::Index>(ncols_); ++j) {
      if (tab_(rr, j) != Scalar(0)) {
        tab_(rr, j) /= piv;
        nz.push_back(j);
      }
    }
    tab_(rr, qq) = Scalar(1);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m_); ++i) {
      if (i == rr) continue;
      const Scalar f = tab_(i, qq);
      if (f == Scalar(0)) continue;
      if constexpr (is_exact_v<Scalar>) {
        for (auto j : nz) tab_(i, j) -= f * tab_(rr, j);
      } else {
        if (nz.size() * 4 > ncols_) {
          tab_.row(i) -= f * tab_.row(rr);
        } else {
          for (auto j : nz) tab_(i, j) -= f * tab_(rr, j);
        }
      }
      tab_(i, qq) = Scalar(0);
    }
    const Scalar dq = red_[q];
    if (dq != Scalar(0)) {
      for (auto j : nz)
        if (j < static_cast<Eigen::Index>(ncols_)) red_[static_cast<std::size_t>(j)] -= dq * tab_(rr, j);
    }
    red_[q] = Scalar(0);
    row_of_[basis_[r]] = -1;
    basis_[r] = q;
    row_of_[q] = static_cast<long>(r);
  }

  LPStatus iterate(bool phase_one) {
    PivotRule rule = opts_.rule;
    std::size_t degenerate_run = 0;
    std::size_t since_refresh = 0;
    while (true) {
      if (iterations_ >= opts_.max_iterations) return LPStatus::iteration_limit;

      // Entering column.
      long q = -1;
      int dir = 0;
      Scalar best_score{0};
      for (std::size_t j = 0; j < ncols_; ++j) {
        if (row_of_[j] >= 0 || excluded_[j]) continue;
        if (!phase_one && is_artificial(j)) continue;
        const Scalar& d = red_[j];
        int jdir = 0;
        if (!at_upper_[j] && d < -cost_tol_) jdir = 1;
        else if (at_upper_[j] && d > cost_tol_) jdir = -1;
        if (jdir == 0) continue;
        if (rule == PivotRule::bland) {
          q = static_cast<long>(j);
          dir = jdir;
          break;
        }
        const Scalar score = abs_(d);
        if (q < 0 || score > best_score) {
          q = static_cast<long>(j);
          dir = jdir;
          best_score = score;
        }
      }
      if (q < 0) return LPStatus::optimal;
      const auto qc = static_cast<std::size_t>(q);
      const auto qq = static_cast<Eigen::Index>(q);

      // Ratio test. Ties on the leaving side go to the smallest basic column index.
      bool bounded = has_upper_[qc];
      Scalar t_best = bounded ? upper_[qc] : Scalar(0);
      long leave = -1;
      bool leave_to_upper = false;
      for (std::size_t i = 0; i < m_; ++i) {
        const Scalar a = tab_(static_cast<Eigen::Index>(i), qq);
        if (abs_(a) <= pivot_tol_) continue;
        const Scalar rate = dir > 0 ? Scalar(-a) : a;  // d x_B[i] / dt
        Scalar t;
        bool to_upper = false;
        const std::size_t bi = basis_[i];
        if (rate < Scalar(0)) {
          Scalar room = xb_[i];
          if (room < Scalar(0)) room = Scalar(0);
          t = room / (-rate);
        } else {
          if (!has_upper_[bi]) continue;
          Scalar room = upper_[bi] - xb_[i];
          if (room < Scalar(0)) room = Scalar(0);
          t = room / rate;
          to_upper = true;
        }
        bool take = false;
        if (!bounded) {
          take = true;
        } else if (t < t_best) {
          take = true;
        } else if (t == t_best && leave >= 0 && bi < basis_[static_cast<std::size_t>(leave)]) {
          take = true;
        }
        if (take) {
          bounded = true;
          t_best = t;
          leave = static_cast<long>(i);
          leave_to_upper = to_upper;
        }
      }
      if (!bounded) return LPStatus::unbounded;

      const Scalar t = t_best;
      const Scalar step = dir > 0 ? t : Scalar(-t);
      if (t != Scalar(0)) {
        for (std::size_t i = 0; i < m_; ++i) {
          const Scalar& a = tab_(static_cast<Eigen::Index>(i), qq);
          if (a != Scalar(0)) xb_[i] -= step * a;
        }
      }

      if (leave < 0) {
        at_upper_[qc] = at_upper_[qc] ? 0 : 1;
      } else {
        const auto r = static_cast<std::size_t>(leave);
        const std::size_t out = basis_[r];
        const Scalar entering_value = nonbasic_value(qc) + step;
        pivot(r, qc);
        at_upper_[out] = leave_to_upper ? 1 : 0;
        at_upper_[qc] = 0;
        xb_[r] = entering_value;
      }
      ++iterations_;

      if constexpr (!is_exact_v<Scalar>) {
        if (t <= Scalar(1e-12)) ++degenerate_run;
        else degenerate_run = 0;
        if (++since_refresh >= 64) {
          refresh_basic_values();
          since_refresh = 0;
        }
      } else {
        if (t == Scalar(0)) ++degenerate_run;
        else degenerate_run = 0;
      }
      if (degenerate_run > opts_.degenerate_switch) rule = PivotRule::bland;
    }
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      long best = -1;
      Scalar best_mag{0};
      for (std::size_t j = 0; j < art_begin_; ++j) {
        if (row_of_[j] >= 0) continue;
        const Scalar mag = abs_(tab_(ii, static_cast<Eigen::Index>(j)));
        if (mag > pivot_tol_ && mag > best_mag) {
          best = static_cast<long>(j);
          best_mag = mag;
        }
      }
      if (best < 0) continue;  // redundant row; the artificial stays basic at zero
      const auto q = static_cast<std::size_t>(best);
      const std::size_t out = basis_[i];
      const Scalar value = nonbasic_value(q);
      pivot(i, q);
      at_upper_[out] = 0;
      at_upper_[q] = 0;
      xb_[i] = value;
    }
    for (std::size_t j = art_begin_; j < ncols_; ++j) {
      has_upper_[j] = 1;
      upper_[j] = Scalar(0);
      excluded_[j] = 1;
    }
    refresh_basic_values();
  }

  VectorX<Scalar> extract() const {
    VectorX<Scalar> x(static_cast<Eigen::Index>(n_));
    for (std::size_t j = 0; j < n_; ++j) {
      Scalar v = row_of_[j] >= 0 ? xb_[static_cast<std::size_t>(row_of_[j])] : nonbasic_value(j);
      if constexpr (!is_exact_v<Scalar>) {
        // Basic values carry round-off; pull values that sit on a bound back onto it.
        if (std::abs(v) < 1e-11) v = 0.0;
        if (has_upper_[j] && std::abs(v - upper_[j]) < 1e-11) v = upper_[j];
        if (v < 0.0 && v > -1e-9) v = 0.0;
        if (has_upper_[j] && v > upper_[j] && v < upper_[j] + 1e-9) v = upper_[j];
      }
      x(static_cast<Eigen::Index>(j)) = lp_.lower(j) + v;
    }
    return x;
  }
};

}  // namespace detail

/// Optimal basic feasible solution of lp, or a non-optimal status.
template <typename Scalar>
LPSolution<Scalar> solve_to_vertex(const LinearProgram<Scalar>& lp,
                                   const SimplexOptions& opts = {}) {
  detail::Tableau<Scalar> tableau(lp, opts);
  return tableau.run();
}

/// Solves in exact rationals and converts the answer back to double.
LPSolution<double> solve_to_vertex_exact(const LinearProgram<double>& lp,
                                         const SimplexOptions& opts = {});

enum class Grid { half, unit };

/// Rounds each value to the nearest grid point (multiples of 1/2 or of 1).
/// Throws SnapFailure listing every coordinate farther than tol from the grid.
Eigen::VectorXd snap(const Eigen::VectorXd& values, Grid grid, double tol);

/// As above, then re-checks every constraint and bound of lp with slack tol.
Eigen::VectorXd snap(const Eigen::VectorXd& values, Grid grid, double tol,
                     const LinearProgram<double>& lp);

/// CPLEX-style LP text dump for cross-checking with external solvers.
void write_lp_format(std::ostream& out, const LinearProgram<double>& lp);

}  // namespace fairclust
