#include "fairclust/lp.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

namespace fairclust {

const char* to_string(LPStatus status) {
  switch (status) {
    case LPStatus::optimal: return "optimal";
    case LPStatus::infeasible: return "infeasible";
    case LPStatus::unbounded: return "unbounded";
    case LPStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

LPSolution<double> solve_to_vertex_exact(const LinearProgram<double>& lp,
                                         const SimplexOptions& opts) {
  const auto exact = lp.cast<Rational>();
  auto sol = solve_to_vertex(exact, opts);
  LPSolution<double> out;
  out.status = sol.status;
  out.is_vertex = sol.is_vertex;
  out.iterations = sol.iterations;
  if (sol.status == LPStatus::optimal) {
    out.values.resize(sol.values.size());
    for (Eigen::Index j = 0; j < sol.values.size(); ++j)
      out.values(j) = sol.values(j).convert_to<double>();
    out.objective = sol.objective.convert_to<double>();
  }
  return out;
}

Eigen::VectorXd snap(const Eigen::VectorXd& values, Grid grid, double tol) {
  if (!(tol > 0.0)) throw ParameterError("snap tolerance must be positive");
  const double scale = grid == Grid::half ? 2.0 : 1.0;
  Eigen::VectorXd out(values.size());
  std::vector<std::size_t> bad;
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    const double target = std::round(values(j) * scale) / scale;
    if (!(std::abs(values(j) - target) <= tol)) bad.push_back(static_cast<std::size_t>(j));
    out(j) = target;
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "values off the " << (grid == Grid::half ? "half-integral" : "integral")
        << " grid at coordinates";
    for (std::size_t i = 0; i < bad.size() && i < 8; ++i)
      msg << ' ' << bad[i] << '=' << std::setprecision(12) << values(static_cast<Eigen::Index>(bad[i]));
    throw SnapFailure(msg.str(), std::move(bad));
  }
  return out;
}

Eigen::VectorXd snap(const Eigen::VectorXd& values, Grid grid, double tol,
                     const LinearProgram<double>& lp) {
  Eigen::VectorXd out = snap(values, grid, tol);
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < lp.num_constraints(); ++i) {
    const auto& row = lp.constraints()[i];
    const double act = lp.row_activity(i, out);
    bool ok = true;
    switch (row.relation) {
      case Relation::less_equal: ok = act <= row.rhs + tol; break;
      case Relation::greater_equal: ok = act >= row.rhs - tol; break;
      case Relation::equal: ok = std::abs(act - row.rhs) <= tol; break;
    }
    if (!ok) bad.push_back(i);
  }
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    const double v = out(static_cast<Eigen::Index>(j));
    if (v < lp.lower(j) - tol || (lp.upper(j) && v > *lp.upper(j) + tol)) {
      throw SnapFailure("snapped value leaves the bounds of variable " + lp.name(j), {j});
    }
  }
  if (!bad.empty()) {
    const std::string what = "snapped point violates constraint " + lp.constraints()[bad.front()].name;
    throw SnapFailure(what, std::move(bad));
  }
  return out;
}

void write_lp_format(std::ostream& out, const LinearProgram<double>& lp) {
  auto term = [&](double a, const std::string& name, bool first) {
    if (a < 0) out << (first ? "- " : " - ") << -a << ' ' << name;
    else out << (first ? "" : " + ") << a << ' ' << name;
  };
  out << std::setprecision(17);
  out << "Minimize\n obj:";
  bool first = true;
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    if (lp.cost(j) == 0.0) continue;
    out << ' ';
    term(lp.cost(j), lp.name(j), first);
    first = false;
  }
  if (first) out << " 0 " << (lp.num_variables() ? lp.name(0) : "x");
  out << "\nSubject To\n";
  for (const auto& row : lp.constraints()) {
    out << ' ' << row.name << ':';
    bool f = true;
    for (const auto& [j, a] : row.terms) {
      out << ' ';
      term(a, lp.name(j), f);
      f = false;
    }
    if (f) out << " 0 " << (lp.num_variables() ? lp.name(0) : "x");
    switch (row.relation) {
      case Relation::less_equal: out << " <= "; break;
      case Relation::greater_equal: out << " >= "; break;
      case Relation::equal: out << " = "; break;
    }
    out << row.rhs << '\n';
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    out << ' ' << lp.lower(j) << " <= " << lp.name(j);
    if (lp.upper(j)) out << " <= " << *lp.upper(j);
    out << '\n';
  }
  out << "End\n";
}

}  // namespace fairclust
