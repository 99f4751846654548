#include "fairclust/matroid_fl.hpp"

#include "fairclust/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace fairclust {

namespace {

double pow_p(double d, double p) { return p == 1.0 ? d : std::pow(d, p); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

}  // namespace

FLInstance::FLInstance(std::vector<Facility> facilities, std::vector<Client> clients,
                       Eigen::MatrixXd node_distances, double p, PartitionMatroid matroid,
                       bool check_triangle)
    : facilities_(std::move(facilities)),
      clients_(std::move(clients)),
      nodes_(std::move(node_distances)),
      p_(p),
      matroid_(std::move(matroid)) {
  if (!(p_ >= 1.0) || !std::isfinite(p_)) throw ParameterError("p must be a finite value >= 1");
  const auto n = static_cast<Eigen::Index>(facilities_.size() + clients_.size());
  if (nodes_.rows() != n || nodes_.cols() != n) {
    throw ParameterError("distance matrix must be square over facilities and clients");
  }
  std::unordered_set<int> seen;
  for (const auto& f : facilities_) {
    if (!seen.insert(f.id).second) throw ParameterError("duplicate facility id " + std::to_string(f.id));
    if (!(f.cost >= 0.0) || !std::isfinite(f.cost))
      throw ParameterError("opening costs must be finite and nonnegative");
  }
  seen.clear();
  for (const auto& c : clients_) {
    if (!seen.insert(c.id).second) throw ParameterError("duplicate client id " + std::to_string(c.id));
    if (!(c.demand >= 0.0) || !std::isfinite(c.demand))
      throw ParameterError("demands must be finite and nonnegative");
  }
  if (matroid_.ground_set().size() != facilities_.size())
    throw ParameterError("matroid ground set must equal the facility set");
  for (std::size_t u = 0; u < facilities_.size(); ++u) {
    if (matroid_.ground_set()[u] != facilities_[u].id)
      throw ParameterError("matroid ground set must list the facilities in order");
  }

  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (nodes_(i, i) != 0.0) throw ParameterError("distance matrix must have a zero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = nodes_(i, j);
      if (!std::isfinite(d) || d < 0.0) throw ParameterError("distances must be finite and nonnegative");
      if (std::abs(d - nodes_(j, i)) > 1e-12 * (1.0 + d))
        throw ParameterError("distance matrix must be symmetric");
      scale = std::max(scale, d);
    }
  }
  if (check_triangle && n <= 400) {
    const double slack = 1e-9 * (1.0 + scale);
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          if (nodes_(i, j) > nodes_(i, k) + nodes_(k, j) + slack)
            throw ParameterError("distances violate the triangle inequality");
  }

  const auto nf = static_cast<Eigen::Index>(facilities_.size());
  const auto nc = static_cast<Eigen::Index>(clients_.size());
  cost_p_.resize(nc, nf);
  for (Eigen::Index v = 0; v < nc; ++v)
    for (Eigen::Index u = 0; u < nf; ++u) cost_p_(v, u) = pow_p(nodes_(nf + v, u), p_);
}

Eigen::VectorXd FLInstance::demands() const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(clients_.size()));
  for (std::size_t v = 0; v < clients_.size(); ++v) w(static_cast<Eigen::Index>(v)) = clients_[v].demand;
  return w;
}

std::size_t FLInstance::facility_index(int id) const {
  for (std::size_t u = 0; u < facilities_.size(); ++u)
    if (facilities_[u].id == id) return u;
  throw LookupError("unknown facility " + std::to_string(id));
}

std::size_t FLInstance::client_index(int id) const {
  for (std::size_t v = 0; v < clients_.size(); ++v)
    if (clients_[v].id == id) return v;
  throw LookupError("unknown client " + std::to_string(id));
}

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::fractional: return "fractional";
    case Stage::half_integral: return "half-integral";
    case Stage::integral: return "integral";
  }
  return "unknown";
}

double fl_cost(const FLInstance& inst, const FractionalSolution& sol, const Eigen::VectorXd& demands) {
  double total = 0.0;
  for (std::size_t u = 0; u < inst.num_facilities(); ++u)
    total += inst.facility_cost(u) * sol.y(static_cast<Eigen::Index>(u));
  for (std::size_t v = 0; v < inst.num_clients(); ++v) {
    const double w = demands(static_cast<Eigen::Index>(v));
    if (w == 0.0) continue;
    double a = 0.0;
    for (std::size_t u = 0; u < inst.num_facilities(); ++u)
      a += inst.dist_p(v, u) * sol.x(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u));
    total += w * a;
  }
  return total;
}

double integral_cost(const FLInstance& inst, const std::vector<std::size_t>& open,
                     const Eigen::VectorXd& demands) {
  double total = 0.0;
  for (std::size_t u : open) total += inst.facility_cost(u);
  for (std::size_t v = 0; v < inst.num_clients(); ++v) {
    const double w = demands(static_cast<Eigen::Index>(v));
    if (w == 0.0) continue;
    if (open.empty()) throw InfeasibleError("no open facility for a client with positive demand");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t u : open) best = std::min(best, inst.dist_p(v, u));
    total += w * best;
  }
  return total;
}

LPRelaxation solve_lp_relaxation(const FLInstance& inst, const MatroidFLOptions& opts) {
  const std::size_t nf = inst.num_facilities();
  const std::size_t nc = inst.num_clients();
  LinearProgram<double> lp;
  for (std::size_t u = 0; u < nf; ++u)
    lp.add_variable(0.0, 1.0, inst.facility_cost(u), "y_" + std::to_string(inst.facilities()[u].id));

  std::vector<std::size_t> active;
  for (std::size_t v = 0; v < nc; ++v)
    if (inst.demand(v) > 0.0) active.push_back(v);

  std::vector<std::size_t> xcol(active.size() * nf);
  for (std::size_t a = 0; a < active.size(); ++a) {
    const std::size_t v = active[a];
    for (std::size_t u = 0; u < nf; ++u) {
      xcol[a * nf + u] = lp.add_variable(
          0.0, 1.0, inst.demand(v) * inst.dist_p(v, u),
          "x_" + std::to_string(inst.clients()[v].id) + "_" + std::to_string(inst.facilities()[u].id));
    }
  }
  for (std::size_t a = 0; a < active.size(); ++a) {
    LinearConstraint<double> row;
    row.relation = Relation::equal;
    row.rhs = 1.0;
    row.name = "assign_" + std::to_string(inst.clients()[active[a]].id);
    for (std::size_t u = 0; u < nf; ++u) row.terms.emplace_back(xcol[a * nf + u], 1.0);
    lp.add_constraint(std::move(row));
  }
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t u = 0; u < nf; ++u) {
      LinearConstraint<double> row;
      row.relation = Relation::less_equal;
      row.rhs = 0.0;
      row.name = "open_" + std::to_string(inst.clients()[active[a]].id) + "_" +
                 std::to_string(inst.facilities()[u].id);
      row.terms = {{xcol[a * nf + u], 1.0}, {u, -1.0}};
      lp.add_constraint(std::move(row));
    }
  }
  append_matroid_rows(lp, inst.matroid(), 0);
  if (opts.on_lp) opts.on_lp("relaxation", lp);

  const auto sol = solve_to_vertex(lp, opts.simplex);
  if (sol.status == LPStatus::infeasible)
    throw InfeasibleError("the matroid cannot open enough facilities to serve every client");
  if (sol.status != LPStatus::optimal)
    throw InternalError(std::string("LP relaxation ended with status ") + to_string(sol.status));

  LPRelaxation out;
  out.solution.y = sol.values.head(static_cast<Eigen::Index>(nf));
  out.solution.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nf));
  for (std::size_t a = 0; a < active.size(); ++a)
    for (std::size_t u = 0; u < nf; ++u)
      out.solution.x(static_cast<Eigen::Index>(active[a]), static_cast<Eigen::Index>(u)) =
          sol.values(static_cast<Eigen::Index>(xcol[a * nf + u]));
  out.solution.stage = Stage::fractional;
  out.z = fl_cost(inst, out.solution, inst.demands());
  out.lp_variables = lp.num_variables();
  out.lp_iterations = sol.iterations;
  return out;
}

Eigen::VectorXd fractional_distances(const FLInstance& inst, const Eigen::MatrixXd& x) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(inst.num_clients()));
  for (std::size_t v = 0; v < inst.num_clients(); ++v) {
    double a = 0.0;
    for (std::size_t u = 0; u < inst.num_facilities(); ++u)
      a += inst.dist_p(v, u) * x(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u));
    r(static_cast<Eigen::Index>(v)) = inst.p() == 1.0 ? a : std::pow(a, 1.0 / inst.p());
  }
  return r;
}

ConsolidatedInstance consolidate(const FLInstance& inst, const FractionalSolution& sol) {
  const std::size_t nc = inst.num_clients();
  const double p = inst.p();
  ConsolidatedInstance out;
  out.threshold_factor = std::pow(2.0, (p + 1.0) / p);
  out.frac_cost.resize(static_cast<Eigen::Index>(nc));
  for (std::size_t v = 0; v < nc; ++v) {
    double a = 0.0;
    for (std::size_t u = 0; u < inst.num_facilities(); ++u)
      a += inst.dist_p(v, u) * sol.x(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u));
    out.frac_cost(static_cast<Eigen::Index>(v)) = a;
  }
  out.frac_dist = fractional_distances(inst, sol.x);
  out.demand = inst.demands();
  out.relocation.resize(nc);
  std::iota(out.relocation.begin(), out.relocation.end(), std::size_t{0});
  out.order.resize(nc);
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
    return out.frac_dist(static_cast<Eigen::Index>(a)) < out.frac_dist(static_cast<Eigen::Index>(b));
  });

  auto& w = out.demand;
  for (std::size_t i = 0; i + 1 < nc; ++i) {
    const std::size_t vi = out.order[i];
    for (std::size_t j = i + 1; j < nc; ++j) {
      const std::size_t vj = out.order[j];
      const auto ii = static_cast<Eigen::Index>(vi);
      const auto jj = static_cast<Eigen::Index>(vj);
      if (inst.client_dist(vi, vj) <= out.threshold_factor * out.frac_dist(jj) && w(ii) > 0.0) {
        if (w(jj) > 0.0) out.relocation[vj] = vi;
        w(ii) += w(jj);
        w(jj) = 0.0;
      }
    }
  }
  for (std::size_t v = 0; v < nc; ++v)
    if (w(static_cast<Eigen::Index>(v)) > 0.0) out.support.push_back(v);
  return out;
}

NeighborhoodStructure build_neighborhoods(const FLInstance& inst, const ConsolidatedInstance& cons,
                                          const FractionalSolution& lp_solution) {
  const auto& support = cons.support;
  if (support.empty()) throw ParameterError("consolidated instance has no client with positive demand");
  const std::size_t nf = inst.num_facilities();
  const std::size_t ns = support.size();
  const double inf = std::numeric_limits<double>::infinity();

  NeighborhoodStructure nb;
  nb.F.resize(ns);
  nb.F_prime.resize(ns);
  nb.G.resize(ns);
  nb.gamma.assign(ns, inf);
  nb.gamma_witness.assign(ns, kNone);
  nb.owner.assign(nf, kNone);

  for (std::size_t u = 0; u < nf; ++u) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < ns; ++s)
      if (inst.dist(support[s], u) < inst.dist(support[best], u)) best = s;
    nb.owner[u] = best;
    nb.F[best].push_back(u);
  }

  for (std::size_t s = 0; s < ns; ++s) {
    const std::size_t v = support[s];
    const double Rp = cons.frac_cost(static_cast<Eigen::Index>(v));
    std::size_t arg = kNone;
    for (std::size_t u = 0; u < nf; ++u) {
      if (nb.owner[u] == s) continue;
      if (arg == kNone || inst.dist(v, u) < inst.dist(v, arg)) arg = u;
    }
    if (arg != kNone) {
      nb.gamma[s] = inst.dist(v, arg);
      nb.gamma_witness[s] = nb.owner[arg];
    }
    for (std::size_t u : nb.F[s]) {
      if (inst.dist_p(v, u) <= 2.0 * Rp) nb.F_prime[s].push_back(u);
      if (inst.dist(v, u) <= nb.gamma[s]) nb.G[s].push_back(u);
    }
  }

  // Invariants.
  std::size_t covered = 0;
  for (const auto& f : nb.F) covered += f.size();
  if (covered != nf) throw InternalError("facility neighborhoods do not partition the facilities");
  for (std::size_t s = 0; s < ns; ++s) {
    const std::size_t v = support[s];
    const auto vi = static_cast<Eigen::Index>(v);
    const std::string who = "client " + std::to_string(inst.clients()[v].id);
    if (!std::includes(nb.G[s].begin(), nb.G[s].end(), nb.F_prime[s].begin(), nb.F_prime[s].end()))
      throw InternalError("F'(v) is not contained in G(v) for " + who);
    const double Rp = cons.frac_cost(vi);
    if (std::isfinite(nb.gamma[s]) && !(pow_p(nb.gamma[s], inst.p()) > 2.0 * Rp * (1.0 - 1e-12)))
      throw InternalError("gamma does not exceed 2^(1/p) R(v) for " + who);
    double mass = 0.0;
    for (std::size_t u : nb.F_prime[s]) mass += lp_solution.x(vi, static_cast<Eigen::Index>(u));
    if (mass < 0.5 - 1e-7)
      throw InternalError("F'(v) carries assignment mass " + fmt(mass) + " < 1/2 for " + who);
  }
  return nb;
}

Eigen::MatrixXd optimal_assignment(const Eigen::VectorXd& y, const Eigen::VectorXd& demands,
                                   const FLInstance& inst) {
  const std::size_t nf = inst.num_facilities();
  const std::size_t nc = inst.num_clients();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nf));
  std::vector<std::size_t> order(nf);
  for (std::size_t v = 0; v < nc; ++v) {
    if (!(demands(static_cast<Eigen::Index>(v)) > 0.0)) continue;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return inst.dist(v, a) < inst.dist(v, b); });
    double remaining = 1.0;
    for (std::size_t u : order) {
      const double cap = y(static_cast<Eigen::Index>(u));
      if (cap <= 1e-12) continue;
      const double take = std::min(remaining, cap);
      x(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) = take;
      remaining -= take;
      if (remaining <= 1e-12) break;
    }
    if (remaining > 1e-9) {
      throw InfeasibleError("open capacity " + fmt(1.0 - remaining) + " < 1 for client " +
                            std::to_string(inst.clients()[v].id));
    }
  }
  return x;
}

double ProxyProgram::evaluate(const Eigen::VectorXd& y) const {
  double total = 0.0;
  for (std::size_t u = 0; u < opening.size(); ++u) total += opening[u] * y(static_cast<Eigen::Index>(u));
  for (const auto& t : terms) {
    double assigned = 0.0;
    double mass = 0.0;
    for (std::size_t i = 0; i < t.facilities.size(); ++i) {
      const double yu = y(static_cast<Eigen::Index>(t.facilities[i]));
      assigned += t.unit_cost[i] * yu;
      mass += yu;
    }
    if (t.penalty != 0.0) assigned += t.penalty * (1.0 - mass);
    total += t.weight * assigned;
  }
  return total;
}

namespace {

// Expands the per-client terms into LP costs and a constant.
void expand_terms(ProxyProgram& prog, const FLInstance& inst) {
  std::vector<double> c = prog.opening;
  for (const auto& t : prog.terms) {
    prog.constant += t.weight * t.penalty;
    for (std::size_t i = 0; i < t.facilities.size(); ++i)
      c[t.facilities[i]] += t.weight * (t.unit_cost[i] - t.penalty);
  }
  for (std::size_t u = 0; u < c.size(); ++u)
    prog.polytope.add_variable(0.0, 1.0, c[u], "y_" + std::to_string(inst.facilities()[u].id));
  append_matroid_rows(prog.polytope, inst.matroid(), 0);
}

}  // namespace

ProxyProgram build_half_integral_program(const FLInstance& inst, const ConsolidatedInstance& cons,
                                         const NeighborhoodStructure& nbhd) {
  const std::size_t nf = inst.num_facilities();
  const double three_p = std::pow(3.0, inst.p());
  ProxyProgram prog;
  prog.opening.resize(nf);
  for (std::size_t u = 0; u < nf; ++u) prog.opening[u] = inst.facility_cost(u);

  std::vector<LinearConstraint<double>> rows;
  for (std::size_t s = 0; s < cons.support.size(); ++s) {
    const std::size_t v = cons.support[s];
    const std::string cid = std::to_string(inst.clients()[v].id);
    ProxyTerm term;
    term.weight = cons.demand(static_cast<Eigen::Index>(v));
    term.facilities = nbhd.G[s];
    for (std::size_t u : nbhd.G[s]) term.unit_cost.push_back(inst.dist_p(v, u));
    LinearConstraint<double> g;
    g.name = "g_" + cid;
    g.rhs = 1.0;
    for (std::size_t u : nbhd.G[s]) g.terms.emplace_back(u, 1.0);
    if (std::isfinite(nbhd.gamma[s])) {
      term.penalty = three_p * pow_p(nbhd.gamma[s], inst.p());
      LinearConstraint<double> half;
      half.name = "fprime_" + cid;
      half.relation = Relation::greater_equal;
      half.rhs = 0.5;
      for (std::size_t u : nbhd.F_prime[s]) half.terms.emplace_back(u, 1.0);
      rows.push_back(std::move(half));
      g.relation = Relation::less_equal;
    } else {
      g.relation = Relation::equal;
    }
    rows.push_back(std::move(g));
    prog.terms.push_back(std::move(term));
  }
  expand_terms(prog, inst);
  for (auto& r : rows) prog.polytope.add_constraint(std::move(r));
  return prog;
}

namespace {

struct SnappedVertex {
  Eigen::VectorXd raw;
  Eigen::VectorXd snapped;
  bool exact_fallback = false;
};

SnappedVertex minimize_and_snap(const LinearProgram<double>& lp, Grid grid, const std::string& stage,
                                const MatroidFLOptions& opts) {
  if (opts.on_lp) opts.on_lp(stage, lp);
  const bool exact = opts.exact_rational && lp.num_variables() <= opts.exact_max_variables;
  auto solve = [&](bool use_exact) {
    auto sol = use_exact ? solve_to_vertex_exact(lp, opts.simplex) : solve_to_vertex(lp, opts.simplex);
    if (sol.status != LPStatus::optimal)
      throw InternalError(stage + " polytope solve ended with status " + to_string(sol.status));
    return sol.values;
  };
  SnappedVertex out;
  out.raw = solve(exact);
  try {
    out.snapped = snap(out.raw, grid, opts.snap_tol, lp);
  } catch (const SnapFailure&) {
    if (exact) throw;
    out.raw = solve(true);
    out.exact_fallback = true;
    out.snapped = snap(out.raw, grid, opts.snap_tol, lp);
  }
  return out;
}

}  // namespace

HalfIntegralResult half_integral_round(const FLInstance& inst, const ConsolidatedInstance& cons,
                                       const NeighborhoodStructure& nbhd,
                                       const FractionalSolution& lp_solution,
                                       const MatroidFLOptions& opts) {
  const std::size_t nf = inst.num_facilities();
  HalfIntegralResult out;
  out.program = build_half_integral_program(inst, cons, nbhd);

  Eigen::VectorXd yp = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nf));
  for (std::size_t s = 0; s < cons.support.size(); ++s) {
    const auto v = static_cast<Eigen::Index>(cons.support[s]);
    double g = 0.0;
    for (std::size_t u : nbhd.G[s]) {
      yp(static_cast<Eigen::Index>(u)) = lp_solution.x(v, static_cast<Eigen::Index>(u));
      g += yp(static_cast<Eigen::Index>(u));
    }
    if (g > 1.0 + 1e-7) throw InternalError("intermediate solution overfills G(v)");
  }
  if (out.program.polytope.max_violation(yp) > 1e-7)
    throw InternalError("intermediate solution lies outside the half-integral polytope");
  out.intermediate.y = yp;
  out.intermediate.x = optimal_assignment(yp, cons.demand, inst);
  out.intermediate.stage = Stage::fractional;
  out.cost_intermediate = fl_cost(inst, out.intermediate, cons.demand);
  out.T_intermediate = out.program.evaluate(yp);

  auto v = minimize_and_snap(out.program.polytope, Grid::half, "half_integral", opts);
  out.raw_vertex = std::move(v.raw);
  out.exact_fallback = v.exact_fallback;
  out.solution.y = std::move(v.snapped);
  out.solution.x = optimal_assignment(out.solution.y, cons.demand, inst);
  out.solution.stage = Stage::half_integral;
  out.T_solution = out.program.evaluate(out.solution.y);
  out.cost_solution = fl_cost(inst, out.solution, cons.demand);
  return out;
}

CoreStructure select_core_clients(const FLInstance& inst, const ConsolidatedInstance& cons,
                                  const FractionalSolution& half) {
  const std::size_t nc = inst.num_clients();
  const std::size_t nf = inst.num_facilities();
  CoreStructure core;
  core.cr.assign(nc, kNone);
  core.primary.assign(nc, kNone);
  core.secondary.assign(nc, kNone);
  core.serving.assign(nc, {});
  core.R2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nc));
  Eigen::VectorXd R2p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nc));

  for (std::size_t v : cons.support) {
    const auto vi = static_cast<Eigen::Index>(v);
    double a = 0.0;
    for (std::size_t u = 0; u < nf; ++u) {
      const double xv = half.x(vi, static_cast<Eigen::Index>(u));
      if (xv > 0.0) core.serving[v].push_back(u);
      a += inst.dist_p(v, u) * xv;
    }
    R2p(vi) = a;
    core.R2(vi) = inst.p() == 1.0 ? a : std::pow(a, 1.0 / inst.p());
    auto& sv = core.serving[v];
    if (sv.empty()) throw InternalError("support client without serving facility");
    std::vector<std::size_t> by_dist = sv;
    std::stable_sort(by_dist.begin(), by_dist.end(),
                     [&](std::size_t x, std::size_t y) { return inst.dist(v, x) < inst.dist(v, y); });
    core.primary[v] = by_dist.front();
    core.secondary[v] = by_dist.size() > 1 ? by_dist[1] : by_dist.front();
  }

  std::vector<std::size_t> remaining = cons.support;
  auto intersects = [&](std::size_t a, std::size_t b) {
    for (std::size_t u : core.serving[a])
      if (std::find(core.serving[b].begin(), core.serving[b].end(), u) != core.serving[b].end())
        return true;
    return false;
  };
  while (!remaining.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < remaining.size(); ++i)
      if (R2p(static_cast<Eigen::Index>(remaining[i])) < R2p(static_cast<Eigen::Index>(remaining[best])))
        best = i;
    const std::size_t star = remaining[best];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    core.core.push_back(star);
    core.cr[star] = star;
    std::vector<std::size_t> keep;
    for (std::size_t v : remaining) {
      if (intersects(star, v)) core.cr[v] = star;
      else keep.push_back(v);
    }
    remaining = std::move(keep);
  }
  return core;
}

ProxyProgram build_integral_program(const FLInstance& inst, const ConsolidatedInstance& cons,
                                    const CoreStructure& core) {
  const std::size_t nf = inst.num_facilities();
  ProxyProgram prog;
  prog.opening.resize(nf);
  for (std::size_t u = 0; u < nf; ++u) prog.opening[u] = inst.facility_cost(u);
  for (std::size_t v : cons.support) {
    ProxyTerm term;
    term.weight = cons.demand(static_cast<Eigen::Index>(v));
    term.facilities = core.serving[core.cr[v]];
    for (std::size_t u : term.facilities) term.unit_cost.push_back(inst.dist_p(v, u));
    prog.terms.push_back(std::move(term));
  }
  expand_terms(prog, inst);
  for (std::size_t v : core.core) {
    LinearConstraint<double> row;
    row.name = "core_" + std::to_string(inst.clients()[v].id);
    row.relation = Relation::equal;
    row.rhs = 1.0;
    for (std::size_t u : core.serving[v]) row.terms.emplace_back(u, 1.0);
    prog.polytope.add_constraint(std::move(row));
  }
  return prog;
}

IntegralResult integral_round(const FLInstance& inst, const ConsolidatedInstance& cons,
                              const CoreStructure& core, const FractionalSolution& half,
                              const MatroidFLOptions& opts) {
  IntegralResult out;
  out.program = build_integral_program(inst, cons, core);
  out.intermediate_y = half.y;
  for (std::size_t v : core.core)
    for (std::size_t u : core.serving[v])
      out.intermediate_y(static_cast<Eigen::Index>(u)) =
          half.x(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u));
  out.H_intermediate = out.program.evaluate(out.intermediate_y);

  auto v = minimize_and_snap(out.program.polytope, Grid::unit, "integral", opts);
  out.raw_vertex = std::move(v.raw);
  out.exact_fallback = v.exact_fallback;
  out.solution.y = std::move(v.snapped);
  out.solution.x = optimal_assignment(out.solution.y, cons.demand, inst);
  out.solution.stage = Stage::integral;
  out.H_solution = out.program.evaluate(out.solution.y);
  out.cost_solution = fl_cost(inst, out.solution, cons.demand);
  return out;
}

double chain_factor(double p) {
  return 4.0 * std::pow(16.0, p - 1.0) +
         std::pow(8.0 / 7.0, p - 1.0) * (4.0 * std::pow(3.0, p - 1.0) + 2.0) * std::pow(3.0, p);
}

double rounding_guarantee(double p) { return std::max(std::pow(16.0, p), chain_factor(p)); }

bool within_slack(double lhs, double rhs, double rel) {
  return lhs <= rhs + rel * std::max(std::abs(lhs), std::abs(rhs)) + 1e-12;
}

bool CertificateChain::verified() const {
  return std::all_of(links.begin(), links.end(),
                     [](const CertificateLink& l) { return l.holds || !l.guaranteed; });
}

const CertificateLink* CertificateChain::find(const std::string& name) const {
  for (const auto& l : links)
    if (l.name == name) return &l;
  return nullptr;
}

namespace {

CertificateChain build_chain(const MatroidFLResult& r, double p, double lp_on_consolidated) {
  CertificateChain c;
  c.p = p;
  c.z_lp = r.lp.z;
  c.cost_lp_on_consolidated = lp_on_consolidated;
  c.cost_intermediate = r.half.cost_intermediate;
  c.T_intermediate = r.half.T_intermediate;
  c.T_half = r.half.T_solution;
  c.cost_half = r.half.cost_solution;
  c.H_intermediate = r.integral.H_intermediate;
  c.H_integral = r.integral.H_solution;
  c.cost_integral = r.integral.cost_solution;
  c.final_cost = r.final_cost;
  c.half_factor = std::pow(3.0, p);
  c.integral_factor = 4.0 * std::pow(3.0, p - 1.0) + 2.0;
  c.certified_factor = chain_factor(p);

  auto add = [&](std::string name, double lhs, double rhs, bool guaranteed = true) {
    c.links.push_back({std::move(name), lhs, rhs, within_slack(lhs, rhs), guaranteed});
  };
  add("lp_on_consolidated_le_z", c.cost_lp_on_consolidated, c.z_lp);
  add("z_le_T_intermediate", c.z_lp, c.T_intermediate, false);
  add("cost_intermediate_le_T_intermediate", c.cost_intermediate, c.T_intermediate);
  add("T_intermediate_le_3p_z", c.T_intermediate, c.half_factor * c.z_lp);
  add("cost_half_le_T_half", c.cost_half, c.T_half);
  add("T_half_le_T_intermediate", c.T_half, c.T_intermediate);
  add("cost_integral_le_H_integral", c.cost_integral, c.H_integral);
  add("H_integral_le_H_intermediate", c.H_integral, c.H_intermediate);
  add("H_intermediate_le_factor_cost_half", c.H_intermediate, c.integral_factor * c.cost_half);
  add("final_le_conversion_bound", c.final_cost,
      4.0 * std::pow(16.0, p - 1.0) * c.z_lp + std::pow(8.0 / 7.0, p - 1.0) * c.cost_integral);
  add("final_le_chain_factor_z", c.final_cost, c.certified_factor * c.z_lp);
  if (p > 1.0) {
    const double bound = std::pow(16.0, p);
    add("final_le_16p_z", c.final_cost, bound * c.z_lp, c.certified_factor <= bound);
  }
  return c;
}

}  // namespace

MatroidFLResult solve_matroid_fl(const FLInstance& inst, const MatroidFLOptions& opts) {
  MatroidFLResult r;
  const Eigen::VectorXd w = inst.demands();
  const std::size_t nf = inst.num_facilities();
  const std::size_t nc = inst.num_clients();

  r.lp = solve_lp_relaxation(inst, opts);
  r.consolidated = consolidate(inst, r.lp.solution);
  double lp_on_cons = 0.0;

  if (r.consolidated.support.empty()) {
    // Nothing to serve: open nothing.
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nf));
    const Eigen::MatrixXd none = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nf));
    r.half.intermediate = {none, zero, Stage::fractional};
    r.half.solution = {none, zero, Stage::half_integral};
    r.integral.intermediate_y = zero;
    r.integral.solution = {none, zero, Stage::integral};
    r.assignment = none;
  } else {
    lp_on_cons = fl_cost(inst, r.lp.solution, r.consolidated.demand);
    r.neighborhoods = build_neighborhoods(inst, r.consolidated, r.lp.solution);
    r.half = half_integral_round(inst, r.consolidated, r.neighborhoods, r.lp.solution, opts);
    r.core = select_core_clients(inst, r.consolidated, r.half.solution);
    r.integral = integral_round(inst, r.consolidated, r.core, r.half.solution, opts);
    for (std::size_t u = 0; u < nf; ++u)
      if (r.integral.solution.y(static_cast<Eigen::Index>(u)) == 1.0) r.open.push_back(u);

    std::vector<int> open_ids;
    for (std::size_t u : r.open) open_ids.push_back(inst.facilities()[u].id);
    if (!inst.matroid().is_independent(open_ids))
      throw InternalError("rounded facility set is not independent in the matroid");

    r.final_cost = integral_cost(inst, r.open, w);
    r.assignment = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nf));
    for (std::size_t v = 0; v < nc; ++v) {
      std::size_t best = r.open.front();
      for (std::size_t u : r.open)
        if (inst.dist(v, u) < inst.dist(v, best)) best = u;
      r.assignment(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(best)) = 1.0;
    }
  }

  r.chain = build_chain(r, inst.p(), lp_on_cons);
  return r;
}

}  // namespace fairclust
