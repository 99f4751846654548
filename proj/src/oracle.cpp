#include "fairclust/oracle.hpp"

#include "fairclust/errors.hpp"
#include "fairclust/fairness.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace fairclust {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Calls f on every strictly increasing index tuple of length r over [0, n).
template <typename F>
void for_each_combination(std::size_t n, std::size_t r, F&& f) {
  if (r > n) return;
  std::vector<std::size_t> idx(r);
  for (std::size_t i = 0; i < r; ++i) idx[i] = i;
  while (true) {
    f(idx);
    std::size_t i = r;
    while (i > 0 && idx[i - 1] == n - r + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

OracleResult oracle_fair_clustering(const Dataset& ds, int k, double alpha, double p,
                                    ClusterObjective objective) {
  const auto t0 = Clock::now();
  const std::size_t n = ds.size();
  if (n > kOracleMaxPoints || k > kOracleMaxCenters)
    throw TooLarge("oracle limited to n <= " + std::to_string(kOracleMaxPoints) + " and k <= " +
                   std::to_string(kOracleMaxCenters));
  if (n == 0 || k < 1) throw ParameterError("oracle needs n >= 1 and k >= 1");
  if (!(alpha >= 1.0)) throw ParameterError("alpha must be at least 1");
  if (!(p >= 1.0)) throw ParameterError("p must be at least 1");

  const auto radii = fair_radii(ds, k);
  OracleResult out;
  std::vector<std::size_t> best_set;
  const std::size_t kmax = std::min<std::size_t>(static_cast<std::size_t>(k), n);
  for (std::size_t r = 1; r <= kmax; ++r) {
    for_each_combination(n, r, [&](const std::vector<std::size_t>& set) {
      ++out.search_space;
      double value = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t c : set) d = std::min(d, ds.distance(v, c));
        if (d > alpha * radii.radius(static_cast<Eigen::Index>(v))) return;
        if (objective == ClusterObjective::lp_cost) value += ds.weight(v) * std::pow(d, p);
        else value = std::max(value, d);
      }
      if (!out.value || value < *out.value) {
        out.value = value;
        best_set = set;
      }
    });
  }
  for (std::size_t c : best_set) out.witness.push_back(ds.id(c));
  out.elapsed = seconds_since(t0);
  return out;
}

OracleResult oracle_matroid_fl(const FLInstance& inst) {
  const auto t0 = Clock::now();
  const std::size_t nf = inst.num_facilities();
  if (nf > kOracleMaxFacilities)
    throw TooLarge("oracle limited to " + std::to_string(kOracleMaxFacilities) + " facilities");
  const Eigen::VectorXd w = inst.demands();
  OracleResult out;
  std::vector<std::size_t> best;
  std::vector<int> ids;
  std::vector<std::size_t> open;
  for (std::size_t mask = 0; mask < (std::size_t{1} << nf); ++mask) {
    ids.clear();
    open.clear();
    for (std::size_t u = 0; u < nf; ++u) {
      if (mask >> u & 1U) {
        open.push_back(u);
        ids.push_back(inst.facilities()[u].id);
      }
    }
    if (!inst.matroid().is_independent(ids)) continue;
    ++out.search_space;
    double value;
    try {
      value = integral_cost(inst, open, w);
    } catch (const InfeasibleError&) {
      continue;
    }
    if (!out.value || value < *out.value) {
      out.value = value;
      best = open;
    }
  }
  for (std::size_t u : best) out.witness.push_back(inst.facilities()[u].id);
  out.elapsed = seconds_since(t0);
  return out;
}

OracleResult oracle_grid_min(const LinearProgram<double>& lp, Grid grid) {
  const auto t0 = Clock::now();
  const std::size_t nv = lp.num_variables();
  if (nv > kOracleMaxGridVariables)
    throw TooLarge("grid oracle limited to " + std::to_string(kOracleMaxGridVariables) + " variables");
  const double step = grid == Grid::half ? 0.5 : 1.0;

  std::vector<std::vector<double>> values(nv);
  for (std::size_t j = 0; j < nv; ++j) {
    if (!lp.upper(j)) throw ParameterError("grid oracle needs finite upper bounds");
    for (double v = std::ceil(lp.lower(j) / step) * step; v <= *lp.upper(j) + 1e-12; v += step)
      values[j].push_back(v);
    if (values[j].empty()) throw InfeasibleError("variable " + lp.name(j) + " has no grid value");
  }

  OracleResult out;
  std::vector<std::size_t> pos(nv, 0);
  Eigen::VectorXd y(static_cast<Eigen::Index>(nv));
  while (true) {
    for (std::size_t j = 0; j < nv; ++j) y(static_cast<Eigen::Index>(j)) = values[j][pos[j]];
    ++out.search_space;
    bool ok = true;
    for (std::size_t i = 0; i < lp.num_constraints() && ok; ++i) {
      const auto& row = lp.constraints()[i];
      const double a = lp.row_activity(i, y);
      switch (row.relation) {
        case Relation::less_equal: ok = a <= row.rhs + 1e-9; break;
        case Relation::greater_equal: ok = a >= row.rhs - 1e-9; break;
        case Relation::equal: ok = std::abs(a - row.rhs) <= 1e-9; break;
      }
    }
    if (ok) {
      const double v = lp.objective(y);
      if (!out.value || v < *out.value) {
        out.value = v;
        out.point = y;
      }
    }
    std::size_t j = 0;
    while (j < nv && ++pos[j] == values[j].size()) pos[j++] = 0;
    if (j == nv) break;
  }
  if (!out.value) throw InfeasibleError("no grid point satisfies the constraints");
  out.elapsed = seconds_since(t0);
  return out;
}

}  // namespace fairclust
