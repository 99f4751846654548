#pragma once

// Exhaustive solvers for desk-scale cross-checks.

#include "fairclust/geometry.hpp"
#include "fairclust/lp.hpp"
#include "fairclust/matroid_fl.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace fairclust {

struct OracleResult {
  std::optional<double> value;     // empty when nothing feasible exists
  std::vector<int> witness;        // center ids or facility ids
  Eigen::VectorXd point;           // grid minimizer
  std::size_t search_space = 0;    // candidates enumerated
  double elapsed = 0.0;            // seconds

  bool feasible() const { return value.has_value(); }
};

enum class ClusterObjective { lp_cost, kcenter_radius };

inline constexpr std::size_t kOracleMaxPoints = 16;
inline constexpr int kOracleMaxCenters = 4;
inline constexpr std::size_t kOracleMaxFacilities = 14;
inline constexpr std::size_t kOracleMaxGridVariables = 12;

/// Best center set of size 1..k whose every point v has d(v, C) <= alpha r(v).
/// Ties go to the first set in (size, lexicographic) order.
OracleResult oracle_fair_clustering(const Dataset& ds, int k, double alpha, double p,
                                    ClusterObjective objective = ClusterObjective::lp_cost);

/// Best independent facility set with nearest-facility assignment.
OracleResult oracle_matroid_fl(const FLInstance& inst);

/// Minimum of the LP objective over grid points (multiples of 1/2 or 1 inside
/// the variable bounds) satisfying every row within 1e-9.
OracleResult oracle_grid_min(const LinearProgram<double>& lp, Grid grid);

}  // namespace fairclust
