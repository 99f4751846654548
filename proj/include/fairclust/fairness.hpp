#pragma once

#include "fairclust/geometry.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace fairclust {

/// Per-point fair radius: distance to the ceil(n/k)-th closest record (the point
/// itself counts, at distance zero). Every record counts once regardless of weight.
struct FairRadii {
  Eigen::VectorXd radius;
  std::size_t threshold_count = 0;
};

FairRadii fair_radii(const Dataset& ds, int k);

/// Disjoint balls B(c_i, alpha * r(c_i)) hit by any 3*alpha-fair-certifying center set.
struct CriticalRegions {
  std::vector<int> centers;               // point ids, in selection order
  std::vector<std::size_t> center_index;  // same centers as dataset indices
  std::vector<double> radii;              // alpha * r(c_i)
  double alpha = 1.0;
  int k = 1;
  FairRadii fair;

  std::size_t m() const { return centers.size(); }
  /// Dataset indices inside ball i (non-strict membership), ascending.
  std::vector<std::size_t> members(const Dataset& ds, std::size_t i) const;
};

/// Greedy covering in nondecreasing fair radius; ties go to the smaller point id.
CriticalRegions critical_regions(const Dataset& ds, int k, double alpha);

struct FairnessAudit {
  Eigen::VectorXd ratio;  // d(v, C) / r(v), index order
  double max_ratio = 0.0;
};

FairnessAudit fairness_audit(const Dataset& ds, std::span<const int> center_ids, int k);
FairnessAudit fairness_audit_indexed(const Dataset& ds, std::span<const std::size_t> centers,
                                     const FairRadii& radii);

bool feasible_wrt_regions(const Dataset& ds, const CriticalRegions& regions,
                          std::span<const int> center_ids);
bool feasible_wrt_regions_indexed(const Dataset& ds, const CriticalRegions& regions,
                                  std::span<const std::size_t> centers);

}  // namespace fairclust
