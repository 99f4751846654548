#pragma once

// Fair clustering as matroid facility location, and fair k-center as k-center
// under a partition matroid.

#include "fairclust/fairness.hpp"
#include "fairclust/geometry.hpp"
#include "fairclust/matroid_fl.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fairclust {

/// Which copy of a point a node is: the unrestricted pool, the copy of a
/// critical ball (region >= 0), or the client copy.
enum class CopyTag { pool, region, client };
const char* to_string(CopyTag tag);

struct CopyInfo {
  std::size_t point = 0;  // dataset index
  CopyTag tag = CopyTag::pool;
  int region = -1;
};

struct ReductionOutput {
  FLInstance instance;
  std::vector<CopyInfo> facility_copies;  // per facility index
  std::vector<CopyInfo> client_copies;    // per client index
  CriticalRegions regions;
  std::vector<int> point_ids;             // dataset index -> point id
  double delta = 0.0;
  double epsilon = 0.0;
  double beta = 1.0;
  double self_distance = 0.0;
  int k = 1;
  std::size_t m() const { return regions.m(); }
};

/// min{(eps (n-k) / (beta k))^(1/p), 1} * delta
double reduction_self_distance(std::size_t n, int k, double epsilon, double beta, double p,
                               double delta);

/// Facilities: one pool copy of every point (ids 0..n-1), then one copy of each
/// ball member per region. Clients: one copy per point carrying its weight.
/// Matroid parts: region copies (cap 1 each) followed by the pool (cap k-m).
ReductionOutput reduce_fair_to_fl(const Dataset& ds, const CriticalRegions& regions,
                                  double epsilon, double beta, double p);
ReductionOutput reduce_fair_to_fl(const Dataset& ds, int k, double alpha, double epsilon,
                                  double beta, double p);

/// Adds facilities until every region part and the pool are filled to capacity
/// (as far as their sizes allow). Each addition is the facility of that part
/// lowering the cost most; ties go to the lowest index. Never removes a facility.
std::vector<std::size_t> augment_to_basis(const ReductionOutput& red,
                                          std::vector<std::size_t> open);

/// Point ids of the chosen facilities (region picks first, then pool picks),
/// deduplicated and sorted. Throws InvalidSolution if the set is dependent or
/// misses a region.
std::vector<int> map_back(const ReductionOutput& red, const std::vector<std::size_t>& open);

struct KCenterInstance {
  Eigen::MatrixXd distances;      // over nodes 0..N-1; every node is a client and a candidate center
  PartitionMatroid matroid;       // ground set 0..N-1
  std::vector<CopyInfo> copies;   // per node
  CriticalRegions regions;
  double delta = 0.0;
  double epsilon = 0.0;
  double beta = 3.0;
  double self_distance = 0.0;
  int k = 1;
};

/// Copies: the pool (nodes 0..n-1, cap k-m) then one copy of each ball per
/// region (cap 1). Distinct copies of a point sit at epsilon*delta/beta.
KCenterInstance reduce_kcenter(const Dataset& ds, const CriticalRegions& regions, double epsilon,
                               double beta = 3.0);
KCenterInstance reduce_kcenter(const Dataset& ds, int k, double alpha, double epsilon,
                               double beta = 3.0);

struct KCenterSolution {
  std::vector<std::size_t> centers;  // node indices, ascending
  double radius = 0.0;
  double threshold = 0.0;            // candidate radius at which matching succeeded
};

/// Threshold + bipartite matching 3-approximation for k-center with partition
/// matroid centers. Throws InfeasibleError if no independent set covers anything.
KCenterSolution kcenter_partition_matroid(const Eigen::MatrixXd& distances,
                                          const PartitionMatroid& matroid);

/// Fills every part up to capacity, each step adding the node that lowers the
/// covering radius most (ties: lowest index).
std::vector<std::size_t> augment_kcenter(const Eigen::MatrixXd& distances,
                                         const PartitionMatroid& matroid,
                                         std::vector<std::size_t> centers);

struct KCenterCertificate {
  double threshold = 0.0;
  double reduced_radius = 0.0;   // covering radius on the copies
  double radius = 0.0;           // covering radius on the points
};

struct SolveReport {
  std::string mode;
  std::vector<int> centers;
  double cost = 0.0;            // sum_v w(v) d(v, C)^p, or the covering radius for k-center
  double p = 1.0;
  double alpha = 1.0;
  int k = 1;
  double epsilon = 0.0;
  double beta = 1.0;
  std::size_t regions = 0;
  bool trivial = false;
  double fairness_max_ratio = 0.0;
  bool region_feasible = true;
  double reduced_cost = 0.0;    // cost of the facility solution on the client copies
  std::optional<CertificateChain> chain;
  std::optional<KCenterCertificate> kcenter;
  std::vector<std::pair<std::string, double>> timings;  // seconds, in pipeline order
};

struct SolveOptions {
  MatroidFLOptions fl;
  bool record_timings = false;
};

/// critical regions, reduction, matroid facility location, augmentation, map back, audit.
SolveReport solve_fair_clustering(const Dataset& ds, int k, double alpha, double epsilon,
                                  double p, const SolveOptions& opts = {});

/// critical regions, k-center reduction, matroid k-center, augmentation, map back, audit.
SolveReport solve_fair_kcenter(const Dataset& ds, int k, double alpha, double epsilon,
                               const SolveOptions& opts = {});

}  // namespace fairclust
