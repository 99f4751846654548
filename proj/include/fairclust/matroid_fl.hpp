#pragma once

// Facility location with l_p assignment cost under a partition matroid:
// LP relaxation, client consolidation, half-integral rounding through the proxy
// cost T, core clients, and integral rounding through the proxy cost H.

#include "fairclust/lp.hpp"
#include "fairclust/matroid.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace fairclust {

struct Facility {
  int id = 0;
  double cost = 0.0;
};

struct Client {
  int id = 0;
  double demand = 1.0;
};

/// Facilities, clients, a metric over both, the exponent p, and the matroid.
///
/// Distances live in one symmetric node matrix: nodes 0..nf-1 are facilities in
/// the order given, nodes nf..nf+nc-1 are clients. The matroid ground set must be
/// exactly the facility ids.
class FLInstance {
 public:
  FLInstance() = default;
  FLInstance(std::vector<Facility> facilities, std::vector<Client> clients,
             Eigen::MatrixXd node_distances, double p, PartitionMatroid matroid,
             bool check_triangle = true);

  std::size_t num_facilities() const { return facilities_.size(); }
  std::size_t num_clients() const { return clients_.size(); }
  const std::vector<Facility>& facilities() const { return facilities_; }
  const std::vector<Client>& clients() const { return clients_; }
  const PartitionMatroid& matroid() const { return matroid_; }
  double p() const { return p_; }

  double facility_cost(std::size_t u) const { return facilities_[u].cost; }
  double demand(std::size_t v) const { return clients_[v].demand; }
  Eigen::VectorXd demands() const;

  /// d(client v, facility u)
  double dist(std::size_t v, std::size_t u) const { return nodes_(nf() + v, u); }
  /// d(client v, facility u)^p
  double dist_p(std::size_t v, std::size_t u) const { return cost_p_(v, u); }
  double client_dist(std::size_t a, std::size_t b) const { return nodes_(nf() + a, nf() + b); }
  double facility_dist(std::size_t a, std::size_t b) const { return nodes_(a, b); }
  const Eigen::MatrixXd& node_distances() const { return nodes_; }

  std::size_t facility_index(int id) const;
  std::size_t client_index(int id) const;

 private:
  std::vector<Facility> facilities_;
  std::vector<Client> clients_;
  Eigen::MatrixXd nodes_;
  Eigen::MatrixXd cost_p_;  // clients x facilities
  double p_ = 1.0;
  PartitionMatroid matroid_;

  Eigen::Index nf() const { return static_cast<Eigen::Index>(facilities_.size()); }
};

enum class Stage { fractional, half_integral, integral };
const char* to_string(Stage stage);

/// x is clients x facilities; y is per facility.
struct FractionalSolution {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Stage stage = Stage::fractional;
};

/// sum_u f(u) y_u + sum_v w(v) sum_u d(v,u)^p x_vu
double fl_cost(const FLInstance& inst, const FractionalSolution& sol,
               const Eigen::VectorXd& demands);

/// Cost of opening exactly the facilities with y_u = 1 and serving each client
/// with positive demand from its nearest open facility.
double integral_cost(const FLInstance& inst, const std::vector<std::size_t>& open,
                     const Eigen::VectorXd& demands);

struct MatroidFLOptions {
  double snap_tol = 1e-5;
  /// Solve the rounding polytopes in exact rationals when they have at most
  /// exact_max_variables variables.
  bool exact_rational = false;
  std::size_t exact_max_variables = 200;
  SimplexOptions simplex;
  /// Receives every LP before it is solved (stage name, program).
  std::function<void(const std::string&, const LinearProgram<double>&)> on_lp;
};

struct LPRelaxation {
  FractionalSolution solution;
  double z = 0.0;
  std::size_t lp_variables = 0;
  std::size_t lp_iterations = 0;
};

/// Optimal fractional solution with sum_u x_vu = 1 for every client of positive demand.
/// Throws InfeasibleError when the matroid cannot open enough capacity.
LPRelaxation solve_lp_relaxation(const FLInstance& inst, const MatroidFLOptions& opts = {});

/// (sum_u d(v,u)^p x_vu)^(1/p) per client.
Eigen::VectorXd fractional_distances(const FLInstance& inst, const Eigen::MatrixXd& x);

struct ConsolidatedInstance {
  Eigen::VectorXd demand;                 // w' per client
  std::vector<std::size_t> support;       // clients with w' > 0, ascending
  Eigen::VectorXd frac_dist;              // R(v) per client
  Eigen::VectorXd frac_cost;              // R(v)^p per client
  std::vector<std::size_t> relocation;    // client -> client holding its demand
  std::vector<std::size_t> order;         // processing order (nondecreasing R)
  double threshold_factor = 0.0;          // 2^((p+1)/p)
};

ConsolidatedInstance consolidate(const FLInstance& inst, const FractionalSolution& sol);

/// Neighborhoods of the support clients; entry s refers to cons.support[s].
struct NeighborhoodStructure {
  std::vector<std::vector<std::size_t>> F;
  std::vector<std::vector<std::size_t>> F_prime;
  std::vector<std::vector<std::size_t>> G;
  std::vector<double> gamma;                // +inf when F(v) holds every facility
  std::vector<std::size_t> owner;           // facility -> support position
  std::vector<std::size_t> gamma_witness;   // support position owning the gamma facility
};

/// Builds F, F', gamma and G and verifies their invariants (including the
/// half-mass bound on F' at the LP optimum). Throws InternalError on violation.
NeighborhoodStructure build_neighborhoods(const FLInstance& inst, const ConsolidatedInstance& cons,
                                          const FractionalSolution& lp_solution);

/// Greedy nearest-first assignment of each positive-demand client to the open
/// capacity y. Throws InfeasibleError if some client cannot be fully served.
Eigen::MatrixXd optimal_assignment(const Eigen::VectorXd& y, const Eigen::VectorXd& demands,
                                   const FLInstance& inst);

/// One client's share of a proxy cost: weight * (sum_u unit_cost_u y_u + penalty (1 - sum_u y_u)).
struct ProxyTerm {
  double weight = 0.0;
  std::vector<std::size_t> facilities;
  std::vector<double> unit_cost;
  double penalty = 0.0;
};

/// A linear objective over the facility variables and the polytope it is minimized over.
struct ProxyProgram {
  LinearProgram<double> polytope;  // variable u is y_u; costs hold the expanded linear part
  double constant = 0.0;
  std::vector<double> opening;     // f(u)
  std::vector<ProxyTerm> terms;

  /// Value from the per-client form; avoids the cancellation in constant + c^T y.
  double evaluate(const Eigen::VectorXd& y) const;
  double linear_value(const Eigen::VectorXd& y) const { return constant + polytope.objective(y); }
};

/// T together with the polytope {matroid, 1/2 <= y(F'(v)), y(G(v)) <= 1}.
ProxyProgram build_half_integral_program(const FLInstance& inst, const ConsolidatedInstance& cons,
                                         const NeighborhoodStructure& nbhd);

struct HalfIntegralResult {
  FractionalSolution intermediate;  // (x', y')
  double cost_intermediate = 0.0;
  double T_intermediate = 0.0;
  ProxyProgram program;
  Eigen::VectorXd raw_vertex;       // solver output before snapping
  bool exact_fallback = false;      // double solve failed to snap; re-solved exactly
  FractionalSolution solution;      // (x'', y'')
  double T_solution = 0.0;
  double cost_solution = 0.0;
};

HalfIntegralResult half_integral_round(const FLInstance& inst, const ConsolidatedInstance& cons,
                                       const NeighborhoodStructure& nbhd,
                                       const FractionalSolution& lp_solution,
                                       const MatroidFLOptions& opts = {});

inline constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

/// Per-client fields are indexed by client; entries outside the support are kNone / empty.
struct CoreStructure {
  std::vector<std::size_t> core;                   // core clients, selection order
  std::vector<std::size_t> cr;                     // client -> core client (support only)
  Eigen::VectorXd R2;                              // R''(v)
  std::vector<std::vector<std::size_t>> serving;   // F''(v) per client
  std::vector<std::size_t> primary;
  std::vector<std::size_t> secondary;
};

CoreStructure select_core_clients(const FLInstance& inst, const ConsolidatedInstance& cons,
                                  const FractionalSolution& half);

/// H together with the polytope {matroid, y(F''(v)) = 1 for core v}.
ProxyProgram build_integral_program(const FLInstance& inst, const ConsolidatedInstance& cons,
                                    const CoreStructure& core);

struct IntegralResult {
  Eigen::VectorXd intermediate_y;   // y~'
  double H_intermediate = 0.0;
  ProxyProgram program;
  Eigen::VectorXd raw_vertex;
  bool exact_fallback = false;
  FractionalSolution solution;      // (x~, y~)
  double H_solution = 0.0;
  double cost_solution = 0.0;
};

IntegralResult integral_round(const FLInstance& inst, const ConsolidatedInstance& cons,
                              const CoreStructure& core, const FractionalSolution& half,
                              const MatroidFLOptions& opts = {});

/// 4*16^(p-1) + (8/7)^(p-1) * (4*3^(p-1)+2) * 3^p; equals 22 at p = 1.
double chain_factor(double p);
/// Approximation factor guaranteed by the implemented rounding: max(16^p, chain_factor(p)).
double rounding_guarantee(double p);

struct CertificateLink {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  /// False for links that are not implied by the analysis and are reported only.
  bool guaranteed = true;
};

struct CertificateChain {
  double p = 1.0;
  double z_lp = 0.0;
  double cost_lp_on_consolidated = 0.0;
  double cost_intermediate = 0.0;  // (x', y') on w'
  double T_intermediate = 0.0;
  double T_half = 0.0;
  double cost_half = 0.0;
  double H_intermediate = 0.0;
  double H_integral = 0.0;
  double cost_integral = 0.0;      // on w'
  double final_cost = 0.0;         // on w
  double half_factor = 0.0;        // 3^p
  double integral_factor = 0.0;    // 4*3^(p-1)+2
  double certified_factor = 0.0;   // chain_factor(p)
  std::vector<CertificateLink> links;

  /// True when every guaranteed link holds.
  bool verified() const;
  const CertificateLink* find(const std::string& name) const;
};

/// lhs <= rhs with relative slack 1e-6 (absolute floor 1e-12).
bool within_slack(double lhs, double rhs, double rel = 1e-6);

struct MatroidFLResult {
  LPRelaxation lp;
  ConsolidatedInstance consolidated;
  NeighborhoodStructure neighborhoods;
  HalfIntegralResult half;
  CoreStructure core;
  IntegralResult integral;
  std::vector<std::size_t> open;    // facility indices with y~ = 1
  Eigen::MatrixXd assignment;       // integral x on the original demands
  double final_cost = 0.0;
  CertificateChain chain;
};

MatroidFLResult solve_matroid_fl(const FLInstance& inst, const MatroidFLOptions& opts = {});

/// JSON instance: {"p", "facilities": [{"id", "cost", "coords"?}], "clients": [{"id",
/// "demand", "coords"?}], "matroid": {"parts", "caps"}, "distances"?}. Either every
/// node carries coords (Euclidean) or "distances" holds the node matrix.
FLInstance read_fl_instance(std::istream& in);
void write_fl_instance(std::ostream& out, const FLInstance& inst);

}  // namespace fairclust
