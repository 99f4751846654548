#pragma once

#include "fairclust/geometry.hpp"
#include "fairclust/reductions.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fairclust {

inline constexpr int kReportSchemaVersion = 1;

struct RunConfig {
  std::string input;
  std::string output;   // empty: stdout
  std::string mode = "lp-round";
  std::string centers;  // audit mode
  std::string objective = "cost";  // oracle mode: cost | radius
  int k = 0;
  double alpha = 1.0;
  double p = 1.0;
  double epsilon = 0.01;
  std::uint64_t seed = 0;
  bool dedup = false;
  bool exact_rational = false;
  std::string dump_lp;  // directory receiving one .lp file per solved program
  bool emit_timings = false;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInfeasible = 2;

/// Throws ParameterError when a mode is missing a parameter it needs.
void validate(const RunConfig& cfg);

nlohmann::json config_to_json(const RunConfig& cfg);
nlohmann::json chain_to_json(const CertificateChain& chain);
nlohmann::json report_to_json(const SolveReport& report, const RunConfig& cfg);

/// Runs one configured pipeline, writing the JSON report. Errors are printed to err.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

struct SyntheticSpec {
  std::size_t n = 20;
  int dims = 2;
  int clusters = 2;
  double spread = 1.0;
  std::uint64_t seed = 0;
};

/// Gaussian clusters around centers drawn from [0, 100]^dims; cluster i has
/// standard deviation spread * (1 + 4i), so densities differ across clusters.
/// Points are dealt to clusters round-robin; ids are 0..n-1 with unit weight.
std::vector<Point> generate_synthetic(const SyntheticSpec& spec);

struct SweepRow {
  double alpha = 1.0;
  bool feasible = true;
  SolveReport report;
};

/// Solves one instance per alpha (in parallel over `jobs` threads); rows keep alpha order.
std::vector<SweepRow> sweep_alpha(const Dataset& ds, const RunConfig& base,
                                  const std::vector<double>& alphas, unsigned jobs);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Full command line: `fairclust [options]`, `fairclust generate ...`, `fairclust sweep ...`.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fairclust
