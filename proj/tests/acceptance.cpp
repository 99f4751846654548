// Acceptance run: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--expect-fail N,...]
// Exit status is 0 when the failing criteria are exactly the expected ones.

#include "fairclust/cli.hpp"
#include "fairclust/errors.hpp"
#include "fairclust/fairness.hpp"
#include "fairclust/oracle.hpp"
#include "fairclust/reductions.hpp"
#include "support/brute.hpp"
#include "support/generators.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace fairclust;
using testsupport::Rng;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::set<int> failed;

void report(int id, bool pass, const std::string& what) {
  if (!pass) failed.insert(id);
  std::printf("%s  [%2d] %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Instance {
  Dataset ds;
  int k;
  double alpha;
  double p;
};

// n in [6,12], k in {2,3}, alpha in {1,2}, p in {1,2,3}
std::vector<Instance> criterion_instances() {
  Rng rng(20240601);
  std::vector<Instance> out;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = testsupport::uniform_int(rng, 6, 12);
    out.push_back({testsupport::random_dataset(rng, n), testsupport::uniform_int(rng, 2, 3),
                   static_cast<double>(testsupport::uniform_int(rng, 1, 2)),
                   static_cast<double>(testsupport::uniform_int(rng, 1, 3))});
  }
  return out;
}

constexpr double kEps = 0.01;

void fairness_and_cost(std::vector<SolveReport>& reports) {
  const auto instances = criterion_instances();
  const auto t0 = Clock::now();
  int fair = 0;
  double worst = 0;
  for (const auto& in : instances) {
    reports.push_back(solve_fair_clustering(in.ds, in.k, in.alpha, kEps, in.p));
    const auto& rep = reports.back();
    const auto idx = in.ds.indices_of(rep.centers);
    const double ratio = testsupport::brute_max_ratio(in.ds.distances(),
                                                      testsupport::brute_fair_radii(in.ds.distances(), in.k), idx);
    fair += ratio <= 3 * in.alpha && rep.fairness_max_ratio <= 3 * in.alpha;
    worst = std::max(worst, ratio / in.alpha);
  }
  const double t1 = seconds_since(t0);
  report(1, fair == 200 && t1 < 60.0,
         fmt("fairness <= 3 alpha on %d/200 instances (worst ratio/alpha %.4f), %.2f s (limit 60 s)", fair, worst, t1));

  const auto t2 = Clock::now();
  int compared = 0, within = 0;
  double worst_ratio = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& in = instances[i];
    const auto opt = oracle_fair_clustering(in.ds, in.k, in.alpha, in.p);
    if (!opt.feasible()) continue;
    ++compared;
    const double factor = in.p > 1 ? std::pow(16.0, in.p) : 22.0;
    const double cost = reports[i].cost;
    const bool ok = *opt.value == 0 ? cost <= 1e-12 : cost <= (factor + kEps) * *opt.value * (1 + 1e-6);
    within += ok;
    if (*opt.value > 0) worst_ratio = std::max(worst_ratio, cost / *opt.value);
  }
  const double t3 = seconds_since(t2) + t1;
  report(2, within == compared && compared > 0 && t3 < 300.0,
         fmt("cost <= (16^p or 22 + eps) * fair optimum on %d/%d oracle-feasible instances "
             "(worst cost/opt %.4f), %.2f s (limit 300 s)",
             within, compared, worst_ratio, t3));
}

void certificate_chain(const std::vector<SolveReport>& reports) {
  struct Link {
    const char* name;
    int violations = 0;
    int checked = 0;
  };
  Link links[] = {{"z_LP <= T(y')"},          {"T(y') <= 3^p z_LP"},      {"cost(x'',y'') <= T(y'')"},
                  {"T(y'') <= T(y')"},        {"cost(x~,y~) <= H(y~)"},   {"H(y~) <= H(y~')"},
                  {"H(y~') <= (4*3^(p-1)+2) cost(x'',y'')"}, {"final on w <= 16^p z_LP (p>1)"}};
  for (const auto& rep : reports) {
    const auto& c = *rep.chain;
    const double p = c.p;
    const std::pair<double, double> pairs[] = {
        {c.z_lp, c.T_intermediate},
        {c.T_intermediate, std::pow(3.0, p) * c.z_lp},
        {c.cost_half, c.T_half},
        {c.T_half, c.T_intermediate},
        {c.cost_integral, c.H_integral},
        {c.H_integral, c.H_intermediate},
        {c.H_intermediate, (4 * std::pow(3.0, p - 1) + 2) * c.cost_half},
        {c.final_cost, std::pow(16.0, p) * c.z_lp}};
    for (int j = 0; j < 8; ++j) {
      if (j == 7 && !(p > 1)) continue;
      ++links[j].checked;
      links[j].violations += !within_slack(pairs[j].first, pairs[j].second, 1e-6);
    }
  }
  bool all = true;
  std::ostringstream detail;
  for (const auto& l : links) {
    all &= l.violations == 0;
    if (l.violations) detail << "; " << l.name << " violated on " << l.violations << "/" << l.checked;
  }
  std::string held;
  int held_links = 0;
  for (const auto& l : links) held_links += l.violations == 0;
  report(3, all,
         fmt("certificate chain on %zu solves: %d/8 links hold everywhere", reports.size(), held_links) +
             detail.str());
}

void snapping() {
  Rng rng(777);
  int ok = 0, thrown = 0, fallbacks = 0;
  for (int i = 0; i < 500; ++i) {
    try {
      MatroidFLResult r;
      if (i % 2 == 0) {
        const std::size_t n = testsupport::uniform_int(rng, 6, 14);
        const auto ds = testsupport::random_dataset(rng, n);
        const int k = testsupport::uniform_int(rng, 2, 4);
        const double p = 1.0 + i % 3;
        r = solve_matroid_fl(reduce_fair_to_fl(ds, k, testsupport::uniform(rng, 1, 2), kEps, rounding_guarantee(p), p).instance);
      } else {
        r = solve_matroid_fl(testsupport::random_fl_instance(rng, testsupport::uniform_int(rng, 2, 12),
                                                             testsupport::uniform_int(rng, 1, 12), 1.0 + (i / 2) % 3,
                                                             testsupport::uniform_int(rng, 1, 4)));
      }
      fallbacks += r.half.exact_fallback + r.integral.exact_fallback;
      bool grid = true;
      for (Eigen::Index j = 0; j < r.half.raw_vertex.size(); ++j)
        grid &= std::abs(r.half.raw_vertex(j) - std::round(2 * r.half.raw_vertex(j)) / 2) <= 1e-5;
      for (Eigen::Index j = 0; j < r.integral.raw_vertex.size(); ++j)
        grid &= std::abs(r.integral.raw_vertex(j) - std::round(r.integral.raw_vertex(j))) <= 1e-5;
      ok += grid && !r.half.exact_fallback && !r.integral.exact_fallback;
    } catch (const SnapFailure&) {
      ++thrown;
    }
  }
  report(4, ok == 500 && thrown == 0,
         fmt("y'' half-integral and y~ integral at tol 1e-5 on %d/500 solves; SnapFailures %d, exact re-solves %d",
             ok, thrown, fallbacks));
}

void minimizers() {
  Rng rng(4242);
  int match = 0, compared = 0;
  double worst = 0;
  while (compared < 50) {
    const auto inst = testsupport::random_fl_instance(rng, testsupport::uniform_int(rng, 2, 7),
                                                      testsupport::uniform_int(rng, 1, 8), 1.0 + compared % 3,
                                                      testsupport::uniform_int(rng, 1, 3));
    const auto r = solve_matroid_fl(inst);
    if (r.consolidated.support.empty()) continue;
    ++compared;
    const double t = r.half.program.constant + *oracle_grid_min(r.half.program.polytope, Grid::half).value;
    const double h = r.integral.program.constant + *oracle_grid_min(r.integral.program.polytope, Grid::unit).value;
    const double et = std::abs(t - r.half.T_solution) / std::max(std::abs(t), 1e-300);
    const double eh = std::abs(h - r.integral.H_solution) / std::max(std::abs(h), 1e-300);
    worst = std::max({worst, t == r.half.T_solution ? 0.0 : et, h == r.integral.H_solution ? 0.0 : eh});
    match += testsupport::rel_close(t, r.half.T_solution, 1e-9) && testsupport::rel_close(h, r.integral.H_solution, 1e-9);
  }
  report(5, match == 50,
         fmt("T and H minimizers equal grid enumeration on %d/50 instances with <= 7 facilities (worst rel. diff %.2e)",
             match, worst));
}

void metric() {
  Rng rng(99);
  int ok = 0, total = 0;
  double worst = 0;
  for (std::size_t n = 2; n <= 40; ++n) {
    const auto ds = testsupport::random_dataset(rng, n);
    const int k = testsupport::uniform_int(rng, 1, static_cast<int>(std::min<std::size_t>(n - 1, 6)));
    const double alpha = testsupport::uniform(rng, 1, 2), p = 1.0 + n % 3;
    const double d1 = testsupport::metric_defect(
        reduce_fair_to_fl(ds, k, alpha, kEps, rounding_guarantee(p), p).instance.node_distances());
    const double d2 = testsupport::metric_defect(reduce_kcenter(ds, k, alpha, 0.2).distances);
    worst = std::max({worst, d1, d2});
    ok += (d1 <= 1e-9) + (d2 <= 1e-9);
    total += 2;
  }
  report(6, ok == total,
         fmt("d' is a metric on all triples for %d/%d reductions with n = 2..40 (worst relative defect %.1e)", ok,
             total, worst));
}

void regions() {
  Rng rng(31337);
  int ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = testsupport::uniform_int(rng, 1, 30);
    const auto ds = testsupport::random_dataset(rng, n);
    const int k = testsupport::uniform_int(rng, 1, static_cast<int>(n));
    const double alpha = testsupport::uniform(rng, 1, 3);
    const auto reg = critical_regions(ds, k, alpha);
    const auto r = testsupport::brute_fair_radii(ds.distances(), k);
    bool good = reg.m() <= static_cast<std::size_t>(k);
    for (std::size_t x = 0; x < n; ++x) {
      double best = testsupport::kInf;
      for (std::size_t c : reg.center_index) best = std::min(best, ds.distance(x, c));
      good &= best <= 2 * alpha * r(static_cast<Eigen::Index>(x));
    }
    for (std::size_t a = 0; a < reg.m(); ++a)
      for (std::size_t b = a + 1; b < reg.m(); ++b) {
        const auto ca = reg.center_index[a], cb = reg.center_index[b];
        good &= ds.distance(ca, cb) > 2 * alpha * std::max(r(static_cast<Eigen::Index>(ca)), r(static_cast<Eigen::Index>(cb)));
      }
    ok += good;
  }
  report(7, ok == 1000, fmt("critical regions satisfy both properties and m <= k on %d/1000 instances", ok));
}

void consolidation() {
  Rng rng(5150);
  int ok = 0;
  double min_mass = testsupport::kInf;
  for (int i = 0; i < 500; ++i) {
    FLInstance inst;
    if (i % 2 == 0) {
      inst = testsupport::random_fl_instance(rng, testsupport::uniform_int(rng, 1, 10),
                                             testsupport::uniform_int(rng, 1, 12), 1.0 + i % 3,
                                             testsupport::uniform_int(rng, 1, 3));
    } else {
      const auto ds = testsupport::random_dataset(rng, testsupport::uniform_int(rng, 6, 12));
      const double p = 1.0 + i % 3;
      inst = reduce_fair_to_fl(ds, testsupport::uniform_int(rng, 2, 3), 1.0, kEps, rounding_guarantee(p), p).instance;
    }
    const auto lp = solve_lp_relaxation(inst);
    const auto cons = consolidate(inst, lp.solution);
    const double p = inst.p();
    const auto& R = cons.frac_dist;
    bool good = true;
    for (std::size_t a : cons.support)
      for (std::size_t b : cons.support)
        if (a != b)
          good &= inst.client_dist(a, b) >
                  std::pow(2.0, (p + 1) / p) * std::max(R(static_cast<Eigen::Index>(a)), R(static_cast<Eigen::Index>(b)));
    // F(v): facilities whose nearest support client is v (ties to the lowest position)
    for (std::size_t s = 0; s < cons.support.size(); ++s) {
      const std::size_t v = cons.support[s];
      double mass = 0;
      for (std::size_t u = 0; u < inst.num_facilities(); ++u) {
        std::size_t owner = 0;
        for (std::size_t t = 1; t < cons.support.size(); ++t)
          if (inst.dist(cons.support[t], u) < inst.dist(cons.support[owner], u)) owner = t;
        if (owner != s) continue;
        if (std::pow(inst.dist(v, u), p) <= 2 * std::pow(R(static_cast<Eigen::Index>(v)), p))
          mass += lp.solution.x(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u));
      }
      min_mass = std::min(min_mass, mass);
      good &= mass >= 0.5 - 1e-7;
    }
    ok += good;
  }
  report(8, ok == 500,
         fmt("well-separated support and half-mass bound on %d/500 consolidations (smallest F' mass %.6f)", ok,
             min_mass));
}

void kcenter() {
  Rng rng(8086);
  int ok = 0, compared = 0;
  double worst = 0;
  const double eps = kEps;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = testsupport::uniform_int(rng, 4, 12);
    const auto ds = testsupport::random_dataset(rng, n);
    const int k = testsupport::uniform_int(rng, 2, std::min<int>(4, static_cast<int>(n)));
    const double alpha = static_cast<double>(testsupport::uniform_int(rng, 1, 2));
    const auto rep = solve_fair_kcenter(ds, k, alpha, eps);
    const auto idx = ds.indices_of(rep.centers);
    bool good = testsupport::brute_max_ratio(ds.distances(), testsupport::brute_fair_radii(ds.distances(), k), idx) <=
                3 * alpha;
    const auto opt = oracle_fair_clustering(ds, k, alpha, 1.0, ClusterObjective::kcenter_radius);
    if (opt.feasible()) {
      ++compared;
      const double radius = testsupport::brute_radius(ds.distances(), idx);
      good &= radius <= (3 + eps) * *opt.value * (1 + 1e-9) + 1e-12;
      if (*opt.value > 0) worst = std::max(worst, radius / *opt.value);
    }
    ok += good;
  }
  report(9, ok == 100,
         fmt("k-center radius <= (3+eps) * fair optimum and fairness <= 3 alpha on %d/100 instances "
             "(%d oracle-feasible, worst radius/opt %.4f)",
             ok, compared, worst));
}

void inequalities() {
  Rng rng(1234);
  const double ps[] = {1.0, 1.5, 2.0, 3.0};
  const double lambdas[] = {0.5, 1.0, 2.0, 7.0};
  long tri_bad = 0, hop_bad = 0, tri = 0, hop = 0;
  for (int s = 0; s < 10000; ++s) {
    const auto ds = testsupport::random_dataset(rng, 8);
    const auto& D = ds.distances();
    const int u = testsupport::uniform_int(rng, 0, 7), w = testsupport::uniform_int(rng, 0, 7),
              z = testsupport::uniform_int(rng, 0, 7), v = testsupport::uniform_int(rng, 0, 7);
    for (double p : ps) {
      const double lhs = std::pow(D(u, v), p);
      for (double l : lambdas) {
        ++tri;
        tri_bad += lhs > power_triangle_bound(D(u, w), D(w, v), p, l) * (1 + 1e-9);
      }
      ++hop;
      hop_bad += lhs > two_hop_bound(D(u, w), D(w, z), D(z, v), p) * (1 + 1e-9);
    }
  }
  report(10, tri_bad == 0 && hop_bad == 0,
         fmt("power triangle bound %ld/%ld and two-hop bound %ld/%ld samples hold (10000 draws over the p/lambda grid)",
             tri - tri_bad, tri, hop - hop_bad, hop));
}

void determinism() {
  const std::string fixture = std::string(FAIRCLUST_DATA_DIR) + "/two_clusters.csv";
  const std::vector<std::vector<std::string>> configs{
      {"-i", fixture, "--mode", "lp-round", "--k", "2", "--alpha", "1", "--p", "2"},
      {"-i", fixture, "--mode", "lp-round", "--k", "3", "--alpha", "1.5", "--p", "1", "--exact-rational"},
      {"-i", fixture, "--mode", "kcenter", "--k", "2", "--alpha", "2"},
      {"-i", fixture, "--mode", "oracle", "--k", "2", "--p", "3"},
      {"sweep", "-i", fixture, "--k", "2", "--alphas", "1,1.5,2,3", "--jobs", "4"}};
  int identical = 0;
  for (const auto& cfg : configs) {
    std::string first;
    bool same = true;
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<std::string> args{"fairclust"};
      args.insert(args.end(), cfg.begin(), cfg.end());
      std::vector<const char*> argv;
      for (const auto& a : args) argv.push_back(a.c_str());
      std::ostringstream out, err;
      same &= main_entry(static_cast<int>(argv.size()), argv.data(), out, err) == kExitOk;
      if (rep == 0) first = out.str();
      else same &= out.str() == first;
    }
    identical += same && !first.empty();
  }
  Rng rng(7);
  int lib_same = 0;
  for (int i = 0; i < 20; ++i) {
    const auto ds = testsupport::random_dataset(rng, 10);
    RunConfig cfg;
    const auto a = report_to_json(solve_fair_clustering(ds, 3, 1.0, kEps, 2.0), cfg).dump();
    const auto b = report_to_json(solve_fair_clustering(ds, 3, 1.0, kEps, 2.0), cfg).dump();
    lib_same += a == b;
  }
  report(11, identical == static_cast<int>(configs.size()) && lib_same == 20,
         fmt("byte-identical reports for %d/%zu CLI configurations (3 runs each) and %d/20 library solves", identical,
             configs.size(), lib_same));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--expect-fail") == 0 && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) expected.insert(std::stoi(tok));
    }
  }
  const auto t0 = Clock::now();
  std::vector<SolveReport> reports;
  fairness_and_cost(reports);
  certificate_chain(reports);
  snapping();
  minimizers();
  metric();
  regions();
  consolidation();
  kcenter();
  inequalities();
  determinism();
  std::printf("%zu of 11 criteria pass (%.1f s)\n", 11 - failed.size(), seconds_since(t0));
  if (!expected.empty()) {
    std::printf("expected failures:");
    for (int e : expected) std::printf(" %d", e);
    std::printf(" -> %s\n", failed == expected ? "matched" : "MISMATCH");
  }
  return failed == expected ? 0 : 1;
}
