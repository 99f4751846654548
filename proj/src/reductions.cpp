#include "fairclust/reductions.hpp"

#include "fairclust/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace fairclust {

const char* to_string(CopyTag tag) {
  switch (tag) {
    case CopyTag::pool: return "pool";
    case CopyTag::region: return "region";
    case CopyTag::client: return "client";
  }
  return "unknown";
}

namespace {

void check_common(const Dataset& ds, int k) {
  if (ds.size() == 0) throw ParameterError("dataset is empty");
  if (k < 1 || static_cast<std::size_t>(k) > ds.size())
    throw ParameterError("k must lie in [1, n]");
}

double checked_delta(const Dataset& ds) {
  const double delta = ds.min_pairwise_distance();
  if (delta == 0.0)
    throw DuplicatePoints("two records share a location; load with dedup to merge them");
  return delta;
}

// Point ids for chosen copies: region picks first, then pool picks; sorted, unique.
std::vector<int> copies_to_points(const Dataset& ds, const std::vector<CopyInfo>& copies,
                                  const std::vector<std::size_t>& chosen, std::size_t m) {
  std::vector<char> hit(m, 0);
  std::vector<int> ids;
  for (std::size_t u : chosen) {
    const auto& c = copies[u];
    if (c.tag == CopyTag::region) {
      hit[static_cast<std::size_t>(c.region)] = 1;
      ids.push_back(ds.id(c.point));
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    if (!hit[i]) throw InvalidSolution("no center chosen from critical region " + std::to_string(i));
  for (std::size_t u : chosen)
    if (copies[u].tag == CopyTag::pool) ids.push_back(ds.id(copies[u].point));
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

class Stopwatch {
 public:
  explicit Stopwatch(SolveReport& report, bool on) : report_(report), on_(on) {}
  void lap(const char* name) {
    const auto now = std::chrono::steady_clock::now();
    if (on_) report_.timings.emplace_back(name, std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }

 private:
  SolveReport& report_;
  bool on_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace

double reduction_self_distance(std::size_t n, int k, double epsilon, double beta, double p,
                               double delta) {
  const double base = epsilon * static_cast<double>(n - static_cast<std::size_t>(k)) /
                      (beta * static_cast<double>(k));
  return std::min(std::pow(base, 1.0 / p), 1.0) * delta;
}

ReductionOutput reduce_fair_to_fl(const Dataset& ds, const CriticalRegions& regions,
                                  double epsilon, double beta, double p) {
  const int k = regions.k;
  check_common(ds, k);
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0, 1)");
  if (!(beta >= 1.0)) throw ParameterError("beta must be at least 1");
  if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("p must be a finite value >= 1");
  if (static_cast<std::size_t>(k) == ds.size())
    throw ParameterError("k = n has the trivial solution of every point; no reduction needed");
  const std::size_t n = ds.size();
  const std::size_t m = regions.m();

  ReductionOutput out;
  out.regions = regions;
  out.point_ids = ds.ids();
  out.k = k;
  out.epsilon = epsilon;
  out.beta = beta;
  out.delta = checked_delta(ds);
  out.self_distance = reduction_self_distance(n, k, epsilon, beta, p, out.delta);

  std::vector<std::vector<int>> parts(m + 1);
  for (std::size_t v = 0; v < n; ++v) {
    out.facility_copies.push_back({v, CopyTag::pool, -1});
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t v : regions.members(ds, i))
      out.facility_copies.push_back({v, CopyTag::region, static_cast<int>(i)});
  }
  const std::size_t nf = out.facility_copies.size();
  std::vector<Facility> facilities;
  std::vector<int> ground;
  for (std::size_t u = 0; u < nf; ++u) {
    facilities.push_back({static_cast<int>(u), 0.0});
    ground.push_back(static_cast<int>(u));
    const auto& c = out.facility_copies[u];
    parts[c.tag == CopyTag::region ? static_cast<std::size_t>(c.region) : m].push_back(static_cast<int>(u));
  }
  std::vector<int> caps(m, 1);
  caps.push_back(k - static_cast<int>(m));

  std::vector<Client> clients;
  for (std::size_t v = 0; v < n; ++v) {
    out.client_copies.push_back({v, CopyTag::client, -1});
    clients.push_back({static_cast<int>(nf + v), ds.weight(v)});
  }

  std::vector<CopyInfo> nodes = out.facility_copies;
  nodes.insert(nodes.end(), out.client_copies.begin(), out.client_copies.end());
  const auto N = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd d(N, N);
  for (Eigen::Index a = 0; a < N; ++a) {
    for (Eigen::Index b = 0; b < N; ++b) {
      const std::size_t pa = nodes[static_cast<std::size_t>(a)].point;
      const std::size_t pb = nodes[static_cast<std::size_t>(b)].point;
      if (a == b) d(a, b) = 0.0;
      else if (pa == pb) d(a, b) = out.self_distance;
      else d(a, b) = ds.distance(pa, pb);
    }
  }
  // The copy metric is a metric whenever the input is one; its triangle
  // inequality is audited separately, so the instance skips the O(N^3) check.
  out.instance = FLInstance(std::move(facilities), std::move(clients), std::move(d), p,
                            PartitionMatroid(std::move(ground), std::move(parts), std::move(caps)),
                            false);
  return out;
}

ReductionOutput reduce_fair_to_fl(const Dataset& ds, int k, double alpha, double epsilon,
                                  double beta, double p) {
  check_common(ds, k);
  return reduce_fair_to_fl(ds, critical_regions(ds, k, alpha), epsilon, beta, p);
}

std::vector<std::size_t> augment_to_basis(const ReductionOutput& red, std::vector<std::size_t> open) {
  const auto& inst = red.instance;
  const std::size_t nc = inst.num_clients();
  const auto& mat = inst.matroid();
  std::vector<char> is_open(inst.num_facilities(), 0);
  for (std::size_t u : open) is_open[u] = 1;
  std::vector<double> best(nc, std::numeric_limits<double>::infinity());
  for (std::size_t v = 0; v < nc; ++v)
    for (std::size_t u : open) best[v] = std::min(best[v], inst.dist_p(v, u));

  for (std::size_t j = 0; j < mat.parts().size(); ++j) {
    const auto& part = mat.parts()[j];
    int used = 0;
    for (int e : part) used += is_open[mat.position_of(e)];
    while (used < mat.caps()[j]) {
      std::size_t pick = kNone;
      double pick_cost = std::numeric_limits<double>::infinity();
      for (int e : part) {
        const std::size_t u = mat.position_of(e);
        if (is_open[u]) continue;
        double c = inst.facility_cost(u);
        for (std::size_t v = 0; v < nc; ++v) c += inst.demand(v) * std::min(best[v], inst.dist_p(v, u));
        if (c < pick_cost || (c == pick_cost && u < pick)) {
          pick = u;
          pick_cost = c;
        }
      }
      if (pick == kNone) break;
      is_open[pick] = 1;
      open.push_back(pick);
      for (std::size_t v = 0; v < nc; ++v) best[v] = std::min(best[v], inst.dist_p(v, pick));
      ++used;
    }
  }
  std::sort(open.begin(), open.end());
  return open;
}

std::vector<int> map_back(const ReductionOutput& red, const std::vector<std::size_t>& open) {
  std::vector<int> ids;
  for (std::size_t u : open) {
    if (u >= red.instance.num_facilities()) throw InvalidSolution("unknown facility index");
    ids.push_back(red.instance.facilities()[u].id);
  }
  if (!red.instance.matroid().is_independent(ids))
    throw InvalidSolution("facility set is not independent in the reduction matroid");
  std::vector<int> out;
  std::vector<char> hit(red.m(), 0);
  for (std::size_t u : open) {
    const auto& c = red.facility_copies[u];
    if (c.tag == CopyTag::region) {
      hit[static_cast<std::size_t>(c.region)] = 1;
      out.push_back(red.point_ids[c.point]);
    }
  }
  for (std::size_t i = 0; i < red.m(); ++i)
    if (!hit[i]) throw InvalidSolution("no facility chosen from critical region " + std::to_string(i));
  for (std::size_t u : open)
    if (red.facility_copies[u].tag == CopyTag::pool) out.push_back(red.point_ids[red.facility_copies[u].point]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

KCenterInstance reduce_kcenter(const Dataset& ds, const CriticalRegions& regions, double epsilon,
                               double beta) {
  const int k = regions.k;
  check_common(ds, k);
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ParameterError("epsilon must lie in (0, 1/2)");
  if (!(beta >= 1.0)) throw ParameterError("beta must be at least 1");
  const std::size_t n = ds.size();
  const std::size_t m = regions.m();

  KCenterInstance out;
  out.regions = regions;
  out.k = k;
  out.epsilon = epsilon;
  out.beta = beta;
  out.delta = checked_delta(ds);
  out.self_distance = epsilon * out.delta / beta;

  for (std::size_t v = 0; v < n; ++v) out.copies.push_back({v, CopyTag::pool, -1});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t v : regions.members(ds, i)) out.copies.push_back({v, CopyTag::region, static_cast<int>(i)});

  const std::size_t N = out.copies.size();
  std::vector<int> ground(N);
  std::iota(ground.begin(), ground.end(), 0);
  std::vector<std::vector<int>> parts(m + 1);
  for (std::size_t a = 0; a < N; ++a) {
    const auto& c = out.copies[a];
    // Part 0 is the pool, part i+1 the copy of ball i.
    parts[c.tag == CopyTag::region ? static_cast<std::size_t>(c.region) + 1 : 0].push_back(static_cast<int>(a));
  }
  std::vector<int> caps{k - static_cast<int>(m)};
  caps.insert(caps.end(), m, 1);
  out.matroid = PartitionMatroid(std::move(ground), std::move(parts), std::move(caps));

  out.distances.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      const std::size_t pa = out.copies[a].point;
      const std::size_t pb = out.copies[b].point;
      double& dst = out.distances(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      if (a == b) dst = 0.0;
      else if (pa == pb) dst = out.self_distance;
      else dst = ds.distance(pa, pb);
    }
  }
  return out;
}

KCenterInstance reduce_kcenter(const Dataset& ds, int k, double alpha, double epsilon, double beta) {
  check_common(ds, k);
  return reduce_kcenter(ds, critical_regions(ds, k, alpha), epsilon, beta);
}

namespace {

double covering_radius(const Eigen::MatrixXd& d, const std::vector<std::size_t>& centers) {
  double r = 0.0;
  for (Eigen::Index v = 0; v < d.rows(); ++v) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c : centers) best = std::min(best, d(v, static_cast<Eigen::Index>(c)));
    r = std::max(r, best);
  }
  return r;
}

void check_node_matroid(const Eigen::MatrixXd& d, const PartitionMatroid& matroid) {
  if (d.rows() != d.cols()) throw ParameterError("distance matrix must be square");
  const auto& g = matroid.ground_set();
  if (g.size() != static_cast<std::size_t>(d.rows()))
    throw ParameterError("matroid ground set must list every node");
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] != static_cast<int>(i)) throw ParameterError("matroid ground set must be 0..N-1 in order");
}

}  // namespace

KCenterSolution kcenter_partition_matroid(const Eigen::MatrixXd& d, const PartitionMatroid& matroid) {
  check_node_matroid(d, matroid);
  const std::size_t N = static_cast<std::size_t>(d.rows());
  if (N == 0) throw ParameterError("k-center instance has no nodes");
  const std::size_t np = matroid.parts().size();
  const auto& caps = matroid.caps();

  std::vector<double> radii;
  radii.reserve(N * (N + 1) / 2);
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = a; b < N; ++b) radii.push_back(d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

  const int total_cap = std::accumulate(caps.begin(), caps.end(), 0);
  for (double R : radii) {
    std::vector<std::size_t> sel;
    for (std::size_t v = 0; v < N; ++v) {
      bool far = true;
      for (std::size_t s : sel)
        if (d(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(s)) <= 2.0 * R) { far = false; break; }
      if (far) sel.push_back(v);
    }
    if (sel.size() > static_cast<std::size_t>(total_cap)) continue;

    std::vector<std::vector<std::size_t>> adj(sel.size());
    for (std::size_t i = 0; i < sel.size(); ++i) {
      for (std::size_t j = 0; j < np; ++j) {
        if (caps[j] == 0) continue;
        for (int e : matroid.parts()[j]) {
          if (d(static_cast<Eigen::Index>(sel[i]), e) <= R) {
            adj[i].push_back(j);
            break;
          }
        }
      }
    }
    std::vector<std::vector<std::size_t>> holders(np);
    std::vector<std::size_t> match(sel.size(), kNone);
    std::vector<char> seen;
    std::function<bool(std::size_t)> augment = [&](std::size_t i) -> bool {
      for (std::size_t j : adj[i]) {
        if (seen[j]) continue;
        seen[j] = 1;
        if (holders[j].size() < static_cast<std::size_t>(caps[j])) {
          holders[j].push_back(i);
          match[i] = j;
          return true;
        }
        for (std::size_t& h : holders[j]) {
          const std::size_t other = h;
          if (augment(other)) {
            h = i;
            match[i] = j;
            return true;
          }
        }
      }
      return false;
    };
    bool ok = true;
    for (std::size_t i = 0; i < sel.size() && ok; ++i) {
      seen.assign(np, 0);
      ok = augment(i);
    }
    if (!ok) continue;

    KCenterSolution out;
    out.threshold = R;
    for (std::size_t i = 0; i < sel.size(); ++i) {
      for (int e : matroid.parts()[match[i]]) {
        if (d(static_cast<Eigen::Index>(sel[i]), e) <= R) {
          out.centers.push_back(static_cast<std::size_t>(e));
          break;
        }
      }
    }
    std::sort(out.centers.begin(), out.centers.end());
    out.radius = covering_radius(d, out.centers);
    return out;
  }
  throw InfeasibleError("no independent center set exists under the part capacities");
}

std::vector<std::size_t> augment_kcenter(const Eigen::MatrixXd& d, const PartitionMatroid& matroid,
                                         std::vector<std::size_t> centers) {
  check_node_matroid(d, matroid);
  const std::size_t N = static_cast<std::size_t>(d.rows());
  std::vector<char> open(N, 0);
  for (std::size_t c : centers) open[c] = 1;
  std::vector<double> near(N, std::numeric_limits<double>::infinity());
  for (std::size_t v = 0; v < N; ++v)
    for (std::size_t c : centers) near[v] = std::min(near[v], d(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(c)));

  for (std::size_t j = 0; j < matroid.parts().size(); ++j) {
    const auto& part = matroid.parts()[j];
    int used = 0;
    for (int e : part) used += open[static_cast<std::size_t>(e)];
    while (used < matroid.caps()[j]) {
      std::size_t pick = kNone;
      double pick_r = std::numeric_limits<double>::infinity();
      for (int e : part) {
        const auto u = static_cast<std::size_t>(e);
        if (open[u]) continue;
        double r = 0.0;
        for (std::size_t v = 0; v < N; ++v)
          r = std::max(r, std::min(near[v], d(static_cast<Eigen::Index>(v), e)));
        if (r < pick_r) {
          pick = u;
          pick_r = r;
        }
      }
      if (pick == kNone) break;
      open[pick] = 1;
      centers.push_back(pick);
      for (std::size_t v = 0; v < N; ++v)
        near[v] = std::min(near[v], d(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(pick)));
      ++used;
    }
  }
  std::sort(centers.begin(), centers.end());
  return centers;
}

SolveReport solve_fair_clustering(const Dataset& ds, int k, double alpha, double epsilon, double p,
                                  const SolveOptions& opts) {
  check_common(ds, k);
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0, 1)");
  if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("p must be a finite value >= 1");
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be a finite value >= 1");

  SolveReport rep;
  rep.mode = "lp-round";
  rep.p = p;
  rep.alpha = alpha;
  rep.k = k;
  rep.epsilon = epsilon;
  rep.beta = rounding_guarantee(p);
  Stopwatch clock(rep, opts.record_timings);

  if (static_cast<std::size_t>(k) == ds.size()) {
    rep.trivial = true;
    rep.centers = ds.ids();
    rep.regions = critical_regions(ds, k, alpha).m();
    return rep;
  }

  const auto regions = critical_regions(ds, k, alpha);
  clock.lap("critical_regions");
  const auto red = reduce_fair_to_fl(ds, regions, epsilon, rep.beta, p);
  clock.lap("reduction");
  const auto fl = solve_matroid_fl(red.instance, opts.fl);
  clock.lap("matroid_fl");
  const auto open = augment_to_basis(red, fl.open);
  rep.centers = map_back(red, open);
  clock.lap("map_back");

  const auto centers = ds.indices_of(rep.centers);
  rep.regions = regions.m();
  rep.cost = clustering_cost_indexed(ds, centers, p);
  rep.reduced_cost = integral_cost(red.instance, open, red.instance.demands());
  rep.fairness_max_ratio = fairness_audit_indexed(ds, centers, regions.fair).max_ratio;
  rep.region_feasible = feasible_wrt_regions_indexed(ds, regions, centers);
  rep.chain = fl.chain;
  clock.lap("audit");
  return rep;
}

SolveReport solve_fair_kcenter(const Dataset& ds, int k, double alpha, double epsilon,
                               const SolveOptions& opts) {
  check_common(ds, k);
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ParameterError("epsilon must lie in (0, 1/2)");
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be a finite value >= 1");

  SolveReport rep;
  rep.mode = "kcenter";
  rep.p = std::numeric_limits<double>::infinity();
  rep.alpha = alpha;
  rep.k = k;
  rep.epsilon = epsilon;
  rep.beta = 3.0;
  Stopwatch clock(rep, opts.record_timings);

  if (static_cast<std::size_t>(k) == ds.size()) {
    rep.trivial = true;
    rep.centers = ds.ids();
    rep.regions = critical_regions(ds, k, alpha).m();
    rep.kcenter = KCenterCertificate{};
    return rep;
  }

  const auto regions = critical_regions(ds, k, alpha);
  clock.lap("critical_regions");
  const auto inst = reduce_kcenter(ds, regions, epsilon, rep.beta);
  clock.lap("reduction");
  const auto sol = kcenter_partition_matroid(inst.distances, inst.matroid);
  const auto chosen = augment_kcenter(inst.distances, inst.matroid, sol.centers);
  clock.lap("kcenter");
  const auto ids = copies_to_points(ds, inst.copies, chosen, regions.m());
  clock.lap("map_back");

  std::vector<std::size_t> centers;
  for (int id : ids) centers.push_back(ds.index_of(id));
  rep.regions = regions.m();
  rep.centers = ids;
  rep.cost = covering_radius_indexed(ds, centers);
  rep.reduced_cost = covering_radius(inst.distances, chosen);
  rep.fairness_max_ratio = fairness_audit_indexed(ds, centers, regions.fair).max_ratio;
  rep.region_feasible = feasible_wrt_regions_indexed(ds, regions, centers);
  rep.kcenter = KCenterCertificate{sol.threshold, rep.reduced_cost, rep.cost};
  clock.lap("audit");
  return rep;
}

}  // namespace fairclust
