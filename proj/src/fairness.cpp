#include "fairclust/fairness.hpp"

#include "fairclust/errors.hpp"

#include <algorithm>
#include <limits>

namespace fairclust {

namespace {

void check_k(const Dataset& ds, int k) {
  if (k <= 0 || static_cast<std::size_t>(k) > ds.size()) {
    throw ParameterError("k must satisfy 1 <= k <= n (n = " + std::to_string(ds.size()) + ")");
  }
}

}  // namespace

FairRadii fair_radii(const Dataset& ds, int k) {
  check_k(ds, k);
  const std::size_t n = ds.size();
  const auto uk = static_cast<std::size_t>(k);
  FairRadii out;
  out.threshold_count = (n + uk - 1) / uk;
  out.radius.resize(static_cast<Eigen::Index>(n));
  std::vector<double> row(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t u = 0; u < n; ++u) row[u] = ds.distance(v, u);
    auto nth = row.begin() + static_cast<std::ptrdiff_t>(out.threshold_count - 1);
    std::nth_element(row.begin(), nth, row.end());
    out.radius(static_cast<Eigen::Index>(v)) = *nth;
  }
  return out;
}

std::vector<std::size_t> CriticalRegions::members(const Dataset& ds, std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t x = 0; x < ds.size(); ++x) {
    if (ds.distance(x, center_index[i]) <= radii[i]) out.push_back(x);
  }
  return out;
}

CriticalRegions critical_regions(const Dataset& ds, int k, double alpha) {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be >= 1");
  CriticalRegions out;
  out.alpha = alpha;
  out.k = k;
  out.fair = fair_radii(ds, k);
  const auto& r = out.fair.radius;
  const std::size_t n = ds.size();

  // Candidate order: nondecreasing r, then ascending id.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ra = r(static_cast<Eigen::Index>(a));
    const double rb = r(static_cast<Eigen::Index>(b));
    if (ra != rb) return ra < rb;
    return ds.id(a) < ds.id(b);
  });

  std::vector<bool> covered(n, false);
  std::size_t remaining = n;
  for (std::size_t c : order) {
    if (remaining == 0) break;
    if (covered[c]) continue;
    out.centers.push_back(ds.id(c));
    out.center_index.push_back(c);
    out.radii.push_back(alpha * r(static_cast<Eigen::Index>(c)));
    for (std::size_t x = 0; x < n; ++x) {
      if (!covered[x] && ds.distance(x, c) <= 2.0 * alpha * r(static_cast<Eigen::Index>(x))) {
        covered[x] = true;
        --remaining;
      }
    }
    if (!covered[c]) throw InternalError("critical region center failed to cover itself");
  }
  return out;
}

FairnessAudit fairness_audit_indexed(const Dataset& ds, std::span<const std::size_t> centers,
                                     const FairRadii& radii) {
  if (centers.empty()) throw ParameterError("center set must be nonempty");
  FairnessAudit out;
  out.ratio.resize(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t v = 0; v < ds.size(); ++v) {
    double d = std::numeric_limits<double>::infinity();
    for (auto c : centers) d = std::min(d, ds.distance(v, c));
    const double rv = radii.radius(static_cast<Eigen::Index>(v));
    double ratio = 0.0;
    if (rv > 0.0) {
      ratio = d / rv;
    } else {
      ratio = d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    out.ratio(static_cast<Eigen::Index>(v)) = ratio;
    out.max_ratio = std::max(out.max_ratio, ratio);
  }
  return out;
}

FairnessAudit fairness_audit(const Dataset& ds, std::span<const int> center_ids, int k) {
  if (center_ids.empty()) throw ParameterError("center set must be nonempty");
  auto centers = ds.indices_of(center_ids);
  return fairness_audit_indexed(ds, centers, fair_radii(ds, k));
}

bool feasible_wrt_regions_indexed(const Dataset& ds, const CriticalRegions& regions,
                                  std::span<const std::size_t> centers) {
  for (std::size_t i = 0; i < regions.m(); ++i) {
    bool hit = false;
    for (auto c : centers) {
      if (ds.distance(c, regions.center_index[i]) <= regions.radii[i]) {
        hit = true;
        break;
      }
    }
    if (!hit) return false;
  }
  return true;
}

bool feasible_wrt_regions(const Dataset& ds, const CriticalRegions& regions,
                          std::span<const int> center_ids) {
  auto centers = ds.indices_of(center_ids);
  return feasible_wrt_regions_indexed(ds, regions, centers);
}

}  // namespace fairclust
