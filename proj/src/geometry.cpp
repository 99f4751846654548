#include "fairclust/geometry.hpp"

#include "fairclust/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace fairclust {

namespace {

constexpr double kMetricSlack = 1e-9;

void check_unique_ids(const std::vector<int>& ids) {
  std::vector<int> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end()) {
    throw ParameterError("duplicate point id " + std::to_string(*dup));
  }
}

// Groups of indices at mutual distance zero, each group sorted, groups ordered by
// their first member.
std::vector<std::vector<std::size_t>> zero_distance_groups(const Eigen::MatrixXd& d) {
  const auto n = static_cast<std::size_t>(d.rows());
  std::vector<bool> taken(n, false);
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    if (taken[i]) continue;
    std::vector<std::size_t> g{i};
    taken[i] = true;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!taken[j] && d(i, j) == 0.0) {
        g.push_back(j);
        taken[j] = true;
      }
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError("expected a finite number, got '" + s + "'", line);
  }
  return v;
}

int parse_int(const std::string& s, std::size_t line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("expected an integer id, got '" + s + "'", line);
  }
  return v;
}

}  // namespace

void Dataset::build_index() {
  index_.clear();
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
}

std::size_t Dataset::index_of(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("unknown point id " + std::to_string(id));
  return it->second;
}

std::vector<std::size_t> Dataset::indices_of(std::span<const int> ids) const {
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(index_of(id));
  return out;
}

double Dataset::min_pairwise_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < dist_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < dist_.cols(); ++j) best = std::min(best, dist_(i, j));
  }
  return best;
}

Dataset Dataset::from_points(std::vector<Point> points, const LoadOptions& opts) {
  if (points.empty()) throw ParameterError("dataset must contain at least one point");
  const auto dim = points.front().coords.size();
  std::vector<int> ids;
  for (const auto& pt : points) {
    if (pt.coords.size() != dim) throw ParameterError("points have inconsistent dimension");
    if (!(pt.weight >= 0.0) || !std::isfinite(pt.weight)) {
      throw ParameterError("point weight must be a finite nonnegative number");
    }
    if (!pt.coords.allFinite()) throw ParameterError("point coordinates must be finite");
    ids.push_back(pt.id);
  }
  check_unique_ids(ids);

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (points[i].coords - points[j].coords).norm();
    }
  }

  if (opts.dedup) {
    auto groups = zero_distance_groups(d);
    if (groups.size() != points.size()) {
      std::vector<Point> merged;
      std::vector<Eigen::Index> keep;
      for (const auto& g : groups) {
        // Lowest id of the group names the merged record.
        std::size_t rep = *std::min_element(g.begin(), g.end(), [&](auto a, auto b) {
          return points[a].id < points[b].id;
        });
        Point p = points[rep];
        p.weight = 0.0;
        for (auto i : g) p.weight += points[i].weight;
        merged.push_back(std::move(p));
        keep.push_back(static_cast<Eigen::Index>(g.front()));
      }
      Eigen::MatrixXd reduced(static_cast<Eigen::Index>(keep.size()),
                              static_cast<Eigen::Index>(keep.size()));
      for (std::size_t a = 0; a < keep.size(); ++a)
        for (std::size_t b = 0; b < keep.size(); ++b) reduced(a, b) = d(keep[a], keep[b]);
      points = std::move(merged);
      d = std::move(reduced);
    }
  }

  Dataset ds;
  ds.kind_ = MetricKind::euclidean;
  ds.points_ = std::move(points);
  ds.ids_.clear();
  ds.weights_.resize(static_cast<Eigen::Index>(ds.points_.size()));
  for (std::size_t i = 0; i < ds.points_.size(); ++i) {
    ds.ids_.push_back(ds.points_[i].id);
    ds.weights_(static_cast<Eigen::Index>(i)) = ds.points_[i].weight;
  }
  ds.dist_ = std::move(d);
  ds.build_index();
  return ds;
}

Dataset Dataset::from_matrix(std::vector<int> ids, Eigen::MatrixXd distances,
                             const LoadOptions& opts) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (n == 0) throw ParameterError("dataset must contain at least one point");
  if (distances.rows() != n || distances.cols() != n) {
    throw ParameterError("distance matrix must be " + std::to_string(n) + "x" +
                         std::to_string(n));
  }
  check_unique_ids(ids);
  if (!distances.allFinite()) throw ParameterError("distance matrix must be finite");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (distances(i, i) != 0.0) throw ParameterError("distance matrix diagonal must be zero");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (distances(i, j) < 0.0) throw ParameterError("distances must be nonnegative");
      if (distances(i, j) != distances(j, i)) {
        throw ParameterError("distance matrix must be symmetric");
      }
    }
  }
  if (n <= 500 || opts.force_triangle_check) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index l = 0; l < n; ++l) {
          const double lhs = distances(i, j);
          const double rhs = distances(i, l) + distances(l, j);
          if (lhs > rhs + kMetricSlack * std::max(1.0, rhs)) {
            throw ParameterError("distance matrix violates the triangle inequality at (" +
                                 std::to_string(ids[i]) + "," + std::to_string(ids[l]) + "," +
                                 std::to_string(ids[j]) + ")");
          }
        }
  }

  std::vector<double> weights(ids.size(), 1.0);
  if (opts.dedup) {
    auto groups = zero_distance_groups(distances);
    if (groups.size() != ids.size()) {
      std::vector<int> merged_ids;
      std::vector<double> merged_w;
      std::vector<Eigen::Index> keep;
      for (const auto& g : groups) {
        int best = ids[g.front()];
        for (auto i : g) best = std::min(best, ids[i]);
        merged_ids.push_back(best);
        merged_w.push_back(static_cast<double>(g.size()));
        keep.push_back(static_cast<Eigen::Index>(g.front()));
      }
      Eigen::MatrixXd reduced(static_cast<Eigen::Index>(keep.size()),
                              static_cast<Eigen::Index>(keep.size()));
      for (std::size_t a = 0; a < keep.size(); ++a)
        for (std::size_t b = 0; b < keep.size(); ++b)
          reduced(a, b) = distances(keep[a], keep[b]);
      ids = std::move(merged_ids);
      weights = std::move(merged_w);
      distances = std::move(reduced);
    }
  }

  Dataset ds;
  ds.kind_ = MetricKind::explicit_matrix;
  ds.ids_ = std::move(ids);
  ds.weights_ = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  ds.dist_ = std::move(distances);
  ds.build_index();
  return ds;
}

void validate(const CostParams& params) {
  if (!(params.p >= 1.0) || !std::isfinite(params.p)) {
    throw ParameterError("p must be a finite real >= 1");
  }
  if (!(params.lambda > 0.0)) throw ParameterError("lambda must be positive");
}

double distance(int a, int b, const Dataset& ds) {
  return ds.distance(ds.index_of(a), ds.index_of(b));
}

double clustering_cost(const Dataset& ds, std::span<const int> center_ids,
                       const CostParams& params) {
  validate(params);
  if (center_ids.empty()) throw ParameterError("center set must be nonempty");
  auto centers = ds.indices_of(center_ids);
  return clustering_cost_indexed(ds, centers, params.p);
}

double clustering_cost_indexed(const Dataset& ds, std::span<const std::size_t> centers,
                               double p) {
  if (centers.empty()) throw ParameterError("center set must be nonempty");
  double total = 0.0;
  for (std::size_t v = 0; v < ds.size(); ++v) {
    double best = std::numeric_limits<double>::infinity();
    for (auto c : centers) best = std::min(best, ds.distance(v, c));
    total += ds.weight(v) * std::pow(best, p);
  }
  return total;
}

double covering_radius_indexed(const Dataset& ds, std::span<const std::size_t> centers) {
  if (centers.empty()) throw ParameterError("center set must be nonempty");
  double radius = 0.0;
  for (std::size_t v = 0; v < ds.size(); ++v) {
    double best = std::numeric_limits<double>::infinity();
    for (auto c : centers) best = std::min(best, ds.distance(v, c));
    radius = std::max(radius, best);
  }
  return radius;
}

Dataset read_dataset_csv(std::istream& in, const LoadOptions& opts) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw ParseError("empty input", lineno);

  if (header.front() == "id") {
    if (header.size() < 3 || header[1] != "w") {
      throw ParseError("point header must be id,w,x1,...,xd", lineno);
    }
    const std::size_t dim = header.size() - 2;
    std::vector<Point> points;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      auto cells = split_csv(line);
      if (cells.size() != header.size()) {
        throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(cells.size()),
                         lineno);
      }
      Point p;
      p.id = parse_int(cells[0], lineno);
      p.weight = parse_double(cells[1], lineno);
      if (p.weight < 0.0) throw ParseError("weight must be nonnegative", lineno);
      p.coords.resize(static_cast<Eigen::Index>(dim));
      for (std::size_t c = 0; c < dim; ++c)
        p.coords(static_cast<Eigen::Index>(c)) = parse_double(cells[c + 2], lineno);
      points.push_back(std::move(p));
    }
    if (points.empty()) throw ParseError("no point rows", lineno);
    return Dataset::from_points(std::move(points), opts);
  }

  std::vector<int> ids;
  for (const auto& cell : header) ids.push_back(parse_int(cell, lineno));
  const auto n = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd d(n, n);
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (row >= n) throw ParseError("more matrix rows than ids", lineno);
    auto cells = split_csv(line);
    if (static_cast<Eigen::Index>(cells.size()) != n) {
      throw ParseError("matrix row must have " + std::to_string(n) + " entries", lineno);
    }
    for (Eigen::Index j = 0; j < n; ++j) d(row, j) = parse_double(cells[j], lineno);
    ++row;
  }
  if (row != n) throw ParseError("matrix has fewer rows than ids", lineno);
  return Dataset::from_matrix(std::move(ids), std::move(d), opts);
}

Dataset read_dataset_csv_file(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open " + path);
  return read_dataset_csv(in, opts);
}

void write_points_csv(std::ostream& out, const std::vector<Point>& points) {
  const Eigen::Index dim = points.empty() ? 0 : points.front().coords.size();
  out << "id,w";
  for (Eigen::Index c = 0; c < dim; ++c) out << ",x" << (c + 1);
  out << '\n';
  out << std::setprecision(17);
  for (const auto& p : points) {
    out << p.id << ',' << p.weight;
    for (Eigen::Index c = 0; c < dim; ++c) out << ',' << p.coords(c);
    out << '\n';
  }
}

}  // namespace fairclust
