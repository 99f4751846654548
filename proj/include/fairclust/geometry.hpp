#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace fairclust {

enum class MetricKind { euclidean, explicit_matrix };

struct Point {
  int id = 0;
  Eigen::VectorXd coords;
  double weight = 1.0;
};

struct LoadOptions {
  /// Merge records at distance zero into one record carrying the summed weight.
  bool dedup = false;
  /// Run the O(n^3) triangle check on explicit matrices even when n > 500.
  bool force_triangle_check = false;
};

/// A finite point set with its pairwise metric, materialized as a dense matrix.
///
/// Records are addressed either by id (the external name, as read from file) or
/// by index (0..size()-1, the position used by every internal matrix). Ids are
/// unique; index order is the order in which records were supplied.
class Dataset {
 public:
  static Dataset from_points(std::vector<Point> points, const LoadOptions& opts = {});
  static Dataset from_matrix(std::vector<int> ids, Eigen::MatrixXd distances,
                             const LoadOptions& opts = {});

  std::size_t size() const { return ids_.size(); }
  MetricKind metric_kind() const { return kind_; }

  int id(std::size_t index) const { return ids_[index]; }
  const std::vector<int>& ids() const { return ids_; }
  /// Throws LookupError for an unknown id.
  std::size_t index_of(int id) const;
  std::vector<std::size_t> indices_of(std::span<const int> ids) const;

  double weight(std::size_t index) const { return weights_[index]; }
  const Eigen::VectorXd& weights() const { return weights_; }
  /// Coordinates are only present for euclidean datasets.
  const std::vector<Point>& points() const { return points_; }

  double distance(std::size_t i, std::size_t j) const { return dist_(i, j); }
  const Eigen::MatrixXd& distances() const { return dist_; }

  /// Smallest distance between two distinct records; +inf when size() == 1.
  double min_pairwise_distance() const;

 private:
  MetricKind kind_ = MetricKind::euclidean;
  std::vector<int> ids_;
  std::vector<Point> points_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd dist_;
  std::unordered_map<int, std::size_t> index_;

  void build_index();
};

struct CostParams {
  double p = 1.0;
  double lambda = 1.0;
};

void validate(const CostParams& params);

/// Metric distance between two records given by id.
double distance(int a, int b, const Dataset& ds);

/// sum_v w(v) * min_{c in centers} d(v, c)^p
double clustering_cost(const Dataset& ds, std::span<const int> center_ids,
                       const CostParams& params);

/// Same as clustering_cost but with centers given by index.
double clustering_cost_indexed(const Dataset& ds, std::span<const std::size_t> centers,
                               double p);

/// max_v min_{c in centers} d(v, c)
double covering_radius_indexed(const Dataset& ds, std::span<const std::size_t> centers);

/// Upper bound on d(u,v)^p from a midpoint w:
/// (1+lambda)^(p-1) d(u,w)^p + ((1+lambda)/lambda)^(p-1) d(w,v)^p.
template <typename Scalar>
Scalar power_triangle_bound(Scalar du_w, Scalar dw_v, Scalar p, Scalar lambda) {
  using std::pow;
  const Scalar one(1);
  return pow(one + lambda, p - one) * pow(du_w, p) +
         pow((one + lambda) / lambda, p - one) * pow(dw_v, p);
}

/// Upper bound on d(u,v)^p over a path u-w-z-v: 3^(p-1) (d1^p + d2^p + d3^p).
template <typename Scalar>
Scalar two_hop_bound(Scalar d1, Scalar d2, Scalar d3, Scalar p) {
  using std::pow;
  return pow(Scalar(3), p - Scalar(1)) * (pow(d1, p) + pow(d2, p) + pow(d3, p));
}

// CSV formats. Points: header `id,w,x1,...,xd`. Matrix: a header row of ids
// followed by one row of distances per id.
Dataset read_dataset_csv(std::istream& in, const LoadOptions& opts = {});
Dataset read_dataset_csv_file(const std::string& path, const LoadOptions& opts = {});
void write_points_csv(std::ostream& out, const std::vector<Point>& points);

}  // namespace fairclust
