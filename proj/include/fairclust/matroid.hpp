#pragma once

#include "fairclust/lp.hpp"

#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

namespace fairclust {

/// Independence oracle interface. Only partition matroids are implemented.
class Matroid {
 public:
  virtual ~Matroid() = default;
  virtual const std::vector<int>& ground_set() const = 0;
  virtual bool is_independent(std::span<const int> set) const = 0;
  virtual int rank(std::span<const int> set) const = 0;
};

class PartitionMatroid final : public Matroid {
 public:
  PartitionMatroid() = default;
  /// Parts must be disjoint and cover ground_set exactly; caps are per part.
  PartitionMatroid(std::vector<int> ground_set, std::vector<std::vector<int>> parts,
                   std::vector<int> caps);

  const std::vector<int>& ground_set() const override { return ground_; }
  const std::vector<std::vector<int>>& parts() const { return parts_; }
  const std::vector<int>& caps() const { return caps_; }
  std::size_t part_of(int element) const;
  /// Position of element in ground_set().
  std::size_t position_of(int element) const;

  bool is_independent(std::span<const int> set) const override;
  int rank(std::span<const int> set) const override;

 private:
  std::vector<int> ground_;
  std::vector<std::vector<int>> parts_;
  std::vector<int> caps_;
  std::unordered_map<int, std::size_t> part_index_;
  std::unordered_map<int, std::size_t> position_;

  std::vector<int> counts(std::span<const int> set) const;
};

/// Matroid polytope rows. Variable j of the emitted constraints is ground_set()[j].
struct MatroidPolytope {
  std::vector<LinearConstraint<double>> rows;  // one cap row per part
  double lower = 0.0;
  double upper = 1.0;
};

MatroidPolytope emit_lp_constraints(const PartitionMatroid& m);

/// Appends the matroid rows to lp, mapping ground position j to variable offset + j.
void append_matroid_rows(LinearProgram<double>& lp, const PartitionMatroid& m,
                         std::size_t offset);

}  // namespace fairclust
