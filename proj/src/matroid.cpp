#include "fairclust/matroid.hpp"

#include "fairclust/errors.hpp"

#include <algorithm>

namespace fairclust {

PartitionMatroid::PartitionMatroid(std::vector<int> ground_set,
                                   std::vector<std::vector<int>> parts, std::vector<int> caps)
    : ground_(std::move(ground_set)), parts_(std::move(parts)), caps_(std::move(caps)) {
  if (parts_.size() != caps_.size()) throw ParameterError("one cap per part is required");
  for (std::size_t i = 0; i < ground_.size(); ++i) {
    if (!position_.emplace(ground_[i], i).second) {
      throw ParameterError("duplicate element " + std::to_string(ground_[i]) + " in ground set");
    }
  }
  for (std::size_t p = 0; p < parts_.size(); ++p) {
    if (caps_[p] < 0) throw ParameterError("part capacities must be nonnegative");
    for (int e : parts_[p]) {
      if (!position_.count(e)) {
        throw ParameterError("part element " + std::to_string(e) + " is not in the ground set");
      }
      if (!part_index_.emplace(e, p).second) {
        throw ParameterError("element " + std::to_string(e) + " appears in two parts");
      }
    }
  }
  for (int e : ground_) {
    if (!part_index_.count(e)) {
      throw ParameterError("element " + std::to_string(e) + " belongs to no part");
    }
  }
}

std::size_t PartitionMatroid::part_of(int element) const {
  auto it = part_index_.find(element);
  if (it == part_index_.end()) throw LookupError("unknown element " + std::to_string(element));
  return it->second;
}

std::size_t PartitionMatroid::position_of(int element) const {
  auto it = position_.find(element);
  if (it == position_.end()) throw LookupError("unknown element " + std::to_string(element));
  return it->second;
}

std::vector<int> PartitionMatroid::counts(std::span<const int> set) const {
  std::vector<int> c(parts_.size(), 0);
  std::vector<int> seen(set.begin(), set.end());
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  for (int e : seen) ++c[part_of(e)];
  return c;
}

bool PartitionMatroid::is_independent(std::span<const int> set) const {
  auto c = counts(set);
  for (std::size_t p = 0; p < c.size(); ++p)
    if (c[p] > caps_[p]) return false;
  return true;
}

int PartitionMatroid::rank(std::span<const int> set) const {
  auto c = counts(set);
  int r = 0;
  for (std::size_t p = 0; p < c.size(); ++p) r += std::min(c[p], caps_[p]);
  return r;
}

MatroidPolytope emit_lp_constraints(const PartitionMatroid& m) {
  MatroidPolytope out;
  for (std::size_t p = 0; p < m.parts().size(); ++p) {
    LinearConstraint<double> row;
    row.relation = Relation::less_equal;
    row.rhs = m.caps()[p];
    row.name = "part" + std::to_string(p);
    for (int e : m.parts()[p]) row.terms.emplace_back(m.position_of(e), 1.0);
    out.rows.push_back(std::move(row));
  }
  return out;
}

void append_matroid_rows(LinearProgram<double>& lp, const PartitionMatroid& m,
                         std::size_t offset) {
  for (auto row : emit_lp_constraints(m).rows) {
    for (auto& t : row.terms) t.first += offset;
    lp.add_constraint(std::move(row));
  }
}

}  // namespace fairclust
