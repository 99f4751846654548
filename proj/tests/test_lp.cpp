#include "fairclust/errors.hpp"
#include "fairclust/lp.hpp"
#include "support/brute.hpp"
#include "support/generators.hpp"

#include <doctest.h>

#include <sstream>

using namespace fairclust;
using testsupport::Rng;

namespace {

// Random bounded LP with a known feasible point x0 on the 1/8 grid, so that
// equality rows stay feasible in exact arithmetic.
LinearProgram<double> random_lp(Rng& rng, int n, int m, Eigen::VectorXd& x0) {
  LinearProgram<double> lp;
  x0.resize(n);
  for (int j = 0; j < n; ++j) {
    const double hi = testsupport::uniform_int(rng, 0, 3) == 0 ? 1.0 : 2.0;
    lp.add_variable(0.0, hi, testsupport::uniform(rng, -1, 1));
    x0(j) = testsupport::uniform_int(rng, 0, static_cast<int>(8 * hi)) / 8.0;  // exact row sums
  }
  for (int i = 0; i < m; ++i) {
    LinearConstraint<double> row;
    double act = 0;
    for (int j = 0; j < n; ++j) {
      if (testsupport::uniform_int(rng, 0, 2) == 0) continue;
      const double a = testsupport::uniform_int(rng, -2, 3);
      if (a == 0) continue;
      row.terms.emplace_back(j, a);
      act += a * x0(j);
    }
    const int kind = testsupport::uniform_int(rng, 0, 4);
    row.relation = kind == 0 ? Relation::equal : kind < 3 ? Relation::less_equal : Relation::greater_equal;
    row.rhs = row.relation == Relation::equal ? act
              : row.relation == Relation::less_equal ? act + testsupport::uniform(rng, 0, 1)
                                                     : act - testsupport::uniform(rng, 0, 1);
    lp.add_constraint(row);
  }
  return lp;
}

// Rank of the tight rows and bounds at x.
Eigen::Index active_rank(const LinearProgram<double>& lp, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::RowVectorXd> rows;
  for (std::size_t i = 0; i < lp.num_constraints(); ++i) {
    const auto& c = lp.constraints()[i];
    if (std::abs(lp.row_activity(i, x) - c.rhs) > 1e-7 * (1 + std::abs(c.rhs))) continue;
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
    for (const auto& [j, a] : c.terms) r(static_cast<Eigen::Index>(j)) += a;
    rows.push_back(r);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const bool at_lo = std::abs(x(j) - lp.lower(uj)) <= 1e-9;
    const bool at_hi = lp.upper(uj) && std::abs(x(j) - *lp.upper(uj)) <= 1e-9;
    if (at_lo || at_hi) rows.push_back(Eigen::RowVectorXd::Unit(n, j));
  }
  if (rows.empty()) return 0;
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i) A.row(static_cast<Eigen::Index>(i)) = rows[i];
  return Eigen::FullPivLU<Eigen::MatrixXd>(A).rank();
}

}  // namespace

TEST_CASE("one variable in a box") {
  LinearProgram<double> lp;
  lp.add_variable(0.0, 1.0, 1.0, "y");
  const auto sol = solve_to_vertex(lp);
  REQUIRE(sol.status == LPStatus::optimal);
  CHECK(sol.values(0) == 0.0);
  CHECK(sol.is_vertex);
}

TEST_CASE("simplex corner") {
  LinearProgram<double> lp;
  lp.add_variable(0.0, 1.0, -1.0);
  lp.add_variable(0.0, 1.0, -1.0);
  lp.add_constraint({{{0, 1.0}, {1, 1.0}}, Relation::less_equal, 1.0, "cap"});
  const auto sol = solve_to_vertex(lp);
  REQUIRE(sol.status == LPStatus::optimal);
  CHECK(sol.objective == doctest::Approx(-1.0));
  const bool corner = (sol.values(0) == 1.0 && sol.values(1) == 0.0) ||
                      (sol.values(0) == 0.0 && sol.values(1) == 1.0);
  CHECK(corner);
}

TEST_CASE("infeasible and unbounded are reported") {
  LinearProgram<double> inf;
  inf.add_variable(0.0, 1.0, 1.0);
  inf.add_constraint({{{0, 1.0}}, Relation::greater_equal, 2.0, ""});
  CHECK(solve_to_vertex(inf).status == LPStatus::infeasible);

  LinearProgram<double> unb;
  unb.add_variable(0.0, std::nullopt, -1.0);
  CHECK(solve_to_vertex(unb).status == LPStatus::unbounded);

  LinearProgram<double> bad;
  CHECK_THROWS_AS(bad.add_variable(1.0, 0.0, 0.0), ParameterError);
  bad.add_variable(0.0, 1.0, 0.0);
  CHECK_THROWS_AS(bad.add_constraint({{{3, 1.0}}, Relation::equal, 0.0, ""}), ParameterError);
}

TEST_CASE("random LPs: feasibility, vertex rank, and dominance over a feasible point") {
  Rng rng(31);
  int optimal = 0;
  for (int t = 0; t < 300; ++t) {
    Eigen::VectorXd x0;
    const auto lp = random_lp(rng, testsupport::uniform_int(rng, 1, 12), testsupport::uniform_int(rng, 0, 10), x0);
    const auto sol = solve_to_vertex(lp);
    REQUIRE(sol.status == LPStatus::optimal);
    ++optimal;
    CHECK(lp.max_violation(sol.values) <= 1e-7);
    CHECK(sol.objective <= lp.objective(x0) + 1e-9);
    CHECK(active_rank(lp, sol.values) == sol.values.size());

    const auto exact = solve_to_vertex_exact(lp);
    REQUIRE(exact.status == LPStatus::optimal);
    CHECK(exact.objective == doctest::Approx(sol.objective).epsilon(1e-7));

    SimplexOptions bland;
    bland.rule = PivotRule::bland;
    const auto b = solve_to_vertex(lp, bland);
    CHECK(b.objective == doctest::Approx(sol.objective).epsilon(1e-7));
  }
  CHECK(optimal == 300);
}

TEST_CASE("identical programs give bit-identical solutions") {
  Rng rng(4);
  Eigen::VectorXd x0;
  const auto lp = random_lp(rng, 10, 8, x0);
  const auto a = solve_to_vertex(lp);
  const auto b = solve_to_vertex(lp);
  CHECK(a.values == b.values);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("exact rational solve on a fractional vertex") {
  LinearProgram<Rational> lp;
  lp.add_variable(Rational(0), Rational(1), Rational(-1));
  lp.add_variable(Rational(0), Rational(1), Rational(-1));
  lp.add_constraint({{{0, Rational(3)}, {1, Rational(1)}}, Relation::less_equal, Rational(2), ""});
  lp.add_constraint({{{0, Rational(1)}, {1, Rational(3)}}, Relation::less_equal, Rational(2), ""});
  const auto sol = solve_to_vertex(lp);
  REQUIRE(sol.status == LPStatus::optimal);
  CHECK(sol.values(0) == Rational(1, 2));
  CHECK(sol.values(1) == Rational(1, 2));
}

TEST_CASE("snap") {
  Eigen::Vector2d v(0.4999999, 1.0000001);
  const auto s = snap(v, Grid::half, 1e-5);
  CHECK(s(0) == 0.5);
  CHECK(s(1) == 1.0);
  CHECK_THROWS_AS(snap(Eigen::VectorXd::Constant(1, 0.3), Grid::half, 1e-5), SnapFailure);
  try {
    snap(Eigen::Vector3d(0.0, 0.5, 0.7), Grid::unit, 1e-5);
    FAIL("expected SnapFailure");
  } catch (const SnapFailure& e) {
    CHECK(e.offending() == std::vector<std::size_t>{1, 2});
  }

  LinearProgram<double> lp;
  lp.add_variable(0.0, 1.0, 0.0);
  lp.add_variable(0.0, 1.0, 0.0);
  lp.add_constraint({{{0, 1.0}, {1, 1.0}}, Relation::less_equal, 1.0, ""});
  CHECK_THROWS_AS(snap(Eigen::Vector2d(0.999999, 0.999999), Grid::unit, 1e-5, lp), SnapFailure);
}

TEST_CASE("vertices of a two-partition intersection are integral") {
  // variables indexed by (part a, part b) cells of a 3x3 grid; each row and column sum <= 1,
  // and some rows forced to 1. This is a bipartite matching polytope.
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    LinearProgram<double> lp;
    for (int j = 0; j < 6; ++j) lp.add_variable(0.0, 1.0, testsupport::uniform(rng, -1, 1));
    const int A[6] = {0, 0, 1, 1, 2, 2};
    const int B[6] = {0, 1, 1, 2, 2, 0};
    for (int g = 0; g < 3; ++g) {
      LinearConstraint<double> ra, rb;
      for (int j = 0; j < 6; ++j) {
        if (A[j] == g) ra.terms.emplace_back(j, 1.0);
        if (B[j] == g) rb.terms.emplace_back(j, 1.0);
      }
      ra.relation = g == 0 ? Relation::equal : Relation::less_equal;
      ra.rhs = 1.0;
      rb.rhs = 1.0;
      lp.add_constraint(ra);
      lp.add_constraint(rb);
    }
    const auto sol = solve_to_vertex(lp);
    REQUIRE(sol.status == LPStatus::optimal);
    const auto y = snap(sol.values, Grid::unit, 1e-5, lp);
    CHECK(lp.objective(y) == doctest::Approx(testsupport::brute_grid_min(lp, 1.0)));
  }
}

TEST_CASE("lp text dump") {
  LinearProgram<double> lp;
  lp.add_variable(0.0, 1.0, 2.0, "y_0");
  lp.add_variable(0.0, std::nullopt, -1.0, "y_1");
  lp.add_constraint({{{0, 1.0}, {1, -1.0}}, Relation::greater_equal, 0.5, "row"});
  std::ostringstream out;
  write_lp_format(out, lp);
  const auto text = out.str();
  CHECK(text.find("Minimize") != std::string::npos);
  CHECK(text.find("row:") != std::string::npos);
  CHECK(text.find("y_1") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
}
