#include "doctest.h"

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "qpm/error.hpp"
#include "qpm/stl.hpp"

using namespace qpm;
using stl::Atom;
using stl::Formula;

namespace {

Trajectory scalar_traj(std::vector<double> xs) { return Trajectory(1, std::move(xs)); }

const std::vector<std::string> kX0{"x0"};
const std::vector<std::string> kX01{"x0", "x1"};

}  // namespace

TEST_CASE("parse maps the grammar onto the AST") {
  const auto g = stl::parse_formula("G[0,10](x0 <= 5)", kX0);
  CHECK(g == Formula::globally(Formula::atom(Atom::affine(0, -1.0, 5.0)), 0, 10));

  const auto conj = stl::parse_formula("(F[0,5](x0 > 0)) and (G[0,5](x1 > 0))", kX01);
  CHECK(conj == Formula::conjunction(Formula::eventually(Formula::atom(Atom::affine(0, 1.0, 0.0)), 0, 5),
                                     Formula::globally(Formula::atom(Atom::affine(1, 1.0, 0.0)), 0, 5)));
}

TEST_CASE("comparison forms normalize to g > 0") {
  const std::vector<double> s{2.0};
  const Trajectory tr(1, s);
  CHECK(stl::robustness(stl::parse_formula("x0 > 0.5", kX0), tr) == doctest::Approx(1.5));
  CHECK(stl::robustness(stl::parse_formula("x0 >= 0.5", kX0), tr) == doctest::Approx(1.5));
  CHECK(stl::robustness(stl::parse_formula("x0 < 0.5", kX0), tr) == doctest::Approx(-1.5));
  CHECK(stl::robustness(stl::parse_formula("x0 <= 0.5", kX0), tr) == doctest::Approx(-1.5));
  CHECK(stl::robustness(stl::parse_formula("2*x0 - 1 > x0", kX0), tr) == doctest::Approx(1.0));
}

TEST_CASE("precedence: not > U > and > or") {
  const auto a = stl::parse_formula("x0 > 0 or x0 > 1 and x0 > 2", kX0);
  CHECK(a.op() == stl::Op::Or);
  CHECK(a.right().op() == stl::Op::And);
  const auto b = stl::parse_formula("not x0 > 0 and x0 > 1", kX0);
  CHECK(b.op() == stl::Op::And);
  CHECK(b.left().op() == stl::Op::Not);
  const auto c = stl::parse_formula("x0 > 0 U[0,2] x0 > 1 and x0 > 3", kX0);
  CHECK(c.op() == stl::Op::And);
  CHECK(c.left().op() == stl::Op::Until);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(stl::parse_formula("G[3,1](x0 > 0)", kX0), ParseError);
  CHECK_THROWS_AS(stl::parse_formula("G[0,1](y > 0)", kX0), ParseError);
  CHECK_THROWS_AS(stl::parse_formula("G[0,1](x0 > 0", kX0), ParseError);
  try {
    stl::parse_formula("x0 > 0 and", kX0);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 10);
  }
}

TEST_CASE("pretty-printing round-trips") {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto phi = oracle::random_formula(rng, 2, 3, 10);
    const auto text = stl::to_string(phi, kX01);
    CHECK_MESSAGE(stl::parse_formula(text, kX01) == phi, text);
  }
}

TEST_CASE("robustness examples") {
  const auto g = stl::parse_formula("G[0,4](x0 > 0)", kX0);
  CHECK(stl::robustness(g, scalar_traj({3, 3, 3, 3, 3})) == 3.0);
  CHECK(stl::satisfied(g, scalar_traj({3, 3, 3, 3, 3})));

  const auto f = stl::parse_formula("F[0,2](x0 > 0)", kX0);
  CHECK(stl::robustness(f, scalar_traj({1, -2, 5})) == 5.0);
  CHECK_FALSE(stl::satisfied(stl::parse_formula("F[0,1](x0 > 0)", kX0), scalar_traj({-1, -1})));

  const auto u = stl::parse_formula("(x0 > 0) U[0,3] (x0 < 1)", kX0);
  const auto tr = scalar_traj({2, 2, 2, 0.5});
  CHECK(stl::robustness(u, tr) == oracle::robustness(u, tr, 0));
  CHECK(stl::robustness(u, tr) == 0.5);
}

TEST_CASE("horizon") {
  CHECK(stl::horizon(Formula::atom(Atom::affine(0, 1, 0))) == 0);
  CHECK(stl::horizon(stl::parse_formula("G[0,10](x0 > 0)", kX0)) == 10);
  CHECK(stl::horizon(stl::parse_formula("F[0,5](G[0,5](x0 > 0))", kX0)) == 10);
  CHECK(stl::horizon(stl::parse_formula("(x0 > 0) U[1,4] (G[0,2](x0 > 0))", kX0)) == 6);
}

TEST_CASE("horizon beyond the trajectory is rejected") {
  const auto g = stl::parse_formula("G[0,4](x0 > 0)", kX0);
  CHECK_THROWS_AS(stl::robustness(g, scalar_traj({1, 1, 1, 1})), InvalidArgument);
  CHECK_THROWS_AS(stl::robustness(g, scalar_traj({1, 1, 1, 1, 1}), 1), InvalidArgument);
  CHECK_THROWS_AS(stl::satisfied(g, scalar_traj({1, 1, 1})), InvalidArgument);
}

TEST_CASE("temporal bounds must satisfy 0 <= a <= b") {
  const auto x = Formula::atom(Atom::affine(0, 1, 0));
  CHECK_THROWS_AS(Formula::eventually(x, 2, 1), InvalidArgument);
  CHECK_THROWS_AS(Formula::globally(x, -1, 1), InvalidArgument);
}

TEST_CASE("true has the largest finite robustness") {
  const auto tr = scalar_traj({0});
  CHECK(stl::robustness(Formula::truth(), tr) == std::numeric_limits<double>::max());
  CHECK(std::isfinite(stl::robustness(Formula::negation(Formula::truth()), tr)));
}

TEST_CASE("negation duality and min/max connectives") {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto len = 1 + static_cast<std::size_t>(rng.below(20));
    const auto tr = oracle::random_trajectory(rng, 2, len);
    const int budget = static_cast<int>(len) - 1;
    const auto a = oracle::random_formula(rng, 2, 2, budget);
    const auto b = oracle::random_formula(rng, 2, 2, budget);
    const double ra = stl::robustness(a, tr), rb = stl::robustness(b, tr);
    CHECK(stl::robustness(Formula::negation(a), tr) == -ra);
    CHECK(stl::robustness(Formula::disjunction(a, b), tr) == std::max(ra, rb));
    CHECK(stl::robustness(Formula::conjunction(a, b), tr) == std::min(ra, rb));
  }
}

TEST_CASE("memoized evaluator matches the enumerating oracle and the Boolean semantics") {
  Rng rng(99);
  int nonzero = 0;
  for (int i = 0; i < 300; ++i) {
    const auto len = 1 + static_cast<std::size_t>(rng.below(20));
    const auto tr = oracle::random_trajectory(rng, 2, len);
    const auto phi = oracle::random_formula(rng, 2, 3, static_cast<int>(len) - 1);
    const double r = stl::robustness(phi, tr);
    REQUIRE(r == oracle::robustness(phi, tr, 0));
    CHECK(stl::satisfied(phi, tr) == oracle::satisfied(phi, tr, 0));
    if (r != 0) {
      ++nonzero;
      CHECK(stl::satisfied(phi, tr) == (r > 0));
    }
  }
  CHECK(nonzero > 250);
}

TEST_CASE("robustness at later start times") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto tr = oracle::random_trajectory(rng, 1, 15);
    const auto phi = oracle::random_formula(rng, 1, 2, 6);
    const auto t = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(15 - stl::horizon(phi))));
    CHECK(stl::robustness(phi, tr, t) == oracle::robustness(phi, tr, t));
  }
}

TEST_CASE("perturbations smaller than |robustness| keep the verdict (atoms-only formulas)") {
  Rng rng(21);
  for (int i = 0; i < 300; ++i) {
    // single-variable unit-coefficient atoms: |g(s) - g(s')| <= |s - s'|_inf
    auto unit_atom = [&] {
      const auto idx = static_cast<std::size_t>(rng.below(2));
      return Formula::atom(Atom::affine(idx, rng.bernoulli(0.5) ? 1.0 : -1.0, rng.uniform(-1, 1)));
    };
    Formula phi = unit_atom();
    for (int k = 0; k < 3; ++k)
      phi = rng.bernoulli(0.5) ? Formula::conjunction(phi, unit_atom()) : Formula::disjunction(phi, unit_atom());
    const auto tr = oracle::random_trajectory(rng, 2, 1);
    const double r = stl::robustness(phi, tr);
    if (r == 0) continue;
    std::vector<double> v = tr.values();
    for (double& x : v) x += rng.uniform(-0.999, 0.999) * std::abs(r);
    CHECK(stl::satisfied(phi, Trajectory(2, v)) == stl::satisfied(phi, tr));
  }
}

TEST_CASE("robustness_all agrees with individual evaluation") {
  Rng rng(8);
  const auto tr = oracle::random_trajectory(rng, 2, 12);
  std::vector<Formula> phis;
  for (int i = 0; i < 5; ++i) phis.push_back(oracle::random_formula(rng, 2, 3, 11));
  phis.push_back(Formula::conjunction(phis[0], phis[1]));
  const auto all = stl::robustness_all(phis, tr);
  for (std::size_t i = 0; i < phis.size(); ++i) CHECK(all[i] == stl::robustness(phis[i], tr));
}

TEST_CASE("registered nonlinear functions inside atoms") {
  stl::FunctionRegistry reg;
  reg.add("sq", [](std::span<const double> s) { return s[0] * s[0]; });
  const auto phi = stl::parse_formula("sq > 4", kX0, &reg);
  CHECK(stl::robustness(phi, scalar_traj({3})) == doctest::Approx(5.0));
  CHECK(stl::robustness(phi, scalar_traj({-1})) == doctest::Approx(-3.0));
  CHECK(stl::robustness(phi, scalar_traj({3})) == oracle::robustness(phi, scalar_traj({3}), 0));
}

TEST_CASE("trajectory validation") {
  CHECK_THROWS_AS(Trajectory(2, std::vector<double>{1, 2, 3}), InvalidArgument);
  CHECK_THROWS_AS(Trajectory(1, std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(Trajectory(1, std::vector<double>{std::nan("")}), InvalidArgument);
}
