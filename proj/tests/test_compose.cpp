#include "doctest.h"

#include <algorithm>

#include "oracles.hpp"
#include "qpm/compose.hpp"
#include "qpm/error.hpp"
#include "synthetic.hpp"

using namespace qpm;

namespace {

PredictionInterval cal(double lo, double hi, double alpha = 0.1) { return {lo, hi, true, false, alpha}; }

bool same_bounds(const PredictionInterval& a, double lo, double hi) { return a.lo == lo && a.hi == hi; }

}  // namespace

TEST_CASE("negation") {
  const auto n = negate(cal(0.1, 0.4));
  CHECK(same_bounds(n, -0.4, -0.1));
  CHECK(n.calibrated);
  CHECK(same_bounds(negate(cal(-1, 1)), -1, 1));
  CHECK(negate(negate(cal(0.3, 2.5))) == cal(0.3, 2.5));
}

TEST_CASE("union is the interval hull") {
  CHECK(same_bounds(union_monitor(cal(0, 1), cal(0.5, 2)), 0, 2));
  CHECK(same_bounds(union_monitor(cal(-2, -1), cal(1, 2)), -2, 2));
  CHECK(union_monitor(cal(0.2, 0.7), cal(0.2, 0.7)) == cal(0.2, 0.7));
  CHECK_THROWS_AS(union_monitor(cal(0, 1, 0.1), cal(0, 1, 0.05)), InvalidArgument);

  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    double a = rng.normal(), b = rng.normal(), c = rng.normal(), d = rng.normal();
    if (a > b) std::swap(a, b);
    if (c > d) std::swap(c, d);
    const auto u = union_monitor(cal(a, b), cal(c, d));
    CHECK(u.lo <= a);
    CHECK(u.lo <= c);
    CHECK(u.hi >= b);
    CHECK(u.hi >= d);
  }
}

TEST_CASE("interval arithmetic for conjunction and disjunction") {
  CHECK(same_bounds(combine_min({0.1, 0.5}, {0.2, 0.4}), 0.1, 0.4));
  CHECK(same_bounds(combine_min({0.1, 0.5}, {0.1, 0.5}), 0.1, 0.5));
  CHECK(same_bounds(combine_max({-1, 0}, {0, 1}), 0, 1));

  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    double a = rng.normal(), b = rng.normal(), c = rng.normal(), d = rng.normal();
    if (a > b) std::swap(a, b);
    if (c > d) std::swap(c, d);
    const auto m = combine_min({a, b}, {c, d});
    CHECK(m.lo <= a);
    CHECK(m.lo <= c);
    CHECK(m.hi <= b);
    CHECK(m.hi <= d);
    CHECK(m.lo <= m.hi);
    const auto x = combine_max({a, b}, {c, d});
    CHECK(x.lo <= x.hi);
  }
  // left folds match pairwise application
  const std::vector<PredictionInterval> three{{0, 3}, {1, 2}, {-1, 5}};
  CHECK(same_bounds(combine_all(ComposeOp::And, three), -1, 2));
  CHECK(same_bounds(combine_all(ComposeOp::Or, three), 1, 5));
  CHECK_THROWS_AS(combine_all(ComposeOp::Not, three), InvalidArgument);
}

TEST_CASE("composite robustness is the min / max / negation of the components") {
  Rng rng(12);
  const std::vector<std::string> names{"x0", "x1"};
  for (int i = 0; i < 100; ++i) {
    const auto tr = oracle::random_trajectory(rng, 2, 10);
    const auto a = oracle::random_formula(rng, 2, 2, 9);
    const auto b = oracle::random_formula(rng, 2, 2, 9);
    const double ra = oracle::robustness(a, tr, 0), rb = oracle::robustness(b, tr, 0);
    CHECK(stl::robustness(compose_formula(ComposeOp::And, a, &b), tr) == std::min(ra, rb));
    CHECK(stl::robustness(compose_formula(ComposeOp::Or, a, &b), tr) == std::max(ra, rb));
    CHECK(stl::robustness(compose_formula(ComposeOp::Not, a, nullptr), tr) == -ra);
  }
  const auto x = stl::parse_formula("x0 > 0", names);
  CHECK_THROWS_AS(compose_formula(ComposeOp::And, x, nullptr), InvalidArgument);
}

TEST_CASE("composing a monitor with itself reproduces the single-property calibration") {
  const auto cal_set = synth::gaussian(500, 4, synth::hetero_sd, 9, Split::Calibration);
  std::vector<PredictionInterval> pis, self;
  for (const auto& r : cal_set.records) {
    pis.push_back({-0.5 * r.state[0] - 0.3, 0.4 + r.state[0] * r.state[0]});
    self.push_back(combine_min(pis.back(), pis.back()));
  }
  const auto single = calibrate(pis, cal_set, 0.1);
  const auto composed = recalibrate_combined(self, cal_set, 0.1);
  CHECK(composed.tau == single.tau);
}

TEST_CASE("operation and strategy names") {
  for (auto op : {ComposeOp::And, ComposeOp::Or, ComposeOp::Not}) CHECK(parse_op(op_name(op)) == op);
  for (auto s : {ComposeStrategy::Union, ComposeStrategy::Recalibrated})
    CHECK(parse_strategy(strategy_name(s)) == s);
  CHECK_THROWS_AS(parse_op("xor"), InvalidArgument);
  CHECK_THROWS_AS(parse_strategy("avg"), InvalidArgument);
}
