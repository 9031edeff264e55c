#include "doctest.h"

#include <algorithm>

#include "qpm/eval.hpp"
#include "qpm/error.hpp"
#include "synthetic.hpp"

using namespace qpm;

TEST_CASE("classification examples") {
  auto c = classify({0.2, 0.5}, 1);
  CHECK(c.outcome == Outcome::Correct);
  CHECK_FALSE(c.false_positive);
  CHECK(classify({-0.1, 0.3}, 1).outcome == Outcome::Uncertain);
  c = classify({0.1, 0.4}, 0);
  CHECK(c.outcome == Outcome::Wrong);
  CHECK(c.false_positive);
  c = classify({0.1, 0.4}, -1);
  CHECK(c.outcome == Outcome::Wrong);
  CHECK(c.false_positive);
  c = classify({-0.4, -0.1}, 1);
  CHECK(c.outcome == Outcome::Wrong);
  CHECK_FALSE(c.false_positive);
  CHECK(classify({-0.4, 0.4}, 0).outcome == Outcome::Correct);
}

TEST_CASE("zero endpoints straddle") {
  CHECK(predicted_sign({0.0, 1.0}) == 0);
  CHECK(predicted_sign({-1.0, 0.0}) == 0);
  CHECK(predicted_sign({1e-300, 1.0}) == 1);
}

TEST_CASE("coverage, efficiency and EQR width") {
  Dataset d;
  d.records = {{{0.0}, {0.1, 0.5, 0.9}, 1}, {{1.0}, {-1.0, 2.0, 0.0}, 0}};
  const std::vector<PredictionInterval> all{{0, 1}, {-1, 2}};
  CHECK(coverage(all, d) == 100.0);
  const std::vector<PredictionInterval> points{{0.5, 0.5, true, true}, {7, 7, true, true}};
  CHECK(coverage(points, d) == doctest::Approx(100.0 / 6));
  CHECK(efficiency(std::vector<PredictionInterval>{{0, 1}}) == 1.0);
  CHECK_THROWS_AS(coverage(std::span(all).first(1), d), InvalidArgument);

  // reversing states and samples leaves coverage unchanged
  Dataset r = d;
  std::reverse(r.records.begin(), r.records.end());
  for (auto& rec : r.records) std::reverse(rec.robustness.begin(), rec.robustness.end());
  const std::vector<PredictionInterval> mixed{{0.2, 0.6}, {-1, 0.5}};
  const std::vector<PredictionInterval> mixed_r{{-1, 0.5}, {0.2, 0.6}};
  CHECK(coverage(mixed, d) == coverage(mixed_r, r));
}

TEST_CASE("EQR width of uniform samples") {
  Dataset d;
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> ys(500);
    for (double& y : ys) y = rng.uniform();
    d.records.push_back({{0.0}, ys, 1});
  }
  CHECK(std::abs(eqr_width(d, 0.1) - 0.9) < 0.02);
}

TEST_CASE("conformalized widths grow by exactly twice tau") {
  Rng rng(5);
  std::vector<PredictionInterval> pis, cpis;
  for (int i = 0; i < 50; ++i) {
    const double lo = rng.normal();
    pis.push_back({lo, lo + rng.uniform(0.5, 2.0)});
  }
  for (double tau : {0.3, 0.0, -0.1}) {
    cpis.clear();
    for (const auto& p : pis) cpis.push_back(conformalize(p, tau, 0.1));
    CHECK(efficiency(cpis) - efficiency(pis) == doctest::Approx(2 * tau));
    CHECK((efficiency(cpis) >= efficiency(pis)) == (tau >= 0));
  }
}

TEST_CASE("evaluate partitions states and formats a table row") {
  const auto d = synth::gaussian(300, 20, synth::hetero_sd, 3, Split::Test);
  std::vector<PredictionInterval> pis;
  for (const auto& r : d.records) pis.push_back({r.state[0] - 0.5, r.state[0] + 0.5});
  const auto m = evaluate(pis, d, 0.1);
  CHECK(m.correct + m.uncertain + m.wrong == doctest::Approx(100.0));
  CHECK(m.false_positive <= m.wrong);
  CHECK(m.coverage >= 0);
  CHECK(m.coverage <= 100);
  CHECK(m.efficiency == doctest::Approx(1.0));

  const std::vector<std::string> prefix{"p1", "CQR"};
  CHECK(metrics_header(std::vector<std::string>{"property", "method"}) ==
        "property,method,correct,uncertain,wrong,fp,coverage,efficiency,eqr_width");
  const auto row = metrics_row(m, prefix);
  CHECK(row.starts_with("p1,CQR,"));
  CHECK(std::count(row.begin(), row.end(), ',') == 8);
}
