#pragma once

// Independent reference implementations used by the tests. Nothing here calls
// the evaluator under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "qpm/rng.hpp"
#include "qpm/stl.hpp"
#include "qpm/trajectory.hpp"

namespace oracle {

using qpm::stl::Formula;
using qpm::stl::Op;

// g(s) = sum of linear terms, then weighted functions, then the constant, in
// that order so results compare bit for bit.
inline double atom_value(const qpm::stl::Atom& a, const qpm::Trajectory& tr, std::size_t t) {
  double g = 0.0;
  for (const auto& term : a.linear()) g += term.coef * tr.at(t, term.index);
  for (const auto& f : a.functions()) g += f.weight * f.fn->fn(tr.state(t));
  return g + a.constant();
}

// Robustness by literal enumeration of every t' and t'', no caching.
inline double robustness(const Formula& phi, const qpm::Trajectory& tr, std::size_t t) {
  switch (phi.op()) {
    case Op::True: return std::numeric_limits<double>::max();
    case Op::Atom: return atom_value(phi.predicate(), tr, t);
    case Op::Not: return -oracle::robustness(phi.child(), tr, t);
    case Op::And: return std::min(oracle::robustness(phi.left(), tr, t), oracle::robustness(phi.right(), tr, t));
    case Op::Or: return std::max(oracle::robustness(phi.left(), tr, t), oracle::robustness(phi.right(), tr, t));
    case Op::Eventually: {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t u = t + phi.lower(); u <= t + phi.upper(); ++u)
        best = std::max(best, oracle::robustness(phi.child(), tr, u));
      return best;
    }
    case Op::Globally: {
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t u = t + phi.lower(); u <= t + phi.upper(); ++u)
        worst = std::min(worst, oracle::robustness(phi.child(), tr, u));
      return worst;
    }
    case Op::Until: {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t u = t + phi.lower(); u <= t + phi.upper(); ++u) {
        double inf_left = std::numeric_limits<double>::infinity();
        for (std::size_t v = t; v <= u; ++v) inf_left = std::min(inf_left, oracle::robustness(phi.left(), tr, v));
        best = std::max(best, std::min(oracle::robustness(phi.right(), tr, u), inf_left));
      }
      return best;
    }
  }
  return 0.0;
}

inline bool satisfied(const Formula& phi, const qpm::Trajectory& tr, std::size_t t) {
  switch (phi.op()) {
    case Op::True: return true;
    case Op::Atom: return atom_value(phi.predicate(), tr, t) > 0;
    case Op::Not: return !oracle::satisfied(phi.child(), tr, t);
    case Op::And: return oracle::satisfied(phi.left(), tr, t) && oracle::satisfied(phi.right(), tr, t);
    case Op::Or: return oracle::satisfied(phi.left(), tr, t) || oracle::satisfied(phi.right(), tr, t);
    case Op::Eventually:
      for (std::size_t u = t + phi.lower(); u <= t + phi.upper(); ++u)
        if (oracle::satisfied(phi.child(), tr, u)) return true;
      return false;
    case Op::Globally:
      for (std::size_t u = t + phi.lower(); u <= t + phi.upper(); ++u)
        if (!oracle::satisfied(phi.child(), tr, u)) return false;
      return true;
    case Op::Until:
      for (std::size_t u = t + phi.lower(); u <= t + phi.upper(); ++u) {
        bool left_ok = true;
        for (std::size_t v = t; v <= u && left_ok; ++v) left_ok = oracle::satisfied(phi.left(), tr, v);
        if (left_ok && oracle::satisfied(phi.right(), tr, u)) return true;
      }
      return false;
  }
  return false;
}

inline qpm::stl::Atom random_atom(qpm::Rng& rng, std::size_t dim, bool single_var = false) {
  std::vector<qpm::stl::Atom::LinearTerm> terms;
  const std::size_t n = single_var ? 1 : 1 + rng.below(std::min<std::size_t>(dim, 2));
  for (std::size_t k = 0; k < n; ++k)
    terms.push_back({static_cast<std::size_t>(rng.below(dim)), rng.uniform(-2.0, 2.0)});
  return qpm::stl::Atom(std::move(terms), rng.uniform(-1.0, 1.0));
}

// Random formula of depth <= depth whose horizon stays within budget.
inline Formula random_formula(qpm::Rng& rng, std::size_t dim, int depth, int budget) {
  if (depth <= 0) return Formula::atom(random_atom(rng, dim));
  const auto pick = rng.below(depth > 1 ? 8 : 7);
  auto interval = [&](int& a, int& b) {
    b = static_cast<int>(rng.below(static_cast<std::uint64_t>(budget) + 1));
    a = static_cast<int>(rng.below(static_cast<std::uint64_t>(b) + 1));
  };
  int a = 0, b = 0;
  switch (pick) {
    case 0: return Formula::atom(random_atom(rng, dim));
    case 1: return Formula::negation(random_formula(rng, dim, depth - 1, budget));
    case 2:
      return Formula::conjunction(random_formula(rng, dim, depth - 1, budget),
                                  random_formula(rng, dim, depth - 1, budget));
    case 3:
      return Formula::disjunction(random_formula(rng, dim, depth - 1, budget),
                                  random_formula(rng, dim, depth - 1, budget));
    case 4:
      interval(a, b);
      return Formula::eventually(random_formula(rng, dim, depth - 1, budget - b), a, b);
    case 5:
      interval(a, b);
      return Formula::globally(random_formula(rng, dim, depth - 1, budget - b), a, b);
    case 6:
      interval(a, b);
      return Formula::until(random_formula(rng, dim, depth - 1, budget - b),
                            random_formula(rng, dim, depth - 1, budget - b), a, b);
    default: return Formula::truth();
  }
}

inline qpm::Trajectory random_trajectory(qpm::Rng& rng, std::size_t dim, std::size_t length) {
  std::vector<double> v(dim * length);
  for (double& x : v) x = rng.uniform(-3.0, 3.0);
  return qpm::Trajectory(dim, std::move(v));
}

// Two-sample Kolmogorov-Smirnov test; returns the asymptotic p-value.
inline double ks_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

// Spearman rank correlation (no tie correction; inputs are continuous).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t p, std::size_t q) { return v[p] < v[q]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * sum / (n * (n * n - 1.0));
}

}  // namespace oracle
