#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qpm/trajectory.hpp"

namespace qpm::stl {

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Named nonlinear state function usable inside atoms.
struct NamedFunction {
  std::string name;
  ScalarFunction fn;
};

/// Registry of named functions the parser may reference by identifier.
class FunctionRegistry {
public:
  void add(std::string name, ScalarFunction fn);
  const NamedFunction* find(std::string_view name) const;

private:
  std::map<std::string, NamedFunction, std::less<>> functions_;
};

/// Atomic predicate g(s) > 0, where
///   g(s) = sum_i coef_i * s[index_i] + sum_j weight_j * f_j(s) + constant.
/// Every surface comparison is normalized to this form; the atom's robustness is g(s).
class Atom {
public:
  struct LinearTerm {
    std::size_t index;
    double coef;
    friend bool operator==(const LinearTerm&, const LinearTerm&) = default;
  };
  struct FunctionTerm {
    std::shared_ptr<const NamedFunction> fn;
    double weight;
  };

  Atom() = default;
  Atom(std::vector<LinearTerm> linear, double constant, std::vector<FunctionTerm> functions = {});

  /// g(s) = coef * s[index] + constant.
  static Atom affine(std::size_t index, double coef, double constant);

  double eval(std::span<const double> state) const;

  const std::vector<LinearTerm>& linear() const noexcept { return linear_; }
  const std::vector<FunctionTerm>& functions() const noexcept { return functions_; }
  double constant() const noexcept { return constant_; }
  std::size_t max_index() const noexcept;

  friend bool operator==(const Atom& x, const Atom& y);

private:
  std::vector<LinearTerm> linear_;  // sorted by index, merged, no zero coefficients
  std::vector<FunctionTerm> functions_;
  double constant_ = 0.0;
};

enum class Op { True, Atom, Not, And, Or, Until, Eventually, Globally };

/// Immutable STL formula. Copies share structure.
class Formula {
public:
  static Formula truth();
  static Formula atom(Atom a);
  static Formula negation(Formula child);
  static Formula conjunction(Formula left, Formula right);
  static Formula disjunction(Formula left, Formula right);
  static Formula until(Formula left, Formula right, int a, int b);
  static Formula eventually(Formula child, int a, int b);
  static Formula globally(Formula child, int a, int b);

  Op op() const noexcept;
  /// Operand of Not / Eventually / Globally.
  const Formula& child() const;
  const Formula& left() const;
  const Formula& right() const;
  int lower() const noexcept;
  int upper() const noexcept;
  const Atom& predicate() const;

  /// Identity of the underlying node; used as a memo key.
  const void* id() const noexcept { return node_.get(); }

  friend bool operator==(const Formula& x, const Formula& y);

private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Largest time offset read when evaluating at t = 0.
int horizon(const Formula& phi);

/// Quantitative semantics with sup/inf over integer indices.
/// Throws InvalidArgument when t + horizon(phi) > traj.length() - 1.
/// `true` has robustness numeric_limits<double>::max().
double robustness(const Formula& phi, const Trajectory& traj, std::size_t t = 0);

/// Boolean semantics, evaluated by its own recursion.
bool satisfied(const Formula& phi, const Trajectory& traj, std::size_t t = 0);

/// Robustness of several formulas over one trajectory, t = 0, sharing nothing but the trajectory.
std::vector<double> robustness_all(std::span<const Formula> phis, const Trajectory& traj);

Formula parse_formula(std::string_view text, std::span<const std::string> var_names,
                      const FunctionRegistry* functions = nullptr);

/// Fully parenthesized text that parses back to an equal formula.
std::string to_string(const Formula& phi, std::span<const std::string> var_names);

/// Default variable names x0..x{n-1}.
std::vector<std::string> default_var_names(std::size_t n);

}  // namespace qpm::stl
