#include "qpm/stl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "qpm/error.hpp"

namespace qpm {

Trajectory::Trajectory(std::size_t dim, std::vector<double> values, double dt)
    : dim_(dim), values_(std::move(values)), dt_(dt) {
  if (dim_ == 0) throw InvalidArgument("trajectory dimension must be positive");
  if (values_.empty() || values_.size() % dim_ != 0)
    throw InvalidArgument("trajectory needs at least one complete state of dimension " +
                          std::to_string(dim_));
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidArgument("trajectory contains a non-finite entry");
}

}  // namespace qpm

namespace qpm::stl {

void FunctionRegistry::add(std::string name, ScalarFunction fn) {
  NamedFunction entry{name, std::move(fn)};
  functions_.insert_or_assign(std::move(name), std::move(entry));
}

const NamedFunction* FunctionRegistry::find(std::string_view name) const {
  auto it = functions_.find(name);
  return it == functions_.end() ? nullptr : &it->second;
}

Atom::Atom(std::vector<LinearTerm> linear, double constant, std::vector<FunctionTerm> functions)
    : functions_(std::move(functions)), constant_(constant) {
  std::sort(linear.begin(), linear.end(),
            [](const LinearTerm& x, const LinearTerm& y) { return x.index < y.index; });
  for (const auto& term : linear) {
    if (!linear_.empty() && linear_.back().index == term.index)
      linear_.back().coef += term.coef;
    else
      linear_.push_back(term);
  }
  std::erase_if(linear_, [](const LinearTerm& t) { return t.coef == 0.0; });
}

Atom Atom::affine(std::size_t index, double coef, double constant) {
  return Atom({{index, coef}}, constant);
}

double Atom::eval(std::span<const double> state) const {
  double g = 0.0;
  for (const auto& term : linear_) g += term.coef * state[term.index];
  for (const auto& term : functions_) g += term.weight * term.fn->fn(state);
  return g + constant_;
}

std::size_t Atom::max_index() const noexcept {
  return linear_.empty() ? 0 : linear_.back().index;
}

bool operator==(const Atom& x, const Atom& y) {
  if (x.constant_ != y.constant_ || x.linear_ != y.linear_) return false;
  if (x.functions_.size() != y.functions_.size()) return false;
  for (std::size_t i = 0; i < x.functions_.size(); ++i) {
    if (x.functions_[i].fn->name != y.functions_[i].fn->name ||
        x.functions_[i].weight != y.functions_[i].weight)
      return false;
  }
  return true;
}

struct Formula::Node {
  Op op = Op::True;
  Atom atom;
  int a = 0;
  int b = 0;
  std::vector<Formula> operands;
};

namespace {

void check_interval(int a, int b) {
  if (a < 0) throw InvalidArgument("temporal interval lower bound must be nonnegative");
  if (a > b)
    throw InvalidArgument("temporal interval [" + std::to_string(a) + "," + std::to_string(b) +
                          "] has lower bound above upper bound");
}

}  // namespace

Formula Formula::truth() {
  static const Formula t(std::make_shared<const Node>());
  return t;
}

Formula Formula::atom(Atom a) {
  auto n = std::make_shared<Node>();
  n->op = Op::Atom;
  n->atom = std::move(a);
  return Formula(std::move(n));
}

Formula Formula::negation(Formula child) {
  auto n = std::make_shared<Node>();
  n->op = Op::Not;
  n->operands = {std::move(child)};
  return Formula(std::move(n));
}

Formula Formula::conjunction(Formula left, Formula right) {
  auto n = std::make_shared<Node>();
  n->op = Op::And;
  n->operands = {std::move(left), std::move(right)};
  return Formula(std::move(n));
}

Formula Formula::disjunction(Formula left, Formula right) {
  auto n = std::make_shared<Node>();
  n->op = Op::Or;
  n->operands = {std::move(left), std::move(right)};
  return Formula(std::move(n));
}

Formula Formula::until(Formula left, Formula right, int a, int b) {
  check_interval(a, b);
  auto n = std::make_shared<Node>();
  n->op = Op::Until;
  n->a = a;
  n->b = b;
  n->operands = {std::move(left), std::move(right)};
  return Formula(std::move(n));
}

Formula Formula::eventually(Formula child, int a, int b) {
  check_interval(a, b);
  auto n = std::make_shared<Node>();
  n->op = Op::Eventually;
  n->a = a;
  n->b = b;
  n->operands = {std::move(child)};
  return Formula(std::move(n));
}

Formula Formula::globally(Formula child, int a, int b) {
  check_interval(a, b);
  auto n = std::make_shared<Node>();
  n->op = Op::Globally;
  n->a = a;
  n->b = b;
  n->operands = {std::move(child)};
  return Formula(std::move(n));
}

Op Formula::op() const noexcept { return node_->op; }

const Formula& Formula::child() const {
  if (op() != Op::Not && op() != Op::Eventually && op() != Op::Globally)
    throw InvalidArgument("formula has no single operand");
  return node_->operands[0];
}

const Formula& Formula::left() const {
  if (op() != Op::And && op() != Op::Or && op() != Op::Until)
    throw InvalidArgument("formula is not binary");
  return node_->operands[0];
}

const Formula& Formula::right() const {
  if (op() != Op::And && op() != Op::Or && op() != Op::Until)
    throw InvalidArgument("formula is not binary");
  return node_->operands[1];
}

int Formula::lower() const noexcept { return node_->a; }
int Formula::upper() const noexcept { return node_->b; }

const Atom& Formula::predicate() const {
  if (op() != Op::Atom) throw InvalidArgument("formula is not an atom");
  return node_->atom;
}

bool operator==(const Formula& x, const Formula& y) {
  if (x.node_ == y.node_) return true;
  if (x.op() != y.op()) return false;
  switch (x.op()) {
    case Op::True:
      return true;
    case Op::Atom:
      return x.predicate() == y.predicate();
    case Op::Not:
      return x.child() == y.child();
    case Op::And:
    case Op::Or:
      return x.left() == y.left() && x.right() == y.right();
    case Op::Until:
      return x.lower() == y.lower() && x.upper() == y.upper() && x.left() == y.left() &&
             x.right() == y.right();
    case Op::Eventually:
    case Op::Globally:
      return x.lower() == y.lower() && x.upper() == y.upper() && x.child() == y.child();
  }
  return false;
}

int horizon(const Formula& phi) {
  switch (phi.op()) {
    case Op::True:
    case Op::Atom:
      return 0;
    case Op::Not:
      return horizon(phi.child());
    case Op::And:
    case Op::Or:
      return std::max(horizon(phi.left()), horizon(phi.right()));
    case Op::Until:
      return phi.upper() + std::max(horizon(phi.left()), horizon(phi.right()));
    case Op::Eventually:
    case Op::Globally:
      return phi.upper() + horizon(phi.child());
  }
  return 0;
}

namespace {

struct Quantitative {
  using Value = double;
  static Value top() { return std::numeric_limits<double>::max(); }
  static Value atom(const Atom& a, std::span<const double> s) { return a.eval(s); }
  static Value negate(Value v) { return -v; }
  static Value meet(Value x, Value y) { return std::min(x, y); }
  static Value join(Value x, Value y) { return std::max(x, y); }
  static Value bottom() { return std::numeric_limits<double>::lowest(); }
};

struct Boolean {
  using Value = char;
  static Value top() { return 1; }
  static Value atom(const Atom& a, std::span<const double> s) { return a.eval(s) > 0.0; }
  static Value negate(Value v) { return !v; }
  static Value meet(Value x, Value y) { return x && y; }
  static Value join(Value x, Value y) { return x || y; }
  static Value bottom() { return 0; }
};

// Memoized recursion: one table per subformula node, indexed by time.
template <class Sem>
class Evaluator {
public:
  using Value = typename Sem::Value;

  explicit Evaluator(const Trajectory& traj) : traj_(traj) {}

  Value eval(const Formula& phi, std::size_t t) {
    // unordered_map keeps element references stable across insertions
    auto& table = tables_[phi.id()];
    if (table.empty()) table.assign(traj_.length(), Slot{});
    if (!table[t].known) {
      table[t].value = compute(phi, t);
      table[t].known = true;
    }
    return table[t].value;
  }

private:
  struct Slot {
    Value value{};
    bool known = false;
  };

  Value compute(const Formula& phi, std::size_t t) {
    switch (phi.op()) {
      case Op::True:
        return Sem::top();
      case Op::Atom:
        return Sem::atom(phi.predicate(), traj_.state(t));
      case Op::Not:
        return Sem::negate(eval(phi.child(), t));
      case Op::And:
        return Sem::meet(eval(phi.left(), t), eval(phi.right(), t));
      case Op::Or:
        return Sem::join(eval(phi.left(), t), eval(phi.right(), t));
      case Op::Eventually: {
        Value acc = Sem::bottom();
        for (std::size_t u = t + phi.lower(); u <= t + phi.upper(); ++u)
          acc = Sem::join(acc, eval(phi.child(), u));
        return acc;
      }
      case Op::Globally: {
        Value acc = Sem::top();
        for (std::size_t u = t + phi.lower(); u <= t + phi.upper(); ++u)
          acc = Sem::meet(acc, eval(phi.child(), u));
        return acc;
      }
      case Op::Until: {
        // prefix = inf of the left operand over [t, u], extended one index at a time
        Value prefix = Sem::top();
        Value acc = Sem::bottom();
        for (std::size_t u = t; u <= t + phi.upper(); ++u) {
          prefix = Sem::meet(prefix, eval(phi.left(), u));
          if (u >= t + phi.lower()) acc = Sem::join(acc, Sem::meet(eval(phi.right(), u), prefix));
        }
        return acc;
      }
    }
    return Sem::bottom();
  }

  const Trajectory& traj_;
  std::unordered_map<const void*, std::vector<Slot>> tables_;
};

void check_range(const Formula& phi, const Trajectory& traj, std::size_t t) {
  const auto h = static_cast<std::size_t>(horizon(phi));
  if (t + h > traj.length() - 1)
    throw InvalidArgument("formula horizon " + std::to_string(h) + " from t=" + std::to_string(t) +
                          " exceeds trajectory of length " + std::to_string(traj.length()));
}

}  // namespace

double robustness(const Formula& phi, const Trajectory& traj, std::size_t t) {
  check_range(phi, traj, t);
  return Evaluator<Quantitative>(traj).eval(phi, t);
}

bool satisfied(const Formula& phi, const Trajectory& traj, std::size_t t) {
  check_range(phi, traj, t);
  return Evaluator<Boolean>(traj).eval(phi, t) != 0;
}

std::vector<double> robustness_all(std::span<const Formula> phis, const Trajectory& traj) {
  std::vector<double> out;
  out.reserve(phis.size());
  Evaluator<Quantitative> ev(traj);
  for (const auto& phi : phis) {
    check_range(phi, traj, 0);
    out.push_back(ev.eval(phi, 0));
  }
  return out;
}

std::vector<std::string> default_var_names(std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

}  // namespace qpm::stl
