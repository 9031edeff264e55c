#include <cmath>

#include "param_util.hpp"
#include "qpm/processes.hpp"

namespace qpm {

// Rooms sit on a ring (a line for two rooms); each room exchanges heat with
// its neighbours. Later rooms lose heat slightly faster so the per-room
// properties differ.
MrhModel::Params MrhModel::defaults(int rooms) {
  const auto n = static_cast<std::size_t>(rooms);
  Params p{
      .rooms = rooms,
      .ambient = 6.0,
      .b = {},
      .a = std::vector<double>(n * n, 0.0),
      .c = std::vector<double>(n, 1.2),
      .noise_var = 0.09,
      .switch_on = 18.0,
      .switch_off = 22.0,
      .v_lb = std::vector<double>(n, 17.0),
      .v_ub = std::vector<double>(n, 23.0),
      .dt = 1.0,
      .horizon = 20,
      .init_lo = 15.0,
      .init_hi = 25.0,
  };
  constexpr double kLoss[3] = {0.0625, 0.071875, 0.08125};
  for (std::size_t i = 0; i < n; ++i) {
    p.b.push_back(kLoss[i % 3]);
    if (n > 1) {
      const std::size_t next = (i + 1) % n;
      if (next != i) p.a[i * n + next] = p.a[next * n + i] = 0.05;
    }
  }
  return p;
}

MrhModel::Params MrhModel::from_file(const KeyValueFile& kv, int rooms) {
  if (kv.has("rooms") && kv.integer("rooms") != rooms)
    throw InvalidArgument("mrh: parameter file is for " + kv.get("rooms") + " rooms, model has " +
                          std::to_string(rooms));
  Params p = defaults(rooms);
  const auto n = static_cast<std::size_t>(rooms);
  detail::scalar_param(kv, "ambient", p.ambient);
  p.b = detail::vector_param(kv, "b", n, p.b);
  p.c = detail::vector_param(kv, "c", n, p.c);
  p.v_lb = detail::vector_param(kv, "v_lb", n, p.v_lb);
  p.v_ub = detail::vector_param(kv, "v_ub", n, p.v_ub);
  if (kv.has("a")) {
    const Matrix m = kv.matrix("a");
    if (m.size() == 1) {
      // scalar: same coupling between ring neighbours
      p.a = defaults(rooms).a;
      for (double& v : p.a)
        if (v != 0.0) v = m.values[0];
    } else if (m.rows == n && m.cols == n) {
      p.a = m.values;
    } else {
      throw FormatError(kv.source() + ": key 'a' must be a scalar or a " + std::to_string(n) + "x" +
                        std::to_string(n) + " matrix");
    }
  }
  detail::scalar_param(kv, "noise_var", p.noise_var);
  detail::scalar_param(kv, "switch_on", p.switch_on);
  detail::scalar_param(kv, "switch_off", p.switch_off);
  detail::scalar_param(kv, "dt", p.dt);
  detail::int_param(kv, "horizon", p.horizon);
  detail::scalar_param(kv, "init_lo", p.init_lo);
  detail::scalar_param(kv, "init_hi", p.init_hi);
  return p;
}

MrhModel::MrhModel(Params p) : p_(std::move(p)) {
  const auto n = static_cast<std::size_t>(p_.rooms);
  if (p_.rooms < 1) throw InvalidArgument("mrh: need at least one room");
  if (p_.b.size() != n || p_.c.size() != n || p_.a.size() != n * n || p_.v_lb.size() != n ||
      p_.v_ub.size() != n)
    throw InvalidArgument("mrh: parameter dimensions do not match the room count");
  if (p_.noise_var < 0) throw InvalidArgument("mrh: noise_var must be nonnegative");
  if (p_.horizon < 1) throw InvalidArgument("mrh: horizon must be positive");
  if (p_.init_lo > p_.init_hi) throw InvalidArgument("mrh: init_lo above init_hi");
}

KeyValueFile MrhModel::parameters() const {
  const auto n = static_cast<std::size_t>(p_.rooms);
  KeyValueFile kv;
  kv.set("rooms", std::to_string(p_.rooms));
  kv.set("ambient", format_double(p_.ambient));
  kv.set("b", detail::fmt_row(p_.b));
  kv.set("a", format_matrix(Matrix{n, n, p_.a}));
  kv.set("c", detail::fmt_row(p_.c));
  kv.set("noise_var", format_double(p_.noise_var));
  kv.set("switch_on", format_double(p_.switch_on));
  kv.set("switch_off", format_double(p_.switch_off));
  kv.set("v_lb", detail::fmt_row(p_.v_lb));
  kv.set("v_ub", detail::fmt_row(p_.v_ub));
  kv.set("dt", format_double(p_.dt));
  kv.set("horizon", std::to_string(p_.horizon));
  kv.set("init_lo", format_double(p_.init_lo));
  kv.set("init_hi", format_double(p_.init_hi));
  return kv;
}

HybridState MrhModel::sample_initial(Rng& rng) const {
  HybridState s;
  for (int i = 0; i < p_.rooms; ++i) s.continuous.push_back(rng.uniform(p_.init_lo, p_.init_hi));
  for (int i = 0; i < p_.rooms; ++i) s.modes.push_back(static_cast<int>(rng.below(2)));
  return s;
}

HybridState MrhModel::step(const HybridState& s, Rng& rng) const {
  const auto n = static_cast<std::size_t>(p_.rooms);
  const double sd = std::sqrt(p_.noise_var);
  HybridState next;
  next.continuous.resize(n);
  next.modes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = s.continuous[i];
    double v = vi + p_.b[i] * (p_.ambient - vi);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) v += p_.a[i * n + j] * (s.continuous[j] - vi);
    if (s.modes[i] == 1) v += p_.c[i];
    next.continuous[i] = v;
  }
  if (sd > 0)
    for (std::size_t i = 0; i < n; ++i) next.continuous[i] += sd * rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = next.continuous[i];
    next.modes[i] = v <= p_.switch_on ? 1 : v >= p_.switch_off ? 0 : s.modes[i];
  }
  return next;
}

std::vector<std::string> MrhModel::var_names() const {
  std::vector<std::string> names;
  for (int i = 1; i <= p_.rooms; ++i) names.push_back("v" + std::to_string(i));
  for (int i = 1; i <= p_.rooms; ++i) names.push_back("q" + std::to_string(i));
  return names;
}

std::vector<std::string> MrhModel::default_properties() const {
  std::vector<std::string> out;
  const std::string h = std::to_string(p_.horizon);
  for (int i = 0; i < p_.rooms; ++i) {
    const std::string v = "v" + std::to_string(i + 1);
    out.push_back("G[0," + h + "](" + v + " >= " + format_double(p_.v_lb[i]) + " and " + v +
                  " <= " + format_double(p_.v_ub[i]) + ")");
  }
  return out;
}

}  // namespace qpm
