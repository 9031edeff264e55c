#include <cmath>

#include "param_util.hpp"
#include "qpm/processes.hpp"

namespace qpm {

// Three-compartment pharmacokinetic chain sampled every 20 s. The paper leaves
// A and b patient specific; these values put the closed-loop set point of v1
// near the controller threshold so both properties have mixed outcomes.
AadModel::Params AadModel::defaults() {
  return Params{
      .a = {{0.8192, 0.0341, 0.0126}, {0.0165, 0.9822, 0.0001}, {0.0009, 0.0001, 0.9989}},
      .b = {0.0940, 0.0010, 0.0001},
      .noise_var = 1e-3,
      .q_high = 7.0,
      .q_low = 3.5,
      .threshold = 3.5,
      .dt = 20.0,
      .horizon = 180,
      .init_lo = {0.5, 0.0, 0.0},
      .init_hi = {6.5, 8.0, 8.0},
  };
}

AadModel::Params AadModel::from_file(const KeyValueFile& kv) {
  Params p = defaults();
  if (kv.has("A")) {
    const Matrix m = kv.matrix("A");
    if (m.rows != 3 || m.cols != 3) throw FormatError(kv.source() + ": key 'A' must be 3x3");
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) p.a[r][c] = m(r, c);
  }
  detail::fixed_param(kv, "b", p.b);
  detail::scalar_param(kv, "noise_var", p.noise_var);
  detail::scalar_param(kv, "q_high", p.q_high);
  detail::scalar_param(kv, "q_low", p.q_low);
  detail::scalar_param(kv, "threshold", p.threshold);
  detail::scalar_param(kv, "dt", p.dt);
  detail::int_param(kv, "horizon", p.horizon);
  detail::fixed_param(kv, "init_lo", p.init_lo);
  detail::fixed_param(kv, "init_hi", p.init_hi);
  if (p.noise_var < 0) throw InvalidArgument("aad: noise_var must be nonnegative");
  if (p.horizon < 1) throw InvalidArgument("aad: horizon must be positive");
  return p;
}

KeyValueFile AadModel::parameters() const {
  KeyValueFile kv;
  Matrix a{3, 3, {}};
  for (auto& r : p_.a)
    for (double v : r) a.values.push_back(v);
  kv.set("A", format_matrix(a));
  kv.set("b", detail::fmt_row(p_.b));
  kv.set("noise_var", format_double(p_.noise_var));
  kv.set("q_high", format_double(p_.q_high));
  kv.set("q_low", format_double(p_.q_low));
  kv.set("threshold", format_double(p_.threshold));
  kv.set("dt", format_double(p_.dt));
  kv.set("horizon", std::to_string(p_.horizon));
  kv.set("init_lo", detail::fmt_row(p_.init_lo));
  kv.set("init_hi", detail::fmt_row(p_.init_hi));
  return kv;
}

HybridState AadModel::sample_initial(Rng& rng) const {
  HybridState s;
  for (int i = 0; i < 3; ++i) s.continuous.push_back(rng.uniform(p_.init_lo[i], p_.init_hi[i]));
  s.modes = {controller(s.continuous[0])};
  return s;
}

HybridState AadModel::step(const HybridState& s, Rng& rng) const {
  const double q = infusion(s.modes[0]);
  const double sd = std::sqrt(p_.noise_var);
  HybridState next;
  next.continuous.resize(3);
  for (int i = 0; i < 3; ++i) {
    double v = p_.b[i] * q;
    for (int j = 0; j < 3; ++j) v += p_.a[i][j] * s.continuous[j];
    next.continuous[i] = v;
  }
  // noise drawn after the deterministic part so a zero variance leaves it untouched
  if (sd > 0)
    for (int i = 0; i < 3; ++i) next.continuous[i] += sd * rng.normal();
  next.modes = {controller(next.continuous[0])};
  return next;
}

std::vector<std::string> AadModel::var_names() const { return {"v1", "v2", "v3", "q"}; }

std::vector<std::string> AadModel::default_properties() const {
  const std::string h = std::to_string(p_.horizon);
  return {
      "G[0," + h + "](v1 >= 1 and v1 <= 6 and v2 >= 0 and v2 <= 10 and v3 >= 0 and v3 <= 10)",
      "F[0," + h + "](v1 < v2)",
  };
}

}  // namespace qpm
