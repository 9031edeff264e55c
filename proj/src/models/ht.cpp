#include <algorithm>
#include <cmath>

#include "param_util.hpp"
#include "qpm/processes.hpp"

namespace qpm {

namespace {

// Temperature dynamics divide by the liquid height; below this the tank is
// treated as holding this much liquid.
constexpr double kMinHeight = 1.0;

bool flowing(int unit) { return unit == HtModel::On || unit == HtModel::StuckOn; }

void command(int& unit, bool on) {
  if (unit == HtModel::On || unit == HtModel::Off) unit = on ? HtModel::On : HtModel::Off;
}

}  // namespace

// Time unit is hours. Failure rates and controller thresholds are the published
// ones; g, the safety limits and the initial distribution are repo choices.
HtModel::Params HtModel::defaults() {
  return Params{
      .g = 0.6,
      .t_in = 15.0,
      .e_in = 1.0,
      .rate_p1 = 1.0 / 219.0,
      .rate_p2 = 1.0 / 175.0,
      .rate_w = 1.0 / 320.0,
      .h_low = 6.0,
      .h_high = 8.0,
      .h_dryout = 4.0,
      .h_overflow = 10.0,
      .t_overheat = 25.0,
      .dt = 1.0,
      .horizon = 100,
      .substeps = 10,
      .init_height = {4.5, 9.5},
      .init_temp = {15.0, 28.0},
      .init_stuck_prob = 0.1,
  };
}

HtModel::Params HtModel::from_file(const KeyValueFile& kv) {
  Params p = defaults();
  detail::scalar_param(kv, "g", p.g);
  detail::scalar_param(kv, "t_in", p.t_in);
  detail::scalar_param(kv, "e_in", p.e_in);
  detail::scalar_param(kv, "rate_p1", p.rate_p1);
  detail::scalar_param(kv, "rate_p2", p.rate_p2);
  detail::scalar_param(kv, "rate_w", p.rate_w);
  detail::scalar_param(kv, "h_low", p.h_low);
  detail::scalar_param(kv, "h_high", p.h_high);
  detail::scalar_param(kv, "h_dryout", p.h_dryout);
  detail::scalar_param(kv, "h_overflow", p.h_overflow);
  detail::scalar_param(kv, "t_overheat", p.t_overheat);
  detail::scalar_param(kv, "dt", p.dt);
  detail::int_param(kv, "horizon", p.horizon);
  detail::int_param(kv, "substeps", p.substeps);
  detail::fixed_param(kv, "init_height", p.init_height);
  detail::fixed_param(kv, "init_temp", p.init_temp);
  detail::scalar_param(kv, "init_stuck_prob", p.init_stuck_prob);
  if (p.substeps < 1) throw InvalidArgument("ht: substeps must be positive");
  if (p.horizon < 1) throw InvalidArgument("ht: horizon must be positive");
  if (p.rate_p1 < 0 || p.rate_p2 < 0 || p.rate_w < 0) throw InvalidArgument("ht: failure rates must be nonnegative");
  return p;
}

KeyValueFile HtModel::parameters() const {
  KeyValueFile kv;
  kv.set("g", format_double(p_.g));
  kv.set("t_in", format_double(p_.t_in));
  kv.set("e_in", format_double(p_.e_in));
  kv.set("rate_p1", format_double(p_.rate_p1));
  kv.set("rate_p2", format_double(p_.rate_p2));
  kv.set("rate_w", format_double(p_.rate_w));
  kv.set("h_low", format_double(p_.h_low));
  kv.set("h_high", format_double(p_.h_high));
  kv.set("h_dryout", format_double(p_.h_dryout));
  kv.set("h_overflow", format_double(p_.h_overflow));
  kv.set("t_overheat", format_double(p_.t_overheat));
  kv.set("dt", format_double(p_.dt));
  kv.set("horizon", std::to_string(p_.horizon));
  kv.set("substeps", std::to_string(p_.substeps));
  kv.set("init_height", detail::fmt_row(p_.init_height));
  kv.set("init_temp", detail::fmt_row(p_.init_temp));
  kv.set("init_stuck_prob", format_double(p_.init_stuck_prob));
  return kv;
}

HybridState HtModel::sample_initial(Rng& rng) const {
  HybridState s;
  s.continuous = {rng.uniform(p_.init_height[0], p_.init_height[1]),
                  rng.uniform(p_.init_temp[0], p_.init_temp[1])};
  const int ctl = static_cast<int>(rng.below(3));
  int p1 = On, p2 = Off, w = On;
  if (ctl == Increase) p1 = p2 = On, w = Off;
  if (ctl == Decrease) p1 = p2 = Off, w = On;
  for (int* unit : {&p1, &p2, &w}) {
    if (rng.bernoulli(p_.init_stuck_prob)) *unit = (*unit == On) ? StuckOn : StuckOff;
  }
  s.modes = {p1, p2, w, ctl, 0};
  return s;
}

HybridState HtModel::step(const HybridState& s, Rng& rng) const {
  HybridState n = s;
  double& height = n.continuous[0];
  double& temp = n.continuous[1];
  auto& m = n.modes;
  const double h = p_.dt / p_.substeps;
  const double rates[3] = {p_.rate_p1, p_.rate_p2, p_.rate_w};

  for (int k = 0; k < p_.substeps; ++k) {
    if (height <= p_.h_low && m[kController] != Increase) {
      m[kController] = Increase;
      command(m[kPump1], true);
      command(m[kPump2], true);
      command(m[kValve], false);
    } else if (height >= p_.h_high && m[kController] != Decrease) {
      m[kController] = Decrease;
      command(m[kPump1], false);
      command(m[kPump2], false);
      command(m[kValve], true);
    }

    const double in = static_cast<double>(flowing(m[kPump1])) + static_cast<double>(flowing(m[kPump2]));
    const double out = static_cast<double>(flowing(m[kValve]));
    const double d_height = (in - out) * p_.g;
    const double d_temp = (in * (p_.t_in - temp) * p_.g + p_.e_in) / std::max(height, kMinHeight);
    height = std::max(0.0, height + h * d_height);
    temp += h * d_temp;

    for (std::size_t u = 0; u < 3; ++u) {
      if (m[u] != On && m[u] != Off) continue;
      if (rates[u] > 0 && rng.exponential(rates[u]) < h) m[u] = (m[u] == On) ? StuckOn : StuckOff;
    }
  }
  if (height < p_.h_dryout || height > p_.h_overflow || temp > p_.t_overheat) m[kTank] = 1;
  return n;
}

std::vector<std::string> HtModel::var_names() const {
  return {"height", "temp", "p1", "p2", "valve", "ctl", "tank"};
}

std::vector<std::string> HtModel::default_properties() const {
  return {"G[0," + std::to_string(p_.horizon) + "](height >= " + format_double(p_.h_dryout) +
          " and height <= " + format_double(p_.h_overflow) + " and temp <= " +
          format_double(p_.t_overheat) + ")"};
}

}  // namespace qpm
