#include <algorithm>
#include <cmath>

#include "param_util.hpp"
#include "qpm/processes.hpp"

namespace qpm {

// Gene i (on = 1) is repressed by protein i-1, cyclically. Protein counts
// follow linear production/degradation; binding (on -> off) fires at rate
// k_bind * v_{i-1}, unbinding (off -> on) at rate k_unbind.
GrnModel::Params GrnModel::defaults(int genes) {
  const auto n = static_cast<std::size_t>(genes);
  return Params{
      .genes = genes,
      .a = std::vector<double>(n, 0.1),
      .b = std::vector<double>(n, 2.0),
      .c = std::vector<double>(n, 5.0),
      .d = std::vector<double>(n, 0.1),
      .k_bind = 0.02,
      .k_unbind = 0.01,
      .v_ub = std::vector<double>(n, 30.0),
      .dt = 1.0,
      .horizon = 40,
      .substeps = 10,
      .init_lo = 0.0,
      .init_hi = 60.0,
      .init_burnin = 40,
  };
}

GrnModel::Params GrnModel::from_file(const KeyValueFile& kv, int genes) {
  if (kv.has("genes") && kv.integer("genes") != genes)
    throw InvalidArgument("grn: parameter file is for " + kv.get("genes") + " genes, model has " +
                          std::to_string(genes));
  Params p = defaults(genes);
  const auto n = static_cast<std::size_t>(genes);
  p.a = detail::vector_param(kv, "a", n, p.a);
  p.b = detail::vector_param(kv, "b", n, p.b);
  p.c = detail::vector_param(kv, "c", n, p.c);
  p.d = detail::vector_param(kv, "d", n, p.d);
  p.v_ub = detail::vector_param(kv, "v_ub", n, p.v_ub);
  detail::scalar_param(kv, "k_bind", p.k_bind);
  detail::scalar_param(kv, "k_unbind", p.k_unbind);
  detail::scalar_param(kv, "dt", p.dt);
  detail::int_param(kv, "horizon", p.horizon);
  detail::int_param(kv, "substeps", p.substeps);
  detail::scalar_param(kv, "init_lo", p.init_lo);
  detail::scalar_param(kv, "init_hi", p.init_hi);
  detail::int_param(kv, "init_burnin", p.init_burnin);
  return p;
}

GrnModel::GrnModel(Params p) : p_(std::move(p)) {
  const auto n = static_cast<std::size_t>(p_.genes);
  if (p_.genes < 1) throw InvalidArgument("grn: need at least one gene");
  if (p_.a.size() != n || p_.b.size() != n || p_.c.size() != n || p_.d.size() != n ||
      p_.v_ub.size() != n)
    throw InvalidArgument("grn: parameter dimensions do not match the gene count");
  if (p_.substeps < 1) throw InvalidArgument("grn: substeps must be positive");
  if (p_.horizon < 2) throw InvalidArgument("grn: horizon must be at least 2");
  if (p_.init_burnin < 0) throw InvalidArgument("grn: init_burnin must be nonnegative");
  if (p_.k_bind < 0 || p_.k_unbind < 0) throw InvalidArgument("grn: rates must be nonnegative");
}

KeyValueFile GrnModel::parameters() const {
  KeyValueFile kv;
  kv.set("genes", std::to_string(p_.genes));
  kv.set("a", detail::fmt_row(p_.a));
  kv.set("b", detail::fmt_row(p_.b));
  kv.set("c", detail::fmt_row(p_.c));
  kv.set("d", detail::fmt_row(p_.d));
  kv.set("k_bind", format_double(p_.k_bind));
  kv.set("k_unbind", format_double(p_.k_unbind));
  kv.set("v_ub", detail::fmt_row(p_.v_ub));
  kv.set("dt", format_double(p_.dt));
  kv.set("horizon", std::to_string(p_.horizon));
  kv.set("substeps", std::to_string(p_.substeps));
  kv.set("init_lo", format_double(p_.init_lo));
  kv.set("init_hi", format_double(p_.init_hi));
  kv.set("init_burnin", std::to_string(p_.init_burnin));
  return kv;
}

HybridState GrnModel::sample_initial(Rng& rng) const {
  HybridState s;
  for (int i = 0; i < p_.genes; ++i) s.continuous.push_back(rng.uniform(p_.init_lo, p_.init_hi));
  for (int i = 0; i < p_.genes; ++i) s.modes.push_back(static_cast<int>(rng.below(2)));
  const auto burnin = rng.below(static_cast<std::uint64_t>(p_.init_burnin) + 1);
  for (std::uint64_t k = 0; k < burnin; ++k) s = step(s, rng);
  return s;
}

HybridState GrnModel::step(const HybridState& s, Rng& rng) const {
  const auto n = static_cast<std::size_t>(p_.genes);
  const double h = p_.dt / p_.substeps;
  HybridState cur = s;
  std::vector<double> rate(n);
  for (int k = 0; k < p_.substeps; ++k) {
    // event rates from the state at the start of the substep
    for (std::size_t i = 0; i < n; ++i) {
      const double repressor = cur.continuous[(i + n - 1) % n];
      rate[i] = cur.modes[i] == 1 ? p_.k_bind * repressor : p_.k_unbind;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double& v = cur.continuous[i];
      const double dv = cur.modes[i] == 1 ? p_.c[i] - p_.d[i] * v : p_.a[i] - p_.b[i] * v;
      v = std::max(0.0, v + h * dv);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (rate[i] > 0 && rng.exponential(rate[i]) < h) cur.modes[i] = 1 - cur.modes[i];
    }
  }
  return cur;
}

std::vector<std::string> GrnModel::var_names() const {
  std::vector<std::string> names;
  for (int i = 1; i <= p_.genes; ++i) names.push_back("v" + std::to_string(i));
  for (int i = 1; i <= p_.genes; ++i) names.push_back("q" + std::to_string(i));
  return names;
}

std::vector<std::string> GrnModel::default_properties() const {
  std::vector<std::string> out;
  const std::string h = std::to_string(p_.horizon);
  const std::string half = std::to_string(p_.horizon / 2);
  for (int i = 0; i < p_.genes; ++i)
    out.push_back("G[" + half + "," + h + "](v" + std::to_string(i + 1) + " <= " +
                  format_double(p_.v_ub[i]) + ")");
  return out;
}

}  // namespace qpm
