#include "qpm/processes.hpp"

#include <charconv>
#include <cmath>

#include "qpm/error.hpp"

namespace qpm {

bool ProcessModel::valid(const HybridState& s) const {
  if (s.continuous.size() != n_continuous() || s.modes.size() != n_discrete()) return false;
  const auto domains = mode_domains();
  for (std::size_t i = 0; i < s.modes.size(); ++i)
    if (s.modes[i] < 0 || s.modes[i] >= domains[i]) return false;
  for (double v : s.continuous)
    if (!std::isfinite(v)) return false;
  return true;
}

void ProcessModel::check_valid(const HybridState& s) const {
  if (s.continuous.size() != n_continuous() || s.modes.size() != n_discrete())
    throw InvalidArgument(name() + ": state has " + std::to_string(s.continuous.size()) +
                          " continuous and " + std::to_string(s.modes.size()) +
                          " discrete components, expected " + std::to_string(n_continuous()) +
                          " and " + std::to_string(n_discrete()));
  if (!valid(s)) throw InvalidArgument(name() + ": state has an out-of-domain mode or non-finite value");
}

std::vector<double> ProcessModel::flatten(const HybridState& s) const {
  std::vector<double> out(s.continuous);
  for (int m : s.modes) out.push_back(static_cast<double>(m));
  return out;
}

HybridState ProcessModel::unflatten(std::span<const double> flat) const {
  if (flat.size() != state_dim())
    throw InvalidArgument(name() + ": flat state has dimension " + std::to_string(flat.size()) +
                          ", expected " + std::to_string(state_dim()));
  HybridState s;
  s.continuous.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(n_continuous()));
  for (std::size_t i = n_continuous(); i < flat.size(); ++i)
    s.modes.push_back(static_cast<int>(std::lround(flat[i])));
  check_valid(s);
  return s;
}

Trajectory simulate_one(const ProcessModel& model, const HybridState& s0, int horizon, Rng& rng) {
  if (horizon < 0) throw InvalidArgument("simulation horizon must be nonnegative");
  model.check_valid(s0);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(horizon + 1) * model.state_dim());
  HybridState s = s0;
  auto push = [&](const HybridState& x) {
    values.insert(values.end(), x.continuous.begin(), x.continuous.end());
    for (int m : x.modes) values.push_back(static_cast<double>(m));
  };
  push(s);
  for (int k = 0; k < horizon; ++k) {
    s = model.step(s, rng);
    push(s);
  }
  return Trajectory(model.state_dim(), std::move(values), model.dt());
}

std::vector<Trajectory> simulate(const ProcessModel& model, const HybridState& s0,
                                 const SimConfig& cfg) {
  if (cfg.horizon < 1) throw InvalidArgument("simulation horizon must be at least 1");
  if (cfg.count < 1) throw InvalidArgument("trajectory count must be at least 1");
  model.check_valid(s0);
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(cfg.count));
  for (int j = 0; j < cfg.count; ++j) {
    Rng rng = Rng::stream(cfg.seed, {static_cast<std::uint64_t>(j)});
    out.push_back(simulate_one(model, s0, cfg.horizon, rng));
  }
  return out;
}

std::vector<HybridState> sample_states(const ProcessModel& model, std::size_t count,
                                       std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("sample_states needs count >= 1");
  std::vector<HybridState> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, {0x53544154ULL /* "STAT" */, i});
    out.push_back(model.sample_initial(rng));
  }
  return out;
}

std::unique_ptr<ProcessModel> make_model(std::string_view spec, const KeyValueFile* params) {
  const KeyValueFile empty;
  const KeyValueFile& kv = params ? *params : empty;
  auto count_suffix = [&](std::string_view prefix) {
    int h = 0;
    const auto rest = spec.substr(prefix.size());
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), h);
    if (ec != std::errc() || ptr != rest.data() + rest.size() || h < 1 || h > 64)
      throw InvalidArgument("model '" + std::string(spec) + "' needs a component count, e.g. " +
                            std::string(prefix) + "2");
    return h;
  };
  if (spec == "aad") return std::make_unique<AadModel>(AadModel::from_file(kv));
  if (spec == "ht") return std::make_unique<HtModel>(HtModel::from_file(kv));
  if (spec.starts_with("mrh")) return std::make_unique<MrhModel>(MrhModel::from_file(kv, count_suffix("mrh")));
  if (spec.starts_with("grn")) return std::make_unique<GrnModel>(GrnModel::from_file(kv, count_suffix("grn")));
  throw InvalidArgument("unknown model '" + std::string(spec) + "' (expected aad, ht, mrh<h> or grn<h>)");
}

}  // namespace qpm
