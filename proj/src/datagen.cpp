#include "qpm/datagen.hpp"

#include <algorithm>
#include <sstream>

#include "parallel.hpp"
#include "qpm/error.hpp"
#include "qpm/quantile.hpp"

namespace qpm {

namespace {

constexpr std::string_view kMagic = "# qpm-dataset v1";
constexpr std::uint64_t kSplitTag = 0x53504C4954ULL;

std::uint64_t split_id(Split s) { return static_cast<std::uint64_t>(s) + 1; }

std::string join(std::span<const std::string> parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_row(std::span<const double> v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out + "]";
}

std::string format_records(const std::vector<LabeledRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    for (double x : r.state) out += format_double(x) + ",";
    for (double x : r.robustness) out += format_double(x) + ",";
    out += std::to_string(r.label);
    out += '\n';
  }
  return out;
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Calibration: return "calibration";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "calibration") return Split::Calibration;
  if (name == "test") return Split::Test;
  throw FormatError("unknown split '" + std::string(name) + "'");
}

int label_state(std::span<const double> robustness, double alpha) {
  if (robustness.empty()) throw InvalidArgument("label_state: no robustness samples");
  if (empirical_quantile(robustness, alpha / 2) > 0) return 1;
  if (empirical_quantile(robustness, 1 - alpha / 2) < 0) return -1;
  return 0;
}

// --- Scaler ---------------------------------------------------------------------

Scaler::Scaler(std::vector<double> lo, std::vector<double> hi, double target_lo, double target_hi,
               std::string source_hash)
    : lo_(std::move(lo)), hi_(std::move(hi)), target_lo_(target_lo), target_hi_(target_hi),
      source_hash_(std::move(source_hash)) {
  if (lo_.size() != hi_.size()) throw InvalidArgument("scaler: lo/hi size mismatch");
}

double Scaler::apply(std::size_t i, double x) const {
  if (degenerate(i)) return 0.0;
  return 2.0 * (x - lo_[i]) / (hi_[i] - lo_[i]) - 1.0;
}

double Scaler::invert(std::size_t i, double z) const {
  if (degenerate(i)) return lo_[i];
  return lo_[i] + (z + 1.0) * 0.5 * (hi_[i] - lo_[i]);
}

std::vector<double> Scaler::apply(std::span<const double> x) const {
  if (x.size() != dim())
    throw InvalidArgument("scaler: state has " + std::to_string(x.size()) + " dimensions, expected " +
                          std::to_string(dim()));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = apply(i, x[i]);
  return out;
}

std::vector<double> Scaler::invert(std::span<const double> z) const {
  if (z.size() != dim()) throw InvalidArgument("scaler: dimension mismatch");
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = invert(i, z[i]);
  return out;
}

double Scaler::apply_target(double r) const {
  if (target_degenerate()) return 0.0;
  return 2.0 * (r - target_lo_) / (target_hi_ - target_lo_) - 1.0;
}

double Scaler::invert_target(double z) const {
  if (target_degenerate()) return target_lo_;
  return target_lo_ + (z + 1.0) * 0.5 * (target_hi_ - target_lo_);
}

double Scaler::invert_target_length(double dz) const {
  if (target_degenerate()) return 0.0;
  return dz * 0.5 * (target_hi_ - target_lo_);
}

std::string Scaler::hash() const {
  std::string text = format_row(lo_) + format_row(hi_) + format_double(target_lo_) + "," +
                     format_double(target_hi_) + "," + source_hash_;
  return hex64(fnv1a(text));
}

Scaler fit_scaler(const Dataset& train) {
  if (train.records.empty()) throw InvalidArgument("fit_scaler: empty training set");
  const std::size_t n = train.state_dim();
  std::vector<double> lo(train.records.front().state), hi(lo);
  double tlo = train.records.front().robustness.at(0), thi = tlo;
  for (const auto& r : train.records) {
    if (r.state.size() != n) throw InvalidArgument("fit_scaler: ragged state dimensions");
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], r.state[i]);
      hi[i] = std::max(hi[i], r.state[i]);
    }
    for (double y : r.robustness) {
      tlo = std::min(tlo, y);
      thi = std::max(thi, y);
    }
  }
  return Scaler(std::move(lo), std::move(hi), tlo, thi, train.content_hash());
}

std::string Dataset::content_hash() const { return hex64(fnv1a(format_records(records))); }

// --- generation -------------------------------------------------------------------

std::vector<Dataset> generate_datasets(const ProcessModel& model, std::span<const stl::Formula> phis,
                                       std::span<const std::string> property_texts, std::size_t n,
                                       std::size_t m, double alpha, std::uint64_t seed, Split split) {
  if (phis.empty()) throw InvalidArgument("generate: no formulas");
  if (property_texts.size() != phis.size())
    throw InvalidArgument("generate: one property text per formula required");
  if (n < 1 || m < 1) throw InvalidArgument("generate: N and M must be at least 1");
  if (!(alpha > 0 && alpha <= 0.5)) throw InvalidArgument("generate: alpha must lie in (0, 0.5]");

  int horizon = 1;
  for (const auto& phi : phis) horizon = std::max(horizon, stl::horizon(phi));
  if (horizon > model.horizon_default())
    throw InvalidArgument("generate: formula horizon " + std::to_string(horizon) +
                          " exceeds the model horizon " + std::to_string(model.horizon_default()));

  const std::uint64_t split_seed = stream_key(seed, {kSplitTag, split_id(split)});
  const auto states = sample_states(model, n, split_seed);

  std::vector<Dataset> out(phis.size());
  for (std::size_t k = 0; k < phis.size(); ++k) {
    out[k].model = model.name();
    out[k].property = property_texts[k];
    out[k].alpha = alpha;
    out[k].seed = seed;
    out[k].split = split;
    out[k].var_names = model.var_names();
    out[k].records.resize(n);
  }

  detail::parallel_for(n, [&](std::size_t i) {
    const SimConfig cfg{stream_key(split_seed, {i}), horizon, static_cast<int>(m)};
    const auto trajs = simulate(model, states[i], cfg);
    const auto flat = model.flatten(states[i]);
    std::vector<std::vector<double>> rob(phis.size(), std::vector<double>(m));
    for (std::size_t j = 0; j < m; ++j) {
      const auto values = stl::robustness_all(phis, trajs[j]);
      for (std::size_t k = 0; k < phis.size(); ++k) rob[k][j] = values[k];
    }
    for (std::size_t k = 0; k < phis.size(); ++k) {
      auto& rec = out[k].records[i];
      rec.state = flat;
      rec.label = label_state(rob[k], alpha);
      rec.robustness = std::move(rob[k]);
    }
  });
  return out;
}

Dataset generate_dataset(const ProcessModel& model, const stl::Formula& phi,
                         const std::string& property_text, std::size_t n, std::size_t m, double alpha,
                         std::uint64_t seed, Split split) {
  const stl::Formula phis[] = {phi};
  const std::string texts[] = {property_text};
  return std::move(generate_datasets(model, phis, texts, n, m, alpha, seed, split).front());
}

// --- file format ------------------------------------------------------------------

std::string format_dataset(const Dataset& d) {
  const std::string body = format_records(d.records);
  std::ostringstream out;
  out << kMagic << "\n";
  out << "# model = " << d.model << "\n";
  out << "# property = " << d.property << "\n";
  out << "# alpha = " << format_double(d.alpha) << "\n";
  out << "# seed = " << d.seed << "\n";
  out << "# split = " << split_name(d.split) << "\n";
  out << "# n = " << d.size() << "\n";
  out << "# m = " << d.samples_per_state() << "\n";
  out << "# dim = " << d.state_dim() << "\n";
  out << "# var_names = " << join(d.var_names, ',') << "\n";
  out << "# quantile_convention = " << kQuantileConvention << "\n";
  if (d.scaler.dim() > 0) {
    out << "# scaling_lo = " << format_row(d.scaler.lo()) << "\n";
    out << "# scaling_hi = " << format_row(d.scaler.hi()) << "\n";
    out << "# target_lo = " << format_double(d.scaler.target_lo()) << "\n";
    out << "# target_hi = " << format_double(d.scaler.target_hi()) << "\n";
    out << "# scaling_source = " << d.scaler.source_hash() << "\n";
  }
  out << "# content_hash = " << hex64(fnv1a(body)) << "\n";
  for (std::size_t i = 0; i < d.state_dim(); ++i) out << "s_" << i << ",";
  for (std::size_t j = 1; j <= d.samples_per_state(); ++j) out << "r_" << j << ",";
  out << "label\n";
  out << body;
  return out.str();
}

Dataset parse_dataset(std::string_view text, const std::string& source) {
  if (!text.starts_with(kMagic)) throw FormatError(source + ": not a dataset file");
  std::string header;
  std::size_t pos = text.find('\n');
  std::vector<std::string_view> rows;
  bool seen_columns = false;
  while (pos != std::string_view::npos && pos + 1 < text.size()) {
    const auto start = pos + 1;
    pos = text.find('\n', start);
    const auto line = text.substr(start, pos == std::string_view::npos ? pos : pos - start);
    if (line.empty()) continue;
    if (line.front() == '#') {
      header.append(line.substr(1));
      header += '\n';
    } else if (!seen_columns) {
      seen_columns = true;
    } else {
      rows.push_back(line);
    }
  }
  const auto kv = KeyValueFile::parse(header, source);

  Dataset d;
  d.model = kv.get("model");
  d.property = kv.get("property");
  d.alpha = kv.number("alpha");
  d.seed = static_cast<std::uint64_t>(std::stoull(kv.get("seed")));
  d.split = parse_split(kv.get("split"));
  if (!kv.get("var_names").empty()) d.var_names = split_on(kv.get("var_names"), ',');
  const auto n = static_cast<std::size_t>(kv.integer("n"));
  const auto m = static_cast<std::size_t>(kv.integer("m"));
  const auto dim = static_cast<std::size_t>(kv.integer("dim"));
  if (rows.size() != n)
    throw FormatError(source + ": header says " + std::to_string(n) + " rows, found " +
                      std::to_string(rows.size()));

  d.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto fields = split_on(rows[i], ',');
    if (fields.size() != dim + m + 1)
      throw FormatError(source + ": row " + std::to_string(i + 1) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(dim + m + 1));
    auto& r = d.records[i];
    r.state.resize(dim);
    r.robustness.resize(m);
    for (std::size_t k = 0; k < dim; ++k) r.state[k] = parse_double(fields[k]);
    for (std::size_t k = 0; k < m; ++k) r.robustness[k] = parse_double(fields[dim + k]);
    r.label = std::stoi(fields.back());
  }
  if (d.content_hash() != kv.get("content_hash"))
    throw FormatError(source + ": content hash mismatch (file edited or truncated)");

  if (kv.has("scaling_lo")) {
    const auto lo = kv.matrix("scaling_lo").values;
    const auto hi = kv.matrix("scaling_hi").values;
    d.scaler = Scaler(lo, hi, kv.number("target_lo"), kv.number("target_hi"), kv.get("scaling_source"));
  }
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  write_file(path, format_dataset(d));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path), path.string());
}

}  // namespace qpm
