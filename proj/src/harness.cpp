#include "qpm/harness.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "qpm/error.hpp"
#include "qpm/quantile.hpp"

namespace qpm {

namespace {

constexpr std::uint64_t kTrainTag = 0x5452414E;
constexpr std::uint64_t kPlotTag = 0x504C4F54;
constexpr std::uint64_t kSequentialTag = 0x53455155;

const std::set<std::string, std::less<>> kKnownKeys = {
    "model",      "model_params", "property", "property2",     "compose_op",   "alpha",
    "n_train",    "n_cal",        "n_test",   "m",             "m_test",       "epochs",
    "learning_rate", "batch_size", "dropout", "seed",          "plot_states",  "sequential_length"};

std::size_t size_key(const KeyValueFile& kv, std::string_view key, std::size_t fallback) {
  if (!kv.has(key)) return fallback;
  const long long v = kv.integer(key);
  if (v < 1) throw InvalidArgument("config: '" + std::string(key) + "' must be at least 1");
  return static_cast<std::size_t>(v);
}

std::string join_row(std::span<const double> v) {
  std::string out;
  for (double x : v) out += format_double(x) + ",";
  return out;
}

StageError::Kind kind_of(const std::exception& e) {
  if (dynamic_cast<const InvalidArgument*>(&e)) return StageError::Kind::InvalidArgument;
  if (dynamic_cast<const ParseError*>(&e)) return StageError::Kind::Parse;
  if (dynamic_cast<const FormatError*>(&e)) return StageError::Kind::Format;
  if (dynamic_cast<const IoError*>(&e)) return StageError::Kind::Io;
  if (dynamic_cast<const NumericError*>(&e)) return StageError::Kind::Numeric;
  return StageError::Kind::Other;
}

std::vector<PredictionInterval> intervals(const std::vector<Quantiles>& q) {
  std::vector<PredictionInterval> out;
  out.reserve(q.size());
  for (const auto& x : q) out.push_back(to_interval(x));
  return out;
}

std::vector<PredictionInterval> conformalize_all(const std::vector<PredictionInterval>& pis,
                                                 const CalibrationResult& cal) {
  std::vector<PredictionInterval> out;
  out.reserve(pis.size());
  for (const auto& pi : pis) out.push_back(conformalize(pi, cal.tau, cal.alpha));
  return out;
}

double crossing_rate(const std::vector<Quantiles>& q) {
  if (q.empty()) return 0.0;
  std::size_t crossed = 0;
  for (const auto& x : q) crossed += x.crossed;
  return static_cast<double>(crossed) / static_cast<double>(q.size());
}

}  // namespace

// --- configuration -------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_kv(const KeyValueFile& kv,
                                           const std::filesystem::path& base_dir) {
  for (const auto& [key, value] : kv.entries())
    if (!kKnownKeys.contains(key) && !key.starts_with("param."))
      throw InvalidArgument("config: unknown key '" + key + "'");

  ExperimentConfig c;
  c.model = kv.get("model");
  if (kv.has("model_params")) {
    std::filesystem::path p = kv.get("model_params");
    if (p.is_relative()) p = base_dir / p;
    c.model_params = KeyValueFile::load(p);
  }
  for (const auto& [key, value] : kv.entries())
    if (key.starts_with("param.")) c.model_params.set(key.substr(6), value);

  const auto model = make_model(c.model, &c.model_params);
  const auto defaults = model->default_properties();
  c.properties.push_back(kv.get_or("property", defaults.front()));
  if (kv.has("property2") && !kv.get("property2").empty()) c.properties.push_back(kv.get("property2"));
  if (kv.has("compose_op")) c.compose_op = parse_op(kv.get("compose_op"));
  else if (c.properties.size() == 2) c.compose_op = ComposeOp::And;
  if (c.compose_op && *c.compose_op != ComposeOp::Not && c.properties.size() < 2)
    throw InvalidArgument("config: compose_op '" + std::string(op_name(*c.compose_op)) +
                          "' needs property2");

  c.alpha = kv.number_or("alpha", 0.1);
  if (!(c.alpha > 0 && c.alpha <= 0.5)) throw InvalidArgument("config: alpha must lie in (0, 0.5]");
  const std::size_t n = model->size_dimension();
  c.n_train = size_key(kv, "n_train", 1000 * n);
  c.n_cal = size_key(kv, "n_cal", 500 * n);
  c.n_test = size_key(kv, "n_test", 100 * n);
  c.m = size_key(kv, "m", 50);
  c.m_test = size_key(kv, "m_test", 500);

  c.train.epochs = static_cast<int>(size_key(kv, "epochs", 500));
  c.train.learning_rate = kv.number_or("learning_rate", 5e-4);
  c.train.batch_size = size_key(kv, "batch_size", 512);
  c.train.dropout = kv.number_or("dropout", 0.1);
  if (kv.has("seed")) c.seed = std::stoull(kv.get("seed"));
  c.plot_states = kv.has("plot_states") ? static_cast<std::size_t>(kv.integer("plot_states")) : 40;
  c.sequential_length = static_cast<int>(size_key(kv, "sequential_length", 20));
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_kv(KeyValueFile::load(path), path.parent_path());
}

std::string ExperimentConfig::resolved_text() const {
  std::ostringstream out;
  out << "model = " << model << "\n";
  out << "property = " << properties.front() << "\n";
  if (properties.size() > 1) out << "property2 = " << properties[1] << "\n";
  if (compose_op) out << "compose_op = " << op_name(*compose_op) << "\n";
  out << "alpha = " << format_double(alpha) << "\n";
  out << "n_train = " << n_train << "\n";
  out << "n_cal = " << n_cal << "\n";
  out << "n_test = " << n_test << "\n";
  out << "m = " << m << "\n";
  out << "m_test = " << m_test << "\n";
  out << "epochs = " << train.epochs << "\n";
  out << "learning_rate = " << format_double(train.learning_rate) << "\n";
  out << "batch_size = " << train.batch_size << "\n";
  out << "dropout = " << format_double(train.dropout) << "\n";
  out << "seed = " << seed << "\n";
  out << "plot_states = " << plot_states << "\n";
  out << "sequential_length = " << sequential_length << "\n";
  const auto params = make_model(model, &model_params)->parameters();
  for (const auto& [key, value] : params.entries()) out << "param." << key << " = " << value << "\n";
  return out.str();
}

// --- experiment ----------------------------------------------------------------------

Experiment::Experiment(ExperimentConfig cfg, std::filesystem::path out_dir, Logger log)
    : cfg_(std::move(cfg)), out_(std::move(out_dir)), log_(std::move(log)) {
  model_ = make_model(cfg_.model, &cfg_.model_params);
  const auto names = model_->var_names();
  for (const auto& text : cfg_.properties) phis_.push_back(stl::parse_formula(text, names));
  if (phis_.empty() || phis_.size() > 2) throw InvalidArgument("experiment: one or two properties expected");
}

template <class Fn>
void Experiment::stage(std::string_view name, Fn&& fn) {
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string(name), kind_of(e), e.what());
  }
}

void Experiment::info(const std::string& msg) const {
  if (log_) log_(msg);
}

std::filesystem::path Experiment::dataset_path(Split split, std::string_view tag) const {
  return out_ / "data" / (std::string(split_name(split)) + "." + std::string(tag) + ".csv");
}

std::filesystem::path Experiment::model_path(std::size_t k) const {
  return out_ / ("model." + property_tag(k) + ".qrm");
}

std::filesystem::path Experiment::calibration_path(std::string_view tag) const {
  return out_ / ("cqr." + std::string(tag) + ".cal");
}

std::filesystem::path Experiment::plot_path(std::size_t k) const {
  return out_ / ("plot_data." + property_tag(k) + ".csv");
}

std::filesystem::path Experiment::compose_path(ComposeOp op, ComposeStrategy s) const {
  return out_ / ("compose." + std::string(op_name(op)) + "." + std::string(strategy_name(s)) + ".csv");
}

std::vector<ComposeOp> Experiment::composite_ops() const {
  if (phis_.size() == 2) return {ComposeOp::And, ComposeOp::Or, ComposeOp::Not};
  return {ComposeOp::Not};
}

void Experiment::generate() {
  stage("generate", [&] {
    write_file(out_ / "config.resolved", cfg_.resolved_text());
    const auto names = model_->var_names();
    std::vector<stl::Formula> phis = phis_;
    std::vector<std::string> texts = cfg_.properties;
    std::vector<std::string> tags;
    for (std::size_t k = 0; k < phis_.size(); ++k) tags.push_back(property_tag(k));
    for (ComposeOp op : composite_ops()) {
      phis.push_back(compose_formula(op, phis_[0], phis_.size() > 1 ? &phis_[1] : nullptr));
      texts.push_back(stl::to_string(phis.back(), names));
      tags.emplace_back(op_name(op));
    }

    info("generate: train split, " + std::to_string(cfg_.n_train) + " states x " +
         std::to_string(cfg_.m) + " trajectories");
    auto train = generate_datasets(*model_, phis_, cfg_.properties, cfg_.n_train, cfg_.m, cfg_.alpha,
                                   cfg_.seed, Split::Train);
    for (std::size_t k = 0; k < train.size(); ++k) {
      train[k].scaler = fit_scaler(train[k]);
      save_dataset(train[k], dataset_path(Split::Train, tags[k]));
    }
    const std::pair<Split, std::pair<std::size_t, std::size_t>> rest[] = {
        {Split::Calibration, {cfg_.n_cal, cfg_.m}}, {Split::Test, {cfg_.n_test, cfg_.m_test}}};
    for (const auto& [split, size] : rest) {
      info("generate: " + std::string(split_name(split)) + " split, " + std::to_string(size.first) +
           " states x " + std::to_string(size.second) + " trajectories");
      auto sets = generate_datasets(*model_, phis, texts, size.first, size.second, cfg_.alpha,
                                    cfg_.seed, split);
      for (std::size_t k = 0; k < sets.size(); ++k) {
        if (k < train.size()) sets[k].scaler = train[k].scaler;
        save_dataset(sets[k], dataset_path(split, tags[k]));
      }
    }
  });
}

void Experiment::train() {
  stage("train", [&] {
    for (std::size_t k = 0; k < phis_.size(); ++k) {
      const auto data = load_dataset(dataset_path(Split::Train, property_tag(k)));
      if (data.property != cfg_.properties[k])
        throw FormatError("training set was generated for '" + data.property + "', config has '" +
                          cfg_.properties[k] + "'");
      TrainConfig tc = cfg_.train;
      tc.seed = stream_key(cfg_.seed, {kTrainTag, k});
      info("train: " + property_tag(k) + " on " + std::to_string(data.size() * data.samples_per_state()) +
           " pairs");
      const int every = std::max(1, tc.epochs / 10);
      const auto model = qpm::train(data, tc, [&](int epoch, double loss) {
        if (epoch % every == 0 || epoch == tc.epochs)
          info("  epoch " + std::to_string(epoch) + " loss " + format_double(loss));
      });
      save_model(model, model_path(k));
    }
  });
}

void Experiment::calibrate() {
  stage("calibrate", [&] {
    for (std::size_t k = 0; k < phis_.size(); ++k) {
      const auto model = load_model(model_path(k));
      const auto data = load_dataset(dataset_path(Split::Calibration, property_tag(k)));
      if (data.scaler.source_hash() != model.train_hash)
        throw FormatError("calibration split " + property_tag(k) +
                          " belongs to a different training split than the model");
      const auto cal = qpm::calibrate(model, data);
      info("calibrate: " + property_tag(k) + " tau = " + format_double(cal.tau) + " over " +
           std::to_string(cal.size()) + " scores");
      save_calibration(cal, calibration_path(property_tag(k)));
    }
  });
}

Experiment::Monitor Experiment::load_monitor(std::size_t k) const {
  Monitor m{load_model(model_path(k)), load_calibration(calibration_path(property_tag(k)))};
  if (m.cal.model_hash != m.model.hash())
    throw FormatError("calibration " + calibration_path(property_tag(k)).string() +
                      " was computed for a different model checkpoint");
  return m;
}

void Experiment::evaluate() {
  stage("evaluate", [&] {
    const std::vector<std::string> prefix_names{"property", "method"};
    std::string metrics = metrics_header(prefix_names) + "\n";
    std::string summary;
    for (std::size_t k = 0; k < phis_.size(); ++k) {
      const auto tag = property_tag(k);
      const auto mon = load_monitor(k);
      const auto test = load_dataset(dataset_path(Split::Test, tag));
      if (test.scaler.source_hash() != mon.model.train_hash)
        throw FormatError("test split " + tag + " belongs to a different training split than the model");
      const auto cal_set = load_dataset(dataset_path(Split::Calibration, tag));
      if (cal_set.content_hash() != mon.cal.dataset_hash)
        throw FormatError("calibration split " + tag + " does not match the stored calibration");

      const auto q = predict_quantiles(mon.model, test);
      const auto pis = intervals(q);
      const auto cpis = conformalize_all(pis, mon.cal);
      const auto cp = fit_cp_baseline(mon.model, cal_set, cfg_.alpha);
      std::vector<PredictionInterval> cps;
      for (const auto& x : q) cps.push_back(cp.interval(x.median));

      const auto m_qr = qpm::evaluate(pis, test, cfg_.alpha);
      const auto m_cqr = qpm::evaluate(cpis, test, cfg_.alpha);
      const auto m_cp = qpm::evaluate(cps, test, cfg_.alpha);
      metrics += metrics_row(m_qr, std::vector<std::string>{tag, "QR"}) + "\n";
      metrics += metrics_row(m_cqr, std::vector<std::string>{tag, "CQR"}) + "\n";
      metrics += metrics_row(m_cp, std::vector<std::string>{tag, "CP"}) + "\n";
      info("evaluate: " + tag + " CQR coverage " + format_double(m_cqr.coverage) + "%, wrong " +
           format_double(m_cqr.wrong) + "%, efficiency " + format_double(m_cqr.efficiency));

      summary += tag + ".property = " + cfg_.properties[k] + "\n";
      summary += tag + ".tau = " + format_double(mon.cal.tau) + "\n";
      summary += tag + ".cp_half_width = " + format_double(cp.beta) + "\n";
      summary += tag + ".crossing_rate = " + format_double(crossing_rate(q)) + "\n";
      summary += tag + ".initial_loss = " + format_double(mon.model.initial_loss) + "\n";
      summary += tag + ".final_loss = " +
                 format_double(mon.model.epoch_loss.empty() ? mon.model.initial_loss
                                                            : mon.model.epoch_loss.back()) + "\n";
      summary += tag + ".model_hash = " + mon.model.hash() + "\n";

      // plot data for a random subset of test states
      std::vector<std::size_t> idx(test.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      Rng rng = Rng::stream(cfg_.seed, {kPlotTag, k});
      const std::size_t count = std::min(cfg_.plot_states, idx.size());
      for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
      idx.resize(count);
      std::sort(idx.begin(), idx.end());
      std::string plot = "index,";
      for (std::size_t d = 0; d < test.state_dim(); ++d) plot += "s_" + std::to_string(d) + ",";
      plot += "emp_lo,emp_median,emp_hi,pi_lo,median,pi_hi,cpi_lo,cpi_hi,label\n";
      for (std::size_t i : idx) {
        const auto& r = test.records[i];
        const double e[] = {empirical_quantile(r.robustness, cfg_.alpha / 2),
                            empirical_quantile(r.robustness, 0.5),
                            empirical_quantile(r.robustness, 1 - cfg_.alpha / 2),
                            q[i].lo, q[i].median, q[i].hi, cpis[i].lo, cpis[i].hi};
        plot += std::to_string(i) + "," + join_row(r.state) + join_row(e) + std::to_string(r.label) + "\n";
      }
      write_file(plot_path(k), plot);
    }
    write_file(metrics_path(), metrics);
    write_file(out_ / "summary.txt", summary);
  });
}

void Experiment::compose(ComposeOp op, ComposeStrategy strategy) {
  stage("compose", [&] {
    if (op != ComposeOp::Not && phis_.size() < 2)
      throw InvalidArgument("'" + std::string(op_name(op)) + "' composition needs property2");
    const std::size_t parts = op == ComposeOp::Not ? 1 : 2;
    std::vector<Monitor> mons;
    for (std::size_t k = 0; k < parts; ++k) mons.push_back(load_monitor(k));
    const auto tag = std::string(op_name(op));
    const auto cal_set = load_dataset(dataset_path(Split::Calibration, tag));
    const auto test = load_dataset(dataset_path(Split::Test, tag));

    // raw intervals of every component on a composite split's states
    auto component_pis = [&](const Dataset& d) {
      std::vector<std::vector<PredictionInterval>> out;
      for (const auto& mon : mons) out.push_back(intervals(predict_quantiles(mon.model, d)));
      return out;
    };

    std::vector<PredictionInterval> result;
    std::string method;
    const auto test_pis = component_pis(test);
    if (strategy == ComposeStrategy::Union) {
      method = op == ComposeOp::Not ? "NEG" : "UNION";
      for (std::size_t i = 0; i < test.size(); ++i) {
        std::vector<PredictionInterval> cpis;
        for (std::size_t k = 0; k < parts; ++k)
          cpis.push_back(conformalize(test_pis[k][i], mons[k].cal.tau, mons[k].cal.alpha));
        result.push_back(op == ComposeOp::Not ? negate(cpis[0]) : union_all(cpis));
      }
    } else {
      method = op == ComposeOp::And ? "MIN" : op == ComposeOp::Or ? "MAX" : "NEG-RECAL";
      auto combine = [&](const std::vector<std::vector<PredictionInterval>>& pis, std::size_t i) {
        std::vector<PredictionInterval> row;
        for (std::size_t k = 0; k < parts; ++k) row.push_back(pis[k][i]);
        return combine_all(op, row);
      };
      const auto cal_pis = component_pis(cal_set);
      std::vector<PredictionInterval> combined;
      for (std::size_t i = 0; i < cal_set.size(); ++i) combined.push_back(combine(cal_pis, i));
      auto cal = recalibrate_combined(combined, cal_set, cfg_.alpha);
      cal.model_hash = mons[0].model.hash();
      if (parts > 1) cal.model_hash += "+" + mons[1].model.hash();
      save_calibration(cal, calibration_path(tag));
      info("compose: " + tag + " recalibrated tau = " + format_double(cal.tau));
      for (std::size_t i = 0; i < test.size(); ++i)
        result.push_back(conformalize(combine(test_pis, i), cal.tau, cal.alpha));
    }
    const auto m = qpm::evaluate(result, test, cfg_.alpha);
    info("compose: " + tag + " " + method + " coverage " + format_double(m.coverage) + "%, efficiency " +
         format_double(m.efficiency));
    write_file(compose_path(op, strategy),
               metrics_header(std::vector<std::string>{"property", "method"}) + "\n" +
                   metrics_row(m, std::vector<std::string>{tag, method}) + "\n");
  });
}

void Experiment::sequential(int length) {
  stage("sequential", [&] {
    if (length < 1) throw InvalidArgument("sequential length must be at least 1");
    std::vector<Monitor> mons;
    for (std::size_t k = 0; k < phis_.size(); ++k) mons.push_back(load_monitor(k));

    const std::uint64_t key = stream_key(cfg_.seed, {kSequentialTag});
    const HybridState start = sample_states(*model_, 1, key).front();
    std::vector<HybridState> visited{start};
    if (length > 1) {
      Rng rng = Rng::stream(key, {1});
      const auto path = simulate_one(*model_, start, length - 1, rng);
      for (std::size_t t = 1; t < path.length(); ++t) visited.push_back(model_->unflatten(path.state(t)));
    }

    int horizon = 1;
    for (const auto& phi : phis_) horizon = std::max(horizon, stl::horizon(phi));
    std::string out = "step,property,";
    for (std::size_t d = 0; d < model_->state_dim(); ++d) out += "s_" + std::to_string(d) + ",";
    out += "pi_lo,median,pi_hi,cpi_lo,cpi_hi,emp_lo,emp_median,emp_hi,label,covered\n";
    for (std::size_t step = 0; step < visited.size(); ++step) {
      const auto flat = model_->flatten(visited[step]);
      const SimConfig sim{stream_key(key, {2, step}), horizon, static_cast<int>(cfg_.m_test)};
      const auto trajs = simulate(*model_, visited[step], sim);
      for (std::size_t k = 0; k < phis_.size(); ++k) {
        std::vector<double> rob;
        rob.reserve(trajs.size());
        for (const auto& tr : trajs) rob.push_back(stl::robustness(phis_[k], tr));
        const auto q = predict_quantiles(mons[k].model, flat);
        const auto cpi = conformalize(to_interval(q), mons[k].cal.tau, mons[k].cal.alpha);
        std::size_t inside = 0;
        for (double y : rob) inside += cpi.contains(y);
        const double row[] = {q.lo, q.median, q.hi, cpi.lo, cpi.hi,
                              empirical_quantile(rob, cfg_.alpha / 2), empirical_quantile(rob, 0.5),
                              empirical_quantile(rob, 1 - cfg_.alpha / 2)};
        out += std::to_string(step) + "," + property_tag(k) + "," + join_row(flat) + join_row(row) +
               std::to_string(label_state(rob, cfg_.alpha)) + "," +
               format_double(static_cast<double>(inside) / static_cast<double>(rob.size())) + "\n";
      }
    }
    write_file(sequential_path(), out);
    info("sequential: " + std::to_string(visited.size()) + " states written");
  });
}

void Experiment::run_all() {
  generate();
  train();
  calibrate();
  evaluate();
  if (cfg_.compose_op) {
    compose(*cfg_.compose_op, ComposeStrategy::Union);
    compose(*cfg_.compose_op, ComposeStrategy::Recalibrated);
  }
}

}  // namespace qpm
