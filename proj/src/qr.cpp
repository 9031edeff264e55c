#include "qpm/qr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qpm/error.hpp"
#include "qpm/keyvalue.hpp"

namespace qpm {

namespace {

constexpr std::string_view kMagic = "# qpm-quantile-model v1";
constexpr std::uint64_t kInitTag = 0x494E4954ULL;
constexpr std::uint64_t kShuffleTag = 0x53485546ULL;
constexpr std::uint64_t kDropoutTag = 0x44524F50ULL;

double pinball_slope(double level, double y, double yhat) {
  if (y > yhat) return -level;
  if (yhat > y) return 1.0 - level;
  return 0.0;
}

Eigen::MatrixXd leaky(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0 ? v : QRNetwork::kSlope * v; });
}

Eigen::MatrixXd leaky_slope(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0 ? 1.0 : QRNetwork::kSlope; });
}

std::string format_row(std::span<const double> v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out + "]";
}

std::string format_eigen(const Eigen::MatrixXd& m) {
  std::string out = "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) out += "; ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ", ";
      out += format_double(m(r, c));
    }
  }
  return out + "]";
}

std::string architecture(std::size_t input_dim) {
  std::string s = std::to_string(input_dim);
  for (int i = 0; i < QRNetwork::kHiddenLayers; ++i) s += "-" + std::to_string(QRNetwork::kHidden);
  return s + "-" + std::to_string(QRNetwork::kHeads);
}

}  // namespace

double pinball_loss(double alpha, double y, double yhat) {
  return alpha * std::max(y - yhat, 0.0) + (1.0 - alpha) * std::max(yhat - y, 0.0);
}

std::array<double, 3> quantile_levels(double alpha) { return {alpha / 2, 0.5, 1.0 - alpha / 2}; }

double joint_loss(double alpha, double y, const std::array<double, 3>& yhat) {
  const auto lv = quantile_levels(alpha);
  return (pinball_loss(lv[0], y, yhat[0]) + pinball_loss(lv[1], y, yhat[1]) +
          pinball_loss(lv[2], y, yhat[2])) /
         3.0;
}

// --- network ----------------------------------------------------------------------

QRNetwork::QRNetwork(std::size_t input_dim, Rng& rng) {
  if (input_dim == 0) throw InvalidArgument("network input dimension must be positive");
  std::vector<std::size_t> widths{input_dim};
  for (int i = 0; i < kHiddenLayers; ++i) widths.push_back(kHidden);
  widths.push_back(kHeads);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(widths[l]);
    const auto out = static_cast<Eigen::Index>(widths[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.w(r, c) = rng.uniform(-limit, limit);
    layers_.push_back(std::move(layer));
  }
}

Eigen::MatrixXd QRNetwork::forward(const Eigen::MatrixXd& x, const DropoutMasks* masks) const {
  if (static_cast<std::size_t>(x.rows()) != input_dim())
    throw InvalidArgument("network input has " + std::to_string(x.rows()) + " rows, expected " +
                          std::to_string(input_dim()));
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    Eigen::MatrixXd z = (layers_[l].w * a).colwise() + layers_[l].b;
    a = leaky(z);
    if (masks) a = a.cwiseProduct((*masks)[l]);
  }
  return (layers_.back().w * a).colwise() + layers_.back().b;
}

std::size_t QRNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.b.size());
  return n;
}

std::vector<double> QRNetwork::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    out.insert(out.end(), l.w.data(), l.w.data() + l.w.size());
    out.insert(out.end(), l.b.data(), l.b.data() + l.b.size());
  }
  return out;
}

void QRNetwork::set_flat_parameters(std::span<const double> theta) {
  if (theta.size() != parameter_count()) throw InvalidArgument("parameter vector has the wrong size");
  const double* p = theta.data();
  for (auto& l : layers_) {
    std::copy(p, p + l.w.size(), l.w.data());
    p += l.w.size();
    std::copy(p, p + l.b.size(), l.b.data());
    p += l.b.size();
  }
}

DropoutMasks QRNetwork::sample_masks(std::size_t batch, double rate, Rng& rng) const {
  DropoutMasks masks;
  const double keep = 1.0 / (1.0 - rate);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    Eigen::MatrixXd m(layers_[l].w.rows(), static_cast<Eigen::Index>(batch));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform() < rate ? 0.0 : keep;
    masks.push_back(std::move(m));
  }
  return masks;
}

bool operator==(const QRNetwork& a, const QRNetwork& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const auto& la = a.layers_[i];
    const auto& lb = b.layers_[i];
    if (la.w.rows() != lb.w.rows() || la.w.cols() != lb.w.cols() || la.w != lb.w || la.b != lb.b)
      return false;
  }
  return true;
}

std::vector<double> LossGradient::flat() const {
  std::vector<double> out;
  for (const auto& l : grad) {
    out.insert(out.end(), l.w.data(), l.w.data() + l.w.size());
    out.insert(out.end(), l.b.data(), l.b.data() + l.b.size());
  }
  return out;
}

// --- loss and gradient --------------------------------------------------------------

double batch_loss(const QRNetwork& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  double alpha, const DropoutMasks* masks) {
  if (x.cols() != y.size() || x.cols() == 0) throw InvalidArgument("batch_loss: bad batch shape");
  const Eigen::MatrixXd out = net.forward(x, masks);
  double total = 0.0;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    total += joint_loss(alpha, y(j), {out(0, j), out(1, j), out(2, j)});
  return total / static_cast<double>(out.cols());
}

LossGradient gradient(const QRNetwork& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      double alpha, const DropoutMasks* masks) {
  if (x.cols() != y.size() || x.cols() == 0) throw InvalidArgument("gradient: bad batch shape");
  const auto& layers = net.layers();
  const std::size_t hidden = layers.size() - 1;
  const auto batch = x.cols();

  // forward, keeping pre-activations and (masked) activations
  std::vector<Eigen::MatrixXd> z(hidden), a(hidden + 1);
  a[0] = x;
  for (std::size_t l = 0; l < hidden; ++l) {
    z[l] = (layers[l].w * a[l]).colwise() + layers[l].b;
    a[l + 1] = leaky(z[l]);
    if (masks) a[l + 1] = a[l + 1].cwiseProduct((*masks)[l]);
  }
  const Eigen::MatrixXd out = (layers.back().w * a[hidden]).colwise() + layers.back().b;

  const auto lv = quantile_levels(alpha);
  const double scale = 1.0 / (3.0 * static_cast<double>(batch));
  LossGradient g;
  Eigen::MatrixXd delta(out.rows(), batch);
  double total = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    total += joint_loss(alpha, y(j), {out(0, j), out(1, j), out(2, j)});
    for (Eigen::Index k = 0; k < out.rows(); ++k)
      delta(k, j) = pinball_slope(lv[static_cast<std::size_t>(k)], y(j), out(k, j)) * scale;
  }
  g.loss = total / static_cast<double>(batch);

  g.grad.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    g.grad[l].w = delta * a[l].transpose();
    g.grad[l].b = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd da = layers[l].w.transpose() * delta;
    if (masks) da = da.cwiseProduct((*masks)[l - 1]);
    delta = da.cwiseProduct(leaky_slope(z[l - 1]));
  }
  return g;
}

// --- training ----------------------------------------------------------------------

void fit_network(QRNetwork& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                 const TrainConfig& cfg, double* initial_loss, std::vector<double>* epoch_loss,
                 const TrainLog& log) {
  if (cfg.epochs < 1) throw InvalidArgument("train: epochs must be at least 1");
  if (cfg.batch_size < 1) throw InvalidArgument("train: batch size must be at least 1");
  if (!(cfg.learning_rate > 0)) throw InvalidArgument("train: learning rate must be positive");
  if (!(cfg.dropout >= 0 && cfg.dropout < 1)) throw InvalidArgument("train: dropout must lie in [0, 1)");
  const auto n = static_cast<std::size_t>(x.cols());
  if (n == 0) throw InvalidArgument("train: no training pairs");

  if (initial_loss) *initial_loss = batch_loss(net, x, y, alpha);

  auto& layers = net.layers();
  std::vector<Layer> m1, m2;
  for (const auto& l : layers) {
    m1.push_back({Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()), Eigen::VectorXd::Zero(l.b.size())});
    m2.push_back(m1.back());
  }

  std::vector<std::size_t> order(n);
  Eigen::MatrixXd xb;
  Eigen::VectorXd yb;
  long long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = Rng::stream(cfg.seed, {kShuffleTag, static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(i + 1)]);

    double sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      xb.resize(x.rows(), static_cast<Eigen::Index>(b));
      yb.resize(static_cast<Eigen::Index>(b));
      for (std::size_t j = 0; j < b; ++j) {
        xb.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(order[start + j]));
        yb(static_cast<Eigen::Index>(j)) = y(static_cast<Eigen::Index>(order[start + j]));
      }
      DropoutMasks masks;
      if (cfg.dropout > 0) {
        Rng rng = Rng::stream(cfg.seed, {kDropoutTag, static_cast<std::uint64_t>(epoch), batch_index});
        masks = net.sample_masks(b, cfg.dropout, rng);
      }
      const auto g = gradient(net, xb, yb, alpha, cfg.dropout > 0 ? &masks : nullptr);
      if (!std::isfinite(g.loss))
        throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1) +
                           ", batch " + std::to_string(batch_index + 1) +
                           " (try a smaller learning rate)");
      sum += g.loss * static_cast<double>(b);

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      const double lr = cfg.learning_rate;
      for (std::size_t l = 0; l < layers.size(); ++l) {
        m1[l].w = cfg.beta1 * m1[l].w + (1 - cfg.beta1) * g.grad[l].w;
        m1[l].b = cfg.beta1 * m1[l].b + (1 - cfg.beta1) * g.grad[l].b;
        m2[l].w = cfg.beta2 * m2[l].w + (1 - cfg.beta2) * g.grad[l].w.cwiseAbs2();
        m2[l].b = cfg.beta2 * m2[l].b + (1 - cfg.beta2) * g.grad[l].b.cwiseAbs2();
        layers[l].w.array() -=
            lr * (m1[l].w.array() / c1) / ((m2[l].w.array() / c2).sqrt() + cfg.epsilon);
        layers[l].b.array() -=
            lr * (m1[l].b.array() / c1) / ((m2[l].b.array() / c2).sqrt() + cfg.epsilon);
      }
    }
    const double mean = sum / static_cast<double>(n);
    if (epoch_loss) epoch_loss->push_back(mean);
    if (log) log(epoch + 1, mean);
  }
}

QRModel train(const Dataset& train_set, const TrainConfig& cfg, const TrainLog& log) {
  if (train_set.records.empty()) throw InvalidArgument("train: empty training set");
  if (train_set.scaler.dim() != train_set.state_dim())
    throw InvalidArgument("train: training set has no fitted scaler");
  if (train_set.scaler.source_hash() != train_set.content_hash())
    throw InvalidArgument("train: scaler was not fit on this training split");

  const auto dim = static_cast<Eigen::Index>(train_set.state_dim());
  const std::size_t m = train_set.samples_per_state();
  const auto pairs = static_cast<Eigen::Index>(train_set.size() * m);
  Eigen::MatrixXd x(dim, pairs);
  Eigen::VectorXd y(pairs);
  Eigen::Index col = 0;
  for (const auto& r : train_set.records) {
    const auto s = train_set.scaler.apply(r.state);
    for (double target : r.robustness) {
      for (Eigen::Index i = 0; i < dim; ++i) x(i, col) = s[static_cast<std::size_t>(i)];
      y(col++) = train_set.scaler.apply_target(target);
    }
  }

  QRModel model;
  Rng init = Rng::stream(cfg.seed, {kInitTag});
  model.net = QRNetwork(static_cast<std::size_t>(dim), init);
  model.alpha = train_set.alpha;
  model.scaler = train_set.scaler;
  model.config = cfg;
  model.property = train_set.property;
  model.train_hash = train_set.content_hash();
  fit_network(model.net, x, y, model.alpha, cfg, &model.initial_loss, &model.epoch_loss, log);
  return model;
}

// --- inference ---------------------------------------------------------------------

namespace {

Quantiles finish(const QRModel& model, double lo, double med, double hi) {
  Quantiles q;
  std::array<double, 3> v{model.scaler.invert_target(lo), model.scaler.invert_target(med),
                          model.scaler.invert_target(hi)};
  q.crossed = !(v[0] <= v[1] && v[1] <= v[2]);
  std::sort(v.begin(), v.end());
  q.lo = v[0];
  q.median = v[1];
  q.hi = v[2];
  return q;
}

}  // namespace

Quantiles predict_quantiles(const QRModel& model, std::span<const double> state) {
  const auto s = model.scaler.apply(state);
  const Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  const Eigen::MatrixXd out = model.net.forward(x);
  return finish(model, out(0, 0), out(1, 0), out(2, 0));
}

std::vector<Quantiles> predict_quantiles(const QRModel& model, const Dataset& data) {
  const auto dim = static_cast<Eigen::Index>(model.state_dim());
  if (data.state_dim() != model.state_dim() && !data.records.empty())
    throw InvalidArgument("predict: dataset state dimension does not match the model");
  Eigen::MatrixXd x(dim, static_cast<Eigen::Index>(data.size()));
  for (std::size_t j = 0; j < data.size(); ++j) {
    const auto s = model.scaler.apply(data.records[j].state);
    for (Eigen::Index i = 0; i < dim; ++i) x(i, static_cast<Eigen::Index>(j)) = s[static_cast<std::size_t>(i)];
  }
  std::vector<Quantiles> out;
  out.reserve(data.size());
  if (data.records.empty()) return out;
  const Eigen::MatrixXd heads = model.net.forward(x);
  for (Eigen::Index j = 0; j < heads.cols(); ++j)
    out.push_back(finish(model, heads(0, j), heads(1, j), heads(2, j)));
  return out;
}

// --- checkpoint --------------------------------------------------------------------

std::string QRModel::hash() const { return hex64(fnv1a(format_model(*this))); }

std::string format_model(const QRModel& model) {
  std::ostringstream out;
  const auto lv = quantile_levels(model.alpha);
  out << kMagic << "\n";
  out << "architecture = " << architecture(model.state_dim()) << "\n";
  out << "activation = leaky_relu " << format_double(QRNetwork::kSlope) << "\n";
  out << "alpha = " << format_double(model.alpha) << "\n";
  out << "levels = " << format_row(lv) << "\n";
  out << "property = " << model.property << "\n";
  out << "seed = " << model.config.seed << "\n";
  out << "learning_rate = " << format_double(model.config.learning_rate) << "\n";
  out << "epochs = " << model.config.epochs << "\n";
  out << "batch_size = " << model.config.batch_size << "\n";
  out << "dropout = " << format_double(model.config.dropout) << "\n";
  out << "train_hash = " << model.train_hash << "\n";
  out << "scaling_lo = " << format_row(model.scaler.lo()) << "\n";
  out << "scaling_hi = " << format_row(model.scaler.hi()) << "\n";
  out << "target_lo = " << format_double(model.scaler.target_lo()) << "\n";
  out << "target_hi = " << format_double(model.scaler.target_hi()) << "\n";
  out << "scaling_source = " << model.scaler.source_hash() << "\n";
  out << "scaling_hash = " << model.scaler.hash() << "\n";
  out << "initial_loss = " << format_double(model.initial_loss) << "\n";
  out << "epoch_loss = " << format_row(model.epoch_loss) << "\n";
  const auto& layers = model.net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out << "layer" << l << ".w = " << format_eigen(layers[l].w) << "\n";
    out << "layer" << l << ".b = " << format_row({layers[l].b.data(), static_cast<std::size_t>(layers[l].b.size())})
        << "\n";
  }
  return out.str();
}

QRModel parse_model(std::string_view text, const std::string& source) {
  if (!text.starts_with(kMagic)) throw FormatError(source + ": not a quantile model checkpoint");
  const auto kv = KeyValueFile::parse(text, source);
  QRModel model;
  model.alpha = kv.number("alpha");
  model.property = kv.get("property");
  model.config.seed = std::stoull(kv.get("seed"));
  model.config.learning_rate = kv.number("learning_rate");
  model.config.epochs = static_cast<int>(kv.integer("epochs"));
  model.config.batch_size = static_cast<std::size_t>(kv.integer("batch_size"));
  model.config.dropout = kv.number("dropout");
  model.train_hash = kv.get("train_hash");
  model.scaler = Scaler(kv.matrix("scaling_lo").values, kv.matrix("scaling_hi").values,
                        kv.number("target_lo"), kv.number("target_hi"), kv.get("scaling_source"));
  if (model.scaler.hash() != kv.get("scaling_hash"))
    throw FormatError(source + ": scaling hash mismatch");
  model.initial_loss = kv.number("initial_loss");
  model.epoch_loss = kv.matrix("epoch_loss").values;

  const std::size_t dim = model.scaler.dim();
  if (kv.get("architecture") != architecture(dim))
    throw FormatError(source + ": unsupported architecture '" + kv.get("architecture") + "'");
  Rng unused(0);
  model.net = QRNetwork(dim, unused);
  auto& layers = model.net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto w = kv.matrix("layer" + std::to_string(l) + ".w");
    const auto b = kv.matrix("layer" + std::to_string(l) + ".b");
    if (w.rows != static_cast<std::size_t>(layers[l].w.rows()) ||
        w.cols != static_cast<std::size_t>(layers[l].w.cols()) ||
        b.size() != static_cast<std::size_t>(layers[l].b.size()))
      throw FormatError(source + ": layer " + std::to_string(l) + " has the wrong shape");
    for (std::size_t r = 0; r < w.rows; ++r)
      for (std::size_t c = 0; c < w.cols; ++c)
        layers[l].w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w(r, c);
    for (std::size_t i = 0; i < b.size(); ++i) layers[l].b(static_cast<Eigen::Index>(i)) = b.values[i];
  }
  return model;
}

void save_model(const QRModel& model, const std::filesystem::path& path) {
  write_file(path, format_model(model));
}

QRModel load_model(const std::filesystem::path& path) {
  return parse_model(read_file(path), path.string());
}

}  // namespace qpm
