#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "qpm/error.hpp"
#include "qpm/qr.hpp"
#include "synthetic.hpp"

using namespace qpm;

namespace {

// Straight-line forward pass, written independently of QRNetwork::forward.
Eigen::MatrixXd reference_forward(const QRNetwork& net, const Eigen::MatrixXd& x, double* min_abs_pre = nullptr) {
  Eigen::MatrixXd a = x;
  const auto& ls = net.layers();
  for (std::size_t l = 0; l < ls.size(); ++l) {
    Eigen::MatrixXd z(ls[l].w.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        double s = ls[l].b(r);
        for (Eigen::Index c = 0; c < a.rows(); ++c) s += ls[l].w(r, c) * a(c, j);
        z(r, j) = s;
      }
    if (l + 1 == ls.size()) return z;
    if (min_abs_pre) *min_abs_pre = std::min(*min_abs_pre, z.cwiseAbs().minCoeff());
    a = z.unaryExpr([](double v) { return v > 0 ? v : 0.01 * v; });
  }
  return a;
}

QRModel identity_scaled(QRNetwork net) {
  QRModel m;
  m.net = std::move(net);
  m.scaler = Scaler({-1.0}, {1.0}, -1.0, 1.0, "");
  return m;
}

}  // namespace

TEST_CASE("pinball loss examples") {
  CHECK(pinball_loss(0.95, 2, 1) == doctest::Approx(0.95));
  CHECK(pinball_loss(0.05, 2, 1) == doctest::Approx(0.05));
  CHECK(pinball_loss(0.3, 1.5, 1.5) == 0.0);
  CHECK(joint_loss(0.1, 0.0, {0.0, 0.0, 0.0}) == 0.0);
  CHECK(joint_loss(0.1, 0.0, {-1.0, 0.0, 1.0}) == doctest::Approx(0.1 / 3));
}

TEST_CASE("joint loss is the mean of three pinball losses") {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const double alpha = rng.uniform(0.01, 0.5), y = rng.normal();
    const std::array<double, 3> q{rng.normal(), rng.normal(), rng.normal()};
    const double a = alpha / 2, b = 1 - alpha / 2;
    auto check = [](double lv, double yy, double yh) {
      return yy >= yh ? lv * (yy - yh) : (1 - lv) * (yh - yy);
    };
    const double expect = (check(a, y, q[0]) + check(0.5, y, q[1]) + check(b, y, q[2])) / 3;
    CHECK(joint_loss(alpha, y, q) == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("pinball loss is convex in the prediction") {
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    const double lv = rng.uniform(0.01, 0.99), y = rng.normal();
    double a = rng.normal(), b = rng.normal();
    if (a > b) std::swap(a, b);
    CHECK(pinball_loss(lv, y, (a + b) / 2) <= (pinball_loss(lv, y, a) + pinball_loss(lv, y, b)) / 2 + 1e-15);
  }
}

TEST_CASE("Glorot initialization and parameter layout") {
  Rng rng(1);
  const QRNetwork net(3, rng);
  REQUIRE(net.layers().size() == 4);
  CHECK(net.parameter_count() == (3 * 20 + 20) + 2 * (20 * 20 + 20) + (20 * 3 + 3));
  for (const auto& l : net.layers()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.w.rows() + l.w.cols()));
    CHECK(l.w.cwiseAbs().maxCoeff() <= limit);
    CHECK(l.b.isZero());
  }
  QRNetwork copy = net;
  copy.set_flat_parameters(net.flat_parameters());
  CHECK(copy == net);
  CHECK_THROWS_AS(copy.set_flat_parameters(std::vector<double>(3)), InvalidArgument);
}

TEST_CASE("forward pass agrees with a reference evaluation") {
  Rng rng(2);
  const QRNetwork net(4, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(4, 7, [&] { return rng.normal(); });
  CHECK((net.forward(x) - reference_forward(net, x)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bias gradients of a zero network on a symmetric batch") {
  Rng rng(3);
  QRNetwork net(2, rng);
  net.set_flat_parameters(std::vector<double>(net.parameter_count(), 0.0));
  Eigen::MatrixXd x(2, 4);
  x << 1, -1, 2, -2, 0.5, 0.5, -0.5, -0.5;
  Eigen::VectorXd y(4);
  y << 1, -1, 2, -2;
  // all heads predict 0; half the targets lie above, half below:
  // d/db_k = (1/3) * ((1 - lv_k) - lv_k) / 2
  const auto g = gradient(net, x, y, 0.1);
  const auto& out = g.grad.back();
  CHECK(out.b(0) == doctest::Approx((0.95 - 0.05) / 6));
  CHECK(out.b(1) == doctest::Approx(0.0));
  CHECK(out.b(2) == doctest::Approx((0.05 - 0.95) / 6));
  for (std::size_t l = 0; l + 1 < g.grad.size(); ++l) {
    CHECK(g.grad[l].b.isZero());
    CHECK(g.grad[l].w.isZero());
  }
  CHECK(out.w.isZero());
}

TEST_CASE("analytic gradient matches central differences away from kinks") {
  Rng rng(77);
  int checked = 0;
  while (checked < 20) {
    QRNetwork net(3, rng);
    for (auto& l : net.layers()) l.b = Eigen::VectorXd::NullaryExpr(l.b.size(), [&] { return rng.uniform(-0.3, 0.3); });
    const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(3, 6, [&] { return rng.uniform(-1, 1); });
    const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(6, [&] { return rng.normal(); });
    double min_pre = 1e300;
    const Eigen::MatrixXd out = reference_forward(net, x, &min_pre);
    double min_gap = 1e300;
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      for (Eigen::Index k = 0; k < 3; ++k) min_gap = std::min(min_gap, std::abs(y(j) - out(k, j)));
    if (min_gap < 1e-3 || min_pre < 1e-3) continue;

    const auto g = gradient(net, x, y, 0.1).flat();
    auto theta = net.flat_parameters();
    std::vector<double> fd(theta.size());
    const double h = 1e-5;
    QRNetwork probe = net;
    for (std::size_t p = 0; p < theta.size(); ++p) {
      const double keep = theta[p];
      theta[p] = keep + h;
      probe.set_flat_parameters(theta);
      const double up = batch_loss(probe, x, y, 0.1);
      theta[p] = keep - h;
      probe.set_flat_parameters(theta);
      const double down = batch_loss(probe, x, y, 0.1);
      theta[p] = keep;
      fd[p] = (up - down) / (2 * h);
    }
    double num = 0, den = 0;
    for (std::size_t p = 0; p < g.size(); ++p) {
      num += (g[p] - fd[p]) * (g[p] - fd[p]);
      den += std::max(g[p] * g[p], fd[p] * fd[p]);
    }
    CHECK(std::sqrt(num / den) < 1e-4);
    ++checked;
  }
}

TEST_CASE("dropped units get exactly zero gradient") {
  Rng rng(5);
  const QRNetwork net(2, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(2, 5, [&] { return rng.normal(); });
  const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(5, [&] { return rng.normal(); });
  auto masks = net.sample_masks(5, 0.0, rng);
  masks[0].row(3).setZero();
  masks[1].row(7).setZero();
  const auto g = gradient(net, x, y, 0.1, &masks);
  CHECK(g.grad[0].w.row(3).isZero(0.0));
  CHECK(g.grad[0].b(3) == 0.0);
  CHECK(g.grad[1].w.col(3).isZero(0.0));
  CHECK(g.grad[1].w.row(7).isZero(0.0));
  CHECK(g.grad[1].b(7) == 0.0);
  CHECK(g.grad[2].w.col(7).isZero(0.0));
  CHECK(g.loss == doctest::Approx(batch_loss(net, x, y, 0.1, &masks)));
}

TEST_CASE("inverted dropout masks") {
  Rng rng(6);
  const QRNetwork net(1, rng);
  const auto masks = net.sample_masks(1000, 0.1, rng);
  REQUIRE(masks.size() == 3);
  double zeros = 0;
  for (const auto& m : masks)
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double v = m.data()[i];
      CHECK((v == 0.0 || v == 1.0 / 0.9));
      zeros += v == 0.0;
    }
  CHECK(zeros / (3 * 20 * 1000) == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("predictions are sorted and crossing is reported") {
  Rng rng(7);
  QRNetwork net(1, rng);
  net.set_flat_parameters(std::vector<double>(net.parameter_count(), 0.0));
  net.layers().back().b << 0.3, 0.1, 0.2;
  const auto model = identity_scaled(net);
  const std::vector<double> s{0.5};
  const auto q = predict_quantiles(model, s);
  CHECK(q.lo == doctest::Approx(0.1));
  CHECK(q.median == doctest::Approx(0.2));
  CHECK(q.hi == doctest::Approx(0.3));
  CHECK(q.crossed);

  net.layers().back().b << 0.1, 0.2, 0.3;
  CHECK_FALSE(predict_quantiles(identity_scaled(net), s).crossed);
}

TEST_CASE("training is deterministic, lowers the loss and round-trips through a checkpoint") {
  auto d = synth::gaussian(300, 4, synth::hetero_sd, 12, Split::Train);
  d.scaler = fit_scaler(d);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 64;
  cfg.learning_rate = 1e-3;
  cfg.seed = 3;
  int logged = 0;
  const auto a = train(d, cfg, [&](int, double) { ++logged; });
  const auto b = train(d, cfg);
  CHECK(logged == 20);
  CHECK(a.net == b.net);
  CHECK(a.epoch_loss == b.epoch_loss);
  REQUIRE(a.epoch_loss.size() == 20);
  CHECK(*std::min_element(a.epoch_loss.begin(), a.epoch_loss.end()) <= a.initial_loss);

  cfg.seed = 4;
  CHECK_FALSE(train(d, cfg).net == a.net);

  const auto text = format_model(a);
  const auto back = parse_model(text);
  CHECK(format_model(back) == text);
  CHECK(back.hash() == a.hash());
  for (const auto& r : d.records) {
    const auto p = predict_quantiles(a, r.state), q = predict_quantiles(back, r.state);
    CHECK(p.lo == q.lo);
    CHECK(p.median == q.median);
    CHECK(p.hi == q.hi);
  }

  auto tampered = text;
  tampered.replace(tampered.find("scaling_hash = ") + 15, 1, "z");
  CHECK_THROWS_AS(parse_model(tampered), FormatError);
  CHECK_THROWS_AS(parse_model("# something else\n"), FormatError);
}

TEST_CASE("training refuses a scaler fit on another split") {
  auto d = synth::gaussian(50, 2, synth::unit_sd, 1, Split::Train);
  CHECK_THROWS_AS(train(d, TrainConfig{}), InvalidArgument);
  auto other = synth::gaussian(50, 2, synth::unit_sd, 2, Split::Train);
  d.scaler = fit_scaler(other);
  CHECK_THROWS_AS(train(d, TrainConfig{}), InvalidArgument);
  d.scaler = fit_scaler(d);
  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(train(d, bad), InvalidArgument);
}

TEST_CASE("training aborts on a non-finite loss") {
  auto d = synth::gaussian(50, 2, synth::unit_sd, 1, Split::Train);
  d.scaler = fit_scaler(d);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 1e308;
  CHECK_THROWS_AS(train(d, cfg), NumericError);
}
