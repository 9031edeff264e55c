#include "doctest.h"

#include <set>

#include "qpm/datagen.hpp"
#include "qpm/error.hpp"
#include "qpm/harness.hpp"
#include "qpm/quantile.hpp"

using namespace qpm;

namespace {

struct Fixture {
  std::unique_ptr<ProcessModel> model = make_model("mrh2");
  std::string text = "G[0,20](v1 >= 17 and v1 <= 23)";
  stl::Formula phi = stl::parse_formula(text, model->var_names());
};

}  // namespace

TEST_CASE("label_state") {
  CHECK(label_state(std::vector<double>(50, 1.0), 0.1) == 1);
  CHECK(label_state(std::vector<double>(50, -1.0), 0.1) == -1);
  std::vector<double> mixed(25, -1.0);
  mixed.insert(mixed.end(), 25, 1.0);
  CHECK(label_state(mixed, 0.1) == 0);
  CHECK(label_state(std::vector<double>{0.0}, 0.1) == 0);
  CHECK_THROWS_AS(label_state(std::vector<double>{}, 0.1), InvalidArgument);
}

TEST_CASE("empirical quantile convention") {
  const std::vector<double> v{5, 1, 4, 2, 3, 6, 8, 7, 10, 9};
  CHECK(quantile_rank(0.9, 10) == 9);
  CHECK(empirical_quantile(v, 0.9) == 9);
  CHECK(empirical_quantile(v, 0.05) == 1);
  CHECK(empirical_quantile(v, 0.95) == 10);
  CHECK(empirical_quantile(v, 1.5) == 10);
  CHECK(empirical_quantile(v, 0.0) == 1);
}

TEST_CASE("a single state with a single sample") {
  Fixture f;
  const auto d = generate_dataset(*f.model, f.phi, f.text, 1, 1, 0.1, 5);
  REQUIRE(d.size() == 1);
  const double r = d.records[0].robustness.at(0);
  CHECK(d.records[0].label == (r > 0 ? 1 : r < 0 ? -1 : 0));
}

TEST_CASE("generation is deterministic and round-trips through the file format") {
  Fixture f;
  auto d = generate_dataset(*f.model, f.phi, f.text, 20, 8, 0.1, 3);
  d.scaler = fit_scaler(d);
  const auto text = format_dataset(d);
  auto again = generate_dataset(*f.model, f.phi, f.text, 20, 8, 0.1, 3);
  again.scaler = fit_scaler(again);
  CHECK(format_dataset(again) == text);

  const auto back = parse_dataset(text);
  CHECK(back.records == d.records);
  CHECK(back.scaler == d.scaler);
  CHECK(back.property == f.text);
  CHECK(back.var_names == f.model->var_names());
  CHECK(format_dataset(back) == text);
}

TEST_CASE("edited dataset files are rejected") {
  Fixture f;
  const auto d = generate_dataset(*f.model, f.phi, f.text, 5, 4, 0.1, 3);
  auto text = format_dataset(d);
  const auto pos = text.rfind(",1\n") != std::string::npos ? text.rfind(",1\n") : text.rfind(",0\n");
  text[pos + 1] = text[pos + 1] == '1' ? '0' : '1';
  CHECK_THROWS_AS(parse_dataset(text), FormatError);
  CHECK_THROWS_AS(parse_dataset("not a dataset"), FormatError);
}

TEST_CASE("stored labels match a recomputation from the stored samples") {
  Fixture f;
  const auto d = generate_dataset(*f.model, f.phi, f.text, 200, 20, 0.1, 11);
  std::set<int> seen;
  for (const auto& r : d.records) {
    CHECK(r.label == label_state(r.robustness, d.alpha));
    seen.insert(r.label);
  }
  CHECK(seen.size() == 3);
}

TEST_CASE("splits use disjoint streams") {
  Fixture f;
  std::set<std::string> hashes;
  std::size_t total = 0;
  for (Split s : {Split::Train, Split::Calibration, Split::Test}) {
    const auto d = generate_dataset(*f.model, f.phi, f.text, 100, 2, 0.1, 7, s);
    for (const auto& r : d.records) {
      std::string key;
      for (double x : r.state) key += format_double(x) + ",";
      hashes.insert(hex64(fnv1a(key)));
      ++total;
    }
  }
  CHECK(hashes.size() == total);
}

TEST_CASE("multi-formula generation shares trajectories") {
  Fixture f;
  const auto names = f.model->var_names();
  const std::vector<std::string> texts{f.text, "G[0,20](v2 >= 17 and v2 <= 23)"};
  std::vector<stl::Formula> phis{f.phi, stl::parse_formula(texts[1], names)};
  phis.push_back(stl::Formula::conjunction(phis[0], phis[1]));
  std::vector<std::string> all = texts;
  all.push_back("both");
  const auto sets = generate_datasets(*f.model, phis, all, 30, 10, 0.1, 2, Split::Calibration);
  const auto single = generate_dataset(*f.model, phis[0], texts[0], 30, 10, 0.1, 2, Split::Calibration);
  CHECK(sets[0].records == single.records);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 10; ++j)
      CHECK(sets[2].records[i].robustness[j] ==
            std::min(sets[0].records[i].robustness[j], sets[1].records[i].robustness[j]));
}

TEST_CASE("generation preconditions") {
  Fixture f;
  CHECK_THROWS_AS(generate_dataset(*f.model, f.phi, f.text, 0, 5, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(generate_dataset(*f.model, f.phi, f.text, 5, 0, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(generate_dataset(*f.model, f.phi, f.text, 5, 5, 0.6, 1), InvalidArgument);
  const auto long_phi = stl::parse_formula("G[0,50](v1 > 0)", f.model->var_names());
  CHECK_THROWS_AS(generate_dataset(*f.model, long_phi, "long", 5, 5, 0.1, 1), InvalidArgument);
}

TEST_CASE("scaler") {
  Dataset d;
  d.records = {{{0.0, 3.0}, {-2.0, 1.0}, 1}, {{10.0, 3.0}, {4.0}, 1}};
  d.records[1].robustness = {4.0, 0.0};
  const auto s = fit_scaler(d);
  CHECK(s.apply(0, 5.0) == 0.0);
  CHECK(s.apply(0, 0.0) == -1.0);
  CHECK(s.apply(0, 10.0) == 1.0);
  CHECK(s.apply(0, 12.0) == doctest::Approx(1.4));
  CHECK(s.degenerate(1));
  CHECK_FALSE(s.degenerate(0));
  CHECK(s.apply(1, 3.0) == 0.0);
  CHECK(s.apply(1, 99.0) == 0.0);
  CHECK(s.apply_target(-2.0) == -1.0);
  CHECK(s.apply_target(4.0) == 1.0);
  CHECK(s.source_hash() == d.content_hash());
  for (double x : {-3.0, 0.1, 7.7, 12.5}) {
    CHECK(s.invert(0, s.apply(0, x)) == doctest::Approx(x).epsilon(1e-12));
    CHECK(s.invert_target(s.apply_target(x)) == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK(s.invert_target_length(2.0) == doctest::Approx(6.0));
  CHECK_THROWS_AS(fit_scaler(Dataset{}), InvalidArgument);
}

TEST_CASE("paper dataset sizes for MRH2") {
  const auto cfg = ExperimentConfig::from_kv(KeyValueFile::parse("model = mrh2"));
  CHECK(cfg.n_train == 2000);
  CHECK(cfg.n_cal == 1000);
  CHECK(cfg.n_test == 200);
  CHECK(cfg.m == 50);
  CHECK(cfg.m_test == 500);
}
