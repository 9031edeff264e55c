#include "qpm/eval.hpp"

#include "qpm/error.hpp"
#include "qpm/keyvalue.hpp"
#include "qpm/quantile.hpp"

namespace qpm {

int predicted_sign(const PredictionInterval& pi) {
  if (pi.lo > 0) return 1;
  if (pi.hi < 0) return -1;
  return 0;
}

Classification classify(const PredictionInterval& pi, int label) {
  const int p = predicted_sign(pi);
  Classification c;
  if (p == label) c.outcome = Outcome::Correct;
  else if (p == 0) c.outcome = Outcome::Uncertain;
  else c.outcome = Outcome::Wrong;
  c.false_positive = p == 1 && label != 1;
  return c;
}

double coverage(std::span<const PredictionInterval> pis, const Dataset& test) {
  if (pis.size() != test.size()) throw InvalidArgument("coverage: one interval per test state required");
  std::size_t inside = 0, total = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    for (double y : test.records[i].robustness) inside += pis[i].contains(y);
    total += test.records[i].robustness.size();
  }
  if (total == 0) throw InvalidArgument("coverage: no test samples");
  return 100.0 * static_cast<double>(inside) / static_cast<double>(total);
}

double efficiency(std::span<const PredictionInterval> pis) {
  if (pis.empty()) throw InvalidArgument("efficiency: no intervals");
  double sum = 0.0;
  for (const auto& pi : pis) sum += pi.width();
  return sum / static_cast<double>(pis.size());
}

double eqr_width(const Dataset& test, double alpha) {
  if (test.records.empty()) throw InvalidArgument("eqr_width: empty test set");
  double sum = 0.0;
  for (const auto& r : test.records)
    sum += empirical_quantile(r.robustness, 1 - alpha / 2) - empirical_quantile(r.robustness, alpha / 2);
  return sum / static_cast<double>(test.size());
}

Metrics evaluate(std::span<const PredictionInterval> pis, const Dataset& test, double alpha) {
  if (pis.size() != test.size()) throw InvalidArgument("evaluate: one interval per test state required");
  if (test.records.empty()) throw InvalidArgument("evaluate: empty test set");
  std::size_t counts[3] = {0, 0, 0};
  std::size_t fp = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto c = classify(pis[i], test.records[i].label);
    ++counts[static_cast<int>(c.outcome)];
    fp += c.false_positive;
  }
  const double n = static_cast<double>(test.size());
  Metrics m;
  m.correct = 100.0 * static_cast<double>(counts[0]) / n;
  m.uncertain = 100.0 * static_cast<double>(counts[1]) / n;
  m.wrong = 100.0 * static_cast<double>(counts[2]) / n;
  m.false_positive = 100.0 * static_cast<double>(fp) / n;
  m.coverage = coverage(pis, test);
  m.efficiency = efficiency(pis);
  m.eqr_width = eqr_width(test, alpha);
  return m;
}

std::string metrics_header(std::span<const std::string> prefix_names) {
  std::string out;
  for (const auto& p : prefix_names) out += p + ",";
  return out + "correct,uncertain,wrong,fp,coverage,efficiency,eqr_width";
}

std::string metrics_row(const Metrics& m, std::span<const std::string> prefix) {
  std::string out;
  for (const auto& p : prefix) out += p + ",";
  for (double v : {m.correct, m.uncertain, m.wrong, m.false_positive, m.coverage, m.efficiency})
    out += format_double(v) + ",";
  return out + format_double(m.eqr_width);
}

}  // namespace qpm
