#include "qpm/qpm.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "qpm/conformal.hpp"
#include "qpm/error.hpp"
#include "qpm/harness.hpp"
#include "qpm/qr.hpp"
#include "qpm/stl.hpp"

struct qpm_formula {
  qpm::stl::Formula phi;
  std::vector<std::string> var_names;
};

struct qpm_experiment {
  qpm::KeyValueFile config;
  std::filesystem::path base_dir;
  std::filesystem::path out_dir;
  qpm_log_fn log = nullptr;
  void* log_user = nullptr;
};

struct qpm_monitor {
  qpm::QRModel model;
  qpm::CalibrationResult cal;
};

namespace {

thread_local std::string last_error;

qpm_status fail(qpm_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

qpm_status from_kind(qpm::StageError::Kind k) {
  using K = qpm::StageError::Kind;
  switch (k) {
    case K::InvalidArgument: return QPM_ERR_INVALID_ARGUMENT;
    case K::Parse: return QPM_ERR_PARSE;
    case K::Format: return QPM_ERR_FORMAT;
    case K::Io: return QPM_ERR_IO;
    case K::Numeric: return QPM_ERR_NUMERIC;
    case K::Other: return QPM_ERR_INTERNAL;
  }
  return QPM_ERR_INTERNAL;
}

template <class Fn>
qpm_status guard(Fn&& fn) {
  try {
    fn();
    return QPM_OK;
  } catch (const qpm::StageError& e) {
    return fail(from_kind(e.kind()), e.what());
  } catch (const qpm::ParseError& e) {
    return fail(QPM_ERR_PARSE, e.what());
  } catch (const qpm::InvalidArgument& e) {
    return fail(QPM_ERR_INVALID_ARGUMENT, e.what());
  } catch (const qpm::FormatError& e) {
    return fail(QPM_ERR_FORMAT, e.what());
  } catch (const qpm::IoError& e) {
    return fail(QPM_ERR_IO, e.what());
  } catch (const qpm::NumericError& e) {
    return fail(QPM_ERR_NUMERIC, e.what());
  } catch (const std::bad_alloc&) {
    return fail(QPM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(QPM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(QPM_ERR_INTERNAL, "unknown error");
  }
}

#define QPM_REQUIRE(cond, msg) \
  if (!(cond)) return fail(QPM_ERR_INVALID_ARGUMENT, msg)

qpm::Trajectory make_trajectory(const double* states, std::size_t length, std::size_t dim) {
  if (!states) throw qpm::InvalidArgument("states is null");
  return qpm::Trajectory(dim, std::vector<double>(states, states + length * dim));
}

qpm::Experiment open_experiment(const qpm_experiment* exp) {
  auto cfg = qpm::ExperimentConfig::from_kv(exp->config, exp->base_dir);
  qpm::Logger logger;
  if (exp->log) {
    logger = [fn = exp->log, user = exp->log_user](std::string_view msg) {
      const std::string copy(msg);
      fn(copy.c_str(), user);
    };
  }
  return qpm::Experiment(std::move(cfg), exp->out_dir, std::move(logger));
}

}  // namespace

extern "C" {

const char* qpm_version(void) { return "1.0.0"; }

const char* qpm_last_error(void) { return last_error.c_str(); }

const char* qpm_status_name(qpm_status status) {
  switch (status) {
    case QPM_OK: return "ok";
    case QPM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QPM_ERR_PARSE: return "parse error";
    case QPM_ERR_IO: return "i/o error";
    case QPM_ERR_FORMAT: return "format error";
    case QPM_ERR_NUMERIC: return "numeric error";
    case QPM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

qpm_status qpm_formula_parse(const char* text, const char* const* var_names, size_t n_vars,
                             qpm_formula** out) {
  QPM_REQUIRE(text && out, "qpm_formula_parse: text and out must not be null");
  *out = nullptr;
  return guard([&] {
    std::vector<std::string> names;
    if (var_names) {
      for (size_t i = 0; i < n_vars; ++i) {
        if (!var_names[i]) throw qpm::InvalidArgument("variable name " + std::to_string(i) + " is null");
        names.emplace_back(var_names[i]);
      }
    } else {
      names = qpm::stl::default_var_names(n_vars);
    }
    auto phi = qpm::stl::parse_formula(text, names);
    *out = new qpm_formula{std::move(phi), std::move(names)};
  });
}

void qpm_formula_free(qpm_formula* phi) { delete phi; }

qpm_status qpm_formula_horizon(const qpm_formula* phi, int* out) {
  QPM_REQUIRE(phi && out, "qpm_formula_horizon: null argument");
  return guard([&] { *out = qpm::stl::horizon(phi->phi); });
}

qpm_status qpm_formula_robustness(const qpm_formula* phi, const double* states, size_t length,
                                  size_t dim, size_t t, double* out) {
  QPM_REQUIRE(phi && out, "qpm_formula_robustness: null argument");
  return guard([&] { *out = qpm::stl::robustness(phi->phi, make_trajectory(states, length, dim), t); });
}

qpm_status qpm_formula_satisfied(const qpm_formula* phi, const double* states, size_t length,
                                 size_t dim, size_t t, int* out) {
  QPM_REQUIRE(phi && out, "qpm_formula_satisfied: null argument");
  return guard([&] { *out = qpm::stl::satisfied(phi->phi, make_trajectory(states, length, dim), t); });
}

qpm_status qpm_formula_to_string(const qpm_formula* phi, char* buf, size_t cap, size_t* needed) {
  QPM_REQUIRE(phi, "qpm_formula_to_string: null formula");
  return guard([&] {
    const auto text = qpm::stl::to_string(phi->phi, phi->var_names);
    if (needed) *needed = text.size() + 1;
    if (buf && cap > 0) {
      const size_t n = std::min(cap - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
  });
}

qpm_status qpm_experiment_open(const char* config_path, const char* out_dir, qpm_experiment** out) {
  QPM_REQUIRE(config_path && out_dir && out, "qpm_experiment_open: null argument");
  *out = nullptr;
  return guard([&] {
    const std::filesystem::path path(config_path);
    auto exp = std::make_unique<qpm_experiment>();
    exp->config = qpm::KeyValueFile::load(path);
    exp->base_dir = path.parent_path();
    exp->out_dir = out_dir;
    qpm::ExperimentConfig::from_kv(exp->config, exp->base_dir);
    *out = exp.release();
  });
}

qpm_status qpm_experiment_set(qpm_experiment* exp, const char* key, const char* value) {
  QPM_REQUIRE(exp && key && value, "qpm_experiment_set: null argument");
  return guard([&] {
    auto copy = exp->config;
    copy.set(key, value);
    qpm::ExperimentConfig::from_kv(copy, exp->base_dir);
    exp->config = std::move(copy);
  });
}

qpm_status qpm_experiment_set_log(qpm_experiment* exp, qpm_log_fn fn, void* user) {
  QPM_REQUIRE(exp, "qpm_experiment_set_log: null experiment");
  exp->log = fn;
  exp->log_user = user;
  return QPM_OK;
}

qpm_status qpm_experiment_run(qpm_experiment* exp, qpm_stage stage) {
  QPM_REQUIRE(exp, "qpm_experiment_run: null experiment");
  return guard([&] {
    auto e = open_experiment(exp);
    switch (stage) {
      case QPM_STAGE_GENERATE: e.generate(); break;
      case QPM_STAGE_TRAIN: e.train(); break;
      case QPM_STAGE_CALIBRATE: e.calibrate(); break;
      case QPM_STAGE_EVALUATE: e.evaluate(); break;
      case QPM_STAGE_RUN_ALL: e.run_all(); break;
      default: throw qpm::InvalidArgument("unknown stage " + std::to_string(static_cast<int>(stage)));
    }
  });
}

qpm_status qpm_experiment_compose(qpm_experiment* exp, qpm_compose_op op, qpm_compose_strategy strategy) {
  QPM_REQUIRE(exp, "qpm_experiment_compose: null experiment");
  QPM_REQUIRE(op >= QPM_OP_AND && op <= QPM_OP_NOT, "qpm_experiment_compose: unknown operation");
  QPM_REQUIRE(strategy == QPM_STRATEGY_UNION || strategy == QPM_STRATEGY_RECALIBRATED,
              "qpm_experiment_compose: unknown strategy");
  return guard([&] {
    auto e = open_experiment(exp);
    const qpm::ComposeOp ops[] = {qpm::ComposeOp::And, qpm::ComposeOp::Or, qpm::ComposeOp::Not};
    e.compose(ops[op], strategy == QPM_STRATEGY_UNION ? qpm::ComposeStrategy::Union
                                                      : qpm::ComposeStrategy::Recalibrated);
  });
}

qpm_status qpm_experiment_sequential(qpm_experiment* exp, int length) {
  QPM_REQUIRE(exp, "qpm_experiment_sequential: null experiment");
  return guard([&] {
    auto e = open_experiment(exp);
    e.sequential(length > 0 ? length : e.config().sequential_length);
  });
}

void qpm_experiment_free(qpm_experiment* exp) { delete exp; }

qpm_status qpm_monitor_load(const char* model_path, const char* calibration_path, qpm_monitor** out) {
  QPM_REQUIRE(model_path && calibration_path && out, "qpm_monitor_load: null argument");
  *out = nullptr;
  return guard([&] {
    auto mon = std::make_unique<qpm_monitor>();
    mon->model = qpm::load_model(model_path);
    mon->cal = qpm::load_calibration(calibration_path);
    if (mon->cal.model_hash != mon->model.hash())
      throw qpm::FormatError(std::string(calibration_path) + " was computed for a different model");
    *out = mon.release();
  });
}

qpm_status qpm_monitor_state_dim(const qpm_monitor* mon, size_t* out) {
  QPM_REQUIRE(mon && out, "qpm_monitor_state_dim: null argument");
  *out = mon->model.state_dim();
  return QPM_OK;
}

qpm_status qpm_monitor_tau(const qpm_monitor* mon, double* out) {
  QPM_REQUIRE(mon && out, "qpm_monitor_tau: null argument");
  *out = mon->cal.tau;
  return QPM_OK;
}

qpm_status qpm_monitor_predict(const qpm_monitor* mon, const double* state, size_t dim, qpm_interval* pi,
                               qpm_interval* cpi, double* median) {
  QPM_REQUIRE(mon && state, "qpm_monitor_predict: null argument");
  QPM_REQUIRE(dim == mon->model.state_dim(), "qpm_monitor_predict: state dimension does not match the model");
  return guard([&] {
    const auto q = qpm::predict_quantiles(mon->model, std::span<const double>(state, dim));
    const auto raw = qpm::to_interval(q);
    const auto cal = qpm::conformalize(raw, mon->cal.tau, mon->cal.alpha);
    if (pi) *pi = {raw.lo, raw.hi, 0, 0};
    if (cpi) *cpi = {cal.lo, cal.hi, 1, cal.collapsed ? 1 : 0};
    if (median) *median = q.median;
  });
}

void qpm_monitor_free(qpm_monitor* mon) { delete mon; }

}  // extern "C"
