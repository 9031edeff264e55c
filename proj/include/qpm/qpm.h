/* qpm: quantitative predictive monitoring of STL requirements.
 *
 * C interface over the C++ core. Objects are opaque handles owned by the
 * caller and released with the matching *_free function. Every call that can
 * fail returns a qpm_status; on failure qpm_last_error() describes the cause
 * (per thread, valid until the next failing call on that thread). */
#ifndef QPM_QPM_H
#define QPM_QPM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef QPM_BUILDING_LIBRARY
#    define QPM_API __declspec(dllexport)
#  else
#    define QPM_API __declspec(dllimport)
#  endif
#else
#  define QPM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qpm_status {
  QPM_OK = 0,
  QPM_ERR_INVALID_ARGUMENT = 1,
  QPM_ERR_PARSE = 2,
  QPM_ERR_IO = 3,
  QPM_ERR_FORMAT = 4,
  QPM_ERR_NUMERIC = 5,
  QPM_ERR_INTERNAL = 6
} qpm_status;

typedef enum qpm_stage {
  QPM_STAGE_GENERATE = 0,
  QPM_STAGE_TRAIN = 1,
  QPM_STAGE_CALIBRATE = 2,
  QPM_STAGE_EVALUATE = 3,
  QPM_STAGE_RUN_ALL = 4
} qpm_stage;

typedef enum qpm_compose_op { QPM_OP_AND = 0, QPM_OP_OR = 1, QPM_OP_NOT = 2 } qpm_compose_op;

typedef enum qpm_compose_strategy {
  QPM_STRATEGY_UNION = 0,
  QPM_STRATEGY_RECALIBRATED = 1
} qpm_compose_strategy;

typedef struct qpm_interval {
  double lo;
  double hi;
  int calibrated;
  int collapsed;
} qpm_interval;

typedef struct qpm_formula qpm_formula;
typedef struct qpm_experiment qpm_experiment;
typedef struct qpm_monitor qpm_monitor;

typedef void (*qpm_log_fn)(const char* message, void* user);

QPM_API const char* qpm_version(void);
QPM_API const char* qpm_last_error(void);
QPM_API const char* qpm_status_name(qpm_status status);

/* --- formulas --- */

/* var_names may be NULL, in which case variables are x0..x{n_vars-1}. */
QPM_API qpm_status qpm_formula_parse(const char* text, const char* const* var_names, size_t n_vars,
                                     qpm_formula** out);
QPM_API void qpm_formula_free(qpm_formula* phi);
QPM_API qpm_status qpm_formula_horizon(const qpm_formula* phi, int* out);
/* states: length x dim values, row-major. */
QPM_API qpm_status qpm_formula_robustness(const qpm_formula* phi, const double* states, size_t length,
                                          size_t dim, size_t t, double* out);
QPM_API qpm_status qpm_formula_satisfied(const qpm_formula* phi, const double* states, size_t length,
                                         size_t dim, size_t t, int* out);
/* Writes at most cap bytes including the terminator; *needed gets the full size. */
QPM_API qpm_status qpm_formula_to_string(const qpm_formula* phi, char* buf, size_t cap, size_t* needed);

/* --- experiments --- */

QPM_API qpm_status qpm_experiment_open(const char* config_path, const char* out_dir,
                                       qpm_experiment** out);
/* Override one config key (same keys as the config file) before running. */
QPM_API qpm_status qpm_experiment_set(qpm_experiment* exp, const char* key, const char* value);
QPM_API qpm_status qpm_experiment_set_log(qpm_experiment* exp, qpm_log_fn fn, void* user);
QPM_API qpm_status qpm_experiment_run(qpm_experiment* exp, qpm_stage stage);
QPM_API qpm_status qpm_experiment_compose(qpm_experiment* exp, qpm_compose_op op,
                                          qpm_compose_strategy strategy);
QPM_API qpm_status qpm_experiment_sequential(qpm_experiment* exp, int length);
QPM_API void qpm_experiment_free(qpm_experiment* exp);

/* --- monitors --- */

QPM_API qpm_status qpm_monitor_load(const char* model_path, const char* calibration_path,
                                    qpm_monitor** out);
QPM_API qpm_status qpm_monitor_state_dim(const qpm_monitor* mon, size_t* out);
QPM_API qpm_status qpm_monitor_tau(const qpm_monitor* mon, double* out);
/* pi and cpi may each be NULL. */
QPM_API qpm_status qpm_monitor_predict(const qpm_monitor* mon, const double* state, size_t dim,
                                       qpm_interval* pi, qpm_interval* cpi, double* median);
QPM_API void qpm_monitor_free(qpm_monitor* mon);

#ifdef __cplusplus
}
#endif

#endif
