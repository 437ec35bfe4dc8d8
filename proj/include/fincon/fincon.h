#ifndef FINCON_FINCON_H
#define FINCON_FINCON_H

#include <stddef.h>
#include <stdint.h>

#if defined(FINCON_BUILDING_LIBRARY)
#define FINCON_API __attribute__((visibility("default")))
#else
#define FINCON_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fincon_status {
  FINCON_OK = 0,
  FINCON_ERR_CONFIG = 1,
  FINCON_ERR_DATA = 2,
  FINCON_ERR_NOT_FOUND = 3,
  FINCON_ERR_MISSING_ARTIFACTS = 4,
  FINCON_ERR_INVALID_ARGUMENT = 5,
  FINCON_ERR_GATEWAY = 6,
  FINCON_ERR_NUMERIC = 7,
  FINCON_ERR_INTERNAL = 8
} fincon_status;

/* Direction labels for the numeric helpers. */
enum { FINCON_SHORT = -1, FINCON_NEUTRAL = 0, FINCON_LONG = 1 };

typedef struct fincon_engine fincon_engine;

typedef struct fincon_train_summary {
  size_t episodes;
  size_t belief_updates;
  double last_objective;
  double last_overlap; /* 0 when only one episode ran */
  int converged;       /* 1 when stopped before the episode limit */
} fincon_train_summary;

typedef struct fincon_metrics {
  size_t days;
  double cumulative_return_pct;
  double sharpe_ratio;
  int sharpe_defined;
  double max_drawdown_pct;
  double var;
  double cvar;
  size_t belief_update_calls;
} fincon_metrics;

/* Message and error-code name of the last failure on this thread. */
FINCON_API const char* fincon_last_error(void);
FINCON_API const char* fincon_last_error_code(void);
FINCON_API const char* fincon_version(void);

/* Parses the config file; overrides and other settings apply to later runs. */
FINCON_API fincon_status fincon_engine_create(const char* config_path, fincon_engine** out);
FINCON_API void fincon_engine_destroy(fincon_engine* engine);
FINCON_API fincon_status fincon_engine_add_override(fincon_engine* engine, const char* assignment);
FINCON_API fincon_status fincon_engine_set_mock_script(fincon_engine* engine, const char* path);
FINCON_API fincon_status fincon_engine_set_seed(fincon_engine* engine, uint64_t seed);
FINCON_API fincon_status fincon_engine_set_run_dir(fincon_engine* engine, const char* run_dir);

FINCON_API fincon_status fincon_validate_data(fincon_engine* engine);
FINCON_API fincon_status fincon_train(fincon_engine* engine, fincon_train_summary* out);
FINCON_API fincon_status fincon_test(fincon_engine* engine, fincon_metrics* out);
FINCON_API fincon_status fincon_select_stocks(fincon_engine* engine);
FINCON_API fincon_status fincon_report(const char* run_dir, fincon_metrics* out);

FINCON_API fincon_status fincon_cvar(const double* pnl, size_t n, double alpha, double* var_out, double* cvar_out);
FINCON_API fincon_status fincon_overlap_percentage(const int* a, const int* b, size_t n, double* out);
/* sigma is row-major n x n; weights_out has n entries. */
FINCON_API fincon_status fincon_solve_mean_variance(const double* mu, const double* sigma, const int* directions,
                                                    size_t n, double* weights_out, double* objective_out);
FINCON_API fincon_status fincon_cumulative_return(const double* pnl, size_t n, double* out);
FINCON_API fincon_status fincon_sharpe_ratio(const double* pnl, size_t n, double risk_free_daily, double* out);
FINCON_API fincon_status fincon_max_drawdown(const double* values, size_t n, double* out);
FINCON_API fincon_status fincon_wilcoxon(const double* a, const double* b, size_t n, double* statistic,
                                         double* p_value);

#ifdef __cplusplus
}
#endif

#endif
