/* C interface to the lplc limit-point / limit-circle classifier. */

#ifndef LPLC_H
#define LPLC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LplcStatus {
  LPLC_STATUS_OK = 0,
  LPLC_STATUS_NULL_POINTER = 1,
  LPLC_STATUS_INVALID_UTF8 = 2,
  // Bad JSON or a potential that does not parse.
  LPLC_STATUS_PARSE_ERROR = 3,
  LPLC_STATUS_INVALID_ARGUMENT = 4,
  LPLC_STATUS_NOT_ADMISSIBLE = 5,
  LPLC_STATUS_ASSUMPTION_VIOLATED = 6,
  LPLC_STATUS_BUDGET_DIVERGES = 7,
  LPLC_STATUS_NUMERICAL_FAILURE = 8,
  // A Rust panic was caught at the boundary.
  LPLC_STATUS_PANIC = 9,
} LplcStatus;

typedef enum LplcVerdict {
  LPLC_VERDICT_LIMIT_POINT_I = 0,
  // Every solution is square integrable; limit point II and limit circle not told apart.
  LPLC_VERDICT_ALL_SOLUTIONS_L2 = 1,
  LPLC_VERDICT_LIMIT_CIRCLE = 2,
  LPLC_VERDICT_INCONCLUSIVE = 3,
} LplcVerdict;

// A problem on a ray together with its classification settings.
typedef struct LplcProblem LplcProblem;

typedef struct LplcReport LplcReport;

typedef struct LplcComplex {
  double re;
  double im;
} LplcComplex;

typedef struct LplcAdmissiblePair {
  double theta;
  struct LplcComplex k;
  double margin;
  double lambda_gap;
  double eps_geom;
} LplcAdmissiblePair;

// Leading WKB pair at one point. The log-moduli stay finite where the
// values themselves under- or overflow.
typedef struct LplcWkbSample {
  double x;
  struct LplcComplex y_lead;
  struct LplcComplex yhat_lead;
  struct LplcComplex phase;
  double log_abs_y;
  double log_abs_yhat;
  // Relative error bound `2 e^{2M} - 2`.
  double envelope;
} LplcWkbSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *lplc_version(void);

// Message of the last failure on this thread, or an empty string. The
// pointer stays valid until the next failing call on the same thread.
const char *lplc_last_error_message(void);

// Build a problem from the endpoint, angle, spectral parameter and a
// potential expression in `x`. Default classification settings apply.
//
// # Safety
// `potential` must be a NUL-terminated string and `out` writable.
enum LplcStatus lplc_problem_new(double a,
                                 double phi,
                                 double lambda_re,
                                 double lambda_im,
                                 const char *potential,
                                 struct LplcProblem **out);

// Build a problem from the same JSON the command line tool reads,
// including an optional `config` object.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum LplcStatus lplc_problem_from_json(const char *json, struct LplcProblem **out);

// Turn the ODE oracle on or off for later classifications.
//
// # Safety
// `problem` must come from this library and not be freed.
enum LplcStatus lplc_problem_set_oracle(struct LplcProblem *problem, bool enabled);

// # Safety
// `problem` must be null or come from this library, and is freed once.
void lplc_problem_free(struct LplcProblem *problem);

// Admissible pair `(theta, K)` for the problem.
//
// # Safety
// `problem` must come from this library and `out` be writable.
enum LplcStatus lplc_admissible_pair(const struct LplcProblem *problem,
                                     struct LplcAdmissiblePair *out);

// Leading WKB solutions at `x >= a`. The error budget is computed on the
// first call and kept with the handle.
//
// # Safety
// `problem` must come from this library and `out` be writable.
enum LplcStatus lplc_wkb_eval(struct LplcProblem *problem, double x, struct LplcWkbSample *out);

// Run the classification. On success `*out` owns a report.
//
// # Safety
// `problem` must come from this library and `out` be writable.
enum LplcStatus lplc_classify(const struct LplcProblem *problem, struct LplcReport **out);

// # Safety
// `report` must come from [`lplc_classify`] and `out` be writable.
enum LplcStatus lplc_report_verdict(const struct LplcReport *report, enum LplcVerdict *out);

// The report as JSON, identical to `lplc classify` output. Free the
// string with [`lplc_string_free`].
//
// # Safety
// `report` must come from [`lplc_classify`] and `out` be writable.
enum LplcStatus lplc_report_json(const struct LplcReport *report, char **out);

// # Safety
// `report` must be null or come from [`lplc_classify`], and is freed once.
void lplc_report_free(struct LplcReport *report);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void lplc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LPLC_H */
