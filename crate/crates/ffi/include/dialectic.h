#ifndef DIALECTIC_H
#define DIALECTIC_H

#include <stddef.h>
#include <stdint.h>

typedef enum DialecticStatus {
  DIALECTIC_STATUS_OK = 0,
  DIALECTIC_STATUS_NULL_POINTER = 1,
  DIALECTIC_STATUS_INVALID_UTF8 = 2,
  DIALECTIC_STATUS_PARSE = 3,
  DIALECTIC_STATUS_RUN = 4,
  DIALECTIC_STATUS_INVALID_ARGUMENT = 5,
  DIALECTIC_STATUS_OUT_OF_RANGE = 6,
  DIALECTIC_STATUS_PANIC = 7,
} DialecticStatus;

typedef struct DialecticReport DialecticReport;

// A finished run with its stability estimate.
typedef struct DialecticRun DialecticRun;

// A loaded system: rule table, replacement map and variant tag.
typedef struct DialecticSystem DialecticSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *dialectic_last_error(void);

// # Safety
// `s` must come from this library, or be NULL.
void dialectic_string_free(char *s);

// Parses a system-spec text into `*out`.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum DialecticStatus dialectic_system_parse(const char *text, struct DialecticSystem **out);

// # Safety
// `system` must come from [`dialectic_system_parse`], or be NULL.
void dialectic_system_free(struct DialecticSystem *system);

// `'d'`, `'p'` or `'q'`; 0 for NULL.
//
// # Safety
// `system` must be a live handle or NULL.
char dialectic_system_variant(const struct DialecticSystem *system);

// Canonical text of the system, for round-tripping.
//
// # Safety
// `system` must be a live handle or NULL.
char *dialectic_system_to_string(const struct DialecticSystem *system);

// Runs `horizon` stages and estimates stability over `window`.
//
// # Safety
// `system` must be a live handle and `out` a valid pointer.
enum DialecticStatus dialectic_system_run(const struct DialecticSystem *system,
                                          uint64_t horizon,
                                          uint64_t window,
                                          struct DialecticRun **out);

// # Safety
// `run` must come from [`dialectic_system_run`], or be NULL.
void dialectic_run_free(struct DialecticRun *run);

// Length of the final belief string.
//
// # Safety
// `run` must be a live handle or NULL.
size_t dialectic_run_length(const struct DialecticRun *run);

// Entry `n` of the final string: the axiom index, or -1 for a gap.
//
// # Safety
// `run` must be a live handle and `out` a valid pointer.
enum DialecticStatus dialectic_run_token(const struct DialecticRun *run, size_t n, int64_t *out);

// # Safety
// `run` must be a live handle or NULL.
size_t dialectic_run_stable_prefix(const struct DialecticRun *run);

// Number of positions revised inside the final window.
//
// # Safety
// `run` must be a live handle or NULL.
size_t dialectic_run_loop_suspects(const struct DialecticRun *run);

// The tab-separated trace file.
//
// # Safety
// `run` must be a live handle or NULL.
char *dialectic_run_trace(const struct DialecticRun *run);

// Diagonalizes against an opponent family file text; NULL selects the
// bundled family. `fuel_cap` 0 means no cap.
//
// # Safety
// `family` must be NULL or a NUL-terminated string; `out` a valid pointer.
enum DialecticStatus dialectic_diagonalize(const char *family,
                                           uint64_t horizon,
                                           uint64_t window,
                                           uint64_t fuel_cap,
                                           struct DialecticReport **out);

// # Safety
// `report` must come from [`dialectic_diagonalize`], or be NULL.
void dialectic_report_free(struct DialecticReport *report);

// # Safety
// `report` must be a live handle or NULL.
size_t dialectic_report_verdict_count(const struct DialecticReport *report);

// Verdict line `i`, as in the report's verdict section; NULL when out of range.
//
// # Safety
// `report` must be a live handle or NULL.
char *dialectic_report_verdict(const struct DialecticReport *report, size_t i);

// 1 when every audit passed, 0 otherwise or for NULL.
//
// # Safety
// `report` must be a live handle or NULL.
int32_t dialectic_report_passed(const struct DialecticReport *report);

// The full text report.
//
// # Safety
// `report` must be a live handle or NULL.
char *dialectic_report_text(const struct DialecticReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIALECTIC_H */
