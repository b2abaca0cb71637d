#ifndef ARENA_H
#define ARENA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ArenaStatus {
  ARENA_STATUS_OK = 0,
  ARENA_STATUS_NULL_ARGUMENT = 1,
  ARENA_STATUS_INVALID_UTF8 = 2,
  ARENA_STATUS_NOT_FOUND = 3,
  ARENA_STATUS_INVALID_INPUT = 4,
  ARENA_STATUS_IO = 5,
  /**
   * The run was already finished.
   */
  ARENA_STATUS_FINISHED = 6,
  ARENA_STATUS_INTEGRITY = 7,
  ARENA_STATUS_PANIC = 8,
} ArenaStatus;

/**
 * An incident run in its agent phase. Opaque to C.
 */
typedef struct ArenaRun ArenaRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next failing call.
 */
const char *arena_last_error(void);

/**
 * Library version, a static string.
 */
const char *arena_version(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void arena_string_free(char *s);

/**
 * JSON array describing every shipped incident and template.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ArenaStatus arena_list_json(char **out);

/**
 * Warm up `incident` (shipped name or file path) and open its stepped agent phase.
 * `policy_json` may be null for a permissive policy.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be valid.
 */
enum ArenaStatus arena_run_open(const char *incident,
                                const char *policy_json,
                                struct ArenaRun **out);

/**
 * Send one wire-protocol request line; the response envelope is written to `out_response`.
 *
 * # Safety
 * `run` must come from `arena_run_open`; `request` must be NUL-terminated.
 */
enum ArenaStatus arena_run_request(struct ArenaRun *run, const char *request, char **out_response);

/**
 * Whether the agent phase has ended (submitted or horizon reached). Null or finished runs count as closed.
 *
 * # Safety
 * `run` must be null or come from `arena_run_open`.
 */
bool arena_run_is_closed(const struct ArenaRun *run);

/**
 * Current virtual time in ms, or 0 for null or finished runs.
 *
 * # Safety
 * `run` must be null or come from `arena_run_open`.
 */
uint64_t arena_run_now_ms(const struct ArenaRun *run);

/**
 * Evaluate the run. Writes artifacts when `out_dir` is non-null (the directory
 * must be empty or absent) and returns report.json text in `out_report`.
 * The handle stays valid and must still be freed.
 *
 * # Safety
 * `run` must come from `arena_run_open`; `out_dir` null or NUL-terminated.
 */
enum ArenaStatus arena_run_finish(struct ArenaRun *run, const char *out_dir, char **out_report);

/**
 * Release a run. Null is ignored.
 *
 * # Safety
 * `run` must come from `arena_run_open` and not have been freed.
 */
void arena_run_free(struct ArenaRun *run);

/**
 * Re-evaluate a run directory and check it against its report.json.
 *
 * # Safety
 * `dir` must be NUL-terminated; `out_report` valid.
 */
enum ArenaStatus arena_replay(const char *dir, char **out_report);

/**
 * Status code name, a static string.
 */
const char *arena_status_name(enum ArenaStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARENA_H */
