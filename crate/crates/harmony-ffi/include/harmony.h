/* C interface for the harmony envy-free rent division solver. */

#ifndef HARMONY_H
#define HARMONY_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for all fallible calls.
 */
typedef enum HarmonyStatus {
  /**
   * Success.
   */
  HARMONY_STATUS_OK = 0,
  /**
   * Null pointer, malformed UTF-8, or invalid parameter.
   */
  HARMONY_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Instance or solution JSON failed to parse or validate.
   */
  HARMONY_STATUS_PARSE_ERROR = 2,
  /**
   * An oracle violated the solver's assumption (not compensable).
   */
  HARMONY_STATUS_ASSUMPTION_VIOLATION = 3,
  /**
   * The refinement budget ran out before a solution was extracted.
   */
  HARMONY_STATUS_MAX_ROUNDS_EXCEEDED = 4,
  /**
   * Verification ran but the certificate failed.
   */
  HARMONY_STATUS_VERIFICATION_FAILED = 5,
  /**
   * Unexpected internal failure.
   */
  HARMONY_STATUS_INTERNAL_ERROR = 6,
} HarmonyStatus;

/**
 * Opaque parsed instance plus its solver configuration.
 */
typedef struct HarmonyInstance HarmonyInstance;

/**
 * Opaque solution handle.
 */
typedef struct HarmonySolution HarmonySolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse an instance-file JSON string into a handle. On success `*out` owns
 * the handle; release it with `harmony_instance_free`.
 *
 * # Safety
 *
 * `json` must be a NUL-terminated string and `out` a valid pointer; both only need to stay valid for the duration of the call.
 */
enum HarmonyStatus harmony_instance_parse(const char *json,
                                          struct HarmonyInstance **out);

/**
 * Release an instance handle. Null is a no-op.
 *
 * # Safety
 *
 * `handle` must be null or a pointer previously returned by `harmony_instance_parse` that has not been freed.
 */
void harmony_instance_free(struct HarmonyInstance *handle);

/**
 * Solve the instance. Uses the exact quasilinear solver when it applies and
 * `force_mesh` is false, the mesh engine otherwise. On success `*out` owns a
 * solution handle; release it with `harmony_solution_free`.
 *
 * # Safety
 *
 * `handle` must be a live pointer from `harmony_instance_parse` and `out` a valid pointer.
 */
enum HarmonyStatus harmony_solve(const struct HarmonyInstance *handle,
                                 bool force_mesh,
                                 struct HarmonySolution **out);

/**
 * Serialize a solution to the solution-file JSON format. On success `*out`
 * owns a string; release it with `harmony_string_free`.
 *
 * # Safety
 *
 * All three pointers must be valid; the handles must be live.
 */
enum HarmonyStatus harmony_solution_to_json(const struct HarmonyInstance *instance,
                                            const struct HarmonySolution *solution,
                                            char **out);

/**
 * Release a solution handle. Null is a no-op.
 *
 * # Safety
 *
 * `handle` must be null or a pointer previously returned by `harmony_solve` that has not been freed.
 */
void harmony_solution_free(struct HarmonySolution *handle);

/**
 * Check a solution-file JSON string against the instance. `epsilon` is an
 * optional rational string ("1/1000", "0.001"); pass null to use the
 * instance's default tolerance. Returns `Ok` iff every certificate passes.
 *
 * # Safety
 *
 * `instance` must be a live handle; `solution_json` a NUL-terminated string; `epsilon` null or a NUL-terminated string.
 */
enum HarmonyStatus harmony_verify(const struct HarmonyInstance *instance,
                                  const char *solution_json,
                                  const char *epsilon);

/**
 * Release a string returned by this library. Null is a no-op.
 *
 * # Safety
 *
 * `s` must be null or a string previously returned by this library that has not been freed.
 */
void harmony_string_free(char *s);

/**
 * The message from the most recent failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread;
 * do not free it.
 */
const char *harmony_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARMONY_H */
