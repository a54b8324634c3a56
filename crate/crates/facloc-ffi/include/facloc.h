#ifndef FACLOC_H
#define FACLOC_H

/* Generated by cbindgen from facloc-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Mechanism selector.
 */
enum FaclocMechanism
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  /**
   * Randomized general-setting mechanism.
   */
  FACLOC_MECHANISM_GENERAL = 0,
  /**
   * Deterministic known-positions mechanism with parameter theta.
   */
  FACLOC_MECHANISM_THETA = 1,
  /**
   * Known-positions minisum mechanism.
   */
  FACLOC_MECHANISM_MINISUM = 2,
  /**
   * Exhaustive optimum used as a (non-truthful) mechanism.
   */
  FACLOC_MECHANISM_OPT = 3,
};
#ifndef __cplusplus
typedef int32_t FaclocMechanism;
#endif // __cplusplus

/**
 * Result of every C API call.
 */
enum FaclocStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  FACLOC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  FACLOC_STATUS_NULL_ARGUMENT = 1,
  /**
   * An input string was not valid UTF-8.
   */
  FACLOC_STATUS_INVALID_UTF8 = 2,
  /**
   * Instance or spec text failed to parse or validate.
   */
  FACLOC_STATUS_PARSE_ERROR = 3,
  /**
   * A numeric or enum parameter was out of range.
   */
  FACLOC_STATUS_INVALID_PARAMETER = 4,
  /**
   * An audit refused to run (facility count too large for exhaustive
   * enumeration).
   */
  FACLOC_STATUS_AUDIT_REFUSED = 5,
  /**
   * A panic was caught at the boundary; see facloc_last_error.
   */
  FACLOC_STATUS_INTERNAL = 6,
};
#ifndef __cplusplus
typedef int32_t FaclocStatus;
#endif // __cplusplus

/**
 * Variant selector of the thm2 family.
 */
enum FaclocThm2Variant
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  FACLOC_THM2_VARIANT_I = 0,
  FACLOC_THM2_VARIANT_J = 1,
};
#ifndef __cplusplus
typedef int32_t FaclocThm2Variant;
#endif // __cplusplus

/**
 * Opaque instance handle.
 */
typedef struct FaclocInstance FaclocInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *facloc_last_error(void);

/**
 * ABI version of this header; bumped on any breaking change.
 */
uint32_t facloc_abi_version(void);

/**
 * Parses an instance document (the CLI's JSON format, exact rationals).
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 * On success `*out` owns the instance and must be released with
 * [`facloc_instance_free`].
 */
FaclocStatus facloc_instance_parse(const char *json, struct FaclocInstance **out);

/**
 * Serializes the instance back to its canonical JSON document.
 *
 * # Safety
 * `handle` must come from this library; `out` must be a valid pointer. The
 * returned string must be released with [`facloc_string_free`].
 */
FaclocStatus facloc_instance_to_json(const struct FaclocInstance *handle, char **out);

/**
 * Releases an instance handle. Null is a no-op.
 *
 * # Safety
 * `handle` must be null or a pointer previously returned by this library,
 * released at most once.
 */
void facloc_instance_free(struct FaclocInstance *handle);

/**
 * Releases a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `text` must be null or a string pointer previously returned by this
 * library, released at most once.
 */
void facloc_string_free(char *text);

/**
 * Runs a mechanism and writes the evaluation report (lottery or point-mass
 * solution plus exact expected welfare) as JSON.
 *
 * `theta` may be null for the default split parameter `43/100`; it is
 * ignored by mechanisms other than `Theta`.
 *
 * # Safety
 * Pointer arguments as in [`facloc_instance_to_json`].
 */
FaclocStatus facloc_eval(const struct FaclocInstance *handle,
                         FaclocMechanism mech,
                         const char *theta,
                         char **out);

/**
 * Writes the exhaustive-optimum report (best solution and the full welfare
 * table) as JSON.
 *
 * # Safety
 * Pointer arguments as in [`facloc_instance_to_json`].
 */
FaclocStatus facloc_opt(const struct FaclocInstance *handle, char **out);

/**
 * Exhaustively audits unilateral preference misreports and writes the audit
 * report as JSON. `out_profitable` (nullable) receives the number of
 * profitable deviations found.
 *
 * # Safety
 * Pointer arguments as in [`facloc_instance_to_json`].
 */
FaclocStatus facloc_audit_preferences(const struct FaclocInstance *handle,
                                      FaclocMechanism mech,
                                      const char *theta,
                                      char **out,
                                      uint64_t *out_profitable);

/**
 * Audits position misreports over the structured deviation set with the
 * given grid denominator; otherwise like [`facloc_audit_preferences`].
 *
 * # Safety
 * Pointer arguments as in [`facloc_instance_to_json`].
 */
FaclocStatus facloc_audit_positions(const struct FaclocInstance *handle,
                                    FaclocMechanism mech,
                                    const char *theta,
                                    uint64_t denominator,
                                    char **out,
                                    uint64_t *out_profitable);

/**
 * Writes the exact optimal-vs-mechanism welfare ratio report as JSON.
 *
 * # Safety
 * Pointer arguments as in [`facloc_instance_to_json`].
 */
FaclocStatus facloc_empirical_ratio(const struct FaclocInstance *handle,
                                    FaclocMechanism mech,
                                    const char *theta,
                                    char **out);

/**
 * Builds the thm1 family instance: two agents at `eps` with disjoint single
 * approvals, one candidate at 1; `step = 1` moves the second agent to 1.
 *
 * # Safety
 * `eps` must be a valid NUL-terminated string (an exact rational such as
 * "1/100") and `out` a valid pointer.
 */
FaclocStatus facloc_gen_thm1(uint32_t k,
                             const char *eps,
                             uint32_t step,
                             struct FaclocInstance **out);

/**
 * Builds the thm2 family instance: `k` agents at `eps`, agent `i` approving
 * exactly facility `i`, one candidate at 1; variant J moves agent 1 to 1.
 *
 * # Safety
 * As in [`facloc_gen_thm1`].
 */
FaclocStatus facloc_gen_thm2(uint32_t k,
                             const char *eps,
                             FaclocThm2Variant variant,
                             struct FaclocInstance **out);

/**
 * Builds the thm6 family instance (candidates at 0 and 1, six agents);
 * `step` of the two agents at `1/2 - eps` drop facility 2 from their
 * approvals.
 *
 * # Safety
 * As in [`facloc_gen_thm1`].
 */
FaclocStatus facloc_gen_thm6(uint32_t k,
                             const char *eps,
                             uint32_t step,
                             struct FaclocInstance **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FACLOC_H */
