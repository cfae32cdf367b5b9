#ifndef CODEDCACHE_H
#define CODEDCACHE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Fixed message table of the three-user example.
#define CC_SCHEDULER_TOY 0

// Clique greedy with uncoded fallback.
#define CC_SCHEDULER_GREEDY 1

// Minimum-size search; fails with `CC_STATUS_INFEASIBLE` past its budget.
#define CC_SCHEDULER_EXHAUSTIVE 2

// Exhaustive search, greedy when the budget runs out.
#define CC_SCHEDULER_AUTO 3

typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  CC_STATUS_INVALID_ARGUMENT = 2,
  CC_STATUS_OVERFLOW = 3,
  CC_STATUS_LIMIT = 4,
  CC_STATUS_UNSUPPORTED = 5,
  CC_STATUS_INFEASIBLE = 6,
  CC_STATUS_PANIC = 7,
} CcStatus;

// Cache contents of all users, built from a JSON config.
typedef struct CcPlacement CcPlacement;

// Broadcast answering one demand.
typedef struct CcSchedule CcSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into the library.
const char *cc_last_error(void);

// # Safety
// `s` must come from this library and not have been freed. Null is ignored.
void cc_string_free(char *s);

// Number of subfiles per file for `users` users and replication vector `r`.
//
// # Safety
// `r` must point to `groups` readable values and `out` must be writable.
enum CcStatus cc_subpacketization(uint32_t users,
                                  const uint32_t *r,
                                  uintptr_t groups,
                                  uint64_t *out);

// Parses a JSON config and places the caches.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum CcStatus cc_placement_from_json(const char *json, struct CcPlacement **out);

// # Safety
// `p` must come from [`cc_placement_from_json`] and not have been freed.
void cc_placement_free(struct CcPlacement *p);

// Cache size of `user` (1-based) in files, as a reduced fraction.
//
// # Safety
// `p` must be a live handle; `num` and `den` writable.
enum CcStatus cc_placement_memory(const struct CcPlacement *p,
                                  uint32_t user,
                                  int64_t *num,
                                  int64_t *den);

// Cache contents as JSON, the same document `codedcache place` prints.
// Free the result with [`cc_string_free`].
//
// # Safety
// `p` must be a live handle and `out` writable.
enum CcStatus cc_placement_cache_json(const struct CcPlacement *p, char **out);

// Schedules a demand such as `"A,A,B"`. Only nonuniform (beta) placements
// have a single delivery; alpha placements return `CC_STATUS_UNSUPPORTED`.
//
// # Safety
// `p` must be a live handle, `demand` NUL-terminated and `out` writable.
enum CcStatus cc_deliver(const struct CcPlacement *p,
                         const char *demand,
                         uint32_t scheduler_id,
                         struct CcSchedule **out);

// # Safety
// `s` must come from [`cc_deliver`] and not have been freed.
void cc_schedule_free(struct CcSchedule *s);

// Broadcast size in files, `messages / S`, as a reduced fraction.
//
// # Safety
// `s` must be a live handle; `num` and `den` writable.
enum CcStatus cc_schedule_rate(const struct CcSchedule *s, int64_t *num, int64_t *den);

// # Safety
// `s` must be a live handle and `out` writable.
enum CcStatus cc_schedule_message_count(const struct CcSchedule *s, uintptr_t *out);

// One message per line, e.g. `A_{23,2} + B_{12,1}`. Free with
// [`cc_string_free`].
//
// # Safety
// `s` must be a live handle and `out` writable.
enum CcStatus cc_schedule_text(const struct CcSchedule *s, char **out);

// Checks over GF(2) that every user decodes its file from its cache and
// the schedule.
//
// # Safety
// Both handles must be live, the schedule built from `p`; `out` writable.
enum CcStatus cc_verify(const struct CcPlacement *p, const struct CcSchedule *s, bool *out);

// Expected rate under the config's popularity, summed exactly over all
// demands. `exact` may be null; otherwise it receives the value as `"a/b"`,
// to be freed with [`cc_string_free`].
//
// # Safety
// `p` must be a live handle and `out` writable.
enum CcStatus cc_expected_rate(const struct CcPlacement *p,
                               uint32_t scheduler_id,
                               double *out,
                               char **exact);

// Best nonuniform-strategy rate of the three-user, two-file example at
// cache size 1, for `p` in `[1/2, 1]`.
//
// # Safety
// `out` must be writable.
enum CcStatus cc_rate_beta_closed(double p, double *out);

// Grouping-baseline counterpart of [`cc_rate_beta_closed`].
//
// # Safety
// `out` must be writable.
enum CcStatus cc_rate_alpha_closed(double p, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CODEDCACHE_H */
