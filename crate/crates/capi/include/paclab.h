#ifndef PACLAB_H
#define PACLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a `pac_*` call.
 */
typedef enum PacStatus {
  PAC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PAC_STATUS_NULL_POINTER = 1,
  /**
   * The JSON could not be parsed.
   */
  PAC_STATUS_INVALID_JSON = 2,
  /**
   * The code description is inconsistent (lengths, profile bounds...).
   */
  PAC_STATUS_INVALID_SPEC = 3,
  /**
   * A scalar or buffer argument is out of contract.
   */
  PAC_STATUS_INVALID_ARGUMENT = 4,
  /**
   * The sequential search hit its visit budget before reaching a leaf.
   */
  PAC_STATUS_SEARCH_EXHAUSTED = 5,
  /**
   * An internal invariant failed; the library state is still sound.
   */
  PAC_STATUS_INTERNAL_ERROR = 6,
} PacStatus;

/**
 * Opaque handle to a fully validated code description.
 */
typedef struct PacCode PacCode;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread.
 *
 * The pointer stays valid until the next failing `pac_*` call on the same
 * thread. Never null; the string is empty when nothing has failed yet.
 */
const char *pac_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pac_version(void);

/**
 * Parse a code from its canonical JSON
 * (`{"n":..,"k":..,"profile":[..],"poly":[..],"offset":[..]}`).
 *
 * On success writes a new handle to `out`; the caller owns it and must
 * release it with [`pac_code_free`].
 *
 * # Safety
 * `json` must point to a NUL-terminated string and `out` to a writable
 * pointer slot.
 */
enum PacStatus pac_code_from_json(const char *json, struct PacCode **out);

/**
 * Build a code from raw parts: `profile` holds `k` one-based input
 * positions, `poly` holds `poly_len` binary taps (constant term first),
 * and the per-position offset bits are all zero.
 *
 * # Safety
 * `profile` must be readable for `k` entries, `poly` for `poly_len`, and
 * `out` must be a writable pointer slot.
 */
enum PacStatus pac_code_new(uintptr_t block_len,
                            uintptr_t k,
                            const uint32_t *profile,
                            const uint8_t *poly,
                            uintptr_t poly_len,
                            struct PacCode **out);

/**
 * Release a handle returned by the constructors. Null is a no-op.
 *
 * # Safety
 * `code` must be a pointer returned by a `pac_code_*` constructor that has
 * not been freed yet.
 */
void pac_code_free(struct PacCode *code);

/**
 * Codeword length in bits, or 0 on a null handle.
 *
 * # Safety
 * `code` must be a live handle or null.
 */
uintptr_t pac_code_block_len(const struct PacCode *code);

/**
 * Data length in bits, or 0 on a null handle.
 *
 * # Safety
 * `code` must be a live handle or null.
 */
uintptr_t pac_code_data_len(const struct PacCode *code);

/**
 * Encode `data_len` data bits (values 0/1) into `block_len` codeword bits.
 *
 * # Safety
 * `data` must be readable for `pac_code_data_len(code)` entries and
 * `codeword` writable for `pac_code_block_len(code)` entries.
 */
enum PacStatus pac_encode(const struct PacCode *code,
                          const uint8_t *data,
                          uintptr_t data_len,
                          uint8_t *codeword,
                          uintptr_t codeword_len);

/**
 * Sequentially decode `block_len` channel LLRs into `data_len` data bits.
 *
 * `delta` is the threshold spacing (must be positive). `max_visits` caps
 * forward moves; 0 means unbounded. `bias` may be null for an unbiased
 * metric, or point at `block_len` per-position metric biases. `visits`
 * (optional) receives the number of forward moves spent.
 *
 * Returns `SearchExhausted` when the budget ran out first; `data` then
 * holds the best prefix found, zero-padded.
 *
 * # Safety
 * `llrs` must be readable for `llr_len` entries, `data` writable for
 * `data_len` entries, `bias` null or readable for `llr_len` entries, and
 * `visits` null or writable.
 */
enum PacStatus pac_fano_decode(const struct PacCode *code,
                               const double *llrs,
                               uintptr_t llr_len,
                               double delta,
                               uint64_t max_visits,
                               const double *bias,
                               uint8_t *data,
                               uintptr_t data_len,
                               uint64_t *visits);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PACLAB_H */
