#ifndef HGHZ_H
#define HGHZ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define HGHZ_OK 0

#define HGHZ_ERR_NULL -1

#define HGHZ_ERR_INVALID -2

#define HGHZ_ERR_FORMAT -3

#define HGHZ_ERR_BUFFER_TOO_SMALL -4

#define HGHZ_ERR_NO_TWIN -5

#define HGHZ_ERR_PANIC -6

/**
 * Public evaluation key.
 */
typedef struct HghzKey HghzKey;

/**
 * Inversion trapdoor.
 */
typedef struct HghzTrapdoor HghzTrapdoor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *hghz_status_message(int32_t code);

const char *hghz_version(void);

/**
 * Generates a toy key and trapdoor (N = 2, k = 12, αq = 2) for the support
 * `d0[0..n]`, retrying until the trapdoor passes its own check.
 *
 * # Safety
 * `d0` must point to `n` readable bytes; both out-pointers must be writable.
 */
int32_t hghz_keygen_toy(const uint8_t *d0,
                        uintptr_t n,
                        uint64_t seed,
                        struct HghzKey **key_out,
                        struct HghzTrapdoor **trapdoor_out);

/**
 * # Safety
 * `key` must come from this library and not be used afterwards.
 */
void hghz_key_free(struct HghzKey *key);

/**
 * # Safety
 * `trapdoor` must come from this library and not be used afterwards.
 */
void hghz_trapdoor_free(struct HghzTrapdoor *trapdoor);

/**
 * Serializes a key in the `.hghzk` container format.
 *
 * # Safety
 * `buf` is null or points to `cap` writable bytes; `len_out` must be writable.
 */
int32_t hghz_key_to_bytes(const struct HghzKey *key,
                          uint8_t *buf,
                          uintptr_t cap,
                          uintptr_t *len_out);

/**
 * # Safety
 * `bytes` must point to `len` readable bytes; `key_out` must be writable.
 */
int32_t hghz_key_from_bytes(const uint8_t *bytes, uintptr_t len, struct HghzKey **key_out);

/**
 * Serializes a trapdoor in the `.hghzt` container format.
 *
 * # Safety
 * `buf` is null or points to `cap` writable bytes; `len_out` must be writable.
 */
int32_t hghz_trapdoor_to_bytes(const struct HghzTrapdoor *trapdoor,
                               uint8_t *buf,
                               uintptr_t cap,
                               uintptr_t *len_out);

/**
 * # Safety
 * `bytes` must point to `len` readable bytes; `trapdoor_out` must be writable.
 */
int32_t hghz_trapdoor_from_bytes(const uint8_t *bytes,
                                 uintptr_t len,
                                 struct HghzTrapdoor **trapdoor_out);

/**
 * Writes 1 to `ok_out` when the trapdoor is an honest one for `key` and `d0`.
 *
 * # Safety
 * Handles must be live; `d0` points to `n` readable bytes; `ok_out` is writable.
 */
int32_t hghz_check_trapdoor(const struct HghzKey *key,
                            const struct HghzTrapdoor *trapdoor,
                            const uint8_t *d0,
                            uintptr_t n,
                            int32_t *ok_out);

/**
 * Samples x inside the margin box from `seed` and writes f_k(x) to `y`.
 *
 * # Safety
 * `y` is null or points to `cap` writable words; `len_out` must be writable.
 */
int32_t hghz_eval_sample(const struct HghzKey *key,
                         uint64_t seed,
                         uint64_t *y,
                         uintptr_t cap,
                         uintptr_t *len_out);

/**
 * Inverts `y` and writes h of both preimages (one byte per bit, c = 0 first).
 * Returns `HGHZ_ERR_NO_TWIN` when the image has a single preimage.
 *
 * # Safety
 * `y` points to `len` words; `h0` and `h1` each point to `n` writable bytes.
 */
int32_t hghz_invert(const struct HghzTrapdoor *trapdoor,
                    const uint64_t *y,
                    uintptr_t len,
                    uint8_t *h0,
                    uint8_t *h1,
                    uintptr_t n);

/**
 * Number of support bits a key was generated for.
 *
 * # Safety
 * `key` must be live and `n_out` writable.
 */
int32_t hghz_key_parties(const struct HghzKey *key, uintptr_t *n_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HGHZ_H */
