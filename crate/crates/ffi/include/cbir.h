#ifndef CBIR_H
#define CBIR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CbirStatus {
  CBIR_STATUS_OK = 0,
  CBIR_STATUS_NULL_POINTER = 1,
  CBIR_STATUS_INVALID_ARGUMENT = 2,
  CBIR_STATUS_DECODE_ERROR = 3,
  CBIR_STATUS_NO_REGION = 4,
  CBIR_STATUS_FEATURE_ERROR = 5,
  CBIR_STATUS_DUPLICATE_ID = 6,
  CBIR_STATUS_NOT_FOUND = 7,
  CBIR_STATUS_INVALID_RECORD = 8,
  CBIR_STATUS_MALFORMED_DB = 9,
  CBIR_STATUS_OUT_OF_RANGE = 10,
  CBIR_STATUS_PANIC = 11,
} CbirStatus;

typedef enum CbirEntropyScope {
  CBIR_ENTROPY_SCOPE_FOREGROUND = 0,
  CBIR_ENTROPY_SCOPE_WHOLE = 1,
} CbirEntropyScope;

typedef struct CbirDb CbirDb;

typedef struct CbirImage CbirImage;

typedef struct CbirResults CbirResults;

// Segmentation settings; pass NULL to functions taking one for the defaults
// (threshold 1, 8-connectivity, minimum area 4).
typedef struct CbirSegmentConfig {
  uint8_t threshold;
  // 4 or 8.
  uint32_t connectivity;
  size_t min_area;
} CbirSegmentConfig;

// Entropy in bits, the seven invariants and their signed log10 scaling.
typedef struct CbirFeatures {
  double entropy;
  double phi[7];
  double psi[7];
} CbirFeatures;

// One query match. The strings are owned by the `CbirResults` they came
// from and stay valid until it is freed.
typedef struct CbirMatch {
  const char *id;
  const char *source;
  double distance;
  double entropy_gap;
} CbirMatch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or an empty string.
// Valid until the next failing call on the same thread.
const char *cbir_last_error_message(void);

// Decodes a P2 or P5 PGM buffer.
//
// # Safety
// `data` must point to `len` readable bytes; `out` must be writable.
enum CbirStatus cbir_image_decode(const uint8_t *data, size_t len, struct CbirImage **out);

// Copies a row-major 8-bit buffer of `width * height` pixels.
//
// # Safety
// `pixels` must point to `width * height` readable bytes; `out` must be writable.
enum CbirStatus cbir_image_from_pixels(size_t width,
                                       size_t height,
                                       const uint8_t *pixels,
                                       struct CbirImage **out);

// # Safety
// `img` must be NULL or a live image handle.
size_t cbir_image_width(const struct CbirImage *img);

// # Safety
// `img` must be NULL or a live image handle.
size_t cbir_image_height(const struct CbirImage *img);

// Encodes as binary P5 (`binary != 0`) or plain P2. Release the buffer with
// [`cbir_bytes_free`].
//
// # Safety
// `img` must be a live image handle; `out_data` and `out_len` must be writable.
enum CbirStatus cbir_image_encode(const struct CbirImage *img,
                                  int32_t binary,
                                  uint8_t **out_data,
                                  size_t *out_len);

// # Safety
// `img` must be NULL or a handle not yet freed.
void cbir_image_free(struct CbirImage *img);

// Features of the largest segmented region. Returns `NoRegion` when nothing
// is segmented.
//
// # Safety
// `img` must be a live image handle, `config` NULL or readable, `out` writable.
enum CbirStatus cbir_image_features(const struct CbirImage *img,
                                    const struct CbirSegmentConfig *config,
                                    enum CbirEntropyScope entropy_scope,
                                    struct CbirFeatures *out);

// Number of segmented regions, and their features in region order when
// `out` is non-NULL with room for `capacity` entries. Returns `OutOfRange`
// (with `*count` set) when `capacity` is too small.
//
// # Safety
// `img` must be a live image handle, `config` NULL or readable, `out` NULL or
// writable for `capacity` entries, `count` writable.
enum CbirStatus cbir_image_region_features(const struct CbirImage *img,
                                           const struct CbirSegmentConfig *config,
                                           enum CbirEntropyScope entropy_scope,
                                           struct CbirFeatures *out,
                                           size_t capacity,
                                           size_t *count);

struct CbirDb *cbir_db_new(void);

// Parses a database in the `CBIRIDX 1` format.
//
// # Safety
// `data` must point to `len` readable bytes; `out` must be writable.
enum CbirStatus cbir_db_load(const uint8_t *data, size_t len, struct CbirDb **out);

// Serializes the database. Release the buffer with [`cbir_bytes_free`].
//
// # Safety
// `db` must be a live handle; `out_data` and `out_len` must be writable.
enum CbirStatus cbir_db_save(const struct CbirDb *db, uint8_t **out_data, size_t *out_len);

// Appends a record built from `features` (entropy and phi; psi is derived).
//
// # Safety
// `db` must be a live handle; `id` and `source` NUL-terminated strings;
// `features` readable.
enum CbirStatus cbir_db_add(struct CbirDb *db,
                            const char *id,
                            const char *source,
                            const struct CbirFeatures *features);

// # Safety
// `db` must be a live handle; `id` a NUL-terminated string.
enum CbirStatus cbir_db_remove(struct CbirDb *db, const char *id);

// # Safety
// `db` must be NULL or a live handle.
size_t cbir_db_len(const struct CbirDb *db);

// # Safety
// `db` must be NULL or a handle not yet freed.
void cbir_db_free(struct CbirDb *db);

// The `k` best matches within `tau` bits of the template's entropy, ranked
// by distance and then id. A negative or NaN `tau` is rejected.
//
// # Safety
// `db` must be a live handle, `template_features` readable, `out` writable.
enum CbirStatus cbir_db_query(const struct CbirDb *db,
                              const struct CbirFeatures *template_features,
                              double tau,
                              size_t k,
                              struct CbirResults **out);

// # Safety
// `res` must be NULL or a live handle.
size_t cbir_results_len(const struct CbirResults *res);

// # Safety
// `res` must be a live handle; `out` writable.
enum CbirStatus cbir_results_get(const struct CbirResults *res,
                                 size_t index,
                                 struct CbirMatch *out);

// # Safety
// `res` must be NULL or a handle not yet freed.
void cbir_results_free(struct CbirResults *res);

// Releases a buffer returned by an `*_encode` or `*_save` call.
//
// # Safety
// `data` and `len` must be exactly as returned, and not yet freed.
void cbir_bytes_free(uint8_t *data, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CBIR_H */
