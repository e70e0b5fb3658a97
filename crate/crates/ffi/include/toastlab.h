#ifndef TOASTLAB_H
#define TOASTLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TlStatus {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  TL_STATUS_INVALID_ARGUMENT = 2,
  TL_STATUS_INVALID_TOAST = 3,
  TL_STATUS_PRECONDITION = 4,
  TL_STATUS_UNSUPPORTED = 5,
  TL_STATUS_OVERFLOW = 6,
  TL_STATUS_PARSE = 7,
  TL_STATUS_IO = 8,
  TL_STATUS_PANIC = 9,
} TlStatus;

// A labeling of a box.
typedef struct TlLabeling TlLabeling;

// A validated toast.
typedef struct TlToast TlToast;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` and returns the
// length it needs including the terminating NUL. Pass `buf = NULL` to query.
//
// # Safety
// `buf` must be NULL or point to `cap` writable bytes.
size_t tl_last_error(char *buf, size_t cap);

// Builds and validates a toast. Piece `i` spans `lo[i*n..i*n+n]` to `hi[i*n..i*n+n]`.
//
// # Safety
// `box_lo`, `box_hi` point to `n` coordinates; `lo`, `hi` to `count * n`; `out` is writable.
enum TlStatus tl_toast_new(size_t n,
                           const int64_t *box_lo,
                           const int64_t *box_hi,
                           bool torus,
                           uint32_t q,
                           const int64_t *lo,
                           const int64_t *hi,
                           size_t count,
                           struct TlToast **out);

// Greedy toast with `count` squares on `Z^n`.
//
// # Safety
// `out` must be writable.
enum TlStatus tl_toast_greedy(size_t n,
                              uint32_t q,
                              size_t count,
                              bool big_gaps,
                              struct TlToast **out);

// Quasi-tiling of the torus `[box_lo, box_hi]` with the given square sides.
//
// # Safety
// `box_lo`, `box_hi` point to `n` coordinates, `scales` to `nscales`; `out` is writable.
enum TlStatus tl_toast_quasi_tile(size_t n,
                                  const int64_t *box_lo,
                                  const int64_t *box_hi,
                                  uint32_t q,
                                  const int64_t *scales,
                                  size_t nscales,
                                  uint64_t seed,
                                  struct TlToast **out);

// Reads a toast file and validates it.
//
// # Safety
// `path` is a NUL-terminated string; `out` is writable.
enum TlStatus tl_toast_read(const char *path, struct TlToast **out);

// # Safety
// `t` is a live toast handle; `path` is a NUL-terminated string.
enum TlStatus tl_toast_write(const struct TlToast *t, const char *path);

// Number of pieces, or 0 for NULL.
//
// # Safety
// `t` is NULL or a live toast handle.
size_t tl_toast_len(const struct TlToast *t);

// Copies piece `i` into `lo` and `hi`, each of length `n`.
//
// # Safety
// `t` is a live toast handle; `lo` and `hi` point to `n` writable coordinates.
enum TlStatus tl_toast_piece(const struct TlToast *t, size_t i, int64_t *lo, int64_t *hi, size_t n);

// Covered fraction of the box as a reduced fraction.
//
// # Safety
// `t` is a live toast handle; `num` and `den` are writable.
enum TlStatus tl_toast_coverage(const struct TlToast *t, uint64_t *num, uint64_t *den);

// # Safety
// `t` is NULL or a handle not yet freed.
void tl_toast_free(struct TlToast *t);

// R/B/G labeling of a toast.
//
// # Safety
// `t` is a live toast handle; `out` is writable.
enum TlStatus tl_label_rt(const struct TlToast *t, struct TlLabeling **out);

// R/B/0/1 labeling of a toast.
//
// # Safety
// `t` is a live toast handle; `out` is writable.
enum TlStatus tl_label_crt(const struct TlToast *t, uint32_t q, struct TlLabeling **out);

// Reads a labeling file.
//
// # Safety
// `path` is a NUL-terminated string; `out` is writable.
enum TlStatus tl_labeling_read(const char *path, struct TlLabeling **out);

// # Safety
// `l` is a live labeling handle; `path` is a NUL-terminated string.
enum TlStatus tl_labeling_write(const struct TlLabeling *l, const char *path);

// Number of cells, or 0 for NULL.
//
// # Safety
// `l` is NULL or a live labeling handle.
size_t tl_labeling_len(const struct TlLabeling *l);

// Copies all label codes (ASCII, last axis fastest) into `buf`.
//
// # Safety
// `l` is a live labeling handle; `buf` points to `len` writable bytes.
enum TlStatus tl_labeling_codes(const struct TlLabeling *l, uint8_t *buf, size_t len);

// # Safety
// `l` is NULL or a handle not yet freed.
void tl_labeling_free(struct TlLabeling *l);

// Counts violations of `problem` (`rt:<q>`, `crt:<q>`, `color:<k>`).
//
// # Safety
// `l` is a live labeling handle; `problem` is a NUL-terminated string; `count` is writable.
enum TlStatus tl_verify(const struct TlLabeling *l, const char *problem, size_t *count);

// Decides whether a window of side `2q+1` (ASCII codes R, B, G) belongs to RT(q).
//
// # Safety
// `codes` points to `len` bytes; `member` is writable.
enum TlStatus tl_rt_window_member(size_t n,
                                  uint32_t q,
                                  const uint8_t *codes,
                                  size_t len,
                                  bool *member);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOASTLAB_H */
