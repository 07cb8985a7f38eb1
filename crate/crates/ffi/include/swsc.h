#ifndef SWSC_H
#define SWSC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result of every fallible call. `SWSC_STATUS_OK` is zero.
typedef enum SwscStatus {
  SWSC_STATUS_OK = 0,
  SWSC_STATUS_NULL_POINTER = 1,
  SWSC_STATUS_SHAPE = 2,
  SWSC_STATUS_PARAMETER = 3,
  SWSC_STATUS_NUMERICAL = 4,
  SWSC_STATUS_FORMAT = 5,
  SWSC_STATUS_INTEGRITY = 6,
  SWSC_STATUS_IO = 7,
  SWSC_STATUS_INVALID_PATH = 8,
  SWSC_STATUS_PANIC = 9,
} SwscStatus;

// Column-grouping of the round-to-nearest baseline.
typedef enum SwscGranularity {
  SWSC_GRANULARITY_PER_COLUMN = 0,
  SWSC_GRANULARITY_PER_TENSOR = 1,
} SwscGranularity;

// Codebook, labels and low-rank factors of one compressed matrix.
typedef struct SwscCompressed SwscCompressed;

// Dense row-major matrix of `f64`.
typedef struct SwscMatrix SwscMatrix;

// Compression settings; start from [`swsc_compress_options_default`].
typedef struct SwscCompressOptions {
  size_t clusters;
  size_t rank;
  uint64_t seed;
  // 16 or 32.
  uint32_t value_bits;
  size_t max_iter;
  double tol;
  size_t restarts;
  bool parallel;
} SwscCompressOptions;

// Bit accounting of a compressed matrix.
typedef struct SwscStorageReport {
  uint64_t rows;
  uint64_t cols;
  uint64_t clusters;
  uint64_t rank;
  uint32_t value_bits;
  uint64_t codebook_bits;
  uint64_t factor_bits;
  uint64_t label_bits;
  uint64_t total_bits;
  double avg_bits_paper;
  double avg_bits_total;
  double compression_ratio;
} SwscStorageReport;

// Message for the last failed call on this thread, or NULL after a success.
// The pointer stays valid until the next `swsc_*` call on the same thread.
const char *swsc_last_error(void);

// Copies `rows * cols` row-major values into a new matrix.
//
// # Safety
// `values` must point to `rows * cols` readable doubles; `out` must be writable.
enum SwscStatus swsc_matrix_new(size_t rows,
                                size_t cols,
                                const double *values,
                                struct SwscMatrix **out);

// Releases a matrix; NULL is ignored.
//
// # Safety
// `m` must come from this library and not be used afterwards.
void swsc_matrix_free(struct SwscMatrix *m);

// Row count, or 0 for NULL.
//
// # Safety
// `m` must be NULL or a live handle.
size_t swsc_matrix_rows(const struct SwscMatrix *m);

// Column count, or 0 for NULL.
//
// # Safety
// `m` must be NULL or a live handle.
size_t swsc_matrix_cols(const struct SwscMatrix *m);

// Copies the row-major values into `out`, which holds `len` doubles.
// `len` must equal `rows * cols`.
//
// # Safety
// `m` must be a live handle; `out` must point to `len` writable doubles.
enum SwscStatus swsc_matrix_copy_values(const struct SwscMatrix *m, double *out, size_t len);

// Defaults for everything except the cluster count, rank and seed:
// 16-bit values, 100 iterations, tolerance 1e-6, one run, sequential.
struct SwscCompressOptions swsc_compress_options_default(size_t clusters,
                                                         size_t rank,
                                                         uint64_t seed);

// Clusters the columns of `w` and compensates the residual at rank `opts.rank`.
//
// # Safety
// `w` and `opts` must be live; `out` must be writable.
enum SwscStatus swsc_compress(const struct SwscMatrix *w,
                              const struct SwscCompressOptions *opts,
                              struct SwscCompressed **out);

// Rebuilds the approximate matrix.
//
// # Safety
// `c` must be live; `out` must be writable.
enum SwscStatus swsc_decompress(const struct SwscCompressed *c, struct SwscMatrix **out);

// Releases a compressed handle; NULL is ignored.
//
// # Safety
// `c` must come from this library and not be used afterwards.
void swsc_compressed_free(struct SwscCompressed *c);

// Bit accounting of an existing compressed handle.
//
// # Safety
// `c` must be live; `out` must be writable.
enum SwscStatus swsc_compressed_report(const struct SwscCompressed *c,
                                       bool include_labels,
                                       struct SwscStorageReport *out);

// Bit accounting for an `m × n` matrix at `k` clusters and rank `r`,
// without compressing anything.
//
// # Safety
// `out` must be writable.
enum SwscStatus swsc_avg_bits(uint64_t m,
                              uint64_t n,
                              uint64_t k,
                              uint64_t r,
                              uint32_t value_bits,
                              bool include_labels,
                              struct SwscStorageReport *out);

// Round-to-nearest quantize-dequantize baseline at `bits` in 2..=8.
//
// # Safety
// `w` must be live; `out` must be writable.
enum SwscStatus swsc_rtn(const struct SwscMatrix *w,
                         uint32_t bits,
                         enum SwscGranularity granularity,
                         struct SwscMatrix **out);

// Reads a weight file (either dtype) into a new matrix.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum SwscStatus swsc_read_weight(const char *path, struct SwscMatrix **out);

// Writes a weight file with 16- or 32-bit values. The file appears atomically.
//
// # Safety
// `path` must be a NUL-terminated string; `w` must be live.
enum SwscStatus swsc_write_weight(const char *path,
                                  const struct SwscMatrix *w,
                                  uint32_t value_bits);

// Reads and validates an archive.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum SwscStatus swsc_read_archive(const char *path, struct SwscCompressed **out);

// Writes an archive. The file appears atomically.
//
// # Safety
// `path` must be a NUL-terminated string; `c` must be live.
enum SwscStatus swsc_write_archive(const char *path, const struct SwscCompressed *c);

#endif  /* SWSC_H */
