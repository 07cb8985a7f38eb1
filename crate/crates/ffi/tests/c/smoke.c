#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "swsc.h"

#define CHECK(call)                                                          \
  do {                                                                       \
    SwscStatus st_ = (call);                                                 \
    if (st_ != SWSC_STATUS_OK) {                                             \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_, swsc_last_error()); \
      return 1;                                                              \
    }                                                                        \
  } while (0)

int main(int argc, char **argv) {
  if (argc < 2) return 2;
  enum { M = 4, N = 6 };
  double values[M * N];
  for (int i = 0; i < M; i++)
    for (int j = 0; j < N; j++) values[i * N + j] = (double)((j % 3) * 4 + i) * 0.25;

  SwscMatrix *w = NULL;
  CHECK(swsc_matrix_new(M, N, values, &w));

  SwscCompressOptions opts = swsc_compress_options_default(3, 0, 7);
  opts.value_bits = 32;
  SwscCompressed *c = NULL;
  CHECK(swsc_compress(w, &opts, &c));
  CHECK(swsc_write_archive(argv[1], c));

  SwscCompressed *back = NULL;
  CHECK(swsc_read_archive(argv[1], &back));
  SwscMatrix *restored = NULL;
  CHECK(swsc_decompress(back, &restored));

  double out[M * N];
  CHECK(swsc_matrix_copy_values(restored, out, M * N));
  for (int i = 0; i < M * N; i++) {
    if (out[i] != values[i]) {
      fprintf(stderr, "value %d: %g != %g\n", i, out[i], values[i]);
      return 1;
    }
  }

  SwscStorageReport rep;
  CHECK(swsc_avg_bits(4096, 4096, 256, 0, 16, false, &rep));
  if (rep.avg_bits_paper != 1.0) return 1;

  SwscCompressed *none = NULL;
  if (swsc_compress(w, NULL, &none) != SWSC_STATUS_NULL_POINTER || none != NULL) return 1;
  if (swsc_last_error() == NULL) return 1;

  swsc_matrix_free(restored);
  swsc_compressed_free(back);
  swsc_compressed_free(c);
  swsc_matrix_free(w);
  printf("ok\n");
  return 0;
}
