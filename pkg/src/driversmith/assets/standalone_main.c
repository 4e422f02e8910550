/* Replay driver: feeds one file to the fuzzer entry point, one process per
 * input, so sanitizer state and coverage never leak between inputs. */
#include <stddef.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>

#ifndef DRIVER_ENTRY
#define DRIVER_ENTRY LLVMFuzzerTestOneInput
#endif

extern int DRIVER_ENTRY(const uint8_t *data, size_t size);

int main(int argc, char **argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: %s <input-file>\n", argv[0]);
    return 0;
  }
  FILE *f = fopen(argv[1], "rb");
  if (!f) return 1;
  if (fseek(f, 0, SEEK_END) != 0) {
    fclose(f);
    return 1;
  }
  long n = ftell(f);
  if (n < 0) {
    fclose(f);
    return 1;
  }
  rewind(f);
  uint8_t *buf = malloc(n > 0 ? (size_t)n : 1);
  if (!buf) {
    fclose(f);
    return 1;
  }
  size_t got = fread(buf, 1, (size_t)n, f);
  fclose(f);
  int rc = DRIVER_ENTRY(buf, got);
  free(buf);
  return rc;
}
