/* Allocation meter for the size-probe build: link with
 * -Wl,--wrap=malloc,--wrap=calloc,--wrap=realloc. Counts every byte
 * requested and prints the running total at exit; the probe compares the
 * totals of a pinned-low and a pinned-high run, so the monotone meter is
 * exactly what is needed. */
#include <stdio.h>
#include <stdlib.h>

extern void *__real_malloc(size_t n);
extern void *__real_calloc(size_t n, size_t m);
extern void *__real_realloc(void *p, size_t n);

static size_t alloc_total;

void *__wrap_malloc(size_t n) {
  alloc_total += n;
  return __real_malloc(n);
}

void *__wrap_calloc(size_t n, size_t m) {
  alloc_total += n * m;
  return __real_calloc(n, m);
}

void *__wrap_realloc(void *p, size_t n) {
  alloc_total += n;
  return __real_realloc(p, n);
}

static void alloc_report(void) { fprintf(stderr, "ALLOC_PEAK %zu\n", alloc_total); }

__attribute__((constructor)) static void alloc_track_setup(void) { atexit(alloc_report); }
