/* Coverage runtime: marks hit trace-pc guards and writes the program
 * counter of every hit guard to $COV_OUT, one hex value per line. The dump
 * runs at normal exit and, when a sanitizer is present, from its death
 * callback so crashing runs still report what they reached. */
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>

static uint32_t *g_start, *g_stop;
static const uintptr_t *g_pcs_beg;

extern void __sanitizer_set_death_callback(void (*)(void)) __attribute__((weak));

static void covrt_dump(void) {
  const char *path = getenv("COV_OUT");
  if (!path || !g_start) return;
  FILE *f = fopen(path, "w");
  if (!f) return;
  size_t n = (size_t)(g_stop - g_start);
  for (size_t i = 0; i < n; i++) {
    if (g_start[i] & 0x80000000u)
      fprintf(f, "%#lx\n", g_pcs_beg ? (unsigned long)g_pcs_beg[2 * i] : 0ul);
  }
  fclose(f);
}

void __sanitizer_cov_trace_pc_guard_init(uint32_t *start, uint32_t *stop) {
  if (start == stop || *start) return;
  g_start = start;
  g_stop = stop;
  uint32_t i = 1;
  for (uint32_t *p = start; p < stop; p++) *p = i++;
}

void __sanitizer_cov_trace_pc_guard(uint32_t *guard) { *guard |= 0x80000000u; }

void __sanitizer_cov_pcs_init(const uintptr_t *beg, const uintptr_t *end) {
  (void)end;
  g_pcs_beg = beg;
}

__attribute__((constructor)) static void covrt_setup(void) {
  atexit(covrt_dump);
  if (&__sanitizer_set_death_callback) __sanitizer_set_death_callback(covrt_dump);
}
