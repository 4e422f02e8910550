/* fused driver assembled from surviving seed programs */

#include <stdint.h>

#include <stddef.h>

#include "tcodec.h"

#include <string.h>

#include <stdio.h>

#include <stdlib.h>


typedef struct {
  const unsigned char *data;
  size_t size;
  size_t pos;
} ds_provider;

static unsigned long long ds_take(ds_provider *p, unsigned width) {
  unsigned long long v = 0;
  for (unsigned i = 0; i < width; i++) {
    unsigned char b = 0;
    if (p->pos < p->size) b = p->data[p->pos++];
    v |= (unsigned long long)b << (8u * i);
  }
  return v;
}

static size_t ds_take_bytes(ds_provider *p, unsigned char *dst, size_t cap) {
  size_t n = (size_t)(ds_take(p, 2) % cap);
  for (size_t i = 0; i < n; i++) {
    dst[i] = (p->pos < p->size) ? p->data[p->pos++] : 0;
  }
  dst[n] = 0;
  return n;
}


static int ds_seed_0(const unsigned char *ds_data, size_t ds_size) {
  ds_provider ds_p = {ds_data, ds_size, 0};
  (void)ds_p;
  const uint8_t * data = (const uint8_t *)(ds_p.data + ds_p.pos);
  size_t size = (size_t)(ds_p.size - ds_p.pos);
  (void)data; (void)size;
  {
    tc_ctx *c = tc_create();
    if (!c) return 0;
    tc_configure(c, 3);
    tc_feed(c, data, size);
    tc_frame f;
    while (tc_next_frame(c, &f)) {
        tc_frame_flip(&f);
    }
    tc_destroy(c);
    return 0;
}
  return 0;
}

static int ds_seed_1(const unsigned char *ds_data, size_t ds_size) {
  ds_provider ds_p = {ds_data, ds_size, 0};
  (void)ds_p;
  const uint8_t * data = (const uint8_t *)(ds_p.data + ds_p.pos);
  size_t size = (size_t)(ds_p.size - ds_p.pos);
  (void)data; (void)size;
  {
    unsigned char tmp[8];
    memset(tmp, 0, sizeof(tmp));
    if (size > sizeof(tmp)) size = sizeof(tmp);
    if (size > 0) memcpy(tmp, data, size);

    tc_ctx *c = tc_create();
    if (!c) return 0;
    tc_feed(c, tmp, sizeof(tmp));
    tc_pick(c, tmp, sizeof(tmp), size % sizeof(tmp));
    tc_destroy(c);
    return 0;
}
  return 0;
}

int LLVMFuzzerTestOneInput(const unsigned char *data, size_t size) {
  if (size < 1) return 0;
  unsigned ds_sel = data[0] % 2u;
  if (getenv("FUSED_TRACE"))
    fprintf(stderr, "FUSED_TRACE seed=%u\n", ds_sel);
  switch (ds_sel) {
    case 0u: return ds_seed_0(data + 1, size - 1);
    case 1u: return ds_seed_1(data + 1, size - 1);
  }
  return 0;
}
