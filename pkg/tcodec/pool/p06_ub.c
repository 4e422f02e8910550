#include <stdint.h>
#include <stddef.h>

#include "tcodec.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
    tc_ctx *c = tc_create();
    if (!c) return 0;
    int shift = (int)(size % 8) + 32;
    int scale = 1 << shift; /* shift width exceeds int: undefined */
    tc_configure(c, (unsigned)(scale & 3));
    tc_feed(c, data, size);
    tc_destroy(c);
    return 0;
}
