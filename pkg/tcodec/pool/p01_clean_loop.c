#include <stdint.h>
#include <stddef.h>

#include "tcodec.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
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
