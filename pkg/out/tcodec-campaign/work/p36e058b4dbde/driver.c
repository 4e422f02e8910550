#include <stdint.h>
#include <stddef.h>

#include "tcodec.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
    tc_ctx *c = tc_create();
    if (!c) return 0;
    if (tc_configure(c, 99) == 0) { /* 99 is out of range: never taken */
        tc_feed(c, data, size);
        tc_frame fr;
        if (tc_next_frame(c, &fr)) tc_frame_flip(&fr);
    }
    tc_destroy(c);
    return 0;
}