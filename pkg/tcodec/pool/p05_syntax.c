#include <stdint.h>
#include <stddef.h>

#include "tcodec.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
    tc_ctx *c = tc_create()
    tc_configure(c, 1);
    tc_feed(c, data, size);
    tc_destroy(c);
    return 0;
}
