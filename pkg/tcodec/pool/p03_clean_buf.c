#include <stdint.h>
#include <stddef.h>
#include <string.h>

#include "tcodec.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
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
