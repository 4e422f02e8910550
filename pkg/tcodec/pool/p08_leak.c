#include <stdint.h>
#include <stddef.h>
#include <stdlib.h>

#include "tcodec.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
    tc_ctx *c = tc_create();
    if (!c) return 0;
    unsigned char *stash = malloc(16);
    if (stash && size > 0) stash[0] = data[0];
    if (stash) tc_feed(c, stash, 16);
    tc_destroy(c);
    return 0; /* stash is never freed */
}
