#include <stdint.h>
#include <stddef.h>
#include <stdlib.h>
#include <string.h>

#include "tcodec.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
    tc_ctx *c = tc_create();
    if (!c) return 0;
    unsigned char *small = malloc(4);
    if (small) {
        memset(small, 7, 4);
        tc_feed(c, small, 9); /* claims 9 bytes from a 4-byte buffer */
        free(small);
    }
    (void)data;
    (void)size;
    tc_destroy(c);
    return 0;
}
