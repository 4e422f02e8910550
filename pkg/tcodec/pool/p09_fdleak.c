#include <stdint.h>
#include <stddef.h>
#include <stdio.h>
#include <fcntl.h>
#include <unistd.h>

#include "tcodec.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
    FILE *f = fopen("input_file", "wb");
    if (!f) return 0;
    if (size > 0) fwrite(data, 1, size, f);
    fclose(f);

    tc_ctx *c = tc_create();
    if (!c) return 0;
    int fd = open("input_file", O_RDONLY);
    if (fd >= 0) tc_read_fd(c, fd);
    tc_destroy(c);
    return 0; /* fd is never closed */
}
