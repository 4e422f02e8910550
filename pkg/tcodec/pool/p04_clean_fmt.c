#include <stdint.h>
#include <stddef.h>
#include <stdio.h>
#include <string.h>
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
    if (fd >= 0) {
        tc_read_fd(c, fd);
        close(fd);
    }
    char name[32];
    tc_format_name(c, name, sizeof(name), "frame-%d");
    size_t n = (size % 64) + 1;
    unsigned char *p = tc_alloc_buffer(c, n);
    if (p) memset(p, 0, n);
    tc_destroy(c);
    return 0;
}
