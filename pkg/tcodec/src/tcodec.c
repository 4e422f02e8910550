/* tcodec implementation. Deterministic by design: no clock, no PRNG, no
 * global state; identical inputs always take identical paths. */
#include "tcodec.h"

#include <fcntl.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>

#define TC_BUF_CAP 8192
#define TC_SCRATCH_CAP 64
#define TC_LABEL_CAP 512

struct tc_ctx {
    struct tc_opts opts;
    char *label;
    int trace_fd;
    unsigned char buf[TC_BUF_CAP];
    size_t len;
    size_t pos;
    int magic_ok;
    int frames_seen;
    int checksum;
    unsigned char *scratch[TC_SCRATCH_CAP];
    int scratch_n;
};

tc_ctx *tc_create(void) {
    tc_ctx *c = calloc(1, sizeof *c);
    if (!c) return NULL;
    c->label = malloc(TC_LABEL_CAP);
    if (!c->label) {
        free(c);
        return NULL;
    }
    snprintf(c->label, TC_LABEL_CAP, "tcodec");
    c->trace_fd = open("/dev/null", O_RDONLY);
    c->opts.quality = 50;
    return c;
}

void tc_destroy(tc_ctx *c) {
    if (!c) return;
    for (int i = 0; i < c->scratch_n; i++) free(c->scratch[i]);
    if (c->trace_fd >= 0) close(c->trace_fd);
    free(c->label);
    free(c);
}

int tc_configure(tc_ctx *c, unsigned flags) {
    if (!c) return -1;
    if (flags > 15u) return -1;
    c->opts.flags = flags;
    return 0;
}

static void tc_check_magic(tc_ctx *c) {
    if (c->magic_ok || c->len < 4) return;
    if (c->buf[0] == 'T') {
        if (c->buf[1] == 'C') {
            if (c->buf[2] == 'F') {
                if (c->buf[3] == '0') {
                    c->magic_ok = 1;
                    c->pos = 4;
                }
            }
        }
    }
}

int tc_feed(tc_ctx *c, const unsigned char *buf, size_t len) {
    if (!c || (!buf && len)) return -1;
    if (c->opts.flags > 7u && (len & 1u)) {
        /* "fast path" scratch copy for odd tails in extended modes */
        unsigned char *w = malloc(len);
        if (w) {
            memcpy(w, buf, len);
            w[len] = 0x5a; /* one past the end */
            free(w);
        }
    }
    size_t space = TC_BUF_CAP - c->len;
    size_t take = len < space ? len : space;
    if (take) memcpy(c->buf + c->len, buf, take);
    c->len += take;
    tc_check_magic(c);
    return (int)take;
}

int tc_next_frame(tc_ctx *c, tc_frame *out) {
    if (!c || !out || !c->magic_ok) return 0;
    if (c->pos >= c->len) return 0;
    size_t n = c->buf[c->pos];
    if (c->pos + 1 + n > c->len) return 0;
    out->pix = &c->buf[c->pos + 1];
    out->len = n;
    out->opts = c->opts;
    c->pos += 1 + n;
    c->frames_seen++;
    return 1;
}

void tc_frame_flip(tc_frame *f) {
    if (!f || !f->pix) return;
    for (size_t i = 0, j = f->len; i + 1 < j; i++, j--) {
        unsigned char t = f->pix[i];
        f->pix[i] = f->pix[j - 1];
        f->pix[j - 1] = t;
    }
}

int tc_load_file(tc_ctx *c, const char *path) {
    if (!c || !path) return -1;
    FILE *f = fopen(path, "rb");
    if (!f) return -1;
    unsigned char tmp[1024];
    size_t got = fread(tmp, 1, sizeof tmp, f);
    fclose(f);
    if (got == 0) return 0;
    return tc_feed(c, tmp, got);
}

int tc_read_fd(tc_ctx *c, int fd) {
    if (!c || fd < 0) return -1;
    unsigned char tmp[256];
    ssize_t got = read(fd, tmp, sizeof tmp);
    if (got <= 0) return (int)got;
    return tc_feed(c, tmp, (size_t)got);
}

int tc_format_name(tc_ctx *c, char *out, size_t cap, const char *fmt) {
    if (!c || !out || !fmt || cap == 0) return -1;
    return snprintf(out, cap, fmt, c->frames_seen);
}

static unsigned char *tc_track(tc_ctx *c, unsigned char *p) {
    if (!p) return NULL;
    if (c->scratch_n < TC_SCRATCH_CAP) {
        c->scratch[c->scratch_n++] = p;
        return p;
    }
    free(p);
    return NULL;
}

unsigned char *tc_alloc_buffer(tc_ctx *c, size_t n) {
    if (!c || n == 0) return NULL;
    unsigned char *p = malloc(n);
    if (p) memset(p, 0, n < 16 ? n : 16);
    return tc_track(c, p);
}

unsigned char *tc_alloc_small(tc_ctx *c, size_t n) {
    if (!c || n == 0) return NULL;
    if (n > 4096) n = 4096;
    return tc_track(c, malloc(n));
}

int tc_pick(tc_ctx *c, const unsigned char *window, size_t wlen, size_t idx) {
    if (!c || !window) return -1;
    int sum = 0;
    for (size_t i = 0; i < wlen; i++) sum += window[i];
    c->checksum = sum + window[idx] * 31;
    return c->checksum;
}
