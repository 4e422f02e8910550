/* tcodec: a tiny deterministic frame codec used as a fuzzing target.
 *
 * The library parses a trivial container format: a 4-byte magic "TCF0"
 * followed by length-prefixed frames. It exists to exercise harness
 * generation tooling, so the API surface is small but covers the common
 * shapes: context lifecycle, buffer+length pairs, file paths, file
 * descriptors, format strings, and size-driven allocation.
 */
#ifndef TCODEC_H
#define TCODEC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

struct tc_opts {
    unsigned flags;
    int quality;
};

typedef struct tc_frame {
    unsigned char *pix;
    size_t len;
    struct tc_opts opts;
} tc_frame;

typedef struct tc_ctx tc_ctx;

/* Lifecycle. tc_create opens an internal trace descriptor that
 * tc_destroy releases; destroying a context exactly once is part of
 * the API contract. */
tc_ctx *tc_create(void);
void tc_destroy(tc_ctx *c);

/* Configuration. Flag values above 15 are rejected with -1. */
int tc_configure(tc_ctx *c, unsigned flags);

/* Feed container bytes. buf/len must describe one readable buffer. */
int tc_feed(tc_ctx *c, const unsigned char *buf, size_t len);

/* Iterate decoded frames. Returns 1 and fills *out while frames
 * remain, 0 when exhausted. Frames are valid until the next feed. */
int tc_next_frame(tc_ctx *c, tc_frame *out);

/* Post-process a decoded frame in place. */
void tc_frame_flip(tc_frame *f);

/* Feed container bytes from a named file. */
int tc_load_file(tc_ctx *c, const char *path);

/* Feed container bytes from an open descriptor. */
int tc_read_fd(tc_ctx *c, int fd);

/* Render a printf-style label for the current stream into out. */
int tc_format_name(tc_ctx *c, char *out, size_t cap, const char *fmt);

/* Scratch allocation owned by the context; n bytes, freed on destroy. */
unsigned char *tc_alloc_buffer(tc_ctx *c, size_t n);

/* As tc_alloc_buffer but clamps n to 4096 bytes internally. */
unsigned char *tc_alloc_small(tc_ctx *c, size_t n);

/* Read window[idx] into the context checksum. window/wlen describe one
 * buffer; idx must index into it. */
int tc_pick(tc_ctx *c, const unsigned char *window, size_t wlen, size_t idx);

#ifdef __cplusplus
}
#endif

#endif /* TCODEC_H */
