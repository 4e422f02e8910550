#include "fsan_rt.h"

#include <stdlib.h>
#include <string.h>
#include <unistd.h>

#define FSAN_MAX 1024

struct fsan_entry {
    int kind;
    int live;
    long fd;          /* kind FSAN_KIND_FD */
    const void *ptr;  /* stream / handle kinds */
};

static struct fsan_entry fsan_table[FSAN_MAX];
static int fsan_count;

static void fsan_die(const char *what, int kind, long id) {
    fprintf(stderr, "==FSan== %s (kind=%d id=%ld)\n", what, kind, id);
    fflush(stderr);
    abort();
}

void fsan_enter(void) {
    memset(fsan_table, 0, sizeof fsan_table);
    fsan_count = 0;
}

static struct fsan_entry *fsan_find_fd(int fd) {
    for (int i = fsan_count - 1; i >= 0; i--) {
        struct fsan_entry *e = &fsan_table[i];
        if (e->kind == FSAN_KIND_FD && e->fd == fd) return e;
    }
    return NULL;
}

static struct fsan_entry *fsan_find_ptr(int kind, const void *p) {
    for (int i = fsan_count - 1; i >= 0; i--) {
        struct fsan_entry *e = &fsan_table[i];
        if (e->kind == kind && e->ptr == p) return e;
    }
    return NULL;
}

static struct fsan_entry *fsan_slot(void) {
    if (fsan_count >= FSAN_MAX)
        fsan_die("tracking table full", -1, fsan_count);
    return &fsan_table[fsan_count++];
}

int fsan_acq_fd(int fd) {
    if (fd < 0) return fd;
    struct fsan_entry *prior = fsan_find_fd(fd);
    if (prior && prior->live)
        prior->live = 0; /* number reused after an untracked close elsewhere */
    struct fsan_entry *e = fsan_slot();
    e->kind = FSAN_KIND_FD;
    e->live = 1;
    e->fd = fd;
    return fd;
}

FILE *fsan_acq_stream(FILE *f) {
    if (!f) return f;
    struct fsan_entry *e = fsan_slot();
    e->kind = FSAN_KIND_STREAM;
    e->live = 1;
    e->ptr = f;
    return f;
}

void *fsan_acq_handle(int kind, void *h) {
    if (!h) return h;
    struct fsan_entry *e = fsan_slot();
    e->kind = kind;
    e->live = 1;
    e->ptr = h;
    return h;
}

int fsan_transfer_fd(int fd) {
    struct fsan_entry *e = fsan_find_fd(fd);
    if (e && e->live) e->live = 0;
    return fd;
}

int fsan_close_fd(int fd) {
    struct fsan_entry *e = fsan_find_fd(fd);
    if (e) {
        if (!e->live) fsan_die("descriptor closed twice", FSAN_KIND_FD, fd);
        e->live = 0;
    } else if (fd >= 0) {
        fsan_die("close of untracked descriptor", FSAN_KIND_FD, fd);
    }
    return close(fd);
}

int fsan_close_stream(FILE *f) {
    struct fsan_entry *e = fsan_find_ptr(FSAN_KIND_STREAM, f);
    if (e) {
        if (!e->live)
            fsan_die("stream closed twice", FSAN_KIND_STREAM, (long)(size_t)f);
        e->live = 0;
    } else if (f) {
        fsan_die("close of untracked stream", FSAN_KIND_STREAM,
                 (long)(size_t)f);
    }
    return fclose(f);
}

void fsan_rel_handle(int kind, const void *h) {
    if (!h) return;
    struct fsan_entry *e = fsan_find_ptr(kind, h);
    if (!e) return; /* handle from outside the audited region */
    if (!e->live)
        fsan_die("handle released twice", kind, (long)(size_t)h);
    e->live = 0;
}

void fsan_audit_exit(void) {
    for (int i = 0; i < fsan_count; i++) {
        struct fsan_entry *e = &fsan_table[i];
        if (!e->live) continue;
        if (e->kind == FSAN_KIND_FD)
            fsan_die("descriptor leaked", e->kind, e->fd);
        fsan_die("handle leaked", e->kind, (long)(size_t)e->ptr);
    }
}
