/* Runtime half of the file/handle-balance audit.  Driver sources are
 * rewritten so that acquiring calls (open, fopen, pair constructors) pass
 * their result through the fsan_acq_* recorders and releasing calls land in
 * the fsan_* releasers below.  The releasers perform the real close and
 * flag double releases; fsan_audit_exit() flags anything still open.
 * Violations print a line starting with "==FSan==" and abort. */
#ifndef FSAN_RT_H
#define FSAN_RT_H

#include <stdio.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Handle kinds.  0/1 are reserved for raw descriptors and stdio streams;
 * configured constructor/destructor pairs use 2, 3, ... in config order. */
#define FSAN_KIND_FD 0
#define FSAN_KIND_STREAM 1

void fsan_enter(void);
void fsan_audit_exit(void);

int fsan_acq_fd(int fd);
FILE *fsan_acq_stream(FILE *f);
void *fsan_acq_handle(int kind, void *h);

/* Ownership moves into the callee (e.g. fdopen swallows the fd). */
int fsan_transfer_fd(int fd);

int fsan_close_fd(int fd);
int fsan_close_stream(FILE *f);
void fsan_rel_handle(int kind, const void *h);

#ifdef __cplusplus
}
#endif

#endif /* FSAN_RT_H */
