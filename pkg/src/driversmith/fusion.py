"""Seed fusion: one fuzzer-compatible driver from many surviving programs.

The fused driver keeps every seed's body as a static function, selected by
the input's first byte. Constant arguments that inference left
unconstrained become fuzzer-controlled through a small byte provider that
each body drains in textual site order before handing the remainder to the
original (data, size) parameters; constrained arguments are rewritten
according to their role instead (pinned paths and formats, clamped
allocation sizes, modulo-bounded indices). The harvested corpus seeds the
fused driver with each original program's own literals and discoveries, so
fused fuzzing starts where per-seed fuzzing left off.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import analysis, astjson
from .config import FusionConfig
from .constraints import (
    ALLOC_SIZE,
    ARRAY_INDEX,
    ARRAY_LENGTH,
    FILE_DESC,
    FILE_NAME,
    FORMAT_STRING,
    Constraint,
)

PROVIDER_SCALAR = "provider_scalar"
PROVIDER_BYTES = "provider_bytes"
MOD_INDEX = "mod_index"
ALLOC_CLAMP = "alloc_clamp"
PIN_LITERAL = "pin_literal"
SKIP = "skip"

#: Deterministic trial panel for validating a conversion before adopting it.
TRIAL_VALUES = [0, 1, 2, 7, 63, 255, 4096, 65535]


@dataclass
class SitePlan:
    site: analysis.ConstArgSite
    action: str
    width: int = 0
    cap: int = 0
    pin_text: str = ""
    related_text: str = ""  # bounding expression for modulo-style rewrites

    @property
    def consumes(self) -> bool:
        return self.action in (PROVIDER_SCALAR, PROVIDER_BYTES, MOD_INDEX, ALLOC_CLAMP)


def plan_conversions(
    ast: analysis.ProgramAst,
    resolved: list[Constraint],
    cfg: FusionConfig,
    input_literal: str = "input_file",
) -> list[SitePlan]:
    """Decide, per constant argument site, how the fused driver treats it."""
    by_slot = {(c.api, c.arg_index): c for c in resolved}
    plans: list[SitePlan] = []
    for cs in analysis.const_arg_sites(ast):
        c = by_slot.get((cs.api, cs.arg_index))
        if c is None:
            if cs.kind == "scalar":
                plans.append(SitePlan(cs, PROVIDER_SCALAR, width=cs.width))
            else:
                plans.append(SitePlan(cs, PROVIDER_BYTES, cap=min(cfg.buffer_cap, 256)))
            continue
        if c.kind == ARRAY_LENGTH or c.kind == FILE_DESC:
            plans.append(SitePlan(cs, SKIP))
        elif c.kind == ARRAY_INDEX:
            bound = _sibling_text(ast, cs, c.related, resolved)
            if bound:
                plans.append(SitePlan(cs, MOD_INDEX, width=max(cs.width, 1), related_text=bound))
            else:
                plans.append(SitePlan(cs, SKIP))
        elif c.kind == ALLOC_SIZE:
            plans.append(SitePlan(cs, ALLOC_CLAMP, width=max(cs.width, 2), cap=cfg.buffer_cap))
        elif c.kind == FILE_NAME:
            plans.append(SitePlan(cs, PIN_LITERAL, pin_text=f'"{input_literal}"'))
        elif c.kind == FORMAT_STRING:
            plans.append(SitePlan(cs, PIN_LITERAL, pin_text=f'"{cfg.format_literal}"'))
        else:
            plans.append(SitePlan(cs, SKIP))
    plans.sort(key=lambda p: p.site.span[0])
    return plans


def _sibling_text(
    ast: analysis.ProgramAst,
    cs: analysis.ConstArgSite,
    buffer_index: int,
    resolved: list[Constraint],
) -> str:
    """Bounding expression for an index argument: the length argument that
    describes the same buffer at this call, when one is known."""
    site = ast.sites[cs.site]
    for c in resolved:
        if c.api == cs.api and c.kind == ARRAY_LENGTH and c.related == buffer_index:
            if c.arg_index < len(site.args) and c.arg_index != cs.arg_index:
                return site.args[c.arg_index].text
    return ""


# --- trial validation -----------------------------------------------------------


def substitute(source: str, span: tuple[int, int], text: str) -> str:
    return source[: span[0]] + text + source[span[1]:]


def trial_convert(source: str, plan: SitePlan, runner, n_values: int = 8) -> bool:
    """A conversion survives only if the program still passes its execution
    panel for every trial value; `runner(source) -> bool` builds and runs."""
    if plan.site.kind == "string":
        trials = ['""', '"A"', '"trial-value"'][: max(1, n_values // 2)]
        for t in trials:
            if not runner(substitute(source, plan.site.span, t)):
                return False
        return True
    for v in TRIAL_VALUES[:n_values]:
        if not runner(substitute(source, plan.site.span, str(v))):
            return False
    return True


# --- emission ----------------------------------------------------------------------


@dataclass
class FusionInput:
    seed_id: str
    source: str
    ast: analysis.ProgramAst
    plans: list[SitePlan]
    corpus_blobs: list[bytes] = field(default_factory=list)


@dataclass
class FusedDriver:
    source: str
    corpus: list[bytes]
    seed_order: list[str]


_PROVIDER = """
typedef struct {
  const unsigned char *data;
  size_t size;
  size_t pos;
} ds_provider;

static unsigned long long ds_take(ds_provider *p, unsigned width) {
  unsigned long long v = 0;
  for (unsigned i = 0; i < width; i++) {
    unsigned char b = 0;
    if (p->pos < p->size) b = p->data[p->pos++];
    v |= (unsigned long long)b << (8u * i);
  }
  return v;
}

static size_t ds_take_bytes(ds_provider *p, unsigned char *dst, size_t cap) {
  size_t n = (size_t)(ds_take(p, 2) % cap);
  for (size_t i = 0; i < n; i++) {
    dst[i] = (p->pos < p->size) ? p->data[p->pos++] : 0;
  }
  dst[n] = 0;
  return n;
}
"""

_INCLUDE_RE = re.compile(r"^[ \t]*#[ \t]*include\b.*$", re.MULTILINE)


def _encode_site(plan: SitePlan) -> bytes:
    """Original literal re-encoded in the provider's wire format, used for
    the harvested corpus so behavior starts unchanged."""
    if plan.action == PROVIDER_BYTES:
        data = str(plan.site.value).encode("latin-1", errors="replace")
        data = data[: plan.cap - 1]
        return len(data).to_bytes(2, "little") + data
    width = max(plan.width, 1)
    try:
        value = int(plan.site.value)
    except (TypeError, ValueError):
        value = 0
    return (value & ((1 << (8 * width)) - 1)).to_bytes(width, "little")


def _rewrite_body(fi: FusionInput, index: int) -> tuple[str, str]:
    """(file-scope preamble, seed function text) for one input program."""
    src = fi.source
    entry_span = astjson.offsets(fi.ast.entry_node)
    body_node = None
    for child in astjson.children(fi.ast.entry_node):
        if child.get("kind") == "CompoundStmt":
            body_node = child
    if entry_span is None or body_node is None:
        raise ValueError(f"seed {fi.seed_id} has no entry definition span")
    body_span = astjson.offsets(body_node)

    consuming = [p for p in fi.plans if p.consumes]
    reads = []
    for j, plan in enumerate(consuming):
        if plan.action == PROVIDER_BYTES:
            reads.append(f"  unsigned char ds_b{j}[{plan.cap}];")
            reads.append(f"  size_t ds_b{j}_len = ds_take_bytes(&ds_p, ds_b{j}, {plan.cap});")
            reads.append(f"  (void)ds_b{j}_len;")
        else:
            reads.append(f"  unsigned long long ds_v{j} = ds_take(&ds_p, {max(plan.width, 1)});")

    # rewrite argument spans back to front so offsets stay valid
    edits: list[tuple[tuple[int, int], str]] = []
    j = 0
    for plan in fi.plans:
        cast = f"({plan.site.type_text})" if plan.site.kind == "scalar" else ""
        if plan.action == PROVIDER_SCALAR:
            edits.append((plan.site.span, f"{cast}ds_v{j}"))
        elif plan.action == MOD_INDEX:
            edits.append((plan.site.span, f"{cast}(ds_v{j} % ({plan.related_text}))"))
        elif plan.action == ALLOC_CLAMP:
            edits.append((plan.site.span, f"{cast}(1 + (ds_v{j} % {plan.cap}))"))
        elif plan.action == PROVIDER_BYTES:
            edits.append((plan.site.span, f"(char *)ds_b{j}"))
        elif plan.action == PIN_LITERAL:
            edits.append((plan.site.span, plan.pin_text))
        if plan.consumes:
            j += 1

    body = src[body_span[0] : body_span[1]]
    shift = body_span[0]
    for span, text in sorted(edits, key=lambda e: e[0][0], reverse=True):
        if span[0] < body_span[0] or span[1] > body_span[1]:
            continue  # literal lives outside the entry body (a global); leave it
        body = body[: span[0] - shift] + text + body[span[1] - shift :]

    params = fi.ast.entry_params
    data_name = params[0][1] if len(params) > 0 else "data"
    size_name = params[1][1] if len(params) > 1 else "size"
    data_type = params[0][2] if len(params) > 0 else "const unsigned char *"
    size_type = params[1][2] if len(params) > 1 else "size_t"

    fn = [f"static int ds_seed_{index}(const unsigned char *ds_data, size_t ds_size) {{"]
    fn.append("  ds_provider ds_p = {ds_data, ds_size, 0};")
    fn.append("  (void)ds_p;")
    fn.extend(reads)
    fn.append(f"  {data_type} {data_name} = ({data_type})(ds_p.data + ds_p.pos);")
    fn.append(f"  {size_type} {size_name} = ({size_type})(ds_p.size - ds_p.pos);")
    fn.append(f"  (void){data_name}; (void){size_name};")
    fn.append("  " + body)
    fn.append("  return 0;")
    fn.append("}")

    preamble = src[: entry_span[0]] + src[entry_span[1] :]
    preamble = _INCLUDE_RE.sub("", preamble).strip()
    return preamble, "\n".join(fn)


def fuse(
    inputs: list[FusionInput],
    cfg: FusionConfig,
    entry_symbol: str = "LLVMFuzzerTestOneInput",
    blobs_per_seed: int = 32,
) -> FusedDriver:
    if not inputs:
        raise ValueError("nothing to fuse")
    includes: list[str] = []
    seen = set()
    for fi in inputs:
        for m in _INCLUDE_RE.finditer(fi.source):
            line = m.group(0).strip()
            if line not in seen:
                seen.add(line)
                includes.append(line)
    for must in ("#include <stddef.h>", "#include <stdio.h>", "#include <stdlib.h>"):
        if must not in seen:
            includes.append(must)
            seen.add(must)

    parts = ["/* fused driver assembled from surviving seed programs */"]
    parts.extend(includes)
    parts.append(_PROVIDER)
    preambles = []
    bodies = []
    for i, fi in enumerate(inputs):
        pre, fn = _rewrite_body(fi, i)
        if pre:
            preambles.append(f"/* file-scope code from seed {i} */\n{pre}")
        bodies.append(fn)
    parts.extend(preambles)
    parts.extend(bodies)

    n = len(inputs)
    dispatch = [
        f"int {entry_symbol}(const unsigned char *data, size_t size) {{",
        "  if (size < 1) return 0;",
        f"  unsigned ds_sel = data[0] % {n}u;",
        '  if (getenv("FUSED_TRACE"))',
        '    fprintf(stderr, "FUSED_TRACE seed=%u\\n", ds_sel);',
        "  switch (ds_sel) {",
    ]
    for i in range(n):
        dispatch.append(f"    case {i}u: return ds_seed_{i}(data + 1, size - 1);")
    dispatch.append("  }")
    dispatch.append("  return 0;")
    dispatch.append("}")
    parts.append("\n".join(dispatch))
    source = "\n\n".join(parts) + "\n"

    corpus: list[bytes] = []
    for i, fi in enumerate(inputs):
        head = bytes([i % 256])
        for plan in fi.plans:
            if plan.consumes:
                head += _encode_site(plan)
        corpus.append(head)
        for blob in fi.corpus_blobs[:blobs_per_seed]:
            corpus.append(head + blob)
    return FusedDriver(source=source, corpus=corpus, seed_order=[fi.seed_id for fi in inputs])
