"""Argument-constraint inference from surviving programs.

Each surviving program is statically mined for evidence that an API
argument carries one of six roles; evidence occurrences aggregate into
support counts across the bank, and per-(api, argument) conflicts resolve
to the best-supported kind. The allocation-size probe is the one dynamic
check: it builds a driver twice with the suspect argument pinned low/high
and compares peak heap usage.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from . import analysis, astjson
from .config import ConstraintConfig

ARRAY_LENGTH = "ArrayLength"
ARRAY_INDEX = "ArrayIndex"
FILE_NAME = "FileName"
FILE_DESC = "FileDesc"
ALLOC_SIZE = "AllocSize"
FORMAT_STRING = "FormatString"

#: Resolution precedence when support counts tie (earlier wins).
KIND_PRECEDENCE = [ARRAY_LENGTH, FILE_DESC, ALLOC_SIZE, ARRAY_INDEX, FILE_NAME, FORMAT_STRING]


@dataclass(frozen=True, order=True)
class Constraint:
    api: str
    arg_index: int
    kind: str
    related: int = -1  # buffer argument described by a length/index, else -1

    def to_dict(self) -> dict:
        return {
            "api": self.api,
            "arg_index": self.arg_index,
            "kind": self.kind,
            "related": self.related,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Constraint":
        return cls(api=d["api"], arg_index=d["arg_index"], kind=d["kind"], related=d.get("related", -1))


_FMT_RE = re.compile(
    r"%[#0\- +']*[0-9*]*(?:\.[0-9*]+)?(?:hh|h|ll|l|j|z|t|L)?[diouxXeEfFgGaAcspn]"
)

_ALLOC_FUNCS = {"malloc", "calloc", "realloc"}


def _norm(text: str) -> str:
    return "".join(text.split())


def _is_int_type(desugared: str) -> bool:
    t = desugared.replace("const", "").strip()
    return "*" not in t and ("int" in t or t in ("size_t", "ssize_t", "long", "unsigned long"))


def _is_char_ptr(desugared: str) -> bool:
    t = desugared
    return ("char" in t) and ("*" in t or "[" in t)


def _is_ptr(desugared: str) -> bool:
    return "*" in desugared or "[" in desugared


def _decl_ref_id(arg: analysis.Arg) -> str | None:
    node = astjson.strip_wrappers(arg.node, casts=True)
    if node.get("kind") == "DeclRefExpr":
        return astjson.referenced_decl_id(node)
    return None


def _string_literal_value(node: astjson.Node) -> str | None:
    cur = astjson.strip_wrappers(node, casts=True)
    if cur.get("kind") != "StringLiteral":
        return None
    raw = cur.get("value", "")
    try:
        import ast as pyast

        v = pyast.literal_eval(raw)
        return v if isinstance(v, str) else None
    except (ValueError, SyntaxError):
        return None


def _arg_string_value(ast: analysis.ProgramAst, arg: analysis.Arg) -> str | None:
    """Literal string value of an argument, following one level of
    never-reassigned local initialization."""
    v = _string_literal_value(arg.node)
    if v is not None:
        return v
    did = _decl_ref_id(arg)
    if did and did in ast.locals and did not in ast.assigned_ids:
        var = ast.locals[did]
        for child in astjson.children(var):
            v = _string_literal_value(child)
            if v is not None:
                return v
    return None


def _var_malloc_size_text(ast: analysis.ProgramAst, arg: analysis.Arg) -> str | None:
    """If the argument is a never-reassigned local initialized from an
    allocator call, the normalized text of the allocation-size expression."""
    did = _decl_ref_id(arg)
    if not did or did not in ast.locals or did in ast.assigned_ids:
        return None
    var = ast.locals[did]
    for child in astjson.children(var):
        call = astjson.strip_wrappers(child, casts=True)
        if call.get("kind") != "CallExpr":
            continue
        kids = astjson.children(call)
        if not kids:
            continue
        name = astjson.referenced_name(kids[0])
        if name in _ALLOC_FUNCS and len(kids) > 1:
            span = astjson.offsets(kids[1])
            if span:
                return _norm(ast.source[span[0]:span[1]])
    return None


def gather_evidence(
    ast: analysis.ProgramAst,
    api_returns: dict[str, str],
    cfg: ConstraintConfig,
    input_literal: str = "input_file",
) -> list[Constraint]:
    """Every evidence occurrence in one program (duplicates intentional:
    each occurrence contributes one unit of support)."""
    out: list[Constraint] = []
    fd_sources = set(cfg.fd_source_functions)
    entry_ids = [p[0] for p in ast.entry_params]
    data_id = entry_ids[0] if len(entry_ids) > 0 else None
    size_id = entry_ids[1] if len(entry_ids) > 1 else None

    for site in ast.sites:
        if not site.is_api:
            continue
        args = site.args
        norm_texts = [_norm(a.text) for a in args]

        # ---- ArrayLength -------------------------------------------------
        length_of: dict[int, int] = {}  # buffer arg -> length arg (this site)
        for j, arg in enumerate(args):
            if not _is_int_type(arg.desugared):
                continue
            nt = norm_texts[j]
            matched = -1
            m = re.fullmatch(r"(?:sizeof|strlen)\((.+)\)", nt)
            if m:
                inner = m.group(1)
                for k, other in enumerate(args):
                    if k != j and _is_ptr(other.desugared) and norm_texts[k] == inner:
                        matched = k
                        break
            if matched < 0:
                for k, other in enumerate(args):
                    if k == j or not _is_ptr(other.desugared):
                        continue
                    size_text = _var_malloc_size_text(ast, other)
                    if size_text is not None and size_text == nt:
                        matched = k
                        break
            if matched < 0 and data_id and size_id and _decl_ref_id(arg) == size_id:
                for k, other in enumerate(args):
                    if k != j and _decl_ref_id(other) == data_id:
                        matched = k
                        break
            if matched >= 0:
                out.append(Constraint(site.callee, j, ARRAY_LENGTH, matched))
                length_of[matched] = j

        # ---- ArrayIndex ----------------------------------------------------
        for j, arg in enumerate(args):
            if not _is_int_type(arg.desugared):
                continue
            node = astjson.strip_wrappers(arg.node, casts=True)
            if node.get("kind") != "BinaryOperator" or node.get("opcode") != "%":
                continue
            kids = astjson.children(node)
            if len(kids) != 2:
                continue
            rhs_span = astjson.offsets(kids[1])
            rhs = _norm(ast.source[rhs_span[0]:rhs_span[1]]) if rhs_span else ""
            for k, other in enumerate(args):
                if k == j or not _is_ptr(other.desugared):
                    continue
                if rhs == f"sizeof({norm_texts[k]})" or (
                    k in length_of and rhs == norm_texts[length_of[k]] and length_of[k] != j
                ):
                    out.append(Constraint(site.callee, j, ARRAY_INDEX, k))
                    break

        # ---- FileName / FormatString (string-valued) -----------------------
        for j, arg in enumerate(args):
            if not _is_char_ptr(arg.desugared):
                continue
            value = _arg_string_value(ast, arg)
            if value is None:
                continue
            if value == input_literal or _flows_to_path_open(ast, site, j, fd_sources):
                out.append(Constraint(site.callee, j, FILE_NAME))
            elif _FMT_RE.search(value):
                out.append(Constraint(site.callee, j, FORMAT_STRING))

        # ---- FileDesc --------------------------------------------------------
        for j, arg in enumerate(args):
            if not _is_int_type(arg.desugared):
                continue
            did = _decl_ref_id(arg)
            if not did:
                continue
            for origin in ast.var_origins.get(did, frozenset()):
                if ast.sites[origin].callee in fd_sources:
                    out.append(Constraint(site.callee, j, FILE_DESC))
                    break

        # ---- AllocSize (static form) ------------------------------------------
        ret = api_returns.get(site.callee, "")
        if "*" in ret:
            for j, arg in enumerate(args):
                if not _is_int_type(arg.desugared):
                    continue
                if _alloc_size_consumed(ast, site, norm_texts[j]):
                    out.append(Constraint(site.callee, j, ALLOC_SIZE))
    return out


def _flows_to_path_open(
    ast: analysis.ProgramAst, site: analysis.CallSite, arg_index: int, fd_sources: set[str]
) -> bool:
    """True when the same path expression is also handed to a known
    file-opening function elsewhere in the program."""
    text = _norm(site.args[arg_index].text)
    path_openers = fd_sources | {"fopen"}
    for other in ast.sites:
        if other.index == site.index or other.callee not in path_openers:
            continue
        if other.args and _norm(other.args[0].text) == text:
            return True
    return False


def _alloc_size_consumed(
    ast: analysis.ProgramAst, site: analysis.CallSite, size_text: str
) -> bool:
    """True when the pointer returned by `site` reaches another call that
    also receives the same size expression (memset/memcpy-style pairing)."""
    for other in ast.sites:
        if other.index == site.index:
            continue
        feeds = False
        for arg in other.args:
            did = _decl_ref_id(arg)
            if did and site.index in ast.var_origins.get(did, frozenset()):
                feeds = True
                break
        if not feeds:
            continue
        for arg in other.args:
            if _norm(arg.text) == size_text:
                return True
    return False


# --- aggregation / resolution -------------------------------------------------


def aggregate(per_program: list[list[Constraint]]) -> dict[Constraint, int]:
    support: dict[Constraint, int] = {}
    for evidence in per_program:
        for c in evidence:
            support[c] = support.get(c, 0) + 1
    return support


def resolve(support: dict[Constraint, int]) -> list[Constraint]:
    """One winner per (api, argument): highest support, precedence on ties."""
    slots: dict[tuple[str, int], list[tuple[int, int, Constraint]]] = {}
    for c, n in support.items():
        rank = KIND_PRECEDENCE.index(c.kind)
        slots.setdefault((c.api, c.arg_index), []).append((-n, rank, c))
    resolved = []
    for entries in slots.values():
        entries.sort(key=lambda t: (t[0], t[1], t[2]))
        resolved.append(entries[0][2])
    return sorted(resolved)


def infer_static(
    programs: list[tuple[str, str | Path | astjson.Node]],
    api_names: set[str],
    api_returns: dict[str, str],
    cfg: ConstraintConfig,
    entry_symbol: str = "LLVMFuzzerTestOneInput",
    input_literal: str = "input_file",
) -> list[Constraint]:
    """End-to-end static pass over (source, ast-dump) pairs."""
    evidence = []
    for source, dump in programs:
        ast = analysis.analyze_program(source, dump, api_names, entry_symbol)
        evidence.append(gather_evidence(ast, api_returns, cfg, input_literal))
    return resolve(aggregate(evidence))


# --- dynamic allocation probe ---------------------------------------------------


@dataclass
class ProbeResult:
    constrained: bool
    peak_low: int
    peak_high: int
    ratio: float
    delta: int


def alloc_probe_verdict(peak_low: int, peak_high: int, cfg: ConstraintConfig) -> ProbeResult:
    """Decide whether peak heap growth between the pinned-low and pinned-high
    runs indicates the argument drives allocation size."""
    ratio = peak_high / peak_low if peak_low > 0 else float("inf") if peak_high else 1.0
    delta = peak_high - peak_low
    constrained = ratio >= cfg.alloc_ratio_threshold or delta >= cfg.alloc_delta_bytes
    return ProbeResult(
        constrained=constrained,
        peak_low=peak_low,
        peak_high=peak_high,
        ratio=ratio,
        delta=delta,
    )


def pin_argument(source: str, span: tuple[int, int], value: int) -> str:
    """Rewrite one argument expression span to a literal value."""
    return source[: span[0]] + str(value) + source[span[1]:]


def probe_alloc_size(
    source: str,
    dump: str | Path | astjson.Node,
    api: str,
    arg_index: int,
    api_names: set[str],
    cfg: ConstraintConfig,
    builder,
    entry_symbol: str = "main",
) -> ProbeResult | None:
    """Dynamic allocation probe.

    Requires a pinnable (constant) occurrence of the argument; the driver is
    rebuilt with the value forced to `probe_low` and `probe_high`, both runs
    report peak heap bytes via the wrapped allocator, and the thresholds in
    `cfg` decide. `builder(source) -> int` must build + run and return the
    peak. Returns None when no pinnable site exists.
    """
    ast = analysis.analyze_program(source, dump, api_names, entry_symbol)
    span = None
    for cs in analysis.const_arg_sites(ast):
        if cs.api == api and cs.arg_index == arg_index and cs.kind == "scalar":
            span = cs.span
            break
    if span is None:
        return None
    peak_low = builder(pin_argument(source, span, cfg.probe_low))
    peak_high = builder(pin_argument(source, span, cfg.probe_high))
    return alloc_probe_verdict(peak_low, peak_high, cfg)
