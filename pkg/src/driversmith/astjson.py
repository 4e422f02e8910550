"""Helpers over compiler-produced JSON AST dumps.

The dump is a tree of nodes with fields {kind, name, type, inner[], loc,
range}. Two quirks matter and are handled here once:

- File attribution is sticky: a node's location only carries a "file" key
  when the file changes relative to the previous node in preorder, so the
  current file must be threaded through a full-tree walk.
- Range endpoints name the *start* of the last token; slicing source text
  needs end.offset + end.tokLen. Locations inside macro expansions carry
  nested spellingLoc/expansionLoc objects instead of plain offsets; those
  yield no slice.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterator

from .errors import IngestError

Node = dict[str, Any]

FILE_KEY = "_ds_file"


def _loc_file(loc: Any) -> str | None:
    if not isinstance(loc, dict):
        return None
    if "file" in loc:
        return loc["file"]
    exp = loc.get("expansionLoc")
    if isinstance(exp, dict) and "file" in exp:
        return exp["file"]
    spell = loc.get("spellingLoc")
    if isinstance(spell, dict) and "file" in spell:
        return spell["file"]
    return None


def annotate_files(root: Node) -> None:
    """Resolve the sticky file attribution; stores FILE_KEY on every node."""

    current: list[str | None] = [None]

    def visit(node: Node) -> None:
        for key in ("loc", "range"):
            raw = node.get(key)
            if key == "range" and isinstance(raw, dict):
                for sub in ("begin", "end"):
                    f = _loc_file(raw.get(sub))
                    if f is not None:
                        current[0] = f
            else:
                f = _loc_file(raw)
                if f is not None:
                    current[0] = f
        node[FILE_KEY] = current[0]
        for child in node.get("inner", []) or []:
            if isinstance(child, dict):
                visit(child)

    visit(root)


def load_dump(source: str | Path) -> Node:
    """Parse a clang JSON AST dump given either a file path or the raw
    dump text itself (recognized by its leading ``{``)."""
    if isinstance(source, str) and source.lstrip().startswith("{"):
        text, origin = source, "<dump text>"
    else:
        p = Path(source)
        try:
            text = p.read_text()
        except OSError as e:
            raise IngestError(f"cannot load AST dump {p}: {e}") from e
        origin = str(p)
    try:
        root = json.loads(text)
    except json.JSONDecodeError as e:
        raise IngestError(f"cannot load AST dump {origin}: {e}") from e
    if not isinstance(root, dict) or root.get("kind") != "TranslationUnitDecl":
        raise IngestError(f"{origin}: not a translation unit dump")
    annotate_files(root)
    return root


def prune_to_file(root: Node, filename: str) -> Node:
    """Keep only top-level declarations attributed to *filename*.

    Offsets are preserved, so range slicing against the original source
    still works on the pruned tree. Matching is by basename so dumps stay
    valid when the tree is relocated.
    """
    if FILE_KEY not in root:
        annotate_files(root)
    base = Path(filename).name
    kept = []
    for child in root.get("inner", []) or []:
        f = child.get(FILE_KEY)
        if f and Path(f).name == base:
            kept.append(child)
    out = {k: v for k, v in root.items() if k != "inner"}
    out["inner"] = kept
    return out


def walk(node: Node) -> Iterator[Node]:
    yield node
    for child in node.get("inner", []) or []:
        if isinstance(child, dict):
            yield from walk(child)


def children(node: Node) -> list[Node]:
    return [c for c in node.get("inner", []) or [] if isinstance(c, dict)]


def qual_type(node: Node) -> str:
    t = node.get("type")
    if isinstance(t, dict):
        return t.get("qualType", "")
    return ""


def desugared_type(node: Node) -> str:
    t = node.get("type")
    if isinstance(t, dict):
        return t.get("desugaredQualType", t.get("qualType", ""))
    return ""


_WRAPPERS = {"ImplicitCastExpr", "ParenExpr", "ConstantExpr", "FullComment"}


def strip_wrappers(node: Node, *, casts: bool = False) -> Node:
    """Peel implicit casts and parens (and explicit casts when casts=True)."""
    wrappers = set(_WRAPPERS)
    if casts:
        wrappers.add("CStyleCastExpr")
    cur = node
    while cur.get("kind") in wrappers:
        inner = children(cur)
        if len(inner) != 1:
            break
        cur = inner[0]
    return cur


def offsets(node: Node) -> tuple[int, int] | None:
    """Absolute [start, end) source offsets of the node, when plain."""
    r = node.get("range")
    if not isinstance(r, dict):
        return None
    b, e = r.get("begin", {}), r.get("end", {})
    if "offset" not in b or "offset" not in e:
        return None
    return b["offset"], e["offset"] + e.get("tokLen", 0)


def source_text(node: Node, source: str) -> str | None:
    span = offsets(node)
    if span is None:
        return None
    start, end = span
    if start < 0 or end > len(source) or end < start:
        return None
    return source[start:end]


def line_of(node: Node) -> int | None:
    loc = node.get("loc")
    if isinstance(loc, dict):
        if "line" in loc:
            return loc["line"]
        exp = loc.get("expansionLoc")
        if isinstance(exp, dict) and "line" in exp:
            return exp["line"]
    r = node.get("range")
    if isinstance(r, dict):
        b = r.get("begin", {})
        if "line" in b:
            return b["line"]
        exp = b.get("expansionLoc")
        if isinstance(exp, dict) and "line" in exp:
            return exp["line"]
    return None


def begin_offset(node: Node) -> int:
    span = offsets(node)
    if span is not None:
        return span[0]
    r = node.get("range")
    if isinstance(r, dict):
        b = r.get("begin", {})
        exp = b.get("expansionLoc")
        if isinstance(exp, dict) and "offset" in exp:
            return exp["offset"]
    return -1


def referenced_name(node: Node) -> str | None:
    """Name referenced by a DeclRefExpr, if this subtree bottoms out in one."""
    cur = strip_wrappers(node, casts=True)
    if cur.get("kind") == "DeclRefExpr":
        ref = cur.get("referencedDecl")
        if isinstance(ref, dict):
            return ref.get("name")
    return None


def referenced_decl_id(node: Node) -> str | None:
    cur = strip_wrappers(node, casts=True)
    if cur.get("kind") == "DeclRefExpr":
        ref = cur.get("referencedDecl")
        if isinstance(ref, dict):
            return ref.get("id")
    return None
