"""Model of the target library's public API surface.

Built from a pre-serialized AST dump of the library headers rather than an
in-process compiler, so it can be constructed from checked-in fixtures with
no toolchain. Branch totals and the internal call graph are attached later,
from the first instrumented build and the implementation dump.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import astjson
from .errors import IngestError, UnknownApiName

_BUILTIN_TYPES = {
    "void", "char", "short", "int", "long", "float", "double", "signed",
    "unsigned", "_Bool", "bool", "size_t", "ssize_t", "ptrdiff_t", "wchar_t",
    "int8_t", "int16_t", "int32_t", "int64_t", "uint8_t", "uint16_t",
    "uint32_t", "uint64_t", "intptr_t", "uintptr_t", "FILE", "va_list",
    "const", "volatile", "struct", "union", "enum", "restrict",
}


@dataclass
class ApiFunction:
    name: str
    return_type: str
    params: list[tuple[str, str]]  # (name, type); name may be ""
    variadic: bool = False
    header: str = ""

    @property
    def signature(self) -> str:
        parts = []
        for name, ty in self.params:
            if name:
                sep = "" if ty.endswith("*") else " "
                parts.append(f"{ty}{sep}{name}")
            else:
                parts.append(ty)
        if self.variadic:
            parts.append("...")
        if not parts:
            parts = ["void"]
        sep = "" if self.return_type.endswith("*") else " "
        return f"{self.return_type}{sep}{self.name}({', '.join(parts)});"


@dataclass
class TypeDef:
    name: str
    text: str
    deps: list[str] = field(default_factory=list)


@dataclass
class LibraryModel:
    name: str
    apis: dict[str, ApiFunction]
    types: dict[str, TypeDef]
    headers: list[str] = field(default_factory=list)
    branch_totals: dict[str, int] = field(default_factory=dict)
    call_graph: dict[str, set[str]] = field(default_factory=dict)
    source_hash: str = ""
    build_hash: str = ""

    def api_names(self) -> list[str]:
        return sorted(self.apis)

    def require(self, name: str) -> ApiFunction:
        try:
            return self.apis[name]
        except KeyError:
            raise UnknownApiName(name) from None

    def reachable_functions(self, api: str) -> set[str]:
        """api plus every library-internal function transitively callable from it."""
        seen: set[str] = set()
        stack = [api]
        while stack:
            fn = stack.pop()
            if fn in seen:
                continue
            seen.add(fn)
            stack.extend(self.call_graph.get(fn, ()))
        return seen


def _type_names(qual: str) -> list[str]:
    out = []
    for tok in re.findall(r"[A-Za-z_][A-Za-z0-9_]*", qual):
        if tok not in _BUILTIN_TYPES:
            out.append(tok)
    return out


def _split_return_type(fn_qual: str) -> str:
    i = fn_qual.find("(")
    if i < 0:
        return fn_qual.strip()
    return fn_qual[:i].strip()


def _slice(node: astjson.Node, sources: dict[str, str]) -> str | None:
    base = node.get(astjson.FILE_KEY)
    if not base:
        return None
    src = sources.get(Path(base).name)
    if src is None:
        return None
    return astjson.source_text(node, src)


def ingest_ast(dump: str | Path | astjson.Node, headers: list[str | Path], *, name: str = "library") -> LibraryModel:
    """Build a LibraryModel from a header AST dump plus the header sources.

    Keeps externally visible functions declared in the given headers;
    internal-linkage functions and reserved ``_``-prefixed names are
    excluded. Variadic functions are kept but flagged.
    """
    root = astjson.load_dump(dump) if isinstance(dump, (str, Path)) else dump
    if astjson.FILE_KEY not in root:
        astjson.annotate_files(root)

    header_paths = [Path(h) for h in headers]
    header_names = {p.name for p in header_paths}
    sources: dict[str, str] = {}
    for p in header_paths:
        try:
            sources[p.name] = p.read_text()
        except OSError as e:
            raise IngestError(f"cannot read header {p}: {e}") from e

    apis: dict[str, ApiFunction] = {}
    raw_types: list[tuple[astjson.Node, str]] = []  # (node, kind)

    for node in astjson.children(root):
        f = node.get(astjson.FILE_KEY)
        if not f or Path(f).name not in header_names:
            continue
        kind = node.get("kind")
        if kind == "FunctionDecl":
            if node.get("isImplicit"):
                continue
            fn_name = node.get("name", "")
            if not fn_name or fn_name.startswith("_"):
                continue
            if node.get("storageClass") == "static":
                continue
            params = []
            for child in astjson.children(node):
                if child.get("kind") == "ParmVarDecl":
                    params.append((child.get("name", ""), astjson.qual_type(child)))
            qual = astjson.qual_type(node)
            apis[fn_name] = ApiFunction(
                name=fn_name,
                return_type=_split_return_type(qual),
                params=params,
                variadic=bool(node.get("variadic")) or ", ...)" in qual,
                header=Path(f).name,
            )
        elif kind in ("RecordDecl", "TypedefDecl", "EnumDecl"):
            raw_types.append((node, kind))

    types = _collect_types(raw_types, sources)

    blob = json.dumps(sorted(apis), separators=(",", ":")).encode()
    for src in sorted(sources.values()):
        blob += src.encode()
    model = LibraryModel(
        name=name,
        apis=apis,
        types=types,
        headers=[str(p) for p in header_paths],
        source_hash=hashlib.sha256(blob).hexdigest()[:16],
    )
    return model


def _collect_types(raw: list[tuple[astjson.Node, str]], sources: dict[str, str]) -> dict[str, TypeDef]:
    # A `typedef struct X {...} Y;` dump carries both a RecordDecl and a
    # TypedefDecl whose range subsumes it; prefer the typedef text and drop
    # records fully contained in a typedef from the same file.
    typedef_spans: list[tuple[str, int, int]] = []
    for node, kind in raw:
        if kind == "TypedefDecl":
            span = astjson.offsets(node)
            f = node.get(astjson.FILE_KEY) or ""
            if span:
                typedef_spans.append((Path(f).name, span[0], span[1]))

    types: dict[str, TypeDef] = {}
    for node, kind in raw:
        tname = node.get("name", "")
        if not tname or tname.startswith("_"):
            continue
        if kind == "RecordDecl" and not node.get("completeDefinition"):
            continue
        span = astjson.offsets(node)
        f = Path(node.get(astjson.FILE_KEY) or "").name
        if kind == "RecordDecl" and span:
            inside = any(
                tf == f and ts <= span[0] and span[1] <= te
                for tf, ts, te in typedef_spans
            )
            if inside:
                continue
        text = _slice(node, sources)
        if text is None:
            continue
        text = text.strip()
        if not text.endswith(";"):
            text += ";"
        deps: list[str] = []
        for sub in astjson.walk(node):
            if sub.get("kind") == "FieldDecl":
                for dep in _type_names(astjson.qual_type(sub)):
                    if dep != tname and dep not in deps:
                        deps.append(dep)
        if kind == "TypedefDecl":
            for dep in _type_names(astjson.qual_type(node)):
                if dep != tname and dep not in deps:
                    deps.append(dep)
        types[tname] = TypeDef(name=tname, text=text, deps=deps)
    return types


def select_gadget(model: LibraryModel, rng: random.Random, limit: int = 100) -> list[str]:
    """Uniform sample of min(|apis|, limit) API names, without replacement."""
    names = model.api_names()
    k = min(len(names), limit)
    return rng.sample(names, k)


def types_for(model: LibraryModel, api_names: list[str]) -> list[TypeDef]:
    """Transitive custom-type definitions for the given APIs, dependencies first.

    Closed (every referenced custom type that has a definition is present)
    and idempotent: a second call over the same names returns the same list.
    """
    wanted: list[str] = []
    for api_name in api_names:
        api = model.require(api_name)
        for qual in [api.return_type] + [t for _, t in api.params]:
            for tname in _type_names(qual):
                if tname in model.types and tname not in wanted:
                    wanted.append(tname)

    out: list[TypeDef] = []
    emitted: set[str] = set()

    def emit(tname: str, trail: tuple[str, ...]) -> None:
        if tname in emitted or tname in trail:
            return
        td = model.types.get(tname)
        if td is None:
            return
        for dep in td.deps:
            emit(dep, trail + (tname,))
        emitted.add(tname)
        out.append(td)

    for tname in wanted:
        emit(tname, ())
    return out


def call_graph_from_dump(dump: str | Path | astjson.Node, library_functions: set[str] | None = None) -> dict[str, set[str]]:
    """Directed caller->callee graph from an implementation AST dump.

    Restricted to library-internal edges when *library_functions* is given;
    otherwise every function defined in the dump counts as internal.
    """
    root = astjson.load_dump(dump) if isinstance(dump, (str, Path)) else dump
    defined: dict[str, astjson.Node] = {}
    for node in astjson.children(root):
        if node.get("kind") != "FunctionDecl" or not node.get("name"):
            continue
        has_body = any(c.get("kind") == "CompoundStmt" for c in astjson.children(node))
        if has_body:
            defined[node["name"]] = node
    universe = library_functions if library_functions is not None else set(defined)

    graph: dict[str, set[str]] = {fn: set() for fn in defined if fn in universe or library_functions is None}
    for fn_name, node in defined.items():
        callees: set[str] = set()
        for sub in astjson.walk(node):
            if sub.get("kind") != "CallExpr":
                continue
            kids = astjson.children(sub)
            if not kids:
                continue
            callee = astjson.referenced_name(kids[0])
            if callee and callee in defined and callee != fn_name:
                if library_functions is None or callee in universe:
                    callees.add(callee)
        if fn_name in graph:
            graph[fn_name] = callees
    return graph
