"""Static analysis of one generated harness program.

Consumes the same JSON AST schema as the library model, produced per
program by the build step. All analyses are intra-procedural over the
harness entry function: control flow with loops collapsed into
super-blocks, a critical path maximizing library API call sites, explicit
data-flow (assignment chains, address-of out-params, return values; no
alias analysis), and constant-argument sites for later conversion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import astjson
from .errors import AnalysisError

LOOP_KINDS = {"WhileStmt", "ForStmt", "DoStmt"}
_CONTROL_KINDS = LOOP_KINDS | {"IfStmt", "SwitchStmt", "CompoundStmt", "CaseStmt", "DefaultStmt"}

_SCALAR_WIDTHS = [
    ("long double", 16),
    ("unsigned long long", 8), ("long long", 8),
    ("unsigned long", 8), ("long", 8),
    ("unsigned short", 2), ("short", 2),
    ("unsigned char", 1), ("signed char", 1), ("char", 1), ("_Bool", 1),
    ("unsigned int", 4), ("int", 4),
    ("double", 8), ("float", 4),
]


def scalar_width(desugared: str) -> int | None:
    t = desugared.strip()
    if "*" in t or "[" in t or "(" in t:
        return None
    if t.startswith("enum "):
        return 4
    for name, width in _SCALAR_WIDTHS:
        if t == name or t == f"const {name}":
            return width
    return None


@dataclass
class Arg:
    node: astjson.Node
    text: str
    qual: str
    desugared: str
    span: tuple[int, int] | None


@dataclass
class CallSite:
    index: int
    callee: str
    line: int
    offset: int
    args: list[Arg]
    is_api: bool


@dataclass
class ConstArgSite:
    site: int
    api: str
    arg_index: int
    kind: str  # "scalar" | "string"
    value: Any
    width: int
    type_text: str
    span: tuple[int, int]  # span of the argument expression to rewrite
    via_var: str | None = None


@dataclass
class CfgBlock:
    bid: int
    offset: int
    line: int
    calls: list[int] = field(default_factory=list)
    dead: bool = False


@dataclass
class Cfg:
    blocks: list[CfgBlock]
    edges: set[tuple[int, int]]
    entry: int
    exit: int


@dataclass
class ProgramAst:
    source: str
    entry_symbol: str
    entry_node: astjson.Node
    entry_params: list[tuple[str, str, str]]  # (decl_id, name, type)
    sites: list[CallSite]
    cfg: Cfg
    flow_edges: set[tuple[int, int]]  # (origin site, consumer site)
    var_origins: dict[str, frozenset[int]]
    locals: dict[str, astjson.Node]  # decl id -> VarDecl
    assigned_ids: set[str]
    addr_taken_ids: set[str]


# --- construction ---------------------------------------------------------


def _callee_name(call: astjson.Node) -> str | None:
    kids = astjson.children(call)
    if not kids:
        return None
    return astjson.referenced_name(kids[0])


def _call_args(call: astjson.Node) -> list[astjson.Node]:
    return astjson.children(call)[1:]


class _Analyzer:
    def __init__(self, source: str, api_names: set[str], entry_symbol: str):
        self.source = source
        self.api_names = api_names
        self.entry_symbol = entry_symbol
        self.sites: list[CallSite] = []
        self.site_by_id: dict[int, CallSite] = {}
        self.node_site: dict[int, int] = {}  # id(node) -> site index

        self.blocks: list[CfgBlock] = []
        self.edges: set[tuple[int, int]] = set()
        self.loop_stack: list[dict[str, Any]] = []

        self.env: dict[str, frozenset[int]] = {}
        self.flow_edges: set[tuple[int, int]] = set()
        self.locals: dict[str, astjson.Node] = {}
        self.assigned_ids: set[str] = set()
        self.addr_taken_ids: set[str] = set()

    # -- call site collection (one pass, source order) --

    def collect_sites(self, node: astjson.Node) -> None:
        if node.get("kind") == "CallExpr":
            callee = _callee_name(node)
            if callee:
                idx = len(self.sites)
                args = []
                for a in _call_args(node):
                    args.append(
                        Arg(
                            node=a,
                            text=(astjson.source_text(a, self.source) or "").strip(),
                            qual=astjson.qual_type(a),
                            desugared=astjson.desugared_type(a),
                            span=astjson.offsets(a),
                        )
                    )
                site = CallSite(
                    index=idx,
                    callee=callee,
                    line=astjson.line_of(node) or 0,
                    offset=astjson.begin_offset(node),
                    args=args,
                    is_api=callee in self.api_names,
                )
                self.sites.append(site)
                self.node_site[id(node)] = idx
        for child in astjson.children(node):
            self.collect_sites(child)

    # -- CFG ----------------------------------------------------------------

    def _new_block(self, node: astjson.Node | None) -> int:
        bid = len(self.blocks)
        self.blocks.append(
            CfgBlock(
                bid=bid,
                offset=astjson.begin_offset(node) if node is not None else -1,
                line=(astjson.line_of(node) or 0) if node is not None else 0,
            )
        )
        return bid

    def _attach_calls(self, bid: int, node: astjson.Node, *, shallow: bool = False) -> None:
        """Record call sites contained in node into block bid.

        shallow=True stops at nested control-flow statements (their calls
        belong to their own blocks).
        """
        if node.get("kind") == "CallExpr" and id(node) in self.node_site:
            self.blocks[bid].calls.append(self.node_site[id(node)])
        for child in astjson.children(node):
            if shallow and child.get("kind") in _CONTROL_KINDS:
                continue
            self._attach_calls(bid, child, shallow=shallow)

    def _link(self, preds: list[int], bid: int) -> None:
        for p in preds:
            self.edges.add((p, bid))

    def build_cfg(self, body: astjson.Node, entry: int, exit_: int) -> Cfg:
        frontier = self._stmt(body, [entry], exit_)
        self._link(frontier, exit_)
        cfg = Cfg(blocks=self.blocks, edges=self.edges, entry=entry, exit=exit_)
        self._mark_dead(cfg)
        return cfg

    def _mark_dead(self, cfg: Cfg) -> None:
        seen = {cfg.entry}
        stack = [cfg.entry]
        succ: dict[int, list[int]] = {}
        for a, b in cfg.edges:
            succ.setdefault(a, []).append(b)
        while stack:
            cur = stack.pop()
            for nxt in succ.get(cur, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        for blk in cfg.blocks:
            blk.dead = blk.bid not in seen

    def _stmt(self, node: astjson.Node, preds: list[int], exit_: int) -> list[int]:
        kind = node.get("kind")
        if kind is None or kind == "NullStmt":
            return preds
        if kind == "CompoundStmt":
            cur = preds
            for child in astjson.children(node):
                cur = self._stmt(child, cur, exit_)
            return cur
        if kind == "IfStmt":
            kids = astjson.children(node)
            if not kids:
                return preds
            cond, rest = kids[0], kids[1:]
            bid = self._new_block(node)
            self._attach_calls(bid, cond)
            self._link(preds, bid)
            has_else = bool(node.get("hasElse")) and len(rest) >= 2
            then_front = self._stmt(rest[0], [bid], exit_) if rest else [bid]
            if has_else:
                else_front = self._stmt(rest[1], [bid], exit_)
                return then_front + else_front
            return then_front + [bid]
        if kind == "WhileStmt":
            kids = astjson.children(node)
            cond, body = (kids[0], kids[1]) if len(kids) >= 2 else (kids[0] if kids else None, None)
            return self._loop(node, cond, body, None, preds, exit_, post_test=False)
        if kind == "DoStmt":
            kids = astjson.children(node)
            body, cond = (kids[0], kids[1]) if len(kids) >= 2 else (None, None)
            return self._loop(node, cond, body, None, preds, exit_, post_test=True)
        if kind == "ForStmt":
            kids = [c for c in node.get("inner", []) or [] if isinstance(c, dict)]
            # layout: init, cond-var slot, cond, inc, body (empty dicts when absent)
            init = kids[0] if len(kids) > 0 and kids[0].get("kind") else None
            cond = kids[2] if len(kids) > 2 and kids[2].get("kind") else None
            inc = kids[3] if len(kids) > 3 and kids[3].get("kind") else None
            body = kids[4] if len(kids) > 4 and kids[4].get("kind") else None
            cur = preds
            if init is not None:
                cur = self._stmt(init, cur, exit_)
            return self._loop(node, cond, body, inc, cur, exit_, post_test=False)
        if kind == "ReturnStmt":
            bid = self._new_block(node)
            self._attach_calls(bid, node, shallow=True)
            self._link(preds, bid)
            self.edges.add((bid, exit_))
            return []
        if kind == "BreakStmt":
            bid = self._new_block(node)
            self._link(preds, bid)
            if self.loop_stack:
                self.loop_stack[-1]["breaks"].append(bid)
            else:
                self.edges.add((bid, exit_))
            return []
        if kind == "ContinueStmt":
            bid = self._new_block(node)
            self._link(preds, bid)
            target = None
            for frame in reversed(self.loop_stack):
                if frame.get("continue") is not None:
                    target = frame["continue"]
                    break
            if target is not None:
                self.edges.add((bid, target))
            return []
        if kind == "SwitchStmt":
            return self._switch(node, preds, exit_)
        if kind in ("CaseStmt", "DefaultStmt"):
            # Reached only outside _switch handling; treat the labeled
            # statement as plain.
            kids = astjson.children(node)
            if kids:
                return self._stmt(kids[-1], preds, exit_)
            return preds
        # simple statement
        bid = self._new_block(node)
        self._attach_calls(bid, node, shallow=True)
        self._link(preds, bid)
        return [bid]

    def _loop(
        self,
        node: astjson.Node,
        cond: astjson.Node | None,
        body: astjson.Node | None,
        inc: astjson.Node | None,
        preds: list[int],
        exit_: int,
        *,
        post_test: bool,
    ) -> list[int]:
        cond_bid = self._new_block(node)
        if cond is not None:
            self._attach_calls(cond_bid, cond)
        frame = {"breaks": [], "continue": cond_bid}
        self.loop_stack.append(frame)
        if post_test:
            body_entry_front = preds
            body_front = self._stmt(body, body_entry_front, exit_) if body is not None else body_entry_front
            self._link(body_front, cond_bid)
            # back edge: condition true -> body start; approximate by edge to
            # the statement blocks created for the body. The first block
            # created after entering the loop is the body head.
            self.edges.add((cond_bid, cond_bid + 1)) if cond_bid + 1 < len(self.blocks) else None
        else:
            self._link(preds, cond_bid)
            body_front = self._stmt(body, [cond_bid], exit_) if body is not None else [cond_bid]
            if inc is not None:
                inc_bid = self._new_block(inc)
                self._attach_calls(inc_bid, inc, shallow=True)
                self._link(body_front, inc_bid)
                frame["continue"] = inc_bid
                self.edges.add((inc_bid, cond_bid))
            else:
                self._link(body_front, cond_bid)
        self.loop_stack.pop()
        return [cond_bid] + frame["breaks"]

    def _switch(self, node: astjson.Node, preds: list[int], exit_: int) -> list[int]:
        kids = astjson.children(node)
        if len(kids) < 2:
            return preds
        cond, body = kids[0], kids[-1]
        cond_bid = self._new_block(node)
        self._attach_calls(cond_bid, cond)
        self._link(preds, cond_bid)
        frame = {"breaks": [], "continue": None}
        self.loop_stack.append(frame)
        cur: list[int] = []
        has_default = False
        for child in astjson.children(body):
            ckind = child.get("kind")
            if ckind in ("CaseStmt", "DefaultStmt"):
                # unwrap nested label chains: case 1: case 2: default: stmt
                stmt = child
                while stmt.get("kind") in ("CaseStmt", "DefaultStmt"):
                    if stmt.get("kind") == "DefaultStmt":
                        has_default = True
                    sub = astjson.children(stmt)
                    stmt = sub[-1] if sub else None
                    if stmt is None:
                        break
                cur = cur + [cond_bid]
                if stmt is not None:
                    cur = self._stmt(stmt, cur, exit_)
            else:
                cur = self._stmt(child, cur, exit_)
        self.loop_stack.pop()
        out = cur + frame["breaks"]
        if not has_default:
            out.append(cond_bid)
        return out

    # -- data flow ------------------------------------------------------------

    def flow_function(self, body: astjson.Node, param_ids: set[str]) -> None:
        del param_ids  # entry params carry no API origin
        self._flow_stmt(body)

    def _flow_stmt(self, node: astjson.Node) -> None:
        kind = node.get("kind")
        if kind in LOOP_KINDS:
            # two passes over loop innards models loop-carried flow
            for _ in range(2):
                for child in astjson.children(node):
                    self._flow_stmt(child)
            return
        if kind == "DeclStmt":
            for child in astjson.children(node):
                if child.get("kind") == "VarDecl":
                    self.locals[child.get("id", "")] = child
                    init = astjson.children(child)
                    if init:
                        self.env[child["id"]] = frozenset(self._flow_expr(init[-1]))
            return
        if kind == "BinaryOperator" and node.get("opcode") == "=":
            kids = astjson.children(node)
            if len(kids) == 2:
                rhs_origins = self._flow_expr(kids[1])
                lhs = astjson.strip_wrappers(kids[0], casts=True)
                if lhs.get("kind") == "DeclRefExpr":
                    did = astjson.referenced_decl_id(lhs)
                    if did:
                        self.env[did] = frozenset(rhs_origins)
                        self.assigned_ids.add(did)
                else:
                    self._flow_expr(kids[0])
            return
        if kind == "CompoundAssignOperator":
            kids = astjson.children(node)
            if len(kids) == 2:
                rhs = self._flow_expr(kids[1])
                did = astjson.referenced_decl_id(kids[0])
                if did:
                    self.env[did] = self.env.get(did, frozenset()) | frozenset(rhs)
                    self.assigned_ids.add(did)
            return
        if kind == "CallExpr":
            self._flow_expr(node)
            return
        if kind in ("UnaryOperator",) and node.get("opcode") in ("++", "--"):
            did = astjson.referenced_decl_id(astjson.children(node)[0]) if astjson.children(node) else None
            if did:
                self.assigned_ids.add(did)
            return
        for child in astjson.children(node):
            self._flow_stmt(child)

    def _flow_expr(self, node: astjson.Node) -> set[int]:
        kind = node.get("kind")
        if kind == "DeclRefExpr":
            did = astjson.referenced_decl_id(node)
            return set(self.env.get(did, frozenset())) if did else set()
        if kind == "CallExpr":
            return self._flow_call(node)
        if kind == "UnaryOperator" and node.get("opcode") == "&":
            kids = astjson.children(node)
            inner = astjson.strip_wrappers(kids[0], casts=True) if kids else None
            if inner is not None and inner.get("kind") == "DeclRefExpr":
                did = astjson.referenced_decl_id(inner)
                if did:
                    self.addr_taken_ids.add(did)
            origins: set[int] = set()
            for child in kids:
                origins |= self._flow_expr(child)
            return origins
        if kind == "BinaryOperator" and node.get("opcode") == "=":
            self._flow_stmt(node)
            kids = astjson.children(node)
            did = astjson.referenced_decl_id(kids[0]) if kids else None
            return set(self.env.get(did, frozenset())) if did else set()
        origins = set()
        for child in astjson.children(node):
            origins |= self._flow_expr(child)
        return origins

    def _flow_call(self, node: astjson.Node) -> set[int]:
        site_idx = self.node_site.get(id(node))
        site = self.sites[site_idx] if site_idx is not None else None
        arg_origin_sets: list[set[int]] = []
        out_params: list[str] = []
        for arg in _call_args(node):
            origins = self._flow_expr(arg)
            arg_origin_sets.append(origins)
            stripped = astjson.strip_wrappers(arg, casts=True)
            if stripped.get("kind") == "UnaryOperator" and stripped.get("opcode") == "&":
                kids = astjson.children(stripped)
                inner = astjson.strip_wrappers(kids[0], casts=True) if kids else None
                if inner is not None and inner.get("kind") == "DeclRefExpr":
                    did = astjson.referenced_decl_id(inner)
                    if did:
                        out_params.append(did)
        if site is not None and site.is_api:
            for origins in arg_origin_sets:
                for o in origins:
                    if o != site.index:
                        self.flow_edges.add((o, site.index))
            for did in out_params:
                self.env[did] = self.env.get(did, frozenset()) | frozenset({site.index})
            return {site.index}
        # non-API call: pass through argument origins (return-value propagation
        # across helpers) plus its own site for provenance queries; it adds no
        # edges of its own, and the interaction metrics only look at API sites
        passthrough: set[int] = set()
        for origins in arg_origin_sets:
            passthrough |= origins
        if site is not None:
            passthrough.add(site.index)
            for did in out_params:
                self.env[did] = self.env.get(did, frozenset()) | frozenset({site.index})
        return passthrough


def analyze_program(
    source: str,
    dump: str | Path | astjson.Node,
    api_names: set[str],
    entry_symbol: str = "LLVMFuzzerTestOneInput",
) -> ProgramAst:
    root = astjson.load_dump(dump) if isinstance(dump, (str, Path)) else dump
    if astjson.FILE_KEY not in root:
        astjson.annotate_files(root)

    entry = None
    for node in astjson.children(root):
        if node.get("kind") == "FunctionDecl" and node.get("name") == entry_symbol:
            if any(c.get("kind") == "CompoundStmt" for c in astjson.children(node)):
                entry = node
    if entry is None:
        raise AnalysisError(f"no {entry_symbol} definition found")
    body = [c for c in astjson.children(entry) if c.get("kind") == "CompoundStmt"][-1]

    an = _Analyzer(source, api_names, entry_symbol)
    an.collect_sites(body)

    entry_bid = an._new_block(None)
    exit_bid = an._new_block(None)
    cfg = an.build_cfg(body, entry_bid, exit_bid)

    params = []
    param_ids = set()
    for child in astjson.children(entry):
        if child.get("kind") == "ParmVarDecl":
            pid = child.get("id", "")
            params.append((pid, child.get("name", ""), astjson.qual_type(child)))
            param_ids.add(pid)
    an.flow_function(body, param_ids)

    return ProgramAst(
        source=source,
        entry_symbol=entry_symbol,
        entry_node=entry,
        entry_params=params,
        sites=an.sites,
        cfg=cfg,
        flow_edges=an.flow_edges,
        var_origins={k: v for k, v in an.env.items()},
        locals=an.locals,
        assigned_ids=an.assigned_ids,
        addr_taken_ids=an.addr_taken_ids,
    )


# --- critical path ---------------------------------------------------------


def _tarjan_sccs(n_blocks: int, edges: set[tuple[int, int]]) -> list[list[int]]:
    succ: dict[int, list[int]] = {}
    for a, b in edges:
        succ.setdefault(a, []).append(b)
    index_of: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = [0]

    def strongconnect(v: int) -> None:
        work = [(v, 0)]
        while work:
            node, pi = work[-1]
            if pi == 0:
                index_of[node] = low[node] = counter[0]
                counter[0] += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            for i in range(pi, len(succ.get(node, []))):
                nxt = succ[node][i]
                if nxt not in index_of:
                    work[-1] = (node, i + 1)
                    work.append((nxt, 0))
                    advanced = True
                    break
                elif nxt in on_stack:
                    low[node] = min(low[node], index_of[nxt])
            if advanced:
                continue
            if low[node] == index_of[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(comp)
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])

    for v in range(n_blocks):
        if v not in index_of:
            strongconnect(v)
    return out


@dataclass
class CriticalPath:
    blocks: list[list[int]]  # super-blocks in path order (member block ids)
    sites: list[int]  # API call site indices along the path, source order within block
    lines: list[int]  # lines of those sites


def critical_path(ast: ProgramAst) -> CriticalPath:
    """Entry-to-exit path maximizing library API call sites.

    Loops are collapsed into super-blocks whose API count is the sum over
    members; ties are broken toward the lexicographically earliest source
    position sequence.
    """
    cfg = ast.cfg
    sccs = _tarjan_sccs(len(cfg.blocks), cfg.edges)
    comp_of: dict[int, int] = {}
    for ci, comp in enumerate(sccs):
        for b in comp:
            comp_of[b] = ci

    n = len(sccs)
    members: list[list[int]] = [sorted(c, key=lambda b: (cfg.blocks[b].offset, b)) for c in sccs]
    api_sites_of: list[list[int]] = []
    for comp in members:
        sites = []
        for b in comp:
            for s in cfg.blocks[b].calls:
                if ast.sites[s].is_api:
                    sites.append(s)
        sites.sort(key=lambda s: ast.sites[s].offset)
        api_sites_of.append(sites)

    cedges: set[tuple[int, int]] = set()
    for a, b in cfg.edges:
        ca, cb = comp_of[a], comp_of[b]
        if ca != cb:
            cedges.add((ca, cb))

    # topological order over the condensation
    indeg = {i: 0 for i in range(n)}
    succ: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in cedges:
        succ[a].append(b)
        indeg[b] += 1
    from collections import deque

    dq = deque(sorted(i for i in range(n) if indeg[i] == 0))
    topo: list[int] = []
    while dq:
        cur = dq.popleft()
        topo.append(cur)
        for nxt in sorted(succ[cur]):
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                dq.append(nxt)

    centry, cexit = comp_of[cfg.entry], comp_of[cfg.exit]

    def pos_key(ci: int) -> int:
        offs = [cfg.blocks[b].offset for b in members[ci] if cfg.blocks[b].offset >= 0]
        return min(offs) if offs else 1 << 60

    best: dict[int, tuple[int, tuple[int, ...], list[int]]] = {
        centry: (len(api_sites_of[centry]), (pos_key(centry),), [centry])
    }
    for cur in topo:
        if cur not in best:
            continue
        count, key, path = best[cur]
        for nxt in succ[cur]:
            cand = (count + len(api_sites_of[nxt]), key + (pos_key(nxt),), path + [nxt])
            old = best.get(nxt)
            if old is None or cand[0] > old[0] or (cand[0] == old[0] and cand[1] < old[1]):
                best[nxt] = cand
    chosen = best.get(cexit)
    if chosen is None:
        # exit unreachable (e.g. infinite loop); fall back to the best path anywhere
        chosen = max(best.values(), key=lambda t: (t[0], tuple(-k for k in t[1])))
    _, _, cpath = chosen

    sites: list[int] = []
    lines: list[int] = []
    for ci in cpath:
        for s in api_sites_of[ci]:
            sites.append(s)
            lines.append(ast.sites[s].line)
    return CriticalPath(blocks=[members[ci] for ci in cpath], sites=sites, lines=lines)


def critical_calls(ast: ProgramAst) -> list[str]:
    """APIs on the critical path, in path order, non-interacting ones removed.

    Duplicates collapse to first occurrence. A singleton list is retained
    even though it has nothing to interact with.
    """
    cp = critical_path(ast)
    order: list[str] = []
    api_path_sites: dict[str, list[int]] = {}
    for s in cp.sites:
        name = ast.sites[s].callee
        if name not in api_path_sites:
            order.append(name)
            api_path_sites[name] = []
        api_path_sites[name].append(s)
    if len(order) <= 1:
        return order

    neighbors: dict[int, set[int]] = {}
    for a, b in ast.flow_edges:
        neighbors.setdefault(a, set()).add(b)
        neighbors.setdefault(b, set()).add(a)

    site_owner = {s: ast.sites[s].callee for s in cp.sites}
    kept = []
    for name in order:
        interacts = False
        for s in api_path_sites[name]:
            for other in neighbors.get(s, ()):  # any flow partner on the path
                if other in site_owner and site_owner[other] != name:
                    interacts = True
                    break
            if interacts:
                break
        if interacts:
            kept.append(name)
    return kept


# --- density ---------------------------------------------------------------


def density(ast: ProgramAst) -> int:
    """Size of the largest data-flow-connected set of API call sites."""
    api_sites = [s.index for s in ast.sites if s.is_api]
    if not api_sites:
        return 0
    parent = {s: s for s in api_sites}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in ast.flow_edges:
        if a in parent and b in parent:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    sizes: dict[int, int] = {}
    for s in api_sites:
        r = find(s)
        sizes[r] = sizes.get(r, 0) + 1
    return max(sizes.values())


# --- constant argument sites -------------------------------------------------


_LITERAL_KINDS = {"IntegerLiteral", "CharacterLiteral", "FloatingLiteral"}


def _literal_value(node: astjson.Node) -> tuple[str, Any] | None:
    """(kind, value) for a literal-ish expression, unwrapping sign/casts."""
    cur = astjson.strip_wrappers(node, casts=True)
    neg = False
    while cur.get("kind") == "UnaryOperator" and cur.get("opcode") in ("-", "+"):
        if cur.get("opcode") == "-":
            neg = not neg
        kids = astjson.children(cur)
        if not kids:
            return None
        cur = astjson.strip_wrappers(kids[0], casts=True)
    kind = cur.get("kind")
    if kind == "IntegerLiteral":
        v = int(cur.get("value", "0"), 0)
        return ("scalar", -v if neg else v)
    if kind == "CharacterLiteral":
        v = int(cur.get("value", 0))
        return ("scalar", -v if neg else v)
    if kind == "FloatingLiteral":
        v = float(cur.get("value", "0"))
        return ("float", -v if neg else v)
    if kind == "StringLiteral":
        raw = cur.get("value", '""')
        try:
            import ast as pyast

            return ("string", pyast.literal_eval(raw))
        except (ValueError, SyntaxError):
            return ("string", raw.strip('"'))
    return None


def const_arg_sites(ast: ProgramAst) -> list[ConstArgSite]:
    """Arguments at API call sites that are literals, or locals initialized
    from literals and never reassigned. Scalar and immutable-array (string)
    arguments only."""
    out: list[ConstArgSite] = []
    for site in ast.sites:
        if not site.is_api:
            continue
        for ai, arg in enumerate(site.args):
            if arg.span is None:
                continue
            lit = _literal_value(arg.node)
            via = None
            if lit is None:
                stripped = astjson.strip_wrappers(arg.node, casts=True)
                if stripped.get("kind") == "DeclRefExpr":
                    did = astjson.referenced_decl_id(stripped)
                    decl = ast.locals.get(did or "")
                    if (
                        decl is not None
                        and did not in ast.assigned_ids
                        and did not in ast.addr_taken_ids
                    ):
                        init = astjson.children(decl)
                        if init:
                            lit = _literal_value(init[-1])
                            via = decl.get("name")
            if lit is None:
                continue
            lkind, value = lit
            desug = arg.desugared or arg.qual
            if lkind == "string":
                # immutable array of char
                if "char" in desug and ("*" in desug or "[" in desug):
                    out.append(
                        ConstArgSite(
                            site=site.index,
                            api=site.callee,
                            arg_index=ai,
                            kind="string",
                            value=value,
                            width=0,
                            type_text=desug,
                            span=arg.span,
                            via_var=via,
                        )
                    )
                continue
            width = scalar_width(desug)
            if width is None:
                continue
            out.append(
                ConstArgSite(
                    site=site.index,
                    api=site.callee,
                    arg_index=ai,
                    kind="scalar",
                    value=value,
                    width=width,
                    type_text=desug,
                    span=arg.span,
                    via_var=via,
                )
            )
    return out
