#!/usr/bin/env python3
"""Regenerate the checked-in test fixtures from the tcodec fixture library.

Produces, under tests/fixtures/:
  ast/<pid>.json          pruned AST dumps of the parseable harness pool programs
  ast/<name>.json         pruned dumps of the synthetic analysis programs in src/
  ast/api_returns.json    API name -> return type map
  tcodec_impl.json        pruned implementation dump (library model offline input)
  records/<sha1>.json     replayable sanitizer verdict for the covered-pool program
  records/branch_totals.json
  stubpool_covered/       single-program stub pool used by resumability tests
  reports/asan_heap_overflow.txt   a captured crash report

Each pruned dump is verified to reproduce the analysis results of the full
dump before it is written; the script fails loudly on drift.

Requires clang on PATH. Rerun after changing tcodec sources or the pool.
"""

from __future__ import annotations

import json
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from driversmith import analysis, astjson, constraints as cons  # noqa: E402
from driversmith.config import CampaignConfig, ConstraintConfig, LibraryConfig  # noqa: E402
from driversmith.generator import extract_program  # noqa: E402
from driversmith.library_model import call_graph_from_dump, ingest_ast  # noqa: E402
from driversmith.sanitizer import ReplaySanitizer, Sanitizer  # noqa: E402
from driversmith.seed_bank import CorpusStore  # noqa: E402
from driversmith.toolchain import Toolchain, ast_dump_text  # noqa: E402

TCODEC = REPO / "tcodec"
FIXTURES = REPO / "tests" / "fixtures"
INCLUDE_DIRS = [str(TCODEC / "include")]
ENTRY = "LLVMFuzzerTestOneInput"


def prune_to_files(root: astjson.Node, basenames: set[str]) -> astjson.Node:
    """Keep top-level declarations attributed to any of the given files."""
    kept = []
    for child in root.get("inner", []) or []:
        f = child.get(astjson.FILE_KEY)
        if f and Path(f).name in basenames:
            kept.append(child)
    out = {k: v for k, v in root.items() if k != "inner"}
    out["inner"] = kept
    return out


def dump_json(node: astjson.Node, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(node, separators=(",", ":")) + "\n")


def evidence_tuples(source: str, dump, api_names, api_returns) -> list:
    ast = analysis.analyze_program(source, dump, api_names, ENTRY)
    ev = cons.gather_evidence(ast, api_returns, ConstraintConfig())
    return sorted((c.api, c.arg_index, c.kind, c.related) for c in ev)


def gen_library_fixtures() -> tuple[set[str], dict[str, str]]:
    impl_dump_text = ast_dump_text(TCODEC / "src" / "tcodec.c", INCLUDE_DIRS)
    full = astjson.load_dump(impl_dump_text)
    pruned = prune_to_files(full, {"tcodec.c", "tcodec.h"})

    headers = [str(TCODEC / "include" / "tcodec.h")]
    model_full = ingest_ast(full, headers, name="tcodec")
    model_pruned = ingest_ast(pruned, headers, name="tcodec")
    assert set(model_full.apis) == set(model_pruned.apis), "prune lost API decls"
    def lib_edges(graph: dict) -> dict:
        # The full dump also defines system-header inline helpers
        # (__bswap_16 and friends); only library-visible functions matter.
        return {k: v for k, v in graph.items() if not k.startswith("_")}

    graph_full = lib_edges(call_graph_from_dump(full))
    graph_pruned = lib_edges(call_graph_from_dump(pruned))
    assert graph_full == graph_pruned, "prune changed the call graph"

    dump_json(pruned, FIXTURES / "tcodec_impl.json")
    api_names = set(model_full.api_names())
    api_returns = {a.name: a.return_type for a in model_full.apis.values()}
    dump_json(api_returns, FIXTURES / "ast" / "api_returns.json")
    print(f"library: {len(api_names)} APIs, graph edges: {sum(len(v) for v in graph_full.values())}")
    return api_names, api_returns


def gen_pool_ast(api_names: set[str], api_returns: dict[str, str]) -> None:
    manifest = json.loads((TCODEC / "pool" / "manifest.json").read_text())
    for pid, meta in sorted(manifest["programs"].items()):
        src_path = TCODEC / "pool" / meta["file"]
        source = src_path.read_text()
        try:
            dump_text = ast_dump_text(src_path, INCLUDE_DIRS)
        except Exception:
            print(f"{pid}: unparseable, skipped")
            continue
        full = astjson.load_dump(dump_text)
        pruned = prune_to_files(full, {meta["file"]})
        want = evidence_tuples(source, full, api_names, api_returns)
        got = evidence_tuples(source, pruned, api_names, api_returns)
        assert want == got, f"{pid}: pruned dump drifts: {want} != {got}"
        dump_json(pruned, FIXTURES / "ast" / f"{pid}.json")
        print(f"{pid}: {len(json.dumps(pruned))} bytes, evidence={got}")


def gen_synthetic_ast() -> None:
    src_dir = FIXTURES / "src"
    for src_path in sorted(src_dir.glob("*.c")):
        dump_text = ast_dump_text(src_path, [])
        full = astjson.load_dump(dump_text)
        pruned = prune_to_files(full, {src_path.name})
        dump_json(pruned, FIXTURES / "ast" / f"{src_path.stem}.json")
        print(f"{src_path.stem}: {len(json.dumps(pruned))} bytes")


def gen_records() -> None:
    covered_dir = FIXTURES / "stubpool_covered"
    covered_dir.mkdir(parents=True, exist_ok=True)
    source = (TCODEC / "pool" / "p03_clean_buf.c").read_text()
    (covered_dir / "covered.c").write_text(source)
    (covered_dir / "manifest.json").write_text(
        json.dumps({"programs": {"covered": {"file": "covered.c"}}}, indent=1) + "\n"
    )

    with tempfile.TemporaryDirectory() as td:
        work = Path(td)
        cfg = CampaignConfig(workdir=str(work))
        cfg.library = LibraryConfig(
            name="tcodec",
            headers=[str(TCODEC / "include" / "tcodec.h")],
            include_dirs=INCLUDE_DIRS,
            sources=[str(TCODEC / "src" / "tcodec.c")],
        )
        cfg.sanitize.fuzz_interval_s = 3.0
        cfg.sanitize.fuzz_budget_s = 6.0
        cfg.fsan.pairs = [["tc_create", "tc_destroy"]]
        cfg.fsan.runtime_source = str(TCODEC / "shim" / "fsan_rt.c")
        cfg.fsan.runtime_include = str(TCODEC / "shim")

        tc = Toolchain(cfg.library, work, cfg.sanitize)
        model = ingest_ast(
            ast_dump_text(Path(cfg.library.sources[0]), cfg.library.include_dirs),
            cfg.library.headers,
            name="tcodec",
        )
        api_names = set(model.api_names())
        san = Sanitizer(cfg, tc, CorpusStore(work / "corpus"))

        records = FIXTURES / "records"
        if records.exists():
            shutil.rmtree(records)
        # Record under the exact text a campaign will sanitize: candidates
        # pass through extract_program, which strips surrounding whitespace.
        outcome = san.sanitize(
            extract_program(source), combination=("tc_create", "tc_feed", "tc_pick"), api_names=api_names
        )
        assert outcome.passed, f"covered program must pass, got {outcome.failed_stage}"
        path = ReplaySanitizer.record(outcome, records)
        print(f"record: {path.name} branches={len(outcome.branches)}")

        totals = tc.branch_totals()
        (records / "branch_totals.json").write_text(json.dumps(totals, indent=1, sort_keys=True) + "\n")
        print(f"branch totals: {sum(totals.values())} over {len(totals)} functions")

        crash = san.sanitize(
            (TCODEC / "pool" / "p07_overflow.c").read_text(),
            combination=("tc_create", "tc_feed"),
            api_names=api_names,
        )
        assert crash.failed_stage == "execution" and crash.crash_report
        reports = FIXTURES / "reports"
        reports.mkdir(parents=True, exist_ok=True)
        (reports / "asan_heap_overflow.txt").write_text(crash.crash_report)
        print(f"crash report: {len(crash.crash_report)} chars")


def main() -> None:
    api_names, api_returns = gen_library_fixtures()
    gen_pool_ast(api_names, api_returns)
    gen_synthetic_ast()
    gen_records()
    print("fixtures regenerated under", FIXTURES)


if __name__ == "__main__":
    main()
