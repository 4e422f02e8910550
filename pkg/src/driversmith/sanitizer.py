"""Four-stage program sanitization.

A candidate program survives only if it clears, in order:

1. syntax    - it compiles against the library headers;
2. execution - built with address/UB checking (and the resource audit when
               configured), it runs a panel of fixed inputs without any
               sanitizer finding;
3. fuzzing   - an in-process fuzzing build explores it in fixed intervals,
               stopping early when an interval discovers nothing; any crash
               found here disqualifies the driver as unstable;
4. coverage  - replaying the final corpus must execute every API on the
               program's critical path.

Branch coverage accumulated along the way is returned so the caller can
admit the seed and update the schedule. A replay engine with identical
shape serves offline runs from recorded verdicts.
"""

from __future__ import annotations

import hashlib
import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis, fsan
from .config import CampaignConfig
from .errors import AnalysisError, BuildFailed
from .seed_bank import Branch, CorpusStore
from .toolchain import Toolchain

SYNTAX = "syntax"
EXECUTION = "execution"
FUZZING = "fuzzing"
COVERAGE = "coverage"
STAGES = [SYNTAX, EXECUTION, FUZZING, COVERAGE]

#: Fixed execution panel; file-consuming drivers see the same bytes at the
#: expected path.
EXEC_INPUTS: list[bytes] = [b"", b"A", bytes(range(16)), b"\xff\xff\xff\xff"]

INPUT_FILE_LITERAL = "input_file"


@dataclass
class StageResult:
    stage: str
    passed: bool
    detail: str = ""


@dataclass
class SanitizeOutcome:
    program_id: str
    source: str
    combination: tuple[str, ...]
    passed: bool
    failed_stage: str | None
    stages: list[StageResult] = field(default_factory=list)
    branches: set[Branch] = field(default_factory=set)
    corpus_blobs: list[bytes] = field(default_factory=list)
    crash_report: str = ""
    critical: tuple[str, ...] = ()
    density: int = 0


def program_id_for(source: str) -> str:
    return "p" + hashlib.sha1(source.encode()).hexdigest()[:12]


class Sanitizer:
    """Live pipeline: builds and runs candidates against the real library."""

    def __init__(self, cfg: CampaignConfig, toolchain: Toolchain, corpus: CorpusStore):
        self.cfg = cfg
        self.toolchain = toolchain
        self.corpus = corpus
        self.workdir = (Path(cfg.workdir) / "work").resolve()

    def sanitize(self, source: str, combination: tuple[str, ...], api_names: set[str]) -> SanitizeOutcome:
        pid = program_id_for(source)
        out = SanitizeOutcome(
            program_id=pid,
            source=source,
            combination=combination,
            passed=False,
            failed_stage=None,
        )
        work = self.workdir / pid
        work.mkdir(parents=True, exist_ok=True)
        src_path = work / "driver.c"
        src_path.write_text(source)

        # --- syntax -------------------------------------------------------
        from .toolchain import ast_dump_text, syntax_check

        ok, err = syntax_check(src_path, self.toolchain.lib.include_dirs)
        if not ok:
            out.stages.append(StageResult(SYNTAX, False, err.strip()[:2000]))
            out.failed_stage = SYNTAX
            return out
        try:
            dump = ast_dump_text(src_path, self.toolchain.lib.include_dirs)
            ast = analysis.analyze_program(source, dump, api_names, self.cfg.prompt.entry_symbol)
            out.critical = tuple(analysis.critical_calls(ast))
            out.density = analysis.density(ast)
        except (BuildFailed, AnalysisError) as e:
            out.stages.append(StageResult(SYNTAX, False, str(e)[:2000]))
            out.failed_stage = SYNTAX
            return out
        try:
            cov_bin = self.toolchain.build_program(
                source, "cov", pid, entry_symbol=self.cfg.prompt.entry_symbol
            )
        except BuildFailed as e:
            out.stages.append(StageResult(SYNTAX, False, f"{e}: {e.output[:1500]}"))
            out.failed_stage = SYNTAX
            return out
        out.stages.append(StageResult(SYNTAX, True))

        # --- execution --------------------------------------------------------
        rundir = work / "run"
        rundir.mkdir(exist_ok=True)
        panel = list(EXEC_INPUTS)
        for i, blob in enumerate(panel):
            res = self._replay_one(cov_bin, blob, rundir, i)
            if res is None:
                continue
            if res.timed_out:
                out.stages.append(StageResult(EXECUTION, False, "hang: input exceeded time limit"))
                out.failed_stage = EXECUTION
                return out
            if res.crashed:
                out.stages.append(StageResult(EXECUTION, False, _summarize(res.report)))
                out.crash_report = res.report
                out.failed_stage = EXECUTION
                return out
            out.branches |= res.branches
        fsan_failure = self._fsan_pass(source, pid, work, rundir, panel)
        if fsan_failure is not None:
            out.stages.append(StageResult(EXECUTION, False, fsan_failure[0]))
            out.crash_report = fsan_failure[1]
            out.failed_stage = EXECUTION
            return out
        out.stages.append(StageResult(EXECUTION, True))

        # --- fuzzing ------------------------------------------------------------
        fuzz_source = source
        if fsan.consumes_input_file(source, INPUT_FILE_LITERAL):
            fuzz_source = fsan.add_input_file_shim(source, self.cfg.prompt.entry_symbol, INPUT_FILE_LITERAL)
        try:
            fuzz_bin = self.toolchain.build_program(
                fuzz_source, "fuzz", pid, entry_symbol=self.cfg.prompt.entry_symbol
            )
        except BuildFailed as e:
            out.stages.append(StageResult(FUZZING, False, f"fuzz build failed: {e.output[:1500]}"))
            out.failed_stage = FUZZING
            return out
        corpus_dir = work / "corpus"
        corpus_dir.mkdir(exist_ok=True)
        for i, blob in enumerate(panel):
            if blob:
                (corpus_dir / f"seed{i}").write_bytes(blob)
        for h, blob in self.corpus.blobs():
            (corpus_dir / h).write_bytes(blob)
        budget = self.cfg.sanitize.fuzz_budget_s
        interval = min(self.cfg.sanitize.fuzz_interval_s, budget)
        spent = 0.0
        while spent < budget:
            before = {p.name for p in corpus_dir.iterdir()}
            res = self.toolchain.run_fuzz(fuzz_bin, corpus_dir, interval, work)
            spent += interval
            if res.crashed:
                out.stages.append(StageResult(FUZZING, False, _summarize(res.report)))
                out.crash_report = res.report
                out.failed_stage = FUZZING
                return out
            after = {p.name for p in corpus_dir.iterdir()}
            if not (after - before):
                break

        # replay the final corpus for branch accounting
        files = sorted(corpus_dir.iterdir())
        for i, f in enumerate(files):
            blob = f.read_bytes()
            res = self._replay_one(cov_bin, blob, rundir, 1000 + i)
            if res is None or res.timed_out:
                continue
            if res.crashed:
                out.stages.append(StageResult(FUZZING, False, "unstable: corpus entry crashed on replay"))
                out.crash_report = res.report
                out.failed_stage = FUZZING
                return out
            out.branches |= res.branches
            out.corpus_blobs.append(blob)
        out.stages.append(StageResult(FUZZING, True, f"{spent:.0f}s"))

        # --- coverage -------------------------------------------------------------
        covered_fns = {fn for fn, _ in out.branches}
        missing = [api for api in out.critical if api not in covered_fns]
        if missing:
            out.stages.append(
                StageResult(COVERAGE, False, "critical calls never executed: " + ", ".join(missing))
            )
            out.failed_stage = COVERAGE
            return out
        out.stages.append(StageResult(COVERAGE, True))
        out.passed = True
        for blob in out.corpus_blobs:
            self.corpus.add(blob)
        return out

    # -- helpers ---------------------------------------------------------------

    def _replay_one(self, cov_bin, blob: bytes, rundir: Path, idx: int):
        input_path = rundir / f"in{idx}"
        input_path.write_bytes(blob)
        (rundir / INPUT_FILE_LITERAL).write_bytes(blob)
        return self.toolchain.run_replay(cov_bin, input_path, rundir)

    def _fsan_pass(self, source: str, pid: str, work: Path, rundir: Path, panel: list[bytes]):
        fcfg = self.cfg.fsan
        if not fcfg.runtime_source:
            return None
        instrumented = fsan.instrument(source, fcfg, self.cfg.prompt.entry_symbol)
        try:
            fsan_bin = self.toolchain.build_program(
                instrumented,
                "cov",
                pid + "_fsan",
                entry_symbol=self.cfg.prompt.entry_symbol,
                extra_sources=[Path(fcfg.runtime_source)],
                extra_include=fcfg.runtime_include,
            )
        except BuildFailed as e:
            return (f"resource-audit build failed: {e.output[:1500]}", "")
        for i, blob in enumerate(panel):
            input_path = rundir / f"fsan{i}"
            input_path.write_bytes(blob)
            (rundir / INPUT_FILE_LITERAL).write_bytes(blob)
            res = self.toolchain.run_replay(fsan_bin, input_path, rundir)
            if res.timed_out:
                continue
            if "==FSan==" in res.stderr:
                return (_summarize(res.stderr), res.stderr)
            if res.crashed:
                return (_summarize(res.report), res.report)
        return None


def _summarize(report: str) -> str:
    for line in report.splitlines():
        if "ERROR" in line or "==FSan==" in line or "SUMMARY" in line:
            return line.strip()[:300]
    return report.strip()[:300] if report else "nonzero exit"


# --- offline replay -----------------------------------------------------------------


class ReplaySanitizer:
    """Serves recorded outcomes keyed by program content; no compiler runs.

    The record directory holds one ``<sha1>.json`` per known program with the
    exact SanitizeOutcome fields (branches as "fn:idx" strings, corpus as hex
    strings).
    """

    def __init__(self, record_dir: str | Path):
        self.record_dir = Path(record_dir)

    def sanitize(self, source: str, combination: tuple[str, ...], api_names: set[str]) -> SanitizeOutcome:
        digest = hashlib.sha1(source.encode()).hexdigest()
        path = self.record_dir / f"{digest}.json"
        if not path.exists():
            raise BuildFailed(f"no recorded verdict for program {digest}")
        rec = json.loads(path.read_text())
        branches = {(s.rsplit(":", 1)[0], int(s.rsplit(":", 1)[1])) for s in rec.get("branches", [])}
        stages = [StageResult(s["stage"], s["passed"], s.get("detail", "")) for s in rec.get("stages", [])]
        return SanitizeOutcome(
            program_id=program_id_for(source),
            source=source,
            combination=combination,
            passed=rec["passed"],
            failed_stage=rec.get("failed_stage"),
            stages=stages,
            branches=branches,
            corpus_blobs=[bytes.fromhex(h) for h in rec.get("corpus", [])],
            crash_report=rec.get("crash_report", ""),
            critical=tuple(rec.get("critical", [])),
            density=rec.get("density", 0),
        )

    @staticmethod
    def record(outcome: SanitizeOutcome, record_dir: str | Path) -> Path:
        """Persist one live outcome as a replayable record."""
        record_dir = Path(record_dir)
        record_dir.mkdir(parents=True, exist_ok=True)
        digest = hashlib.sha1(outcome.source.encode()).hexdigest()
        payload = {
            "branches": sorted(f"{fn}:{ix}" for fn, ix in outcome.branches),
            "corpus": [b.hex() for b in outcome.corpus_blobs],
            "crash_report": outcome.crash_report,
            "critical": list(outcome.critical),
            "density": outcome.density,
            "failed_stage": outcome.failed_stage,
            "passed": outcome.passed,
            "stages": [
                {"detail": s.detail, "passed": s.passed, "stage": s.stage} for s in outcome.stages
            ],
        }
        path = record_dir / f"{digest}.json"
        path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
        return path


def cleanup_workdir(cfg: CampaignConfig) -> None:
    work = Path(cfg.workdir) / "work"
    if work.exists():
        shutil.rmtree(work)
