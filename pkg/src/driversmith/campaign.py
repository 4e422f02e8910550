"""Campaign orchestration: the generate → sanitize → admit → reschedule loop.

Every iteration derives its own RNG from (campaign seed, iteration number),
admissions persist immediately, and the spend ledger tags entries by
iteration, so a killed campaign resumed from disk replays its interrupted
iteration bit-for-bit and converges to the identical bank.
"""

from __future__ import annotations

import hashlib
import json
import random
import shutil
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from . import schedule as sched
from .config import CampaignConfig, dump_config
from .errors import BudgetExhausted, ConfigError, OversizedContext, PromptTooLong
from .generator import CostLedger, Gateway, HttpBackend, StubBackend
from .library_model import LibraryModel, call_graph_from_dump, ingest_ast
from .prompt import build_prompt
from .sanitizer import ReplaySanitizer, Sanitizer
from .seed_bank import CorpusStore, SeedBank
from .toolchain import Toolchain, ast_dump_text


def iteration_rng(seed: int, iteration: int) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{iteration}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass
class IterationStats:
    iteration: int
    combination: list[str]
    candidates: int
    admitted: list[str]
    new_branches: int
    covered_branches: int
    spent: str
    energies: dict[str, float] = field(default_factory=dict)


@dataclass
class CampaignResult:
    iterations: int
    stop_reason: str
    seeds: int
    unique_seeds: int
    covered_branches: int
    total_cost: Decimal


class Campaign:
    def __init__(self, cfg: CampaignConfig):
        self.cfg = cfg
        self.workdir = Path(cfg.workdir).resolve()
        self.workdir.mkdir(parents=True, exist_ok=True)
        self.model = self._load_model()
        self.toolchain: Toolchain | None = None
        if not cfg.offline:
            self.toolchain = Toolchain(cfg.library, self.workdir, cfg.sanitize)
            self.model.branch_totals = self.toolchain.branch_totals()
            self.model.build_hash = self.toolchain.build_hash()
        else:
            if not cfg.records_dir:
                raise ConfigError("offline campaigns need records_dir")
            totals = Path(cfg.records_dir) / "branch_totals.json"
            if totals.exists():
                self.model.branch_totals = json.loads(totals.read_text())
        self.bank = SeedBank(self.workdir / "bank", library_hash=self.model.build_hash)
        self.corpus = CorpusStore(self.workdir / "corpus")
        self.ledger = CostLedger()
        self.schedule = sched.PowerSchedule(
            exponent=cfg.schedule.exponent,
            default_len=cfg.schedule.default_len,
            warmup_unique_seeds=cfg.schedule.warmup_unique_seeds,
            max_len=cfg.schedule.max_len,
            mode=cfg.schedule.mode,
        )
        self.schedule.ensure(self.model.api_names())
        self.gateway = Gateway(
            cfg=cfg.generation,
            backend=self._backend(),
            ledger=self.ledger,
            budget=Decimal(cfg.budget_usd),
        )
        if cfg.offline:
            self.sanitizer = ReplaySanitizer(cfg.records_dir)
        else:
            self.sanitizer = Sanitizer(cfg, self.toolchain, self.corpus)
        self.iteration = 0
        self.no_progress_streak = 0
        self.stop_reason = ""

    # -- construction helpers ---------------------------------------------------

    def _load_model(self) -> LibraryModel:
        lib = self.cfg.library
        if lib.impl_dump:
            dump_text = Path(lib.impl_dump).read_text()
        else:
            if not lib.sources:
                raise ConfigError("library.sources (or impl_dump) is required")
            dump_text = ast_dump_text(Path(lib.sources[0]), lib.include_dirs)
        model = ingest_ast(dump_text, lib.headers, name=lib.name)
        model.call_graph = call_graph_from_dump(dump_text)
        return model

    def _backend(self):
        gen = self.cfg.generation
        if gen.backend == "stub":
            return StubBackend(Path(gen.stub_pool))
        if gen.backend == "http":
            if self.cfg.offline:
                raise ConfigError("offline campaigns cannot use the http backend")
            return HttpBackend(gen, self.cfg.api_key())
        raise ConfigError(f"unknown generation backend: {gen.backend}")

    # -- persistence ---------------------------------------------------------------

    def save_state(self) -> None:
        state = {
            "iteration": self.iteration,
            "no_progress_streak": self.no_progress_streak,
            "schedule": sched.snapshot(self.schedule),
            "stop_reason": self.stop_reason,
        }
        (self.workdir / "state.json").write_text(json.dumps(state, sort_keys=True, indent=1) + "\n")
        self.ledger.dump(self.workdir / "ledger.jsonl")

    def load_state(self) -> bool:
        path = self.workdir / "state.json"
        if not path.exists():
            return False
        state = json.loads(path.read_text())
        self.iteration = state["iteration"]
        self.no_progress_streak = state["no_progress_streak"]
        self.stop_reason = state.get("stop_reason", "")
        scfg = self.cfg.schedule
        self.schedule = sched.restore(
            state["schedule"], scfg.default_len, scfg.warmup_unique_seeds, scfg.max_len, scfg.mode
        )
        self.schedule.ensure(self.model.api_names())
        self.bank = SeedBank.load(self.workdir / "bank")
        if not self.bank.library_hash:
            self.bank.library_hash = self.model.build_hash
        self.ledger = CostLedger.load(self.workdir / "ledger.jsonl")
        # roll back whatever a killed run half-recorded past the last
        # completed iteration
        done = self.iteration
        dropped = self.ledger.drop_tagged(
            lambda tag: tag.startswith("iter") and tag[4:].isdigit() and int(tag[4:]) > done
        )
        if dropped:
            self.ledger.dump(self.workdir / "ledger.jsonl")
        self.gateway.ledger = self.ledger
        return True

    # -- the loop ----------------------------------------------------------------------

    def seed_views(self) -> list[sched.SeedView]:
        return [
            sched.SeedView(seed_id=s.seed_id, quality=s.quality, combination=s.critical_calls or s.combination)
            for s in self.bank.unique_seeds()
        ]

    def _refresh_coverage(self) -> None:
        covered = self.bank.covered_by_function()
        for api in self.model.api_names():
            cov = sched.api_coverage(
                api, covered, self.model.branch_totals, self.model.reachable_functions(api)
            )
            self.schedule.update_coverage(api, cov)

    def run_iteration(self, iteration: int) -> IterationStats:
        rng = iteration_rng(self.cfg.seed, iteration)
        combination = self.schedule.mutate(self.seed_views(), rng)
        prompt = build_prompt(self.model, combination, self.cfg.prompt, rng)
        result = self.gateway.generate(prompt, tag=f"iter{iteration}")
        admitted: list[str] = []
        new_branches = 0
        api_names = set(self.model.api_names())
        for cand in result.candidates:
            outcome = self.sanitizer.sanitize(cand.source, combination, api_names)
            self._log_outcome(iteration, outcome)
            if not outcome.passed:
                continue
            res = self.bank.admit(
                outcome.source,
                combination,
                outcome.critical,
                outcome.branches,
                outcome.density,
                iteration,
                build_hash=self.model.build_hash,
            )
            if res.duplicate:
                continue
            for blob in outcome.corpus_blobs:
                self.corpus.add(blob)
            admitted.append(res.seed.seed_id)
            new_branches += res.new_branches
            self.schedule.note_seed(res.seed.critical_calls or res.seed.combination)
        self._refresh_coverage()
        stats = IterationStats(
            iteration=iteration,
            combination=list(combination),
            candidates=len(result.candidates),
            admitted=admitted,
            new_branches=new_branches,
            covered_branches=len(self.bank.covered),
            spent=str(self.ledger.total),
            energies={st.name: st.energy for st in self.schedule.ordered_stats()},
        )
        statdir = self.workdir / "stats"
        statdir.mkdir(exist_ok=True)
        (statdir / f"iter_{iteration}.json").write_text(
            json.dumps(stats.__dict__, sort_keys=True, indent=1) + "\n"
        )
        return stats

    def _log_outcome(self, iteration: int, outcome) -> None:
        logdir = self.workdir / "stats"
        logdir.mkdir(exist_ok=True)
        line = {
            "failed_stage": outcome.failed_stage,
            "iteration": iteration,
            "passed": outcome.passed,
            "program": outcome.program_id,
        }
        with (logdir / "outcomes.jsonl").open("a") as f:
            f.write(json.dumps(line, sort_keys=True) + "\n")

    def run(self, resume: bool = False) -> CampaignResult:
        if resume:
            self.load_state()
        else:
            for stale in ("bank", "stats", "state.json", "ledger.jsonl"):
                path = self.workdir / stale
                if path.is_dir():
                    shutil.rmtree(path)
                elif path.exists():
                    path.unlink()
            self.bank = SeedBank(self.workdir / "bank", library_hash=self.model.build_hash)
            (self.workdir / "config.yaml").write_text(dump_config(self.cfg))
        self._refresh_coverage()
        while True:
            if self.cfg.max_iterations and self.iteration >= self.cfg.max_iterations:
                self.stop_reason = "max_iterations"
                break
            if self.no_progress_streak >= self.cfg.patience:
                self.stop_reason = "no_progress"
                break
            nxt = self.iteration + 1
            try:
                stats = self.run_iteration(nxt)
            except BudgetExhausted as e:
                self.stop_reason = f"budget: {e}"
                break
            except (OversizedContext, PromptTooLong) as e:
                self.stop_reason = f"prompt: {e}"
                break
            self.iteration = nxt
            if stats.new_branches > 0:
                self.no_progress_streak = 0
            else:
                self.no_progress_streak += 1
            self.save_state()
        self.save_state()
        return CampaignResult(
            iterations=self.iteration,
            stop_reason=self.stop_reason,
            seeds=len(self.bank.seeds),
            unique_seeds=len(self.bank.unique_seeds()),
            covered_branches=len(self.bank.covered),
            total_cost=self.ledger.total,
        )


def run_campaign(cfg: CampaignConfig, resume: bool = False) -> CampaignResult:
    return Campaign(cfg).run(resume=resume)
