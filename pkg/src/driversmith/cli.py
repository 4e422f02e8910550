"""Command-line front end.

Exit codes: 0 success, 2 configuration problems, 3 budget exhausted,
4 required build tools missing.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import analysis, constraints as cons, fusion
from .campaign import Campaign
from .config import CampaignConfig, load_config
from .errors import BudgetExhausted, ConfigError, DriversmithError, ToolchainMissing
from .library_model import call_graph_from_dump, ingest_ast
from .report import render_report
from .sanitizer import EXEC_INPUTS
from .seed_bank import CorpusStore, SeedBank
from .toolchain import Toolchain, ast_dump_text


def _load_cfg(path: str) -> CampaignConfig:
    try:
        return load_config(path)
    except ConfigError as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(2)


def _fail(e: Exception) -> None:
    if isinstance(e, ToolchainMissing):
        click.echo(f"toolchain error: {e}", err=True)
        sys.exit(4)
    if isinstance(e, BudgetExhausted):
        click.echo(f"budget exhausted: {e}", err=True)
        sys.exit(3)
    if isinstance(e, ConfigError):
        click.echo(f"config error: {e}", err=True)
        sys.exit(2)
    raise e


@click.group()
def main() -> None:
    """Generate, vet, and fuse library fuzz drivers."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--resume", is_flag=True, help="Continue a previous campaign in the same workdir.")
def fuzz(config_path: str, resume: bool) -> None:
    """Run a driver-generation campaign."""
    cfg = _load_cfg(config_path)
    try:
        campaign = Campaign(cfg)
        result = campaign.run(resume=resume)
    except DriversmithError as e:
        _fail(e)
        return
    click.echo(f"iterations: {result.iterations}")
    click.echo(f"stop reason: {result.stop_reason}")
    click.echo(f"seeds: {result.seeds} ({result.unique_seeds} unique)")
    click.echo(f"covered branches: {result.covered_branches}")
    click.echo(f"total cost: ${result.total_cost}")
    if result.stop_reason.startswith("budget"):
        sys.exit(3)


@main.command("infer-constraints")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", default="", help="Where to write constraints.json (default: workdir).")
def infer_constraints(config_path: str, out_path: str) -> None:
    """Mine argument constraints from the campaign's surviving programs."""
    cfg = _load_cfg(config_path)
    try:
        bank = SeedBank.load(Path(cfg.workdir) / "bank")
        if not bank.seeds:
            click.echo("bank is empty; run `fuzz` first", err=True)
            sys.exit(2)
        model, _ = _model_for(cfg)
        api_names = set(model.api_names())
        api_returns = {a.name: a.return_type for a in model.apis.values()}
        evidence = []
        for seed in bank.seeds.values():
            tmp = Path(cfg.workdir) / "work" / "infer" / f"{seed.seed_id}.c"
            tmp.parent.mkdir(parents=True, exist_ok=True)
            tmp.write_text(seed.source)
            dump = ast_dump_text(tmp, cfg.library.include_dirs)
            ast = analysis.analyze_program(seed.source, dump, api_names, cfg.prompt.entry_symbol)
            evidence.append(cons.gather_evidence(ast, api_returns, cfg.constraints))
        resolved = cons.resolve(cons.aggregate(evidence))
    except DriversmithError as e:
        _fail(e)
        return
    dest = Path(out_path) if out_path else Path(cfg.workdir) / "constraints.json"
    dest.write_text(json.dumps([c.to_dict() for c in resolved], indent=1, sort_keys=True) + "\n")
    for c in resolved:
        related = f" -> arg {c.related}" if c.related >= 0 else ""
        click.echo(f"{c.api} arg {c.arg_index}: {c.kind}{related}")
    click.echo(f"wrote {dest}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default="", help="Output directory (default: workdir/fused).")
@click.option("--skip-trials", is_flag=True, help="Adopt all conversions without trial runs.")
def fuse(config_path: str, out_dir: str, skip_trials: bool) -> None:
    """Fuse the bank's surviving programs into one driver."""
    cfg = _load_cfg(config_path)
    try:
        bank = SeedBank.load(Path(cfg.workdir) / "bank")
        if not bank.seeds:
            click.echo("bank is empty; run `fuzz` first", err=True)
            sys.exit(2)
        model, _ = _model_for(cfg)
        api_names = set(model.api_names())
        tc = Toolchain(cfg.library, Path(cfg.workdir), cfg.sanitize)
        cpath = Path(cfg.workdir) / "constraints.json"
        resolved = (
            [cons.Constraint.from_dict(d) for d in json.loads(cpath.read_text())]
            if cpath.exists()
            else []
        )
        # The campaign's harvested corpus (magic bytes the fuzzer already
        # discovered) reseeds the fused driver; every seed gets the shared
        # pool since per-seed provenance is not tracked across campaigns.
        store = CorpusStore(Path(cfg.workdir) / "corpus")
        shared_blobs = [p.read_bytes() for p in store.paths()[:32]]
        inputs = []
        for i, seed in enumerate(bank.seeds.values()):
            tmp = Path(cfg.workdir) / "work" / "fuse" / f"{seed.seed_id}.c"
            tmp.parent.mkdir(parents=True, exist_ok=True)
            tmp.write_text(seed.source)
            dump = ast_dump_text(tmp, cfg.library.include_dirs)
            ast = analysis.analyze_program(seed.source, dump, api_names, cfg.prompt.entry_symbol)
            plans = fusion.plan_conversions(ast, resolved, cfg.fusion)
            if not skip_trials:
                plans = _vet_plans(tc, cfg, seed.source, plans, f"trial_{i}")
            inputs.append(
                fusion.FusionInput(
                    seed_id=seed.seed_id,
                    source=seed.source,
                    ast=ast,
                    plans=plans,
                    corpus_blobs=shared_blobs,
                )
            )
        fused = fusion.fuse(inputs, cfg.fusion, cfg.prompt.entry_symbol)
        # prove the fused driver still builds
        tc.build_program(fused.source, "fuzz", "fused_check")
    except DriversmithError as e:
        _fail(e)
        return
    dest = Path(out_dir) if out_dir else Path(cfg.workdir) / "fused"
    dest.mkdir(parents=True, exist_ok=True)
    (dest / "fused.c").write_text(fused.source)
    corpus_dir = dest / "corpus"
    corpus_dir.mkdir(exist_ok=True)
    for i, blob in enumerate(fused.corpus):
        (corpus_dir / f"fused{i:04d}").write_bytes(blob)
    click.echo(f"fused {len(inputs)} seeds -> {dest / 'fused.c'}")
    click.echo(f"initial corpus: {len(fused.corpus)} inputs")


@main.command("run-driver")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--driver", "driver_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", default="", type=click.Path())
@click.option("--seconds", default=60.0, show_default=True)
def run_driver(config_path: str, driver_path: str, corpus_path: str, seconds: float) -> None:
    """Build a fused driver and fuzz it for a fixed time budget."""
    cfg = _load_cfg(config_path)
    try:
        tc = Toolchain(cfg.library, Path(cfg.workdir), cfg.sanitize)
        src = Path(driver_path).read_text()
        binary = tc.build_program(src, "fuzz", "fused_run")
        work = Path(cfg.workdir) / "work" / "fused_run"
        work.mkdir(parents=True, exist_ok=True)
        # Absolute: run_fuzz execs the binary with cwd inside the work dir.
        corpus_dir = (Path(corpus_path) if corpus_path else work / "corpus").resolve()
        corpus_dir.mkdir(parents=True, exist_ok=True)
        res = tc.run_fuzz(binary, corpus_dir, seconds, work)
    except DriversmithError as e:
        _fail(e)
        return
    if res.crashed:
        click.echo("crash found:")
        for line in res.report.splitlines():
            if "ERROR" in line or "SUMMARY" in line:
                click.echo(f"  {line.strip()}")
        artifacts = sorted((work / "artifacts").glob("*"))
        if artifacts:
            click.echo(f"reproducer: {artifacts[-1]}")
    else:
        click.echo(f"no crash in {seconds:.0f}s; corpus now {len(list(corpus_dir.iterdir()))} entries")


@main.command()
@click.option("--campaign", "campaign_dirs", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--label", "labels", multiple=True, help="Optional label per campaign, in order.")
def report(campaign_dirs: tuple[str, ...], out_dir: str, labels: tuple[str, ...]) -> None:
    """Render CSV summaries and PNG charts for campaign directories."""
    written = render_report(list(campaign_dirs), out_dir, list(labels) or None)
    for p in written:
        click.echo(str(p))


def _model_for(cfg: CampaignConfig):
    lib = cfg.library
    if lib.impl_dump:
        dump_text = Path(lib.impl_dump).read_text()
    else:
        dump_text = ast_dump_text(Path(lib.sources[0]), lib.include_dirs)
    model = ingest_ast(dump_text, lib.headers, name=lib.name)
    model.call_graph = call_graph_from_dump(dump_text)
    return model, dump_text


def _vet_plans(tc: Toolchain, cfg: CampaignConfig, source: str, plans, tag: str):
    """Keep only conversions whose trial builds stay quiet on the panel."""
    kept = []
    counter = [0]

    def runner(candidate: str) -> bool:
        counter[0] += 1
        try:
            built = tc.build_program(candidate, "cov", f"{tag}_{counter[0]}", entry_symbol=cfg.prompt.entry_symbol)
        except DriversmithError:
            return False
        work = Path(cfg.workdir) / "work" / tag
        work.mkdir(parents=True, exist_ok=True)
        for i, blob in enumerate(EXEC_INPUTS):
            p = work / f"in{i}"
            p.write_bytes(blob)
            (work / "input_file").write_bytes(blob)
            res = tc.run_replay(built, p, work)
            if res.timed_out or res.crashed:
                return False
        return True

    for plan in plans:
        if not plan.consumes:
            kept.append(plan)
            continue
        if fusion.trial_convert(source, plan, runner, cfg.fusion.trial_values):
            kept.append(plan)
        else:
            kept.append(fusion.SitePlan(plan.site, fusion.SKIP))
    return kept


if __name__ == "__main__":
    main()
