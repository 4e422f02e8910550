"""Campaign configuration: a single tree-structured file, loaded into typed sections.

Secrets never live in the file; the generation backend reads its API key
from the environment variable named by ``generation.api_key_env``.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError


@dataclass
class GenerationConfig:
    backend: str = "stub"
    temperature: float = 0.9
    n_samples: int = 10
    short_model: str = "small-ctx"
    long_model: str = "large-ctx"
    # Inclusive token limits for routing a prompt to a model.
    short_limit: int = 4096
    long_limit: int = 16384
    # Prices are strings so money math stays exact (Decimal).
    short_price_in: str = "0.0015"
    short_price_out: str = "0.002"
    long_price_in: str = "0.003"
    long_price_out: str = "0.004"
    retries: int = 3
    retry_base_delay_s: float = 1.0
    api_url: str = ""
    api_key_env: str = "DRIVERSMITH_API_KEY"
    stub_pool: str = ""


@dataclass
class PromptConfig:
    entry_symbol: str = "LLVMFuzzerTestOneInput"
    token_budget: int = 3000
    safety_factor: float = 1.2
    reasoning_cue: str = (
        "think step by step about how these APIs interact before writing code"
    )
    library_notes: str = (
        "When an API needs a path to read, pass the literal string \"input_file\"; "
        "when it needs a path to write, pass the literal string \"output_file\". "
        "The harness entry receives the raw fuzzer input as (data, size); prefer "
        "feeding it to the library over inventing your own data."
    )


@dataclass
class ScheduleConfig:
    exponent: float = 1.0
    default_len: int = 5
    warmup_unique_seeds: int = 10
    max_len: int = 10
    mode: str = "guided"  # or "blind"


@dataclass
class SanitizeConfig:
    exec_timeout_s: float = 10.0
    fuzz_interval_s: float = 60.0
    fuzz_budget_s: float = 600.0
    workers: int = 4
    asan_options: str = "abort_on_error=1:symbolize=1"


@dataclass
class FsanConfig:
    fd_acquire: list[str] = field(default_factory=lambda: ["open", "openat", "creat", "dup", "dup2", "fileno"])
    stream_acquire: list[str] = field(default_factory=lambda: ["fopen", "fdopen", "tmpfile"])
    fd_release: list[str] = field(default_factory=lambda: ["close"])
    stream_release: list[str] = field(default_factory=lambda: ["fclose"])
    # Library-level acquire/release pairs, e.g. [["tc_create", "tc_destroy"]].
    pairs: list[list[str]] = field(default_factory=list)
    # Functions that consume (take ownership of) a descriptor argument, as
    # [name, arg_index, arity]; fdopen hands its fd to the new stream.
    transfers: list[list[Any]] = field(default_factory=lambda: [["fdopen", 0, 2]])
    # Path to the C runtime that implements the tracking table; the resource
    # audit only runs when this is set.
    runtime_source: str = ""
    runtime_include: str = ""


@dataclass
class ConstraintConfig:
    fd_source_functions: list[str] = field(
        default_factory=lambda: ["open", "openat", "creat", "dup", "dup2", "fileno"]
    )
    alloc_ratio_threshold: float = 16.0
    alloc_delta_bytes: int = 64 * 1024 * 1024
    probe_low: int = 1
    probe_high: int = 2**20


@dataclass
class FusionConfig:
    trial_values: int = 8
    buffer_cap: int = 4096
    format_literal: str = "fused-%d"


@dataclass
class LibraryConfig:
    name: str = "library"
    headers: list[str] = field(default_factory=list)
    include_dirs: list[str] = field(default_factory=list)
    # Static archive(s) produced by the library's own build recipe, plus
    # the command that produces them (run once per campaign if given).
    build_cmd: str = ""
    build_dir: str = ""
    archive: str = ""
    # Optional pre-serialized AST dumps; generated on demand when absent.
    header_dump: str = ""
    impl_dump: str = ""
    sources: list[str] = field(default_factory=list)


@dataclass
class CampaignConfig:
    workdir: str = "campaign"
    seed: int = 0
    budget_usd: str = "10.00"
    patience: int = 10
    max_iterations: int = 0  # 0 = unlimited
    offline: bool = False
    # Directory of recorded sanitization verdicts (and optional
    # branch_totals.json); required when offline is set.
    records_dir: str = ""
    library: LibraryConfig = field(default_factory=LibraryConfig)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    prompt: PromptConfig = field(default_factory=PromptConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    sanitize: SanitizeConfig = field(default_factory=SanitizeConfig)
    fsan: FsanConfig = field(default_factory=FsanConfig)
    constraints: ConstraintConfig = field(default_factory=ConstraintConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)

    def api_key(self) -> str:
        return os.environ.get(self.generation.api_key_env, "")


def _build(cls: type, data: dict[str, Any], where: str) -> Any:
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown key {where}{key}")
        ftype = fields[key].type
        if isinstance(value, dict):
            sub = fields[key].default_factory() if fields[key].default_factory is not dataclasses.MISSING else None  # type: ignore[misc]
            if sub is None or not dataclasses.is_dataclass(sub):
                raise ConfigError(f"{where}{key} does not take a mapping")
            kwargs[key] = _build(type(sub), value, f"{where}{key}.")
        else:
            kwargs[key] = value
        del ftype
    return cls(**kwargs)


def load_config(path: str | Path) -> CampaignConfig:
    """Load a YAML config file into a CampaignConfig tree."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = yaml.safe_load(p.read_text()) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"config parse error: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return _build(CampaignConfig, data, "")


def dump_config(cfg: CampaignConfig) -> str:
    """Serialize the resolved config back to YAML (for campaign snapshots)."""
    return yaml.safe_dump(dataclasses.asdict(cfg), sort_keys=True)
