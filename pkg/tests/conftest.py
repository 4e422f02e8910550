"""Shared fixtures: repository paths, checked-in AST dumps, and config factories."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from driversmith.config import CampaignConfig, ConstraintConfig, load_config

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "tests" / "fixtures"
TCODEC = ROOT / "tcodec"
POOL = TCODEC / "pool"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def tcodec_dir() -> Path:
    return TCODEC


@pytest.fixture(scope="session")
def pool_dir() -> Path:
    return POOL


@pytest.fixture(scope="session")
def api_returns() -> dict[str, str]:
    return json.loads((FIXTURES / "ast" / "api_returns.json").read_text())


@pytest.fixture(scope="session")
def api_names(api_returns) -> set[str]:
    return set(api_returns)


def pool_source(pid: str) -> str:
    manifest = json.loads((POOL / "manifest.json").read_text())
    return (POOL / manifest["programs"][pid]["file"]).read_text()


def ast_fixture(name: str) -> Path:
    return FIXTURES / "ast" / f"{name}.json"


@pytest.fixture(scope="session")
def constraint_cfg() -> ConstraintConfig:
    return ConstraintConfig()


def live_campaign_config(workdir: Path, **overrides) -> CampaignConfig:
    """The canonical tcodec campaign config re-rooted at a scratch workdir."""
    cfg = load_config(TCODEC / "campaign.yaml")
    cfg.workdir = str(workdir)
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


def offline_campaign_config(workdir: Path, **overrides) -> CampaignConfig:
    """A compiler-free campaign: stub pool of one already-covered program,
    recorded sanitizer verdicts, and a checked-in library AST dump."""
    cfg = CampaignConfig()
    cfg.workdir = str(workdir)
    cfg.seed = 7
    cfg.offline = True
    cfg.records_dir = str(FIXTURES / "records")
    cfg.library.name = "tcodec"
    cfg.library.impl_dump = str(FIXTURES / "tcodec_impl.json")
    cfg.library.headers = [str(TCODEC / "include" / "tcodec.h")]
    cfg.generation.backend = "stub"
    cfg.generation.stub_pool = str(FIXTURES / "stubpool_covered")
    cfg.patience = 10
    cfg.max_iterations = 0
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg
