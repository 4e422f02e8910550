"""Generation gateway: routing, spend accounting, budget gate, stub determinism."""

from __future__ import annotations

from decimal import Decimal
from pathlib import Path

import pytest

from driversmith.config import GenerationConfig
from driversmith.errors import BudgetExhausted, ConfigError, PromptTooLong
from driversmith.generator import (
    CostLedger,
    Gateway,
    StubBackend,
    extract_program,
    route_model,
)
from driversmith.prompt import PromptSpec

from conftest import FIXTURES


# --- cost ledger ---------------------------------------------------------------


def test_ledger_cost_is_exact_decimal():
    ledger = CostLedger()
    cost = ledger.record("m", 1200, 300, Decimal("0.0015"), Decimal("0.002"))
    # 1.2k tokens in at $0.0015/1k = $0.0018; 0.3k out at $0.002/1k = $0.0006
    assert cost == Decimal("0.0024")
    assert ledger.total == Decimal("0.0024")


def test_ledger_total_accumulates_without_float_drift():
    ledger = CostLedger()
    for _ in range(1000):
        ledger.record("m", 1, 1, Decimal("0.0015"), Decimal("0.002"))
    # 1000 * (0.0015 + 0.002)/1000 dollars, exactly
    assert ledger.total == Decimal("0.0035")


def test_ledger_dump_load_round_trip(tmp_path: Path):
    ledger = CostLedger()
    ledger.record("a", 10, 20, Decimal("0.003"), Decimal("0.004"), tag="iter1")
    ledger.record("b", 30, 40, Decimal("0.0015"), Decimal("0.002"), tag="iter2")
    path = tmp_path / "ledger.jsonl"
    ledger.dump(path)
    back = CostLedger.load(path)
    assert back.total == ledger.total
    assert [(e.model, e.tokens_in, e.tokens_out, e.cost, e.tag) for e in back.entries] == [
        (e.model, e.tokens_in, e.tokens_out, e.cost, e.tag) for e in ledger.entries
    ]


def test_ledger_drop_tagged_removes_partial_iteration(tmp_path: Path):
    ledger = CostLedger()
    ledger.record("m", 1, 1, Decimal("1"), Decimal("1"), tag="iter1")
    ledger.record("m", 1, 1, Decimal("1"), Decimal("1"), tag="iter2")
    removed = ledger.drop_tagged(lambda tag: tag == "iter2")
    assert removed == 1
    assert [e.tag for e in ledger.entries] == ["iter1"]


# --- model routing ----------------------------------------------------------------


def test_route_model_limits_are_inclusive():
    cfg = GenerationConfig()
    assert route_model(4096, cfg)[0] == cfg.short_model
    assert route_model(4097, cfg)[0] == cfg.long_model
    assert route_model(16384, cfg)[0] == cfg.long_model


def test_route_model_beyond_long_window_raises():
    with pytest.raises(PromptTooLong):
        route_model(16385, GenerationConfig())


def test_route_model_returns_decimal_prices():
    _, pin, pout = route_model(10, GenerationConfig())
    assert pin == Decimal("0.0015") and pout == Decimal("0.002")


# --- completion parsing --------------------------------------------------------------


def test_extract_program_prefers_longest_fenced_block():
    text = "intro\n```c\nshort\n```\nmore\n```c\nint main(void) { return 0; }\n```\n"
    assert extract_program(text) == "int main(void) { return 0; }"


def test_extract_program_unfenced_passthrough():
    assert extract_program("  int x;  ") == "int x;"


# --- stub backend -----------------------------------------------------------------


def make_prompt(comb=("tc_create",)) -> PromptSpec:
    return PromptSpec(text="write a driver", combination=tuple(comb), token_estimate=10)


def test_stub_backend_requires_manifest(tmp_path: Path):
    with pytest.raises(ConfigError):
        StubBackend(tmp_path)


def test_stub_backend_is_deterministic_across_instances():
    pool = FIXTURES / "stubpool_covered"
    a = StubBackend(pool).complete(make_prompt(), "m", 3, 0.9, tag="iter1")
    b = StubBackend(pool).complete(make_prompt(), "m", 3, 0.9, tag="iter1")
    assert [s.text for s in a] == [s.text for s in b]


def test_stub_backend_selection_varies_with_tag():
    pool = FIXTURES / "stubpool_covered"
    backend = StubBackend(pool)
    # one-program pool: every draw returns that program, fenced
    out = backend.complete(make_prompt(), "m", 2, 0.9, tag="iter9")
    assert all(s.text.startswith("```c\n") for s in out)


# --- gateway -------------------------------------------------------------------------


class ScriptedBackend:
    """Returns canned samples; records whether it was ever called."""

    def __init__(self, samples):
        self.samples = samples
        self.calls = 0

    def complete(self, prompt, model, n, temperature, tag):
        self.calls += 1
        return self.samples[:n]


def test_gateway_budget_gate_refuses_before_calling_backend():
    from driversmith.generator import Sample

    backend = ScriptedBackend([Sample(text="```c\nint x;\n```", tokens_in=10, tokens_out=5)])
    gw = Gateway(cfg=GenerationConfig(), backend=backend, budget=Decimal("0.000001"))
    with pytest.raises(BudgetExhausted):
        gw.generate(make_prompt(), n=1)
    assert backend.calls == 0  # the refusing call never reached the backend


def test_gateway_drops_duplicate_samples_but_charges_for_all():
    from driversmith.generator import Sample

    dup = Sample(text="```c\nint x;\n```", tokens_in=10, tokens_out=5)
    backend = ScriptedBackend([dup, dup, dup])
    gw = Gateway(cfg=GenerationConfig(), backend=backend, budget=Decimal("10"))
    result = gw.generate(make_prompt(), n=3)
    assert len(result.candidates) == 1
    assert len(gw.ledger.entries) == 3  # spend is per sample, not per survivor


def test_gateway_routes_by_prompt_estimate():
    from driversmith.generator import Sample

    backend = ScriptedBackend([Sample(text="```c\nint x;\n```", tokens_in=9000, tokens_out=5)])
    gw = Gateway(cfg=GenerationConfig(), backend=backend, budget=Decimal("10"))
    long_prompt = PromptSpec(text="p", combination=("a",), token_estimate=9000)
    result = gw.generate(long_prompt, n=1)
    assert result.model == GenerationConfig().long_model
