"""Scheduling math and combination-mutation invariants."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driversmith.schedule import (
    ApiStats,
    PowerSchedule,
    SeedView,
    api_coverage,
    choose_by_energy,
    choose_by_quality,
    compute_energy,
    compute_quality,
    restore,
    snapshot,
    _dedup,
)

APIS = [f"api_{i:02d}" for i in range(12)]


def make_schedule(**kw) -> PowerSchedule:
    ps = PowerSchedule(**kw)
    ps.ensure(APIS)
    return ps


# --- formula spot values (direct hand evaluation) ---------------------------


def test_energy_uncovered_untouched_api_is_one():
    assert compute_energy(0.0, 0, 0, 1.0) == 1.0


def test_energy_fully_covered_api_is_zero():
    assert compute_energy(1.0, 3, 9, 1.0) == 0.0


def test_energy_discounts_by_seed_and_prompt_counts():
    # (1 - 0.5) / ((1+1)^1 * (1+3)^1) = 0.5 / 8
    assert compute_energy(0.5, 1, 3, 1.0) == pytest.approx(0.0625, rel=1e-15)


def test_energy_exponent_sharpens_discount():
    # (1 - 0) / ((1+1)^2 * (1+1)^2) = 1/16
    assert compute_energy(0.0, 1, 1, 2.0) == pytest.approx(0.0625, rel=1e-15)


def test_quality_spot_values():
    assert compute_quality(0, 100) == 0.0
    assert compute_quality(3, 0) == 3.0
    assert compute_quality(4, 9) == 40.0


# --- api_coverage -------------------------------------------------------------


def test_api_coverage_sums_over_reachable_functions():
    covered = {"f": 2, "g": 1}
    totals = {"f": 4, "g": 4, "h": 2}
    assert api_coverage("f", covered, totals, ["f", "g"]) == pytest.approx(3 / 8)


def test_api_coverage_branchless_reachable_set_counts_as_covered():
    assert api_coverage("f", {}, {}, ["f"]) == 1.0


# --- weighted choice ----------------------------------------------------------


def test_choose_by_energy_empty_pool_is_none():
    assert choose_by_energy([], random.Random(0)) is None


def test_choose_by_energy_excluded_all_is_none():
    stats = [ApiStats(name="a", energy=1.0)]
    assert choose_by_energy(stats, random.Random(0), exclude={"a"}) is None


def test_choose_by_energy_zero_energy_falls_back_to_uniform():
    stats = [ApiStats(name=n, energy=0.0) for n in ("a", "b", "c")]
    rng = random.Random(42)
    seen = {choose_by_energy(stats, rng).name for _ in range(200)}
    assert seen == {"a", "b", "c"}


def test_choose_by_energy_never_picks_zero_when_positive_exists():
    stats = [ApiStats(name="dead", energy=0.0), ApiStats(name="live", energy=2.0)]
    rng = random.Random(7)
    for _ in range(500):
        assert choose_by_energy(stats, rng).name == "live"


def test_choose_by_quality_zero_total_uniform():
    seeds = [SeedView(seed_id=s, quality=0.0, combination=()) for s in ("x", "y")]
    rng = random.Random(3)
    seen = {choose_by_quality(seeds, rng).seed_id for _ in range(100)}
    assert seen == {"x", "y"}


# --- warm-up and mutators ------------------------------------------------------


def test_warmup_draw_length_is_default_len():
    ps = make_schedule()
    comb = ps.warmup_draw(random.Random(0))
    assert len(comb) == ps.default_len == 5
    assert len(set(comb)) == len(comb)


def test_warmup_draw_with_fewer_apis_than_default_len():
    ps = PowerSchedule()
    ps.ensure(["only_a", "only_b"])
    comb = ps.warmup_draw(random.Random(0))
    assert sorted(comb) == ["only_a", "only_b"]


def test_mutate_uses_warmup_until_enough_unique_seeds():
    ps = make_schedule()
    seeds = [SeedView(seed_id=f"s{i}", quality=1.0, combination=("api_00",)) for i in range(9)]
    comb = ps.mutate(seeds, random.Random(1))
    assert len(comb) == 5  # still warm-up: 9 < 10 unique seeds


def test_mutate_updates_prompt_counts():
    ps = make_schedule()
    comb = ps.mutate([], random.Random(2))
    for name in comb:
        assert ps.stats[name].prompt_count == 1


def test_blind_mode_samples_uniformly_without_stats():
    ps = make_schedule(mode="blind")
    comb = ps.mutate([], random.Random(3))
    assert len(comb) == 5
    assert len(set(comb)) == 5


def test_insertion_adds_one_nonmember():
    ps = make_schedule()
    base = ("api_00", "api_01", "api_02")
    out = ps._insertion(base, random.Random(4))
    assert len(out) == len(base) + 1
    assert out[:-1] == base
    assert out[-1] not in base


def test_replacement_preserves_length_and_position():
    ps = make_schedule()
    base = ("api_00", "api_01", "api_02")
    rng = random.Random(5)
    out = ps._replacement(base, rng)
    assert len(out) == len(base)
    diff = [i for i in range(len(base)) if out[i] != base[i]]
    assert len(diff) == 1
    assert out[diff[0]] not in base


def test_crossover_subset_of_union_and_dedup():
    ps = make_schedule()
    first = ("api_00", "api_01", "api_02")
    second = ("api_02", "api_03")
    out = ps._crossover(first, second, random.Random(6))
    assert set(out) <= set(first) | set(second)
    assert len(set(out)) == len(out)


def test_dedup_keeps_first_occurrence_order():
    assert _dedup(["b", "a", "b", "c", "a"]) == ("b", "a", "c")


# --- property tests -------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_mutate_outputs_always_duplicate_free_and_capped(seed):
    rng = random.Random(seed)
    ps = make_schedule()
    seeds = [
        SeedView(
            seed_id=f"s{i}",
            quality=rng.uniform(0, 50),
            combination=tuple(rng.sample(APIS, rng.randint(1, 8))),
        )
        for i in range(12)
    ]
    comb = ps.mutate(seeds, rng)
    assert len(set(comb)) == len(comb)
    assert len(comb) <= ps.max_len
    assert all(name in ps.stats for name in comb)


@settings(max_examples=100, deadline=None)
@given(
    cov=st.floats(min_value=0.0, max_value=1.0),
    s=st.integers(min_value=0, max_value=10_000),
    p=st.integers(min_value=0, max_value=10_000),
)
def test_energy_bounds_and_monotonicity(cov, s, p):
    e = compute_energy(cov, s, p, 1.0)
    assert 0.0 <= e <= 1.0
    # more seeds or prompts never raise energy
    assert compute_energy(cov, s + 1, p, 1.0) <= e
    assert compute_energy(cov, s, p + 1, 1.0) <= e


# --- snapshot / restore -----------------------------------------------------------


def test_snapshot_restore_round_trip():
    ps = make_schedule()
    ps.update_coverage("api_03", 0.5)
    ps.note_seed(["api_03", "api_04"])
    ps.mutate([], random.Random(9))
    snap = snapshot(ps)
    back = restore(snap, ps.default_len, ps.warmup_unique_seeds, ps.max_len, ps.mode)
    assert snapshot(back) == snap


def test_restore_preserves_energy_values_exactly():
    ps = make_schedule()
    ps.update_coverage("api_00", 0.3)
    snap = snapshot(ps)
    back = restore(snap, 5, 10, 10, "guided")
    assert back.stats["api_00"].energy == ps.stats["api_00"].energy
