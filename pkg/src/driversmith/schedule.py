"""Power schedule over API combinations.

Energy steers prompting toward APIs with uncovered branches that few seeds
and few prompts have touched; quality ranks seeds for use as mutation
pivots. The mutate operator implements warm-up draws plus three
combination mutators (insertion, replacement, single-point crossover).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

ApiCombination = tuple[str, ...]


@dataclass
class ApiStats:
    name: str
    coverage: float = 0.0  # covered/total branch ratio in [0, 1]
    seed_count: int = 0
    prompt_count: int = 0
    energy: float = 0.0

    def refresh(self, exponent: float) -> None:
        self.energy = compute_energy(
            self.coverage, self.seed_count, self.prompt_count, exponent
        )


def compute_energy(coverage: float, seed_count: int, prompt_count: int, exponent: float = 1.0) -> float:
    """(1 - coverage) discounted by seeds and prompts already spent on the API."""
    denom = ((1 + seed_count) ** exponent) * ((1 + prompt_count) ** exponent)
    return (1.0 - coverage) / denom


def compute_quality(density: int, unique_branches: int) -> float:
    """Seed quality: API-interaction density scaled by branch novelty."""
    return float(density) * (1.0 + unique_branches)


def api_coverage(
    api: str,
    covered_by_function: dict[str, int],
    branch_totals: dict[str, int],
    reachable: Iterable[str],
) -> float:
    """Covered/total branches over the API body plus its transitive callees.

    APIs whose reachable set has no branches at all count as fully covered
    so their energy contribution collapses to zero novelty.
    """
    total = 0
    covered = 0
    for fn in reachable:
        total += branch_totals.get(fn, 0)
        covered += covered_by_function.get(fn, 0)
    if total == 0:
        return 1.0
    return covered / total


def choose_by_energy(
    stats: Sequence[ApiStats], rng: random.Random, exclude: set[str] | None = None
) -> ApiStats | None:
    """Energy-weighted draw; uniform when all candidate energies are zero."""
    pool = [s for s in stats if not exclude or s.name not in exclude]
    if not pool:
        return None
    total = sum(s.energy for s in pool)
    if total <= 0.0:
        return pool[rng.randrange(len(pool))]
    x = rng.random() * total
    acc = 0.0
    for s in pool:
        acc += s.energy
        if x < acc:
            return s
    return pool[-1]


@dataclass
class SeedView:
    """What the scheduler needs to know about one unique seed."""

    seed_id: str
    quality: float
    combination: ApiCombination  # critical calls of the seed, path order


def choose_by_quality(seeds: Sequence[SeedView], rng: random.Random) -> SeedView | None:
    if not seeds:
        return None
    total = sum(s.quality for s in seeds)
    if total <= 0.0:
        return seeds[rng.randrange(len(seeds))]
    x = rng.random() * total
    acc = 0.0
    for s in seeds:
        acc += s.quality
        if x < acc:
            return s
    return seeds[-1]


@dataclass
class PowerSchedule:
    exponent: float = 1.0
    default_len: int = 5
    warmup_unique_seeds: int = 10
    max_len: int = 10
    mode: str = "guided"
    stats: dict[str, ApiStats] = field(default_factory=dict)

    def ensure(self, names: Iterable[str]) -> None:
        for name in names:
            if name not in self.stats:
                st = ApiStats(name=name)
                st.refresh(self.exponent)
                self.stats[name] = st

    def ordered_stats(self) -> list[ApiStats]:
        return [self.stats[k] for k in sorted(self.stats)]

    def update_coverage(self, api: str, coverage: float) -> None:
        st = self.stats[api]
        st.coverage = coverage
        st.refresh(self.exponent)

    def note_seed(self, apis: Iterable[str]) -> None:
        for api in set(apis):
            if api in self.stats:
                st = self.stats[api]
                st.seed_count += 1
                st.refresh(self.exponent)

    def _note_prompt(self, combination: ApiCombination) -> None:
        for api in combination:
            if api in self.stats:
                st = self.stats[api]
                st.prompt_count += 1
                st.refresh(self.exponent)

    def warmup_draw(self, rng: random.Random) -> ApiCombination:
        chosen: list[str] = []
        exclude: set[str] = set()
        want = min(self.default_len, len(self.stats))
        stats = self.ordered_stats()
        while len(chosen) < want:
            pick = choose_by_energy(stats, rng, exclude=exclude)
            if pick is None:
                break
            chosen.append(pick.name)
            exclude.add(pick.name)
        return tuple(chosen)

    def mutate(
        self,
        seeds: Sequence[SeedView],
        rng: random.Random,
    ) -> ApiCombination:
        """Produce the next combination to prompt for, updating prompt counts.

        Warm-up (too few unique seeds) draws default_len APIs by energy;
        afterwards a quality-weighted pivot's critical calls are mutated by
        one of insertion / replacement / crossover, chosen uniformly. An
        empty pivot combination falls back to a warm-up draw.
        """
        if self.mode == "blind":
            names = sorted(self.stats)
            k = min(self.default_len, len(names))
            comb = tuple(rng.sample(names, k))
            self._note_prompt(comb)
            return comb

        comb: ApiCombination
        if len(seeds) < self.warmup_unique_seeds:
            comb = self.warmup_draw(rng)
        else:
            pivot = choose_by_quality(seeds, rng)
            base = tuple(pivot.combination) if pivot is not None else ()
            if not base:
                comb = self.warmup_draw(rng)
            else:
                op = rng.randrange(3)
                if op == 0:
                    comb = self._insertion(base, rng)
                elif op == 1:
                    comb = self._replacement(base, rng)
                else:
                    partner = choose_by_quality(seeds, rng)
                    other = tuple(partner.combination) if partner is not None else ()
                    comb = self._crossover(base, other, rng)
        comb = _dedup(comb)[: self.max_len]
        self._note_prompt(comb)
        return comb

    def _insertion(self, base: ApiCombination, rng: random.Random) -> ApiCombination:
        base = base[: self.max_len - 1]
        stats = self.ordered_stats()
        pick = choose_by_energy(stats, rng, exclude=set(base))
        if pick is None:
            return base
        return base + (pick.name,)

    def _replacement(self, base: ApiCombination, rng: random.Random) -> ApiCombination:
        base = base[: self.max_len]
        stats = self.ordered_stats()
        pick = choose_by_energy(stats, rng, exclude=set(base))
        if pick is None:
            return base
        pos = rng.randrange(len(base))
        out = list(base)
        out[pos] = pick.name
        return tuple(out)

    def _crossover(self, first: ApiCombination, second: ApiCombination, rng: random.Random) -> ApiCombination:
        if not first:
            return _dedup(second)
        cut = rng.randint(1, len(first))
        return _dedup(first[:cut] + tuple(second))


def _dedup(comb: Iterable[str]) -> ApiCombination:
    seen: set[str] = set()
    out: list[str] = []
    for name in comb:
        if name not in seen:
            seen.add(name)
            out.append(name)
    return tuple(out)


def snapshot(schedule: PowerSchedule) -> dict:
    """Serializable view of the schedule for per-iteration stats files."""
    return {
        "exponent": schedule.exponent,
        "mode": schedule.mode,
        "stats": {
            name: {
                "coverage": st.coverage,
                "seed_count": st.seed_count,
                "prompt_count": st.prompt_count,
                "energy": st.energy,
            }
            for name, st in sorted(schedule.stats.items())
        },
    }


def restore(data: dict, default_len: int, warmup: int, max_len: int, mode: str) -> PowerSchedule:
    ps = PowerSchedule(
        exponent=data["exponent"],
        default_len=default_len,
        warmup_unique_seeds=warmup,
        max_len=max_len,
        mode=data.get("mode", mode),
    )
    for name, st in data["stats"].items():
        ps.stats[name] = ApiStats(
            name=name,
            coverage=st["coverage"],
            seed_count=st["seed_count"],
            prompt_count=st["prompt_count"],
            energy=st["energy"],
        )
    return ps

