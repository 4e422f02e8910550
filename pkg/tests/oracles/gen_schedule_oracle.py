#!/usr/bin/env python3
"""Independent oracle for the scheduling math.

Evaluates the energy and quality formulas with 50-digit decimal arithmetic,
deliberately sharing no code with the package under test, and freezes the
expected values into tests/fixtures/oracle_schedule.json. The test suite
compares the package's float implementation against these frozen values at
1e-12 relative error.

Formulas evaluated (mirrors of the documented contracts, written from
scratch here):

    energy(cov, s, p, E) = (1 - cov) / ((1 + s)^E * (1 + p)^E)
    quality(d, u)        = d * (1 + u)

Float inputs and expected outputs are stored as C99 hex float strings so the
fixture round-trips bit-exactly through JSON.

Run from the repository root:  python3 tests/oracles/gen_schedule_oracle.py
"""

from __future__ import annotations

import json
import random
from decimal import Decimal, getcontext
from pathlib import Path

SEED = 20260816
N_ENERGY = 1000
N_QUALITY = 1000

getcontext().prec = 50


def exact(x: float) -> Decimal:
    """The exact decimal value of a binary64 float."""
    return Decimal(x)


def energy_decimal(cov: float, s: int, p: int, e: float) -> Decimal:
    denom = (exact(1 + s) ** exact(e)) * (exact(1 + p) ** exact(e))
    return (Decimal(1) - exact(cov)) / denom


def quality_decimal(d: int, u: int) -> Decimal:
    return Decimal(d) * (Decimal(1) + Decimal(u))


def main() -> None:
    rng = random.Random(SEED)

    energy_rows = []
    # Forced edge tuples: zero/full coverage, zero counts, exponent 1.
    forced = [
        (0.0, 0, 0, 1.0),
        (1.0, 0, 0, 1.0),
        (0.5, 0, 0, 1.0),
        (1.0, 50, 50, 2.0),
        (0.25, 1, 0, 0.5),
        (0.75, 0, 1, 3.0),
    ]
    for cov, s, p, e in forced:
        exp = energy_decimal(cov, s, p, e)
        energy_rows.append([cov.hex(), s, p, e.hex(), float(exp).hex()])
    while len(energy_rows) < N_ENERGY:
        cov = rng.random()
        s = rng.randrange(0, 200)
        p = rng.randrange(0, 200)
        e = rng.uniform(0.25, 3.0)
        exp = energy_decimal(cov, s, p, e)
        energy_rows.append([cov.hex(), s, p, e.hex(), float(exp).hex()])

    quality_rows = []
    for d, u in [(0, 0), (0, 100), (1, 0), (31, 4999)]:
        quality_rows.append([d, u, float(quality_decimal(d, u)).hex()])
    while len(quality_rows) < N_QUALITY:
        d = rng.randrange(0, 32)
        u = rng.randrange(0, 5000)
        quality_rows.append([d, u, float(quality_decimal(d, u)).hex()])

    out = {
        "seed": SEED,
        "tolerance": 1e-12,
        "energy": energy_rows,
        "quality": quality_rows,
    }
    dest = Path(__file__).resolve().parents[1] / "fixtures" / "oracle_schedule.json"
    dest.write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {dest}: {len(energy_rows)} energy rows, {len(quality_rows)} quality rows")


if __name__ == "__main__":
    main()
