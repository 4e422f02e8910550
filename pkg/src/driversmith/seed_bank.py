"""Seed bank: surviving programs, their coverage, and crash records.

Storage is a directory of per-seed folders plus line-delimited manifests.
Serialization is canonical (sorted keys, fixed ordering) so that persist /
load round-trips are byte-identical and a resumed campaign sees exactly
the state the killed one left.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CrossBuildMerge, UnparseableTrace
from .schedule import compute_quality

Branch = tuple[str, int]
BranchSet = set[Branch]


def branch_to_str(b: Branch) -> str:
    return f"{b[0]}:{b[1]}"


def branch_from_str(s: str) -> Branch:
    fn, _, idx = s.rpartition(":")
    return (fn, int(idx))


@dataclass
class SeedProgram:
    seed_id: str
    source: str
    combination: tuple[str, ...]
    critical_calls: tuple[str, ...]
    coverage: BranchSet
    unique_branches: int
    is_unique: bool
    density: int
    quality: float
    created_iteration: int

    def meta(self) -> dict:
        return {
            "combination": list(self.combination),
            "created_iteration": self.created_iteration,
            "critical_calls": list(self.critical_calls),
            "density": self.density,
            "is_unique": self.is_unique,
            "quality": self.quality,
            "seed_id": self.seed_id,
            "unique_branches": self.unique_branches,
        }


@dataclass
class CrashRecord:
    crash_hash: str
    frames: list[str]
    report: str
    origin: str  # program/seed identifier


@dataclass
class AdmitResult:
    admitted: bool
    duplicate: bool
    seed: SeedProgram | None
    new_branches: int


_FRAME_RE = re.compile(
    r"#\d+\s+0x[0-9a-fA-F]+\s+in\s+(\S+)(?:\s+(\S+))?", re.MULTILINE
)


def normalize_frames(report: str, library_functions: set[str] | None = None) -> list[str]:
    """Top-5 in-library frames with addresses and offsets stripped.

    Frames are rendered as symbol@file-basename (line numbers and load
    addresses vary across runs of the same bug and are dropped). When no
    frame mentions a library function, all parsed frames qualify. Raises
    UnparseableTrace when nothing parses.
    """
    frames: list[tuple[str, str]] = []
    for m in _FRAME_RE.finditer(report):
        symbol = m.group(1)
        where = m.group(2) or ""
        where = where.split(":")[0]
        where = where.replace("\\", "/").rsplit("/", 1)[-1]
        if where.startswith("(") or where == "??":
            where = ""
        frames.append((symbol, where))
    if not frames:
        raise UnparseableTrace("no stack frames found in report")
    if library_functions:
        in_lib = [f for f in frames if f[0] in library_functions]
        if in_lib:
            frames = in_lib
    return [f"{sym}@{where}" if where else sym for sym, where in frames[:5]]


def dedup_crash(report: str, origin: str, library_functions: set[str] | None = None) -> CrashRecord:
    """Canonical crash identity: hash of the normalized top frames; the
    whole report is hashed when no frames parse."""
    try:
        frames = normalize_frames(report, library_functions)
        digest = hashlib.sha1("\n".join(frames).encode()).hexdigest()
    except UnparseableTrace:
        frames = []
        digest = hashlib.sha1(report.encode()).hexdigest()
    return CrashRecord(crash_hash=digest, frames=frames, report=report, origin=origin)


class SeedBank:
    def __init__(self, root: str | Path, library_hash: str = "") -> None:
        self.root = Path(root)
        self.seeds: dict[str, SeedProgram] = {}
        self.order: list[str] = []
        self.covered: BranchSet = set()
        self.crashes: dict[str, CrashRecord] = {}
        self.library_hash = library_hash

    # -- bookkeeping ---------------------------------------------------------

    @staticmethod
    def seed_id_for(source: str) -> str:
        return "s" + hashlib.sha1(source.encode()).hexdigest()[:12]

    def unique_seeds(self) -> list[SeedProgram]:
        return [self.seeds[sid] for sid in self.order if self.seeds[sid].is_unique]

    def admit(
        self,
        source: str,
        combination: tuple[str, ...],
        critical: tuple[str, ...],
        coverage: BranchSet,
        density: int,
        iteration: int,
        build_hash: str = "",
    ) -> AdmitResult:
        """Admit one sanitizer-surviving program.

        Byte-identical sources are silently dropped. Novelty is measured
        against the global covered set at admission time; coverage merges
        in either way, so the global set stays monotone.
        """
        if build_hash and self.library_hash and build_hash != self.library_hash:
            raise CrossBuildMerge(
                f"bank built against {self.library_hash}, coverage from {build_hash}"
            )
        sid = self.seed_id_for(source)
        if sid in self.seeds:
            return AdmitResult(admitted=False, duplicate=True, seed=None, new_branches=0)
        fresh = coverage - self.covered
        unique = len(fresh)
        seed = SeedProgram(
            seed_id=sid,
            source=source,
            combination=tuple(combination),
            critical_calls=tuple(critical),
            coverage=set(coverage),
            unique_branches=unique,
            is_unique=unique > 0,
            density=density,
            quality=compute_quality(density, unique),
            created_iteration=iteration,
        )
        self.covered |= coverage
        self.seeds[sid] = seed
        self.order.append(sid)
        self._persist_seed(seed)
        self._persist_global()
        return AdmitResult(admitted=True, duplicate=False, seed=seed, new_branches=unique)

    def merge_and_report(self, coverage: BranchSet, build_hash: str = "") -> int:
        """Merge externally observed coverage (e.g. post-fuzz corpus replay);
        returns how many branches were new."""
        if build_hash and self.library_hash and build_hash != self.library_hash:
            raise CrossBuildMerge(
                f"bank built against {self.library_hash}, coverage from {build_hash}"
            )
        fresh = coverage - self.covered
        if fresh:
            self.covered |= fresh
            self._persist_global()
        return len(fresh)

    def record_crash(self, record: CrashRecord) -> bool:
        """Store a crash record; returns True when it is a new bucket."""
        if record.crash_hash in self.crashes:
            return False
        self.crashes[record.crash_hash] = record
        path = self.root / "crashes"
        path.mkdir(parents=True, exist_ok=True)
        (path / f"{record.crash_hash}.json").write_text(
            json.dumps(
                {
                    "crash_hash": record.crash_hash,
                    "frames": record.frames,
                    "origin": record.origin,
                    "report": record.report,
                },
                sort_keys=True,
                indent=1,
            )
            + "\n"
        )
        return True

    def covered_by_function(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for fn, _ in self.covered:
            out[fn] = out.get(fn, 0) + 1
        return out

    # -- persistence -----------------------------------------------------------

    def _persist_seed(self, seed: SeedProgram) -> None:
        d = self.root / "seeds" / seed.seed_id
        d.mkdir(parents=True, exist_ok=True)
        (d / "src.c").write_text(seed.source)
        (d / "meta.json").write_text(json.dumps(seed.meta(), sort_keys=True, indent=1) + "\n")
        branches = sorted(branch_to_str(b) for b in seed.coverage)
        (d / "coverage.txt").write_text("\n".join(branches) + ("\n" if branches else ""))
        manifest = self.root / "manifest.jsonl"
        with manifest.open("a") as f:
            f.write(json.dumps({"iteration": seed.created_iteration, "seed_id": seed.seed_id}, sort_keys=True) + "\n")

    def _persist_global(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        branches = sorted(branch_to_str(b) for b in self.covered)
        (self.root / "branches.txt").write_text("\n".join(branches) + ("\n" if branches else ""))
        (self.root / "meta.json").write_text(
            json.dumps({"library_hash": self.library_hash}, sort_keys=True) + "\n"
        )

    @classmethod
    def load(cls, root: str | Path) -> "SeedBank":
        root = Path(root)
        bank = cls(root)
        meta = root / "meta.json"
        if meta.exists():
            bank.library_hash = json.loads(meta.read_text()).get("library_hash", "")
        manifest = root / "manifest.jsonl"
        if manifest.exists():
            for line in manifest.read_text().splitlines():
                if not line.strip():
                    continue
                entry = json.loads(line)
                sid = entry["seed_id"]
                d = root / "seeds" / sid
                m = json.loads((d / "meta.json").read_text())
                coverage = {
                    branch_from_str(s)
                    for s in (d / "coverage.txt").read_text().splitlines()
                    if s.strip()
                }
                seed = SeedProgram(
                    seed_id=sid,
                    source=(d / "src.c").read_text(),
                    combination=tuple(m["combination"]),
                    critical_calls=tuple(m["critical_calls"]),
                    coverage=coverage,
                    unique_branches=m["unique_branches"],
                    is_unique=m["is_unique"],
                    density=m["density"],
                    quality=m["quality"],
                    created_iteration=m["created_iteration"],
                )
                bank.seeds[sid] = seed
                bank.order.append(sid)
        gb = root / "branches.txt"
        if gb.exists():
            bank.covered = {
                branch_from_str(s) for s in gb.read_text().splitlines() if s.strip()
            }
        crashes = root / "crashes"
        if crashes.exists():
            for p in sorted(crashes.glob("*.json")):
                d = json.loads(p.read_text())
                bank.crashes[d["crash_hash"]] = CrashRecord(
                    crash_hash=d["crash_hash"],
                    frames=d["frames"],
                    report=d["report"],
                    origin=d["origin"],
                )
        return bank


@dataclass
class CorpusStore:
    """Content-addressed corpus blobs shared across one library's programs."""

    root: Path
    hashes: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        self.root = Path(self.root)
        if self.root.exists():
            self.hashes = {p.name for p in self.root.iterdir() if p.is_file()}

    def add(self, blob: bytes) -> str:
        h = hashlib.sha1(blob).hexdigest()
        if h not in self.hashes:
            self.root.mkdir(parents=True, exist_ok=True)
            (self.root / h).write_bytes(blob)
            self.hashes.add(h)
        return h

    def blobs(self) -> list[tuple[str, bytes]]:
        out = []
        for h in sorted(self.hashes):
            out.append((h, (self.root / h).read_bytes()))
        return out

    def paths(self) -> list[Path]:
        return [self.root / h for h in sorted(self.hashes)]
