"""Compiler and binary plumbing.

Three build flavors share cached per-flavor library objects:

* ``cov``   - address/UB sanitizers plus guard-based edge instrumentation
              and a replay main; one process per input, branch identities
              are (function, rank of guard PC within the function).
* ``fuzz``  - in-process fuzzing build; the engine supplies main.
* ``probe`` - plain build with the allocator wrapped to meter requests.

Binaries are linked non-relocatable so the PC table embedded at link time
matches the addresses the runtime reports.
"""

from __future__ import annotations

import hashlib
import json
import re
import shutil
import subprocess
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .config import LibraryConfig, SanitizeConfig
from .errors import BuildFailed, ToolchainMissing

Branch = tuple[str, int]

_COMMON = ["-g", "-gdwarf-4", "-O1", "-fno-omit-frame-pointer"]

FLAVOR_CFLAGS = {
    "cov": _COMMON
    + [
        "-fsanitize=address,undefined",
        "-fno-sanitize-recover=undefined",
        "-fsanitize-coverage=trace-pc-guard,pc-table",
    ],
    "fuzz": _COMMON + ["-fsanitize=fuzzer-no-link,address,undefined", "-fno-sanitize-recover=undefined"],
    "probe": ["-g", "-O0"],
}

FLAVOR_LDFLAGS = {
    "cov": ["-fsanitize=address,undefined", "-no-pie"],
    "fuzz": ["-fsanitize=fuzzer,address,undefined"],
    "probe": ["-Wl,--wrap=malloc", "-Wl,--wrap=calloc", "-Wl,--wrap=realloc"],
}


def asset_path(name: str) -> Path:
    return Path(str(resources.files("driversmith").joinpath("assets", name)))


def require_tools() -> None:
    for tool in ("clang", "nm", "objdump"):
        if shutil.which(tool) is None:
            raise ToolchainMissing(f"required tool not found on PATH: {tool}")


def _run(cmd: list[str], cwd: Path | None = None, timeout: float = 300.0, env: dict | None = None):
    return subprocess.run(
        cmd,
        cwd=str(cwd) if cwd else None,
        capture_output=True,
        text=True,
        timeout=timeout,
        env=env,
    )


# --- source-level front ends -------------------------------------------------


def ast_dump_text(source_path: Path, include_dirs: list[str]) -> str:
    """Full-translation-unit AST as JSON text."""
    cmd = ["clang", "-fsyntax-only", "-Xclang", "-ast-dump=json"]
    for d in include_dirs:
        cmd += ["-I", str(d)]
    cmd.append(str(source_path))
    proc = _run(cmd)
    if proc.returncode != 0 or not proc.stdout.strip():
        raise BuildFailed(f"ast dump failed for {source_path}", proc.stderr)
    return proc.stdout


def syntax_check(source_path: Path, include_dirs: list[str]) -> tuple[bool, str]:
    cmd = ["clang", "-fsyntax-only"]
    for d in include_dirs:
        cmd += ["-I", str(d)]
    cmd.append(str(source_path))
    proc = _run(cmd)
    return proc.returncode == 0, proc.stderr


# --- binary inspection ----------------------------------------------------------


def symbol_ranges(binary: Path) -> list[tuple[int, int, str]]:
    """(start, size, name) for every defined, sized text symbol."""
    proc = _run(["nm", "-S", "--defined-only", str(binary)])
    if proc.returncode != 0:
        raise BuildFailed(f"nm failed on {binary}", proc.stderr)
    out = []
    for line in proc.stdout.splitlines():
        parts = line.split()
        if len(parts) == 4 and parts[2] in ("T", "t", "W", "w"):
            try:
                addr = int(parts[0], 16)
                size = int(parts[1], 16)
            except ValueError:
                continue
            out.append((addr, size, parts[3]))
    return out


_SECTION_ROW = re.compile(r"^ [0-9a-f]+ ((?:[0-9a-f]{2,8} ?)+)", re.IGNORECASE)


def pc_table(binary: Path) -> list[tuple[int, int]]:
    """(pc, flags) pairs from the instrumentation PC table section."""
    proc = _run(["objdump", "-s", "-j", "__sancov_pcs", str(binary)])
    if proc.returncode != 0:
        raise BuildFailed(f"objdump failed on {binary}", proc.stderr)
    raw = bytearray()
    for line in proc.stdout.splitlines():
        m = _SECTION_ROW.match(line)
        if not m:
            continue
        for group in m.group(1).split():
            raw.extend(bytes.fromhex(group))
    pairs = []
    for off in range(0, len(raw) - 15, 16):
        pc = int.from_bytes(raw[off : off + 8], "little")
        flags = int.from_bytes(raw[off + 8 : off + 16], "little")
        pairs.append((pc, flags))
    return pairs


@dataclass
class CovIndex:
    """Static map from guard PCs to stable branch identities."""

    pc_branch: dict[int, Branch]
    totals: dict[str, int]

    @classmethod
    def build(cls, binary: Path, functions: set[str]) -> "CovIndex":
        ranges = [r for r in symbol_ranges(binary) if r[2] in functions and r[1] > 0]
        ranges.sort()
        per_fn: dict[str, list[int]] = {}
        for pc, _flags in pc_table(binary):
            name = _owner(ranges, pc)
            if name is not None:
                per_fn.setdefault(name, []).append(pc)
        pc_branch: dict[int, Branch] = {}
        totals: dict[str, int] = {}
        for name, pcs in per_fn.items():
            pcs = sorted(set(pcs))
            totals[name] = len(pcs)
            for rank, pc in enumerate(pcs):
                pc_branch[pc] = (name, rank)
        return cls(pc_branch=pc_branch, totals=totals)

    def branches_for(self, hit_pcs: set[int]) -> set[Branch]:
        return {self.pc_branch[pc] for pc in hit_pcs if pc in self.pc_branch}


def _owner(sorted_ranges: list[tuple[int, int, str]], pc: int) -> str | None:
    import bisect

    i = bisect.bisect_right(sorted_ranges, (pc, float("inf"), "")) - 1
    if i >= 0:
        start, size, name = sorted_ranges[i]
        if start <= pc < start + size:
            return name
    return None


def read_cov_file(path: Path) -> set[int]:
    if not path.exists():
        return set()
    pcs = set()
    for line in path.read_text().splitlines():
        line = line.strip()
        if line:
            try:
                pcs.add(int(line, 16))
            except ValueError:
                continue
    return pcs


# --- the toolchain ---------------------------------------------------------------


@dataclass
class BuiltBinary:
    path: Path
    flavor: str
    entry_symbol: str


@dataclass
class ExecResult:
    returncode: int
    stdout: str
    stderr: str
    timed_out: bool
    branches: set[Branch] = field(default_factory=set)

    @property
    def crashed(self) -> bool:
        if self.timed_out:
            return False
        if self.returncode != 0:
            return True
        return "ERROR: " in self.stderr and "Sanitizer" in self.stderr

    @property
    def report(self) -> str:
        return self.stderr


class Toolchain:
    def __init__(self, lib: LibraryConfig, workdir: str | Path, san: SanitizeConfig | None = None):
        require_tools()
        self.lib = lib
        # Absolute: built binaries are later exec'd with cwd overridden to
        # per-run directories, where a relative path would not resolve.
        self.workdir = Path(workdir).resolve()
        self.san = san or SanitizeConfig()
        self._objects: dict[str, list[Path]] = {}
        self._asset_objects: dict[tuple[str, str], Path] = {}
        self._lib_functions: set[str] | None = None
        self._indices: dict[Path, CovIndex] = {}
        self._build_hash: str | None = None

    # -- identity ------------------------------------------------------------

    def build_hash(self) -> str:
        """Digest over library sources and headers; flavors share it."""
        if self._build_hash is None:
            h = hashlib.sha256()
            for p in sorted(str(s) for s in self.lib.sources + self.lib.headers):
                h.update(Path(p).read_bytes())
            h.update(json.dumps(FLAVOR_CFLAGS, sort_keys=True).encode())
            self._build_hash = h.hexdigest()[:16]
        return self._build_hash

    def include_flags(self) -> list[str]:
        out = []
        for d in self.lib.include_dirs:
            out += ["-I", str(d)]
        return out

    # -- library objects -------------------------------------------------------

    def library_objects(self, flavor: str) -> list[Path]:
        if flavor in self._objects:
            return self._objects[flavor]
        if self.lib.build_cmd:
            proc = subprocess.run(
                self.lib.build_cmd,
                shell=True,
                cwd=self.lib.build_dir or None,
                capture_output=True,
                text=True,
            )
            if proc.returncode != 0:
                raise BuildFailed("library build command failed", proc.stderr)
            if not self.lib.archive:
                raise BuildFailed("build_cmd given without an archive path")
            objs = [Path(self.lib.archive)]
        else:
            objdir = self.workdir / "libobj" / flavor
            objdir.mkdir(parents=True, exist_ok=True)
            objs = []
            for src in self.lib.sources:
                src = Path(src)
                obj = objdir / (src.stem + ".o")
                cmd = ["clang", "-c", *FLAVOR_CFLAGS[flavor], *self.include_flags(), str(src), "-o", str(obj)]
                proc = _run(cmd)
                if proc.returncode != 0:
                    raise BuildFailed(f"library compile failed: {src}", proc.stderr)
                objs.append(obj)
        self._objects[flavor] = objs
        return objs

    def library_functions(self) -> set[str]:
        """Defined function symbols of the library itself."""
        if self._lib_functions is None:
            fns: set[str] = set()
            for obj in self.library_objects("cov"):
                for _addr, size, name in symbol_ranges(obj):
                    if size > 0:
                        fns.add(name)
            self._lib_functions = fns
        return self._lib_functions

    def _asset_object(self, name: str, flavor: str) -> Path:
        key = (name, flavor)
        if key in self._asset_objects:
            return self._asset_objects[key]
        objdir = self.workdir / "libobj" / flavor
        objdir.mkdir(parents=True, exist_ok=True)
        obj = objdir / (Path(name).stem + ".o")
        flags = ["-g", "-O1"]
        proc = _run(["clang", "-c", *flags, str(asset_path(name)), "-o", str(obj)])
        if proc.returncode != 0:
            raise BuildFailed(f"runtime asset compile failed: {name}", proc.stderr)
        self._asset_objects[key] = obj
        return obj

    # -- program builds -------------------------------------------------------------

    def build_program(
        self,
        source: str,
        flavor: str,
        name: str,
        entry_symbol: str = "LLVMFuzzerTestOneInput",
        extra_sources: list[Path] | None = None,
        extra_include: str = "",
        has_main: bool = False,
        out_dir: Path | None = None,
    ) -> BuiltBinary:
        """Compile and link one driver source against the library."""
        d = out_dir or (self.workdir / "build" / flavor / name)
        d.mkdir(parents=True, exist_ok=True)
        src_path = d / f"{name}.c"
        src_path.write_text(source)
        binary = d / name
        cflags = FLAVOR_CFLAGS[flavor]
        cmd = ["clang", *cflags, *self.include_flags()]
        if extra_include:
            cmd += ["-I", str(extra_include)]
        if flavor == "cov" and entry_symbol != "LLVMFuzzerTestOneInput":
            cmd.append(f"-DDRIVER_ENTRY={entry_symbol}")
        cmd.append(str(src_path))
        for extra in extra_sources or []:
            cmd.append(str(extra))
        if flavor == "cov":
            cmd.append(str(self._asset_object("covrt.c", flavor)))
            if not has_main:
                cmd += [str(asset_path("standalone_main.c"))]
        elif flavor == "probe":
            cmd.append(str(self._asset_object("alloc_track.c", flavor)))
        cmd += [str(o) for o in self.library_objects(flavor)]
        cmd += FLAVOR_LDFLAGS[flavor]
        cmd += ["-o", str(binary)]
        proc = _run(cmd)
        if proc.returncode != 0:
            raise BuildFailed(f"{flavor} build failed for {name}", proc.stderr)
        return BuiltBinary(path=binary, flavor=flavor, entry_symbol=entry_symbol)

    def cov_index(self, binary: BuiltBinary, extra_functions: set[str] | None = None) -> CovIndex:
        """Branch index for a coverage binary, restricted to library
        functions plus any explicitly requested driver symbols."""
        if binary.path not in self._indices:
            fns = set(self.library_functions())
            fns.add(binary.entry_symbol)
            if extra_functions:
                fns |= extra_functions
            self._indices[binary.path] = CovIndex.build(binary.path, fns)
        return self._indices[binary.path]

    def branch_totals(self) -> dict[str, int]:
        """Static per-function branch counts for the library, measured off a
        minimal linked binary."""
        nop = "int LLVMFuzzerTestOneInput(const unsigned char *d, unsigned long n) { (void)d; (void)n; return 0; }\n"
        built = self.build_program(nop, "cov", "nop_totals")
        index = CovIndex.build(built.path, self.library_functions())
        return dict(index.totals)

    # -- running --------------------------------------------------------------------

    def asan_env(self) -> dict:
        import os

        env = dict(os.environ)
        opts = self.san.asan_options
        symbolizer = shutil.which("addr2line")
        if symbolizer:
            opts += f":external_symbolizer_path={symbolizer}"
        env["ASAN_OPTIONS"] = opts
        env["UBSAN_OPTIONS"] = "print_stacktrace=1"
        return env

    def run_replay(self, binary: BuiltBinary, input_path: Path, cwd: Path, timeout: float | None = None) -> ExecResult:
        """One input through a coverage binary, fresh process."""
        cov_out = cwd / "cov.txt"
        if cov_out.exists():
            cov_out.unlink()
        env = self.asan_env()
        env["COV_OUT"] = str(cov_out)
        try:
            proc = _run([str(binary.path), str(input_path)], cwd=cwd, timeout=timeout or self.san.exec_timeout_s, env=env)
        except subprocess.TimeoutExpired:
            return ExecResult(returncode=-1, stdout="", stderr="", timed_out=True)
        idx = self.cov_index(binary)
        branches = idx.branches_for(read_cov_file(cov_out))
        return ExecResult(
            returncode=proc.returncode,
            stdout=proc.stdout,
            stderr=proc.stderr,
            timed_out=False,
            branches=branches,
        )

    def run_fuzz(
        self,
        binary: BuiltBinary,
        corpus_dir: Path,
        seconds: float,
        cwd: Path,
        max_len: int = 4096,
    ) -> ExecResult:
        """One fuzzing interval over a shared corpus directory."""
        # Absolute: the target process runs with this directory as its cwd,
        # so relative corpus/artifact paths would resolve against themselves.
        cwd = cwd.resolve()
        corpus_dir = corpus_dir.resolve()
        corpus_dir.mkdir(parents=True, exist_ok=True)
        artifacts = cwd / "artifacts"
        artifacts.mkdir(parents=True, exist_ok=True)
        env = self.asan_env()
        cmd = [
            str(binary.path),
            str(corpus_dir),
            f"-max_total_time={max(1, int(seconds))}",
            f"-max_len={max_len}",
            f"-artifact_prefix={artifacts}/",
            "-print_final_stats=1",
        ]
        try:
            proc = _run(cmd, cwd=cwd, timeout=seconds + 60.0, env=env)
        except subprocess.TimeoutExpired:
            return ExecResult(returncode=-1, stdout="", stderr="", timed_out=True)
        return ExecResult(returncode=proc.returncode, stdout=proc.stdout, stderr=proc.stderr, timed_out=False)

    def run_probe(self, binary: BuiltBinary, cwd: Path, args: list[str] | None = None) -> int:
        """Run an allocation-probe binary; returns total requested bytes."""
        try:
            proc = _run([str(binary.path), *(args or [])], cwd=cwd, timeout=self.san.exec_timeout_s)
        except subprocess.TimeoutExpired:
            raise BuildFailed("allocation probe timed out")
        m = re.search(r"ALLOC_PEAK (\d+)", proc.stderr)
        if not m:
            raise BuildFailed("allocation probe produced no total", proc.stderr)
        return int(m.group(1))
