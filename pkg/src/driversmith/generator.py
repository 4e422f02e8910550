"""Gateway to the program generator.

Routes each prompt to the cheapest model whose context window fits it,
accounts spend exactly (Decimal), enforces the campaign budget before the
call that would cross it, and extracts C sources from completions. Two
backends: a deterministic stub that serves handwritten programs from a
pool directory (offline operation and tests), and an HTTP backend for an
OpenAI-style chat-completions endpoint.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Protocol

from .config import GenerationConfig
from .errors import BackendError, BudgetExhausted, ConfigError, PromptTooLong
from .prompt import PromptSpec, estimate_tokens


@dataclass
class Sample:
    text: str
    tokens_in: int
    tokens_out: int


@dataclass
class CandidateProgram:
    source: str
    sample_index: int
    model: str
    tokens_in: int
    tokens_out: int


@dataclass
class LedgerEntry:
    model: str
    tokens_in: int
    tokens_out: int
    cost: Decimal
    tag: str = ""


class CostLedger:
    """Append-only spend record. Total is monotone; money math is exact."""

    def __init__(self) -> None:
        self.entries: list[LedgerEntry] = []

    @property
    def total(self) -> Decimal:
        t = Decimal("0")
        for e in self.entries:
            t += e.cost
        return t

    def record(
        self,
        model: str,
        tokens_in: int,
        tokens_out: int,
        price_in: Decimal,
        price_out: Decimal,
        tag: str = "",
    ) -> Decimal:
        cost = (Decimal(tokens_in) * price_in + Decimal(tokens_out) * price_out) / Decimal(1000)
        self.entries.append(LedgerEntry(model, tokens_in, tokens_out, cost, tag))
        return cost

    def drop_tagged(self, predicate) -> int:
        """Remove entries whose tag matches; used to roll back the partial
        iteration a killed campaign may have half-recorded."""
        keep = [e for e in self.entries if not predicate(e.tag)]
        removed = len(self.entries) - len(keep)
        self.entries = keep
        return removed

    def dump(self, path: Path) -> None:
        lines = [
            json.dumps(
                {
                    "model": e.model,
                    "tokens_in": e.tokens_in,
                    "tokens_out": e.tokens_out,
                    "cost": str(e.cost),
                    "tag": e.tag,
                },
                sort_keys=True,
            )
            for e in self.entries
        ]
        path.write_text("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def load(cls, path: Path) -> "CostLedger":
        ledger = cls()
        if path.exists():
            for line in path.read_text().splitlines():
                if not line.strip():
                    continue
                d = json.loads(line)
                ledger.entries.append(
                    LedgerEntry(
                        d["model"], d["tokens_in"], d["tokens_out"], Decimal(d["cost"]), d.get("tag", "")
                    )
                )
        return ledger


def route_model(token_count: int, cfg: GenerationConfig) -> tuple[str, Decimal, Decimal]:
    """Pick (model, price_in, price_out) for a prompt of token_count tokens.

    Both limits are inclusive; prompts beyond the large model's window
    raise PromptTooLong.
    """
    if token_count <= cfg.short_limit:
        return cfg.short_model, Decimal(cfg.short_price_in), Decimal(cfg.short_price_out)
    if token_count <= cfg.long_limit:
        return cfg.long_model, Decimal(cfg.long_price_in), Decimal(cfg.long_price_out)
    raise PromptTooLong(f"{token_count} tokens exceeds the {cfg.long_limit}-token window")


_FENCE_RE = re.compile(r"```[a-zA-Z0-9_+-]*\n(.*?)```", re.DOTALL)


def extract_program(response: str) -> str:
    """Longest fenced code block, or the whole response when none is fenced."""
    blocks = _FENCE_RE.findall(response)
    if not blocks:
        return response.strip()
    return max(blocks, key=len).strip()


class Backend(Protocol):
    def complete(
        self, prompt: PromptSpec, model: str, n: int, temperature: float, tag: str
    ) -> list[Sample]: ...


class StubBackend:
    """Deterministic offline backend serving a pool of handwritten programs.

    The pool directory holds a manifest.json mapping program ids to files
    and optional combination keys. Selection is a stable hash of the
    combination, the request tag, and the sample index, so identical
    requests replay identically across process restarts.
    """

    def __init__(self, pool_dir: str | Path) -> None:
        self.pool_dir = Path(pool_dir)
        manifest_path = self.pool_dir / "manifest.json"
        if not manifest_path.exists():
            raise ConfigError(f"stub pool manifest not found: {manifest_path}")
        self.manifest = json.loads(manifest_path.read_text())
        self.programs: dict[str, str] = {}
        for pid, meta in sorted(self.manifest["programs"].items()):
            self.programs[pid] = (self.pool_dir / meta["file"]).read_text()
        self.by_combination: dict[tuple[str, ...], list[str]] = {}
        for pid, meta in sorted(self.manifest["programs"].items()):
            key = tuple(sorted(meta.get("combination", [])))
            if key:
                self.by_combination.setdefault(key, []).append(pid)
        self.all_ids = sorted(self.programs)

    def _candidates(self, combination: tuple[str, ...]) -> list[str]:
        key = tuple(sorted(combination))
        return self.by_combination.get(key, self.all_ids)

    def complete(
        self, prompt: PromptSpec, model: str, n: int, temperature: float, tag: str
    ) -> list[Sample]:
        del temperature
        ids = self._candidates(prompt.combination)
        samples = []
        tokens_in = estimate_tokens(prompt.text)
        for i in range(n):
            key = f"{','.join(prompt.combination)}|{tag}|{i}".encode()
            idx = int.from_bytes(hashlib.sha256(key).digest()[:8], "big") % len(ids)
            text = self.programs[ids[idx]]
            fenced = f"```c\n{text}\n```"
            samples.append(Sample(text=fenced, tokens_in=tokens_in, tokens_out=estimate_tokens(fenced)))
        return samples


class HttpBackend:
    """OpenAI-style chat completions over HTTP. Secrets come from the
    environment, never from the config file."""

    def __init__(self, cfg: GenerationConfig, api_key: str) -> None:
        if not cfg.api_url:
            raise ConfigError("generation.api_url is required for the http backend")
        if not api_key:
            raise ConfigError(
                f"no API key in ${cfg.api_key_env}; the http backend needs one"
            )
        self.cfg = cfg
        self.api_key = api_key

    def complete(
        self, prompt: PromptSpec, model: str, n: int, temperature: float, tag: str
    ) -> list[Sample]:
        import requests

        del tag
        payload = {
            "model": model,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": temperature,
            "n": n,
        }
        last_error: Exception | None = None
        for attempt in range(self.cfg.retries):
            try:
                resp = requests.post(
                    self.cfg.api_url,
                    json=payload,
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    timeout=120,
                )
                resp.raise_for_status()
                body = resp.json()
                usage = body.get("usage", {})
                tokens_in = int(usage.get("prompt_tokens", estimate_tokens(prompt.text)))
                total_out = int(usage.get("completion_tokens", 0))
                choices = body.get("choices", [])
                per = max(1, total_out // max(1, len(choices)))
                return [
                    Sample(
                        text=c.get("message", {}).get("content", ""),
                        tokens_in=tokens_in if i == 0 else 0,
                        tokens_out=per,
                    )
                    for i, c in enumerate(choices)
                ]
            except Exception as e:  # noqa: BLE001 - retried, then surfaced
                last_error = e
                time.sleep(self.cfg.retry_base_delay_s * (2**attempt))
        raise BackendError(f"generation failed after {self.cfg.retries} attempts: {last_error}")


@dataclass
class GenerationResult:
    candidates: list[CandidateProgram]
    model: str
    cost: Decimal


@dataclass
class Gateway:
    cfg: GenerationConfig
    backend: Backend
    ledger: CostLedger = field(default_factory=CostLedger)
    budget: Decimal = Decimal("10.00")
    completion_allowance: int = 1024

    def generate(self, prompt: PromptSpec, *, n: int | None = None, tag: str = "") -> GenerationResult:
        """Request n programs for the prompt. Checks the budget before the
        call using the prompt estimate plus a completion allowance; the call
        that would cross the cap raises BudgetExhausted instead of running.
        Exact-text duplicate samples are dropped."""
        n = n if n is not None else self.cfg.n_samples
        model, price_in, price_out = route_model(prompt.token_estimate, self.cfg)
        projected = (
            Decimal(prompt.token_estimate) * price_in
            + Decimal(self.completion_allowance * n) * price_out
        ) / Decimal(1000)
        if self.ledger.total + projected > self.budget:
            raise BudgetExhausted(
                f"spent {self.ledger.total}; next call projected +{projected} exceeds {self.budget}"
            )
        samples = self.backend.complete(prompt, model, n, self.cfg.temperature, tag)
        cost = Decimal("0")
        for s in samples:
            cost += self.ledger.record(model, s.tokens_in, s.tokens_out, price_in, price_out, tag)
        seen: set[str] = set()
        candidates = []
        for i, s in enumerate(samples):
            source = extract_program(s.text)
            if not source or source in seen:
                continue
            seen.add(source)
            candidates.append(
                CandidateProgram(
                    source=source,
                    sample_index=i,
                    model=model,
                    tokens_in=s.tokens_in,
                    tokens_out=s.tokens_out,
                )
            )
        return GenerationResult(candidates=candidates, model=model, cost=cost)
