"""Prompt assembly for harness generation.

The prose skeleton lives in an external template asset; this module fills
it with the API combination, the type and signature context, a gadget of
extra signatures padded up to the token budget (dropped first when space
runs out), and the library usage notes verbatim. Rendering is
deterministic: same inputs, same bytes.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from importlib import resources
from string import Template

from .config import PromptConfig
from .errors import OversizedContext
from .library_model import LibraryModel, select_gadget, types_for
from .schedule import ApiCombination


@dataclass
class PromptSpec:
    text: str
    combination: ApiCombination
    token_estimate: int


def estimate_tokens(text: str, safety_factor: float = 1.2) -> int:
    """Cheap monotone token-count overestimate.

    Every whitespace-separated word costs one token plus one per four
    characters of length, then a safety factor rounds up. Never lower for
    a superstring, never lower than a real tokenizer would count on prose.
    """
    if not text:
        return 0
    raw = 0
    for word in text.split():
        raw += 1 + len(word) // 4
    return math.ceil(raw * safety_factor)


def _template() -> Template:
    body = resources.files("driversmith.assets").joinpath("prompt_template.txt").read_text()
    return Template(body)


def build_prompt(
    model: LibraryModel,
    combination: ApiCombination,
    cfg: PromptConfig,
    rng: random.Random,
    gadget_limit: int = 100,
) -> PromptSpec:
    """Render the generation prompt for one API combination.

    Raises OversizedContext when the prompt cannot fit cfg.token_budget
    even with all gadget padding dropped.
    """
    includes = "\n".join(f"#include \"{_basename(h)}\"" for h in model.headers)
    type_defs = "\n\n".join(t.text for t in types_for(model, list(combination)))
    must_signatures = "\n".join(model.require(name).signature for name in combination)
    combination_list = "\n".join(f"- {name}" for name in combination)

    def render(padding: list[str]) -> str:
        context_parts = [includes]
        if type_defs:
            context_parts.append(type_defs)
        context_parts.append(must_signatures)
        if padding:
            context_parts.append(
                "Other APIs available in this library:\n" + "\n".join(padding)
            )
        return _template().substitute(
            library_name=model.name,
            entry_symbol=cfg.entry_symbol,
            combination_list=combination_list,
            reasoning_cue=cfg.reasoning_cue,
            context="\n\n".join(context_parts),
            notes=cfg.library_notes,
        )

    bare = render([])
    bare_tokens = estimate_tokens(bare, cfg.safety_factor)
    if bare_tokens > cfg.token_budget:
        raise OversizedContext(
            f"prompt needs {bare_tokens} tokens without padding; budget is {cfg.token_budget}"
        )

    gadget = [
        name for name in select_gadget(model, rng, gadget_limit) if name not in combination
    ]
    padding: list[str] = []
    text, tokens = bare, bare_tokens
    for name in gadget:
        candidate = padding + [model.require(name).signature]
        rendered = render(candidate)
        t = estimate_tokens(rendered, cfg.safety_factor)
        if t > cfg.token_budget:
            break
        padding, text, tokens = candidate, rendered, t

    return PromptSpec(text=text, combination=tuple(combination), token_estimate=tokens)


def _basename(path: str) -> str:
    return path.replace("\\", "/").rsplit("/", 1)[-1]
