"""
k-shot prompt planning with reserve replacement.

An example pool holds f+1 curated (class, description) examples. View i of
a target class is conditioned on k examples chosen from the first f; any
chosen example that mentions the target class is swapped for the reserve
(example f+1), or failing that for an unused primary example.
"""

import re
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.prompting_1_7_0.template import render_prompt
from core.utils.errors import PoolExhaustedError, PoolSizeError
from core.utils.logging import get_logger

logger = get_logger(__name__)

Schedule = Literal["unique", "repeated"]


class Example(BaseModel):
    model_config = ConfigDict(extra="forbid")

    class_name: str = Field(..., min_length=1)
    description: str = Field(..., min_length=1)


class ExamplePool(BaseModel):
    """Exactly f+1 examples with unique class names; k shots per view."""

    model_config = ConfigDict(extra="forbid")

    examples: List[Example]
    f: int = Field(3, ge=1, description="Views generated per class")
    k: int = Field(2, ge=0, description="Examples per prompt")

    @model_validator(mode="after")
    def _check_pool(self) -> "ExamplePool":
        if len(self.examples) != self.f + 1:
            raise PoolSizeError(
                f"{self.f} views need exactly {self.f + 1} examples (f+1), the pool has {len(self.examples)}"
            )
        if self.k > self.f:
            raise PoolSizeError(f"k={self.k} shots cannot exceed f={self.f}")
        names = [normalize(e.class_name) for e in self.examples]
        if len(set(names)) != len(names):
            raise PoolSizeError("example class names must be unique")
        return self

    @property
    def reserve(self) -> int:
        return self.f


def normalize(name: str) -> str:
    return name.strip().casefold()


def mentions(example: Example, target: str) -> bool:
    """True when the example is about the target or names it in its description."""
    wanted = normalize(target)
    if normalize(example.class_name) == wanted:
        return True
    return re.search(rf"(?<!\w){re.escape(wanted)}(?!\w)", example.description.casefold()) is not None


def schedule_indices(f: int, k: int, schedule: Schedule = "unique") -> List[Tuple[int, ...]]:
    """Example indices (into the first f examples) for each of the f views.

    "unique": view i takes k consecutive examples starting at i, cyclically,
    listed in pool order (k=2, f=3 gives (0,1), (1,2), (0,2)).
    "repeated": every view takes the first k examples.
    """
    if schedule == "repeated":
        return [tuple(range(k))] * f
    return [tuple(sorted((i + j) % f for j in range(k))) for i in range(f)]


@dataclass
class PlannedPrompt:
    class_name: str
    view: int
    example_indices: Tuple[int, ...]
    prompt: str


@dataclass
class PromptPlan:
    """f prompts per target class and the examples each one used."""

    type_word: str
    f: int
    k: int
    schedule: str
    prompts: Dict[str, List[PlannedPrompt]] = field(default_factory=dict)

    def __iter__(self):
        for prompts in self.prompts.values():
            yield from prompts

    def __len__(self) -> int:
        return sum(len(p) for p in self.prompts.values())


def _substitute(pool: ExamplePool, chosen: Tuple[int, ...], target: str) -> Tuple[int, ...]:
    slots = list(chosen)
    for pos, idx in enumerate(slots):
        if not mentions(pool.examples[idx], target):
            continue
        candidates = [pool.reserve] + [i for i in range(pool.f) if i not in chosen]
        replacement = next(
            (c for c in candidates if c not in slots and not mentions(pool.examples[c], target)), None
        )
        if replacement is None:
            raise PoolExhaustedError(
                f"no example can replace {pool.examples[idx].class_name!r} in a prompt for {target!r}"
            )
        slots[pos] = replacement
    return tuple(slots)


def plan_prompts(pool: ExamplePool, targets: Sequence[str], type_word: str,
                 schedule: Schedule = "unique") -> PromptPlan:
    """Build every prompt for ``targets``; a pure function of its inputs.

    Raises:
        PoolExhaustedError: If a mentioning example has no valid substitute.
    """
    plan = PromptPlan(type_word=type_word, f=pool.f, k=pool.k, schedule=schedule)
    base = schedule_indices(pool.f, pool.k, schedule)
    for target in targets:
        target = target.strip()
        prompts = []
        for view, chosen in enumerate(base):
            indices = _substitute(pool, chosen, target)
            examples = [(pool.examples[i].class_name, pool.examples[i].description) for i in indices]
            prompts.append(PlannedPrompt(target, view, indices, render_prompt(type_word, examples, target)))
        plan.prompts[target] = prompts
    logger.info(f"Planned {len(plan)} prompts for {len(plan.prompts)} classes ({pool.k}-shot, {schedule})")
    return plan
