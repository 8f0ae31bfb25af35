"""Rendering demonstrations into fine-tuning records, splitting, k-shot prompts.

Two layouts:

* ``DF1`` (question, call, description): the input is the bare question; the
  output is the call followed by the triggered function's description.
* ``DF2`` (descriptions, question, call): the input lists every registered
  function description before the question; the output is the call alone.

The exact template strings below are frozen by golden files in the tests.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .calls import END_OF_CALL
from .errors import ValidationError
from .grammar import TEST, TRAIN, Demonstration
from .registry import FunctionSchema, Registry

DF1 = "DF1"
DF2 = "DF2"
FORMATS = (DF1, DF2)

DESCRIPTIONS_HEADER = "Function descriptions:"
QUESTION_PREFIX = "Question: "
OUTPUT_PREFIX = "Output: "


@dataclass(frozen=True)
class TrainingRecord:
    format: str
    input_text: str
    output_text: str
    meta: Mapping[str, str] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "format": self.format,
            "input": self.input_text,
            "output": self.output_text,
            "meta": dict(self.meta),
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "TrainingRecord":
        try:
            return cls(rec["format"], rec["input"], rec["output"], dict(rec.get("meta", {})))
        except KeyError as e:
            raise ValidationError(f"malformed training record: missing {e}") from None


@dataclass(frozen=True)
class PromptBundle:
    shots: tuple[tuple[str, str], ...]
    query: str
    k: int

    def render(self) -> str:
        parts = [f"{inp}\n{out}" for inp, out in self.shots]
        parts.append(self.query)
        return "\n\n".join(parts) + "\n"


def normalize_format(fmt: str) -> str:
    up = fmt.upper()
    if up not in FORMATS:
        raise ValidationError(f"unknown format {fmt!r}; expected df1 or df2")
    return up


def description_block(schema: FunctionSchema) -> str:
    return f"{schema.token.surface}: {schema.name}\n{schema.description}"


def render(
    demo: Demonstration,
    format: str,
    registry: Registry,
    order_seed: int | None = None,
    concatenated: bool = False,
) -> TrainingRecord:
    """Render one demonstration.

    ``order_seed`` shuffles the DF2 description blocks per record (seeded
    on the seed and demo id). ``concatenated`` emits DF1 as a single
    training sequence in ``output_text`` with an empty input.
    """
    fmt = normalize_format(format)
    schema = registry.get(demo.function)
    call = demo.gold_call.render(order=schema.param_names) + END_OF_CALL
    meta = {"id": demo.id, "function": demo.function}
    if fmt == DF1:
        output = f"{call}\n{schema.description}"
        if concatenated:
            return TrainingRecord(DF1, "", f"{QUESTION_PREFIX}{demo.question}\n{OUTPUT_PREFIX}{output}", meta)
        return TrainingRecord(DF1, demo.question, output, meta)

    schemas = list(registry)
    if order_seed is not None:
        random.Random(f"{order_seed}:{demo.id}").shuffle(schemas)
    blocks = "\n\n".join(description_block(s) for s in schemas)
    text = f"{DESCRIPTIONS_HEADER}\n\n{blocks}\n\n{QUESTION_PREFIX}{demo.question}"
    return TrainingRecord(DF2, text, call, meta)


def extract_call_region(output_text: str) -> str:
    """The call part of a rendered output, up to and including ``<eoc>``."""
    start = output_text.find(OUTPUT_PREFIX)
    if start >= 0 and output_text.startswith(QUESTION_PREFIX):
        output_text = output_text[start + len(OUTPUT_PREFIX):]
    end = output_text.find(END_OF_CALL)
    return output_text if end < 0 else output_text[: end + len(END_OF_CALL)]


def split(demos: Sequence[Demonstration], train_count: int, seed: int):
    """Seeded shuffle then partition; writes split tags onto the demos."""
    if train_count < 0:
        raise ValidationError("train_count must be non-negative")
    if train_count > len(demos):
        raise ValidationError(f"train_count {train_count} exceeds population {len(demos)}")
    order = list(demos)
    random.Random(seed).shuffle(order)
    train, test = order[:train_count], order[train_count:]
    for d in train:
        d.split = TRAIN
    for d in test:
        d.split = TEST
    return train, test


def build_prompt(
    shots_pool: Sequence[TrainingRecord],
    query: TrainingRecord,
    k: int,
    seed: int,
) -> PromptBundle:
    if k < 0:
        raise ValidationError("k must be non-negative")
    qid = query.meta.get("id")
    if any(r is query or (qid is not None and r.meta.get("id") == qid) for r in shots_pool):
        raise ValidationError(f"query {qid!r} is part of the shot pool")
    if k > len(shots_pool):
        raise ValidationError(f"need {k} shots but the pool holds {len(shots_pool)}")
    picked = random.Random(seed).sample(list(shots_pool), k)
    return PromptBundle(tuple((r.input_text, r.output_text) for r in picked), query.input_text, k)
