"""Blend function-call records with a general textbook corpus."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

from .errors import ValidationError
from .formatter import TrainingRecord

log = logging.getLogger(__name__)

FUNCTION_CALL = "function-call"
TEXTBOOK = "textbook"
HEAD = "head"
SEEDED_UNIFORM = "seeded-uniform"


class TextbookBlocks(list):
    """Text blocks in file order; ``dropped`` counts blank entries skipped."""

    dropped = 0


@dataclass(frozen=True)
class MixSpec:
    ratio: tuple[int, int] = (1, 1)
    seed: int = 0
    sampling: str = SEEDED_UNIFORM

    def __post_init__(self):
        fc, tb = self.ratio
        if fc < 0 or tb < 0 or (fc, tb) == (0, 0):
            raise ValidationError(f"bad mix ratio {fc}:{tb}")
        if fc == 0:
            raise ValidationError("the function-call side of the ratio must be positive")
        if self.sampling not in (HEAD, SEEDED_UNIFORM):
            raise ValidationError(f"unknown sampling {self.sampling!r}")


def parse_ratio(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise ValidationError(f"ratio must look like A:B, got {text!r}") from None


@dataclass(frozen=True)
class MixedRecord:
    kind: str
    payload: Union[TrainingRecord, str]

    def __post_init__(self):
        ok = (self.kind == FUNCTION_CALL and isinstance(self.payload, TrainingRecord)) or (
            self.kind == TEXTBOOK and isinstance(self.payload, str)
        )
        if not ok:
            raise ValidationError(f"kind {self.kind!r} does not match payload")

    def to_record(self) -> dict:
        if self.kind == TEXTBOOK:
            return {"kind": TEXTBOOK, "text": self.payload}
        return {"kind": FUNCTION_CALL, **self.payload.to_record()}

    def as_pair(self) -> tuple[str, str]:
        """(input, output) view; textbook blocks are raw completions."""
        if self.kind == TEXTBOOK:
            return "", self.payload
        return self.payload.input_text, self.payload.output_text


def ingest_textbook(path: str | Path) -> TextbookBlocks:
    blocks = TextbookBlocks()
    dropped = 0
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValidationError(f"{path}:{lineno}: invalid JSON ({e.msg})") from None
            if not isinstance(rec, dict) or "text" not in rec:
                raise ValidationError(f"{path}:{lineno}: missing 'text' field")
            text = rec["text"]
            if not isinstance(text, str) or not text.strip():
                dropped += 1
                continue
            blocks.append(text)
    blocks.dropped = dropped
    if dropped:
        log.info("dropped %d blank textbook entries from %s", dropped, path)
    return blocks


def textbook_quota(n_fc: int, ratio: tuple[int, int]) -> int:
    fc, tb = ratio
    # round half up, in integers
    return (2 * n_fc * tb + fc) // (2 * fc)


def mix(fc: Sequence[TrainingRecord], textbook: Sequence[str], spec: MixSpec) -> list[MixedRecord]:
    need = textbook_quota(len(fc), spec.ratio)
    if need > len(textbook):
        raise ValidationError(
            f"ratio {spec.ratio[0]}:{spec.ratio[1]} needs {need} textbook blocks, only {len(textbook)} available"
        )
    rng = random.Random(spec.seed)
    if spec.sampling == HEAD:
        chosen = list(textbook[:need])
    else:
        chosen = rng.sample(list(textbook), need)
    out = [MixedRecord(FUNCTION_CALL, r) for r in fc]
    out.extend(MixedRecord(TEXTBOOK, t) for t in chosen)
    rng.shuffle(out)
    return out
