"""Rule-based question generation from phrase pools, plus its inverse.

A question is the single-space join of a question phrase, an action phrase
and one surface phrase per parameter slot, with empty parts dropped. An empty
question phrase gives a command-style question ("snap a picture with the
rear camera"); anything else is request-style. Gold arguments come from the
per-slot mapping tables, so a question and its call can never disagree.

Pools file layout (TOML)::

    function = "take_a_photo"
    questions = ["Can I", "How do I", ""]
    actions = ["take a photo", "snap a picture"]
    oofc_questions = ["Is it achievable to"]

    [[params]]
    name = "camera"
    empty_behavior = "omit-param"     # or "emit-default"
    surfaces = ["with the rear camera", ""]

    [params.mapping]
    "rear" = "back"
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from ._compat import tomllib
from .calls import CallExpr, parse_call
from .errors import (
    AmbiguousActionError,
    CapacityExceededError,
    ConfigParseError,
    EmptyPoolError,
    NoActionMatchError,
    RoutingError,
    UnknownFunctionError,
    ValidationError,
)
from .registry import FunctionSchema, Registry

OMIT_PARAM = "omit-param"
EMIT_DEFAULT = "emit-default"

REQUEST = "request"
COMMAND = "command"
IN_LOGIC = "in-logic"
OUT_OF_LOGIC = "out-of-logic"
TRAIN, TEST, UNASSIGNED = "train", "test", "unassigned"

_pattern_cache: dict[str, re.Pattern] = {}


def _pattern(phrase: str) -> re.Pattern:
    pat = _pattern_cache.get(phrase)
    if pat is None:
        pat = re.compile(r"(?<!\w)" + re.escape(phrase) + r"(?!\w)")
        _pattern_cache[phrase] = pat
    return pat


def _occurs(phrase: str, text: str) -> bool:
    # cheap substring test first; the regex only enforces word boundaries
    return bool(phrase) and phrase in text and _pattern(phrase).search(text) is not None


@dataclass(frozen=True)
class SlotValueMapping:
    param_name: str
    surface_to_value: Mapping[str, str]
    empty_behavior: str = OMIT_PARAM

    def lookup(self, text: str) -> tuple[str, str] | None:
        """Longest mapping key found in ``text`` as (key, canonical value).

        Two different keys of equal length mapping to different values is an
        ambiguity and raises ``RoutingError``.
        """
        hits = [k for k in self.surface_to_value if _occurs(k, text)]
        if not hits:
            return None
        longest = max(len(k) for k in hits)
        top = [k for k in hits if len(k) == longest]
        values = {self.surface_to_value[k] for k in top}
        if len(values) > 1:
            raise RoutingError(f"{self.param_name}: ambiguous keys {sorted(top)} in {text!r}")
        return top[0], self.surface_to_value[top[0]]


@dataclass(frozen=True)
class ParamSlot:
    name: str
    surfaces: tuple[str, ...]
    mapping: SlotValueMapping


@dataclass(frozen=True)
class PhrasePools:
    function: str
    question_phrases: tuple[str, ...]
    action_phrases: tuple[str, ...]
    param_slots: tuple[ParamSlot, ...]
    oofc_question_phrases: tuple[str, ...] = ()

    @property
    def radices(self) -> tuple[int, ...]:
        return (
            len(self.question_phrases),
            len(self.action_phrases),
            *(len(s.surfaces) for s in self.param_slots),
        )

    @property
    def slot_names(self) -> tuple[str, ...]:
        return ("question", "action", *(s.name for s in self.param_slots))


@dataclass
class Demonstration:
    id: str
    function: str
    style: str
    question: str
    gold_call: CallExpr
    slot_choice: dict[str, int]
    logic_domain: str = IN_LOGIC
    split: str = UNASSIGNED

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "function": self.function,
            "style": self.style,
            "question": self.question,
            "gold": self.gold_call.render(),
            "args": dict(self.gold_call.args),
            "logic_domain": self.logic_domain,
            "split": self.split,
            "slots": dict(self.slot_choice),
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "Demonstration":
        try:
            callee = parse_call(rec["gold"]).callee
            return cls(
                id=rec["id"],
                function=rec["function"],
                style=rec["style"],
                question=rec["question"],
                gold_call=CallExpr(callee, dict(rec["args"])),
                slot_choice=dict(rec.get("slots", {})),
                logic_domain=rec.get("logic_domain", IN_LOGIC),
                split=rec.get("split", UNASSIGNED),
            )
        except (KeyError, TypeError) as e:
            raise ValidationError(f"malformed demonstration record: {e}") from None


# ---------------------------------------------------------------------------
# loading and validation


def parse_pools(doc: Mapping, source: str = "<pools>") -> PhrasePools:
    try:
        slots = []
        for p in doc.get("params", ()):
            mapping = SlotValueMapping(
                param_name=p["name"],
                surface_to_value=dict(p.get("mapping", {})),
                empty_behavior=p.get("empty_behavior", OMIT_PARAM),
            )
            slots.append(ParamSlot(p["name"], tuple(p["surfaces"]), mapping))
        return PhrasePools(
            function=doc["function"],
            question_phrases=tuple(doc["questions"]),
            action_phrases=tuple(doc["actions"]),
            param_slots=tuple(slots),
            oofc_question_phrases=tuple(doc.get("oofc_questions", ())),
        )
    except KeyError as e:
        raise ConfigParseError(f"{source}: missing key {e}") from None


def load_pools(path: str | Path) -> PhrasePools:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise ConfigParseError(f"{path}: {e}") from None
    return parse_pools(doc, str(path))


def default_pools_dir():
    return resources.files("fcsynth") / "data" / "pools"


def load_pools_dir(directory=None, registry: Registry | None = None) -> dict[str, PhrasePools]:
    """Load every ``*.toml`` pools file in a directory, keyed by function.

    With a registry, each pools file is validated against its schema and the
    result is ordered like the registry.
    """
    directory = default_pools_dir() if directory is None else Path(directory)
    pools = {}
    for entry in sorted(directory.iterdir(), key=lambda p: p.name):
        if not entry.name.endswith(".toml"):
            continue
        try:
            doc = tomllib.loads(entry.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as e:
            raise ConfigParseError(f"{entry.name}: {e}") from None
        p = parse_pools(doc, entry.name)
        if p.function in pools:
            raise ValidationError(f"two pools files for {p.function!r}")
        pools[p.function] = p
    if registry is not None:
        for name in pools:
            validate_pools(pools[name], registry.get(name))
        pools = {s.name: pools[s.name] for s in registry if s.name in pools}
    return pools


def validate_pools(pools: PhrasePools, schema: FunctionSchema) -> None:
    if pools.function != schema.name:
        raise ValidationError(f"pools for {pools.function!r} checked against {schema.name!r}")
    overlap = set(pools.oofc_question_phrases) & set(pools.question_phrases)
    if overlap:
        raise ValidationError(f"{pools.function}: out-of-logic phrases reused in-logic: {sorted(overlap)}")
    if "" in pools.oofc_question_phrases:
        raise ValidationError(f"{pools.function}: empty out-of-logic phrase")
    if any(not a for a in pools.action_phrases):
        raise ValidationError(f"{pools.function}: empty action phrase")
    for slot in pools.param_slots:
        try:
            spec = schema.param(slot.name)
        except KeyError:
            raise ValidationError(f"{pools.function}: slot {slot.name!r} is not a parameter") from None
        m = slot.mapping
        if m.empty_behavior not in (OMIT_PARAM, EMIT_DEFAULT):
            raise ValidationError(f"{slot.name}: unknown empty_behavior {m.empty_behavior!r}")
        for key, value in m.surface_to_value.items():
            if not key:
                raise ValidationError(f"{slot.name}: empty mapping key")
            if not spec.accepts(value):
                raise ValidationError(f"{slot.name}: {value!r} is not an allowed value")
        if "" in slot.surfaces:
            if m.empty_behavior == EMIT_DEFAULT and spec.default_value is None:
                raise ValidationError(f"{slot.name}: emit-default without a schema default")
            if m.empty_behavior == OMIT_PARAM and spec.required:
                raise ValidationError(f"{slot.name}: required parameter may be omitted")
        for surface in slot.surfaces:
            if surface:
                try:
                    hit = m.lookup(surface)
                except RoutingError as e:
                    raise ValidationError(str(e)) from None
                if hit is None:
                    raise ValidationError(f"{slot.name}: no mapping key in {surface!r}")
    slot_names = {s.name for s in pools.param_slots}
    for spec in schema.params:
        if spec.required and spec.name not in slot_names:
            raise ValidationError(f"{pools.function}: required parameter {spec.name!r} has no slot")


# ---------------------------------------------------------------------------
# generation


def capacity(pools: PhrasePools) -> int:
    """Number of distinct slot combinations (command style included)."""
    return math.prod(pools.radices)


def decode_index(index: int, radices: Sequence[int]) -> tuple[int, ...]:
    """Mixed-radix decode; the last slot varies fastest."""
    digits = []
    for r in reversed(radices):
        index, d = divmod(index, r)
        digits.append(d)
    return tuple(reversed(digits))


def assemble(*parts: str) -> str:
    return " ".join(p for p in parts if p)


def _gold_args(pools: PhrasePools, schema: FunctionSchema, surfaces: Sequence[str]) -> dict:
    args = {}
    chosen = {slot.name: (slot, s) for slot, s in zip(pools.param_slots, surfaces)}
    for spec in schema.params:
        if spec.name not in chosen:
            continue
        slot, surface = chosen[spec.name]
        if surface:
            args[spec.name] = slot.mapping.lookup(surface)[1]
        elif slot.mapping.empty_behavior == EMIT_DEFAULT:
            args[spec.name] = spec.default_value
    return args


def build_demo(pools: PhrasePools, schema: FunctionSchema, index: int) -> Demonstration:
    """The demonstration at combination ``index`` of the pools' product space."""
    digits = decode_index(index, pools.radices)
    q = pools.question_phrases[digits[0]]
    a = pools.action_phrases[digits[1]]
    surfaces = [slot.surfaces[d] for slot, d in zip(pools.param_slots, digits[2:])]
    return Demonstration(
        id=f"{pools.function}/{index}",
        function=pools.function,
        style=REQUEST if q else COMMAND,
        question=assemble(q, a, *surfaces),
        gold_call=CallExpr(schema.token.surface, _gold_args(pools, schema, surfaces)),
        slot_choice=dict(zip(pools.slot_names, digits)),
    )


def _sample_blocks(rng: random.Random, blocks: list[range], k: int) -> list[int]:
    sizes = [len(b) for b in blocks]
    total = sum(sizes)
    out = []
    for local in rng.sample(range(total), k):
        for b, size in zip(blocks, sizes):
            if local < size:
                out.append(b[local])
                break
            local -= size
    return out


def generate(
    pools: PhrasePools,
    schema: FunctionSchema,
    count: int,
    seed: int,
    command_fraction: float | None = None,
) -> list[Demonstration]:
    """Draw ``count`` distinct demonstrations without replacement.

    Indices are a seeded sample of ``range(capacity)`` decoded as mixed-radix
    slot choices, so uniqueness is exact and memory stays O(count). By
    default every combination is equally likely; ``command_fraction`` instead
    fixes the share of command-style questions.
    """
    cap = capacity(pools)
    if count < 1:
        raise ValidationError(f"count must be positive, got {count}")
    if count > cap:
        raise CapacityExceededError(
            f"{pools.function}: requested {count} questions but only {cap} distinct combinations exist"
        )
    rng = random.Random(seed)
    if command_fraction is None:
        indices = rng.sample(range(cap), count)
    else:
        if not 0.0 <= command_fraction <= 1.0:
            raise ValidationError("command_fraction must be in [0, 1]")
        block = cap // len(pools.question_phrases)
        cmd, req = [], []
        for qi, q in enumerate(pools.question_phrases):
            (req if q else cmd).append(range(qi * block, (qi + 1) * block))
        n_cmd = round(count * command_fraction)
        n_req = count - n_cmd
        cmd_cap, req_cap = sum(map(len, cmd)), sum(map(len, req))
        if n_cmd > cmd_cap or n_req > req_cap:
            raise CapacityExceededError(
                f"{pools.function}: {n_cmd} command / {n_req} request questions requested, "
                f"capacity is {cmd_cap} / {req_cap}"
            )
        indices = _sample_blocks(rng, cmd, n_cmd) + _sample_blocks(rng, req, n_req)
        rng.shuffle(indices)
    return [build_demo(pools, schema, i) for i in indices]


def make_oofc(
    demos: Sequence[Demonstration],
    pools: PhrasePools | Mapping[str, PhrasePools],
    seed: int,
) -> list[Demonstration]:
    """Out-of-logic twins: the question part is swapped for an unseen phrase.

    Command-style demos get the phrase prepended. Gold calls are unchanged.
    """
    by_fn = {pools.function: pools} if isinstance(pools, PhrasePools) else pools
    rng = random.Random(seed)
    out = []
    for d in demos:
        if d.logic_domain != IN_LOGIC:
            raise ValidationError(f"{d.id}: already out-of-logic")
        try:
            p = by_fn[d.function]
        except KeyError:
            raise UnknownFunctionError(f"no pools for {d.function!r}") from None
        if not p.oofc_question_phrases:
            raise EmptyPoolError(f"{p.function}: out-of-logic phrase pool is empty")
        choice = rng.randrange(len(p.oofc_question_phrases))
        action = p.action_phrases[d.slot_choice["action"]]
        surfaces = [s.surfaces[d.slot_choice[s.name]] for s in p.param_slots]
        slots = {k: v for k, v in d.slot_choice.items() if k != "question"}
        out.append(
            replace(
                d,
                id=f"{d.id}/oofc",
                question=assemble(p.oofc_question_phrases[choice], action, *surfaces),
                gold_call=CallExpr(d.gold_call.callee, dict(d.gold_call.args)),
                slot_choice={"oofc_question": choice, **slots},
                logic_domain=OUT_OF_LOGIC,
            )
        )
    return out


# ---------------------------------------------------------------------------
# inverse: question -> call


class Router:
    """Deterministic inverse of the generator.

    The function is chosen by the longest action phrase found anywhere in the
    question; arguments by the longest mapping key per slot.
    """

    def __init__(self, pools: Mapping[str, PhrasePools], registry: Registry):
        self.registry = registry
        self.pools = dict(pools)
        self._actions = sorted(
            {(a, fn) for fn, p in self.pools.items() for a in p.action_phrases},
            key=lambda t: (-len(t[0]), t[0], t[1]),
        )

    def identify(self, question: str) -> str:
        best_len, fns = None, set()
        for phrase, fn in self._actions:
            if best_len is not None and len(phrase) < best_len:
                break
            if _occurs(phrase, question):
                best_len = len(phrase)
                fns.add(fn)
        if not fns:
            raise NoActionMatchError(f"no known action in {question!r}")
        if len(fns) > 1:
            raise AmbiguousActionError(f"{question!r} matches actions of {sorted(fns)}")
        return fns.pop()

    def route(self, question: str) -> CallExpr:
        fn = self.identify(question)
        schema = self.registry.get(fn)
        slots = {s.name: s for s in self.pools[fn].param_slots}
        args = {}
        for spec in schema.params:
            slot = slots.get(spec.name)
            if slot is None:
                continue
            hit = slot.mapping.lookup(question)
            if hit is not None:
                args[spec.name] = hit[1]
            elif slot.mapping.empty_behavior == EMIT_DEFAULT:
                args[spec.name] = spec.default_value
        return CallExpr(schema.token.surface, args)


def oracle_route(question: str, pools: Mapping[str, PhrasePools], registry: Registry) -> CallExpr:
    return Router(pools, registry).route(question)
