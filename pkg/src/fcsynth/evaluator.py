"""AST-level grading of single function calls and the aggregate metrics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .calls import CallExpr, parse_call
from .errors import CallParseError, ValidationError
from .grammar import IN_LOGIC, OUT_OF_LOGIC, TRAIN, Demonstration
from .registry import FunctionSchema, Registry

BENCHMARKS = ("mmlu", "gsm8k", "arc", "hellaswag", "winogrande", "truthfulqa")

OK = "ok"
PARSE_FAILURE = "parse-failure"
WRONG_FUNCTION = "wrong-function"
MISSING_REQUIRED_ARG = "missing-required-arg"
WRONG_ARG_VALUE = "wrong-arg-value"
UNEXPECTED_ARG = "unexpected-arg"
REASONS = (OK, PARSE_FAILURE, WRONG_FUNCTION, MISSING_REQUIRED_ARG, WRONG_ARG_VALUE, UNEXPECTED_ARG)


@dataclass(frozen=True)
class Prediction:
    demo_id: str
    raw_text: str

    @classmethod
    def from_record(cls, rec: Mapping) -> "Prediction":
        try:
            return cls(str(rec["demo_id"]), str(rec["raw_text"]))
        except KeyError as e:
            raise ValidationError(f"malformed prediction record: missing {e}") from None


@dataclass(frozen=True)
class MatchVerdict:
    matched: bool
    reason: str
    demo_id: str = ""
    detail: str = ""

    @classmethod
    def ok(cls, demo_id=""):
        return cls(True, OK, demo_id)

    @classmethod
    def fail(cls, reason, detail="", demo_id=""):
        return cls(False, reason, demo_id, detail)


def match(pred: CallExpr, gold: CallExpr, schema: FunctionSchema) -> MatchVerdict:
    """Single-call AST match.

    The callee may be the special token or the plain function name. An
    optional parameter left out on either side counts as its schema default.
    """
    names = (schema.token.surface, schema.name)
    if pred.callee not in names or gold.callee not in names:
        return MatchVerdict.fail(WRONG_FUNCTION, f"{pred.callee} != {gold.callee}")
    extra = [k for k in pred.args if k not in schema.param_names]
    if extra:
        return MatchVerdict.fail(UNEXPECTED_ARG, ", ".join(extra))
    for spec in schema.params:
        want = gold.args.get(spec.name, spec.default_value)
        if spec.name not in pred.args:
            if spec.required:
                return MatchVerdict.fail(MISSING_REQUIRED_ARG, spec.name)
            got = spec.default_value
        else:
            got = pred.args[spec.name]
        if got != want:
            return MatchVerdict.fail(WRONG_ARG_VALUE, f"{spec.name}={got!r}, expected {want!r}")
    return MatchVerdict.ok()


def grade_one(raw_text: str, demo: Demonstration, schema: FunctionSchema) -> MatchVerdict:
    try:
        pred = parse_call(raw_text)
    except CallParseError as e:
        return MatchVerdict.fail(PARSE_FAILURE, str(e), demo.id)
    v = match(pred, demo.gold_call, schema)
    return MatchVerdict(v.matched, v.reason, demo.id, v.detail)


def fclaa(acc_logic: float, acc_oofc: float, scores: Mapping[str, float] | Sequence[float]) -> float:
    """Mean of in-logic accuracy, out-of-logic accuracy and the benchmark mean."""
    values = list(scores.values()) if isinstance(scores, Mapping) else list(scores)
    if len(values) != len(BENCHMARKS):
        raise ValidationError(f"expected {len(BENCHMARKS)} benchmark scores, got {len(values)}")
    for v in (acc_logic, acc_oofc, *values):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"score {v} outside [0, 1]")
    return (acc_logic + acc_oofc + sum(values) / len(values)) / 3


@dataclass
class EvalReport:
    acc_logic: float | None
    acc_oofc: float | None
    per_demo: list[MatchVerdict]
    totals: dict[str, int]
    benchmark_scores: dict[str, float] = field(default_factory=dict)
    fclaa: float | None = None

    @property
    def counts(self) -> dict[str, int]:
        c = Counter(v.reason for v in self.per_demo)
        return {r: c.get(r, 0) for r in REASONS}

    def to_dict(self) -> dict:
        r4 = lambda x: None if x is None else round(x, 4)  # noqa: E731
        return {
            "acc_logic": r4(self.acc_logic),
            "acc_oofc": r4(self.acc_oofc),
            "benchmark_scores": dict(self.benchmark_scores),
            "fclaa": r4(self.fclaa),
            "totals": dict(self.totals),
            "counts": self.counts,
            "per_demo": [
                {"demo_id": v.demo_id, "matched": v.matched, "reason": v.reason, "detail": v.detail}
                for v in self.per_demo
            ],
        }

    def table(self) -> str:
        fmt = lambda x: "n/a" if x is None else f"{x:.4f}"  # noqa: E731
        rows = [
            ("Func Call ACC", fmt(self.acc_logic), self.totals.get(IN_LOGIC, 0)),
            ("OOFC", fmt(self.acc_oofc), self.totals.get(OUT_OF_LOGIC, 0)),
        ]
        for name in BENCHMARKS:
            if name in self.benchmark_scores:
                rows.append((name, fmt(self.benchmark_scores[name]), ""))
        if self.fclaa is not None:
            rows.append(("FCLAA", fmt(self.fclaa), ""))
        width = max(len(r[0]) for r in rows)
        lines = [f"{'metric':<{width}}  {'value':>7}  n"]
        lines += [f"{name:<{width}}  {val:>7}  {n}" for name, val, n in rows]
        bad = {k: v for k, v in self.counts.items() if k != OK and v}
        if bad:
            lines.append("failures: " + ", ".join(f"{k}={v}" for k, v in bad.items()))
        return "\n".join(lines)


def grade(
    preds: Sequence[Prediction],
    gold: Sequence[Demonstration],
    schemas: Registry,
    benchmark_scores: Mapping[str, float] | None = None,
) -> EvalReport:
    """Grade predictions against every non-train gold demo.

    A gold demo with no prediction counts as a parse failure.
    """
    graded = [d for d in gold if d.split != TRAIN]
    by_id = {}
    for d in graded:
        if d.id in by_id:
            raise ValidationError(f"gold demo {d.id!r} listed twice")
        by_id[d.id] = d
    raw = {}
    for p in preds:
        if p.demo_id not in by_id:
            raise ValidationError(f"prediction for unknown demo {p.demo_id!r}")
        if p.demo_id in raw:
            raise ValidationError(f"duplicate prediction for {p.demo_id!r}")
        raw[p.demo_id] = p.raw_text

    verdicts = []
    hits, totals = Counter(), Counter()
    for d in graded:
        schema = schemas.get(d.function)
        if d.id in raw:
            v = grade_one(raw[d.id], d, schema)
        else:
            v = MatchVerdict.fail(PARSE_FAILURE, "no prediction", d.id)
        verdicts.append(v)
        totals[d.logic_domain] += 1
        hits[d.logic_domain] += v.matched

    acc = lambda dom: hits[dom] / totals[dom] if totals[dom] else None  # noqa: E731
    report = EvalReport(acc(IN_LOGIC), acc(OUT_OF_LOGIC), verdicts, dict(totals))
    if benchmark_scores:
        missing = [b for b in BENCHMARKS if b not in benchmark_scores]
        if missing:
            raise ValidationError(f"missing benchmark scores: {missing}")
        report.benchmark_scores = {b: float(benchmark_scores[b]) for b in BENCHMARKS}
        if report.acc_logic is not None and report.acc_oofc is not None:
            report.fclaa = fclaa(report.acc_logic, report.acc_oofc, report.benchmark_scores)
    return report
