"""Command-line entry point: ``fcsynth <subcommand> [flags]``.

Settings come from built-in defaults, then an optional ``--config`` TOML
file, then flags (flags win). Every subcommand echoes its effective settings
to stderr so a run can be repeated from its log.

Exit codes: 0 ok, 1 validation error, 2 I/O error, 3 remote/transport error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import zlib
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import baseline, evaluator, formatter, grammar, mixer
from ._compat import tomllib
from .errors import ConfigParseError, FcSynthError, MalformedResponseError, TransportError, ValidationError
from .jsonl import read_jsonl, read_many, write_jsonl
from .registry import load_registry

log = logging.getLogger("fcsynth")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_REMOTE = 0, 1, 2, 3


@dataclass
class RunConfig:
    registry_path: str | None = None
    pools_dir: str | None = None
    output_dir: str = "out"
    seed: int = 0
    per_function_count: int = 1000
    train_count: int = 200
    mix_ratio: str = "1:1"
    format: str = "DF2"
    command_fraction: float | None = None

    def validate(self):
        if self.per_function_count < 1:
            raise ValidationError("per_function_count must be positive")
        if self.train_count < 0:
            raise ValidationError("train_count must be non-negative")
        mixer.parse_ratio(self.mix_ratio)
        self.format = formatter.normalize_format(self.format)
        return self


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        doc = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise ConfigParseError(f"{path}: {e}") from None
    known = {f.name for f in fields(RunConfig)} | {"endpoint"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigParseError(f"{path}: unknown keys {sorted(unknown)}")
    if isinstance(doc.get("mix_ratio"), list):
        doc["mix_ratio"] = ":".join(map(str, doc["mix_ratio"]))
    return doc


FLAG_TO_FIELD = {
    "registry": "registry_path",
    "pools": "pools_dir",
    "seed": "seed",
    "count": "per_function_count",
    "train_count": "train_count",
    "ratio": "mix_ratio",
    "format": "format",
    "command_fraction": "command_fraction",
}


def effective(args) -> tuple[RunConfig, dict]:
    doc = load_config(args.config)
    endpoint = doc.pop("endpoint", {})
    cfg = RunConfig(**doc)
    for flag, name in FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, name, value)
    return cfg.validate(), endpoint


def sub_seed(seed: int, name: str) -> int:
    """Stable per-function seed derived from the run seed."""
    return zlib.crc32(f"{seed}:{name}".encode())


def echo_config(command, cfg, **extra):
    shown = {"command": command, **asdict(cfg), **extra}
    print("effective config: " + json.dumps(shown, sort_keys=True, default=str), file=sys.stderr)


def _load(cfg):
    reg = load_registry(cfg.registry_path)
    pools = grammar.load_pools_dir(cfg.pools_dir, registry=reg)
    return reg, pools


def _demos(paths):
    return [grammar.Demonstration.from_record(r) for r in read_many(paths)]


def _out_path(args, cfg, default_name):
    return Path(args.out) if args.out else Path(cfg.output_dir) / default_name


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args, cfg, endpoint):
    reg, pools = _load(cfg)
    out_dir = Path(args.out or cfg.output_dir)
    echo_config("generate", cfg, out=str(out_dir))
    missing = [s.name for s in reg if s.name not in pools]
    if missing:
        raise ValidationError(f"no phrase pools for {missing}")
    stats = []
    for name, p in pools.items():
        demos = grammar.generate(
            p, reg.get(name), cfg.per_function_count, sub_seed(cfg.seed, name), cfg.command_fraction
        )
        write_jsonl(out_dir / "demos" / f"{name}.jsonl", (d.to_record() for d in demos))
        styles = {grammar.REQUEST: 0, grammar.COMMAND: 0}
        for d in demos:
            styles[d.style] += 1
        stats.append(
            {
                "function": name,
                "capacity": grammar.capacity(p),
                "generated": len(demos),
                "unique_questions": len({d.question for d in demos}),
                "styles": styles,
            }
        )
    (out_dir / "stats.json").write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
    total = sum(s["generated"] for s in stats)
    print(f"generated {total} demonstrations for {len(stats)} functions -> {out_dir}")
    return EXIT_OK


def cmd_split(args, cfg, endpoint):
    out_dir = Path(args.out or cfg.output_dir)
    echo_config("split", cfg, inputs=args.inputs, out=str(out_dir))
    by_fn: dict[str, list] = {}
    for d in _demos(args.inputs):
        by_fn.setdefault(d.function, []).append(d)
    train, test = [], []
    for name, demos in by_fn.items():
        tr, te = formatter.split(demos, cfg.train_count, sub_seed(cfg.seed, name))
        train += tr
        test += te
    write_jsonl(out_dir / "train.jsonl", (d.to_record() for d in train))
    write_jsonl(out_dir / "test.jsonl", (d.to_record() for d in test))
    print(f"train {len(train)} / test {len(test)} over {len(by_fn)} functions -> {out_dir}")
    return EXIT_OK


def cmd_oofc(args, cfg, endpoint):
    _, pools = _load(cfg)
    out = _out_path(args, cfg, "oofc.jsonl")
    echo_config("oofc", cfg, inputs=args.inputs, out=str(out))
    variants = grammar.make_oofc(_demos(args.inputs), pools, cfg.seed)
    write_jsonl(out, (d.to_record() for d in variants))
    print(f"{len(variants)} out-of-logic variants -> {out}")
    return EXIT_OK


def cmd_format(args, cfg, endpoint):
    reg = load_registry(cfg.registry_path)
    out = _out_path(args, cfg, f"{cfg.format.lower()}.jsonl")
    echo_config("format", cfg, inputs=args.inputs, out=str(out), order_seed=args.order_seed,
                concatenated=args.concatenated)
    recs = [
        formatter.render(d, cfg.format, reg, order_seed=args.order_seed, concatenated=args.concatenated)
        for d in _demos(args.inputs)
    ]
    write_jsonl(out, (r.to_record() for r in recs))
    print(f"{len(recs)} {cfg.format} records -> {out}")
    return EXIT_OK


def cmd_prompt(args, cfg, endpoint):
    out_dir = _out_path(args, cfg, "prompts")
    echo_config("prompt", cfg, shots=args.shots, queries=args.queries, k=args.k, out=str(out_dir))
    pool = [formatter.TrainingRecord.from_record(r) for r in read_many([args.shots])]
    queries = [formatter.TrainingRecord.from_record(r) for r in read_many([args.queries])]
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, q in enumerate(queries):
        bundle = formatter.build_prompt(pool, q, args.k, sub_seed(cfg.seed, q.meta.get("id", str(i))))
        name = q.meta.get("id", str(i)).replace("/", "_")
        (out_dir / f"{name}.txt").write_text(bundle.render(), encoding="utf-8")
    print(f"{len(queries)} {args.k}-shot prompts -> {out_dir}")
    return EXIT_OK


def cmd_mix(args, cfg, endpoint):
    out = _out_path(args, cfg, "mixed.jsonl")
    spec = mixer.MixSpec(mixer.parse_ratio(cfg.mix_ratio), cfg.seed, args.sampling)
    echo_config("mix", cfg, inputs=args.inputs, textbook=args.textbook, sampling=args.sampling, out=str(out))
    fc = [formatter.TrainingRecord.from_record(r) for r in read_many(args.inputs)]
    textbook = mixer.ingest_textbook(args.textbook) if args.textbook else []
    mixed = mixer.mix(fc, textbook, spec)
    write_jsonl(out, (m.to_record() for m in mixed))
    n_tb = sum(m.kind == mixer.TEXTBOOK for m in mixed)
    print(f"{len(mixed)} records ({len(mixed) - n_tb} function-call, {n_tb} textbook) -> {out}")
    return EXIT_OK


def cmd_predict(args, cfg, endpoint):
    reg, pools = _load(cfg)
    out = _out_path(args, cfg, "predictions.jsonl")
    echo_config("predict", cfg, inputs=args.inputs, out=str(out))
    router = grammar.Router(pools, reg)
    demos = _demos(args.inputs)
    write_jsonl(out, ({"demo_id": d.id, "raw_text": router.route(d.question).render()} for d in demos))
    print(f"{len(demos)} oracle predictions -> {out}")
    return EXIT_OK


def cmd_evaluate(args, cfg, endpoint):
    reg = load_registry(cfg.registry_path)
    echo_config("evaluate", cfg, gold=args.gold, predictions=args.predictions, benchmarks=args.benchmarks,
                out=args.out)
    gold = _demos(args.gold)
    preds = [evaluator.Prediction.from_record(r) for r in read_jsonl(args.predictions)]
    scores = None
    if args.benchmarks:
        try:
            scores = tomllib.loads(Path(args.benchmarks).read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as e:
            raise ConfigParseError(f"{args.benchmarks}: {e}") from None
    report = evaluator.grade(preds, gold, reg, scores)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(report.table())
    return EXIT_OK


def cmd_baseline(args, cfg, endpoint):
    reg, pools = _load(cfg)
    ep = baseline.EndpointConfig(**endpoint)
    overrides = {k: v for k, v in (("base_url", args.base_url), ("model_name", args.model)) if v}
    if overrides:
        ep = baseline.EndpointConfig(**{**asdict(ep), **overrides})
    out = _out_path(args, cfg, "baseline.jsonl")
    echo_config("baseline", cfg, endpoint=asdict(ep), fixture=args.fixture, inputs=args.inputs, out=str(out))
    transport = baseline.FixtureTransport(args.fixture) if args.fixture else baseline.HttpTransport(ep)
    recorder = baseline.RecordingTransport(transport) if args.record else None
    router = grammar.Router(pools, reg)
    questions = [d.question for d in _demos(args.inputs)]
    functions = args.function or list(reg.names)
    rows, records = [], []
    for name in functions:
        schema = reg.get(name)
        kept = baseline.filter_queries(questions, schema, ep, recorder or transport)
        recs = baseline.generate_outputs(kept, schema, ep, recorder or transport, router)
        records += recs
        rows += [
            {**r.to_record(), "question": b.question, "function": name,
             "verdict": b.verdict_by_oracle.reason}
            for r, b in zip(baseline.to_df1(recs, schema), recs)
        ]
    write_jsonl(out, rows)
    if recorder is not None:
        recorder.save(args.record)
    print(json.dumps(baseline.quality_report(records), sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run config; flags override it")
    common.add_argument("--seed", type=int)
    common.add_argument("--registry", help="function schema file (default: bundled)")
    common.add_argument("--pools", help="directory of phrase pool files (default: bundled)")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="fcsynth", description="Rule-based function-call dataset toolkit.")
    subs = p.add_subparsers(dest="command", required=True)

    s = subs.add_parser("generate", parents=[common], help="generate demonstrations per function")
    s.add_argument("--count", type=int, help="demonstrations per function (default 1000)")
    s.add_argument("--command-fraction", type=float, help="fixed share of command-style questions")
    s.set_defaults(func=cmd_generate)

    s = subs.add_parser("split", parents=[common], help="per-function train/test split")
    s.add_argument("inputs", nargs="+", help="demonstration files or directories")
    s.add_argument("--train-count", type=int, help="train items per function (default 200)")
    s.set_defaults(func=cmd_split)

    s = subs.add_parser("oofc", parents=[common], help="out-of-logic variants of demonstrations")
    s.add_argument("inputs", nargs="+")
    s.set_defaults(func=cmd_oofc)

    s = subs.add_parser("format", parents=[common], help="render DF1/DF2 training records")
    s.add_argument("inputs", nargs="+")
    s.add_argument("--format", type=str.upper, choices=formatter.FORMATS, metavar="df1|df2")
    s.add_argument("--order-seed", type=int, help="shuffle DF2 description order per record")
    s.add_argument("--concatenated", action="store_true", help="DF1 as one training sequence")
    s.set_defaults(func=cmd_format)

    s = subs.add_parser("prompt", parents=[common], help="k-shot prompt files for pretrained models")
    s.add_argument("--shots", required=True, help="training records to draw shots from")
    s.add_argument("--queries", required=True, help="training records to build prompts for")
    s.add_argument("--k", type=int, default=10)
    s.set_defaults(func=cmd_prompt)

    s = subs.add_parser("mix", parents=[common], help="mix training records with a textbook corpus")
    s.add_argument("inputs", nargs="+", help="training record files")
    s.add_argument("--textbook", help="JSON Lines corpus with a 'text' field")
    s.add_argument("--ratio", help="function-call:textbook record ratio, e.g. 1:1")
    s.add_argument("--sampling", choices=(mixer.HEAD, mixer.SEEDED_UNIFORM), default=mixer.SEEDED_UNIFORM)
    s.set_defaults(func=cmd_mix)

    s = subs.add_parser("predict", parents=[common], help="oracle-router predictions (reference predictor)")
    s.add_argument("inputs", nargs="+")
    s.set_defaults(func=cmd_predict)

    s = subs.add_parser("evaluate", parents=[common], help="grade predictions")
    s.add_argument("--gold", nargs="+", required=True, help="gold demonstration files")
    s.add_argument("--predictions", required=True)
    s.add_argument("--benchmarks", help="TOML with mmlu, gsm8k, arc, hellaswag, winogrande, truthfulqa")
    s.set_defaults(func=cmd_evaluate)

    s = subs.add_parser("baseline", parents=[common], help="LLM-generated data baseline")
    s.add_argument("inputs", nargs="+", help="demonstrations whose questions form the pool")
    s.add_argument("--function", action="append", help="restrict to these functions")
    s.add_argument("--fixture", help="replay recorded responses instead of calling the endpoint")
    s.add_argument("--record", help="save the request/response session to this file")
    s.add_argument("--base-url")
    s.add_argument("--model")
    s.set_defaults(func=cmd_baseline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg, endpoint = effective(args)
        return args.func(args, cfg, endpoint)
    except (TransportError, MalformedResponseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_REMOTE
    except (FcSynthError, ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
