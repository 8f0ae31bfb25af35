"""Regenerate the recorded baseline sessions used by test_baseline.py.

The sessions are recorded against a scripted stand-in endpoint, not a live
model: it answers filter prompts with the oracle router and writes calls with
a fixed, hash-selected error pattern, so tests can assert exact verdicts.

    python tests/fixtures/record_baseline_fixtures.py
"""

import hashlib
import random
from pathlib import Path

from fcsynth import baseline
from fcsynth.grammar import Router, generate, load_pools_dir
from fcsynth.registry import load_registry

HERE = Path(__file__).parent
CFG = baseline.EndpointConfig(base_url="http://fixture.invalid/v1", model_name="scripted-stand-in",
                              concurrency=1, retry_backoff=0)


def mixed_pool(reg, pools, per_function=3, seed=11):
    out = []
    for s in reg:
        out += [d.question for d in generate(pools[s.name], s, per_function, seed)]
    random.Random(seed).shuffle(out)
    return out


def photo_questions(reg, pools, n=100, seed=5):
    return [d.question for d in generate(pools["take_a_photo"], reg.get("take_a_photo"), n, seed)]


def casing_questions(reg, pools):
    qs = [d for d in generate(pools["take_a_photo"], reg.get("take_a_photo"), 200, 8) if "camera" in d.gold_call.args]
    return [d.question for d in qs[:10]]


class StandIn:
    def __init__(self, reg, pools, mode):
        self.router = Router(pools, reg)
        self.reg = reg
        self.mode = mode

    def __call__(self, body):
        system = body["messages"][0]["content"]
        user = body["messages"][1]["content"]
        question = user.split("User request: ", 1)[1].split("\n", 1)[0]
        desc = user.split("Function description:\n", 1)[1].split("\n\nUser request:", 1)[0]
        target = next(s for s in self.reg if s.description == desc)
        gold = self.router.route(question)
        schema = self.reg.resolve(gold.callee)
        if system == baseline.FILTER_SYSTEM:
            text = "yes" if schema.name == target.name else "no"
        else:
            text = self.write_call(question, schema, gold)
        return {"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}

    def write_call(self, question, schema, gold):
        args = dict(gold.args)
        if self.mode == "casing":
            args = {k: v.capitalize() for k, v in args.items()}
            return baseline_render(schema.name, args)
        h = int(hashlib.sha256(question.encode()).hexdigest(), 16) % 10
        if h == 0 and "camera" in args:
            args["camera"] = "rear" if args["camera"] == "back" else "selfie"
        elif h == 1:
            return baseline_render("capture_photo", args)
        elif h == 2:
            args["flash"] = "on"
        return baseline_render(schema.name, args)


def baseline_render(name, args):
    inner = ", ".join(f'{k}="{v}"' for k, v in args.items())
    return f"{name}({inner})"


def main():
    reg = load_registry()
    pools = load_pools_dir(registry=reg)
    photo = reg.get("take_a_photo")

    rec = baseline.RecordingTransport(StandIn(reg, pools, "noisy"))
    baseline.filter_queries(mixed_pool(reg, pools), photo, CFG, rec)
    baseline.generate_outputs(photo_questions(reg, pools), photo, CFG, rec)
    rec.save(HERE / "baseline_session.json")

    rec = baseline.RecordingTransport(StandIn(reg, pools, "casing"))
    baseline.generate_outputs(casing_questions(reg, pools), photo, CFG, rec)
    rec.save(HERE / "baseline_casing.json")


if __name__ == "__main__":
    main()
