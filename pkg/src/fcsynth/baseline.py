"""LLM-generated dataset baseline over a chat-completion endpoint.

An external model first filters a mixed question pool per function, then
writes a call for each kept question. Every generated call is graded against
the rule-based oracle, which measures how often LLM-written training data is
wrong.

All traffic goes through a *transport*: any callable taking the request body
(a dict) and returning the decoded response body. ``HttpTransport`` talks to a
real endpoint; ``FixtureTransport`` replays recorded request/response pairs.

Wire format (request)::

    {"model": "...", "messages": [{"role": "system", "content": "..."},
                                  {"role": "user", "content": "..."}],
     "temperature": 0}

and the response must carry ``choices[0].message.content``.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .calls import parse_call
from .errors import CallParseError, MalformedResponseError, TransportError, ValidationError
from .evaluator import PARSE_FAILURE, MatchVerdict, match
from .formatter import DF1, TrainingRecord
from .grammar import Router
from .registry import FunctionSchema

log = logging.getLogger(__name__)

PROMPT_VERSION = "v1"

FILTER_SYSTEM = (
    "You decide whether a user request can be served by one phone function. "
    "Answer with exactly one word: yes or no."
)
FILTER_USER = "Function description:\n{description}\n\nUser request: {question}\n\nCan this function serve the request?"

GENERATE_SYSTEM = (
    "You translate a user request into a single call of the given function. "
    'Reply with the call only, written as name(param="value", ...), '
    "using only values the description allows."
)
GENERATE_USER = "Function description:\n{description}\n\nUser request: {question}"

Transport = Callable[[dict], dict]


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str = "https://api.openai.com/v1"
    model_name: str = "gpt-3.5-turbo"
    auth_token_env_var: str = "OPENAI_API_KEY"
    request_timeout: float = 30.0
    max_retries: int = 2
    concurrency: int = 4
    retry_backoff: float = 0.5

    def __post_init__(self):
        if self.request_timeout <= 0:
            raise ValidationError("request_timeout must be positive")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")
        if self.concurrency < 1:
            raise ValidationError("concurrency must be >= 1")


@dataclass
class BaselineRecord:
    question: str
    generated_output: str
    function: str
    verdict_by_oracle: MatchVerdict | None = None


def request_key(body: dict) -> str:
    return json.dumps(body, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


class HttpTransport:
    def __init__(self, cfg: EndpointConfig, client: httpx.Client | None = None):
        self.cfg = cfg
        self.client = client or httpx.Client(timeout=cfg.request_timeout)

    def __call__(self, body: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.cfg.auth_token_env_var)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        url = self.cfg.base_url.rstrip("/") + "/chat/completions"
        try:
            resp = self.client.post(url, json=body, headers=headers)
        except httpx.HTTPError as e:
            raise TransportError(f"{type(e).__name__}: {e}") from e
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"endpoint returned HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise MalformedResponseError(f"endpoint rejected request: HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError:
            raise MalformedResponseError("response body is not JSON") from None


class FixtureTransport:
    """Replays request/response pairs from a JSON file; never touches the network."""

    def __init__(self, path: str | Path):
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        self.pairs = {request_key(p["request"]): p["response"] for p in data["pairs"]}

    def __call__(self, body: dict) -> dict:
        try:
            return self.pairs[request_key(body)]
        except KeyError:
            raise TransportError("no recorded response for this request") from None


class RecordingTransport:
    """Wraps another transport and keeps every exchange for ``save``."""

    def __init__(self, inner: Transport):
        self.inner = inner
        self.pairs: dict[str, tuple[dict, dict]] = {}

    def __call__(self, body: dict) -> dict:
        resp = self.inner(body)
        self.pairs[request_key(body)] = (body, resp)
        return resp

    def save(self, path: str | Path) -> None:
        pairs = [{"request": b, "response": r} for _, (b, r) in sorted(self.pairs.items())]
        Path(path).write_text(
            json.dumps({"prompt_version": PROMPT_VERSION, "pairs": pairs}, indent=1, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )


def chat_body(cfg: EndpointConfig, system: str, user: str) -> dict:
    return {
        "model": cfg.model_name,
        "messages": [{"role": "system", "content": system}, {"role": "user", "content": user}],
        "temperature": 0,
    }


def complete(body: dict, cfg: EndpointConfig, transport: Transport) -> str:
    """Send one request, retrying transport failures with the identical body."""
    for attempt in range(cfg.max_retries + 1):
        try:
            resp = transport(body)
            break
        except TransportError as e:
            if attempt == cfg.max_retries:
                raise TransportError(f"gave up after {attempt + 1} attempts: {e}") from e
            log.warning("attempt %d failed (%s); retrying", attempt + 1, e)
            if cfg.retry_backoff:
                time.sleep(cfg.retry_backoff * 2**attempt)
    try:
        content = resp["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise MalformedResponseError("response lacks choices[0].message.content") from None
    if not isinstance(content, str):
        raise MalformedResponseError("message content is not text")
    return content.strip()


def _fan_out(fn, items, cfg):
    if cfg.concurrency == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
        return list(pool.map(fn, items))


def _transport(cfg, transport):
    return transport if transport is not None else HttpTransport(cfg)


def filter_queries(
    questions: Sequence[str],
    schema: FunctionSchema,
    cfg: EndpointConfig,
    transport: Transport | None = None,
) -> list[str]:
    """Questions the endpoint judges answerable by ``schema``, in input order."""
    if not questions:
        return []
    transport = _transport(cfg, transport)

    def judge(q):
        body = chat_body(cfg, FILTER_SYSTEM, FILTER_USER.format(description=schema.description, question=q))
        answer = complete(body, cfg, transport).lower()
        if answer.startswith("yes"):
            return True
        if answer.startswith("no"):
            return False
        raise MalformedResponseError(f"expected yes/no, got {answer[:40]!r}")

    keep = _fan_out(judge, list(questions), cfg)
    return [q for q, k in zip(questions, keep) if k]


def generate_outputs(
    questions: Sequence[str],
    schema: FunctionSchema,
    cfg: EndpointConfig,
    transport: Transport | None = None,
    router: Router | None = None,
) -> list[BaselineRecord]:
    """One generated call per question; graded by ``router`` when given."""
    transport = _transport(cfg, transport)

    def gen(q):
        body = chat_body(cfg, GENERATE_SYSTEM, GENERATE_USER.format(description=schema.description, question=q))
        return complete(body, cfg, transport)

    outputs = _fan_out(gen, list(questions), cfg)
    records = [BaselineRecord(q, out, schema.name) for q, out in zip(questions, outputs)]
    if router is not None:
        for r in records:
            r.verdict_by_oracle = oracle_verdict(r, router)
    return records


def oracle_verdict(record: BaselineRecord, router: Router) -> MatchVerdict:
    gold = router.route(record.question)
    schema = router.registry.resolve(gold.callee)
    try:
        pred = parse_call(record.generated_output)
    except CallParseError as e:
        return MatchVerdict.fail(PARSE_FAILURE, str(e))
    return match(pred, gold, schema)


def quality_report(records: Sequence[BaselineRecord]) -> dict:
    graded = [r for r in records if r.verdict_by_oracle is not None]
    correct = sum(r.verdict_by_oracle.matched for r in graded)
    reasons: dict[str, int] = {}
    for r in graded:
        reasons[r.verdict_by_oracle.reason] = reasons.get(r.verdict_by_oracle.reason, 0) + 1
    return {
        "total": len(graded),
        "correct": correct,
        "correct_fraction": correct / len(graded) if graded else 0.0,
        "reasons": dict(sorted(reasons.items())),
    }


def to_df1(records: Sequence[BaselineRecord], schema: FunctionSchema) -> list[TrainingRecord]:
    """Baseline records in the question / call + description layout."""
    return [
        TrainingRecord(DF1, r.question, f"{r.generated_output}\n{schema.description}", {"function": r.function})
        for r in records
    ]

