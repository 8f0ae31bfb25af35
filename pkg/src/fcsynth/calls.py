"""Single function-call expressions: the AST, its canonical rendering and a parser.

Grammar (whitespace allowed between tokens)::

    call   := callee "(" [arg ("," arg)*] ")"
    callee := "<fn_" digits ">" | identifier
    arg    := identifier "=" quoted
    quoted := '"' ... '"' | "'" ... "'"      (backslash escapes)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

from .errors import CallParseError

END_OF_CALL = "<eoc>"

_CALLEE_START = re.compile(r"(?<![A-Za-z0-9_])(<fn_\d+>|[A-Za-z_][A-Za-z0-9_]*)\s*\(")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_WS = re.compile(r"\s*")


@dataclass(frozen=True)
class CallExpr:
    callee: str
    args: Mapping[str, str] = field(default_factory=dict)

    def render(self, order=None) -> str:
        """Canonical text form; ``order`` fixes argument order (default: insertion)."""
        keys = list(self.args)
        if order is not None:
            rank = {name: i for i, name in enumerate(order)}
            keys.sort(key=lambda k: rank.get(k, len(rank)))
        inner = ", ".join(f'{k}="{_escape(self.args[k])}"' for k in keys)
        return f"{self.callee}({inner})"

    def __str__(self):
        return self.render()

    def __hash__(self):
        return hash((self.callee, frozenset(self.args.items())))


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"')


class _Fail(Exception):
    def __init__(self, reason, pos):
        self.reason = reason
        self.pos = pos


def _skip_ws(text, pos):
    return _WS.match(text, pos).end()


def _parse_quoted(text, pos):
    quote = text[pos] if pos < len(text) else ""
    if quote not in ("'", '"'):
        raise _Fail("expected quoted string", pos)
    out = []
    i = pos + 1
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            if i + 1 >= len(text):
                break
            out.append(text[i + 1])
            i += 2
        elif ch == quote:
            return "".join(out), i + 1
        else:
            out.append(ch)
            i += 1
    raise _Fail("unterminated string", pos)


def _parse_at(text, start, callee):
    """Parse the argument list whose '(' ends at ``start``; return (call, end)."""
    args = {}
    pos = _skip_ws(text, start)
    if pos < len(text) and text[pos] == ")":
        return CallExpr(callee, args), pos + 1
    while True:
        m = _IDENT.match(text, pos)
        if not m:
            raise _Fail("expected argument name", pos)
        name = m.group()
        pos = _skip_ws(text, m.end())
        if pos >= len(text) or text[pos] != "=":
            raise _Fail("expected '='", pos)
        pos = _skip_ws(text, pos + 1)
        value, pos = _parse_quoted(text, pos)
        if name in args:
            raise _Fail(f"duplicate argument {name!r}", m.start())
        args[name] = value
        pos = _skip_ws(text, pos)
        if pos >= len(text):
            raise _Fail("unexpected end of input", pos)
        if text[pos] == ")":
            return CallExpr(callee, args), pos + 1
        if text[pos] != ",":
            raise _Fail("expected ',' or ')'", pos)
        pos = _skip_ws(text, pos + 1)


def parse_call(text: str) -> CallExpr:
    """Return the first well-formed call in ``text``.

    Leading text before the callee and anything after the closing
    parenthesis (an ``<eoc>`` sentinel, a trailing description) is ignored.
    Raises ``CallParseError`` when no candidate parses.
    """
    if not isinstance(text, str):
        raise CallParseError("input is not text", 0)
    best = None
    for m in _CALLEE_START.finditer(text):
        try:
            call, _ = _parse_at(text, m.end(), m.group(1))
            return call
        except _Fail as f:
            if best is None or f.pos > best.pos:
                best = f
    if best is None:
        raise CallParseError("no function call found", 0)
    raise CallParseError(best.reason, best.pos)
