"""Function schemas, special output tokens and the registry that indexes them.

A registry file is TOML with one ``[[functions]]`` table per callable::

    [[functions]]
    name = "take_a_photo"
    description = \"\"\"
    Captures a photo ...
    \"\"\"

    [[functions.params]]
    name = "camera"
    kind = "string-enum"          # or "free-string"
    allowed = ["front", "back"]   # string-enum only
    default = "back"              # optional
    required = false

Token indices follow file order, so the first function is ``<fn_0>``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator

import tomli_w

from ._compat import tomllib
from .errors import ConfigParseError, UnknownFunctionError, ValidationError

STRING_ENUM = "string-enum"
FREE_STRING = "free-string"
PARAM_KINDS = (STRING_ENUM, FREE_STRING)

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_TOKEN = re.compile(r"^<fn_(\d+)>$")


@dataclass(frozen=True)
class SpecialToken:
    index: int

    @property
    def surface(self) -> str:
        return f"<fn_{self.index}>"

    @classmethod
    def parse(cls, text: str) -> "SpecialToken":
        m = _TOKEN.match(text)
        if not m:
            raise ValueError(f"not a special token: {text!r}")
        return cls(int(m.group(1)))

    def __str__(self):
        return self.surface


@dataclass(frozen=True)
class ParamSpec:
    name: str
    value_kind: str = FREE_STRING
    allowed_values: tuple[str, ...] = ()
    default_value: str | None = None
    required: bool = False

    def __post_init__(self):
        if not _IDENT.match(self.name):
            raise ValidationError(f"bad parameter name {self.name!r}")
        if self.value_kind not in PARAM_KINDS:
            raise ValidationError(f"{self.name}: unknown kind {self.value_kind!r}")
        if self.value_kind == STRING_ENUM:
            if not self.allowed_values:
                raise ValidationError(f"{self.name}: string-enum needs allowed values")
            if any(not isinstance(v, str) or not v for v in self.allowed_values):
                raise ValidationError(f"{self.name}: allowed values must be non-empty strings")
            if len(set(self.allowed_values)) != len(self.allowed_values):
                raise ValidationError(f"{self.name}: duplicate allowed values")
            if self.default_value is not None and self.default_value not in self.allowed_values:
                raise ValidationError(
                    f"{self.name}: default {self.default_value!r} not in allowed values"
                )
        elif self.allowed_values:
            raise ValidationError(f"{self.name}: free-string params take no allowed list")

    def accepts(self, value: str) -> bool:
        if self.value_kind == STRING_ENUM:
            return value in self.allowed_values
        return isinstance(value, str)


@dataclass(frozen=True)
class FunctionSchema:
    name: str
    description: str
    params: tuple[ParamSpec, ...]
    token: SpecialToken

    def __post_init__(self):
        if not _IDENT.match(self.name):
            raise ValidationError(f"bad function name {self.name!r}")
        if not self.description.strip():
            raise ValidationError(f"{self.name}: empty description")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValidationError(f"{self.name}: duplicate parameter names")

    def param(self, name: str) -> ParamSpec:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)


@dataclass(frozen=True)
class Registry:
    schemas: tuple[FunctionSchema, ...]
    _by_name: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_name = {}
        for i, s in enumerate(self.schemas):
            if s.name in by_name:
                raise ValidationError(f"duplicate function name {s.name!r}")
            if s.token.index != i:
                raise ValidationError(f"{s.name}: token index {s.token.index} != position {i}")
            by_name[s.name] = s
        object.__setattr__(self, "_by_name", by_name)

    @classmethod
    def from_entries(cls, entries) -> "Registry":
        """Build a registry from parsed ``[[functions]]`` tables."""
        schemas = []
        for i, entry in enumerate(entries):
            try:
                params = tuple(
                    ParamSpec(
                        name=p["name"],
                        value_kind=p.get("kind", FREE_STRING),
                        allowed_values=tuple(p.get("allowed", ())),
                        default_value=p.get("default"),
                        required=bool(p.get("required", False)),
                    )
                    for p in entry.get("params", ())
                )
                schemas.append(
                    FunctionSchema(
                        name=entry["name"],
                        description=entry["description"].strip("\n"),
                        params=params,
                        token=SpecialToken(i),
                    )
                )
            except KeyError as e:
                raise ValidationError(f"function entry {i}: missing key {e}") from None
        return cls(tuple(schemas))

    def __len__(self):
        return len(self.schemas)

    def __iter__(self) -> Iterator[FunctionSchema]:
        return iter(self.schemas)

    def __contains__(self, name):
        return name in self._by_name

    def get(self, name: str) -> FunctionSchema:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownFunctionError(f"unknown function {name!r}") from None

    def resolve(self, callee: str) -> FunctionSchema:
        """Look a schema up by function name or by token surface."""
        m = _TOKEN.match(callee)
        if m:
            idx = int(m.group(1))
            if idx >= len(self.schemas):
                raise UnknownFunctionError(f"unknown token {callee!r}")
            return self.schemas[idx]
        return self.get(callee)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.schemas)


def token_for(reg: Registry, name: str) -> SpecialToken:
    return reg.get(name).token


def name_for(reg: Registry, token: SpecialToken | str) -> str:
    surface = token.surface if isinstance(token, SpecialToken) else token
    if not _TOKEN.match(surface):
        raise UnknownFunctionError(f"not a token: {surface!r}")
    return reg.resolve(surface).name


def parse_registry(text: str) -> Registry:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigParseError(f"malformed registry file: {e}") from None
    entries = doc.get("functions")
    if not isinstance(entries, list):
        raise ConfigParseError("registry file needs a [[functions]] array")
    return Registry.from_entries(entries)


def load_registry(path: str | Path | None = None) -> Registry:
    """Load and validate a registry file; ``None`` loads the bundled one."""
    if path is None:
        return parse_registry(default_registry_path().read_text(encoding="utf-8"))
    return parse_registry(Path(path).read_text(encoding="utf-8"))


def dump_registry(reg: Registry) -> str:
    entries = []
    for s in reg:
        params = []
        for p in s.params:
            d = {"name": p.name, "kind": p.value_kind}
            if p.allowed_values:
                d["allowed"] = list(p.allowed_values)
            if p.default_value is not None:
                d["default"] = p.default_value
            d["required"] = p.required
            params.append(d)
        entries.append({"name": s.name, "description": s.description + "\n", "params": params})
    return tomli_w.dumps({"functions": entries}, multiline_strings=True)


def write_registry(reg: Registry, path: str | Path) -> None:
    Path(path).write_text(dump_registry(reg), encoding="utf-8")


def default_registry_path():
    return resources.files("fcsynth") / "data" / "functions.toml"
