import pytest

from fcsynth.errors import ConfigParseError, UnknownFunctionError, ValidationError
from fcsynth.registry import (
    ParamSpec,
    SpecialToken,
    dump_registry,
    load_registry,
    name_for,
    parse_registry,
    token_for,
    write_registry,
)

ONE = '''
[[functions]]
name = "take_a_photo"
description = "Captures a photo."

[[functions.params]]
name = "camera"
kind = "string-enum"
allowed = ["front", "back"]
default = "back"
'''


def test_bundled_registry_has_ten_functions(reg):
    assert len(reg) == 10
    assert [s.token.surface for s in reg] == [f"<fn_{i}>" for i in range(10)]
    assert reg.schemas[0].name == "take_a_photo"


def test_single_schema_gets_token_zero():
    reg = parse_registry(ONE)
    assert token_for(reg, "take_a_photo").surface == "<fn_0>"


def test_duplicate_names_rejected():
    with pytest.raises(ValidationError, match="duplicate"):
        parse_registry(ONE + ONE.replace("[[functions.params]]", "[[functions.params]]", 1))


def test_default_must_be_allowed():
    with pytest.raises(ValidationError, match="not in allowed"):
        parse_registry(ONE.replace('default = "back"', 'default = "side"'))


def test_malformed_file():
    with pytest.raises(ConfigParseError):
        parse_registry("[[functions]\nname=")
    with pytest.raises(ConfigParseError):
        parse_registry('title = "no functions"')


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_registry(tmp_path / "nope.toml")


def test_missing_description_key():
    with pytest.raises(ValidationError, match="description"):
        parse_registry('[[functions]]\nname = "f"\n')


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(name="x", value_kind="string-enum"),
        dict(name="x", value_kind="string-enum", allowed_values=("a", "a")),
        dict(name="x", value_kind="string-enum", allowed_values=("a", "")),
        dict(name="x", value_kind="number"),
        dict(name="x", allowed_values=("a",)),
        dict(name="not an ident"),
    ],
)
def test_param_spec_invariants(kwargs):
    with pytest.raises(ValidationError):
        ParamSpec(**kwargs)


def test_token_round_trip(reg):
    for name in reg.names:
        assert name_for(reg, token_for(reg, name)) == name
        assert name_for(reg, token_for(reg, name).surface) == name
    assert token_for(reg, reg.names[0]) == SpecialToken(0)


def test_unknown_name(reg):
    with pytest.raises(UnknownFunctionError):
        token_for(reg, "no_such_fn")
    with pytest.raises(UnknownFunctionError):
        reg.resolve("<fn_10>")
    # also catchable as a plain KeyError
    with pytest.raises(KeyError):
        reg.get("no_such_fn")


def test_counts_agree(reg):
    assert len(reg.schemas) == len(set(reg.names)) == len({s.token.index for s in reg})


def test_write_round_trip(reg, tmp_path):
    p = tmp_path / "r.toml"
    write_registry(reg, p)
    again = load_registry(p)
    assert again == reg
    assert dump_registry(again) == dump_registry(reg)


def test_special_token_parse():
    assert SpecialToken.parse("<fn_7>").index == 7
    with pytest.raises(ValueError):
        SpecialToken.parse("fn_7")
