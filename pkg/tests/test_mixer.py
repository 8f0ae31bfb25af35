import json
from collections import Counter
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcsynth.errors import ValidationError
from fcsynth.formatter import TrainingRecord
from fcsynth.jsonl import dumps
from fcsynth.mixer import (
    FUNCTION_CALL,
    HEAD,
    SEEDED_UNIFORM,
    TEXTBOOK,
    MixedRecord,
    MixSpec,
    ingest_textbook,
    mix,
    parse_ratio,
    textbook_quota,
)


def fc_records(n):
    return [TrainingRecord("DF2", f"q{i}", f"<fn_0>(camera=\"front\")<eoc>", {"id": f"take_a_photo/{i}"}) for i in range(n)]


def blocks(n):
    return [f"fact number {i}." for i in range(n)]


def write_lines(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")
    return path


def serialize(mixed):
    return "".join(dumps(m.to_record()) + "\n" for m in mixed)


# --- ingest ----------------------------------------------------------------


def test_ingest_drops_blank_text(tmp_path):
    p = write_lines(tmp_path / "t.jsonl", [{"text": "a"}, {"text": "   "}, {"text": "b"}])
    got = ingest_textbook(p)
    assert list(got) == ["a", "b"]
    assert got.dropped == 1


def test_ingest_well_formed_keeps_order(tmp_path):
    p = write_lines(tmp_path / "t.jsonl", [{"text": t} for t in blocks(7)])
    got = ingest_textbook(p)
    assert list(got) == blocks(7) and got.dropped == 0


def test_ingest_ignores_extra_keys_and_blank_lines(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text('{"text": "a", "source": "x"}\n\n{"text": "b"}\n', encoding="utf-8")
    assert list(ingest_textbook(p)) == ["a", "b"]


@pytest.mark.parametrize("line", ['{"body": "a"}', '["a"]', "not json"])
def test_ingest_schema_errors(tmp_path, line):
    p = tmp_path / "t.jsonl"
    p.write_text('{"text": "ok"}\n' + line + "\n", encoding="utf-8")
    with pytest.raises(ValidationError, match=":2:"):
        ingest_textbook(p)


def test_ingest_missing_file(tmp_path):
    with pytest.raises(OSError):
        ingest_textbook(tmp_path / "nope.jsonl")


def test_bundled_sample_has_100_blocks():
    path = resources.files("fcsynth") / "data" / "textbook_sample.jsonl"
    with resources.as_file(path) as p:
        got = ingest_textbook(p)
    assert len(got) == 100 and got.dropped == 0
    assert len(set(got)) == 100


# --- spec and ratio --------------------------------------------------------


@pytest.mark.parametrize("ratio", [(0, 0), (-1, 1), (1, -1), (0, 1)])
def test_bad_ratios_rejected(ratio):
    with pytest.raises(ValidationError):
        MixSpec(ratio=ratio)


def test_bad_sampling_rejected():
    with pytest.raises(ValidationError):
        MixSpec(sampling="tail")


def test_parse_ratio():
    assert parse_ratio("2:1") == (2, 1)
    for bad in ("2", "a:b", "1:2:3"):
        with pytest.raises(ValidationError):
            parse_ratio(bad)


@pytest.mark.parametrize("n,ratio,expected", [
    (2000, (1, 1), 2000), (2000, (2, 1), 1000), (2000, (1, 2), 4000), (2000, (1, 0), 0),
    (3, (2, 1), 2),  # 1.5 rounds half up
    (5, (4, 1), 1),  # 1.25 rounds down
    (7, (4, 3), 5),  # 5.25
])
def test_textbook_quota(n, ratio, expected):
    assert textbook_quota(n, ratio) == expected


@settings(max_examples=200)
@given(n=st.integers(0, 10_000), fc=st.integers(1, 50), tb=st.integers(0, 50))
def test_quota_matches_decimal_round_half_up(n, fc, tb):
    from decimal import ROUND_HALF_UP, Decimal
    exact = (Decimal(n) * tb / fc).quantize(Decimal(1), rounding=ROUND_HALF_UP)
    assert textbook_quota(n, (fc, tb)) == int(exact)


# --- mix -------------------------------------------------------------------


@pytest.mark.parametrize("ratio,n_tb", [((1, 1), 2000), ((2, 1), 1000), ((1, 2), 4000), ((1, 0), 0)])
def test_kind_count_law(ratio, n_tb):
    fc = fc_records(2000)
    out = mix(fc, blocks(4000), MixSpec(ratio=ratio, seed=1))
    kinds = Counter(m.kind for m in out)
    assert kinds[FUNCTION_CALL] == 2000
    assert kinds[TEXTBOOK] == n_tb
    assert len(out) == 2000 + n_tb


def test_multiset_preservation():
    fc = fc_records(500)
    out = mix(fc, blocks(600), MixSpec(seed=2))
    assert Counter(dumps(m.payload.to_record()) for m in out if m.kind == FUNCTION_CALL) == Counter(
        dumps(r.to_record()) for r in fc
    )
    tb = [m.payload for m in out if m.kind == TEXTBOOK]
    assert len(set(tb)) == len(tb) == 500
    assert set(tb) <= set(blocks(600))


def test_ratio_one_to_zero_is_passthrough():
    fc = fc_records(50)
    out = mix(fc, [], MixSpec(ratio=(1, 0)))
    assert sorted(m.payload.input_text for m in out) == sorted(r.input_text for r in fc)


def test_insufficient_pool():
    with pytest.raises(ValidationError, match="1999"):
        mix(fc_records(2000), blocks(1999), MixSpec())


def test_head_vs_uniform_sampling():
    fc = fc_records(100)
    pool = blocks(1000)
    head = {m.payload for m in mix(fc, pool, MixSpec(sampling=HEAD, seed=3)) if m.kind == TEXTBOOK}
    assert head == set(pool[:100])
    uni = {m.payload for m in mix(fc, pool, MixSpec(sampling=SEEDED_UNIFORM, seed=3)) if m.kind == TEXTBOOK}
    assert len(uni) == 100 and uni != head


def test_shuffle_is_global_and_deterministic():
    fc = fc_records(200)
    a = serialize(mix(fc, blocks(300), MixSpec(seed=4)))
    b = serialize(mix(fc, blocks(300), MixSpec(seed=4)))
    c = serialize(mix(fc, blocks(300), MixSpec(seed=5)))
    assert a == b and a != c
    first_half = [json.loads(line)["kind"] for line in a.splitlines()[:200]]
    assert TEXTBOOK in first_half and FUNCTION_CALL in first_half


def test_mixed_record_shapes():
    rec = fc_records(1)[0]
    assert MixedRecord(TEXTBOOK, "x").to_record() == {"kind": TEXTBOOK, "text": "x"}
    assert MixedRecord(TEXTBOOK, "x").as_pair() == ("", "x")
    d = MixedRecord(FUNCTION_CALL, rec).to_record()
    assert d["kind"] == FUNCTION_CALL and d["input"] == "q0" and d["format"] == "DF2"
    with pytest.raises(ValidationError):
        MixedRecord(TEXTBOOK, rec)
    with pytest.raises(ValidationError):
        MixedRecord(FUNCTION_CALL, "x")
