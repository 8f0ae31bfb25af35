"""Regenerate the formatter golden files (review the diff before committing).

    python tests/golden/make_goldens.py
"""

import json
from pathlib import Path

from fcsynth.formatter import DF1, DF2, render
from fcsynth.grammar import build_demo, load_pools_dir
from fcsynth.registry import load_registry

HERE = Path(__file__).parent
DEMO_INDEX = 16  # "Can I take a photo using the front camera with the 4K resolution"


def main():
    reg = load_registry()
    pools = load_pools_dir(registry=reg)
    demo = build_demo(pools["take_a_photo"], reg.get("take_a_photo"), DEMO_INDEX)
    cases = {
        "df2_take_a_photo.json": render(demo, DF2, reg),
        "df1_take_a_photo.json": render(demo, DF1, reg),
        "df1_concatenated_take_a_photo.json": render(demo, DF1, reg, concatenated=True),
    }
    for name, rec in cases.items():
        (HERE / name).write_text(json.dumps(rec.to_record(), indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
    (HERE / "df2_take_a_photo_input.txt").write_text(cases["df2_take_a_photo.json"].input_text, encoding="utf-8")


if __name__ == "__main__":
    main()
