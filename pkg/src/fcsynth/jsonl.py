import json
from pathlib import Path

from .errors import ValidationError


def dumps(rec) -> str:
    return json.dumps(rec, ensure_ascii=False)


def write_jsonl(path, records) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            f.write(dumps(rec) + "\n")
            n += 1
    return n


def read_jsonl(path) -> list:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ValidationError(f"{path}:{lineno}: invalid JSON ({e.msg})") from None
    return out


def expand_paths(paths) -> list[Path]:
    """Files as given; directories expand to their ``*.jsonl`` files, sorted."""
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(p.glob("*.jsonl")))
        else:
            out.append(p)
    return out


def read_many(paths) -> list:
    recs = []
    for p in expand_paths(paths):
        recs.extend(read_jsonl(p))
    return recs
