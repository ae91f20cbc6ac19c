"""Small JSON/JSONL helpers with deterministic byte output.

All artifact writers in the toolkit go through these so that repeated runs
with equal inputs produce byte-identical files (sorted keys, no ASCII
escaping of CJK text, trailing newline).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

from .errors import DataError


def json_line(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def write_jsonl(path: str | Path, rows: Iterable[Any]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json_line(row))
            fh.write("\n")


def read_jsonl(path: str | Path) -> list[Any]:
    """Read one JSON document per line; blank lines are skipped."""
    out: list[Any] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: not valid JSON ({exc.msg})") from exc
    return out


def write_json(path: str | Path, obj: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")


def read_json(path: str | Path) -> Any:
    with Path(path).open("r", encoding="utf-8") as fh:
        return json.load(fh)
