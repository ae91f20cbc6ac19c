"""Dataset loading, validation, and the seeded sampling protocol.

Record files are JSONL, one object per line with fields ``id``, ``text``,
``text_label``, and ``pairs`` (a list of ``{"label", "entity"}`` objects).
A legacy tab-separated layout is also accepted: four columns
``id<TAB>text<TAB>text_label<TAB>pairs`` where the pairs column uses the
canonical pair grammar (``NONE`` for no pairs).

Sampling is deterministic: few-shot selection draws one SplitMix64 stream
per text label (keyed by the label string), and each repeated test draw
gets its own stream derived from (seed, draw index). Same seed, same
bytes, on any platform.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .core import DatasetDescriptor, MreRecord, validate_record
from .errors import DataError
from .jsonio import json_line
from .parsing import ParseFlag, parse_pairs
from .rng import SplitMix64, derive_seed, derive_seed_token

logger = logging.getLogger(__name__)

ROLES = ("train", "test")


@dataclass(frozen=True)
class Split:
    """An immutable set of records playing one role (train or test)."""

    records: tuple[MreRecord, ...]
    role: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        if self.role not in ROLES:
            raise DataError(f"split role must be one of {ROLES}, got {self.role!r}")
        seen: set[str] = set()
        for record in self.records:
            if record.id in seen:
                raise DataError(f"duplicate record id {record.id!r} in split")
            seen.add(record.id)

    def __len__(self) -> int:
        return len(self.records)

    def ids(self) -> list[str]:
        return [r.id for r in self.records]


@dataclass(frozen=True)
class SamplingPlan:
    """Bookkeeping for one sampling step of the protocol.

    Exactly one of the two shapes is set: ``per_label_count`` for few-shot
    training selection, or ``sample_size`` + ``repeat_count`` for the
    repeated test protocol.
    """

    seed: int
    per_label_count: Optional[int] = None
    sample_size: Optional[int] = None
    repeat_count: Optional[int] = None

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise DataError("seed must be a non-negative integer")
        few_shot = self.per_label_count is not None
        repeated = self.sample_size is not None or self.repeat_count is not None
        if few_shot == repeated:
            raise DataError("plan must set per_label_count or (sample_size, repeat_count)")
        if few_shot and self.per_label_count <= 0:
            raise DataError("per_label_count must be positive")
        if repeated:
            if self.sample_size is None or self.repeat_count is None:
                raise DataError("sample_size and repeat_count must be set together")
            if self.sample_size <= 0:
                raise DataError("sample_size must be positive")
            if self.repeat_count < 1:
                raise DataError("repeat_count must be at least 1")


def _record_from_json(obj: object, lineno: int, path: str) -> MreRecord:
    if not isinstance(obj, dict):
        raise DataError(f"{path}: line {lineno}: record must be an object")
    missing = [k for k in ("id", "text", "text_label", "pairs") if k not in obj]
    if missing:
        raise DataError(f"{path}: line {lineno}: missing field(s) {', '.join(missing)}")
    if not isinstance(obj["pairs"], list):
        raise DataError(f"{path}: line {lineno}: 'pairs' must be a list")
    try:
        return MreRecord.from_dict(obj)
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: line {lineno}: malformed record ({exc})") from exc


def _record_from_tsv(line: str, lineno: int, path: str) -> MreRecord:
    cols = line.rstrip("\n").split("\t")
    if len(cols) != 4:
        raise DataError(f"{path}: line {lineno}: expected 4 tab-separated columns, got {len(cols)}")
    rid, text, text_label, pairs_col = cols
    parsed = parse_pairs(pairs_col)
    if parsed.flag is ParseFlag.UNPARSEABLE:
        raise DataError(f"{path}: line {lineno}: pairs column is not parseable: {pairs_col!r}")
    return MreRecord(id=rid, text=text, text_label=text_label, pairs=parsed.pairs)


def load_split(
    path: str | Path,
    desc: DatasetDescriptor,
    role: str,
    *,
    fmt: str = "jsonl",
    strict: bool = True,
) -> Split:
    """Load and validate a record file.

    In strict mode any record with schema violations aborts the load with a
    diagnostic naming the line; the lenient flag downgrades violations to
    warnings and keeps the records.
    """
    path = Path(path)
    numbered: list[tuple[int, MreRecord]] = []
    if fmt == "jsonl":
        with path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(
                        f"{path}: line {lineno}: not valid JSON ({exc.msg})"
                    ) from exc
                numbered.append((lineno, _record_from_json(obj, lineno, str(path))))
    elif fmt == "tsv":
        with path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                numbered.append((lineno, _record_from_tsv(line, lineno, str(path))))
    else:
        raise DataError(f"unknown record file format: {fmt!r}")

    for lineno, record in numbered:
        violations = validate_record(record, desc)
        if not violations:
            continue
        detail = "; ".join(str(v) for v in violations)
        if strict:
            raise DataError(f"{path}: line {lineno}: record {record.id!r}: {detail}")
        logger.warning("%s: line %d: record %r: %s", path, lineno, record.id, detail)
    records = [record for _, record in numbered]

    if not records:
        logger.warning("%s: file contains no records", path)
    return Split(records=tuple(records), role=role)


def save_split(path: str | Path, split: Split) -> None:
    """Write a split in the canonical JSONL record format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in split.records:
            fh.write(json_line(record.to_dict()))
            fh.write("\n")


def few_shot_sample(split: Split, desc: DatasetDescriptor, k: int, seed: int) -> Split:
    """Select exactly k records per text-level label, deterministically.

    Labels are taken from the schema (observed labels for open-domain
    datasets); a label with fewer than k records is an error naming it.
    Selected records keep their original order within each label group.
    """
    if split.role != "train":
        raise DataError(f"few-shot sampling requires a train split, got role {split.role!r}")
    if k <= 0:
        raise DataError("per-label count k must be positive")

    positions: dict[str, list[int]] = {}
    for i, record in enumerate(split.records):
        positions.setdefault(record.text_label, []).append(i)

    if desc.schema.open_domain:
        labels = sorted(positions)
    else:
        labels = list(desc.schema.text_labels)

    chosen: list[int] = []
    for label in labels:
        pool = positions.get(label, [])
        if len(pool) < k:
            raise DataError(
                f"label {label!r} has {len(pool)} records, fewer than the requested k={k}"
            )
        rng = SplitMix64(derive_seed_token(seed, f"fewshot:{label}"))
        picked = rng.sample(pool, k)
        picked.sort()
        chosen.extend(picked)
    return Split(records=tuple(split.records[i] for i in chosen), role="train")


def repeated_test_sample(split: Split, n: int, repeats: int, seed: int) -> list[Split]:
    """Draw ``repeats`` samples of size n from the test split.

    Each draw is without replacement internally and independent of the
    others (draws may overlap); draw d uses the sub-seed derived from
    (seed, d), so any single draw is reproducible in isolation.
    """
    if split.role != "test":
        raise DataError(f"repeated test sampling requires a test split, got role {split.role!r}")
    if repeats < 1:
        raise DataError("repeat count must be at least 1")
    if n <= 0:
        raise DataError("sample size must be positive")
    if n > len(split):
        raise DataError(f"sample size {n} exceeds test split size {len(split)}")

    draws: list[Split] = []
    for d in range(repeats):
        rng = SplitMix64(derive_seed(seed, d))
        records = rng.sample(split.records, n)
        draws.append(Split(records=tuple(records), role="test"))
    return draws
