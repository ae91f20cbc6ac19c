"""Tolerant parsing of model generations back into structured predictions.

Evaluation must never crash on a malformed generation, so every parse
returns a result plus a flag:

* CLEAN - the string matches the canonical grammar exactly (re-serializing
  the parse reproduces it byte for byte);
* RECOVERED - a near-miss was repaired (whitespace trimmed, missing space
  after a colon tolerated, empty or junk segments dropped, label matched
  case-insensitively or by unique prefix);
* UNPARSEABLE - nothing usable; such predictions carry no pairs and no
  label and earn zero credit downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

from .core import LabelEntityPair, LabelSchema
from .errors import DataError, SerializationError
from .formats import EMPTY_PAIRS_TOKEN, SEPARATOR, FormatTag, serialize_pairs, target_level
from .jsonio import read_jsonl


class ParseFlag(str, Enum):
    CLEAN = "CLEAN"
    RECOVERED = "RECOVERED"
    UNPARSEABLE = "UNPARSEABLE"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ParsedPairs:
    pairs: tuple[LabelEntityPair, ...]
    flag: ParseFlag


@dataclass(frozen=True)
class ParsedLabel:
    label: Optional[str]
    flag: ParseFlag


@dataclass(frozen=True)
class ParsedPrediction:
    """A generation parsed at whichever level(s) its format targets."""

    text_label: Optional[str]
    pairs: tuple[LabelEntityPair, ...]
    parse_flags: frozenset[ParseFlag]

    @property
    def flag(self) -> ParseFlag:
        """The single effective flag (the sets are singletons by construction)."""
        for flag in (ParseFlag.UNPARSEABLE, ParseFlag.RECOVERED, ParseFlag.CLEAN):
            if flag in self.parse_flags:
                return flag
        return ParseFlag.UNPARSEABLE


def _split_unescaped(s: str, require_space: bool) -> list[str]:
    """Split on unescaped ';' ('; ' exactly when require_space), keeping escapes."""
    segments: list[str] = []
    buf: list[str] = []
    i, n = 0, len(s)
    while i < n:
        c = s[i]
        if c == "\\" and i + 1 < n and s[i + 1] in "\\;":
            buf.append(c)
            buf.append(s[i + 1])
            i += 2
            continue
        if c == ";":
            if require_space:
                if i + 1 < n and s[i + 1] == " ":
                    segments.append("".join(buf))
                    buf = []
                    i += 2
                    continue
            else:
                segments.append("".join(buf))
                buf = []
                i += 1
                continue
        buf.append(c)
        i += 1
    segments.append("".join(buf))
    return segments


def _unescape(s: str) -> str:
    out: list[str] = []
    i, n = 0, len(s)
    while i < n:
        c = s[i]
        if c == "\\" and i + 1 < n and s[i + 1] in "\\;":
            out.append(s[i + 1])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _parse_canonical(s: str) -> Optional[tuple[LabelEntityPair, ...]]:
    pairs: list[LabelEntityPair] = []
    for segment in _split_unescaped(s, require_space=True):
        if ": " not in segment:
            return None
        label_raw, entity_raw = segment.split(": ", 1)
        pairs.append(LabelEntityPair(_unescape(label_raw), _unescape(entity_raw)))
    return tuple(pairs)


def _parse_tolerant(s: str) -> Optional[tuple[LabelEntityPair, ...]]:
    """Recovery path: returns pairs (possibly empty) or None when nothing is usable."""
    pairs: list[LabelEntityPair] = []
    saw_empty_marker = False
    for segment in _split_unescaped(s, require_space=False):
        segment = segment.strip()
        if not segment:
            continue
        if segment == EMPTY_PAIRS_TOKEN:
            saw_empty_marker = True
            continue
        # prefer the canonical ': ' boundary; fall back to a bare colon
        boundary = segment.find(": ")
        if boundary > 0:
            label_raw, entity_raw = segment[:boundary], segment[boundary + 2 :]
        else:
            idx = segment.find(":")
            if idx <= 0:
                continue  # junk segment: no colon, or no label before it
            label_raw, entity_raw = segment[:idx], segment[idx + 1 :]
        label = _unescape(label_raw).strip()
        entity = _unescape(entity_raw).strip()
        if not label or not entity:
            continue
        pairs.append(LabelEntityPair(label, entity))
    if pairs or saw_empty_marker:
        return tuple(pairs)
    return None


def parse_pairs(s: str) -> ParsedPairs:
    """Inverse of serialize_pairs on canonical strings; tolerant otherwise.

    Never raises: malformation is reported through the flag.
    """
    if s == EMPTY_PAIRS_TOKEN:
        return ParsedPairs((), ParseFlag.CLEAN)
    canonical = _parse_canonical(s)
    if canonical is not None:
        try:
            clean = serialize_pairs(canonical) == s
        except SerializationError:
            clean = False
        if clean:
            return ParsedPairs(canonical, ParseFlag.CLEAN)
    recovered = _parse_tolerant(s)
    if recovered is not None:
        return ParsedPairs(recovered, ParseFlag.RECOVERED)
    return ParsedPairs((), ParseFlag.UNPARSEABLE)


_MIN_PREFIX = 3  # unique-prefix label matching needs at least this many chars


def parse_text_label(s: str, schema: LabelSchema) -> ParsedLabel:
    """Match a generated string against the text-level schema.

    Exact match is CLEAN; trimming, case-insensitive, and unique-prefix
    matches are RECOVERED. Open-domain schemas accept any non-empty string.
    Never raises.
    """
    trimmed = s.strip()
    if schema.open_domain:
        if not trimmed:
            return ParsedLabel(None, ParseFlag.UNPARSEABLE)
        flag = ParseFlag.CLEAN if s == trimmed else ParseFlag.RECOVERED
        return ParsedLabel(trimmed, flag)

    if s in schema.text_labels:
        return ParsedLabel(s, ParseFlag.CLEAN)
    if not trimmed:
        return ParsedLabel(None, ParseFlag.UNPARSEABLE)
    if trimmed in schema.text_labels:
        return ParsedLabel(trimmed, ParseFlag.RECOVERED)

    folded = trimmed.casefold()
    ci_matches = [lbl for lbl in schema.text_labels if lbl.casefold() == folded]
    if len(ci_matches) == 1:
        return ParsedLabel(ci_matches[0], ParseFlag.RECOVERED)

    if len(folded) >= _MIN_PREFIX:
        prefix_matches = [
            lbl for lbl in schema.text_labels if lbl.casefold().startswith(folded)
        ]
        if len(prefix_matches) == 1:
            return ParsedLabel(prefix_matches[0], ParseFlag.RECOVERED)

    return ParsedLabel(None, ParseFlag.UNPARSEABLE)


def parse_prediction(s: str, tag: FormatTag, schema: LabelSchema) -> ParsedPrediction:
    """Parse one generation according to the format's target side."""
    level = target_level(tag)
    if level == "word":
        parsed = parse_pairs(s)
        return ParsedPrediction(None, parsed.pairs, frozenset({parsed.flag}))
    if level == "text":
        parsed_label = parse_text_label(s, schema)
        return ParsedPrediction(parsed_label.label, (), frozenset({parsed_label.flag}))

    # joint: the canonical target is "<text label>SEPARATOR<pairs>"
    if SEPARATOR in s:
        label_part, pairs_part = s.split(SEPARATOR, 1)
        parsed_label = parse_text_label(label_part, schema)
        parsed_pairs = parse_pairs(pairs_part)
    else:
        parsed_label = parse_text_label(s, schema)
        parsed_pairs = ParsedPairs((), ParseFlag.UNPARSEABLE)

    label_ok = parsed_label.flag is not ParseFlag.UNPARSEABLE
    pairs_ok = parsed_pairs.flag is not ParseFlag.UNPARSEABLE
    if parsed_label.flag is ParseFlag.CLEAN and parsed_pairs.flag is ParseFlag.CLEAN:
        flag = ParseFlag.CLEAN
    elif label_ok or pairs_ok:
        flag = ParseFlag.RECOVERED
    else:
        flag = ParseFlag.UNPARSEABLE
    return ParsedPrediction(
        parsed_label.label if label_ok else None,
        parsed_pairs.pairs if pairs_ok else (),
        frozenset({flag}),
    )


@dataclass(frozen=True)
class GenerationRow:
    record_id: Optional[str]
    output: str


def read_generations(path: str | Path) -> list[GenerationRow]:
    """Read a generation file: JSONL with an ``output`` field per test example.

    ``record_id`` is optional; when present it is checked against the draw
    manifest by the evaluator.
    """
    rows = read_jsonl(path)
    out: list[GenerationRow] = []
    for i, row in enumerate(rows, start=1):
        if not isinstance(row, dict) or "output" not in row:
            raise DataError(f"{path}: line {i}: expected an object with an 'output' field")
        rid = row.get("record_id")
        out.append(GenerationRow(None if rid is None else str(rid), str(row["output"])))
    return out
