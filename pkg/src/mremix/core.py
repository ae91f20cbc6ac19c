"""Shared domain types, label schemas, and record validation.

An MRE mixed dataset attaches two levels of supervision to every text: one
text-level classification label and an ordered list of word-level
(label, entity) pairs. Seven dataset families exist, each in English,
Chinese, and Japanese; all label inventories are fixed except TCONER,
whose schema is open-domain and therefore advisory.

Label surface strings live in a bundled line-oriented schema file
(``data/schemas.txt``) rather than in code, so per-language label surfaces
can be swapped without touching the toolkit.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import SchemaError

FAMILIES = ("SCNM", "SCPOS:RW", "SCPOS:N", "SCPOS:Adj", "SCPOS:N&Adj", "TCREE", "TCONER")
LANGUAGES = ("en", "zh", "ja")

OPEN_DOMAIN_FAMILIES = frozenset({"TCONER"})

_FAMILY_SLUGS = {
    "SCNM": "scnm",
    "SCPOS:RW": "scpos-rw",
    "SCPOS:N": "scpos-n",
    "SCPOS:Adj": "scpos-adj",
    "SCPOS:N&Adj": "scpos-nadj",
    "TCREE": "tcree",
    "TCONER": "tconer",
}
_SLUG_FAMILIES = {slug: fam for fam, slug in _FAMILY_SLUGS.items()}


def family_slug(family: str) -> str:
    """Filesystem-safe name for a dataset family (SCPOS:N&Adj -> scpos-nadj)."""
    try:
        return _FAMILY_SLUGS[family]
    except KeyError:
        raise SchemaError(f"unknown dataset family: {family!r}") from None


def normalize_family(name: str) -> str:
    """Accept a canonical family name or its slug, case-insensitively."""
    for fam in FAMILIES:
        if name.lower() == fam.lower():
            return fam
    slug = name.lower()
    if slug in _SLUG_FAMILIES:
        return _SLUG_FAMILIES[slug]
    raise SchemaError(f"unknown dataset family: {name!r}")


@dataclass(frozen=True)
class LabelEntityPair:
    """One unit of word-level information: a label and an entity surface form.

    Surrounding whitespace is trimmed at construction; the canonical pair
    grammar and evaluation both operate on the trimmed surface.
    """

    label: str
    entity: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "label", self.label.strip())
        object.__setattr__(self, "entity", self.entity.strip())

    def to_dict(self) -> dict:
        return {"label": self.label, "entity": self.entity}

    @classmethod
    def from_dict(cls, data: Mapping) -> "LabelEntityPair":
        return cls(label=str(data["label"]), entity=str(data["entity"]))


@dataclass(frozen=True)
class MreRecord:
    """One dataset example: text, its text-level label, and its word-level pairs.

    ``pairs`` preserves source order and may contain duplicates; whether
    duplicates earn or lose credit is an evaluation decision, not an
    ingestion one.
    """

    id: str
    text: str
    text_label: str
    pairs: tuple[LabelEntityPair, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(self.pairs))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "text_label": self.text_label,
            "pairs": [p.to_dict() for p in self.pairs],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MreRecord":
        pairs = tuple(LabelEntityPair.from_dict(p) for p in data["pairs"])
        return cls(
            id=str(data["id"]),
            text=str(data["text"]),
            text_label=str(data["text_label"]),
            pairs=pairs,
        )


@dataclass(frozen=True)
class LabelSchema:
    """Text-level and word-level label inventories for one dataset.

    When ``open_domain`` is true the lists are an advisory subset: records
    may carry labels outside them.
    """

    text_labels: tuple[str, ...]
    word_labels: tuple[str, ...]
    open_domain: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "text_labels", tuple(self.text_labels))
        object.__setattr__(self, "word_labels", tuple(self.word_labels))
        for side, labels in (("text", self.text_labels), ("word", self.word_labels)):
            if any(not lbl or not lbl.strip() for lbl in labels):
                raise SchemaError(f"{side}-level schema contains an empty label")
            if len(set(labels)) != len(labels):
                raise SchemaError(f"{side}-level schema contains duplicate labels")


@dataclass(frozen=True)
class DatasetDescriptor:
    """Identifies one of the 21 sub-datasets: family, language, and schema."""

    family: str
    language: str
    schema: LabelSchema

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise SchemaError(f"unknown dataset family: {self.family!r}")
        if self.language not in LANGUAGES:
            raise SchemaError(f"unknown language: {self.language!r}")
        if (self.family in OPEN_DOMAIN_FAMILIES) != self.schema.open_domain:
            raise SchemaError(
                f"{self.family} requires open_domain={self.family in OPEN_DOMAIN_FAMILIES}"
            )

    @classmethod
    def builtin(cls, family: str, language: str) -> "DatasetDescriptor":
        family = normalize_family(family)
        return cls(family=family, language=language, schema=builtin_schema(family, language))

    @property
    def slug(self) -> str:
        return f"{family_slug(self.family)}_{self.language}"


@dataclass(frozen=True)
class Violation:
    """One failed validation rule, naming the offending field."""

    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


def validate_record(record: MreRecord, desc: DatasetDescriptor) -> list[Violation]:
    """Check a record against its dataset's schema; violations are data, not errors."""
    schema = desc.schema
    out: list[Violation] = []
    if not record.text.strip():
        out.append(Violation("text", "must be non-empty"))
    if not record.text_label.strip():
        out.append(Violation("text_label", "must be non-empty"))
    elif not schema.open_domain and record.text_label not in schema.text_labels:
        out.append(
            Violation(
                "text_label",
                f"{record.text_label!r} is not in the text-level schema",
            )
        )
    for i, pair in enumerate(record.pairs):
        if not pair.entity:
            out.append(Violation(f"pairs[{i}].entity", "must be non-empty"))
        if not pair.label:
            out.append(Violation(f"pairs[{i}].label", "must be non-empty"))
        elif not schema.open_domain and pair.label not in schema.word_labels:
            out.append(
                Violation(
                    f"pairs[{i}].label",
                    f"{pair.label!r} is not in the word-level schema",
                )
            )
    return out


# -- schema file ------------------------------------------------------------
#
# Line format (see data/schemas.txt):
#   <FAMILY>.<language>.<text|word> = label | label | ...
# '#' starts a comment; blank lines are ignored. Every (family, language)
# must define both levels.

_LEVELS = ("text", "word")


def parse_schema_document(text: str, source: str = "<schema>") -> dict[tuple[str, str], LabelSchema]:
    entries: dict[tuple[str, str, str], tuple[str, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{source}: line {lineno}: expected 'key = labels'")
        key, value = (part.strip() for part in line.split("=", 1))
        parts = key.split(".")
        if len(parts) != 3:
            raise SchemaError(f"{source}: line {lineno}: key must be family.language.level")
        family, language, level = parts
        if family not in FAMILIES:
            raise SchemaError(f"{source}: line {lineno}: unknown dataset family: {family!r}")
        if language not in LANGUAGES:
            raise SchemaError(f"{source}: line {lineno}: unknown language: {language!r}")
        if level not in _LEVELS:
            raise SchemaError(f"{source}: line {lineno}: level must be 'text' or 'word'")
        if (family, language, level) in entries:
            raise SchemaError(f"{source}: line {lineno}: duplicate key {key}")
        labels = tuple(lbl.strip() for lbl in value.split("|"))
        if any(not lbl for lbl in labels):
            raise SchemaError(f"{source}: line {lineno}: empty label in {key}")
        entries[(family, language, level)] = labels

    registry: dict[tuple[str, str], LabelSchema] = {}
    for family in FAMILIES:
        for language in LANGUAGES:
            try:
                text_labels = entries[(family, language, "text")]
                word_labels = entries[(family, language, "word")]
            except KeyError as exc:
                raise SchemaError(
                    f"{source}: missing schema entry for {family}.{language}"
                ) from exc
            registry[(family, language)] = LabelSchema(
                text_labels=text_labels,
                word_labels=word_labels,
                open_domain=family in OPEN_DOMAIN_FAMILIES,
            )
    return registry


def load_schema_file(path: str | Path) -> dict[tuple[str, str], LabelSchema]:
    """Load a complete schema registry from a file in the bundled format."""
    path = Path(path)
    return parse_schema_document(path.read_text(encoding="utf-8"), source=str(path))


_BUILTIN_REGISTRY: dict[tuple[str, str], LabelSchema] | None = None


def _builtin_registry() -> dict[tuple[str, str], LabelSchema]:
    global _BUILTIN_REGISTRY
    if _BUILTIN_REGISTRY is None:
        text = resources.files("mremix").joinpath("data/schemas.txt").read_text("utf-8")
        _BUILTIN_REGISTRY = parse_schema_document(text, source="data/schemas.txt")
    return _BUILTIN_REGISTRY


def builtin_schema(family: str, language: str) -> LabelSchema:
    """The bundled label schema for one (family, language). Pure: cached."""
    family = normalize_family(family)
    if language not in LANGUAGES:
        raise SchemaError(f"unknown language: {language!r}")
    return _builtin_registry()[(family, language)]


def all_descriptors() -> list[DatasetDescriptor]:
    """All 21 admissible (family, language) descriptors with bundled schemas."""
    return [
        DatasetDescriptor.builtin(family, language)
        for family in FAMILIES
        for language in LANGUAGES
    ]
