"""Experiment pipelines tying the modules together.

Everything here is deterministic given (inputs, config): a single master
seed feeds documented sub-streams (per label for few-shot selection, per
draw index for the repeated test protocol), the effective configuration is
serialized next to every artifact, and no artifact embeds timestamps or
absolute paths, so reruns are byte-identical.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

from .core import DatasetDescriptor
from .errors import ConfigError, DataError
from .evaluation import Prf, mean_std, text_f1
from .formats import (
    FormatTag,
    build_corpus,
    corpus_filename,
    corpus_manifest,
    write_examples,
)
from .ingest import Split, few_shot_sample, load_split, repeated_test_sample
from .jsonio import read_json, write_json, write_jsonl
from .refmlm import CountModel, kernel_backend, lexicon_from_split, make_segmenter
from .verbalizer import (
    AGGREGATION_STRATEGIES,
    FileDistributionProvider,
    ProbabilityProvider,
    Verbalizer,
    apply_template,
    build_from_wli,
    load_external_kv,
    predict,
    save_kv,
)

DATA_ROOT_ENV = "MREMIX_DATA_ROOT"

KV_SOURCES = ("train", "fewshot")
RECORD_FORMATS = ("jsonl", "tsv")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative experiment configuration.

    The protocol defaults are the reference values: 20 few-shot samples per
    category, test draws of 1,000 repeated 3 times, and 100 verbalizer
    words per label. Every value is echoed into report metadata.
    """

    family: Optional[str] = None
    language: Optional[str] = None
    seed: int = 0
    few_shot_k: int = 20
    test_sample_size: int = 1000
    test_repeats: int = 3
    kv_words_per_label: int = 100
    template: str = "{text}\n{mask}"
    aggregation: str = "sum"
    kv_source: str = "train"
    provider: str = "refmlm"
    alpha: float = 1.0
    record_format: str = "jsonl"
    lenient: bool = False
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    external_kv_path: Optional[str] = None

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        data = read_json(path)
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"{path}: unknown config key(s): {', '.join(unknown)}")
        return cls(**data)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Apply non-None overrides (flags win over the config file)."""
        updates = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **updates)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if self.aggregation not in AGGREGATION_STRATEGIES:
            raise ConfigError(f"aggregation must be one of {AGGREGATION_STRATEGIES}")
        if self.kv_source not in KV_SOURCES:
            raise ConfigError(f"kv_source must be one of {KV_SOURCES}")
        if self.record_format not in RECORD_FORMATS:
            raise ConfigError(f"record_format must be one of {RECORD_FORMATS}")
        if self.provider != "refmlm" and not self.provider.startswith("file:"):
            raise ConfigError("provider must be 'refmlm' or 'file:<path>'")
        for name in ("few_shot_k", "test_sample_size", "test_repeats", "kv_words_per_label"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        try:
            apply_template("", self.template)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def resolve_data_path(path: str | Path) -> Path:
    """Resolve a data path against MREMIX_DATA_ROOT when it is relative."""
    path = Path(path)
    root = os.environ.get(DATA_ROOT_ENV)
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _descriptor(config: ExperimentConfig) -> DatasetDescriptor:
    if not config.family or not config.language:
        raise ConfigError("family and language must be set")
    return DatasetDescriptor.builtin(config.family, config.language)


def _load(config: ExperimentConfig, path: Optional[str], role: str, desc) -> Split:
    if not path:
        raise ConfigError(f"{role}_path must be set")
    return load_split(
        resolve_data_path(path), desc, role,
        fmt=config.record_format, strict=not config.lenient,
    )


def _guard_overwrite(paths: Sequence[Path], force: bool) -> None:
    if force:
        return
    for path in paths:
        if path.exists():
            raise FileExistsError(f"{path} exists; pass --force to overwrite")


# -- format building ----------------------------------------------------------


def parse_tags(value: str) -> list[FormatTag]:
    """Parse a --tags value: 'all' or a comma-separated tag list."""
    if value.strip().lower() == "all":
        return list(FormatTag)
    tags = []
    for name in value.split(","):
        name = name.strip()
        if not name:
            continue
        try:
            tags.append(FormatTag(name.upper()))
        except ValueError:
            valid = ", ".join(t.value for t in FormatTag)
            raise ConfigError(f"unknown format tag {name!r}; valid tags: {valid}") from None
    if not tags:
        raise ConfigError("no format tags requested")
    return tags


def build_format_files(
    config: ExperimentConfig,
    input_path: str,
    role: str,
    tags: Sequence[FormatTag],
    out_dir: str | Path,
    force: bool = False,
) -> dict:
    """Write training (or test-draw) files for the requested tags, plus a manifest.

    Train role formats the whole split in order. Test role applies the
    repeated-draw protocol first, producing one file per (tag, draw) so the
    draw files double as gold manifests for evaluation.
    """
    config.validate()
    desc = _descriptor(config)
    split = load_split(
        resolve_data_path(input_path), desc, role,
        fmt=config.record_format, strict=not config.lenient,
    )
    out = Path(out_dir)

    if role == "train":
        sources = [(None, split)]
    else:
        draws = repeated_test_sample(
            split, config.test_sample_size, config.test_repeats, config.seed
        )
        sources = list(enumerate(draws))

    planned: list[tuple[Path, list]] = []
    manifest: dict = {
        "role": role,
        "config": config.to_dict(),
        "files": [],
    }
    for tag in tags:
        for draw_index, source in sources:
            examples = build_corpus(source.records, tag, desc)
            name = corpus_filename(desc, tag, role)
            if draw_index is not None:
                name = name.replace(f".{role}.jsonl", f".{role}.draw{draw_index}.jsonl")
            planned.append((out / name, examples))
            entry = corpus_manifest(examples)
            entry.update({"file": name, "tag": tag.value})
            if draw_index is not None:
                entry["draw_index"] = draw_index
            manifest["files"].append(entry)

    manifest_path = out / f"{desc.slug}_{role}_manifest.json"
    _guard_overwrite([p for p, _ in planned] + [manifest_path], force)
    for path, examples in planned:
        write_examples(path, examples)
    write_json(manifest_path, manifest)
    return manifest


# -- KV experiment ------------------------------------------------------------


@dataclass(frozen=True)
class KvRow:
    """One verbalizer system's scores across the repeated test draws."""

    name: str
    draws: tuple[Prf, ...]
    no_coverage: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "draws": [d.to_dict() for d in self.draws],
            "f1": mean_std([d.f1 for d in self.draws]),
            "no_coverage_predictions": self.no_coverage,
        }

    def mean_f1(self) -> float:
        return sum(d.f1 for d in self.draws) / len(self.draws)


@dataclass(frozen=True)
class KvComparisonReport:
    """Origin-KV vs WLI-KV text classification comparison."""

    rows: tuple[KvRow, ...]
    metadata: dict

    def to_dict(self) -> dict:
        return {"rows": [row.to_dict() for row in self.rows], "metadata": dict(self.metadata)}

    def markdown(self) -> str:
        lines = [
            "| verbalizer | " + " | ".join(
                f"draw {i}" for i in range(len(self.rows[0].draws))
            ) + " | mean F1 |",
            "|---" * (len(self.rows[0].draws) + 2) + "|",
        ]
        for row in self.rows:
            cells = [f"{100.0 * d.f1:.2f}" for d in row.draws]
            lines.append(
                f"| {row.name} | " + " | ".join(cells) + f" | {100.0 * row.mean_f1():.2f} |"
            )
        return "\n".join(lines) + "\n"

    def tsv(self) -> str:
        header = "verbalizer\t" + "\t".join(
            f"draw{i}" for i in range(len(self.rows[0].draws))
        ) + "\tmean_f1"
        lines = [header]
        for row in self.rows:
            cells = [f"{100.0 * d.f1:.2f}" for d in row.draws]
            lines.append(row.name + "\t" + "\t".join(cells) + f"\t{100.0 * row.mean_f1():.2f}")
        return "\n".join(lines) + "\n"


def _make_provider(
    config: ExperimentConfig, train: Split, fewshot: Split
) -> tuple[ProbabilityProvider, dict]:
    if config.provider == "refmlm":
        segmenter = make_segmenter(config.language, lexicon_from_split(train))
        corpus = [record.text for record in fewshot.records]
        model = CountModel.train(corpus, segmenter, alpha=config.alpha)
        detail = {
            "kind": "refmlm",
            "kernel_backend": kernel_backend(),
            "training_texts": len(corpus),
            "vocabulary": len(model.vocabulary()),
        }
        return model, detail
    path = resolve_data_path(config.provider.split(":", 1)[1])
    return FileDistributionProvider(path), {"kind": "file", "path": str(path)}


def run_kv(
    config: ExperimentConfig,
    out_dir: Optional[str | Path] = None,
    force: bool = False,
) -> KvComparisonReport:
    """The knowledgeable-verbalizer comparison experiment.

    Builds the WLI-based verbalizer from the training split, loads the
    baseline verbalizer from the external word-list file, classifies every
    repeated test draw with both through the configured provider, and
    reports per-draw and mean text-level F1 for each.
    """
    config.validate()
    desc = _descriptor(config)
    if desc.schema.open_domain:
        raise ConfigError(
            f"{desc.family} has an open-domain schema and is excluded from KV experiments"
        )
    if not config.external_kv_path:
        raise ConfigError("external_kv_path must be set (the baseline verbalizer word lists)")

    train = _load(config, config.train_path, "train", desc)
    test = _load(config, config.test_path, "test", desc)
    fewshot = few_shot_sample(train, desc, config.few_shot_k, config.seed)

    kv_input = train if config.kv_source == "train" else fewshot
    wli_kv = build_from_wli(kv_input, desc, config.kv_words_per_label)
    origin_kv = load_external_kv(
        resolve_data_path(config.external_kv_path), desc.schema, config.kv_words_per_label
    )
    provider, provider_detail = _make_provider(config, train, fewshot)

    draws = repeated_test_sample(test, config.test_sample_size, config.test_repeats, config.seed)

    systems: list[tuple[str, str, Verbalizer]] = [
        ("Origin KV", "origin", origin_kv),
        ("WLI KV", "wli", wli_kv),
    ]
    rows: list[KvRow] = []
    predictions: dict[str, list[list[dict]]] = {}
    for name, slug, kv in systems:
        per_draw: list[Prf] = []
        no_coverage = 0
        rows_out: list[list[dict]] = []
        for draw in draws:
            gold = [record.text_label for record in draw.records]
            labels: list[str] = []
            draw_rows: list[dict] = []
            for record in draw.records:
                prompt = apply_template(record.text, config.template)
                try:
                    prediction = predict(prompt, kv, provider, strategy=config.aggregation)
                except DataError as exc:
                    raise DataError(f"record {record.id!r}: provider failed: {exc}") from exc
                labels.append(prediction.label)
                no_coverage += prediction.no_coverage
                draw_rows.append(
                    {
                        "record_id": record.id,
                        "label": prediction.label,
                        "no_coverage": prediction.no_coverage,
                        "scores": prediction.scores,
                    }
                )
            per_draw.append(text_f1(gold, labels))
            rows_out.append(draw_rows)
        rows.append(KvRow(name=name, draws=tuple(per_draw), no_coverage=no_coverage))
        predictions[slug] = rows_out

    report = KvComparisonReport(
        rows=tuple(rows),
        metadata={
            "config": config.to_dict(),
            "family": desc.family,
            "language": desc.language,
            "provider": provider_detail,
            "draw_protocol": {
                "sample_size": config.test_sample_size,
                "repeats": config.test_repeats,
                "seed": config.seed,
                "replacement": "independent draws (without replacement within a draw)",
            },
            "aggregation": config.aggregation,
            "kv_source": config.kv_source,
        },
    )

    if out_dir is not None:
        out = Path(out_dir)
        paths = [
            out / "effective_config.json",
            out / "wli_kv.txt",
            out / "origin_kv.txt",
            out / "kv_report.json",
            out / "kv_report.md",
            out / "kv_report.tsv",
        ]
        pred_paths = {
            slug: [out / f"predictions_{slug}.draw{d}.jsonl" for d in range(len(draws))]
            for slug in predictions
        }
        _guard_overwrite(paths + [p for ps in pred_paths.values() for p in ps], force)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "effective_config.json", config.to_dict())
        save_kv(wli_kv, out / "wli_kv.txt")
        save_kv(origin_kv, out / "origin_kv.txt")
        for slug, per_draw_rows in predictions.items():
            for d, draw_rows in enumerate(per_draw_rows):
                write_jsonl(pred_paths[slug][d], draw_rows)
        write_json(out / "kv_report.json", report.to_dict())
        (out / "kv_report.md").write_text(report.markdown(), encoding="utf-8")
        (out / "kv_report.tsv").write_text(report.tsv(), encoding="utf-8")
    return report
