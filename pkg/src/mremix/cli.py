"""Command-line surface for the toolkit.

Subcommands: validate, build-formats, build-kv, score, evaluate, run-kv,
report. Exit codes are a stable contract: 0 success, 1 data violation,
2 I/O failure (including refusal to overwrite without --force), 3
configuration error. Relative data paths resolve against MREMIX_DATA_ROOT
when that variable is set.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import runner
from .core import DatasetDescriptor
from .errors import ConfigError, DataError, MremixError, SchemaError
from .evaluation import (
    ablation_table,
    evaluate_run,
    report_from_dict,
    report_markdown,
    report_tsv,
)
from .formats import FormatTag, read_examples
from .ingest import load_split
from .jsonio import read_json, write_json, write_jsonl
from .ingest import few_shot_sample
from .parsing import read_generations
from .refmlm import CountModel, lexicon_from_split, make_segmenter
from .runner import ExperimentConfig, resolve_data_path
from .verbalizer import (
    FileDistributionProvider,
    apply_template,
    build_from_wli,
    load_external_kv,
    predict,
    save_kv,
)


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors follow the toolkit's exit-code contract."""

    def error(self, message):
        raise ConfigError(message)


def _descriptor(args) -> DatasetDescriptor:
    if not args.family or not args.language:
        raise ConfigError("--family and --language are required")
    return DatasetDescriptor.builtin(args.family, args.language)


def _descriptor_from_config(config: ExperimentConfig) -> DatasetDescriptor:
    if not config.family or not config.language:
        raise ConfigError("family and language must be set (flags or config file)")
    return DatasetDescriptor.builtin(config.family, config.language)


def _config_from_args(args, _keys=(
    "family", "language", "seed", "few_shot_k", "test_sample_size", "test_repeats",
    "kv_words_per_label", "template", "aggregation", "kv_source", "provider",
    "alpha", "record_format", "lenient", "train_path", "test_path", "external_kv_path",
)) -> ExperimentConfig:
    """Defaults <- config file <- explicitly passed flags."""
    config = ExperimentConfig()
    if getattr(args, "config", None):
        config = ExperimentConfig.from_file(resolve_data_path(args.config))
    overrides = {key: getattr(args, key, None) for key in _keys}
    if overrides.get("lenient") is False:
        overrides["lenient"] = None  # store_true default; only True is an override
    return config.with_overrides(**overrides)


# -- subcommand implementations ------------------------------------------------


def cmd_validate(args) -> int:
    desc = _descriptor(args)
    for path in args.paths:
        split = load_split(resolve_data_path(path), desc, "train", fmt=args.record_format)
        print(f"OK {path} ({len(split)} records)")
    return 0


def cmd_build_formats(args) -> int:
    config = _config_from_args(args)
    tags = runner.parse_tags(args.tags)
    manifest = runner.build_format_files(
        config, args.input, args.role, tags, args.out, force=args.force
    )
    print(f"wrote {len(manifest['files'])} file(s) to {args.out}")
    return 0


def cmd_build_kv(args) -> int:
    config = _config_from_args(args)
    config.validate()
    desc = _descriptor_from_config(config)
    train = load_split(
        resolve_data_path(args.train), desc, "train",
        fmt=config.record_format, strict=not config.lenient,
    )
    source = train
    if config.kv_source == "fewshot":
        source = few_shot_sample(train, desc, config.few_shot_k, config.seed)
    kv = build_from_wli(source, desc, config.kv_words_per_label)
    out = Path(args.out)
    sidecar = out.with_name(out.name + ".config.json")
    for path in (out, sidecar):
        if path.exists() and not args.force:
            raise FileExistsError(f"{path} exists; pass --force to overwrite")
    save_kv(kv, out)
    write_json(sidecar, config.to_dict())
    total = sum(len(kv.words_for(label)) for label in kv.labels())
    print(f"wrote {total} words across {len(kv.labels())} labels to {out}")
    return 0


def cmd_score(args) -> int:
    config = _config_from_args(args)
    config.validate()
    desc = _descriptor_from_config(config)
    kv = load_external_kv(resolve_data_path(args.kv), desc.schema, config.kv_words_per_label)
    test = load_split(
        resolve_data_path(args.input), desc, "test",
        fmt=config.record_format, strict=not config.lenient,
    )

    if config.provider == "refmlm":
        if not config.train_path:
            raise ConfigError("--train is required for the refmlm provider")
        train = load_split(
            resolve_data_path(config.train_path), desc, "train",
            fmt=config.record_format, strict=not config.lenient,
        )
        segmenter = make_segmenter(desc.language, lexicon_from_split(train))
        provider = CountModel.train(
            [r.text for r in train.records], segmenter, alpha=config.alpha
        )
    else:
        provider = FileDistributionProvider(resolve_data_path(config.provider.split(":", 1)[1]))

    out = Path(args.out)
    sidecar = out.with_name(out.name + ".config.json")
    for path in (out, sidecar):
        if path.exists() and not args.force:
            raise FileExistsError(f"{path} exists; pass --force to overwrite")
    rows = []
    for record in test.records:
        prompt = apply_template(record.text, config.template)
        try:
            prediction = predict(prompt, kv, provider, strategy=config.aggregation)
        except DataError as exc:
            raise DataError(f"record {record.id!r}: provider failed: {exc}") from exc
        rows.append(
            {
                "record_id": record.id,
                "label": prediction.label,
                "no_coverage": prediction.no_coverage,
                "scores": prediction.scores,
            }
        )
    write_jsonl(out, rows)
    write_json(sidecar, config.to_dict())
    print(f"scored {len(rows)} records -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    desc = _descriptor(args)
    try:
        tag = FormatTag(args.tag.upper())
    except ValueError:
        raise ConfigError(f"unknown format tag {args.tag!r}") from None
    if len(args.draws) != len(args.generations):
        raise ConfigError(
            f"got {len(args.draws)} draw file(s) but {len(args.generations)} generation file(s)"
        )
    draws = []
    for d, path in enumerate(args.draws):
        path = resolve_data_path(path)
        if not Path(path).exists():
            raise FileNotFoundError(f"draw {d}: missing draw file {path}")
        draws.append(read_examples(path))
    generations = []
    for d, path in enumerate(args.generations):
        path = resolve_data_path(path)
        if not Path(path).exists():
            raise FileNotFoundError(f"draw {d}: missing generation file {path}")
        generations.append(read_generations(path))

    report = evaluate_run(draws, generations, desc, tag, text_metric=args.text_metric)
    out = Path(args.out)
    paths = [out / "report.json", out / "report.md", out / "report.tsv"]
    if not args.force:
        for p in paths:
            if p.exists():
                raise FileExistsError(f"{p} exists; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    write_json(paths[0], report.to_dict())
    paths[1].write_text(report_markdown(report), encoding="utf-8")
    paths[2].write_text(report_tsv(report), encoding="utf-8")
    summary = report.summary()
    for side in ("word", "text"):
        if summary.get(side):
            print(f"{side} F1 mean: {summary[side]['f1']['mean']:.4f}")
    return 0


def cmd_run_kv(args) -> int:
    config = _config_from_args(args)
    report = runner.run_kv(config, out_dir=args.out, force=args.force)
    for row in report.rows:
        print(f"{row.name}: mean F1 {row.mean_f1():.4f}")
    return 0


def cmd_report(args) -> int:
    reports = []
    for path in args.inputs:
        data = read_json(resolve_data_path(path))
        reports.append(report_from_dict(data))
    md, tsv = ablation_table(reports)
    out = Path(args.out)
    paths = [out / "ablation.md", out / "ablation.tsv"]
    if not args.force:
        for p in paths:
            if p.exists():
                raise FileExistsError(f"{p} exists; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    paths[0].write_text(md, encoding="utf-8")
    paths[1].write_text(tsv, encoding="utf-8")
    print(md)
    return 0


# -- parser wiring --------------------------------------------------------------


def _add_descriptor_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", help="dataset family (e.g. SCNM, SCPOS:RW, tcree)")
    p.add_argument("--language", choices=("en", "zh", "ja"), help="dataset language")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int, dest="seed")
    p.add_argument("--few-shot-k", type=int, dest="few_shot_k")
    p.add_argument("--test-n", type=int, dest="test_sample_size")
    p.add_argument("--repeats", type=int, dest="test_repeats")
    p.add_argument("--kv-k", type=int, dest="kv_words_per_label")
    p.add_argument("--template", dest="template")
    p.add_argument("--aggregation", choices=("sum", "mean"), dest="aggregation")
    p.add_argument("--kv-source", choices=("train", "fewshot"), dest="kv_source")
    p.add_argument("--provider", dest="provider")
    p.add_argument("--alpha", type=float, dest="alpha")
    p.add_argument("--record-format", choices=("jsonl", "tsv"), dest="record_format")
    p.add_argument("--lenient", action="store_true", dest="lenient")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mremix", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="validate record files against a schema")
    _add_descriptor_flags(p)
    p.add_argument("--record-format", choices=("jsonl", "tsv"), default="jsonl")
    p.add_argument("paths", nargs="+", help="record files to validate")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("build-formats", help="emit ablation-format training/test files")
    _add_descriptor_flags(p)
    _add_config_flags(p)
    p.add_argument("--input", required=True, help="record file to format")
    p.add_argument("--role", choices=("train", "test"), default="train")
    p.add_argument("--tags", default="all", help="'all' or comma-separated format tags")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_build_formats)

    p = sub.add_parser("build-kv", help="build a verbalizer from training WLI")
    _add_descriptor_flags(p)
    _add_config_flags(p)
    p.add_argument("--train", required=True, help="training record file")
    p.add_argument("--out", required=True, help="verbalizer word-list file to write")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_build_kv)

    p = sub.add_parser("score", help="classify records with a verbalizer + provider")
    _add_descriptor_flags(p)
    _add_config_flags(p)
    p.add_argument("--kv", required=True, help="verbalizer word-list file")
    p.add_argument("--input", required=True, help="record file to classify")
    p.add_argument("--train", dest="train_path", help="training records (refmlm provider)")
    p.add_argument("--out", required=True, help="predictions JSONL to write")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="score generation files against gold draws")
    _add_descriptor_flags(p)
    p.add_argument("--tag", required=True, help="format tag the generations follow")
    p.add_argument("--draws", nargs="+", required=True, help="gold draw files, in order")
    p.add_argument("--generations", nargs="+", required=True, help="generation files, in order")
    p.add_argument("--text-metric", choices=("micro", "macro"), default="micro",
                   help="text-level metric (micro = accuracy)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run-kv", help="full origin-KV vs WLI-KV comparison")
    _add_descriptor_flags(p)
    _add_config_flags(p)
    p.add_argument("--train", dest="train_path", help="training record file")
    p.add_argument("--test", dest="test_path", help="test record file")
    p.add_argument("--external-kv", dest="external_kv_path", help="baseline word-list file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_run_kv)

    p = sub.add_parser("report", help="aggregate evaluation reports into the ablation table")
    p.add_argument("--inputs", nargs="+", required=True, help="report.json files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, SchemaError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 1
    except MremixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
