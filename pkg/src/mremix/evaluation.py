"""Two-level evaluation: word-level pair F1 and text-level micro-F1.

Pair matching is multiset intersection on exact (label, entity) equality
(surfaces are whitespace-trimmed at construction): a duplicated correct
entity in the prediction consumes one gold copy only, so generative
repetition earns no double credit. Order never matters. Entity strings
are never case-folded; pair labels are case-folded for English datasets
only.

Text-level scoring is micro-F1, which for single-label classification
equals accuracy; unparseable predictions count as wrong.

A run is scored per draw and averaged across draws, with the sample
standard deviation as the spread.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import DatasetDescriptor, LabelEntityPair
from .errors import DataError
from .formats import SEPARATOR, FormatTag, FormattedExample, target_level
from .parsing import GenerationRow, ParseFlag, parse_pairs, parse_prediction


@dataclass(frozen=True)
class Prf:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _pair_key(pair: LabelEntityPair, fold_label_case: bool) -> tuple[str, str]:
    label = pair.label.casefold() if fold_label_case else pair.label
    return (label, pair.entity)


def _match_count(
    gold: Sequence[LabelEntityPair],
    pred: Sequence[LabelEntityPair],
    fold_label_case: bool,
) -> int:
    gold_counts = Counter(_pair_key(p, fold_label_case) for p in gold)
    pred_counts = Counter(_pair_key(p, fold_label_case) for p in pred)
    return sum(min(gold_counts[k], pred_counts[k]) for k in gold_counts.keys() & pred_counts.keys())


def _prf_from_counts(match: int, n_pred: int, n_gold: int) -> Prf:
    if n_gold == 0 and n_pred == 0:
        return Prf(1.0, 1.0, 1.0)
    precision = match / n_pred if n_pred else 0.0
    recall = match / n_gold if n_gold else 0.0
    return Prf(precision, recall, _f1(precision, recall))


def pair_f1(
    gold: Sequence[LabelEntityPair],
    pred: Sequence[LabelEntityPair],
    *,
    fold_label_case: bool = False,
) -> Prf:
    """Multiset-exact pair F1 for one example.

    Both sides empty scores 1.0 across the board; an empty prediction
    against non-empty gold has precision 0 by convention.
    """
    match = _match_count(gold, pred, fold_label_case)
    return _prf_from_counts(match, len(pred), len(gold))


def pair_f1_micro(
    gold_lists: Sequence[Sequence[LabelEntityPair]],
    pred_lists: Sequence[Sequence[LabelEntityPair]],
    *,
    fold_label_case: bool = False,
) -> Prf:
    """Micro-averaged pair F1 over many examples (global match/pred/gold counts)."""
    if len(gold_lists) != len(pred_lists):
        raise DataError(
            f"gold and prediction counts differ: {len(gold_lists)} vs {len(pred_lists)}"
        )
    match = n_pred = n_gold = 0
    for gold, pred in zip(gold_lists, pred_lists):
        match += _match_count(gold, pred, fold_label_case)
        n_pred += len(pred)
        n_gold += len(gold)
    return _prf_from_counts(match, n_pred, n_gold)


def text_f1(gold: Sequence[str], pred: Sequence[Optional[str]]) -> Prf:
    """Micro-F1 over aligned label lists; equals accuracy for single labels.

    ``None`` predictions (unparseable generations) never match.
    """
    if len(gold) != len(pred):
        raise DataError(f"gold and prediction counts differ: {len(gold)} vs {len(pred)}")
    if not gold:
        return Prf(1.0, 1.0, 1.0)
    correct = sum(1 for g, p in zip(gold, pred) if p is not None and g == p)
    accuracy = correct / len(gold)
    return Prf(accuracy, accuracy, accuracy)


def text_macro_f1(gold: Sequence[str], pred: Sequence[Optional[str]]) -> Prf:
    """Macro-F1: one-vs-rest P/R/F1 per label, averaged with equal label weight.

    The label set is every label observed in gold or in a non-None
    prediction. Micro (the default elsewhere) is the reported headline
    number; this is the optional alternative.
    """
    if len(gold) != len(pred):
        raise DataError(f"gold and prediction counts differ: {len(gold)} vs {len(pred)}")
    if not gold:
        return Prf(1.0, 1.0, 1.0)
    labels = sorted({*gold, *(p for p in pred if p is not None)})
    precisions: list[float] = []
    recalls: list[float] = []
    f1s: list[float] = []
    for label in labels:
        tp = sum(1 for g, p in zip(gold, pred) if g == label and p == label)
        fp = sum(1 for g, p in zip(gold, pred) if g != label and p == label)
        fn = sum(1 for g, p in zip(gold, pred) if g == label and p != label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(_f1(precision, recall))
    n = len(labels)
    return Prf(sum(precisions) / n, sum(recalls) / n, sum(f1s) / n)


@dataclass(frozen=True)
class DrawScore:
    """Scores for one test draw."""

    index: int
    word: Optional[Prf]
    text: Optional[Prf]
    parse_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "word": self.word.to_dict() if self.word else None,
            "text": self.text.to_dict() if self.text else None,
            "parse_counts": dict(self.parse_counts),
        }


def mean_std(values: Sequence[float]) -> dict:
    """Arithmetic mean and sample standard deviation (None below two values)."""
    mean = sum(values) / len(values)
    std = statistics.stdev(values) if len(values) >= 2 else None
    return {"mean": mean, "std": std}


@dataclass(frozen=True)
class EvalReport:
    """Per-draw precision/recall/F1 plus cross-draw mean and spread."""

    tag: FormatTag
    family: str
    language: str
    draws: tuple[DrawScore, ...]
    metadata: dict

    def summary(self) -> dict:
        out: dict = {}
        for side in ("word", "text"):
            scores = [getattr(d, side) for d in self.draws]
            if any(s is None for s in scores):
                out[side] = None
                continue
            out[side] = {
                "precision": mean_std([s.precision for s in scores]),
                "recall": mean_std([s.recall for s in scores]),
                "f1": mean_std([s.f1 for s in scores]),
            }
        return out

    def parse_totals(self) -> dict[str, int]:
        totals = {flag.value: 0 for flag in ParseFlag}
        for draw in self.draws:
            for key, value in draw.parse_counts.items():
                totals[key] = totals.get(key, 0) + value
        return totals

    def to_dict(self) -> dict:
        return {
            "tag": self.tag.value,
            "family": self.family,
            "language": self.language,
            "draws": [d.to_dict() for d in self.draws],
            "summary": self.summary(),
            "parse_totals": self.parse_totals(),
            "metadata": dict(self.metadata),
        }


def report_from_dict(data: dict) -> EvalReport:
    """Rebuild an EvalReport from its JSON form (inverse of to_dict)."""
    try:
        draws = []
        for d in data["draws"]:
            word = Prf(**d["word"]) if d.get("word") else None
            text = Prf(**d["text"]) if d.get("text") else None
            draws.append(
                DrawScore(
                    index=int(d["index"]),
                    word=word,
                    text=text,
                    parse_counts=dict(d.get("parse_counts", {})),
                )
            )
        return EvalReport(
            tag=FormatTag(data["tag"]),
            family=str(data["family"]),
            language=str(data["language"]),
            draws=tuple(draws),
            metadata=dict(data.get("metadata", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"not an evaluation report: {exc}") from exc


MATCHING_POLICY = {
    "pair_match": "exact multiset on (label, entity) after whitespace trim",
    "pair_order": "ignored (set/multiset semantics regardless of generation order)",
    "unparseable": "zero credit, kept in the denominator",
    "entity_case": "never folded",
    "label_case": "folded for en only",
    "text_level": "micro-F1 (= accuracy for single-label)",
    "draws": "independent across repetitions; without replacement within a draw",
}


def _split_joint_target(target: str) -> tuple[str, str]:
    if SEPARATOR not in target:
        raise DataError(f"joint target lacks the level separator: {target!r}")
    label, pairs = target.split(SEPARATOR, 1)
    return label, pairs


def evaluate_run(
    draws: Sequence[Sequence[FormattedExample]],
    generations: Sequence[Sequence[GenerationRow]],
    desc: DatasetDescriptor,
    tag: FormatTag,
    metadata: Optional[dict] = None,
    text_metric: str = "micro",
) -> EvalReport:
    """Score generation files against gold draws for one format.

    Draw files carry the gold targets; generations align with them by
    position (and by record id when the generation rows carry ids). Any
    misalignment is a hard error naming the draw. ``text_metric`` selects
    micro-F1 (the default, = accuracy) or macro-F1 for the text level and
    is recorded in the report metadata.
    """
    if len(draws) != len(generations):
        raise DataError(f"expected {len(draws)} generation files, got {len(generations)}")
    if text_metric not in ("micro", "macro"):
        raise DataError(f"text_metric must be 'micro' or 'macro', got {text_metric!r}")
    score_text = text_f1 if text_metric == "micro" else text_macro_f1
    fold = desc.language == "en"
    level = target_level(tag)
    draw_scores: list[DrawScore] = []
    for d, (gold_examples, gen_rows) in enumerate(zip(draws, generations)):
        if len(gold_examples) != len(gen_rows):
            raise DataError(
                f"draw {d}: expected {len(gold_examples)} generations, got {len(gen_rows)}"
            )
        gold_pairs: list[tuple[LabelEntityPair, ...]] = []
        pred_pairs: list[tuple[LabelEntityPair, ...]] = []
        gold_labels: list[str] = []
        pred_labels: list[Optional[str]] = []
        counts = {flag.value: 0 for flag in ParseFlag}

        for i, (example, row) in enumerate(zip(gold_examples, gen_rows)):
            if row.record_id is not None and row.record_id != example.record_id:
                raise DataError(
                    f"draw {d}: position {i}: generation is for record "
                    f"{row.record_id!r}, expected {example.record_id!r}"
                )
            prediction = parse_prediction(row.output, tag, desc.schema)
            counts[prediction.flag.value] += 1

            if level in ("word", "joint"):
                if level == "word":
                    gold_target = example.target
                else:
                    _, gold_target = _split_joint_target(example.target)
                parsed_gold = parse_pairs(gold_target)
                if parsed_gold.flag is not ParseFlag.CLEAN:
                    raise DataError(
                        f"draw {d}: record {example.record_id!r}: gold target is "
                        "not canonical; draw files must come from the format builder"
                    )
                gold_pairs.append(parsed_gold.pairs)
                pred_pairs.append(prediction.pairs)
            if level in ("text", "joint"):
                if level == "text":
                    gold_label = example.target
                else:
                    gold_label, _ = _split_joint_target(example.target)
                gold_labels.append(gold_label)
                pred_labels.append(prediction.text_label)

        word_score = (
            pair_f1_micro(gold_pairs, pred_pairs, fold_label_case=fold)
            if level in ("word", "joint")
            else None
        )
        text_score = score_text(gold_labels, pred_labels) if level in ("text", "joint") else None
        draw_scores.append(
            DrawScore(index=d, word=word_score, text=text_score, parse_counts=counts)
        )

    meta = dict(metadata or {})
    meta.setdefault("matching_policy", MATCHING_POLICY)
    meta.setdefault("text_metric", text_metric)
    return EvalReport(
        tag=tag,
        family=desc.family,
        language=desc.language,
        draws=tuple(draw_scores),
        metadata=meta,
    )


# -- report rendering ---------------------------------------------------------


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{100.0 * value:.2f}"


def report_markdown(report: EvalReport) -> str:
    lines = [
        f"# Evaluation: {report.family} / {report.language} / {report.tag}",
        "",
        "| draw | word P | word R | word F1 | text P | text R | text F1 | clean | recovered | unparseable |",
        "|---|---|---|---|---|---|---|---|---|---|",
    ]
    for draw in report.draws:
        w = draw.word
        t = draw.text
        pc = draw.parse_counts
        lines.append(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |".format(
                draw.index,
                _fmt(w.precision if w else None),
                _fmt(w.recall if w else None),
                _fmt(w.f1 if w else None),
                _fmt(t.precision if t else None),
                _fmt(t.recall if t else None),
                _fmt(t.f1 if t else None),
                pc.get("CLEAN", 0),
                pc.get("RECOVERED", 0),
                pc.get("UNPARSEABLE", 0),
            )
        )
    summary = report.summary()
    lines.append("")
    for side in ("word", "text"):
        if summary.get(side) is None:
            continue
        f1 = summary[side]["f1"]
        std = f1["std"]
        spread = "-" if std is None else f"{100.0 * std:.2f}"
        lines.append(f"- {side}-level F1: mean {_fmt(f1['mean'])}, spread {spread}")
    lines.append("")
    return "\n".join(lines)


def report_tsv(report: EvalReport) -> str:
    rows = ["draw\tword_p\tword_r\tword_f1\ttext_p\ttext_r\ttext_f1"]
    for draw in report.draws:
        w, t = draw.word, draw.text
        rows.append(
            "\t".join(
                [
                    str(draw.index),
                    _fmt(w.precision if w else None),
                    _fmt(w.recall if w else None),
                    _fmt(w.f1 if w else None),
                    _fmt(t.precision if t else None),
                    _fmt(t.recall if t else None),
                    _fmt(t.f1 if t else None),
                ]
            )
        )
    summary = report.summary()
    mean_row = ["mean"]
    for side in ("word", "text"):
        if summary.get(side) is None:
            mean_row.extend(["-", "-", "-"])
        else:
            mean_row.extend(
                _fmt(summary[side][metric]["mean"]) for metric in ("precision", "recall", "f1")
            )
    rows.append("\t".join(mean_row))
    return "\n".join(rows) + "\n"


# The four-row ablation layout: which (tag, side) feeds each row. The
# traditional tags are accepted as byte-identical stand-ins for the w/o rows.
ABLATION_ROWS: tuple[tuple[str, tuple[FormatTag, ...], str], ...] = (
    ("w/o TLI", (FormatTag.WO_TLI_TO_WLI, FormatTag.TRAD_WORD), "word"),
    ("with TLI", (FormatTag.WITH_TLI_TO_WLI,), "word"),
    ("w/o WLI", (FormatTag.WO_WLI_TO_TLI, FormatTag.TRAD_TEXT), "text"),
    ("with WLI", (FormatTag.WITH_WLI_TO_TLI,), "text"),
)


def ablation_table(reports: Sequence[EvalReport]) -> tuple[str, str]:
    """Render mean F1 for the four ablation rows across datasets.

    Returns (markdown, tsv). Columns are the distinct (family, language)
    pairs present, in first-seen order.
    """
    columns: list[tuple[str, str]] = []
    cells: dict[tuple[str, tuple[str, str]], float] = {}
    for report in reports:
        col = (report.family, report.language)
        if col not in columns:
            columns.append(col)
        summary = report.summary()
        for row_name, tags, side in ABLATION_ROWS:
            if report.tag in tags and summary.get(side):
                cells[(row_name, col)] = summary[side]["f1"]["mean"]

    headers = [f"{family}/{language}" for family, language in columns]
    md = ["| format | " + " | ".join(headers) + " |", "|---" * (len(columns) + 1) + "|"]
    tsv = ["format\t" + "\t".join(headers)]
    for row_name, _, _ in ABLATION_ROWS:
        md_cells = []
        tsv_cells = []
        for col in columns:
            value = cells.get((row_name, col))
            md_cells.append(_fmt(value))
            tsv_cells.append(_fmt(value))
        md.append(f"| {row_name} | " + " | ".join(md_cells) + " |")
        tsv.append(row_name + "\t" + "\t".join(tsv_cells))
    return "\n".join(md) + "\n", "\n".join(tsv) + "\n"
