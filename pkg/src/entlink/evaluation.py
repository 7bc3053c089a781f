"""Scoring predicted annotations against gold and sweeping hyperparameters.

The confusion-matrix convention treats the gold side as either a real entity
or NIL: a correct entity is a true positive, any prediction against a NIL
gold is a false positive, a wrong entity is a false positive, predicting NIL
against a real gold entity is a false negative, and NIL against NIL is a
true negative.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Sequence

from .kb import NIL, EntityId, parse_entity_id
from .core import (
    HYPERPARAMETER_ALIASES,
    HYPERPARAMETER_WIRE_NAMES,
    Hyperparameters,
)

if TYPE_CHECKING:  # pragma: no cover
    from .core import Engine


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class GoldMention:
    char_start: int
    char_end: int
    entity: EntityId


@dataclass
class GoldDocument:
    text: str
    mentions: list[GoldMention]
    language: str | None = None

    def __post_init__(self) -> None:
        previous_end = 0
        for m in sorted(self.mentions, key=lambda m: m.char_start):
            if m.char_start < previous_end:
                raise EvaluationError(
                    f"gold mention spans overlap at character {m.char_start}"
                )
            previous_end = m.char_end

    @classmethod
    def from_record(cls, record: dict) -> "GoldDocument":
        return cls(
            text=record["text"],
            language=record.get("language"),
            mentions=[
                GoldMention(
                    char_start=int(m["char_start"]),
                    char_end=int(m["char_end"]),
                    entity=parse_entity_id(m["entity"]),
                )
                for m in record.get("mentions", [])
            ],
        )

    def to_record(self) -> dict:
        return {
            "language": self.language,
            "text": self.text,
            "mentions": [
                {
                    "char_start": m.char_start,
                    "char_end": m.char_end,
                    "entity": str(m.entity),
                    "surface": self.text[m.char_start:m.char_end],
                }
                for m in self.mentions
            ],
        }


def read_gold_documents(path: str | Path) -> list[GoldDocument]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                docs.append(GoldDocument.from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise EvaluationError(f"{path}:{lineno}: {exc}") from exc
    return docs


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    accuracy: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "Metrics":
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        total = tp + fp + fn + tn
        accuracy = (tp + tn) / total if total else 0.0
        return cls(tp, fp, fn, tn, precision, recall, f1, accuracy)


def _cell(predicted: EntityId, gold: EntityId) -> str:
    if gold.is_sentinel():
        # Sentinel predictions are NIL-equivalent against a sentinel gold.
        return "tn" if predicted.is_sentinel() else "fp"
    if predicted.kind == "NIL":
        return "fn"
    if predicted.kind == "MISC":
        return "fp"  # a MISC guess against a real gold entity is wrong
    return "tp" if predicted == gold else "fp"


def _prediction_spans(record: Mapping) -> dict[tuple[int, int], EntityId]:
    spans: dict[tuple[int, int], EntityId] = {}
    for m in record.get("mentions", []):
        spans[(int(m["char_start"]), int(m["char_end"]))] = parse_entity_id(m["entity"])
    return spans


def evaluate(
    predictions: Sequence[Mapping],
    gold: Sequence[GoldDocument],
    strict: bool = False,
) -> Metrics:
    """Score prediction records against gold documents, paired by position.

    Mentions align on exact character spans.  A predicted span with no gold
    counterpart is scored against an implicit gold NIL; a gold mention that
    was never extracted is scored as if NIL had been predicted for it.  With
    ``strict`` any such unaligned span is an error instead.
    """
    if len(predictions) != len(gold):
        raise EvaluationError(
            f"{len(predictions)} prediction records vs {len(gold)} gold documents"
        )
    counts = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    mismatched: list[str] = []
    for index, (record, gold_doc) in enumerate(zip(predictions, gold)):
        text = record.get("text")
        if text is not None and text != gold_doc.text:
            raise EvaluationError(f"document {index}: prediction text differs from gold")
        predicted = _prediction_spans(record)
        expected = {
            (m.char_start, m.char_end): m.entity for m in gold_doc.mentions
        }
        for span in sorted(predicted.keys() | expected.keys()):
            p = predicted.get(span)
            g = expected.get(span)
            if p is None:
                mismatched.append(f"doc {index}: gold-only span {span}")
                p = NIL
            elif g is None:
                mismatched.append(f"doc {index}: predicted-only span {span}")
                g = NIL
            counts[_cell(p, g)] += 1
    if strict and mismatched:
        raise EvaluationError(
            "unaligned mention spans:\n" + "\n".join(mismatched)
        )
    return Metrics.from_counts(**counts)


# ---------------------------------------------------------------------------
# Hyperparameter sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    best: Hyperparameters
    rows: tuple[tuple[Hyperparameters, Metrics], ...]


def _hp_sort_key(hp: Hyperparameters) -> tuple:
    return (
        hp.easy_nil_threshold,
        hp.easy_prior_threshold,
        hp.nil_margin,
        hp.window,
    )


def parameter_sweep(
    validation: Sequence[GoldDocument],
    grid: Mapping[str, Sequence],
    engine: "Engine",
    base: Hyperparameters | None = None,
) -> SweepResult:
    """Exhaustive Cartesian sweep over the grid, scored on the validation set.

    The best point maximizes F1; ties fall to higher accuracy, then to the
    smaller margin threshold and the remaining fields.  The result does not
    depend on the order of the grid values.
    """
    if not grid or any(len(values) == 0 for values in grid.values()):
        raise EvaluationError("empty hyperparameter grid")
    if not validation:
        raise EvaluationError("empty validation set")
    base = base or engine.hyperparameters
    fields: list[str] = []
    for name in grid:
        canonical = HYPERPARAMETER_ALIASES.get(name)
        if canonical is None:
            raise EvaluationError(f"unknown hyperparameter {name!r}")
        fields.append(canonical)

    points = set()
    for combo in itertools.product(*grid.values()):
        points.add(tuple(sorted(zip(fields, combo))))

    rows = []
    for point in sorted(points):
        hp = replace(base, **dict(point))
        records = [
            engine.annotate(doc.text, language=doc.language, hp=hp).to_record()
            for doc in validation
        ]
        rows.append((hp, evaluate(records, validation)))
    best_hp, _ = min(
        rows,
        key=lambda row: (
            -row[1].f1,
            -row[1].accuracy,
            row[0].nil_margin,
            _hp_sort_key(row[0]),
        ),
    )
    return SweepResult(best=best_hp, rows=tuple(rows))


def sweep_table(result: SweepResult) -> str:
    """The sweep report as a tab-separated table, one row per grid point."""
    header = [
        HYPERPARAMETER_WIRE_NAMES[f]
        for f in ("easy_nil_threshold", "easy_prior_threshold", "nil_margin", "window")
    ] + ["tp", "fp", "fn", "tn", "precision", "recall", "f1", "accuracy"]
    lines = ["\t".join(header)]
    for hp, metrics in result.rows:
        lines.append(
            "\t".join(
                [
                    f"{hp.easy_nil_threshold:g}",
                    f"{hp.easy_prior_threshold:g}",
                    f"{hp.nil_margin:g}",
                    str(hp.window),
                    str(metrics.tp),
                    str(metrics.fp),
                    str(metrics.fn),
                    str(metrics.tn),
                    f"{metrics.precision:.6f}",
                    f"{metrics.recall:.6f}",
                    f"{metrics.f1:.6f}",
                    f"{metrics.accuracy:.6f}",
                ]
            )
        )
    return "\n".join(lines)
