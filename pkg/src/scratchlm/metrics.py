"""Completion and bug-finding evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .completion import PredictionRecord
from .errors import EmptyRecords, ZeroTotal
from .vocab import Vocabulary

GROUPINGS = ("category", "shape")


def topx_accuracy(records: Sequence[PredictionRecord], x: int) -> float:
    """Share of records whose truth is among the top-x suggestions."""
    if not records:
        raise EmptyRecords("no prediction records")
    hits = sum(1 for r in records if r.hit(x))
    return hits / len(records)


@dataclass(frozen=True)
class GroupAccuracy:
    """One row of a per-category or per-shape breakdown."""

    group: str
    occurrence_share: float
    accuracy: float
    count: int


def accuracy_by_group(records: Sequence[PredictionRecord], grouping: str,
                      x: int = 3,
                      vocab: Vocabulary | None = None) -> list[GroupAccuracy]:
    """Occurrence share and top-x accuracy grouped by the truth token's
    category or shape, sorted by ascending accuracy."""
    if grouping not in GROUPINGS:
        raise ValueError(f"grouping must be one of {GROUPINGS}")
    if not records:
        raise EmptyRecords("no prediction records")
    vocab = vocab or Vocabulary.default()

    totals: dict[str, int] = {}
    hits: dict[str, int] = {}
    for record in records:
        meta = vocab.metadata(record.truth)
        group = getattr(meta, grouping)
        totals[group] = totals.get(group, 0) + 1
        if record.hit(x):
            hits[group] = hits.get(group, 0) + 1
    n = len(records)
    rows = [
        GroupAccuracy(group=group, occurrence_share=count / n,
                      accuracy=hits.get(group, 0) / count, count=count)
        for group, count in totals.items()
    ]
    rows.sort(key=lambda row: (row.accuracy, row.group))
    return rows


def accuracy_grid(results_by_order: Mapping[int, Sequence[PredictionRecord]],
                  x_values: Sequence[int]) -> dict[int, dict[int, float]]:
    """Top-x accuracy per (order, x); the layout of the completion table."""
    return {
        order: {x: topx_accuracy(records, x) for x in x_values}
        for order, records in results_by_order.items()
    }


def percent_bugs_found(found: int, total: int) -> float:
    """100 * found / total."""
    if total < 1:
        raise ZeroTotal("total bug count must be >= 1")
    if not 0 <= found <= total:
        raise ValueError("found must be between 0 and total")
    return 100.0 * found / total


@dataclass(frozen=True)
class BugEvalRecord:
    """Per-program bug-finding metrics for bottom-k and random selections."""

    project_id: str
    precision_bottom: float
    precision_random: float
    bugs_found_bottom: float
    bugs_found_random: float
    total_bugs: int
    overlap: float = 0.0  # share of random windows also in the bottom-k
