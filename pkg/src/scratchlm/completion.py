"""Ranked next-block suggestion from a fitted n-gram model.

Two rules shape the ranking beyond raw probabilities: the structural markers
and the procedure-definition token are never suggested (definitions are
created through a dialog, not dragged), and when the model's best remaining
candidate is END_SCRIPT the whole result is replaced by suggestions for a new
first block, i.e. the completion for a script-start context.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .ngram import KneserNeyModel
from .vocab import Token, Vocabulary


@dataclass(frozen=True)
class Suggestion:
    """One candidate next block with its model probability."""

    token: Token
    probability: float


@dataclass(frozen=True)
class PredictionRecord:
    """One evaluated completion site: context, truth, ranked suggestions."""

    context: tuple[int, ...]
    truth: int
    suggestions: tuple[tuple[int, float], ...]

    def hit(self, x: int) -> bool:
        return any(token == self.truth for token, _ in self.suggestions[:x])


@dataclass
class EvalResult:
    """batch_evaluate output: records plus the skipped-position tally."""

    records: list[PredictionRecord]
    end_positions: int = 0
    definition_positions: int = 0


def extract_context(stream, position: int, n: int) -> list[int]:
    """The up-to-(n-1) tokens preceding ``position`` in the stream."""
    tokens = stream.tokens if hasattr(stream, "tokens") else stream
    if not 0 <= position <= len(tokens):
        raise IndexError(f"position {position} outside stream of length {len(tokens)}")
    lo = max(0, position - (n - 1))
    return list(tokens[lo:position])


def _ranked_ids(model: KneserNeyModel, context: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    dist = model.prob_dist(context)
    order = np.argsort(-dist, kind="stable")  # ties fall back to ascending id
    return order, dist


def complete(model: KneserNeyModel, context: Sequence[int], x: int,
             vocab: Vocabulary | None = None) -> list[Suggestion]:
    """Top-x suggestions for the local context, exclusion rules applied."""
    if x < 1:
        raise ValueError("x must be >= 1")
    vocab = vocab or Vocabulary.default()
    excluded = {vocab.procedure_def, vocab.begin_script,
                vocab.begin_sprite, vocab.end_sprite}

    order, dist = _ranked_ids(model, context)
    candidates = [t for t in order.tolist() if t not in excluded]
    if candidates and candidates[0] == vocab.end_script:
        # An end-of-script prediction is useless to a user; suggest a new
        # first block instead.
        order, dist = _ranked_ids(model, [vocab.begin_script])
        candidates = [t for t in order.tolist() if t not in excluded]
    picks = [t for t in candidates if t != vocab.end_script][:x]
    return [Suggestion(vocab.token(t), float(dist[t])) for t in picks]


def batch_evaluate(model: KneserNeyModel, streams: Iterable,
                   x_values: Sequence[int],
                   vocab: Vocabulary | None = None) -> EvalResult:
    """Evaluate every predictable position of the given script streams.

    Predictable positions are those whose true token is a concrete block;
    procedure-definition hats are skipped as targets (their token still feeds
    neighboring contexts) and so are the structural markers.  Positions whose
    truth is END_SCRIPT are tallied separately so either accuracy convention
    can be computed.
    """
    vocab = vocab or Vocabulary.default()
    max_x = max(x_values)
    result = EvalResult(records=[])
    for stream in streams:
        tokens = stream.tokens if hasattr(stream, "tokens") else stream
        for position, truth in enumerate(tokens):
            if truth == vocab.end_script:
                result.end_positions += 1
                continue
            if truth == vocab.procedure_def:
                result.definition_positions += 1
                continue
            if vocab.is_marker(truth):
                continue
            context = extract_context(tokens, position, model.order)
            suggestions = complete(model, context, max_x, vocab)
            result.records.append(PredictionRecord(
                context=tuple(context), truth=truth,
                suggestions=tuple((s.token.id, s.probability) for s in suggestions)))
    return result


def write_prediction_records(records: Iterable[PredictionRecord], fh: IO[str]) -> int:
    """Line-delimited record schema shared with other completion backends."""
    count = 0
    for record in records:
        fh.write(json.dumps({
            "context": list(record.context),
            "truth": record.truth,
            "suggestions": [[t, p] for t, p in record.suggestions],
        }, separators=(",", ":")) + "\n")
        count += 1
    return count


def read_prediction_records(fh: IO[str]) -> list[PredictionRecord]:
    records = []
    for line in fh:
        if not line.strip():
            continue
        doc = json.loads(line)
        records.append(PredictionRecord(
            context=tuple(doc["context"]), truth=doc["truth"],
            suggestions=tuple((t, p) for t, p in doc["suggestions"])))
    return records
