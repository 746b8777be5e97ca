"""Ranking of least-probable token windows as suspected bugs.

A reference model (order 3 by default) is trained on known-good solutions;
every sliding window over a student program's reachable scripts is scored
with the chain rule and the bottom k are reported.  Loose scripts - code not
rooted at an event handler or procedure definition - never executes and is
excluded up front.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from sklearn.base import BaseEstimator

from .ngram import KneserNeyModel
from .tokenizer import TokenizedProject
from .vocab import Vocabulary


@dataclass(frozen=True)
class WindowLocation:
    sprite: str
    script: int
    offset: int


@dataclass(frozen=True)
class SuspiciousSequence:
    """A fixed-length token window with its score and source anchor."""

    tokens: tuple[int, ...]
    logprob: float
    location: WindowLocation
    block_ids: tuple[str | None, ...] = ()


@dataclass
class BugReport:
    """Bottom-k windows, ascending log-probability."""

    project_id: str
    length: int
    sequences: list[SuspiciousSequence]


EVALUATED_LENGTHS = range(3, 7)


def extract_sequences(project: TokenizedProject, length: int,
                      allow_short: bool = False) -> list[SuspiciousSequence]:
    """All sliding windows over the reachable scripts, markers included.

    Scripts shorter than the window yield their full stream as one shorter
    candidate only when ``allow_short`` is set.  Scores are filled in by
    rank_suspicious; candidates carry a placeholder of 0.0.
    """
    if length < 1:
        raise ValueError("window length must be >= 1")
    if length not in EVALUATED_LENGTHS:
        warnings.warn(f"window length {length} outside the evaluated range "
                      f"3..6", stacklevel=2)
    candidates = []
    for sprite, streams in project.sprites:
        for script_index, stream in enumerate(streams):
            if not stream.reachable:
                continue
            tokens = stream.tokens
            if len(tokens) < length:
                if allow_short:
                    candidates.append(_window(stream, sprite, script_index, 0,
                                              len(tokens)))
                continue
            for offset in range(len(tokens) - length + 1):
                candidates.append(_window(stream, sprite, script_index, offset,
                                          length))
    return candidates


def _window(stream, sprite: str, script_index: int, offset: int,
            length: int) -> SuspiciousSequence:
    return SuspiciousSequence(
        tokens=tuple(stream.tokens[offset:offset + length]),
        logprob=0.0,
        location=WindowLocation(sprite, script_index, offset),
        block_ids=tuple(loc.block_id
                        for loc in stream.locations[offset:offset + length]),
    )


def rank_suspicious(model: KneserNeyModel,
                    candidates: Sequence[SuspiciousSequence], k: int = 10,
                    project_id: str = "",
                    length: int | None = None) -> BugReport:
    """Score every candidate and keep the k least probable.

    Ties are broken by source location (sprite, script, offset) so reports
    are deterministic.  No candidates simply gives an empty report.
    """
    scored = [
        SuspiciousSequence(c.tokens, model.sequence_logprob(c.tokens),
                           c.location, c.block_ids)
        for c in candidates
    ]
    scored.sort(key=lambda s: (s.logprob, s.location.sprite,
                               s.location.script, s.location.offset))
    if length is None:
        length = len(candidates[0].tokens) if candidates else 0
    return BugReport(project_id=project_id, length=length, sequences=scored[:k])


def train_reference_model(references: Iterable[TokenizedProject], order: int = 3,
                          vocab: Vocabulary | None = None) -> KneserNeyModel:
    """Fit the reference model on every reachable script of the references.

    No token filtering is applied; the closed vocabulary plus smoothing keeps
    every block scorable, including ones absent from the references.
    """
    vocab = vocab or Vocabulary.default()
    streams = []
    for project in references:
        streams.extend(project.streams(reachable_only=True))
    return KneserNeyModel(order=order, vocab_size=vocab.size).fit(streams)


class BugFinder(BaseEstimator):
    """Estimator wrapper: fit on reference projects, report on a program."""

    def __init__(self, order: int = 3, length: int = 4, bottom: int = 10,
                 allow_short: bool = False):
        self.order = order
        self.length = length
        self.bottom = bottom
        self.allow_short = allow_short

    def fit(self, X: Iterable[TokenizedProject], y=None) -> "BugFinder":
        self.model_ = train_reference_model(X, order=self.order)
        return self

    def report(self, project: TokenizedProject) -> BugReport:
        candidates = extract_sequences(project, self.length,
                                       allow_short=self.allow_short)
        return rank_suspicious(self.model_, candidates, k=self.bottom,
                               project_id=project.meta.project_id,
                               length=self.length)

    def predict(self, X: Iterable[TokenizedProject]) -> list[BugReport]:
        return [self.report(project) for project in X]


def report_to_text(report: BugReport, vocab: Vocabulary | None = None) -> str:
    """Human-readable ranking table."""
    vocab = vocab or Vocabulary.default()
    lines = [f"program {report.project_id or '<unnamed>'}: "
             f"{len(report.sequences)} windows of length {report.length}",
             f"{'rank':>4}  {'logprob':>10}  {'location':<28}  tokens"]
    for rank, seq in enumerate(report.sequences, start=1):
        loc = f"{seq.location.sprite}/script {seq.location.script}" \
              f" @{seq.location.offset}"
        names = " ".join(vocab.name(t) for t in seq.tokens)
        lines.append(f"{rank:>4}  {seq.logprob:>10.4f}  {loc:<28}  {names}")
    return "\n".join(lines)


def write_report_records(report: BugReport, fh: IO[str]) -> int:
    """Line-delimited report records for downstream tooling."""
    count = 0
    for rank, seq in enumerate(report.sequences, start=1):
        fh.write(json.dumps({
            "project": report.project_id,
            "rank": rank,
            "logprob": seq.logprob,
            "sprite": seq.location.sprite,
            "script": seq.location.script,
            "offset": seq.location.offset,
            "tokens": list(seq.tokens),
            "blocks": [b for b in seq.block_ids if b is not None],
        }, separators=(",", ":")) + "\n")
        count += 1
    return count
