"""Order-n count tables and interpolated modified Kneser-Ney smoothing.

The smoothing follows the three-discount formulation: the highest level
(full-length contexts) discounts raw occurrence counts, every lower level -
which is also where a query with a shorter context enters the chain -
discounts continuation counts (the number of distinct one-token left
extensions), and the unigram level is interpolated with the uniform
distribution over the closed vocabulary so that every token keeps strictly
positive probability under every context.

Two details are worth spelling out because they decide exact numbers:

* Continuation counts of a k-gram are taken over raw (k+1)-gram occurrences.
  A k-gram that is never preceded by anything (in these streams only grams
  starting with BEGIN_SCRIPT) keeps its raw count instead for k >= 2, since a
  left extension can never be observed for it.  Unigrams keep pure
  continuation counts, which leaves sequence-initial markers only the uniform
  floor - they are never worth predicting.
* Each level's denominator is the sum of that level's counts over all
  continuations of the context, and a context with a zero denominator passes
  the query through to the next-lower level unchanged.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import zlib
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .errors import (CorruptModel, EmptyCorpus, FormatVersionMismatch,
                     OrderMismatch, UnknownToken)

FALLBACK_DISCOUNT = 0.5


def _as_ids(stream) -> Sequence[int]:
    return stream.tokens if hasattr(stream, "tokens") else stream


class NgramCounts:
    """Raw occurrence tables for every window length 1..order.

    Windows never cross the boundaries of one stream; the structural markers
    are ordinary tokens here.  Continuation statistics are derived lazily and
    recomputed after merges, because distinct-extension counts do not add.
    """

    def __init__(self, order: int, vocab_size: int):
        if order < 1:
            raise ValueError("order must be >= 1")
        if vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        self.order = order
        self.vocab_size = vocab_size
        self.tables: dict[int, Counter] = {k: Counter() for k in range(1, order + 1)}
        self.total_tokens = 0
        self._adjusted: dict[int, dict] | None = None

    def add_stream(self, stream) -> None:
        ids = _as_ids(stream)
        for token in ids:
            if not 0 <= token < self.vocab_size:
                raise UnknownToken(f"token id {token!r} outside vocabulary of "
                                   f"size {self.vocab_size}")
        self.total_tokens += len(ids)
        ids = tuple(ids)
        for k in range(1, self.order + 1):
            table = self.tables[k]
            for i in range(len(ids) - k + 1):
                table[ids[i:i + k]] += 1
        self._adjusted = None

    def adjusted_table(self, k: int) -> Mapping[tuple, int]:
        """Counts actually discounted at level k (raw at the top level,
        continuation counts below)."""
        if self._adjusted is None:
            self._adjusted = _build_adjusted(self)
        return self._adjusted[k]

    def count_of_counts(self, k: int) -> tuple[int, int, int, int]:
        """(n1, n2, n3, n4) over the adjusted counts at level k."""
        freq = Counter(self.adjusted_table(k).values())
        return freq.get(1, 0), freq.get(2, 0), freq.get(3, 0), freq.get(4, 0)

    def truncated(self, order: int) -> "NgramCounts":
        """A lower-order view; raw tables up to ``order`` are identical to
        counting at that order directly."""
        if order > self.order:
            raise OrderMismatch(f"cannot raise order {self.order} to {order}")
        out = NgramCounts(order, self.vocab_size)
        for k in range(1, order + 1):
            out.tables[k] = Counter(self.tables[k])
        out.total_tokens = self.total_tokens
        return out


def _build_adjusted(counts: NgramCounts) -> dict[int, dict]:
    n = counts.order
    adjusted: dict[int, dict] = {n: dict(counts.tables[n])}
    for k in range(n - 1, 0, -1):
        extensions: dict[tuple, set] = defaultdict(set)
        for gram in counts.tables[k + 1]:
            extensions[gram[1:]].add(gram[0])
        table = {}
        for gram, raw in counts.tables[k].items():
            left = len(extensions.get(gram, ()))
            if left:
                table[gram] = left
            elif k >= 2:
                # Never preceded (sequence-initial grams): keep raw counts.
                table[gram] = raw
        adjusted[k] = table
    return adjusted


def count_ngrams(streams: Iterable, order: int, vocab_size: int) -> NgramCounts:
    """Count every window of length 1..order within each stream."""
    counts = NgramCounts(order, vocab_size)
    for stream in streams:
        counts.add_stream(stream)
    if counts.total_tokens == 0:
        raise EmptyCorpus("no tokens seen while counting n-grams")
    return counts


def merge_counts(a: NgramCounts, b: NgramCounts) -> NgramCounts:
    """Pointwise sum of raw tables; continuation statistics are recomputed."""
    if a.order != b.order or a.vocab_size != b.vocab_size:
        raise OrderMismatch(
            f"cannot merge counts of order/vocab ({a.order},{a.vocab_size}) "
            f"and ({b.order},{b.vocab_size})")
    out = NgramCounts(a.order, a.vocab_size)
    for k in range(1, a.order + 1):
        out.tables[k] = Counter(a.tables[k])
        out.tables[k].update(b.tables[k])
    out.total_tokens = a.total_tokens + b.total_tokens
    return out


@dataclass(frozen=True)
class DiscountTriple:
    """Discounts for counts of one, two, and three-or-more."""

    d1: float
    d2: float
    d3plus: float

    def for_count(self, count: int) -> float:
        if count <= 0:
            return 0.0
        if count == 1:
            return self.d1
        if count == 2:
            return self.d2
        return self.d3plus


@dataclass(frozen=True)
class Discounts:
    """Fitted discount triples per level, unigrams included."""

    by_order: Mapping[int, DiscountTriple]

    def for_order(self, k: int) -> DiscountTriple:
        return self.by_order[k]


def fit_discounts(counts: NgramCounts) -> Discounts:
    """Estimate the discount triples from count-of-count statistics.

    With n_r the number of level-k grams of adjusted count exactly r and
    Y = n1/(n1+2*n2): D1 = 1 - 2*Y*n2/n1, D2 = 2 - 3*Y*n3/n2,
    D3+ = 3 - 4*Y*n4/n3, clamped at zero.  Whenever any of n1..n4 is zero the
    formulas degenerate and a fixed (0.5, 0.5, 0.5) triple is used, which
    keeps tiny training sets well-defined.
    """
    by_order = {}
    for k in range(1, counts.order + 1):
        n1, n2, n3, n4 = counts.count_of_counts(k)
        if 0 in (n1, n2, n3, n4):
            by_order[k] = DiscountTriple(FALLBACK_DISCOUNT, FALLBACK_DISCOUNT,
                                         FALLBACK_DISCOUNT)
            continue
        y = n1 / (n1 + 2.0 * n2)
        by_order[k] = DiscountTriple(
            max(1.0 - 2.0 * y * n2 / n1, 0.0),
            max(2.0 - 3.0 * y * n3 / n2, 0.0),
            max(3.0 - 4.0 * y * n4 / n3, 0.0),
        )
    return Discounts(by_order)


class KneserNeyModel(BaseEstimator):
    """Smoothed n-gram model over token-id sequences.

    Parameters follow the estimator convention: ``fit`` consumes an iterable
    of token-id sequences (anything with a ``tokens`` attribute works too)
    and the fitted model is immutable and safe for concurrent queries.
    """

    def __init__(self, order: int = 4, vocab_size: int | None = None):
        self.order = order
        self.vocab_size = vocab_size

    def fit(self, X: Iterable, y=None) -> "KneserNeyModel":
        if self.vocab_size is None:
            raise ValueError("vocab_size must be set before fitting")
        counts = count_ngrams(X, self.order, self.vocab_size)
        return self._finalize(counts)

    @classmethod
    def from_counts(cls, counts: NgramCounts, order: int | None = None
                    ) -> "KneserNeyModel":
        if order is not None and order != counts.order:
            counts = counts.truncated(order)
        model = cls(order=counts.order, vocab_size=counts.vocab_size)
        return model._finalize(counts)

    def _finalize(self, counts: NgramCounts) -> "KneserNeyModel":
        self.counts_ = counts
        self.discounts_ = fit_discounts(counts)
        self._cont: dict[int, dict] = {}
        self._ctx_total: dict[int, dict] = {}
        self._ctx_stats: dict[int, dict] = {}
        for k in range(1, counts.order + 1):
            cont: dict[tuple, dict[int, int]] = defaultdict(dict)
            for gram, c in counts.adjusted_table(k).items():
                cont[gram[:-1]][gram[-1]] = c
            totals = {}
            stats = {}
            for ctx, words in cont.items():
                totals[ctx] = sum(words.values())
                n1 = n2 = n3p = 0
                for c in words.values():
                    if c == 1:
                        n1 += 1
                    elif c == 2:
                        n2 += 1
                    else:
                        n3p += 1
                stats[ctx] = (n1, n2, n3p)
            self._cont[k] = dict(cont)
            self._ctx_total[k] = totals
            self._ctx_stats[k] = stats
        return self

    def _check_fitted(self):
        if not hasattr(self, "counts_"):
            raise ValueError("model is not fitted")

    def _check_token(self, token: int):
        if not 0 <= token < self.vocab_size:
            raise UnknownToken(f"token id {token!r} outside vocabulary of size "
                               f"{self.vocab_size}")

    def _trim(self, context: Sequence[int]) -> tuple:
        context = tuple(context)
        for token in context:
            self._check_token(token)
        if len(context) > self.order - 1:
            context = context[len(context) - (self.order - 1):]
        return context

    def prob(self, context: Sequence[int], token: int) -> float:
        """Interpolated modified Kneser-Ney P(token | context)."""
        self._check_fitted()
        self._check_token(token)
        ctx = self._trim(context)

        def level_prob(level: int, ctx: tuple, w: int) -> float:
            if level == 0:
                return 1.0 / self.vocab_size
            total = self._ctx_total[level].get(ctx, 0)
            if total == 0:
                return level_prob(level - 1, ctx[1:], w)
            triple = self.discounts_.for_order(level)
            c = self._cont[level][ctx].get(w, 0)
            n1, n2, n3p = self._ctx_stats[level][ctx]
            gamma = (triple.d1 * n1 + triple.d2 * n2 + triple.d3plus * n3p) / total
            base = max(c - triple.for_count(c), 0.0) / total
            return base + gamma * level_prob(level - 1, ctx[1:], w)

        return level_prob(len(ctx) + 1, ctx, token)

    def prob_dist(self, context: Sequence[int]) -> np.ndarray:
        """The full conditional distribution over the vocabulary."""
        self._check_fitted()
        ctx = self._trim(context)
        dist = np.full(self.vocab_size, 1.0 / self.vocab_size)
        for level in range(1, len(ctx) + 2):
            sub = ctx[len(ctx) - level + 1:] if level > 1 else ()
            total = self._ctx_total[level].get(sub, 0)
            if total == 0:
                continue
            triple = self.discounts_.for_order(level)
            n1, n2, n3p = self._ctx_stats[level][sub]
            gamma = (triple.d1 * n1 + triple.d2 * n2 + triple.d3plus * n3p) / total
            dist = gamma * dist
            for w, c in self._cont[level][sub].items():
                dist[w] += max(c - triple.for_count(c), 0.0) / total
        return dist

    def sequence_logprob(self, tokens: Sequence[int]) -> float:
        """Natural-log probability of a token sequence under the chain rule,
        each factor conditioned on up to order-1 preceding tokens."""
        self._check_fitted()
        ids = list(_as_ids(tokens))
        if not ids:
            raise ValueError("sequence must have length >= 1")
        total = 0.0
        for i, token in enumerate(ids):
            context = ids[max(0, i - (self.order - 1)):i]
            total += math.log(self.prob(context, token))
        return total

    # -- persistence ---------------------------------------------------

    def save(self, sink: "IO[bytes] | str") -> None:
        save_model(self, sink)

    @classmethod
    def load(cls, source: "IO[bytes] | str") -> "KneserNeyModel":
        return load_model(source)


MODEL_MAGIC = b"SBNG"
MODEL_VERSION = 1
_HEADER = struct.Struct("<4sHHQ")  # magic, version, reserved, payload length


def save_model(model: KneserNeyModel, sink: "IO[bytes] | str") -> None:
    """Write the versioned binary container documented in docs/FORMATS.md."""
    model._check_fitted()
    counts = model.counts_
    tables = {
        str(k): sorted(([list(gram), c] for gram, c in counts.tables[k].items()))
        for k in range(1, counts.order + 1)
    }
    payload = json.dumps({
        "order": counts.order,
        "vocab_size": counts.vocab_size,
        "total_tokens": counts.total_tokens,
        "tables": tables,
    }, separators=(",", ":")).encode("utf-8")
    compressed = zlib.compress(payload, 9)
    digest = hashlib.sha256(compressed).digest()
    header = _HEADER.pack(MODEL_MAGIC, MODEL_VERSION, 0, len(compressed))

    if isinstance(sink, str):
        with open(sink, "wb") as fh:
            fh.write(header + digest + compressed)
    else:
        sink.write(header + digest + compressed)


def load_model(source: "IO[bytes] | str") -> KneserNeyModel:
    """Read a model container; the loaded model answers identical
    probabilities because all derived statistics are recomputed from the
    stored raw tables."""
    if isinstance(source, str):
        with open(source, "rb") as fh:
            blob = fh.read()
    else:
        blob = source.read()

    if len(blob) < _HEADER.size + 32:
        raise CorruptModel("file shorter than the fixed header")
    magic, version, _, length = _HEADER.unpack(blob[:_HEADER.size])
    if magic != MODEL_MAGIC:
        raise CorruptModel(f"bad magic {magic!r}")
    if version != MODEL_VERSION:
        raise FormatVersionMismatch(
            f"model format version {version}, supported: {MODEL_VERSION}")
    digest = blob[_HEADER.size:_HEADER.size + 32]
    compressed = blob[_HEADER.size + 32:]
    if len(compressed) != length:
        raise CorruptModel(f"payload length {len(compressed)} != declared {length}")
    if hashlib.sha256(compressed).digest() != digest:
        raise CorruptModel("payload digest mismatch")
    try:
        doc = json.loads(zlib.decompress(compressed))
        counts = NgramCounts(doc["order"], doc["vocab_size"])
        counts.total_tokens = doc["total_tokens"]
        for k_str, entries in doc["tables"].items():
            table = counts.tables[int(k_str)]
            for gram, c in entries:
                table[tuple(gram)] = c
    except (zlib.error, json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise CorruptModel(f"undecodable payload: {exc}") from None
    return KneserNeyModel.from_counts(counts)


def prob(model: KneserNeyModel, context: Sequence[int], token: int) -> float:
    return model.prob(context, token)


def sequence_logprob(model: KneserNeyModel, tokens: Sequence[int]) -> float:
    return model.sequence_logprob(tokens)
