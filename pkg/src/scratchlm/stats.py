"""Rank statistics used by the evaluation harness.

Pure-Python implementations so the exact variant is pinned: Mann-Whitney U
with midrank tie handling and a tie-corrected normal approximation (no
continuity correction unless asked), and the Vargha-Delaney probability of
superiority.
"""

from __future__ import annotations

import math
from typing import Sequence

from .errors import DegenerateSample

ALTERNATIVES = ("two-sided", "greater", "less")


def _rankdata(values: Sequence[float]) -> list[float]:
    """Midranks: tied values share the mean of the ranks they occupy."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        midrank = (i + j) / 2.0 + 1.0
        for idx in order[i:j + 1]:
            ranks[idx] = midrank
        i = j + 1
    return ranks


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(a: Sequence[float], b: Sequence[float],
                   alternative: str = "two-sided",
                   continuity: bool = False) -> tuple[float, float]:
    """Rank-sum U for sample ``a`` and its normal-approximation p-value.

    U counts the pairs where an ``a`` element beats a ``b`` element, ties at
    half weight.  The variance uses the standard tie correction; when all
    values tie the test is uninformative and p is 1.
    """
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise DegenerateSample("both samples must be nonempty")

    pooled = list(a) + list(b)
    ranks = _rankdata(pooled)
    r1 = sum(ranks[:n1])
    u = r1 - n1 * (n1 + 1) / 2.0  # pairs won by a, ties half

    n = n1 + n2
    tie_term = 0.0
    seen: dict[float, int] = {}
    for v in pooled:
        seen[v] = seen.get(v, 0) + 1
    for t in seen.values():
        tie_term += t ** 3 - t
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0:
        return u, 1.0

    mean = n1 * n2 / 2.0
    sd = math.sqrt(variance)
    cc = 0.5 if continuity else 0.0
    if alternative == "two-sided":
        z = (abs(u - mean) - cc) / sd
        p = min(1.0, 2.0 * _normal_sf(max(z, 0.0)))
    elif alternative == "greater":
        z = (u - mean - cc) / sd
        p = _normal_sf(z)
    else:
        z = (u - mean + cc) / sd
        p = 1.0 - _normal_sf(z)
    return u, min(1.0, max(0.0, p))


def vargha_delaney_a(a: Sequence[float], b: Sequence[float]) -> float:
    """Probability of superiority: (wins + ties/2) / (|a|*|b|).

    Computed through the rank-sum identity, which avoids the quadratic pair
    loop while giving exactly the pairwise value.
    """
    m, n = len(a), len(b)
    if m == 0 or n == 0:
        raise DegenerateSample("both samples must be nonempty")
    ranks = _rankdata(list(a) + list(b))
    r1 = sum(ranks[:m])
    return (r1 - m * (m + 1) / 2.0) / (m * n)
