"""Rank-based comparison of many algorithms over a few instances.

Distribution quantiles and the asymptotic rank-sum test come from scipy;
small rank-sum samples are enumerated exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as _st

from .errors import EmptyInput, InvalidInput, InvalidParameter

EXACT_RANKSUM_LIMIT = 12


@dataclass(frozen=True)
class RankTable:
    """``ranks[i][j]`` is the rank of ``algorithms[j]`` on ``instances[i]``
    (1 is best, ties share the mid-rank)."""

    algorithms: tuple[str, ...]
    instances: tuple[str, ...]
    ranks: tuple[tuple[float, ...], ...]

    @property
    def k(self) -> int:
        return len(self.algorithms)

    @property
    def n(self) -> int:
        return len(self.instances)

    def average_ranks(self) -> dict[str, float]:
        arr = np.asarray(self.ranks, dtype=float)
        return {a: float(r) for a, r in zip(self.algorithms, arr.mean(axis=0))}

    def ordered(self) -> list[tuple[str, float]]:
        """Algorithms by ascending average rank, ties in listed order."""
        avg = self.average_ranks()
        return sorted(avg.items(), key=lambda kv: kv[1])


def mid_ranks(scores: Sequence[float], descending: bool = True) -> list[float]:
    """Rank positions 1..k with tied scores sharing their average rank."""
    x = np.asarray(scores, dtype=float)
    return list(_st.rankdata(-x if descending else x, method="average"))


def rank_table(counts: Mapping[tuple[str, str], float], algorithms: Sequence[str],
               instances: Sequence[str]) -> RankTable:
    """Rank ``algorithms`` per instance by descending score (e.g. feasible count)."""
    if not algorithms or not instances:
        raise EmptyInput("need at least one algorithm and one instance")
    rows = []
    for inst in instances:
        try:
            scores = [counts[(alg, inst)] for alg in algorithms]
        except KeyError as exc:
            raise InvalidInput(f"no result for algorithm {exc.args[0][0]!r} on {inst!r}") from None
        rows.append(tuple(float(r) for r in mid_ranks(scores)))
    return RankTable(tuple(algorithms), tuple(instances), tuple(rows))


def friedman_statistic(table: RankTable) -> float:
    k, n = table.k, table.n
    if k < 2 or n < 2:
        raise InvalidParameter(f"Friedman test needs k >= 2 and N >= 2, got k={k}, N={n}")
    r = np.asarray(table.ranks, dtype=float).mean(axis=0)
    return 12.0 * n / (k * (k + 1)) * (float(np.sum(r ** 2)) - k * (k + 1) ** 2 / 4.0)


def iman_davenport(chi2: float, n: int, k: int) -> float:
    denom = n * (k - 1) - chi2
    if denom <= 0:
        raise InvalidParameter(f"N(k-1) = {n * (k - 1)} must exceed the Friedman statistic {chi2}")
    return (n - 1) * chi2 / denom


def critical_values(alpha: float, n: int, k: int) -> tuple[float, float]:
    """Upper ``alpha`` quantiles of chi-square (k-1 df) and F ((k-1), (k-1)(N-1) df)."""
    if not 0 < alpha < 1:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha}")
    if k < 2 or n < 2:
        raise InvalidParameter(f"need k >= 2 and N >= 2, got k={k}, N={n}")
    return float(_st.chi2.isf(alpha, k - 1)), float(_st.f.isf(alpha, k - 1, (k - 1) * (n - 1)))


# ---------------------------------------------------------------------- Holm

@dataclass(frozen=True)
class HolmRow:
    label: str
    z: float | None
    p: float
    i: int
    threshold: float
    rejected: bool


@dataclass(frozen=True)
class HolmReport:
    alpha: float
    rows: tuple[HolmRow, ...]

    @property
    def rejected(self) -> list[str]:
        return [r.label for r in self.rows if r.rejected]


def holm_thresholds(alpha: float, m: int) -> list[float]:
    """``alpha / i`` for i = 1..m."""
    return [alpha / i for i in range(1, m + 1)]


def holm_test(pvalues: Sequence[tuple[str, float]] | Mapping[str, float], alpha: float = 0.05,
              z: Mapping[str, float] | None = None) -> HolmReport:
    """Step-down Holm procedure.

    Hypotheses are sorted by ascending p. The smallest is tested against
    ``alpha / m``, the next against ``alpha / (m - 1)`` and so on; the first
    retained hypothesis stops the procedure and every later one is retained
    too. Each row carries its divisor ``i`` so that the largest p-value sits
    at ``i = 1``.
    """
    if not 0 < alpha < 1:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha}")
    items = list(pvalues.items()) if isinstance(pvalues, Mapping) else list(pvalues)
    for label, p in items:
        if not 0.0 <= p <= 1.0:
            raise InvalidParameter(f"p-value for {label!r} outside [0, 1]: {p}")
    m = len(items)
    order = sorted(range(m), key=lambda j: items[j][1])
    rows = []
    going = True
    for pos, j in enumerate(order):
        label, p = items[j]
        i = m - pos
        thr = alpha / i
        going = going and p <= thr
        rows.append(HolmRow(label, None if z is None else z.get(label), p, i, thr, going))
    return HolmReport(alpha, tuple(rows))


def control_comparison(table: RankTable, control: str | None = None,
                       alpha: float = 0.05) -> HolmReport:
    """Holm test of every algorithm against the control (by default the best
    average rank) using z = (R_j - R_0) / sqrt(k(k+1) / 6N)."""
    avg = table.average_ranks()
    if control is None:
        control = table.ordered()[0][0]
    if control not in avg:
        raise InvalidInput(f"control {control!r} is not in the rank table")
    se = math.sqrt(table.k * (table.k + 1) / (6.0 * table.n))
    zs = {a: (r - avg[control]) / se for a, r in avg.items() if a != control}
    ps = {a: float(_st.norm.sf(v)) for a, v in zs.items()}
    return holm_test(ps, alpha, zs)


# ------------------------------------------------------------------ rank-sum

def ranksum_test(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided Wilcoxon rank-sum p-value.

    Exact by enumeration when the pooled size is at most 12, otherwise the
    tie-corrected normal approximation.
    """
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    if not a or not b:
        raise EmptyInput("both samples must be non-empty")
    n1, n2 = len(a), len(b)
    pooled = np.asarray(a + b)
    if np.all(pooled == pooled[0]):
        return 1.0
    if n1 + n2 <= EXACT_RANKSUM_LIMIT:
        ranks = _st.rankdata(pooled)
        centre = n1 * (n1 + n2 + 1) / 2.0
        observed = abs(ranks[:n1].sum() - centre)
        extreme = total = 0
        for combo in itertools.combinations(range(n1 + n2), n1):
            total += 1
            if abs(ranks[list(combo)].sum() - centre) >= observed - 1e-9:
                extreme += 1
        return extreme / total
    res = _st.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True)
    return float(res.pvalue)
