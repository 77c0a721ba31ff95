"""Score diagnostics: rank correlations and distribution summaries."""

import math
from dataclasses import dataclass

import numpy as np

from .attributes import AttributeScores
from .errors import DegenerateDataError

ATTRIBUTE_NAMES = (
    "specificity",
    "repetitiveness",
    "query_relatedness",
    "continuity",
    "model_confidence",
)

# report row order for the pairwise correlation table
_TABLE_ATTRS = ("specificity", "repetitiveness", "query_relatedness",
                "model_confidence", "continuity")


def _count_inversions(values: list) -> int:
    # merge sort counting strictly-decreasing pairs
    arr = list(values)
    buf = arr[:]

    def sort(lo: int, hi: int) -> int:
        if hi - lo <= 1:
            return 0
        mid = (lo + hi) // 2
        inv = sort(lo, mid) + sort(mid, hi)
        i, j, k = lo, mid, lo
        while i < mid and j < hi:
            if arr[j] < arr[i]:
                inv += mid - i
                buf[k] = arr[j]
                j += 1
            else:
                buf[k] = arr[i]
                i += 1
            k += 1
        buf[k:hi] = arr[i:mid] if i < mid else arr[j:hi]
        arr[lo:hi] = buf[lo:hi]
        return inv

    return sort(0, len(arr))


def _tie_term(values: list) -> int:
    values = sorted(values)
    total = 0
    i = 0
    while i < len(values):
        j = i
        while j < len(values) and values[j] == values[i]:
            j += 1
        total += (j - i) * (j - i - 1) // 2
        i = j
    return total


def kendall_tau(x: list[float], y: list[float]) -> float:
    """Tie-corrected rank correlation in O(n log n).

    Ties are handled with the tau-b correction. Raises on length
    mismatch, fewer than two points, or zero variance in either list.
    """
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise DegenerateDataError("kendall_tau needs at least 2 points")

    pairs = sorted(zip(x, y))
    ties_x = 0
    ties_joint = 0
    i = 0
    while i < n:
        j = i
        while j < n and pairs[j][0] == pairs[i][0]:
            j += 1
        ties_x += (j - i) * (j - i - 1) // 2
        k = i
        while k < j:
            m = k
            while m < j and pairs[m][1] == pairs[k][1]:
                m += 1
            ties_joint += (m - k) * (m - k - 1) // 2
            k = m
        i = j

    ys = [p[1] for p in pairs]
    swaps = _count_inversions(ys)
    ties_y = _tie_term(ys)
    total = n * (n - 1) // 2
    if ties_x == total or ties_y == total:
        raise DegenerateDataError("kendall_tau undefined for a constant list")
    numerator = total - ties_x - ties_y + ties_joint - 2 * swaps
    return numerator / math.sqrt((total - ties_x) * (total - ties_y))


@dataclass(frozen=True)
class TauEntry:
    attribute_a: str
    attribute_b: str
    tau: float
    n: int


def attribute_values(scores: list[AttributeScores], attribute: str) -> list[float | None]:
    if attribute not in ATTRIBUTE_NAMES:
        raise ValueError(f"unknown attribute {attribute!r}")
    return [getattr(s, attribute) for s in scores]


def correlation_table(scores: list[AttributeScores]) -> list[TauEntry]:
    """All 10 pairwise taus; continuity pairs use only samples that have it."""
    columns = {a: attribute_values(scores, a) for a in _TABLE_ATTRS}
    entries = []
    for i, a in enumerate(_TABLE_ATTRS):
        for b in _TABLE_ATTRS[i + 1:]:
            xs, ys = [], []
            for va, vb in zip(columns[a], columns[b]):
                if va is None or vb is None:
                    continue
                xs.append(va)
                ys.append(vb)
            entries.append(TauEntry(a, b, kendall_tau(xs, ys), len(xs)))
    return entries


@dataclass(frozen=True)
class DistributionSummary:
    attribute: str
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    mean: float
    outlier_count: int


def summarize(attribute: str, values: list[float]) -> DistributionSummary:
    """Five-number summary plus mean and a 1.5 IQR whisker outlier count."""
    if not values:
        raise DegenerateDataError(f"no values to summarize for {attribute}")
    arr = np.asarray(values, dtype=np.float64)
    q1, median, q3 = (float(v) for v in np.percentile(arr, [25, 50, 75]))
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    outliers = int(np.count_nonzero((arr < lo) | (arr > hi)))
    return DistributionSummary(
        attribute=attribute,
        minimum=float(arr.min()),
        q1=q1,
        median=median,
        q3=q3,
        maximum=float(arr.max()),
        mean=float(arr.mean()),
        outlier_count=outliers,
    )


def histogram(values: list[float], bins: int = 20) -> tuple[list[int], list[float]]:
    counts, edges = np.histogram(np.asarray(values, dtype=np.float64), bins=bins)
    return [int(c) for c in counts], [float(e) for e in edges]


def normalize_minmax(values: list[float]) -> list[float]:
    """Rescale to [0, 1]; raises when every value is identical."""
    lo, hi = min(values), max(values)
    if lo == hi:
        raise DegenerateDataError("min-max normalization undefined for a constant list")
    span = hi - lo
    return [(v - lo) / span for v in values]
