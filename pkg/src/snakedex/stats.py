"""Rank-sum comparison of repeat results between two designs."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

__all__ = ["ComparisonReport", "mann_whitney_z", "Z_99_TWO_SIDED", "Z_99_ONE_SIDED"]

Z_99_TWO_SIDED = 2.576
Z_99_ONE_SIDED = 2.326


@dataclass
class ComparisonReport:
    label_a: str
    label_b: str
    samples_a: list
    samples_b: list
    U: float
    Z: float
    threshold: float
    significant: bool

    def to_dict(self):
        return asdict(self)


def mann_whitney_z(samples_a, samples_b, threshold=Z_99_TWO_SIDED, label_a="a", label_b="b"):
    """U statistic of ``a`` over ``b`` and its normal-approximation Z-score.

    ``U`` counts pairs with ``a > b`` (ties count one half, via midranks), so
    ``U = n1 * n2`` when every ``a`` exceeds every ``b``. No tie correction is
    applied to the variance. ``significant`` is ``Z > threshold``.
    """
    a = np.asarray(samples_a, dtype=np.float64).ravel()
    b = np.asarray(samples_b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both sample lists must be non-empty")
    n1, n2 = a.size, b.size
    if n1 < 2 or n2 < 2:
        raise ValueError(f"need at least 2 samples per group, got {n1} and {n2}")
    ranks = rankdata(np.concatenate([a, b]))
    U = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    Z = (U - n1 * n2 / 2.0) / math.sqrt(n1 * n2 * (n1 + n2 + 1) / 12.0)
    return ComparisonReport(
        label_a=label_a,
        label_b=label_b,
        samples_a=[float(v) for v in a],
        samples_b=[float(v) for v in b],
        U=U,
        Z=Z,
        threshold=float(threshold),
        significant=bool(Z > threshold),
    )
