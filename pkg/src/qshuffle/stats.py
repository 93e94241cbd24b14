"""Chi-square and distance helpers used by the experiment runner and the checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class TestResult:
    statistic: float
    pvalue: float
    dof: int


def histogram(values, d: int) -> np.ndarray:
    return np.bincount(np.asarray(values, dtype=np.int64).ravel(), minlength=d)[:d]


def chi_square_uniform(counts) -> TestResult:
    """Goodness of fit of ``counts`` to the uniform law on its cells."""
    counts = np.asarray(counts, dtype=float)
    res = stats.chisquare(counts)
    return TestResult(float(res.statistic), float(res.pvalue), counts.size - 1)


def chi_square_two_sample(counts_a, counts_b) -> TestResult:
    """Homogeneity test on a 2 x k table; cells empty in both samples are dropped."""
    table = np.vstack([np.asarray(counts_a, float), np.asarray(counts_b, float)])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return TestResult(0.0, 1.0, 0)
    stat, p, dof, _ = stats.chi2_contingency(table, correction=False)
    return TestResult(float(stat), float(p), int(dof))


def encode_rows(rows, d: int) -> np.ndarray:
    """Map each row of Z_d digits to a single cell index (big-endian base d)."""
    rows = np.asarray(rows, dtype=np.int64)
    weights = d ** np.arange(rows.shape[1] - 1, -1, -1, dtype=np.int64)
    return rows @ weights


def joint_counts(rows, d: int) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64)
    return np.bincount(encode_rows(rows, d), minlength=d ** rows.shape[1])


def total_variation(p, q) -> float:
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())
