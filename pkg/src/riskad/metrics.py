"""AUC and per-trial aggregation."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .exceptions import RiskADError


class MetricError(RiskADError, ValueError):
    pass


def auc(scores, labels) -> float:
    """Probability that a normal (+1) point outscores an anomaly (-1), ties as 1/2.

    Uses the rank-sum form of the Mann-Whitney statistic with midranks.
    """
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.size != y.size:
        raise MetricError("scores and labels differ in length")
    if not np.all(np.isfinite(s)):
        raise MetricError("scores must be finite")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = int((y == -1).sum())
    if n_pos + n_neg != y.size:
        raise MetricError("labels must be +1 or -1")
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both classes")
    ranks = rankdata(s)  # average ranks, so ties count half
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_points(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """(fpr, tpr) at every distinct threshold, normal class as positive."""
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    distinct = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tp = np.cumsum(y == 1)[distinct]
    fp = np.cumsum(y == -1)[distinct]
    tpr = np.r_[0.0, tp / max(tp[-1], 1)]
    fpr = np.r_[0.0, fp / max(fp[-1], 1)]
    return fpr, tpr


@dataclass(frozen=True)
class TrialResult:
    dataset: str
    method: str
    loss: str
    a: float
    pi_p_e: float
    trial: int
    auc: float

    def __post_init__(self):
        if not 0.0 <= self.auc <= 1.0:
            raise MetricError(f"auc {self.auc} outside [0, 1]")

    def as_row(self) -> dict:
        return asdict(self)


def mean_se(values) -> tuple[float, float]:
    """Mean and standard error (sample std with n-1, divided by sqrt(n))."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise MetricError("standard error needs at least 2 values")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


@dataclass(frozen=True)
class Aggregate:
    dataset: str
    method: str
    loss: str
    a: float
    pi_p_e: float
    n_trials: int
    mean: float
    se: float

    def formatted(self) -> str:
        """``mean(SE x 100)``, the usual table layout."""
        return f"{self.mean:.3f}({100 * self.se:.2f})"


def aggregate(results) -> list[Aggregate]:
    """Group trial results by (dataset, method, loss, a, pi_p_e); keeps first-seen order."""
    groups: dict[tuple, list[float]] = defaultdict(list)
    for r in results:
        groups[(r.dataset, r.method, r.loss, r.a, r.pi_p_e)].append(r.auc)
    out = []
    for key, aucs in groups.items():
        m, se = mean_se(aucs)
        out.append(Aggregate(*key, len(aucs), m, se))
    return out
