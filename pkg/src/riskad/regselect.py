"""Regularization strength that keeps the linear rAD objective nonnegative.

For a linear scorer ``g(x) = <w, x>`` the unbiased rAD objective contains the
negative term ``-a pi_n R_n^+``. Choosing ``lambda`` at least as large as the
bounds below makes ``objective(w) >= 0`` for every ``w``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .estimators import Estimator, RiskConfig, ScoreBatch, risk
from .exceptions import ConfigError, DomainError
from .losses import LossSpec, get_loss


class RegKind(str, enum.Enum):
    L2 = "l2"
    L1 = "l1"


@dataclass(frozen=True)
class RegChoice:
    kind: RegKind = RegKind.L2
    lam: float = 0.0
    c: float = 1.0  # max 2-norm (L2) or max inf-norm (L1) of the negative rows

    def __post_init__(self):
        object.__setattr__(self, "kind", RegKind(self.kind))
        if self.lam < 0:
            raise ConfigError("lambda must be nonnegative")

    def penalty(self, w: np.ndarray) -> float:
        if self.kind is RegKind.L2:
            return self.lam * float(w @ w)
        return self.lam * float(np.abs(w).sum())

    def penalty_grad(self, w: np.ndarray) -> np.ndarray:
        if self.kind is RegKind.L2:
            return 2.0 * self.lam * w
        return self.lam * np.sign(w)


@dataclass(frozen=True)
class NormConstants:
    c: float
    c_inf: float


def data_norm_constants(negative_features) -> NormConstants:
    x = np.atleast_2d(np.asarray(negative_features, dtype=float))
    if x.shape[0] == 0:
        raise DomainError("need at least one negative row")
    return NormConstants(
        c=float(np.linalg.norm(x, axis=1).max()),
        c_inf=float(np.abs(x).max(axis=1).max()),
    )


def _check_a(a: float) -> None:
    if not 0.0 < a < 1.0:
        raise ConfigError(f"a must lie in (0, 1), got {a}")


def lambda_min_l2(a: float, loss, pi_n: float, c: float) -> float:
    """Smallest ``lambda`` for ``R(w) = ||w||_2^2``."""
    _check_a(a)
    loss = get_loss(loss)
    slope = (1 - a) * loss.b2 + a * loss.b1
    return slope**2 * pi_n * c**2 / (4 * (1 - a) * loss.b2 * loss.b3)


def lambda_min_l1(a: float, loss, pi_n: float, c_inf: float) -> float:
    """Smallest ``lambda`` for ``R(w) = ||w||_1``.

    Two forms of this bound are in circulation, differing only in whether the
    ``(1 - a) b2`` term carries a factor ``b3``. The larger of the two is
    returned; it is sufficient under either reading.
    """
    _check_a(a)
    loss = get_loss(loss)
    with_b3 = (1 - a) * loss.b2 * loss.b3 + a * loss.b1
    without_b3 = (1 - a) * loss.b2 + a * loss.b1
    return c_inf * max(with_b3, without_b3) * pi_n


def auto_reg(kind, a: float, loss, pi_n: float, negative_features) -> RegChoice:
    """Build a :class:`RegChoice` with the smallest safe ``lambda``."""
    kind = RegKind(kind)
    consts = data_norm_constants(negative_features)
    if kind is RegKind.L2:
        return RegChoice(kind, lambda_min_l2(a, loss, pi_n, consts.c), consts.c)
    return RegChoice(kind, lambda_min_l1(a, loss, pi_n, consts.c_inf), consts.c_inf)


def linear_objective(w, xp, xn, xu, loss, config: RiskConfig, reg: RegChoice) -> float:
    """Unbiased rAD risk of ``g(x) = <w, x>`` plus the penalty."""
    w = np.asarray(w, dtype=float)
    batch = ScoreBatch(xp @ w, xn @ w, xu @ w)
    cfg = RiskConfig(config.a, config.priors, Estimator.RAD_UNBIASED)
    return risk(batch, loss, cfg) + reg.penalty(w)


def verify_nonneg_objective(w, split, loss, config: RiskConfig, reg: RegChoice,
                            tol: float = 1e-9) -> bool:
    """True iff the penalized linear rAD objective at ``w`` is >= ``-tol``.

    ``split`` is anything with ``P``, ``N`` and ``U`` feature matrices.
    """
    value = linear_objective(w, split.P, split.N, split.U, loss, config, reg)
    return value >= -tol


def negative_part_lower_bound(scores_n, loss: LossSpec, a: float, pi_n: float) -> tuple[float, float]:
    """Return ``(lhs, rhs)`` of the pointwise lower bound on the negative terms.

    ``lhs = pi_n R_n^- - a pi_n R_n^+`` and
    ``rhs = (1-a) pi_n b2 b3 - ((1-a) b2 + a b1) pi_n mean|g|``; ``lhs >= rhs``
    for any scores when the loss constants are valid.
    """
    s = np.asarray(scores_n, dtype=float)
    lhs = pi_n * float(np.mean(loss.phi(-s))) - a * pi_n * float(np.mean(loss.phi(s)))
    rhs = (1 - a) * pi_n * loss.b2 * loss.b3 - ((1 - a) * loss.b2 + a * loss.b1) * pi_n * float(
        np.mean(np.abs(s))
    )
    return lhs, rhs
