"""Empirical risk estimators over precomputed decision-function scores.

All estimators consume a :class:`ScoreBatch` (scores of labeled positives,
labeled negatives and unlabeled points) so the same algebra serves the linear
and the neural trainers. :func:`risk_with_grad` additionally returns the
derivative of the estimate with respect to every score, which the trainers
chain through their models.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConditionError, ConfigError, DomainError, MissingSourceError
from .losses import LossSpec, get_loss

POS, NEG = 1.0, -1.0


@dataclass(frozen=True)
class ScoreBatch:
    scores_p: np.ndarray = field(default_factory=lambda: np.empty(0))
    scores_n: np.ndarray = field(default_factory=lambda: np.empty(0))
    scores_u: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        for name in ("scores_p", "scores_n", "scores_u"):
            arr = np.asarray(getattr(self, name), dtype=float).ravel()
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"{name} contains non-finite scores")
            object.__setattr__(self, name, arr)

    @property
    def n_p(self) -> int:
        return self.scores_p.size

    @property
    def n_n(self) -> int:
        return self.scores_n.size

    @property
    def n_u(self) -> int:
        return self.scores_u.size


@dataclass(frozen=True)
class Priors:
    """Class priors of the normal (positive) and anomalous (negative) class."""

    pi_p: float

    def __post_init__(self):
        if not 0.0 < self.pi_p < 1.0:
            raise ConfigError(f"pi_p must lie in (0, 1), got {self.pi_p}")

    @property
    def pi_n(self) -> float:
        return 1.0 - self.pi_p


class Estimator(str, enum.Enum):
    PN = "pn"
    PU_UNBIASED = "pu"
    PU_NONCONVEX = "pu-nonconvex"
    PU_CONVEX = "pu-convex"
    PU_NONNEG = "pu-nonneg"
    NU_NONCONVEX = "nu-nonconvex"
    NU_CONVEX = "nu-convex"
    RAD_UNBIASED = "rad-unbiased"
    RAD_NONNEG = "rad-nonneg"


@dataclass(frozen=True)
class RiskConfig:
    a: float = 0.1
    priors: Priors = Priors(0.8)
    estimator: Estimator = Estimator.RAD_UNBIASED

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ConfigError(f"a must lie in (0, 1), got {self.a}")
        object.__setattr__(self, "estimator", Estimator(self.estimator))


def _need(scores: np.ndarray, source: str) -> None:
    if scores.size == 0:
        raise MissingSourceError(f"estimator needs a non-empty {source} sample")


def partial_mean(scores, loss: LossSpec, y: float) -> float:
    """Average loss of ``scores`` against label ``y``."""
    scores = np.asarray(scores, dtype=float).ravel()
    _need(scores, "score")
    return float(np.mean(loss(scores, y)))


# Each _terms_* function returns (value, dp, dn, du): the estimate and its
# derivative with respect to each score vector.

def _mean_and_grad(loss: LossSpec, scores: np.ndarray, y: float, want_grad: bool = True):
    z = y * scores
    value = float(loss.phi(z).sum()) / scores.size
    if not want_grad:
        return value, 0.0
    return value, y * loss.dphi(z) / scores.size


def _zeros(batch: ScoreBatch):
    return np.zeros(batch.n_p), np.zeros(batch.n_n), np.zeros(batch.n_u)


def _terms_pn(batch, loss, config, want_grad=True):
    _need(batch.scores_p, "P")
    _need(batch.scores_n, "N")
    pi_p, pi_n = config.priors.pi_p, config.priors.pi_n
    rp, gp = _mean_and_grad(loss, batch.scores_p, POS, want_grad)
    rn, gn = _mean_and_grad(loss, batch.scores_n, NEG, want_grad)
    dp, dn, du = _zeros(batch)
    return pi_p * rp + pi_n * rn, pi_p * gp, pi_n * gn, du


def _terms_pu_unbiased(batch, loss, config, want_grad=True):
    _need(batch.scores_p, "P")
    _need(batch.scores_u, "U")
    pi_p = config.priors.pi_p
    rp_pos, gp_pos = _mean_and_grad(loss, batch.scores_p, POS, want_grad)
    rp_neg, gp_neg = _mean_and_grad(loss, batch.scores_p, NEG, want_grad)
    ru_neg, gu_neg = _mean_and_grad(loss, batch.scores_u, NEG, want_grad)
    value = pi_p * (rp_pos - rp_neg) + ru_neg
    return value, pi_p * (gp_pos - gp_neg), np.zeros(batch.n_n), gu_neg


def _terms_pu_nonconvex(batch, loss, config, want_grad=True):
    if not loss.symmetric:
        raise ConditionError(f"{loss.name.value} loss does not satisfy the symmetric condition")
    _need(batch.scores_p, "P")
    _need(batch.scores_u, "U")
    pi_p = config.priors.pi_p
    rp, gp = _mean_and_grad(loss, batch.scores_p, POS, want_grad)
    ru, gu = _mean_and_grad(loss, batch.scores_u, NEG, want_grad)
    return 2 * pi_p * rp - pi_p + ru, 2 * pi_p * gp, np.zeros(batch.n_n), gu


def _terms_pu_convex(batch, loss, config, want_grad=True):
    if not loss.linear_odd:
        raise ConditionError(f"{loss.name.value} loss does not satisfy the linear-odd condition")
    _need(batch.scores_p, "P")
    _need(batch.scores_u, "U")
    pi_p = config.priors.pi_p
    ru, gu = _mean_and_grad(loss, batch.scores_u, NEG, want_grad)
    value = -pi_p * float(np.mean(batch.scores_p)) + ru
    dp = np.full(batch.n_p, -pi_p / batch.n_p)
    return value, dp, np.zeros(batch.n_n), gu


def _terms_pu_nonneg(batch, loss, config, want_grad=True):
    _need(batch.scores_p, "P")
    _need(batch.scores_u, "U")
    pi_p = config.priors.pi_p
    rp_pos, gp_pos = _mean_and_grad(loss, batch.scores_p, POS, want_grad)
    rp_neg, gp_neg = _mean_and_grad(loss, batch.scores_p, NEG, want_grad)
    ru_neg, gu_neg = _mean_and_grad(loss, batch.scores_u, NEG, want_grad)
    bracket = ru_neg - pi_p * rp_neg
    if bracket >= 0:
        return pi_p * rp_pos + bracket, pi_p * (gp_pos - gp_neg), np.zeros(batch.n_n), gu_neg
    return pi_p * rp_pos, pi_p * gp_pos, np.zeros(batch.n_n), np.zeros(batch.n_u)


def _terms_nu_nonconvex(batch, loss, config, want_grad=True):
    if not loss.symmetric:
        raise ConditionError(f"{loss.name.value} loss does not satisfy the symmetric condition")
    _need(batch.scores_n, "N")
    _need(batch.scores_u, "U")
    pi_n = config.priors.pi_n
    rn, gn = _mean_and_grad(loss, batch.scores_n, NEG, want_grad)
    ru, gu = _mean_and_grad(loss, batch.scores_u, POS, want_grad)
    return 2 * pi_n * rn - pi_n + ru, np.zeros(batch.n_p), 2 * pi_n * gn, gu


def _terms_nu_convex(batch, loss, config, want_grad=True):
    if not loss.linear_odd:
        raise ConditionError(f"{loss.name.value} loss does not satisfy the linear-odd condition")
    _need(batch.scores_n, "N")
    _need(batch.scores_u, "U")
    pi_n = config.priors.pi_n
    ru, gu = _mean_and_grad(loss, batch.scores_u, POS, want_grad)
    value = pi_n * float(np.mean(batch.scores_n)) + ru
    dn = np.full(batch.n_n, pi_n / batch.n_n)
    return value, np.zeros(batch.n_p), dn, gu


def _rad_parts(batch, loss, config, want_grad=True):
    _need(batch.scores_p, "P")
    _need(batch.scores_n, "N")
    _need(batch.scores_u, "U")
    a = config.a
    pi_p, pi_n = config.priors.pi_p, config.priors.pi_n
    rp, gp = _mean_and_grad(loss, batch.scores_p, POS, want_grad)
    rn_neg, gn_neg = _mean_and_grad(loss, batch.scores_n, NEG, want_grad)
    rn_pos, gn_pos = _mean_and_grad(loss, batch.scores_n, POS, want_grad)
    ru, gu = _mean_and_grad(loss, batch.scores_u, POS, want_grad)
    # labeled part, always present
    fixed = (pi_n * rn_neg + (1 - a) * pi_p * rp, (1 - a) * pi_p * gp, pi_n * gn_neg)
    # the part whose expectation is pi_p * R_p^+ and which may go negative
    bracket = (ru - pi_n * rn_pos, -pi_n * gn_pos, gu)
    return fixed, bracket


def _terms_rad_unbiased(batch, loss, config, want_grad=True):
    (f, fp, fn), (b, bn, bu) = _rad_parts(batch, loss, config, want_grad)
    a = config.a
    return f + a * b, fp, fn + a * bn, a * bu


def _terms_rad_nonneg(batch, loss, config, want_grad=True):
    (f, fp, fn), (b, bn, bu) = _rad_parts(batch, loss, config, want_grad)
    a = config.a
    if b >= 0:
        return f + a * b, fp, fn + a * bn, a * bu
    return f, fp, fn, np.zeros(batch.n_u)


_TERMS = {
    Estimator.PN: _terms_pn,
    Estimator.PU_UNBIASED: _terms_pu_unbiased,
    Estimator.PU_NONCONVEX: _terms_pu_nonconvex,
    Estimator.PU_CONVEX: _terms_pu_convex,
    Estimator.PU_NONNEG: _terms_pu_nonneg,
    Estimator.NU_NONCONVEX: _terms_nu_nonconvex,
    Estimator.NU_CONVEX: _terms_nu_convex,
    Estimator.RAD_UNBIASED: _terms_rad_unbiased,
    Estimator.RAD_NONNEG: _terms_rad_nonneg,
}


def risk_with_grad(batch: ScoreBatch, loss, config: RiskConfig, want_grad: bool = True):
    """Estimate and its gradient as ``(value, ScoreBatch of d value / d score)``.

    For the clipped estimators the gradient is the one of the active branch;
    at a bracket of exactly zero the unclipped branch is used.
    """
    loss = get_loss(loss)
    value, dp, dn, du = _TERMS[config.estimator](batch, loss, config, want_grad)
    if not want_grad:
        return value, None
    shapes = (batch.n_p, batch.n_n, batch.n_u)
    return value, tuple(np.broadcast_to(np.asarray(g, dtype=float), (n,)).copy()
                        for g, n in zip((dp, dn, du), shapes))


def risk(batch: ScoreBatch, loss, config: RiskConfig) -> float:
    return risk_with_grad(batch, loss, config, want_grad=False)[0]


def _config(priors, estimator, a=0.5):
    if isinstance(priors, (int, float)):
        priors = Priors(float(priors))
    return RiskConfig(a=a, priors=priors, estimator=estimator)


def risk_pn(batch, loss, priors) -> float:
    """Supervised risk from labeled positives and negatives."""
    return risk(batch, loss, _config(priors, Estimator.PN))


def risk_pu_unbiased(batch, loss, priors) -> float:
    """Positive-unlabeled risk valid for any loss."""
    return risk(batch, loss, _config(priors, Estimator.PU_UNBIASED))


def risk_pu_nonconvex(batch, loss, priors) -> float:
    return risk(batch, loss, _config(priors, Estimator.PU_NONCONVEX))


def risk_pu_convex(batch, loss, priors) -> float:
    return risk(batch, loss, _config(priors, Estimator.PU_CONVEX))


def risk_pu_nonneg(batch, loss, priors) -> float:
    return risk(batch, loss, _config(priors, Estimator.PU_NONNEG))


def risk_nu_nonconvex(batch, loss, priors) -> float:
    return risk(batch, loss, _config(priors, Estimator.NU_NONCONVEX))


def risk_nu_convex(batch, loss, priors) -> float:
    return risk(batch, loss, _config(priors, Estimator.NU_CONVEX))


def risk_rad_unbiased(batch, loss, config: RiskConfig) -> float:
    """Convex combination of the PN and NU risks; unbiased, may be negative."""
    return risk(batch, loss, RiskConfig(config.a, config.priors, Estimator.RAD_UNBIASED))


def risk_rad_nonneg(batch, loss, config: RiskConfig) -> float:
    """The unbiased combination with its NU correction clipped at zero."""
    return risk(batch, loss, RiskConfig(config.a, config.priors, Estimator.RAD_NONNEG))


def rad_bracket(batch: ScoreBatch, loss, priors: Priors) -> float:
    """``R_u^+ - pi_n R_n^+``, the quantity clipped by the nonnegative estimator."""
    loss = get_loss(loss)
    return partial_mean(batch.scores_u, loss, POS) - priors.pi_n * partial_mean(
        batch.scores_n, loss, POS
    )


def bias_bound(config: RiskConfig, loss_sup: float, rho: float, n_n: int, n_u: int) -> float:
    """Upper bound on the bias of the clipped (nonnegative) estimator.

    ``loss_sup`` bounds the loss over the scores in play and ``rho`` is a lower
    bound on the positive-class risk ``R_p^+(g)``; both are assumptions the
    caller supplies.
    """
    if rho <= 0 or loss_sup <= 0:
        raise DomainError("rho and loss_sup must be positive")
    if n_n < 1 or n_u < 1:
        raise DomainError("n_n and n_u must be at least 1")
    pi_p, pi_n = config.priors.pi_p, config.priors.pi_n
    exponent = -2.0 * pi_p**2 * rho**2 / (loss_sup**2 * (1.0 / n_u + pi_n**2 / n_n))
    return config.a * pi_n * loss_sup * math.exp(exponent)


def true_risk(scores_pos, scores_neg, loss, pi_p: float) -> float:
    """Population risk ``pi_p E_p[l(g,+1)] + pi_n E_n[l(g,-1)]`` from samples."""
    loss = get_loss(loss)
    return pi_p * float(np.mean(loss.phi(np.asarray(scores_pos)))) + (1 - pi_p) * float(
        np.mean(loss.phi(-np.asarray(scores_neg)))
    )
