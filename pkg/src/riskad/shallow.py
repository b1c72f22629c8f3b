"""Linear risk-based anomaly detector trained by full-batch gradient descent.

The scorer is ``g(x) = <w, [x / s, 1]>``: features are divided by a global
scale ``s`` fitted on the training data and an intercept is carried as a
constant feature, regularized like every other weight so the nonnegativity
bound on ``lambda`` applies verbatim.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import FeatureScaler, SemiSupSplit, fit_scaler
from .estimators import Estimator, Priors, RiskConfig, ScoreBatch, risk_with_grad
from .exceptions import TrainingError
from .losses import get_loss
from .regselect import RegChoice, RegKind, auto_reg

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShallowOptions:
    max_iters: int = 2000
    tol: float = 1e-6
    init_step: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    min_step: float = 1e-16
    # stop when the last `patience` steps lowered the objective by less than
    # ftol * (1 + |f|); subgradient steps on kinked losses never meet `tol`
    ftol: float = 1e-12
    patience: int = 50


@dataclass
class LinearModel:
    w: np.ndarray
    scaler: FeatureScaler = field(default_factory=FeatureScaler)
    intercept: bool = True
    loss_name: str = "modified-huber"
    a: float = 0.1
    pi_p_e: float = 0.8
    estimator: str = Estimator.RAD_UNBIASED.value
    reg: RegChoice = field(default_factory=RegChoice)
    history: list[float] = field(default_factory=list, repr=False)
    converged: bool = False
    n_iters: int = 0

    def design(self, x) -> np.ndarray:
        return design_matrix(self.scaler.transform(x), self.intercept)

    def to_dict(self) -> dict:
        return {
            "kind": "linear",
            "w": [float(v) for v in self.w],
            "scaler": self.scaler.to_dict(),
            "intercept": self.intercept,
            "loss": self.loss_name,
            "a": self.a,
            "pi_p_e": self.pi_p_e,
            "estimator": self.estimator,
            "reg": {"kind": self.reg.kind.value, "lambda": self.reg.lam, "c": self.reg.c},
            "converged": self.converged,
            "n_iters": self.n_iters,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        r = d["reg"]
        return cls(
            w=np.asarray(d["w"], dtype=float),
            scaler=FeatureScaler.from_dict(d["scaler"]),
            intercept=bool(d["intercept"]),
            loss_name=d["loss"], a=float(d["a"]), pi_p_e=float(d["pi_p_e"]),
            estimator=d["estimator"],
            reg=RegChoice(RegKind(r["kind"]), float(r["lambda"]), float(r["c"])),
            converged=bool(d.get("converged", False)), n_iters=int(d.get("n_iters", 0)),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def design_matrix(x, intercept: bool = True) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if not intercept:
        return x
    return np.hstack([x, np.ones((x.shape[0], 1))])


def _scores(w, split):
    return ScoreBatch(split.P @ w, split.N @ w, split.U @ w)


def objective_shallow(w, split, loss, config: RiskConfig, reg: RegChoice) -> float:
    """Penalized empirical risk of the linear scorer ``x -> <w, x>``.

    ``split.P``, ``split.N`` and ``split.U`` must already be design matrices
    (scaled, intercept column appended if wanted).
    """
    w = np.asarray(w, dtype=float)
    value, _ = risk_with_grad(_scores(w, split), loss, config, want_grad=False)
    return value + reg.penalty(w)


def gradient_shallow(w, split, loss, config: RiskConfig, reg: RegChoice) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    _, (dp, dn, du) = risk_with_grad(_scores(w, split), loss, config)
    return split.P.T @ dp + split.N.T @ dn + split.U.T @ du + reg.penalty_grad(w)


@dataclass(frozen=True)
class DesignSplit:
    P: np.ndarray
    N: np.ndarray
    U: np.ndarray


def _uses_negatives(estimator: Estimator) -> bool:
    return estimator not in (Estimator.PU_UNBIASED, Estimator.PU_CONVEX,
                             Estimator.PU_NONCONVEX, Estimator.PU_NONNEG)


def prepare_design(split: SemiSupSplit, estimator: Estimator, scale: str = "unit_max_l2",
                   intercept: bool = True):
    """Fit the feature scale and build design matrices for training.

    The scale is fitted on the labeled negatives when the estimator uses
    them, otherwise on all training rows the estimator sees.
    """
    if _uses_negatives(estimator) and len(split.N):
        ref = split.N
    else:
        ref = np.vstack([split.P, split.U])
    scaler = fit_scaler(ref, scale)
    d = split.P.shape[1]
    P = design_matrix(scaler.transform(split.P), intercept)
    U = design_matrix(scaler.transform(split.U), intercept) if len(split.U) else np.empty((0, d + intercept))
    if _uses_negatives(estimator):
        N = design_matrix(scaler.transform(split.N), intercept) if len(split.N) else np.empty((0, d + intercept))
    else:
        N = np.empty((0, d + intercept))
    return DesignSplit(P, N, U), scaler


def resolve_reg(reg, design: DesignSplit, loss, config: RiskConfig) -> RegChoice:
    """Turn ``"auto"``, a kind name, a float or a :class:`RegChoice` into a RegChoice.

    ``"auto"`` (or a bare kind) uses the smallest lambda that keeps the
    objective nonnegative, computed on the design rows of the negatives (or of
    all rows for estimators that do not see negatives).
    """
    if isinstance(reg, RegChoice):
        return reg
    kind, lam = RegKind.L2, "auto"
    if isinstance(reg, (int, float)):
        lam = float(reg)
    elif isinstance(reg, tuple):
        kind, lam = RegKind(reg[0]), reg[1]
    elif reg != "auto":
        kind = RegKind(reg)
    ref = design.N if len(design.N) else np.vstack([design.P, design.U])
    chosen = auto_reg(kind, config.a, loss, config.priors.pi_n, ref)
    if lam == "auto":
        return chosen
    return RegChoice(kind, float(lam), chosen.c)


def minimize_armijo(f, grad, w0, opt: ShallowOptions, callback=None):
    """Gradient descent with backtracking; returns ``(w, history, converged, iters)``."""
    w = np.array(w0, dtype=float)
    fw = f(w)
    history = [fw]
    converged = False
    it = 0
    last_step = opt.init_step
    for it in range(1, opt.max_iters + 1):
        g = grad(w)
        gnorm2 = float(g @ g)
        if np.sqrt(gnorm2) <= opt.tol:
            converged = True
            it -= 1
            break
        # retry one doubling of the last accepted step, never above init_step
        step = min(opt.init_step, last_step / opt.shrink)
        while True:
            w_new = w - step * g
            f_new = f(w_new)
            if not np.isfinite(f_new):
                raise TrainingError(f"objective became {f_new} at iteration {it}")
            if f_new <= fw - opt.armijo * step * gnorm2:
                break
            step *= opt.shrink
            if step < opt.min_step:
                log.debug("line search stalled at iteration %d", it)
                return w, history, False, it
        w, fw, last_step = w_new, f_new, step
        history.append(fw)
        if callback is not None:
            callback(w, fw)
        if len(history) > opt.patience and (
            history[-1 - opt.patience] - fw <= opt.ftol * (1.0 + abs(fw))
        ):
            log.debug("objective stalled at iteration %d", it)
            break
    return w, history, converged, it


def train_shallow(split: SemiSupSplit, loss="modified-huber", config: RiskConfig | None = None,
                  reg="auto", opt: ShallowOptions | None = None, scale: str = "unit_max_l2",
                  intercept: bool = True) -> LinearModel:
    """Fit ``w`` by minimizing the penalized risk picked by ``config.estimator``.

    The default estimator is the unbiased rAD combination; with ``reg="auto"``
    its penalized objective is nonnegative at every iterate.
    """
    loss = get_loss(loss)
    config = config or RiskConfig()
    opt = opt or ShallowOptions()
    design, scaler = prepare_design(split, config.estimator, scale, intercept)
    regc = resolve_reg(reg, design, loss, config)
    w0 = np.zeros(design.P.shape[1])
    w, history, converged, iters = minimize_armijo(
        lambda v: objective_shallow(v, design, loss, config, regc),
        lambda v: gradient_shallow(v, design, loss, config, regc),
        w0, opt,
    )
    return LinearModel(
        w=w, scaler=scaler, intercept=intercept, loss_name=loss.name.value,
        a=config.a, pi_p_e=config.priors.pi_p, estimator=config.estimator.value,
        reg=regc, history=history, converged=converged, n_iters=iters,
    )


def score(model: LinearModel, x) -> np.ndarray | float:
    """Decision values; higher means more normal."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xd = model.design(x)
    if xd.shape[1] != model.w.size:
        raise ValueError(f"expected {model.w.size - model.intercept} features, got {x.shape[-1]}")
    out = xd @ model.w
    return float(out[0]) if single else out


def default_config(a: float = 0.1, pi_p_e: float = 0.8,
                   estimator=Estimator.RAD_UNBIASED) -> RiskConfig:
    return RiskConfig(a, Priors(pi_p_e), Estimator(estimator))
