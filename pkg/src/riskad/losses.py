"""Margin-based surrogate losses and their condition constants.

Each loss is written as a function of the margin ``z = t * y``; the value for a
score ``t`` and label ``y`` is ``phi(t * y)`` and its derivative in ``t`` is
``y * phi'(t * y)``. At kinks ``phi'`` returns the left one-sided derivative.

The constants ``(b1, b2, b3)`` make the two inequalities

    loss(t, -1) - loss(t, +1) >= -b1 * |t|
    loss(t, -1)               >=  b2 * (b3 - |t|)

hold for every real ``t``; they drive the regularization bounds in
:mod:`riskad.regselect`.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import DomainError

DEFAULT_GRID = np.round(np.arange(-1000, 1001) * 0.01, 10)
CONDITION_TOL = 1e-9
STRUCTURAL_TOL = 1e-12


class LossName(str, enum.Enum):
    HINGE = "hinge"
    DOUBLE_HINGE = "double-hinge"
    SQUARED = "squared"
    MODIFIED_HUBER = "modified-huber"
    LOGISTIC = "logistic"
    SIGMOID = "sigmoid"
    RAMP = "ramp"


# margin functions phi(z) and left derivatives phi'(z)

def _hinge(z):
    return np.maximum(0.0, 1.0 - z)


def _hinge_d(z):
    return np.where(z <= 1.0, -1.0, 0.0)


def _double_hinge(z):
    return np.maximum(np.maximum(0.0, (1.0 - z) / 2.0), -z)


def _double_hinge_d(z):
    return np.where(z <= -1.0, -1.0, np.where(z <= 1.0, -0.5, 0.0))


def _squared(z):
    return 0.5 * (z - 1.0) ** 2


def _squared_d(z):
    return z - 1.0


def _modified_huber(z):
    return np.where(z >= -1.0, np.maximum(0.0, 1.0 - z) ** 2, -4.0 * z)


def _modified_huber_d(z):
    return np.where(z >= -1.0, -2.0 * np.maximum(0.0, 1.0 - z), -4.0)


def _logistic(z):
    # log(1 + exp(-z)) without overflow
    return np.logaddexp(0.0, -z)


def _logistic_d(z):
    return -_sigmoid(z)


def _sigmoid(z):
    # 1 / (1 + exp(z)), stable for large |z|
    return 0.5 * (1.0 - np.tanh(0.5 * z))


def _sigmoid_d(z):
    s = _sigmoid(z)
    return -s * (1.0 - s)


def _ramp(z):
    return np.maximum(0.0, np.minimum(1.0, (1.0 - z) / 2.0))


def _ramp_d(z):
    return np.where((z > -1.0) & (z <= 1.0), -0.5, 0.0)


@dataclass(frozen=True)
class LossSpec:
    """A surrogate loss ``l(t, y) = phi(t * y)`` plus its constants.

    ``lipschitz`` is the Lipschitz constant of ``t -> l(t, y)`` on ``|t| <= 1``
    (the squared loss is the only one whose constant grows with the range).
    It is informational only.
    """

    name: LossName
    b1: float
    b2: float
    b3: float
    bounded: bool
    lipschitz: float
    symmetric: bool
    linear_odd: bool
    phi: Callable = dataclasses.field(repr=False, compare=False)
    dphi: Callable = dataclasses.field(repr=False, compare=False)

    def __call__(self, t, y):
        return eval_loss(self, t, y)

    @property
    def sup_on_unit(self) -> float:
        """``sup_{|t| <= 1} max_y l(t, y)``."""
        t = np.linspace(-1.0, 1.0, 2001)
        return float(max(self.phi(t).max(), self.phi(-t).max()))

    def with_constants(self, b1=None, b2=None, b3=None) -> "LossSpec":
        return dataclasses.replace(
            self,
            b1=self.b1 if b1 is None else b1,
            b2=self.b2 if b2 is None else b2,
            b3=self.b3 if b3 is None else b3,
        )


HINGE = LossSpec(LossName.HINGE, 2.0, 1.0, 1.0, False, 1.0, False, False, _hinge, _hinge_d)
DOUBLE_HINGE = LossSpec(
    LossName.DOUBLE_HINGE, 1.0, 0.5, 1.0, False, 1.0, False, True, _double_hinge, _double_hinge_d
)
SQUARED = LossSpec(LossName.SQUARED, 2.0, 0.5, 0.5, False, 2.0, False, False, _squared, _squared_d)
MODIFIED_HUBER = LossSpec(
    LossName.MODIFIED_HUBER, 4.0, 1.0, 0.5, False, 4.0, False, False,
    _modified_huber, _modified_huber_d,
)
LOGISTIC = LossSpec(
    LossName.LOGISTIC, 1.0, 1.0, math.log(2.0), False, 1.0, False, True, _logistic, _logistic_d
)
SIGMOID = LossSpec(LossName.SIGMOID, 1.0, 0.5, 1.0, True, 0.25, True, False, _sigmoid, _sigmoid_d)
RAMP = LossSpec(LossName.RAMP, 1.0, 0.5, 1.0, True, 0.5, True, False, _ramp, _ramp_d)

LOSSES: dict[str, LossSpec] = {
    spec.name.value: spec
    for spec in (HINGE, DOUBLE_HINGE, SQUARED, MODIFIED_HUBER, LOGISTIC, SIGMOID, RAMP)
}


def get_loss(name: str | LossName | LossSpec) -> LossSpec:
    """Look a loss up by its CLI name (``"hinge"``, ``"modified-huber"``, ...)."""
    if isinstance(name, LossSpec):
        return name
    key = name.value if isinstance(name, LossName) else str(name).lower().replace("_", "-")
    if key in ("m-huber", "mhuber"):
        key = "modified-huber"
    try:
        return LOSSES[key]
    except KeyError:
        raise ValueError(f"unknown loss {name!r}; expected one of {sorted(LOSSES)}") from None


def _check_finite(t):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("loss evaluated at a non-finite score")
    return t


def _check_label(y):
    y = np.asarray(y, dtype=float)
    if not np.all((y == 1.0) | (y == -1.0)):
        raise DomainError("labels must be +1 or -1")
    return y


def _maybe_scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def eval_loss(loss: LossSpec, t, y):
    """Loss value at score(s) ``t`` for label(s) ``y`` (broadcasting)."""
    t = _check_finite(t)
    y = _check_label(y)
    return _maybe_scalar(loss.phi(t * y))


def grad_loss(loss: LossSpec, t, y):
    """Derivative of the loss with respect to the score ``t``."""
    t = _check_finite(t)
    y = _check_label(y)
    return _maybe_scalar(y * loss.dphi(t * y))


def condition13_margins(loss: LossSpec, grid=DEFAULT_GRID) -> tuple[np.ndarray, np.ndarray]:
    """Slack of both constant inequalities on ``grid`` (>= 0 means satisfied)."""
    t = _check_finite(grid)
    lneg = loss.phi(-t)
    lpos = loss.phi(t)
    first = (lneg - lpos) + loss.b1 * np.abs(t)
    second = lneg - loss.b2 * (loss.b3 - np.abs(t))
    return first, second


def check_condition13(loss: LossSpec, grid=DEFAULT_GRID, tol: float = CONDITION_TOL) -> bool:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise DomainError("empty grid")
    first, second = condition13_margins(loss, grid)
    return bool(np.all(first >= -tol) and np.all(second >= -tol))


@dataclass(frozen=True)
class StructuralCheck:
    symmetric_ok: bool
    linear_odd_ok: bool


class ConsistencyError(AssertionError):
    """Numerically observed structure disagrees with the stored flags."""


def check_structural(
    loss: LossSpec, grid=DEFAULT_GRID, tol: float = STRUCTURAL_TOL
) -> StructuralCheck:
    """Test the symmetric and linear-odd identities on ``grid``.

    Raises :class:`ConsistencyError` when a result disagrees with the flag
    stored on ``loss``.
    """
    t = np.atleast_1d(_check_finite(grid))
    if t.size == 0:
        raise DomainError("empty grid")
    lpos = loss.phi(t)
    lneg = loss.phi(-t)
    symmetric_ok = bool(np.all(np.abs(lpos + lneg - 1.0) <= tol))
    linear_odd_ok = bool(np.all(np.abs(lpos - lneg + t) <= tol))
    if symmetric_ok != loss.symmetric or linear_odd_ok != loss.linear_odd:
        raise ConsistencyError(
            f"{loss.name.value}: symmetric={symmetric_ok} (flag {loss.symmetric}), "
            f"linear_odd={linear_odd_ok} (flag {loss.linear_odd})"
        )
    return StructuralCheck(symmetric_ok, linear_odd_ok)
