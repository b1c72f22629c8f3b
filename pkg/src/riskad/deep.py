"""Multilayer perceptron trained on the clipped (nonnegative) rAD risk.

Plain numpy: forward pass, hand-written backpropagation, an Adam optimizer and
stratified mini-batches that always contain labeled positives, labeled
negatives and unlabeled points.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .estimators import Estimator, RiskConfig, ScoreBatch, risk_with_grad
from .exceptions import ConfigError, MissingSourceError, TrainingError
from .losses import get_loss


class Activation(str, enum.Enum):
    RELU = "relu"
    TANH = "tanh"
    IDENTITY = "identity"


class ClipMode(str, enum.Enum):
    SUBGRADIENT = "sub"
    REVERSE = "reverse"


def _act(kind: Activation, z):
    if kind is Activation.RELU:
        return np.maximum(z, 0.0)
    if kind is Activation.TANH:
        return np.tanh(z)
    return z


def _act_grad(kind: Activation, z, h):
    if kind is Activation.RELU:
        return (z > 0).astype(float)
    if kind is Activation.TANH:
        return 1.0 - h * h
    return np.ones_like(z)


@dataclass
class MlpModel:
    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: Activation = Activation.RELU
    x_mean: np.ndarray | None = None
    x_std: np.ndarray | None = None
    history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.activation = Activation(self.activation)
        dims = self.layer_dims
        if dims[-1] != 1:
            raise ConfigError("the output layer must have width 1")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ConfigError("need one weight matrix and bias per layer")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[k], dims[k + 1]) or b.shape != (dims[k + 1],):
                raise ConfigError(f"layer {k}: shapes {w.shape}, {b.shape} do not chain")

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "MlpModel":
        return MlpModel(
            list(self.layer_dims), [w.copy() for w in self.weights],
            [b.copy() for b in self.biases], self.activation,
            None if self.x_mean is None else self.x_mean.copy(),
            None if self.x_std is None else self.x_std.copy(),
        )

    def prepare(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.x_mean is not None:
            x = (x - self.x_mean) / self.x_std
        return x

    def score(self, x) -> np.ndarray:
        """Decision values for raw (unstandardized) inputs."""
        return forward(self, self.prepare(x))

    def to_dict(self) -> dict:
        return {
            "kind": "mlp",
            "layer_dims": list(self.layer_dims),
            "activation": self.activation.value,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "x_mean": None if self.x_mean is None else self.x_mean.tolist(),
            "x_std": None if self.x_std is None else self.x_std.tolist(),
            "history": list(self.history),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        arr = lambda v: None if v is None else np.asarray(v, dtype=float)  # noqa: E731
        return cls(
            list(d["layer_dims"]),
            [np.asarray(w, dtype=float).reshape(d["layer_dims"][k], d["layer_dims"][k + 1])
             for k, w in enumerate(d["weights"])],
            [np.asarray(b, dtype=float) for b in d["biases"]],
            Activation(d["activation"]), arr(d.get("x_mean")), arr(d.get("x_std")),
            list(d.get("history", [])),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")


def init_mlp(layer_dims, activation="relu", seed: int | np.random.Generator = 0) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(list(layer_dims), weights, biases, Activation(activation))


def _forward_cache(model: MlpModel, x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.layer_dims[0]:
        raise ConfigError(f"expected {model.layer_dims[0]} input features, got {x.shape[1]}")
    hs, zs = [x], []
    last = len(model.weights) - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = hs[-1] @ w + b
        zs.append(z)
        hs.append(z if k == last else _act(model.activation, z))
    return hs, zs


def forward(model: MlpModel, x) -> np.ndarray:
    """One score per row of ``x`` (inputs already standardized)."""
    hs, _ = _forward_cache(model, x)
    return hs[-1][:, 0]


@dataclass(frozen=True)
class BatchSplit:
    P: np.ndarray
    N: np.ndarray
    U: np.ndarray

    def check(self) -> None:
        for name in ("P", "N", "U"):
            if len(getattr(self, name)) == 0:
                raise MissingSourceError(f"mini-batch has no {name} samples")


def weight_penalty(model: MlpModel, lam: float) -> float:
    return lam * sum(float(np.sum(w * w)) for w in model.weights)


def _nonneg_config(config: RiskConfig) -> RiskConfig:
    return RiskConfig(config.a, config.priors, Estimator.RAD_NONNEG)


def objective_deep(model: MlpModel, batch: BatchSplit, loss, config: RiskConfig,
                   lam: float) -> float:
    """Clipped rAD risk of the network on ``batch`` plus ``lam * sum ||W||^2``."""
    batch.check()
    scores = ScoreBatch(forward(model, batch.P), forward(model, batch.N), forward(model, batch.U))
    value, _ = risk_with_grad(scores, loss, _nonneg_config(config), want_grad=False)
    return value + weight_penalty(model, lam)


def _score_grads(scores: ScoreBatch, loss, config: RiskConfig, clip_mode: ClipMode):
    loss = get_loss(loss)
    value, grads = risk_with_grad(scores, loss, _nonneg_config(config))
    if clip_mode is ClipMode.REVERSE:
        a, pi_n = config.a, config.priors.pi_n
        bracket = (float(np.mean(loss.phi(scores.scores_u)))
                   - pi_n * float(np.mean(loss.phi(scores.scores_n))))
        if bracket < 0:
            # ascend on the negative correction instead of descending on the objective
            dn = a * pi_n * loss.dphi(scores.scores_n) / scores.n_n
            du = -a * loss.dphi(scores.scores_u) / scores.n_u
            grads = (np.zeros(scores.n_p), dn, du)
    return value, grads


def backward(model: MlpModel, batch: BatchSplit, loss, config: RiskConfig, lam: float,
             clip_mode=ClipMode.SUBGRADIENT):
    """Gradients ``(dW, db)`` per layer of the objective on ``batch``.

    Returns ``(objective, grads)`` with ``grads`` ordered like ``model.params``.
    """
    batch.check()
    clip_mode = ClipMode(clip_mode)
    x = np.vstack([batch.P, batch.N, batch.U])
    n_p, n_n = len(batch.P), len(batch.N)
    hs, zs = _forward_cache(model, x)
    s = hs[-1][:, 0]
    scores = ScoreBatch(s[:n_p], s[n_p:n_p + n_n], s[n_p + n_n:])
    value, (dp, dn, du) = _score_grads(scores, loss, config, clip_mode)
    delta = np.concatenate([dp, dn, du])[:, None]
    grads = [None] * (2 * len(model.weights))
    for k in range(len(model.weights) - 1, -1, -1):
        grads[2 * k] = hs[k].T @ delta + 2.0 * lam * model.weights[k]
        grads[2 * k + 1] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ model.weights[k].T) * _act_grad(model.activation, zs[k - 1], hs[k])
    return value + weight_penalty(model, lam), grads


class Adam:
    """Adaptive moment estimation over a list of parameter arrays (updated in place)."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        if not (0 < beta1 < 1 and 0 < beta2 < 1):
            raise ConfigError("moment decays must lie in (0, 1)")
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    hidden: tuple[int, ...] = (64, 32)
    activation: Activation = Activation.RELU
    batch_size: int = 128
    epochs: int = 50
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 1e-4
    seed: int = 0
    clip_mode: ClipMode = ClipMode.SUBGRADIENT
    standardize: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("moment decays must lie in (0, 1)")
        object.__setattr__(self, "activation", Activation(self.activation))
        object.__setattr__(self, "clip_mode", ClipMode(self.clip_mode))


def stratified_batches(sizes: dict[str, int], batch_size: int, rng: np.random.Generator):
    """Index arrays per source for one epoch of mini-batches.

    Each batch takes ``ceil(batch_size * n_s / n)`` rows of source ``s``
    (at least one), cycling through a fresh permutation of that source.
    """
    total = sum(sizes.values())
    n_batches = max(1, math.ceil(total / batch_size))
    perms = {k: rng.permutation(n) for k, n in sizes.items()}
    per = {k: max(1, math.ceil(batch_size * n / total)) for k, n in sizes.items()}
    for b in range(n_batches):
        yield {k: perms[k][(b * per[k] + np.arange(per[k])) % sizes[k]] for k in sizes}


def train_deep(split, loss="logistic", config: RiskConfig | None = None,
               train: TrainConfig | None = None) -> MlpModel:
    """Train an MLP scorer on ``split.P``, ``split.N`` and ``split.U``.

    ``model.history`` holds the full-data objective after every epoch
    (entry 0 is the initial model).
    """
    loss = get_loss(loss)
    config = config or RiskConfig()
    train = train or TrainConfig()
    full = BatchSplit(np.asarray(split.P, float), np.asarray(split.N, float),
                      np.asarray(split.U, float))
    full.check()
    d = full.P.shape[1]
    rng = np.random.default_rng(train.seed)
    model = init_mlp([d, *train.hidden, 1], train.activation, rng)
    if train.standardize:
        allx = np.vstack([full.P, full.N, full.U])
        std = allx.std(axis=0)
        model.x_mean, model.x_std = allx.mean(axis=0), np.where(std > 0, std, 1.0)
    data = BatchSplit(model.prepare(full.P), model.prepare(full.N), model.prepare(full.U))
    opt = Adam(model.params, train.learning_rate, train.beta1, train.beta2, train.epsilon)
    lam = train.weight_decay
    model.history.append(objective_deep(model, data, loss, config, lam))
    sizes = {"P": len(data.P), "N": len(data.N), "U": len(data.U)}
    for epoch in range(train.epochs):
        for idx in stratified_batches(sizes, train.batch_size, rng):
            mb = BatchSplit(data.P[idx["P"]], data.N[idx["N"]], data.U[idx["U"]])
            value, grads = backward(model, mb, loss, config, lam, train.clip_mode)
            if not np.isfinite(value):
                raise TrainingError(f"objective became {value} in epoch {epoch}")
            opt.step(grads)
        value = objective_deep(model, data, loss, config, lam)
        if not np.isfinite(value):
            raise TrainingError(f"objective became {value} after epoch {epoch}")
        model.history.append(value)
    return model
