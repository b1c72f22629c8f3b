"""Datasets, trial splits and feature scaling.

Labels follow the anomaly-detection convention used throughout the package:
``+1`` is normal (positive class), ``-1`` is anomalous. On disk the last CSV
column holds the label, ``0`` = normal and ``1`` = anomaly unless the file
already uses ``+1/-1``.
"""
from __future__ import annotations

import csv
import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .exceptions import ConfigError, RiskADError


class DataError(RiskADError, ValueError):
    """Malformed input file or degenerate dataset."""


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"
    bayes_auc: float | None = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.features, dtype=float))
        y = np.asarray(self.labels).ravel()
        if x.shape[0] != y.size:
            raise DataError(f"{x.shape[0]} feature rows but {y.size} labels")
        if np.isnan(x).any():
            raise DataError("features contain NaN")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def pi_n(self) -> float:
        return float(np.mean(self.labels == -1))


@dataclass(frozen=True)
class SplitProtocol:
    train_ratio: float = 0.7
    labeled_fraction: float = 0.05
    trials: int = 30
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_ratio < 1.0:
            raise ConfigError("train_ratio must lie in (0, 1)")
        if not 0.0 < self.labeled_fraction <= 1.0:
            raise ConfigError("labeled_fraction must lie in (0, 1]")
        if self.trials < 1:
            raise ConfigError("trials must be positive")


@dataclass(frozen=True)
class SemiSupSplit:
    """Labeled positives ``P``, labeled negatives ``N``, unlabeled ``U`` and a test set.

    The true labels of ``U`` are kept for evaluation code only; use
    :meth:`oracle_u_labels` explicitly. Trainers never read them.
    """

    P: np.ndarray
    N: np.ndarray
    U: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    true_pi_n: float
    indices: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    _u_labels: np.ndarray = field(default=None, repr=False)

    def oracle_u_labels(self) -> np.ndarray:
        return self._u_labels

    def index_record(self) -> dict:
        return {k: [int(i) for i in v] for k, v in self.indices.items()}


def _read_rows(path: Path, label_column: int):
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                if lineno == 1 and not rows:
                    continue  # header
                raise DataError(f"{path}:{lineno}: non-numeric value") from None
            if any(math.isnan(v) for v in values):
                raise DataError(f"{path}:{lineno}: NaN value")
            if rows and len(values) != len(rows[0][1]):
                raise DataError(f"{path}:{lineno}: expected {len(rows[0][1])} columns")
            rows.append((lineno, values))
    if not rows:
        raise DataError(f"{path}: no data rows")
    ncol = len(rows[0][1])
    if ncol < 2:
        raise DataError(f"{path}: need at least one feature column and a label column")
    if not -ncol <= label_column < ncol:
        raise DataError(f"{path}: label column {label_column} out of range")
    return rows, label_column % ncol


def load_csv(path, label_column: int = -1, label_encoding: str = "auto", name: str | None = None):
    """Read a numeric CSV; one column (default: the last) holds the label.

    ``label_encoding`` is ``"01"`` (1 = anomaly), ``"pm1"`` (+1/-1) or
    ``"auto"``, which picks ``pm1`` when a ``-1`` label is present.
    """
    path = Path(path)
    rows, col = _read_rows(path, label_column)
    data = np.array([values for _, values in rows])
    raw = data[:, col]
    features = np.delete(data, col, axis=1)
    if label_encoding == "auto":
        label_encoding = "pm1" if np.any(raw == -1) else "01"
    if label_encoding == "01":
        allowed, mapping = (0.0, 1.0), {0.0: 1, 1.0: -1}
    elif label_encoding == "pm1":
        allowed, mapping = (1.0, -1.0), {1.0: 1, -1.0: -1}
    else:
        raise ConfigError(f"unknown label encoding {label_encoding!r}")
    for (lineno, _), v in zip(rows, raw):
        if v not in allowed:
            raise DataError(f"{path}:{lineno}: label {v:g} not in {allowed}")
    labels = np.array([mapping[v] for v in raw], dtype=int)
    return LabeledDataset(features, labels, name or path.stem)


def save_csv(ds: LabeledDataset, path) -> None:
    """Write features plus a final 0/1 label column (1 = anomaly)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j}" for j in range(ds.d)] + ["label"])
        for x, y in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in x] + [0 if y == 1 else 1])


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(trial_index)])


def make_trial_split(ds: LabeledDataset, protocol: SplitProtocol, trial_index: int,
                     max_attempts: int = 100) -> SemiSupSplit:
    """Random train/test split, then a random labeled subset of the train part.

    Labeled points are drawn uniformly (not stratified); a draw without a
    labeled positive or a labeled negative is redrawn.
    """
    y = np.asarray(ds.labels)
    if not (np.any(y == 1) and np.any(y == -1)):
        raise DataError("dataset needs both normal and anomalous samples")
    rng = trial_rng(protocol.seed, trial_index)
    n = ds.n
    n_train = int(round(protocol.train_ratio * n))
    n_labeled = int(round(protocol.labeled_fraction * n_train))
    for _ in range(max_attempts):
        perm = rng.permutation(n)
        train, test = perm[:n_train], perm[n_train:]
        labeled = train[rng.permutation(n_train)[:n_labeled]]
        unlabeled = np.setdiff1d(train, labeled)
        lab_y = y[labeled]
        if np.any(lab_y == 1) and np.any(lab_y == -1):
            break
    else:
        raise DataError(
            f"no labeled negative/positive after {max_attempts} draws; dataset too small or too pure"
        )
    p_idx = np.sort(labeled[lab_y == 1])
    n_idx = np.sort(labeled[lab_y == -1])
    u_idx = np.sort(unlabeled)
    test_idx = np.sort(test)
    x = ds.features
    return SemiSupSplit(
        P=x[p_idx], N=x[n_idx], U=x[u_idx],
        test_x=x[test_idx], test_y=y[test_idx].astype(int),
        true_pi_n=ds.pi_n,
        indices={"P": p_idx, "N": n_idx, "U": u_idx, "test": test_idx},
        _u_labels=y[u_idx].astype(int),
    )


def make_ad_setup(features, classes, positive_class, target_pi_n: float, seed: int,
                  name: str = "ad-setup") -> LabeledDataset:
    """One-class-vs-rest anomaly setup from multiclass data.

    Every sample of ``positive_class`` is kept as normal; anomalies are drawn
    uniformly from the pooled remaining classes so that their share is
    ``target_pi_n`` (count rounded to the nearest integer).
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    classes = np.asarray(classes).ravel()
    if not 0.0 <= target_pi_n < 1.0:
        raise ConfigError("target_pi_n must lie in [0, 1)")
    pos = np.flatnonzero(classes == positive_class)
    if pos.size == 0:
        raise DataError(f"class {positive_class!r} not present")
    pool = np.flatnonzero(classes != positive_class)
    n_anom = int(round(target_pi_n * pos.size / (1.0 - target_pi_n)))
    if n_anom > pool.size:
        raise DataError(f"need {n_anom} anomalies but only {pool.size} available")
    rng = np.random.default_rng(seed)
    anom = np.sort(rng.choice(pool, size=n_anom, replace=False))
    idx = np.concatenate([pos, anom])
    labels = np.concatenate([np.ones(pos.size, int), -np.ones(n_anom, int)])
    return LabeledDataset(x[idx], labels, name)


def gaussian_bayes_auc(mean_sep: float) -> float:
    return float(norm.cdf(mean_sep / math.sqrt(2.0)))


def synth_gaussian(n: int, d: int, pi_n: float, mean_sep: float, seed: int) -> LabeledDataset:
    """Normals from N(0, I), anomalies from N(mean_sep * e1, I).

    The Bayes-optimal AUC of this pair is ``Phi(mean_sep / sqrt(2))``.
    """
    if not 0.0 < pi_n < 1.0:
        raise ConfigError("pi_n must lie in (0, 1)")
    if mean_sep < 0:
        raise ConfigError("mean_sep must be nonnegative")
    rng = np.random.default_rng(seed)
    n_anom = int(round(n * pi_n))
    n_norm = n - n_anom
    shift = np.zeros(d)
    shift[0] = mean_sep
    x = np.vstack([rng.standard_normal((n_norm, d)), rng.standard_normal((n_anom, d)) + shift])
    y = np.concatenate([np.ones(n_norm, int), -np.ones(n_anom, int)])
    return LabeledDataset(x, y, f"gaussian-d{d}-sep{mean_sep:g}", gaussian_bayes_auc(mean_sep))


class ScaleMode(str, enum.Enum):
    UNIT_MAX_L2 = "unit_max_l2"
    UNIT_MAX_LINF = "unit_max_linf"
    NONE = "none"


@dataclass(frozen=True)
class FeatureScaler:
    """Divides features by one global constant."""

    divisor: float = 1.0
    mode: ScaleMode = ScaleMode.NONE
    degenerate: bool = False

    def transform(self, x):
        return np.asarray(x, dtype=float) / self.divisor

    def to_dict(self) -> dict:
        return {"divisor": self.divisor, "mode": ScaleMode(self.mode).value,
                "degenerate": self.degenerate}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureScaler":
        return cls(float(d["divisor"]), ScaleMode(d["mode"]), bool(d.get("degenerate", False)))


def fit_scaler(reference_rows, mode="unit_max_l2") -> FeatureScaler:
    """Scaler that brings the max row norm of ``reference_rows`` to 1."""
    mode = ScaleMode(mode)
    if mode is ScaleMode.NONE:
        return FeatureScaler()
    x = np.atleast_2d(np.asarray(reference_rows, dtype=float))
    ord_ = 2 if mode is ScaleMode.UNIT_MAX_L2 else np.inf
    top = float(np.linalg.norm(x, ord=ord_, axis=1).max()) if x.size else 0.0
    if top == 0.0:
        warnings.warn("all-zero reference rows; features left unscaled", stacklevel=2)
        return FeatureScaler(1.0, mode, degenerate=True)
    return FeatureScaler(top, mode)


def scale_features(data, mode="unit_max_l2", reference: str = "negatives"):
    """Scale a dataset or split so the reference rows have max norm 1.

    For a :class:`SemiSupSplit`, ``reference`` is ``"negatives"`` (the labeled
    negatives) or ``"train"`` (P, N and U together); for a dataset or a plain
    array all rows are the reference. Returns ``(scaled, scaler)``.
    """
    if isinstance(data, SemiSupSplit):
        if reference == "negatives":
            ref = data.N
        elif reference == "train":
            ref = np.vstack([data.P, data.N, data.U])
        else:
            raise ConfigError(f"unknown reference {reference!r}")
        sc = fit_scaler(ref, mode)
        scaled = SemiSupSplit(
            sc.transform(data.P), sc.transform(data.N), sc.transform(data.U),
            sc.transform(data.test_x), data.test_y, data.true_pi_n, data.indices, data._u_labels,
        )
        return scaled, sc
    if isinstance(data, LabeledDataset):
        sc = fit_scaler(data.features, mode)
        return LabeledDataset(sc.transform(data.features), data.labels, data.name,
                              data.bayes_auc), sc
    sc = fit_scaler(data, mode)
    return sc.transform(data), sc


def save_split_indices(split: SemiSupSplit, path) -> None:
    Path(path).write_text(json.dumps(split.index_record(), indent=1) + "\n")
