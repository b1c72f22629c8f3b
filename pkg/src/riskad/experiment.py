"""Trial benchmarks, sensitivity sweeps and diagnostics.

A benchmark repeats split -> train -> score -> AUC over independent trials and
reports the mean and standard error per configuration. Every number is a
deterministic function of the configuration and its seed.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import (
    LabeledDataset,
    SplitProtocol,
    load_csv,
    make_trial_split,
    synth_gaussian,
)
from .deep import TrainConfig, train_deep
from .estimators import Estimator, Priors, RiskConfig, bias_bound
from .exceptions import ConfigError, RiskADError
from .losses import check_condition13, get_loss
from .metrics import Aggregate, TrialResult, aggregate, auc
from .regselect import data_norm_constants, lambda_min_l1, lambda_min_l2
from .shallow import ShallowOptions, prepare_design, score, train_shallow

log = logging.getLogger(__name__)

METHODS = ("rad-shallow", "rad-deep", "pu-shallow", "pn-shallow")


class TrialError(RiskADError):
    def __init__(self, trial: int, cause: Exception):
        super().__init__(f"trial {trial} failed: {type(cause).__name__}: {cause}")
        self.trial = trial
        self.cause = cause


@dataclass(frozen=True)
class ExperimentConfig:
    data: str | None = None
    synthetic: dict | None = None
    method: str = "rad-shallow"
    loss: str = "modified-huber"
    a: float = 0.1
    pi_p_e: float | str = 0.8
    protocol: SplitProtocol = field(default_factory=SplitProtocol)
    reg: str = "l2"
    lam: float | str = "auto"
    deep: TrainConfig = field(default_factory=TrainConfig)
    a_grid: tuple = (0.3, 0.7, 0.9)
    pi_grid: tuple = ("1-pi_n", 0.9, 0.7, 0.6)
    threads: int | None = None
    label_encoding: str = "auto"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        get_loss(self.loss)
        if not 0.0 < float(self.a) < 1.0:
            raise ConfigError(f"a must lie in (0, 1), got {self.a}")
        if self.data is None and self.synthetic is None:
            raise ConfigError("need a data file or a synthetic dataset spec")

    @property
    def seed(self) -> int:
        return self.protocol.seed


def load_dataset(config: ExperimentConfig) -> LabeledDataset:
    if config.data is not None:
        if not os.path.exists(config.data):
            raise ConfigError(f"data file {config.data!r} does not exist")
        return load_csv(config.data, label_encoding=config.label_encoding)
    spec = dict(config.synthetic)
    kind = spec.pop("kind", "gaussian")
    if kind != "gaussian":
        raise ConfigError(f"unknown synthetic kind {kind!r}")
    return synth_gaussian(
        int(spec.get("n", 2000)), int(spec.get("d", 2)), float(spec.get("pi_n", 0.1)),
        float(spec.get("mean_sep", 4.0)), int(spec.get("seed", 0)),
    )


def resolve_pi_p(value, ds: LabeledDataset) -> float:
    """Numeric prior estimate; ``"1-pi_n"`` / ``"true"`` means the dataset's own prior."""
    if isinstance(value, str):
        if value.strip().lower() in ("1-pi_n", "true", "exact"):
            return 1.0 - ds.pi_n
        value = float(value)
    return float(value)


def pu_estimator(loss) -> Estimator:
    """PU risk used by the baseline: symmetric or linear-odd forms when they apply."""
    loss = get_loss(loss)
    if loss.symmetric:
        return Estimator.PU_NONCONVEX
    if loss.linear_odd:
        return Estimator.PU_CONVEX
    return Estimator.PU_UNBIASED


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1)[0])


def _reg_arg(config: ExperimentConfig):
    if config.lam == "auto":
        return config.reg
    return (config.reg, float(config.lam))


def run_trial(config: ExperimentConfig, ds: LabeledDataset, trial: int) -> TrialResult:
    pi_p = resolve_pi_p(config.pi_p_e, ds)
    split = make_trial_split(ds, config.protocol, trial)
    if len(split.U) == 0:
        raise ConfigError("the unlabeled set is empty; lower the labeled fraction")
    priors = Priors(pi_p)
    if config.method == "rad-deep":
        train = dataclasses.replace(config.deep, seed=trial_seed(config.seed, trial))
        model = train_deep(split, config.loss, RiskConfig(config.a, priors), train)
        scores = model.score(split.test_x)
    else:
        estimator = {
            "rad-shallow": Estimator.RAD_UNBIASED,
            "pn-shallow": Estimator.PN,
            "pu-shallow": pu_estimator(config.loss),
        }[config.method]
        model = train_shallow(split, config.loss, RiskConfig(config.a, priors, estimator),
                              _reg_arg(config), ShallowOptions())
        scores = score(model, split.test_x)
    return TrialResult(ds.name, config.method, get_loss(config.loss).name.value,
                       float(config.a), pi_p, trial, auc(scores, split.test_y))


def _n_workers(config: ExperimentConfig) -> int:
    if config.threads is not None:
        n = config.threads
    else:
        n = int(os.environ.get("RISKAD_THREADS", os.cpu_count() or 1))
    return max(1, min(n, config.protocol.trials))


@dataclass
class BenchResult:
    trials: list[TrialResult]
    aggregates: list[Aggregate]
    swept: str | None = None

    def to_csv(self) -> str:
        return results_csv(self.trials, self.aggregates)

    def table(self) -> str:
        return format_table(self.aggregates)


def run_benchmark(config: ExperimentConfig, ds: LabeledDataset | None = None) -> BenchResult:
    """All trials of one configuration; rows ordered by trial index."""
    ds = ds if ds is not None else load_dataset(config)

    def one(k):
        try:
            return run_trial(config, ds, k)
        except RiskADError as exc:
            raise TrialError(k, exc) from exc

    trials = range(config.protocol.trials)
    workers = _n_workers(config)
    if workers == 1:
        rows = [one(k) for k in trials]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, trials))
    aggs = aggregate(rows) if len(rows) >= 2 else []
    return BenchResult(rows, aggs)


def run_sweep(config: ExperimentConfig, axis: str, grid=None) -> BenchResult:
    """One benchmark per grid value of ``a`` or ``pi_p_e``."""
    if axis not in ("a", "pi_p_e"):
        raise ConfigError("sweep axis must be 'a' or 'pi_p_e'")
    if grid is None:
        grid = config.a_grid if axis == "a" else config.pi_grid
    grid = list(grid)
    if not grid:
        raise ConfigError("sweep grid is empty")
    ds = load_dataset(config)
    rows, aggs = [], []
    for value in grid:
        cfg = dataclasses.replace(config, **{axis: value if axis == "pi_p_e" else float(value)})
        res = run_benchmark(cfg, ds)
        rows += res.trials
        aggs += res.aggregates
    return BenchResult(rows, aggs, swept=axis)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def results_csv(trials, aggregates) -> str:
    """Per-trial rows followed by aggregate rows (se = sample std / sqrt(trials))."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "dataset", "method", "loss", "a", "pi_p_e", "trial", "auc",
                "n_trials", "mean_auc", "se_auc"])
    for r in trials:
        w.writerow(["trial", r.dataset, r.method, r.loss, _fmt(r.a), _fmt(r.pi_p_e),
                    r.trial, _fmt(r.auc), "", "", ""])
    for g in aggregates:
        w.writerow(["aggregate", g.dataset, g.method, g.loss, _fmt(g.a), _fmt(g.pi_p_e),
                    "", "", g.n_trials, _fmt(g.mean), _fmt(g.se)])
    return buf.getvalue()


def format_table(aggregates) -> str:
    """Aligned text table, AUC as ``mean(SE x 100)``."""
    head = ["dataset", "method", "loss", "a", "pi_p_e", "trials", "AUC mean(SE x100)"]
    body = [[g.dataset, g.method, g.loss, f"{g.a:g}", f"{g.pi_p_e:.3g}", str(g.n_trials),
             g.formatted()] for g in aggregates]
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    lines = ["  ".join(c.ljust(wd) for c, wd in zip(r, widths)).rstrip() for r in [head] + body]
    lines.insert(1, "  ".join("-" * wd for wd in widths))
    return "\n".join(lines)


def diagnose(config: ExperimentConfig, rho: float = 0.1, loss_sup: float | None = None,
             trial: int = 0) -> dict:
    """Regularization constants, condition check and bias bound for one split.

    ``loss_sup`` defaults to 1 for bounded losses; for unbounded losses it
    defaults to the largest loss value over the scores of ``|t| <= 1`` and a
    warning is attached, since the bias bound then depends on an assumed
    score range.
    """
    ds = load_dataset(config)
    loss = get_loss(config.loss)
    pi_p = resolve_pi_p(config.pi_p_e, ds)
    cfg = RiskConfig(config.a, Priors(pi_p))
    split = make_trial_split(ds, config.protocol, trial)
    design, scaler = prepare_design(split, Estimator.RAD_UNBIASED)
    consts = data_norm_constants(design.N)
    notes = []
    if loss_sup is None:
        if loss.bounded:
            loss_sup = 1.0
        else:
            loss_sup = loss.sup_on_unit
            notes.append(f"{loss.name.value} is unbounded; C_loss={loss_sup:g} assumes |g| <= 1")
            warnings.warn(notes[-1], stacklevel=2)
    return {
        "dataset": ds.name,
        "loss": loss.name.value,
        "a": cfg.a,
        "pi_p_e": pi_p,
        "true_pi_n": ds.pi_n,
        "n_p": len(split.P), "n_n": len(split.N), "n_u": len(split.U),
        "scale_divisor": scaler.divisor,
        "c": consts.c,
        "c_inf": consts.c_inf,
        "lambda_l2": lambda_min_l2(cfg.a, loss, cfg.priors.pi_n, consts.c),
        "lambda_l1": lambda_min_l1(cfg.a, loss, cfg.priors.pi_n, consts.c_inf),
        "constants": (loss.b1, loss.b2, loss.b3),
        "condition13": check_condition13(loss),
        "loss_sup": loss_sup,
        "rho": rho,
        "bias_bound": bias_bound(cfg, loss_sup, rho, max(len(split.N), 1), max(len(split.U), 1)),
        "notes": notes,
    }

