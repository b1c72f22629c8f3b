"""Command-line interface: ``riskad <subcommand> ...``.

Experiment settings come from flags, optionally layered on a JSON config file
(``--config``); a flag given on the command line overrides the file.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .data import (
    LabeledDataset,
    SplitProtocol,
    load_csv,
    make_ad_setup,
    make_trial_split,
    save_csv,
    save_split_indices,
    synth_gaussian,
)
from .deep import MlpModel, TrainConfig, train_deep
from .estimators import Estimator, Priors, RiskConfig
from .exceptions import ConfigError, RiskADError
from .experiment import (
    ExperimentConfig,
    diagnose,
    load_dataset,
    pu_estimator,
    resolve_pi_p,
    run_benchmark,
    run_sweep,
)
from .losses import LOSSES
from .metrics import auc
from .shallow import LinearModel, score, train_shallow

log = logging.getLogger("riskad")

# defaults for every experiment setting; a config file and then flags override
DEFAULTS = {
    "data": None,
    "synthetic": None,
    "method": "rad-shallow",
    "loss": "modified-huber",
    "a": 0.1,
    "pi_p_e": 0.8,
    "train_ratio": 0.7,
    "labeled_fraction": 0.05,
    "trials": 30,
    "seed": 0,
    "reg": "l2",
    "lambda": "auto",
    "layers": [64, 32],
    "epochs": 50,
    "batch": 128,
    "lr": 1e-3,
    "weight_decay": 1e-4,
    "clip": "sub",
    "activation": "relu",
    "a_grid": [0.3, 0.7, 0.9],
    "pi_grid": ["1-pi_n", 0.9, 0.7, 0.6],
    "threads": None,
    "label_encoding": "auto",
    "out": None,
}


def _floats(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(float(tok))
        except ValueError:
            out.append(tok)
    return out


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _lambda(text: str):
    return text if text == "auto" else float(text)


def _add_experiment_flags(p: argparse.ArgumentParser, deep: bool = True) -> None:
    # every default is None so we can tell which flags were given
    p.add_argument("--config", help="JSON file with experiment settings")
    p.add_argument("--data", help="CSV file, last column = label (0 normal / 1 anomaly)")
    p.add_argument("--synthetic", help="synthetic dataset as JSON, e.g. '{\"n\": 2000, \"mean_sep\": 4}'")
    p.add_argument("--label-encoding", dest="label_encoding", choices=["auto", "01", "pm1"])
    p.add_argument("--method", choices=["rad-shallow", "rad-deep", "pu-shallow", "pn-shallow"])
    p.add_argument("--loss", choices=sorted(LOSSES))
    p.add_argument("--a", type=float, help="mixing weight in (0, 1)")
    p.add_argument("--pi-p", dest="pi_p_e", help="estimated normal-class prior, or '1-pi_n'")
    p.add_argument("--trials", type=int)
    p.add_argument("--train-ratio", dest="train_ratio", type=float)
    p.add_argument("--labeled", dest="labeled_fraction", type=float, help="labeled fraction of train")
    p.add_argument("--seed", type=int)
    p.add_argument("--reg", choices=["l2", "l1"])
    p.add_argument("--lambda", dest="lambda", type=_lambda, help="'auto' or a value")
    if deep:
        p.add_argument("--layers", type=_ints, help="hidden widths, e.g. 64,32")
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--weight-decay", dest="weight_decay", type=float)
        p.add_argument("--clip", choices=["sub", "reverse"])
        p.add_argument("--activation", choices=["relu", "tanh"])
    p.add_argument("--threads", type=int, help="worker cap (default: RISKAD_THREADS or CPU count)")
    p.add_argument("--out", help="output path")


def settings(args: argparse.Namespace) -> dict:
    """Merge defaults, the optional config file and explicit flags."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        file_values = json.loads(Path(args.config).read_text())
        unknown = set(file_values) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_values)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if isinstance(merged["synthetic"], str):
        merged["synthetic"] = json.loads(merged["synthetic"])
    if isinstance(merged["pi_p_e"], str):
        try:
            merged["pi_p_e"] = float(merged["pi_p_e"])
        except ValueError:
            pass
    return merged


def experiment_config(s: dict) -> ExperimentConfig:
    return ExperimentConfig(
        data=s["data"], synthetic=s["synthetic"], method=s["method"], loss=s["loss"],
        a=float(s["a"]), pi_p_e=s["pi_p_e"],
        protocol=SplitProtocol(float(s["train_ratio"]), float(s["labeled_fraction"]),
                               int(s["trials"]), int(s["seed"])),
        reg=s["reg"], lam=s["lambda"],
        deep=TrainConfig(hidden=tuple(s["layers"]), activation=s["activation"],
                         batch_size=int(s["batch"]), epochs=int(s["epochs"]),
                         learning_rate=float(s["lr"]), weight_decay=float(s["weight_decay"]),
                         seed=int(s["seed"]), clip_mode=s["clip"]),
        a_grid=tuple(s["a_grid"]), pi_grid=tuple(s["pi_grid"]),
        threads=s["threads"], label_encoding=s["label_encoding"],
    )


def _write(text: str, path) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen_data(args) -> int:
    if args.kind == "gaussian":
        ds = synth_gaussian(args.n, args.d, args.pi_n, args.mean_sep, args.seed)
        print(f"bayes_auc={ds.bayes_auc!r}", file=sys.stderr)
    else:
        if not args.data:
            raise ConfigError("--kind ad-setup needs --data (last column = class id)")
        raw = np.loadtxt(args.data, delimiter=",", ndmin=2, skiprows=args.skip_header)
        classes = raw[:, -1]
        positive = type(classes[0])(args.positive_class)
        ds = make_ad_setup(raw[:, :-1], classes, positive, args.pi_n, args.seed)
    save_csv(ds, args.out)
    print(f"wrote {ds.n} rows ({ds.d} features, pi_n={ds.pi_n:.4f}) to {args.out}", file=sys.stderr)
    return 0


def _trained_split(s: dict, trial: int):
    cfg = experiment_config(s)
    ds = load_dataset(cfg)
    split = make_trial_split(ds, cfg.protocol, trial)
    return cfg, ds, split


def cmd_train_shallow(args) -> int:
    s = settings(args)
    cfg, ds, split = _trained_split(s, args.trial)
    pi_p = resolve_pi_p(cfg.pi_p_e, ds)
    estimator = {"rad-shallow": Estimator.RAD_UNBIASED, "pn-shallow": Estimator.PN,
                 "pu-shallow": pu_estimator(cfg.loss)}.get(cfg.method, Estimator.RAD_UNBIASED)
    reg = cfg.reg if cfg.lam == "auto" else (cfg.reg, float(cfg.lam))
    model = train_shallow(split, cfg.loss, RiskConfig(cfg.a, Priors(pi_p), estimator), reg)
    out = s["out"] or "model.json"
    model.save(out)
    if args.split_out:
        save_split_indices(split, args.split_out)
    test_auc = auc(score(model, split.test_x), split.test_y)
    print(f"lambda={model.reg.lam!r} iters={model.n_iters} objective={model.history[-1]!r} "
          f"test_auc={test_auc:.4f} -> {out}")
    return 0


def cmd_train_deep(args) -> int:
    s = settings(args)
    cfg, ds, split = _trained_split(s, args.trial)
    pi_p = resolve_pi_p(cfg.pi_p_e, ds)
    model = train_deep(split, cfg.loss, RiskConfig(cfg.a, Priors(pi_p)), cfg.deep)
    out = s["out"] or "model.json"
    model.save(out)
    if args.split_out:
        save_split_indices(split, args.split_out)
    test_auc = auc(model.score(split.test_x), split.test_y)
    print(f"epochs={cfg.deep.epochs} objective={model.history[-1]!r} "
          f"test_auc={test_auc:.4f} -> {out}")
    return 0


def load_model(path):
    d = json.loads(Path(path).read_text())
    if d.get("kind") == "mlp":
        return MlpModel.from_dict(d)
    return LinearModel.from_dict(d)


def model_scores(model, x) -> np.ndarray:
    if isinstance(model, MlpModel):
        return model.score(x)
    return score(model, np.atleast_2d(x))


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    ds: LabeledDataset = load_csv(args.data, label_encoding=args.label_encoding)
    scores = model_scores(model, ds.features)
    if args.scores_out:
        np.savetxt(args.scores_out, scores, fmt="%.17g")
    print(f"n={ds.n} auc={auc(scores, ds.labels)!r}")
    return 0


def cmd_bench(args) -> int:
    s = settings(args)
    res = run_benchmark(experiment_config(s))
    _write(res.to_csv(), s["out"])
    print(res.table(), file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    s = settings(args)
    cfg = experiment_config(s)
    grid = _floats(args.grid) if args.grid is not None else None
    res = run_sweep(cfg, args.axis, grid)
    _write(res.to_csv(), s["out"])
    print(res.table(), file=sys.stderr)
    return 0


def cmd_diagnose(args) -> int:
    s = settings(args)
    report = diagnose(experiment_config(s), rho=args.rho, loss_sup=args.loss_sup)
    for key, value in report.items():
        print(f"{key:>14}: {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskad", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic or one-vs-rest dataset as CSV")
    p.add_argument("--kind", choices=["gaussian", "ad-setup"], default="gaussian")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--pi-n", dest="pi_n", type=float, default=0.1)
    p.add_argument("--mean-sep", dest="mean_sep", type=float, default=4.0)
    p.add_argument("--data", help="multiclass CSV for ad-setup (last column = class)")
    p.add_argument("--skip-header", dest="skip_header", type=int, default=0)
    p.add_argument("--positive-class", dest="positive_class", default="0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    for name, func, deep in (("train-shallow", cmd_train_shallow, False),
                             ("train-deep", cmd_train_deep, True)):
        p = sub.add_parser(name, help=f"train one model on one trial split ({name[6:]})")
        _add_experiment_flags(p, deep=deep)
        p.add_argument("--trial", type=int, default=0, help="which trial split to train on")
        p.add_argument("--split-out", dest="split_out", help="write split index lists (JSON)")
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="AUC of a saved model on a labeled CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-encoding", dest="label_encoding", default="auto",
                   choices=["auto", "01", "pm1"])
    p.add_argument("--scores-out", dest="scores_out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="repeated-trial benchmark, CSV of per-trial and mean(SE) rows")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="benchmark over a grid of a or pi_p_e")
    _add_experiment_flags(p)
    p.add_argument("--axis", choices=["a", "pi_p_e"], required=True)
    p.add_argument("--grid", help="comma-separated values (default: a_grid / pi_grid)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("diagnose", help="regularization constants, loss condition, bias bound")
    _add_experiment_flags(p, deep=False)
    p.add_argument("--rho", type=float, default=0.1, help="assumed lower bound on R_p^+(g)")
    p.add_argument("--loss-sup", dest="loss_sup", type=float,
                   help="bound on the loss over the score range (default: 1 for bounded losses)")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (RiskADError, ValueError, OSError) as exc:
        print(f"riskad: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
