"""Risk-estimator-based semi-supervised anomaly detection.

Normal points are the positive class (+1), anomalies the negative class (-1).
A model is trained from a few labeled normals and anomalies plus an unlabeled
pool and scores new points; higher scores mean more normal.
"""
from .data import (
    LabeledDataset,
    SemiSupSplit,
    SplitProtocol,
    load_csv,
    make_ad_setup,
    make_trial_split,
    scale_features,
    synth_gaussian,
)
from .deep import MlpModel, TrainConfig, train_deep
from .estimators import (
    Estimator,
    Priors,
    RiskConfig,
    ScoreBatch,
    bias_bound,
    partial_mean,
    risk,
    risk_nu_convex,
    risk_nu_nonconvex,
    risk_pn,
    risk_pu_convex,
    risk_pu_nonconvex,
    risk_pu_nonneg,
    risk_pu_unbiased,
    risk_rad_nonneg,
    risk_rad_unbiased,
)
from .exceptions import (
    ConditionError,
    ConfigError,
    DomainError,
    MissingSourceError,
    RiskADError,
    TrainingError,
)
from .losses import LOSSES, LossSpec, check_condition13, check_structural, eval_loss, get_loss, grad_loss
from .metrics import aggregate, auc
from .regselect import RegChoice, data_norm_constants, lambda_min_l1, lambda_min_l2
from .shallow import LinearModel, score, train_shallow

__version__ = "0.1.0"
