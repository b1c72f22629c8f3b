"""
Training the linear detector
============================

Generate a polluted two-Gaussian dataset, take one 70/30 split with 5% of the
training rows labeled, and fit the linear detector. The same split is then
used for the PU and fully supervised PN baselines.
"""

import numpy as np

from riskad import Estimator, Priors, RiskConfig, SplitProtocol, auc, make_trial_split, score
from riskad import synth_gaussian, train_shallow
from riskad.experiment import pu_estimator

ds = synth_gaussian(n=2000, d=2, pi_n=0.1, mean_sep=4.0, seed=0)
split = make_trial_split(ds, SplitProtocol(), trial_index=0)
print(f"P={len(split.P)} N={len(split.N)} U={len(split.U)} test={len(split.test_y)}")
print(f"Bayes AUC of this mixture: {ds.bayes_auc:.5f}")

# %%
# Default settings: modified Huber, a = 0.1, prior estimate 0.8, automatic
# L2 strength. The history is the objective at each accepted step.
model = train_shallow(split, "modified-huber", RiskConfig(0.1, Priors(0.8)))
h = np.array(model.history)
print(f"lambda = {model.reg.lam:.5f}  (c = {model.reg.c:.4f} after scaling)")
print(f"{model.n_iters} iterations, objective {h[0]:.4f} -> {h[-1]:.4f}, min {h.min():.4f}")
print(f"test AUC: {auc(score(model, split.test_x), split.test_y):.5f}")

# %%
# Baselines on the same split
for label, cfg in [
    ("PU", RiskConfig(0.1, Priors(0.8), pu_estimator("modified-huber"))),
    ("PN", RiskConfig(0.1, Priors(0.8), Estimator.PN)),
]:
    m = train_shallow(split, "modified-huber", cfg)
    print(f"{label} baseline test AUC: {auc(score(m, split.test_x), split.test_y):.5f}")

# %%
# Scores for new points: higher means more normal
print(score(model, np.array([[0.0, 0.0], [4.0, 0.0], [8.0, 0.0]])))
