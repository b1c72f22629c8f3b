"""
Training the MLP detector
=========================

The network is trained with Adam on the clipped objective. Every mini-batch
is stratified so that it holds labeled positives, labeled negatives and
unlabeled rows.
"""

from riskad import Priors, RiskConfig, SplitProtocol, auc, make_trial_split, synth_gaussian
from riskad.deep import TrainConfig, train_deep

ds = synth_gaussian(n=3000, d=4, pi_n=0.1, mean_sep=3.0, seed=1)
split = make_trial_split(ds, SplitProtocol(), trial_index=0)
cfg = RiskConfig(0.1, Priors(0.8))

# %%
# Two runs that differ only in how a negative bracket is handled
for clip in ("sub", "reverse"):
    train = TrainConfig(hidden=(32, 16), epochs=30, seed=0, clip_mode=clip)
    model = train_deep(split, "logistic", cfg, train)
    every = model.history[::10]
    print(f"clip={clip:<8} objective every 10 epochs: " + ", ".join(f"{v:.4f}" for v in every))
    print(f"{'':<13} test AUC {auc(model.score(split.test_x), split.test_y):.5f} "
          f"(Bayes {ds.bayes_auc:.5f})")
