"""
Repeated trials and sensitivity sweeps
======================================

The benchmark harness repeats split, fit and evaluation over independent
trials and reports mean(SE x 100). Sweeps repeat the benchmark over a grid
of the mixing weight ``a`` or of the prior estimate.
"""

from riskad.data import SplitProtocol
from riskad.experiment import ExperimentConfig, format_table, run_benchmark, run_sweep

base = dict(synthetic={"n": 2000, "d": 2, "pi_n": 0.1, "mean_sep": 3.0, "seed": 4},
            protocol=SplitProtocol(trials=10), loss="modified-huber")

# %%
# rAD against the two baselines
rows = []
for method in ("rad-shallow", "pu-shallow", "pn-shallow"):
    rows += run_benchmark(ExperimentConfig(method=method, **base)).aggregates
print(format_table(rows))

# %%
# Sensitivity to a and to the prior estimate ("1-pi_n" is the true prior)
print()
print(run_sweep(ExperimentConfig(**base), "a").table())
print()
print(run_sweep(ExperimentConfig(**base), "pi_p_e").table())

# %%
# The CSV form holds one row per trial followed by the aggregates
print()
print(run_benchmark(ExperimentConfig(**base)).to_csv().splitlines()[0])
