"""
Surrogate losses and their constants
====================================

Every loss shipped with riskad comes with three constants (b1, b2, b3) that
bound it from above and below in a way the regularization rule relies on.
This script prints them, verifies the inequalities on a grid, and checks
which losses are symmetric or linear-odd.
"""

import numpy as np

from riskad import LOSSES, check_condition13, check_structural

# %%
# The constants, plus the flags stored with each loss
print(f"{'loss':<16}{'b1':>6}{'b2':>6}{'b3':>8}  bounded symmetric linear-odd")
for name, loss in LOSSES.items():
    print(f"{name:<16}{loss.b1:>6g}{loss.b2:>6g}{loss.b3:>8.4f}  "
          f"{loss.bounded!s:<8}{loss.symmetric!s:<10}{loss.linear_odd}")

# %%
# Check both inequalities on t in [-10, 10] with step 0.01
for name, loss in LOSSES.items():
    print(f"{name:<16} inequalities hold: {check_condition13(loss)}")

# %%
# The symmetric losses sum to one over the two labels, the linear-odd ones
# differ by -t. The check also confirms the stored flags are right.
t = np.linspace(-3, 3, 7)
for name in ("sigmoid", "ramp", "double-hinge", "logistic"):
    loss = LOSSES[name]
    r = check_structural(loss)
    print(f"{name:<14} l(t,+1)+l(t,-1) = {np.round(loss(t, 1) + loss(t, -1), 6)}")
    print(f"{'':<14} l(t,+1)-l(t,-1) = {np.round(loss(t, 1) - loss(t, -1), 6)}  -> {r}")

# %%
# Raising b2 on the sigmoid breaks the upper inequality somewhere
bad = LOSSES["sigmoid"].with_constants(b2=2.0)
print("sigmoid with b2=2 passes:", check_condition13(bad))
