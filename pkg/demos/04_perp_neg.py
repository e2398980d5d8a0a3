"""
Perp-Neg in score space
=======================

Perp-Neg removes only the part of a negative score that is perpendicular
to the positive one. In the toy the negative is the "front view" prompt,
weighted more heavily the further the camera sits from the front.
"""

import numpy as np

from consdist.config import Mode, RunConfig
from consdist.distillation import perp_neg_combine, run_distillation

pos = np.array([1.0, 0.0])
neg = np.array([1.0, 1.0])
print("pos - 0.5 * perp(neg):", perp_neg_combine(pos, [(neg, 0.5)]))

# %%
# Against the biased teacher it helps, though not as much as VDM.
for mode in Mode:
    res = run_distillation(RunConfig(mode=mode, lp_enabled=False))
    print(f"{mode.value:>8}: janus_metric = {res.final.janus_metric:.3f}")
