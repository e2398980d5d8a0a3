"""
View residuals and the injection schedule
=========================================

A view-augmented keyword ("dog, back view") differs from the plain keyword
by a residual. Removing the keyword direction leaves the part that only
talks about the view. Those residuals are then mixed back in, weighted by
camera azimuth.
"""

import numpy as np

from consdist.embedding import InjectionWeights, ViewLabel, inject_view, residuals_from_views
from consdist.geometry import CameraPose, injection_weights
from consdist.toyworld import default_teacher

teacher, keyword, subject, views = default_teacher()
residuals = residuals_from_views(keyword, views)

for label, res in residuals.items():
    cos = res.delta @ keyword / (np.linalg.norm(res.delta) * np.linalg.norm(keyword))
    print(f"{label.value:>5}: |delta| = {np.linalg.norm(res.delta):.3f}, cos(delta, keyword) = {cos:+.1e}")

# %%
# The schedule: side residual ramps up toward 90 degrees, then hands over to
# the back residual. With w1 = w3 = 1 the side weight is continuous at 90.

print("\n azimuth   side   back")
for az in range(0, 181, 15):
    side, back = injection_weights(CameraPose(az))
    print(f"{az:8d} {side:6.3f} {back:6.3f}")

# %%
# The injected embedding drifts from the side code toward the back code.
codes = teacher.view_codes
for az in (0, 45, 90, 135, 180):
    v = inject_view(keyword, az, residuals, InjectionWeights())
    sims = {lab.value: v @ codes[lab] / np.linalg.norm(v) for lab in ViewLabel}
    print(az, {k: round(float(s), 3) for k, s in sims.items()})
