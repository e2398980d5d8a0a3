"""
Expected similarity order around a reference view
=================================================

Views closer to the reference (or to its mirror at 180 - r) should look
more like it. The partial-order loss charges every adjacent pair in that
ranking whose similarity goes up instead of down.
"""

import numpy as np

from consdist.geometry import CameraPose, expected_order
from consdist.ordering_loss import finite_difference_gradient, partial_order_loss

ref = CameraPose(30)
views = [CameraPose(a) for a in (50, 140, -90)]
plan = expected_order(ref, views)
print("mirror of 30:", plan.mirrored.azimuth)
for idx, dist in plan.ranked:
    print(f"  view {views[idx].azimuth:6.1f} at distance {dist:5.1f}")

# %%
# Features on the unit circle with a deliberate violation: the view ranked
# second is more similar to the reference than the first one.

def unit(deg):
    return np.array([np.cos(np.radians(deg)), np.sin(np.radians(deg))])

feats = [unit(20), unit(40), unit(100)]   # indexed like `views`
ref_feat = unit(0)
rep = partial_order_loss(feats, ref_feat, plan)
print("\nsimilarities in rank order:", np.round(rep.similarities, 4))
print("L_P =", round(rep.value, 4), "violations =", rep.violations)

# %%
# Analytic gradients agree with central differences.
fd = finite_difference_gradient(feats, ref_feat, plan)
for i, (a, f) in enumerate(zip(rep.gradients, fd)):
    print(f"view {i}: analytic {np.round(a, 6)}  central {np.round(f, 6)}")
