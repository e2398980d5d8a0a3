"""
A Janus problem on a ring of bins
=================================

The toy object is 32 azimuth bins of 8-dim features. The teacher prefers
the front template, so with the plain prompt most of the ring drifts
toward a front face. VDM swaps in a view-specific conditioning and the
ring converges to its per-view targets.
"""

from consdist.config import Mode, RunConfig
from consdist.distillation import run_distillation
from consdist.geometry import CameraPose
from consdist.ordering_loss import cosine_sim
from consdist.toyworld import bin_centers, similarity_profile

runs = {}
for mode in (Mode.BASELINE, Mode.VDM):
    runs[mode] = run_distillation(RunConfig(mode=mode, lp_enabled=False))
    print(f"{mode.value:>8}: janus_metric = {runs[mode].final.janus_metric:.3f}")

# %%
# Similarity to the front render, as a crude bar chart. The baseline ring
# stays close to 1 far past the side views.

for mode, res in runs.items():
    print(f"\n{mode.value}")
    for az, s in similarity_profile(res.world, CameraPose(0), samples=16):
        bar = "#" * int(round(20 * max(s, 0)))
        print(f"{az:8.1f} {s:+.3f} {bar}")

# %%
# The metric per bin: "J" marks a bin closer to the front template than to
# its own target, "." a healthy bin, "*" the front bin itself (not counted).
# Even healthy bins lean toward the front; the teacher's prior never
# switches off, it just stops winning.

teacher = runs[Mode.BASELINE].teacher
front = teacher.template(teacher.preferred)
for mode, res in runs.items():
    marks = []
    for az, row in zip(bin_centers(32), res.world.bins):
        target = teacher.target(float(az))
        if cosine_sim(target, front) >= 1 - 1e-12:
            marks.append("*")
        else:
            marks.append("J" if cosine_sim(row, front) > cosine_sim(row, target) else ".")
    print(mode.value.ljust(8), "".join(marks))
