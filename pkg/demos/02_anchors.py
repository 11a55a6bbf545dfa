"""
Trajectory anchors
==================

K-means over flattened ground-truth futures gives the planner's mode
vocabulary. Modes are sorted by endpoint heading, so index 0 turns hardest
right and the last index hardest left.
"""

import numpy as np
import matplotlib.pyplot as plt

from _common import OUT
from futureplan import fit_anchors, generate_dataset
from futureplan.anchors import anchor_endpoints

futures = [s.ego_future for s in generate_dataset(range(1000))]
anchors = fit_anchors(futures, 16, seed=0)
print(f"{anchors.num_modes} anchors, inertia {anchors.inertia:.2f}")

ends = anchor_endpoints(anchors)
heading = np.degrees(np.arctan2(ends[:, 1], ends[:, 0]))
print("endpoint headings (deg):", np.round(heading, 1))

# Refitting with the same seed reproduces the set exactly.
print("deterministic:", np.array_equal(fit_anchors(futures, 16, seed=0).anchors, anchors.anchors))

fig, ax = plt.subplots(figsize=(5, 6))
for f in futures[:300]:
    ax.plot(f[:, 1], f[:, 0], color="0.85", lw=0.5)
for m, a in enumerate(anchors.anchors):
    ax.plot(a[:, 1], a[:, 0], ".-", lw=1.5)
    ax.annotate(str(m), a[-1, ::-1])
ax.invert_xaxis()
ax.set_aspect("equal")
ax.set_xlabel("y (left)")
ax.set_ylabel("x (forward)")
fig.savefig(OUT / "02_anchors.png", dpi=80)
print("wrote", OUT / "02_anchors.png")
