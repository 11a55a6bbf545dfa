"""
Synthetic scenes and their rasters
==================================

Every scene is a pure function of its integer seed. The ego sits at the origin
facing +x; y points left. A scene carries a drivable map, a few agent tracks
and the ego's 4 s future at 2 Hz.
"""

import numpy as np
import matplotlib.pyplot as plt

from _common import COLORS, OUT
from futureplan import generate_dataset, generate_scenario, rasterize

# One scene from each template. Seeds map to templates deterministically.
scenes = {}
for s in generate_dataset(range(40)):
    scenes.setdefault(s.template, s)
for name, s in scenes.items():
    print(f"{name:>10}: seed {s.seed}, command {s.command}, {len(s.agents)} agents, "
          f"final waypoint {np.round(s.ego_future[-1], 2)}")

# Same seed, same bytes.
a, b = generate_scenario(7), generate_scenario(7)
print("seed 7 regenerates identically:", a == b)

# The raster at t = 0 and at the 4 s horizon. Rows index x, columns index y.
# Flip both so forward points up and left is on the left.
fig, axes = plt.subplots(2, len(scenes), figsize=(3 * len(scenes), 6))
for col, (name, s) in enumerate(scenes.items()):
    for row, t in enumerate((0.0, 4.0)):
        grid = rasterize(s, t)
        axes[row, col].imshow(np.array(COLORS)[grid][::-1, ::-1], extent=(32, -32, -32, 32))
        axes[row, col].set_title(f"{name}, t={t:.0f} s")
    axes[0, col].plot(s.ego_future[:, 1], s.ego_future[:, 0], "k.-", ms=3)
fig.tight_layout()
fig.savefig(OUT / "01_scenarios.png", dpi=80)
print("wrote", OUT / "01_scenarios.png")
