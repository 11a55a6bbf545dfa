"""
Scoring plans
=============

The planning score gates on no-collision, drivable-area and time-to-collision
checks, then blends progress and comfort. Here a few hand-made plans are
scored on one scene with a lead vehicle.
"""

import numpy as np

from futureplan import generate_dataset
from futureplan import metrics

scene = next(s for s in generate_dataset(range(200)) if s.template == "stop" and s.agents)
gt = scene.ego_future.astype(np.float64)
lead = scene.agents[0].positions[1:].astype(np.float64)
print(f"seed {scene.seed}: ego travels {np.linalg.norm(gt[-1]):.1f} m; lead starts at {np.round(lead[0], 1)}")

plans = {
    "ground truth": gt,
    "stand still": np.zeros_like(gt),
    "twice as fast": 2 * gt,
    "drift left 4 m": gt + np.linspace(0, 4, 8)[:, None] * [0, 1],
    "swerve right": gt + np.linspace(0, 8, 8)[:, None] * [0, -1],
}
print(f"{'plan':>15} " + " ".join(f"{k:>5}" for k in metrics.SUBSCORES) + "  score  L2avg")
for name, plan in plans.items():
    sub = metrics.pdm_subscores(plan, scene)
    vals = " ".join(f"{sub[k]:5.2f}" for k in metrics.SUBSCORES)
    print(f"{name:>15} {vals}  {metrics.pdm_aggregate(sub):5.3f}  {metrics.l2_error(plan, gt)['avg']:5.2f}")
