"""Static figures of a single scenario plus a numeric sidecar of every plotted array."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import build_arrays
from .errors import InputError

PANELS = ("current_map", "future_map", "trajectory", "modes")
_COLORS = np.array([[1.0, 1.0, 1.0], [0.78, 0.78, 0.78], [0.85, 0.33, 0.1], [0.0, 0.45, 0.74]])


@dataclass
class RenderSpec:
    scenario_seed: int
    panels: tuple = PANELS
    out: str = "render.png"

    def validate(self):
        if not self.panels:
            raise InputError("at least one panel is required")
        bad = [p for p in self.panels if p not in PANELS]
        if bad:
            raise InputError(f"unknown panels {bad}; choose from {PANELS}")
        parent = Path(self.out).resolve().parent
        if not parent.is_dir():
            raise InputError(f"output directory {parent} does not exist")


def sidecar_path(out) -> Path:
    return Path(str(out) + ".json")


def _round(a) -> list:
    return np.round(np.asarray(a, dtype=np.float64), 6).tolist()


def render(spec: RenderSpec, model, scenarios) -> dict:
    """Draw the requested panels for one scenario; returns the sidecar dict written beside the image."""
    from .evaluation import predict

    spec.validate()
    matches = [s for s in scenarios if s.seed == spec.scenario_seed]
    if not matches:
        raise InputError(f"scenario {spec.scenario_seed} is not in the dataset")
    s = matches[0]
    arrays = build_arrays([s], (4.0,), model.cfg.grid_size)
    sel, modes, fut, _ = predict(model, arrays, batch_size=1)
    data = {"current_map": arrays.grid[0], "future_map": fut[0],
            "trajectory": {"gt": s.ego_future, "final": sel[0]}, "modes": modes[0]}

    sidecar = {"scenario_seed": int(s.seed), "panels": list(spec.panels), "arrays": {}}
    for p in spec.panels:
        v = data[p]
        if isinstance(v, dict):
            sidecar["arrays"][p] = {k: _round(x) for k, x in v.items()}
        elif p.endswith("map"):
            sidecar["arrays"][p] = np.asarray(v).astype(int).tolist()
        else:
            sidecar["arrays"][p] = _round(v)
    _draw(spec, data)
    sidecar_path(spec.out).write_text(json.dumps(sidecar, sort_keys=True) + "\n")
    return sidecar


def _draw(spec: RenderSpec, data: dict):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = len(spec.panels)
    fig, axes = plt.subplots(1, n, figsize=(4 * n, 4), squeeze=False)
    half = data["current_map"].shape[0] / 2
    extent = (half, -half, -half, half)  # y-left on the horizontal axis, x-forward up
    for ax, p in zip(axes[0], spec.panels):
        ax.set_title(p.replace("_", " "))
        ax.set_aspect("equal")
        if p.endswith("map"):
            # rows index x, columns index y: rotate so forward points up
            img = _COLORS[np.asarray(data[p])][::-1, ::-1]
            ax.imshow(img, extent=extent)
            continue
        ax.imshow(_COLORS[data["current_map"]][::-1, ::-1], extent=extent, alpha=0.35)
        if p == "trajectory":
            gt, final = data[p]["gt"], data[p]["final"]
            ax.plot(gt[:, 1], gt[:, 0], "k.-", label="gt")
            ax.plot(final[:, 1], final[:, 0], "r.-", label="final")
            ax.legend(loc="lower right")
        else:
            for traj in data[p]:
                ax.plot(traj[:, 1], traj[:, 0], "-", lw=1)
        ax.set_xlim(half, -half)
        ax.set_ylim(-half, half)
    fig.tight_layout()
    fig.savefig(spec.out, dpi=80, metadata={"Software": None})
    plt.close(fig)
