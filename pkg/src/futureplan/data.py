"""Scenario lists to model-ready arrays and batches."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .encoders import one_hot_grid
from .losses import Targets
from .scenario import GRID_SIZE, NUM_CLASSES, RESOLUTION, rasterize


@dataclass
class ScenarioArrays:
    grid: np.ndarray  # (N, R, R) uint8 labels at t=0
    future_maps: np.ndarray  # (N, S, R, R) uint8 labels at each predicted horizon
    status: np.ndarray  # (N, 7) float32
    gt: np.ndarray  # (N, T, 2) float32

    def __len__(self):
        return len(self.grid)


def build_arrays(scenarios, future_steps=(4.0,), grid_size: int = GRID_SIZE) -> ScenarioArrays:
    if not scenarios:
        raise ValueError("no scenarios")
    res = RESOLUTION * GRID_SIZE / grid_size
    grid = np.stack([rasterize(s, 0.0, grid_size, res) for s in scenarios])
    fut = np.stack([np.stack([rasterize(s, t, grid_size, res) for t in future_steps]) for s in scenarios])
    status = np.stack([s.ego_status.vector() for s in scenarios])
    gt = np.stack([s.ego_future for s in scenarios]).astype(np.float32)
    return ScenarioArrays(grid, fut, status, gt)


def make_batch(arrays: ScenarioArrays, idx, dtype=torch.float32):
    """(grid planes, status, Targets) for the given sample indices."""
    idx = np.asarray(idx)
    labels = torch.from_numpy(arrays.grid[idx].astype(np.int64))
    grid = one_hot_grid(labels, NUM_CLASSES).to(dtype)
    status = torch.from_numpy(arrays.status[idx]).to(dtype)
    targets = Targets(labels, torch.from_numpy(arrays.future_maps[idx].astype(np.int64)),
                      torch.from_numpy(arrays.gt[idx]).to(dtype))
    return grid, status, targets
