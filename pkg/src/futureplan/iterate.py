"""Unrolled world-model / planner refinement."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import torch

from .errors import ConfigError
from .planner import PlanOutput
from .world_model import assemble_scene


@dataclass
class TraceStep:
    future_bevs: list  # one (B, M, H, W, C) tensor per predicted horizon, last = 4 s
    plan: PlanOutput
    future_map_logits: Optional[torch.Tensor] = None  # (B, M, R, R, K) at 4 s, if decoded

    @property
    def future_bev(self) -> torch.Tensor:
        return self.future_bevs[-1]


@dataclass
class IterationTrace:
    steps: list

    def __len__(self):
        return len(self.steps)

    @property
    def final(self) -> TraceStep:
        return self.steps[-1]


def run_iterations(model, f_bev: torch.Tensor, f_ego0: torch.Tensor, n: int, decode_maps: bool = True) -> IterationTrace:
    """Alternate world model and planner ``n`` times, feeding the fused ego feature back.

    ``model`` supplies ``world_model_at(i)``, ``planner_at(i)``, ``decoder``,
    ``anchors`` and ``num_future_steps``.
    """
    if n < 1:
        raise ConfigError("iterations must be >= 1")
    steps = []
    f_ego = f_ego0
    for i in range(n):
        world, planner = model.world_model_at(i), model.planner_at(i)
        scene = assemble_scene(f_bev, f_ego)
        future_bevs = []
        for _ in range(model.num_future_steps):
            scene, fb = world(scene)
            future_bevs.append(fb)
        plan = planner(f_ego, f_bev, future_bevs, model.anchors)
        logits = model.decoder(future_bevs[-1]) if decode_maps else None
        steps.append(TraceStep(future_bevs, plan, logits))
        f_ego = plan.fused_ego
    return IterationTrace(steps)
