"""The full network: encoders, world model, planner and the unrolled loop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .config import TrainConfig
from .encoders import BevDecoder, BevEncoder, EgoEncoder
from .iterate import IterationTrace, run_iterations
from .planner import Planner
from .scenario import NUM_CLASSES
from .world_model import BevWorldModel

STATUS_DIM = 7


@dataclass
class ModelOutput:
    current_map_logits: torch.Tensor  # (B, R, R, K)
    trace: IterationTrace
    bev: torch.Tensor  # (B, H, W, C)
    ego: torch.Tensor  # (B, M, C), before any refinement


class FuturePlanner(nn.Module):
    def __init__(self, cfg: TrainConfig, anchors: np.ndarray):
        super().__init__()
        cfg.validate()
        anchors = np.asarray(anchors, dtype=np.float32)
        if anchors.shape[0] != cfg.num_modes:
            raise ValueError(f"config expects {cfg.num_modes} modes, anchors have {anchors.shape[0]}")
        self.cfg = cfg
        self.register_buffer("anchors", torch.from_numpy(anchors.copy()))
        m, t = anchors.shape[:2]
        c, tok = cfg.channels, cfg.bev_tokens
        self.bev_encoder = BevEncoder(NUM_CLASSES, c, cfg.grid_size, tok)
        self.ego_encoder = EgoEncoder(t, STATUS_DIM, c)
        self.decoder = BevDecoder(NUM_CLASSES, c, cfg.grid_size, tok)
        copies = cfg.iterations if cfg.per_iteration_weights else 1
        self.world_models = nn.ModuleList(
            BevWorldModel(c, tok, cfg.heads, cfg.world_model_layers, cfg.ffn_mult, cfg.cross_mode_attention)
            for _ in range(copies))
        self.planners = nn.ModuleList(
            Planner(c, m, t, tok, cfg.heads, cfg.planner_layers, cfg.ffn_mult, len(cfg.future_steps),
                    cfg.future_bev, cfg.decoupled, cfg.fusion, cfg.future_init, cfg.shared_ego_decoder)
            for _ in range(copies))

    @property
    def num_future_steps(self) -> int:
        return len(self.cfg.future_steps)

    def world_model_at(self, i: int) -> BevWorldModel:
        return self.world_models[i % len(self.world_models)]

    def planner_at(self, i: int) -> Planner:
        return self.planners[i % len(self.planners)]

    def forward(self, grid: torch.Tensor, status: torch.Tensor, iterations: int | None = None,
                decode_maps: bool = True) -> ModelOutput:
        """``grid`` is (B, K, R, R) one-hot planes, ``status`` (B, 7)."""
        bev = self.bev_encoder(grid)
        ego = self.ego_encoder(self.anchors, status)
        current = self.decoder(bev)
        trace = run_iterations(self, bev, ego, iterations or self.cfg.iterations, decode_maps)
        return ModelOutput(current, trace, bev, ego)
