"""Future-aware planner: decoupled current/future cross-attention, ego fusion, trajectory heads.

Trajectories are anchor plus a predicted offset; offset heads start at zero so
an untrained planner reproduces its anchors exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn

from .layers import DecoderLayer


@dataclass
class PlanOutput:
    traj_a: Optional[torch.Tensor]  # (B, M, T, 2); None when the branch is disabled
    traj_b: Optional[torch.Tensor]
    traj_final: torch.Tensor
    mode_logits: torch.Tensor  # (B, M)
    fused_ego: torch.Tensor  # (B, M, C)

    def trajectories(self) -> dict:
        return {k: v for k, v in (("a", self.traj_a), ("b", self.traj_b), ("final", self.traj_final))
                if v is not None}


class EgoDecoder(nn.Module):
    def __init__(self, channels: int, num_steps: int):
        super().__init__()
        self.num_steps = num_steps
        self.hidden = nn.Linear(channels, channels)
        self.out = nn.Linear(channels, 2 * num_steps)
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)

    def forward(self, f: torch.Tensor) -> torch.Tensor:
        return self.out(F.gelu(self.hidden(f))).reshape(*f.shape[:-1], self.num_steps, 2)


class MotionLayerNorm(nn.Module):
    """out = gamma(cond) * LayerNorm(x) + beta(cond); identity-modulated at init."""

    def __init__(self, channels: int):
        super().__init__()
        # tiny eps keeps the output invariant to rescaling the input
        self.norm = nn.LayerNorm(channels, eps=1e-9, elementwise_affine=False)
        self.gamma = nn.Sequential(nn.Linear(channels, channels), nn.GELU(), nn.Linear(channels, channels))
        self.beta = nn.Sequential(nn.Linear(channels, channels), nn.GELU(), nn.Linear(channels, channels))
        for head, bias in ((self.gamma[-1], 1.0), (self.beta[-1], 0.0)):
            nn.init.zeros_(head.weight)
            nn.init.constant_(head.bias, bias)

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        return self.gamma(cond) * self.norm(x) + self.beta(cond)


class ConcatFusion(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(2 * channels, channels), nn.GELU(), nn.Linear(channels, channels))

    def forward(self, x, cond):
        return self.net(torch.cat([x, cond], dim=-1))


class AddFusion(nn.Module):
    def forward(self, x, cond):
        return x + cond


class Planner(nn.Module):
    def __init__(self, channels: int, num_modes: int, num_steps: int, bev_tokens: int, heads: int = 4,
                 layers: int = 1, ffn_mult: int = 2, future_steps: int = 1, future_bev: bool = True,
                 decoupled: bool = True, fusion: str = "mln", future_init: str = "endpoints",
                 shared_ego_decoder: bool = False):
        super().__init__()
        self.future_bev, self.decoupled = future_bev, decoupled
        self.future_init = future_init
        hw = bev_tokens * bev_tokens
        self.bev_pos = nn.Parameter(torch.randn(hw, channels) * 0.02)
        self.current_layers = nn.ModuleList(DecoderLayer(channels, heads, ffn_mult, self_attention=True)
                                            for _ in range(layers))
        self.score_head = nn.Linear(channels, 1)
        self.head_a = EgoDecoder(channels, num_steps)
        self.head_final = self.head_a if shared_ego_decoder else EgoDecoder(channels, num_steps)
        if not future_bev:
            return
        self.future_pos = nn.Parameter(torch.randn(future_steps * hw, channels) * 0.02)
        if not decoupled:
            self.joint_layers = nn.ModuleList(DecoderLayer(channels, heads, ffn_mult, self_attention=False)
                                              for _ in range(layers))
            return
        if future_init == "endpoints":
            self.future_embed = nn.Sequential(nn.Linear(2, channels), nn.GELU(), nn.Linear(channels, channels))
        elif future_init == "trajectory":
            self.future_embed = nn.Sequential(nn.Linear(2 * num_steps, channels), nn.GELU(),
                                              nn.Linear(channels, channels))
        else:
            self.future_query = nn.Parameter(torch.randn(num_modes, channels))
        self.future_layers = nn.ModuleList(DecoderLayer(channels, heads, ffn_mult, self_attention=False)
                                           for _ in range(layers))
        self.head_b = self.head_a if shared_ego_decoder else EgoDecoder(channels, num_steps)
        self.fusion = {"mln": MotionLayerNorm, "cat": ConcatFusion}.get(fusion, lambda c: AddFusion())(channels)

    # -- branches -------------------------------------------------------------------------

    def attend_current(self, f_ego: torch.Tensor, f_bev: torch.Tensor) -> torch.Tensor:
        """Every mode query cross-attends to the shared current BEV tokens."""
        mem = f_bev.reshape(f_bev.shape[0], -1, f_bev.shape[-1])
        q = f_ego
        for layer in self.current_layers:
            q = layer(q, mem, self.bev_pos)
        return q

    def init_future_ego(self, anchors: torch.Tensor, batch: int) -> torch.Tensor:
        """Future ego queries from anchor endpoints (default), full anchors, or free embeddings."""
        if self.future_init == "random":
            q = self.future_query
        elif self.future_init == "trajectory":
            q = self.future_embed(anchors.reshape(anchors.shape[0], -1))
        else:
            q = self.future_embed(anchors[:, -1, :])
        return q.unsqueeze(0).expand(batch, -1, -1)

    def _future_memory(self, future_bev):
        if isinstance(future_bev, torch.Tensor):
            future_bev = [future_bev]
        b, m, h, w, c = future_bev[0].shape
        mem = torch.cat([fb.reshape(b, m, h * w, c) for fb in future_bev], dim=2)
        return mem.reshape(b * m, -1, c)

    def attend_future(self, f_ego_fut: torch.Tensor, future_bev) -> torch.Tensor:
        """Mode m attends only to its own future BEV tokens."""
        b, m, c = f_ego_fut.shape
        mem = self._future_memory(future_bev)
        q = f_ego_fut.reshape(b * m, 1, c)
        for layer in self.future_layers:
            q = layer(q, mem, self.future_pos)
        return q.reshape(b, m, c)

    def attend_joint(self, f_ego: torch.Tensor, f_bev: torch.Tensor, future_bev) -> torch.Tensor:
        """Non-decoupled variant: one decoder over current and own-mode future tokens."""
        b, m, c = f_ego.shape
        fut = self._future_memory(future_bev)
        cur = f_bev.reshape(b, 1, -1, c).expand(b, m, -1, c).reshape(b * m, -1, c)
        mem = torch.cat([cur, fut], dim=1)
        pos = torch.cat([self.bev_pos, self.future_pos], dim=0)
        q = f_ego.reshape(b * m, 1, c)
        for layer in self.joint_layers:
            q = layer(q, mem, pos)
        return q.reshape(b, m, c)

    def fuse(self, f_curr: torch.Tensor, f_fut: torch.Tensor) -> torch.Tensor:
        return self.fusion(f_curr, f_fut)

    @staticmethod
    def decode_traj(head: EgoDecoder, f: torch.Tensor, anchors: torch.Tensor) -> torch.Tensor:
        return anchors + head(f)

    # -- full step ------------------------------------------------------------------------

    def forward(self, f_ego: torch.Tensor, f_bev: torch.Tensor, future_bev, anchors: torch.Tensor) -> PlanOutput:
        cur = self.attend_current(f_ego, f_bev)
        logits = self.score_head(cur).squeeze(-1)
        traj_a = self.decode_traj(self.head_a, cur, anchors)
        if not self.future_bev:
            return PlanOutput(traj_a, None, self.decode_traj(self.head_final, cur, anchors), logits, cur)
        if not self.decoupled:
            joint = self.attend_joint(f_ego, f_bev, future_bev)
            logits = self.score_head(joint).squeeze(-1)
            return PlanOutput(None, None, self.decode_traj(self.head_final, joint, anchors), logits, joint)
        fut = self.attend_future(self.init_future_ego(anchors, f_ego.shape[0]), future_bev)
        traj_b = self.decode_traj(self.head_b, fut, anchors)
        fused = self.fuse(cur, fut)
        return PlanOutput(traj_a, traj_b, self.decode_traj(self.head_final, fused, anchors), logits, fused)


plan_step = Planner.forward
