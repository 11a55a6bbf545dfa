"""Future BEV world model over per-mode scene tokens."""

from __future__ import annotations

import torch
from torch import nn

from .errors import InputError
from .layers import EncoderLayer


def assemble_scene(f_bev: torch.Tensor, f_ego: torch.Tensor) -> torch.Tensor:
    """(B, H, W, C) BEV + (B, M, C) ego -> (B, M, HW+1, C); ego token last."""
    if f_bev.shape[-1] != f_ego.shape[-1]:
        raise InputError(f"channel mismatch: bev {f_bev.shape[-1]} vs ego {f_ego.shape[-1]}")
    b, h, w, c = f_bev.shape
    m = f_ego.shape[1]
    tokens = f_bev.reshape(b, 1, h * w, c).expand(b, m, h * w, c)
    return torch.cat([tokens, f_ego[:, :, None, :]], dim=2)


class BevWorldModel(nn.Module):
    """Transformer encoder mapping current scene tokens to future scene tokens.

    By default every mode is an independent sequence; ``cross_mode=True``
    lets all modes' tokens attend to each other.
    """

    def __init__(self, channels: int, tokens: int, heads: int = 4, layers: int = 2,
                 ffn_mult: int = 2, cross_mode: bool = False):
        super().__init__()
        self.tokens = tokens
        self.cross_mode = cross_mode
        self.pos = nn.Parameter(torch.randn(tokens * tokens + 1, channels) * 0.02)
        self.layers = nn.ModuleList(EncoderLayer(channels, heads, ffn_mult) for _ in range(layers))
        self.norm = nn.LayerNorm(channels)

    def forward(self, scene: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        b, m, n, c = scene.shape
        if n != self.tokens * self.tokens + 1:
            raise InputError(f"expected {self.tokens ** 2 + 1} scene tokens, got {n}")
        x = scene + self.pos
        x = x.reshape(b, m * n, c) if self.cross_mode else x.reshape(b * m, n, c)
        for layer in self.layers:
            x = layer(x)
        out = self.norm(x).reshape(b, m, n, c)
        future_bev = out[:, :, :-1].reshape(b, m, self.tokens, self.tokens, c)
        return out, future_bev


def predict_future(world_model: BevWorldModel, scene: torch.Tensor):
    return world_model(scene)


def decode_future_map(decoder: nn.Module, future_bev: torch.Tensor) -> torch.Tensor:
    """Shared BEV decoder applied per mode: (B, M, H, W, C) -> (B, M, R, R, K)."""
    return decoder(future_bev)
