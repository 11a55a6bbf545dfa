"""Observation and ego encoders plus the shared BEV semantic decoder.

BEV features are channels-last, ``(B, H, W, C)``; semantic logits are
``(B, R, R, K)``.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .errors import InputError


def one_hot_grid(labels: torch.Tensor, num_classes: int) -> torch.Tensor:
    """(B, R, R) integer labels -> (B, K, R, R) float planes."""
    return F.one_hot(labels.long(), num_classes).permute(0, 3, 1, 2).float()


class BevEncoder(nn.Module):
    """Non-overlapping patch extractor: each token sees exactly one patch of cells."""

    def __init__(self, num_classes: int, channels: int, grid_size: int, tokens: int):
        super().__init__()
        self.num_classes, self.grid_size, self.tokens = num_classes, grid_size, tokens
        patch = grid_size // tokens
        self.patch = nn.Conv2d(num_classes, channels, kernel_size=patch, stride=patch)
        self.mix = nn.Conv2d(channels, channels, kernel_size=1)

    def forward(self, grid: torch.Tensor) -> torch.Tensor:
        if grid.dim() != 4 or grid.shape[1:] != (self.num_classes, self.grid_size, self.grid_size):
            raise InputError(f"expected (B, {self.num_classes}, {self.grid_size}, {self.grid_size}) "
                             f"grid planes, got {tuple(grid.shape)}")
        x = self.mix(F.gelu(self.patch(grid)))
        return x.permute(0, 2, 3, 1)


class EgoEncoder(nn.Module):
    """MLP over each mode's flattened anchor concatenated with the shared ego status."""

    def __init__(self, num_steps: int, status_dim: int, channels: int):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(2 * num_steps + status_dim, channels), nn.GELU(),
                                 nn.Linear(channels, channels))

    def forward(self, anchors: torch.Tensor, status: torch.Tensor) -> torch.Tensor:
        # anchors (M, T, 2) or (B, M, T, 2); status (B, S)
        b, m = status.shape[0], anchors.shape[-3]
        flat = anchors.reshape(*anchors.shape[:-2], -1)
        if flat.dim() == 2:
            flat = flat.expand(b, m, -1)
        x = torch.cat([flat, status[:, None, :].expand(b, m, -1)], dim=-1)
        return self.net(x)


class BevDecoder(nn.Module):
    """Upsamples (B, H, W, C) tokens to (B, R, R, K) class logits."""

    def __init__(self, num_classes: int, channels: int, grid_size: int, tokens: int):
        super().__init__()
        patch = grid_size // tokens
        hidden = max(channels // 2, 4)
        self.pre = nn.Conv2d(channels, channels, kernel_size=1)
        self.up = nn.ConvTranspose2d(channels, hidden, kernel_size=patch, stride=patch)
        self.head = nn.Conv2d(hidden, num_classes, kernel_size=3, padding=1)

    def forward(self, feat: torch.Tensor) -> torch.Tensor:
        lead = feat.shape[:-3]
        x = feat.reshape(-1, *feat.shape[-3:]).permute(0, 3, 1, 2)
        x = self.head(F.gelu(self.up(F.gelu(self.pre(x)))))
        x = x.permute(0, 2, 3, 1)
        return x.reshape(*lead, *x.shape[1:])
