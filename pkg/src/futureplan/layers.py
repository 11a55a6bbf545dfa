"""Pre-norm transformer blocks shared by the world model and the planner."""

from __future__ import annotations

import torch
from torch import nn


class FeedForward(nn.Module):
    def __init__(self, dim: int, mult: int = 2):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(dim, dim * mult), nn.GELU(), nn.Linear(dim * mult, dim))

    def forward(self, x):
        return self.net(x)


class EncoderLayer(nn.Module):
    def __init__(self, dim: int, heads: int, ffn_mult: int = 2):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.ffn = FeedForward(dim, ffn_mult)

    def forward(self, x, pos=None):
        h = self.norm1(x)
        qk = h if pos is None else h + pos
        x = x + self.attn(qk, qk, h, need_weights=False)[0]
        return x + self.ffn(self.norm2(x))


class DecoderLayer(nn.Module):
    """Optional query self-attention, cross-attention to memory, feed-forward."""

    def __init__(self, dim: int, heads: int, ffn_mult: int = 2, self_attention: bool = True):
        super().__init__()
        self.self_attention = self_attention
        if self_attention:
            self.norm_sa = nn.LayerNorm(dim)
            self.sa = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm_q = nn.LayerNorm(dim)
        self.norm_kv = nn.LayerNorm(dim)
        self.ca = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm_ff = nn.LayerNorm(dim)
        self.ffn = FeedForward(dim, ffn_mult)

    def forward(self, q, memory, memory_pos=None):
        if self.self_attention:
            h = self.norm_sa(q)
            q = q + self.sa(h, h, h, need_weights=False)[0]
        mem = self.norm_kv(memory)
        key = mem if memory_pos is None else mem + memory_pos
        q = q + self.ca(self.norm_q(q), key, mem, need_weights=False)[0]
        return q + self.ffn(self.norm_ff(q))
