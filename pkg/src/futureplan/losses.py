"""Winner-takes-all supervision: map cross-entropy, L1 trajectory regression, mode classification."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn.functional as F

from .errors import InputError
from .planner import PlanOutput


@dataclass
class Targets:
    current_map: torch.Tensor  # (B, R, R) long
    future_maps: torch.Tensor  # (B, S, R, R) long, one per predicted horizon
    gt: torch.Tensor  # (B, T, 2)


@dataclass
class LossBreakdown:
    map_curr: torch.Tensor
    map_fut: list
    traj_a: list
    traj_b: list
    traj_final: list
    cls: list
    total: torch.Tensor
    lambdas: tuple
    winners: list = field(default_factory=list)

    def components(self) -> dict:
        out = {"map_curr": self.map_curr}
        for i in range(len(self.map_fut)):
            for name in ("map_fut", "traj_a", "traj_b", "traj_final", "cls"):
                out[f"{name}/{i + 1}"] = getattr(self, name)[i]
        return out

    def as_dict(self) -> dict:
        d = {k: float(v.detach()) for k, v in self.components().items()}
        d["total"] = float(self.total.detach())
        return d


def _gather(x: torch.Tensor, idx: torch.Tensor) -> torch.Tensor:
    return x[torch.arange(x.shape[0], device=x.device), idx]


def ade(traj: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """Average displacement per mode: (B, M, T, 2) vs (B, T, 2) -> (B, M)."""
    return torch.linalg.vector_norm(traj - gt[:, None], dim=-1).mean(-1)


def select_winner(plan: PlanOutput, gt: torch.Tensor, rule: str = "ade") -> torch.Tensor:
    """Winning mode per sample; ADE ties resolve to the lowest index."""
    if rule == "score":
        return plan.mode_logits.argmax(dim=-1)
    return ade(plan.traj_final, gt).argmin(dim=-1)


def map_loss(logits: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean per-cell cross-entropy of (..., R, R, K) logits against (..., R, R) labels."""
    if logits.shape[:-1] != target.shape:
        raise InputError(f"logits {tuple(logits.shape)} do not match target {tuple(target.shape)}")
    return F.cross_entropy(logits.reshape(-1, logits.shape[-1]), target.reshape(-1).long())


def traj_loss(plan: PlanOutput, gt: torch.Tensor, winner: torch.Tensor):
    """(reg_a, reg_b, reg_final, cls); a disabled branch contributes zero."""
    zero = plan.traj_final.new_zeros(())
    regs = [F.l1_loss(_gather(t, winner), gt) if t is not None else zero
            for t in (plan.traj_a, plan.traj_b, plan.traj_final)]
    cls = F.cross_entropy(plan.mode_logits, winner)
    return regs[0], regs[1], regs[2], cls


def combine(map_curr, map_fut, traj_a, traj_b, traj_final, cls, lambdas=(10.0, 0.1, 1.0)):
    """lambda1 * curr + lambda2 * sum_i fut(i) + lambda3 * sum_i (a + b + final + cls)(i)."""
    l1, l2, l3 = lambdas
    fut = sum(map_fut)
    traj = sum(a + b + f + c for a, b, f, c in zip(traj_a, traj_b, traj_final, cls))
    return l1 * map_curr + l2 * fut + l3 * traj


def total_loss(output, targets: Targets, lambdas=(10.0, 0.1, 1.0), winner_rule: str = "ade",
               decoder=None) -> LossBreakdown:
    """Winner-takes-all loss over every iteration of ``output.trace``; see ``combine``."""
    if targets is None or targets.gt is None:
        raise InputError("total_loss needs current map, future map and trajectory targets")
    map_curr = map_loss(output.current_map_logits, targets.current_map)
    parts = {k: [] for k in ("map_fut", "traj_a", "traj_b", "traj_final", "cls")}
    winners = []
    for step in output.trace.steps:
        winner = select_winner(step.plan, targets.gt, winner_rule)
        winners.append(winner)
        horizon_losses = []
        n_h = len(step.future_bevs)
        if targets.future_maps.shape[1] != n_h:
            raise InputError(f"{targets.future_maps.shape[1]} future map targets for {n_h} predicted horizons")
        for h, fb in enumerate(step.future_bevs):
            if h == n_h - 1 and step.future_map_logits is not None:
                logits = _gather(step.future_map_logits, winner)
            else:
                if decoder is None:
                    raise InputError("future maps were not decoded and no decoder was given")
                logits = decoder(_gather(fb, winner))
            horizon_losses.append(map_loss(logits, targets.future_maps[:, h]))
        parts["map_fut"].append(torch.stack(horizon_losses).mean())
        for name, value in zip(("traj_a", "traj_b", "traj_final", "cls"), traj_loss(step.plan, targets.gt, winner)):
            parts[name].append(value)
    total = combine(map_curr, parts["map_fut"], parts["traj_a"], parts["traj_b"], parts["traj_final"],
                    parts["cls"], lambdas)
    return LossBreakdown(map_curr, parts["map_fut"], parts["traj_a"], parts["traj_b"], parts["traj_final"],
                         parts["cls"], total, tuple(lambdas), winners)
