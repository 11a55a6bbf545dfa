"""End-to-end training loop and checkpoint persistence."""

from __future__ import annotations

import json
import logging
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .anchors import AnchorSet
from .config import TrainConfig
from .data import ScenarioArrays, build_arrays, make_batch
from .errors import CheckpointError, InputError, TrainingDivergedError
from .losses import total_loss
from .model import FuturePlanner

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
_MAGIC = b"FPCK"


@dataclass
class TrainResult:
    model: FuturePlanner
    history: list = field(default_factory=list)  # one loss dict per step

    @property
    def steps(self) -> int:
        return len(self.history)


def build_model(cfg: TrainConfig, anchors) -> FuturePlanner:
    anchors = anchors.anchors if isinstance(anchors, AnchorSet) else anchors
    torch.manual_seed(cfg.seed)
    return FuturePlanner(cfg, anchors)


def loss_for_batch(model: FuturePlanner, arrays: ScenarioArrays, idx, dtype=torch.float32):
    cfg = model.cfg
    grid, status, targets = make_batch(arrays, idx, dtype)
    out = model(grid, status, decode_maps=False)
    return total_loss(out, targets, (cfg.lambda_map_curr, cfg.lambda_map_fut, cfg.lambda_traj),
                      cfg.winner, decoder=model.decoder)


def _check_finite(breakdown, step: int):
    for name, v in breakdown.components().items():
        if not torch.isfinite(v).all():
            raise TrainingDivergedError(f"step {step}: loss component {name} is non-finite ({float(v.detach())})")
    if not torch.isfinite(breakdown.total):
        raise TrainingDivergedError(f"step {step}: total loss is non-finite")


def _batches(n: int, cfg: TrainConfig):
    rng = np.random.default_rng(cfg.seed)
    total = cfg.max_steps if cfg.max_steps is not None else cfg.epochs * math.ceil(n / cfg.batch_size)
    step = 0
    while step < total:
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            if step >= total:
                return
            yield order[start:start + cfg.batch_size]
            step += 1


def train(dataset, anchors, cfg: TrainConfig, log_path=None, model: FuturePlanner | None = None) -> TrainResult:
    """Train on a scenario list (or prebuilt ScenarioArrays); deterministic for a given seed."""
    cfg.validate()
    arrays = dataset if isinstance(dataset, ScenarioArrays) else (
        build_arrays(dataset, cfg.future_steps, cfg.grid_size) if len(dataset) else None)
    if arrays is None or len(arrays) == 0:
        raise InputError("training dataset is empty")
    model = model or build_model(cfg, anchors)
    model.train()
    opt = torch.optim.AdamW(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    history = []
    sink = open(log_path, "w") if log_path else None
    try:
        for step, idx in enumerate(_batches(len(arrays), cfg)):
            breakdown = loss_for_batch(model, arrays, idx)
            _check_finite(breakdown, step)
            opt.zero_grad(set_to_none=True)
            breakdown.total.backward()
            if cfg.grad_clip:
                torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
            opt.step()
            record = dict(step=step, **breakdown.as_dict())
            history.append(record)
            if sink:
                sink.write(json.dumps(record) + "\n")
            if step % 200 == 0:
                log.info("step %d total %.4f", step, record["total"])
    finally:
        if sink:
            sink.close()
    model.eval()
    return TrainResult(model, history)


# ---------------------------------------------------------------------------- checkpoints

def save_checkpoint(model: FuturePlanner, path, step: int = 0, loss: float | None = None) -> dict:
    entries, chunks, offset = [], [], 0
    for name, t in model.state_dict().items():
        arr = t.detach().cpu().numpy()
        b = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(b)
        offset += len(b)
    header = {"format_version": CHECKPOINT_VERSION, "config": model.cfg.to_dict(),
              "config_hash": model.cfg.hash(), "step": int(step),
              "loss": None if loss is None else float(loss), "tensors": entries, "payload_bytes": offset}
    hb = json.dumps(header, sort_keys=True).encode()
    Path(path).write_bytes(_MAGIC + struct.pack("<II", CHECKPOINT_VERSION, len(hb)) + hb + b"".join(chunks))
    return header


def read_checkpoint_header(blob: bytes, path="<checkpoint>") -> tuple[dict, bytes]:
    if len(blob) < 12 or blob[:4] != _MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, hlen = struct.unpack("<II", blob[4:12])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    if len(blob) < 12 + hlen:
        raise CheckpointError(f"{path}: header truncated")
    try:
        header = json.loads(blob[12:12 + hlen])
    except ValueError as e:
        raise CheckpointError(f"{path}: unreadable header ({e})") from None
    payload = blob[12 + hlen:]
    if len(payload) != header["payload_bytes"]:
        raise CheckpointError(f"{path}: payload truncated ({len(payload)} of {header['payload_bytes']} bytes)")
    return header, payload


def load_checkpoint(path, config: TrainConfig | None = None, strict: bool = False):
    """Rebuild the model from a checkpoint; returns ``(model, header)``.

    When ``config`` is given and its hash differs from the stored one, raise
    under ``strict`` and warn otherwise. The stored config always wins.
    """
    header, payload = read_checkpoint_header(Path(path).read_bytes(), path)
    if config is not None and config.hash() != header["config_hash"]:
        msg = f"{path}: config hash {config.hash()} differs from checkpoint {header['config_hash']}"
        if strict:
            raise CheckpointError(msg)
        warnings.warn(msg, stacklevel=2)
    cfg = TrainConfig.from_dict(header["config"])
    state = {}
    for e in header["tensors"]:
        n = int(np.prod(e["shape"])) * 4
        arr = np.frombuffer(payload[e["offset"]:e["offset"] + n], dtype="<f4").astype(np.float32)
        state[e["name"]] = torch.from_numpy(arr.reshape(e["shape"]).copy())
    for name, t in state.items():
        if not torch.isfinite(t).all():
            raise CheckpointError(f"{path}: tensor {name} has non-finite values")
    model = FuturePlanner(cfg, state["anchors"].numpy())
    try:
        model.load_state_dict(state)
    except RuntimeError as e:
        raise CheckpointError(f"{path}: parameters do not fit the stored config ({e})") from None
    model.eval()
    return model, header
