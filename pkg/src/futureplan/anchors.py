"""Anchor trajectory vocabulary: k-means over ground-truth ego futures."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError

_MAGIC = b"FPAN"
_VERSION = 1


@dataclass(eq=False)
class AnchorSet:
    anchors: np.ndarray  # (M, T, 2) float32
    fit_seed: int
    inertia: float
    history: list = field(default_factory=list)  # inertia after every Lloyd iteration

    @property
    def num_modes(self) -> int:
        return int(self.anchors.shape[0])

    @property
    def num_steps(self) -> int:
        return int(self.anchors.shape[1])

    def __eq__(self, other) -> bool:
        return (isinstance(other, AnchorSet) and self.fit_seed == other.fit_seed
                and self.inertia == other.inertia and self.anchors.shape == other.anchors.shape
                and np.array_equal(self.anchors, other.anchors))


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    # exact pairwise squared distances, fixed reduction order
    return ((x[:, None, :] - c[None, :, :]) ** 2).sum(-1)


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(len(x))]]
    d2 = _sq_dists(x, centers[0][None])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            raise InputError(f"fewer than {k} distinct trajectories to fit anchors on")
        idx = int(rng.choice(len(x), p=d2 / total))
        centers.append(x[idx])
        d2 = np.minimum(d2, _sq_dists(x, x[idx][None])[:, 0])
    return np.stack(centers)


def _endpoint_order(anchors: np.ndarray) -> np.ndarray:
    end = anchors[:, -1, :]
    ang = np.arctan2(end[:, 1], end[:, 0])
    # heading first, endpoint distance breaks ties
    return np.lexsort((np.hypot(end[:, 0], end[:, 1]), ang))


def fit_anchors(futures, num_modes: int, iters: int = 100, seed: int = 0) -> AnchorSet:
    """Cluster trajectories flattened to R^(2T) with seeded k-means++ and Lloyd updates."""
    x = np.stack([np.asarray(f, dtype=np.float64) for f in futures]) if len(futures) else np.zeros((0, 1, 2))
    if num_modes < 2:
        raise InputError("need at least 2 modes")
    if len(x) < num_modes:
        raise InputError(f"{len(x)} trajectories cannot seed {num_modes} anchors")
    n, t = x.shape[:2]
    flat = x.reshape(n, -1)
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(flat, num_modes, rng)

    history = []
    labels = None
    for _ in range(max(int(iters), 1)):
        d2 = _sq_dists(flat, centers)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        point_cost = d2[np.arange(n), labels]
        taken = set()
        for j in range(num_modes):
            members = labels == j
            if members.any():
                centers[j] = flat[members].mean(axis=0)
            else:
                # re-seed on the worst-served point not already used for another empty cluster
                for idx in np.argsort(-point_cost, kind="stable"):
                    if int(idx) not in taken:
                        break
                taken.add(int(idx))
                centers[j] = flat[idx]
                labels[idx] = j
                point_cost[idx] = 0.0
    d2 = _sq_dists(flat, centers)
    inertia = float(d2.min(axis=1).sum())
    history.append(inertia)

    anchors = centers.reshape(num_modes, t, 2)
    anchors = anchors[_endpoint_order(anchors)].astype(np.float32)
    if len(np.unique(anchors.reshape(num_modes, -1), axis=0)) != num_modes:
        raise InputError("k-means produced duplicate anchors; the corpus has too few distinct futures")
    return AnchorSet(np.ascontiguousarray(anchors), int(seed), inertia, history)


def anchor_endpoints(a: AnchorSet) -> np.ndarray:
    return a.anchors[:, -1, :].copy()


def save_anchors(a: AnchorSet, path) -> None:
    header = json.dumps({"M": a.num_modes, "T": a.num_steps, "seed": a.fit_seed,
                         "inertia": a.inertia, "history": a.history}).encode()
    payload = np.ascontiguousarray(a.anchors, dtype="<f4").tobytes()
    Path(path).write_bytes(_MAGIC + struct.pack("<II", _VERSION, len(header)) + header + payload)


def load_anchors(path) -> AnchorSet:
    blob = Path(path).read_bytes()
    if len(blob) < 12 or blob[:4] != _MAGIC:
        raise InputError(f"{path}: not an anchor file")
    version, hlen = struct.unpack("<II", blob[4:12])
    if version != _VERSION:
        raise InputError(f"{path}: anchor file version {version}, expected {_VERSION}")
    h = json.loads(blob[12:12 + hlen])
    payload = blob[12 + hlen:]
    if len(payload) != h["M"] * h["T"] * 2 * 4:
        raise InputError(f"{path}: anchor payload truncated")
    anchors = np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(h["M"], h["T"], 2)
    return AnchorSet(anchors, int(h["seed"]), float(h["inertia"]), list(h.get("history", [])))
