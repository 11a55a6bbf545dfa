"""Dataset-level evaluation and the ablation runner."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import metrics
from .anchors import AnchorSet, fit_anchors
from .config import TrainConfig
from .data import ScenarioArrays, build_arrays, make_batch
from .errors import ConfigError, InputError
from .scenario import encode_scenario
from .training import load_checkpoint, save_checkpoint, train

log = logging.getLogger(__name__)

ABLATION_AXES = ("future_bev", "decoupled", "fusion", "iterations", "future_steps", "future_init",
                 "per_iteration_weights", "cross_mode_attention", "winner")
TABLE_METRICS = ("ade", "min_ade", "l2_avg", "collision_rate", "pdm", "miou")


@dataclass
class MetricsReport:
    n_scenarios: int
    l2: dict
    ade: float
    min_ade: float
    collision_rate: float
    pdm: dict
    miou: float
    records: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("records")
        return d

    def flat(self) -> dict:
        """Scalar view used by ablation tables."""
        return {"ade": self.ade, "min_ade": self.min_ade, "l2_avg": self.l2["avg"],
                "collision_rate": self.collision_rate, "miou": self.miou, "pdm": self.pdm["aggregate"],
                **{f"pdm_{k}": v for k, v in self.pdm.items() if k != "aggregate"}}


@torch.no_grad()
def predict(model, arrays: ScenarioArrays, batch_size: int = 32):
    """Selected-mode trajectory, all-mode final trajectories, selected future map per scenario."""
    model.eval()
    sel_traj, all_traj, fut_maps, cur_maps = [], [], [], []
    for start in range(0, len(arrays), batch_size):
        idx = np.arange(start, min(start + batch_size, len(arrays)))
        grid, status, _ = make_batch(arrays, idx)
        out = model(grid, status, decode_maps=False)
        plan = out.trace.final.plan
        sel = plan.mode_logits.argmax(-1)
        rows = torch.arange(len(idx))
        sel_traj.append(plan.traj_final[rows, sel])
        all_traj.append(plan.traj_final)
        fut_maps.append(model.decoder(out.trace.final.future_bev[rows, sel]).argmax(-1))
        cur_maps.append(out.current_map_logits.argmax(-1))
    cat = lambda xs: torch.cat(xs).numpy()
    return cat(sel_traj), cat(all_traj), cat(fut_maps), cat(cur_maps)


def evaluate(model, dataset, batch_size: int = 32) -> MetricsReport:
    """Open-loop metrics of the highest-scoring final trajectory, averaged over the dataset.

    ``model`` may be a FuturePlanner or a checkpoint path.
    """
    if dataset is None or len(dataset) == 0:
        raise InputError("cannot evaluate on an empty dataset")
    if isinstance(model, (str, Path)):
        model = load_checkpoint(model)[0]
    scenarios = list(dataset)
    arrays = build_arrays(scenarios, (4.0,), model.cfg.grid_size)
    sel, modes, fut, _ = predict(model, arrays, batch_size)
    records = []
    for i, s in enumerate(scenarios):
        gt = s.ego_future.astype(np.float64)
        pred = sel[i].astype(np.float64)
        sub = metrics.pdm_subscores(pred, s)
        rec = {"seed": s.seed, "template": s.template,
               "l2": metrics.l2_error(pred, gt),
               "ade": float(np.linalg.norm(pred - gt, axis=-1).mean()),
               "min_ade": float(np.linalg.norm(modes[i].astype(np.float64) - gt, axis=-1).mean(-1).min()),
               "collision": metrics.collision_flag(pred, s),
               "pdm": dict(sub, aggregate=metrics.pdm_aggregate(sub)),
               "miou": metrics.miou(fut[i], arrays.future_maps[i, -1])}
        records.append(rec)
    n = len(records)
    mean = lambda xs: float(sum(xs) / n)
    l2 = {k: mean([r["l2"][k] for r in records]) for k in records[0]["l2"]}
    pdm = {k: mean([r["pdm"][k] for r in records]) for k in records[0]["pdm"]}
    return MetricsReport(n, l2, mean([r["ade"] for r in records]), mean([r["min_ade"] for r in records]),
                         mean([r["collision"] for r in records]), pdm, mean([r["miou"] for r in records]), records)


def write_report(report: MetricsReport, path) -> None:
    """One JSON record per scenario followed by a summary line."""
    with open(path, "w") as f:
        for rec in report.records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
        f.write(json.dumps({"summary": report.summary()}, sort_keys=True) + "\n")


# ------------------------------------------------------------------------------ ablation

@dataclass
class AblationTable:
    rows: list  # dicts: variant, overrides, per-seed metrics, mean/sd/delta per metric
    seeds: list

    def row(self, variant: str) -> dict:
        return next(r for r in self.rows if r["variant"] == variant)

    def to_text(self, delimiter: str = "\t", metric_names=TABLE_METRICS) -> str:
        head = ["variant"] + [f"{m}_{s}" for m in metric_names for s in ("mean", "sd", "delta")]
        lines = [delimiter.join(head)]
        for r in self.rows:
            vals = [r["variant"]]
            for m in metric_names:
                vals += [f"{r['mean'][m]:.4f}", f"{r['sd'][m]:.4f}", f"{r['delta'][m]:+.4f}"]
            lines.append(delimiter.join(vals))
        return "\n".join(lines) + "\n"


def parse_axes(spec) -> dict:
    """``"future_bev=off;iterations=1,3"`` -> {"future_bev": ["off"], "iterations": ["1", "3"]}."""
    if isinstance(spec, dict):
        axes = spec
    else:
        axes = {}
        for part in filter(None, (p.strip() for p in (spec or "").split(";"))):
            if "=" not in part:
                raise ConfigError(f"ablation axis {part!r} is not name=value[,value]")
            name, vals = part.split("=", 1)
            axes[name.strip()] = [v.strip() for v in vals.split(",") if v.strip()]
    for name in axes:
        if name not in ABLATION_AXES:
            raise ConfigError(f"unknown ablation axis {name!r}; supported: {ABLATION_AXES}")
    return axes


def _variant_configs(base: TrainConfig, axes: dict) -> list:
    from .config import apply_overrides

    out = [("base", {})]
    for name, values in axes.items():
        for v in values:
            if isinstance(v, str):
                raw = v.replace("-", ",") if name == "future_steps" else v
                value = getattr(apply_overrides(base, [f"{name}={raw}"]), name)
            else:
                value = v
            out.append((f"{name}={v if isinstance(v, str) else json.dumps(v)}", {name: value}))
    return out


def _dataset_hash(scenarios) -> str:
    h = hashlib.sha256()
    for s in scenarios:
        h.update(encode_scenario(s))
    return h.hexdigest()[:16]


def _source_hash() -> str:
    """Digest of the package sources, so cached runs never outlive a code change."""
    h = hashlib.sha256()
    for f in sorted(Path(__file__).parent.glob("*.py")):
        h.update(f.name.encode() + f.read_bytes())
    return h.hexdigest()[:16]


def run_ablation(train_set, test_set, base_cfg: TrainConfig, axes=None, seeds=(0,), cache_dir=None,
                 anchors: AnchorSet | None = None) -> AblationTable:
    """Train every variant for every seed and tabulate test metrics against the base row.

    Anchors are fit on the training split per seed unless given. With
    ``cache_dir``, finished (variant, seed) runs are reused by content hash.
    """
    axes = parse_axes(axes or {})
    variants = _variant_configs(base_cfg, axes)
    data_key = _dataset_hash(train_set) + _dataset_hash(test_set) + _source_hash()
    futures = [s.ego_future for s in train_set]
    arrays_by_steps = {}
    per_seed = {name: [] for name, _ in variants}
    for seed in seeds:
        aset = anchors or fit_anchors(futures, base_cfg.num_modes, seed=seed)
        for name, overrides in variants:
            cfg = base_cfg.replace(seed=int(seed), **overrides)
            key = hashlib.sha256((cfg.hash() + data_key + aset.anchors.tobytes().hex()).encode()).hexdigest()[:20]
            cached = Path(cache_dir) / f"{key}.json" if cache_dir else None
            if cached is not None and cached.exists():
                per_seed[name].append(json.loads(cached.read_text()))
                continue
            steps_key = tuple(cfg.future_steps)
            if steps_key not in arrays_by_steps:
                arrays_by_steps[steps_key] = build_arrays(train_set, steps_key, cfg.grid_size)
            log.info("ablation %s seed %d", name, seed)
            result = train(arrays_by_steps[steps_key], aset, cfg)
            flat = evaluate(result.model, test_set).flat()
            per_seed[name].append(flat)
            if cached is not None:
                cached.parent.mkdir(parents=True, exist_ok=True)
                save_checkpoint(result.model, cached.with_suffix(".ckpt"), result.steps, result.history[-1]["total"])
                cached.write_text(json.dumps(flat, sort_keys=True))
    rows = []
    base_mean = None
    for name, overrides in variants:
        runs = per_seed[name]
        keys = runs[0].keys()
        mean = {k: float(np.mean([r[k] for r in runs])) for k in keys}
        sd = {k: float(np.std([r[k] for r in runs], ddof=1)) if len(runs) > 1 else 0.0 for k in keys}
        base_mean = base_mean or mean
        delta = {k: mean[k] - base_mean[k] for k in keys}
        rows.append({"variant": name, "overrides": overrides, "runs": runs, "mean": mean, "sd": sd,
                     "delta": delta})
    return AblationTable(rows, [int(s) for s in seeds])
