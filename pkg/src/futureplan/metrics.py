"""Open-loop planning metrics and a simplified PDM score.

Threshold constants are part of the metric definition; hand-scored test
tables depend on them.
"""

from __future__ import annotations

import numpy as np
import shapely

from .geometry import box_polygon, drivable_union, headings_from_waypoints, progress_along, wrap_angle
from .scenario import DT, Scenario

L2_HORIZONS = (1.0, 2.0, 3.0, 4.0)
TTC_PROJECTION_TIMES = (0.0, 0.5, 1.0)
COMFORT_MAX_ACCEL = 8.0
COMFORT_MAX_JERK = 15.0
COMFORT_MAX_YAW_RATE = 1.5
MIN_GT_PROGRESS = 0.1
SUBSCORES = ("NC", "DAC", "TTC", "EP", "Comf")


def l2_error(pred, gt, dt: float = DT, horizons=L2_HORIZONS) -> dict:
    """Displacement at the waypoint nearest each horizon, plus their mean under ``avg``."""
    pred, gt = np.asarray(pred, dtype=np.float64), np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"trajectory shapes differ: {pred.shape} vs {gt.shape}")
    dist = np.linalg.norm(pred - gt, axis=-1)
    out = {}
    for h in horizons:
        k = int(np.clip(round(h / dt) - 1, 0, len(dist) - 1))
        out[f"{h:g}s"] = float(dist[k])
    out["avg"] = float(np.mean([out[f"{h:g}s"] for h in horizons]))
    return out


def _ego_boxes(pred: np.ndarray, box, offsets=None):
    heads = headings_from_waypoints(pred)
    return [box_polygon(p, h, *box) for p, h in zip(pred, heads)], heads


def _overlap(a, b) -> bool:
    return a.intersects(b) and not a.touches(b)


def collision_flag(pred, s: Scenario) -> int:
    """1 iff the ego box overlaps any agent box at any future step."""
    pred = np.asarray(pred, dtype=np.float64)
    boxes, _ = _ego_boxes(pred, s.ego_box.astype(np.float64))
    for k, ego in enumerate(boxes, start=1):
        for a in s.agents:
            other = box_polygon(a.positions[k].astype(np.float64), float(a.headings[k]), *a.box.astype(np.float64))
            if _overlap(ego, other):
                return 1
    return 0


collision_rate = collision_flag


def drivable_compliance(pred, s: Scenario) -> int:
    pred = np.asarray(pred, dtype=np.float64)
    area = drivable_union([p.astype(np.float64) for p in s.map.drivable_polygons])
    boxes, _ = _ego_boxes(pred, s.ego_box.astype(np.float64))
    return int(all(area.covers(b) for b in boxes))


def ttc_compliance(pred, s: Scenario) -> int:
    """1 iff constant-velocity projections of ego and agents stay apart for 1 s from every waypoint."""
    pred = np.asarray(pred, dtype=np.float64)
    pts = np.vstack([np.zeros((1, 2)), pred])
    ego_vel = np.diff(pts, axis=0) / DT
    heads = headings_from_waypoints(pred)
    ebox = s.ego_box.astype(np.float64)
    for k in range(1, len(pts)):
        for a in s.agents:
            apos = a.positions.astype(np.float64)
            avel = (apos[k] - apos[k - 1]) / DT
            for tau in TTC_PROJECTION_TIMES:
                e = box_polygon(pts[k] + tau * ego_vel[k - 1], heads[k - 1], *ebox)
                o = box_polygon(apos[k] + tau * avel, float(a.headings[k]), *a.box.astype(np.float64))
                if _overlap(e, o):
                    return 0
    return 1


def ego_progress(pred, s: Scenario) -> float:
    route = s.map.route.astype(np.float64)
    start = progress_along(route, (0.0, 0.0))
    gt_progress = progress_along(route, s.ego_future[-1].astype(np.float64)) - start
    if gt_progress < MIN_GT_PROGRESS:
        return 1.0
    progress = progress_along(route, np.asarray(pred, dtype=np.float64)[-1]) - start
    return float(np.clip(progress / gt_progress, 0.0, 1.0))


def comfort(pred, dt: float = DT) -> int:
    pts = np.vstack([np.zeros((1, 2)), np.asarray(pred, dtype=np.float64)])
    vel = np.diff(pts, axis=0) / dt
    acc = np.diff(vel, axis=0) / dt
    jerk = np.diff(acc, axis=0) / dt
    heads = np.concatenate([[0.0], headings_from_waypoints(pts[1:])])
    yaw_rate = wrap_angle(np.diff(heads)) / dt
    ok = (np.linalg.norm(acc, axis=1).max(initial=0.0) <= COMFORT_MAX_ACCEL
          and np.linalg.norm(jerk, axis=1).max(initial=0.0) <= COMFORT_MAX_JERK
          and np.abs(yaw_rate).max(initial=0.0) <= COMFORT_MAX_YAW_RATE)
    return int(ok)


def pdm_subscores(pred, s: Scenario) -> dict:
    return {"NC": float(1 - collision_flag(pred, s)), "DAC": float(drivable_compliance(pred, s)),
            "TTC": float(ttc_compliance(pred, s)), "EP": ego_progress(pred, s), "Comf": float(comfort(pred))}


def pdm_aggregate(sub: dict, ddc: float = 1.0) -> float:
    """NC * DAC * TTC * (5 EP + 5 Comf + 2 DDC) / 12; direction compliance is held at 1."""
    return sub["NC"] * sub["DAC"] * sub["TTC"] * (5 * sub["EP"] + 5 * sub["Comf"] + 2 * ddc) / 12


def miou(pred_map, target, num_classes: int = 4) -> float:
    """Mean IoU over the classes present in ``target``."""
    pred_map, target = np.asarray(pred_map), np.asarray(target)
    if pred_map.shape != target.shape:
        raise ValueError(f"map shapes differ: {pred_map.shape} vs {target.shape}")
    ious = []
    for c in range(num_classes):
        t = target == c
        if not t.any():
            continue
        p = pred_map == c
        ious.append(np.logical_and(p, t).sum() / np.logical_or(p, t).sum())
    return float(np.mean(ious))
