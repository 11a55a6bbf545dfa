"""Planar geometry helpers: oriented boxes, headings, route progress."""

from __future__ import annotations

import numpy as np
import shapely
from shapely.geometry import LineString, Polygon


def box_corners(center, heading: float, length: float, width: float) -> np.ndarray:
    """Corners (4, 2) of an oriented box, counter-clockwise from front-left."""
    c, s = np.cos(heading), np.sin(heading)
    hl, hw = 0.5 * length, 0.5 * width
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    rot = np.array([[c, -s], [s, c]])
    return np.asarray(center, dtype=np.float64) + local @ rot.T


def box_polygon(center, heading: float, length: float, width: float) -> Polygon:
    return Polygon(box_corners(center, heading, length, width))


def headings_from_waypoints(points: np.ndarray, initial_heading: float = 0.0,
                            origin=(0.0, 0.0), min_step: float = 1e-3) -> np.ndarray:
    """Heading at each waypoint, taken from the segment arriving at it.

    The path starts at ``origin``. Segments shorter than ``min_step`` keep the
    previous heading, so a vehicle at rest keeps its orientation.
    """
    pts = np.vstack([np.asarray(origin, dtype=np.float64)[None], np.asarray(points, dtype=np.float64)])
    out = np.empty(len(pts) - 1)
    prev = float(initial_heading)
    for k in range(1, len(pts)):
        d = pts[k] - pts[k - 1]
        if np.hypot(d[0], d[1]) >= min_step:
            prev = float(np.arctan2(d[1], d[0]))
        out[k - 1] = prev
    return out


def wrap_angle(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


def drivable_union(polygons) -> shapely.Geometry:
    return shapely.union_all([Polygon(p) for p in polygons])


def progress_along(route: np.ndarray, point) -> float:
    """Arc length of the projection of ``point`` onto ``route``."""
    return float(LineString(route).project(shapely.Point(point)))
