"""Procedural driving scenarios, BEV rasterization and dataset persistence.

All coordinates are metres in the ego frame at t=0: x forward, y left, ego at
the origin heading along +x. Time runs on a 2 Hz grid from 0 to 4 s.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import shapely

from .errors import (ChecksumError, ConfigError, DatasetError, DatasetVersionError, DomainError,
                     TruncatedRecordError)
from .geometry import box_polygon, headings_from_waypoints, wrap_angle

DT = 0.5
NUM_FUTURE = 8
HORIZON = DT * NUM_FUTURE
NUM_TIMESTEPS = NUM_FUTURE + 1  # agent tracks include t=0
V_MAX = 20.0
EGO_BOX = (4.5, 2.0)

GRID_SIZE = 64
RESOLUTION = 1.0
NUM_CLASSES = 4
BACKGROUND, DRIVABLE, AGENT, EGO = 0, 1, 2, 3

COMMANDS = ("left", "straight", "right")
TEMPLATES = ("straight", "left_turn", "right_turn", "stop")

# lateral layout of the road relative to the route centerline
ROAD_RIGHT = 3.0
ROAD_LEFT = 6.5
ONCOMING_OFFSET = 3.5
ROUTE_BEHIND = 40.0
ROUTE_AHEAD = 40.0

FORMAT_VERSION = 1
_RECORD_MAGIC = b"FPSC"
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(eq=False)
class MapLayout:
    drivable_polygons: list[np.ndarray]
    lane_centerlines: list[np.ndarray]
    route_index: int = 0

    @property
    def route(self) -> np.ndarray:
        return self.lane_centerlines[self.route_index]


@dataclass(eq=False)
class AgentTrack:
    positions: np.ndarray  # (NUM_TIMESTEPS, 2)
    headings: np.ndarray  # (NUM_TIMESTEPS,)
    box: np.ndarray  # (length, width)

    def pose_at(self, t: float) -> tuple[np.ndarray, float]:
        f = t / DT
        k0 = min(int(math.floor(f)), NUM_TIMESTEPS - 1)
        k1 = min(k0 + 1, NUM_TIMESTEPS - 1)
        a = f - k0
        p = (1 - a) * self.positions[k0].astype(np.float64) + a * self.positions[k1].astype(np.float64)
        h0, h1 = float(self.headings[k0]), float(self.headings[k1])
        h = h0 + a * float(wrap_angle(h1 - h0))
        return p, h


@dataclass(eq=False)
class EgoStatus:
    velocity: np.ndarray  # (2,)
    acceleration: np.ndarray  # (2,)
    command: np.ndarray  # (3,) one-hot over COMMANDS

    def vector(self) -> np.ndarray:
        return np.concatenate([self.velocity, self.acceleration, self.command]).astype(np.float32)


@dataclass(eq=False)
class Scenario:
    seed: int
    template: str
    map: MapLayout
    agents: list[AgentTrack]
    ego_status: EgoStatus
    ego_future: np.ndarray  # (NUM_FUTURE, 2)
    ego_box: np.ndarray = field(default_factory=lambda: np.array(EGO_BOX, dtype=np.float32))

    @property
    def command(self) -> str:
        return COMMANDS[int(np.argmax(self.ego_status.command))]

    def arrays(self) -> dict[str, np.ndarray]:
        """Every array of the record under a stable name."""
        out = {}
        for i, p in enumerate(self.map.drivable_polygons):
            out[f"map/drivable/{i}"] = p
        for i, p in enumerate(self.map.lane_centerlines):
            out[f"map/lane/{i}"] = p
        for i, a in enumerate(self.agents):
            out[f"agent/{i}/positions"] = a.positions
            out[f"agent/{i}/headings"] = a.headings
            out[f"agent/{i}/box"] = a.box
        out["ego/velocity"] = self.ego_status.velocity
        out["ego/acceleration"] = self.ego_status.acceleration
        out["ego/command"] = self.ego_status.command
        out["ego/future"] = self.ego_future
        out["ego/box"] = self.ego_box
        return out

    def metadata(self) -> dict:
        return {"seed": int(self.seed), "template": self.template, "route_index": int(self.map.route_index)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario) or self.metadata() != other.metadata():
            return False
        a, b = self.arrays(), other.arrays()
        return a.keys() == b.keys() and all(
            a[k].dtype == b[k].dtype and a[k].shape == b[k].shape and np.array_equal(a[k], b[k]) for k in a)

    def ego_pose_at(self, t: float) -> tuple[np.ndarray, float]:
        """Ground-truth ego pose, linearly interpolated between waypoints."""
        pts = np.vstack([np.zeros((1, 2)), self.ego_future.astype(np.float64)])
        heads = np.concatenate([[0.0], headings_from_waypoints(self.ego_future)])
        f = t / DT
        k0 = min(int(math.floor(f)), NUM_FUTURE)
        if f - k0 < 1e-9:
            return pts[k0], float(heads[k0])
        a = f - k0
        return (1 - a) * pts[k0] + a * pts[k0 + 1], float(heads[k0 + 1])


@dataclass
class GenConfig:
    templates: dict = field(default_factory=lambda: {"straight": 0.4, "left_turn": 0.2,
                                                      "right_turn": 0.2, "stop": 0.2})
    speed_range: tuple = (3.0, 7.5)
    turn_angle_range: tuple = (math.pi / 6, math.pi / 2)
    decel_range: tuple = (1.5, 3.0)
    interactive: bool = True
    max_oncoming: int = 2

    def validate(self) -> "GenConfig":
        if not self.templates:
            raise ConfigError("template mix is empty")
        for name, w in self.templates.items():
            if name not in TEMPLATES:
                raise ConfigError(f"unknown scenario template {name!r}; expected one of {TEMPLATES}")
            if not (w >= 0):
                raise ConfigError(f"template weight for {name!r} must be non-negative")
        if sum(self.templates.values()) <= 0:
            raise ConfigError("template weights sum to zero")
        lo, hi = self.speed_range
        if not (0 < lo <= hi) or hi * HORIZON > GRID_SIZE * RESOLUTION / 2 - 1:
            raise ConfigError(f"speed_range {self.speed_range} leaves the ego future outside the grid")
        kmax = self.turn_angle_range[1] / (HORIZON * lo)
        if kmax * ROAD_LEFT >= 1.0:
            raise ConfigError("turn_angle_range too sharp for the road width at the minimum speed")
        if self.max_oncoming < 0:
            raise ConfigError("max_oncoming must be >= 0")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["templates"] = {k: float(v) for k, v in sorted(self.templates.items())}
        d["speed_range"] = list(map(float, self.speed_range))
        d["turn_angle_range"] = list(map(float, self.turn_angle_range))
        d["decel_range"] = list(map(float, self.decel_range))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        d = dict(d)
        for k in ("speed_range", "turn_angle_range", "decel_range"):
            if k in d:
                d[k] = tuple(d[k])
        try:
            return cls(**d).validate()
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def template_for_seed(seed: int, config: GenConfig) -> str:
    """Low-discrepancy template assignment so any run of seeds matches the mix."""
    names = sorted(n for n, w in config.templates.items() if w > 0)
    w = np.array([config.templates[n] for n in names], dtype=np.float64)
    cum = np.cumsum(w / w.sum())
    u = ((seed + 1) * _GOLDEN) % 1.0
    return names[min(int(np.searchsorted(cum, u, side="right")), len(names) - 1)]


class _Path:
    """Route centerline: straight approach, constant-curvature arc, straight exit."""

    def __init__(self, kappa: float, arc_length: float):
        self.kappa = kappa
        self.arc_length = arc_length

    def heading(self, s):
        return self.kappa * np.clip(s, 0.0, self.arc_length)

    def point(self, s):
        s = np.asarray(s, dtype=np.float64)
        k, L = self.kappa, self.arc_length
        sa = np.clip(s, 0.0, L)
        if abs(k) < 1e-12:
            x, y = sa.copy(), np.zeros_like(sa)
        else:
            x, y = np.sin(k * sa) / k, (1.0 - np.cos(k * sa)) / k
        h = self.heading(s)
        extra = np.where(s < 0, s, np.where(s > L, s - L, 0.0))
        return np.stack([x + extra * np.cos(h), y + extra * np.sin(h)], axis=-1)

    def offset_point(self, s, offset: float):
        h = self.heading(s)
        n = np.stack([-np.sin(h), np.cos(h)], axis=-1)
        return self.point(s) + offset * n

    def samples(self, step: float = 1.0) -> np.ndarray:
        s = np.arange(-ROUTE_BEHIND, self.arc_length + ROUTE_AHEAD + 1e-9, step)
        return np.unique(np.concatenate([s, [0.0, self.arc_length]]))


def _f32(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=np.float32))


def generate_scenario(seed: int, config: GenConfig | None = None) -> Scenario:
    """Deterministic scenario for ``(seed, config)``."""
    config = (config or GenConfig()).validate()
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    template = template_for_seed(seed, config)
    rng = np.random.default_rng(seed)

    v0 = float(rng.uniform(*config.speed_range))
    t = DT * np.arange(1, NUM_FUTURE + 1)
    kappa, decel, accel = 0.0, 0.0, np.zeros(2)
    if template in ("left_turn", "right_turn"):
        theta = float(rng.uniform(*config.turn_angle_range))
        kappa = theta / (HORIZON * v0) * (1.0 if template == "left_turn" else -1.0)
        accel = np.array([0.0, v0 * v0 * kappa])
    elif template == "stop":
        decel = float(rng.uniform(*config.decel_range))
        accel = np.array([-decel, 0.0])
    if template == "stop":
        t_stop = v0 / decel
        s_ego = np.where(t < t_stop, v0 * t - 0.5 * decel * t * t, v0 * v0 / (2 * decel))
    else:
        s_ego = v0 * t
    path = _Path(kappa, v0 * HORIZON)
    ego_future = path.point(s_ego)

    s_road = path.samples()
    route = path.point(s_road)
    oncoming_lane = path.offset_point(s_road[::-1], ONCOMING_OFFSET)
    road = np.vstack([path.offset_point(s_road, ROAD_LEFT), path.offset_point(s_road[::-1], -ROAD_RIGHT)])

    times = DT * np.arange(NUM_TIMESTEPS)
    agents = []
    if template == "stop" or config.interactive:
        length, width = rng.uniform(4.0, 5.0), rng.uniform(1.8, 2.1)
        if template == "stop":
            lead_s = v0 * v0 / (2 * decel) + 0.5 * (EGO_BOX[0] + length) + 3.0
            s_lead = np.full(NUM_TIMESTEPS, lead_s)
        else:
            gap = rng.uniform(8.0, 16.0)
            speed = v0 + rng.uniform(0.0, 1.5)
            s_lead = 0.5 * (EGO_BOX[0] + length) + gap + speed * times
        agents.append(AgentTrack(_f32(path.point(s_lead)), _f32(path.heading(s_lead)), _f32([length, width])))
    for _ in range(int(rng.integers(0, config.max_oncoming + 1))):
        length, width = rng.uniform(4.0, 5.0), rng.uniform(1.8, 2.1)
        s0, speed = rng.uniform(5.0, 45.0), rng.uniform(2.0, 8.0)
        s_on = s0 - speed * times
        agents.append(AgentTrack(_f32(path.offset_point(s_on, ONCOMING_OFFSET)),
                                 _f32(wrap_angle(path.heading(s_on) + np.pi)), _f32([length, width])))

    command = np.zeros(3)
    command[{"left_turn": 0, "right_turn": 2}.get(template, 1)] = 1.0
    status = EgoStatus(_f32([v0, 0.0]), _f32(accel), _f32(command))
    layout = MapLayout([_f32(road)], [_f32(route), _f32(oncoming_lane)], route_index=0)
    return Scenario(int(seed), template, layout, agents, status, _f32(ego_future))


def generate_dataset(seeds, config: GenConfig | None = None) -> list[Scenario]:
    return [generate_scenario(int(s), config) for s in seeds]


# --------------------------------------------------------------------------- raster

def cell_centers(grid_size: int = GRID_SIZE, resolution: float = RESOLUTION) -> tuple[np.ndarray, np.ndarray]:
    """(X, Y) cell-center coordinates; row index runs along x, column along y."""
    c = (np.arange(grid_size) + 0.5 - grid_size / 2) * resolution
    return np.meshgrid(c, c, indexing="ij")


def world_to_cell(p, grid_size: int = GRID_SIZE, resolution: float = RESOLUTION) -> np.ndarray:
    """Fractional (row, col) index of a world point."""
    return np.asarray(p, dtype=np.float64) / resolution + grid_size / 2 - 0.5


def rasterize(s: Scenario, t: float, grid_size: int = GRID_SIZE, resolution: float = RESOLUTION) -> np.ndarray:
    """Semantic class grid (grid_size, grid_size) uint8 at time ``t`` seconds."""
    if not (-1e-9 <= t <= HORIZON + 1e-9):
        raise DomainError(f"raster time {t} outside [0, {HORIZON}]")
    t = min(max(float(t), 0.0), HORIZON)
    X, Y = cell_centers(grid_size, resolution)
    grid = np.zeros((grid_size, grid_size), dtype=np.uint8)
    for poly in s.map.drivable_polygons:
        grid[shapely.contains_xy(shapely.Polygon(poly.astype(np.float64)), X, Y)] = DRIVABLE
    for a in s.agents:
        p, h = a.pose_at(t)
        grid[shapely.contains_xy(box_polygon(p, h, *a.box.astype(np.float64)), X, Y)] = AGENT
    p, h = s.ego_pose_at(t)
    grid[shapely.contains_xy(box_polygon(p, h, *s.ego_box.astype(np.float64)), X, Y)] = EGO
    return grid


# -------------------------------------------------------------------------- persistence

@dataclass
class Manifest:
    count: int
    seeds: list
    config_hash: str
    records: list
    version: int = FORMAT_VERSION
    format: str = "futureplan.scenarios"

    def to_dict(self) -> dict:
        return asdict(self)


def encode_scenario(s: Scenario) -> bytes:
    arrays = s.arrays()
    entries, chunks, offset = [], [], 0
    for name, arr in arrays.items():
        b = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(b)
        offset += len(b)
    header = dict(s.metadata(), arrays=entries, payload_bytes=offset)
    hb = json.dumps(header, sort_keys=True).encode()
    return _RECORD_MAGIC + struct.pack("<II", FORMAT_VERSION, len(hb)) + hb + b"".join(chunks)


def decode_scenario(blob: bytes, name: str = "<record>") -> Scenario:
    if len(blob) < 12 or blob[:4] != _RECORD_MAGIC:
        raise TruncatedRecordError(f"{name}: missing record header")
    version, hlen = struct.unpack("<II", blob[4:12])
    if version != FORMAT_VERSION:
        raise DatasetVersionError(f"{name}: record version {version}, expected {FORMAT_VERSION}")
    if len(blob) < 12 + hlen:
        raise TruncatedRecordError(f"{name}: header truncated")
    try:
        header = json.loads(blob[12:12 + hlen])
    except ValueError as e:
        raise DatasetError(f"{name}: unreadable header ({e})") from None
    payload = blob[12 + hlen:]
    if len(payload) != header["payload_bytes"]:
        raise TruncatedRecordError(f"{name}: payload has {len(payload)} bytes, header says {header['payload_bytes']}")
    arrays = {}
    for e in header["arrays"]:
        n = int(np.prod(e["shape"])) * 4
        arrays[e["name"]] = np.frombuffer(payload[e["offset"]:e["offset"] + n], dtype="<f4").astype(
            np.float32).reshape(e["shape"])

    def collect(prefix):
        keys = sorted((k for k in arrays if k.startswith(prefix)), key=lambda k: int(k[len(prefix):]))
        return [arrays[k] for k in keys]

    agents = []
    i = 0
    while f"agent/{i}/positions" in arrays:
        agents.append(AgentTrack(arrays[f"agent/{i}/positions"], arrays[f"agent/{i}/headings"],
                                 arrays[f"agent/{i}/box"]))
        i += 1
    layout = MapLayout(collect("map/drivable/"), collect("map/lane/"), int(header["route_index"]))
    status = EgoStatus(arrays["ego/velocity"], arrays["ego/acceleration"], arrays["ego/command"])
    return Scenario(int(header["seed"]), header["template"], layout, agents, status, arrays["ego/future"],
                    arrays["ego/box"])


def scenario_to_text(s: Scenario) -> str:
    """Human-readable dump of one scenario."""
    lines = [f"seed: {s.seed}", f"template: {s.template}", f"command: {s.command}"]
    np_opts = dict(precision=4, suppress_small=True, max_line_width=200, threshold=100000)
    for name, arr in s.arrays().items():
        lines.append(f"{name} {list(arr.shape)}:")
        lines.append(np.array2string(arr, **np_opts))
    return "\n".join(lines) + "\n"


def write_dataset(scenarios, path, config: GenConfig | None = None, text_dump: bool = False) -> Manifest:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    records = []
    for i, s in enumerate(scenarios):
        blob = encode_scenario(s)
        fname = f"{i:06d}.bin"
        (root / fname).write_bytes(blob)
        if text_dump:
            (root / f"{i:06d}.txt").write_text(scenario_to_text(s))
        records.append({"file": fname, "seed": int(s.seed), "bytes": len(blob),
                        "sha256": hashlib.sha256(blob).hexdigest()})
    manifest = Manifest(count=len(records), seeds=[r["seed"] for r in records],
                        config_hash=config.hash() if config is not None else "unknown", records=records)
    (root / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=1, sort_keys=True))
    return manifest


def read_manifest(path) -> Manifest:
    mpath = Path(path) / "manifest.json"
    if not mpath.exists():
        raise DatasetError(f"{path}: no manifest.json")
    try:
        d = json.loads(mpath.read_text())
    except ValueError as e:
        raise DatasetError(f"{mpath}: unreadable manifest ({e})") from None
    if d.get("version") != FORMAT_VERSION or d.get("format") != "futureplan.scenarios":
        raise DatasetVersionError(f"{mpath}: format {d.get('format')!r} v{d.get('version')}, "
                                  f"expected futureplan.scenarios v{FORMAT_VERSION}")
    return Manifest(**d)


def read_dataset(path) -> list[Scenario]:
    root = Path(path)
    manifest = read_manifest(root)
    if manifest.count != len(manifest.records):
        raise DatasetError(f"{root}: manifest count {manifest.count} != {len(manifest.records)} records")
    out = []
    for rec in manifest.records:
        fpath = root / rec["file"]
        if not fpath.exists():
            raise TruncatedRecordError(f"record {rec['file']}: file missing")
        blob = fpath.read_bytes()
        if len(blob) != rec["bytes"]:
            raise TruncatedRecordError(f"record {rec['file']}: {len(blob)} bytes, manifest says {rec['bytes']}")
        if hashlib.sha256(blob).hexdigest() != rec["sha256"]:
            raise ChecksumError(f"record {rec['file']}: checksum mismatch")
        out.append(decode_scenario(blob, rec["file"]))
    return out
