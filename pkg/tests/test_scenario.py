import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from futureplan.errors import ChecksumError, ConfigError, DatasetVersionError, DomainError, TruncatedRecordError
from futureplan.scenario import (AGENT, DT, EGO, GRID_SIZE, V_MAX, GenConfig, cell_centers, encode_scenario,
                                 generate_dataset, generate_scenario, rasterize, read_dataset, read_manifest,
                                 write_dataset)
from oracles import point_in_polygon, rect_corners, waypoint_headings


def ego_blob_center(grid):
    rows, cols = np.nonzero(grid == EGO)
    return rows.mean(), cols.mean()


def test_straight_only_is_collinear():
    s = generate_scenario(0, GenConfig(templates={"straight": 1.0}))
    assert s.command == "straight"
    assert np.abs(s.ego_future[:, 1]).max() <= 1e-6
    assert np.all(np.diff(s.ego_future[:, 0]) > 0)


def test_generation_is_bit_identical():
    a, b = generate_scenario(7), generate_scenario(7)
    assert a == b
    assert encode_scenario(a) == encode_scenario(b)


def test_template_frequencies_match_mix():
    mix = GenConfig().templates
    counts = Counter(s.template for s in generate_dataset(range(1000)))
    for name, w in mix.items():
        assert abs(counts[name] / 1000 - w) <= 0.03, (name, counts[name])


def test_unknown_template_is_config_error():
    with pytest.raises(ConfigError, match="zigzag"):
        generate_scenario(0, GenConfig(templates={"zigzag": 1.0}))


@pytest.mark.parametrize("template,command", [("left_turn", "left"), ("right_turn", "right"),
                                              ("straight", "straight"), ("stop", "straight")])
def test_command_matches_template(template, command):
    for seed in range(5):
        s = generate_scenario(seed, GenConfig(templates={template: 1.0}))
        assert s.command == command
        if template == "left_turn":
            assert s.ego_future[-1, 1] > 0.5
        if template == "right_turn":
            assert s.ego_future[-1, 1] < -0.5


def test_interactive_templates_have_agent_near_route():
    for s in generate_dataset(range(40)):
        route = s.map.route.astype(np.float64)
        d = min(np.linalg.norm(route[:, None, :] - a.positions[None].astype(np.float64), axis=-1).min()
                for a in s.agents)
        assert d <= 20.0


def test_kinematic_sanity(corpus):
    for s in corpus:
        pts = np.vstack([np.zeros((1, 2)), s.ego_future.astype(np.float64)])
        vel = np.diff(pts, axis=0) / DT
        acc = np.diff(vel, axis=0) / DT
        assert np.linalg.norm(vel, axis=1).max() <= 20.0
        assert np.linalg.norm(acc, axis=1).max() <= 8.0
        assert np.linalg.norm(s.ego_future[0]) <= np.linalg.norm(s.ego_status.velocity) * DT + 1e-5
        assert np.abs(s.ego_future).max() < GRID_SIZE / 2
        for a in s.agents:
            step = np.linalg.norm(np.diff(a.positions.astype(np.float64), axis=0), axis=1)
            assert step.max() <= V_MAX * DT
            assert np.all(a.box > 0)
        assert s.ego_status.command.sum() == 1


def test_lanes_inside_drivable(corpus):
    for s in corpus[:10]:
        polys = [p.astype(np.float64) for p in s.map.drivable_polygons]
        for lane in s.map.lane_centerlines:
            for x, y in lane[1:-1:3].astype(np.float64):  # ends lie on the boundary
                assert any(point_in_polygon(x, y, p) for p in polys)
        assert any(s.map.route is lane for lane in s.map.lane_centerlines)


def test_ego_blob_centered_at_t0(corpus):
    for s in corpus[:20]:
        r, c = ego_blob_center(rasterize(s, 0.0))
        assert abs(r - 31.5) <= 1 and abs(c - 31.5) <= 1


def test_straight_five_mps_moves_twenty_cells():
    s = generate_scenario(0, GenConfig(templates={"straight": 1.0}, speed_range=(5.0, 5.0)))
    r0, c0 = ego_blob_center(rasterize(s, 0.0))
    r4, c4 = ego_blob_center(rasterize(s, 4.0))
    assert abs((r4 - r0) - 20) <= 1 and abs(c4 - c0) <= 1


def test_no_agents_no_agent_cells():
    s = generate_scenario(1, GenConfig(templates={"straight": 1.0}, interactive=False, max_oncoming=0))
    assert not s.agents
    assert not (rasterize(s, 2.0) == AGENT).any()


@pytest.mark.parametrize("t", [-0.5, 4.5])
def test_raster_time_out_of_range(t, corpus):
    with pytest.raises(DomainError):
        rasterize(corpus[0], t)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(0, 8))
def test_ego_cells_inside_ego_box(seed, k):
    s = generate_scenario(seed)
    t = k * DT
    grid = rasterize(s, t)
    assert set(np.unique(grid)) <= {0, 1, 2, 3}
    pts = np.vstack([np.zeros((1, 2)), s.ego_future.astype(np.float64)])
    heads = [0.0] + waypoint_headings(s.ego_future.astype(np.float64))
    rect = rect_corners(pts[k], heads[k], *s.ego_box.astype(np.float64))
    X, Y = cell_centers()
    for r, c in zip(*np.nonzero(grid == EGO)):
        assert point_in_polygon(X[r, c], Y[r, c], rect)
    _, n_blobs = ndimage.label(grid == EGO)
    assert n_blobs == 1


# ------------------------------------------------------------------------------ persistence

def test_round_trip(tmp_path):
    scenarios = generate_dataset(range(10))
    m = write_dataset(scenarios, tmp_path / "d", GenConfig())
    assert m.count == 10 and m.seeds == list(range(10))
    back = read_dataset(tmp_path / "d")
    assert all(a == b for a, b in zip(scenarios, back)) and len(back) == 10
    assert read_manifest(tmp_path / "d").config_hash == GenConfig().hash()


def test_empty_dataset(tmp_path):
    m = write_dataset([], tmp_path / "e")
    assert m.count == 0
    assert read_dataset(tmp_path / "e") == []


def test_tampered_record_names_file(tmp_path):
    write_dataset(generate_dataset(range(3)), tmp_path / "d")
    f = tmp_path / "d" / "000001.bin"
    blob = bytearray(f.read_bytes())
    blob[-3] ^= 0xFF
    f.write_bytes(bytes(blob))
    with pytest.raises(ChecksumError, match="000001.bin"):
        read_dataset(tmp_path / "d")


def test_truncated_record(tmp_path):
    write_dataset(generate_dataset(range(2)), tmp_path / "d")
    f = tmp_path / "d" / "000000.bin"
    f.write_bytes(f.read_bytes()[:-8])
    with pytest.raises(TruncatedRecordError, match="000000.bin"):
        read_dataset(tmp_path / "d")


def test_version_mismatch(tmp_path):
    write_dataset(generate_dataset(range(2)), tmp_path / "d")
    mpath = tmp_path / "d" / "manifest.json"
    d = json.loads(mpath.read_text())
    d["version"] = 99
    mpath.write_text(json.dumps(d))
    with pytest.raises(DatasetVersionError):
        read_dataset(tmp_path / "d")


def test_text_dump(tmp_path):
    write_dataset(generate_dataset(range(2)), tmp_path / "d", text_dump=True)
    text = (tmp_path / "d" / "000000.txt").read_text()
    assert "seed: 0" in text and "ego/future [8, 2]" in text
