import json
import subprocess
import sys

import pytest

from futureplan.cli import cmd_dispatch
from futureplan.scenario import read_dataset

SUBCOMMANDS = ("gen-data", "fit-anchors", "train", "eval", "ablate", "render")
TINY_SET = ["--set", "num_modes=2", "--set", "channels=8", "--set", "heads=2", "--set", "grid_size=16",
            "--set", "bev_tokens=4", "--set", "world_model_layers=1", "--set", "max_steps=2",
            "--set", "batch_size=2"]


def test_gen_data_manifest(tmp_path):
    out = tmp_path / "d"
    assert cmd_dispatch(["gen-data", "--seed", "0", "--count", "8", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["count"] == 8 and manifest["seeds"] == list(range(8))
    assert len(read_dataset(out)) == 8


def test_unknown_subcommand(capsys):
    assert cmd_dispatch(["fly"]) == 2
    assert "usage" in capsys.readouterr().err


def test_train_missing_dataset(capsys):
    assert cmd_dispatch(["train", "--anchors", "a.npz", "--out", "m.ckpt"]) == 2
    assert "--dataset" in capsys.readouterr().err


def test_unknown_flag(capsys):
    assert cmd_dispatch(["gen-data", "--count", "1", "--out", "x", "--colour", "red"]) == 2


def test_runtime_error_is_one_line(tmp_path, capsys):
    code = cmd_dispatch(["eval", "--ckpt", str(tmp_path / "none.ckpt"), "--dataset", str(tmp_path),
                         "--report", str(tmp_path / "r.jsonl")])
    err = capsys.readouterr().err.strip()
    assert code == 1 and "\n" not in err
    assert err.startswith("error: ") and err.split(": ")[1].isidentifier()


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_help_per_subcommand(sub, capsys):
    assert cmd_dispatch([sub, "--help"]) == 0
    assert f"futureplan {sub}" in capsys.readouterr().out


def test_pipeline(tmp_path, capsys):
    d, a, m, r, img = (str(tmp_path / n) for n in ("d", "anchors.npz", "m.ckpt", "r.jsonl", "fig.png"))
    assert cmd_dispatch(["gen-data", "--count", "6", "--out", d]) == 0
    assert cmd_dispatch(["fit-anchors", "--dataset", d, "--modes", "2", "--out", a]) == 0
    assert cmd_dispatch(["train", *TINY_SET, "--dataset", d, "--anchors", a, "--out", m,
                         "--log", str(tmp_path / "log.jsonl")]) == 0
    assert cmd_dispatch(["eval", "--ckpt", m, "--dataset", d, "--report", r]) == 0
    assert len((tmp_path / "r.jsonl").read_text().splitlines()) == 7
    assert cmd_dispatch(["render", "--ckpt", m, "--dataset", d, "--scenario", "2", "--panels", "trajectory",
                         "--out", img]) == 0
    assert (tmp_path / "fig.png.json").exists()
    # anchor count must agree with the config
    assert cmd_dispatch(["train", *TINY_SET, "--set", "num_modes=3", "--dataset", d, "--anchors", a,
                         "--out", m]) == 1
    capsys.readouterr()
    assert cmd_dispatch(["ablate", *TINY_SET, "--dataset", d, "--test-dataset", d, "--axes", "iterations=1",
                         "--delimiter", ","]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert [ln.split(",")[0] for ln in lines[1:]] == ["base", "iterations=1"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "futureplan", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and all(s in res.stdout for s in SUBCOMMANDS)
