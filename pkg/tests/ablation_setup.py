"""Shared settings for the ablation-direction acceptance run (also used by the demo script)."""

import os
from pathlib import Path

from futureplan.config import TrainConfig
from futureplan.scenario import generate_dataset

TRAIN_SEEDS = range(0, 2048)
TEST_SEEDS = range(100_000, 100_512)
RUN_SEEDS = (0, 1, 2)
AXES = {"future_bev": [False], "iterations": [1]}
# Reduced width and mode count keep nine training runs inside the CPU budget.
BASE_CFG = TrainConfig(num_modes=8, channels=32, batch_size=8, epochs=12)


def cache_dir() -> Path:
    root = os.environ.get("SEERDRIVE_CACHE") or Path(__file__).resolve().parent.parent / ".cache"
    return Path(root) / "ablation"


def splits():
    return generate_dataset(TRAIN_SEEDS), generate_dataset(TEST_SEEDS)
