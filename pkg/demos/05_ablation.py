"""
Ablations
=========

Train the full model and variants with the same seed schedule and tabulate the
test metrics against the base row. By default this is a quick, small run.
``--full`` uses the acceptance settings (2048 train / 512 test scenes, three
seeds), which takes hours on CPU unless the run cache is warm.
"""

import argparse
import os
import sys
from pathlib import Path

from _common import OUT
from futureplan import TrainConfig, generate_dataset, run_ablation

p = argparse.ArgumentParser()
p.add_argument("--full", action="store_true")
args = p.parse_args()

if args.full:
    sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
    from ablation_setup import AXES, BASE_CFG, RUN_SEEDS, cache_dir, splits

    train_set, test_set = splits()
    table = run_ablation(train_set, test_set, BASE_CFG, AXES, seeds=RUN_SEEDS, cache_dir=cache_dir())
else:
    train_set, test_set = generate_dataset(range(128)), generate_dataset(range(60_000, 60_032))
    cfg = TrainConfig(num_modes=4, channels=16, heads=2, grid_size=32, bev_tokens=4, max_steps=60)
    cache = os.environ.get("SEERDRIVE_CACHE")
    table = run_ablation(train_set, test_set, cfg, "future_bev=off;iterations=1;fusion=add", seeds=(0,),
                         cache_dir=Path(cache) / "demo" if cache else None)

text = table.to_text(metric_names=("ade", "min_ade", "collision_rate", "pdm", "miou"))
print(text)
(OUT / "05_ablation.tsv").write_text(text)
