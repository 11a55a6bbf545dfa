"""
Training a small model
======================

A narrow model on a few hundred scenes, trained for a few minutes on CPU. The
loss log has one record per step with every term: the current-map term, one
future-map term per iteration and the trajectory bracket per iteration.
"""

import numpy as np

from _common import OUT
from futureplan import TrainConfig, evaluate, fit_anchors, generate_dataset, load_checkpoint, save_checkpoint, train
from futureplan.render import RenderSpec, render

train_set, test_set = generate_dataset(range(256)), generate_dataset(range(50_000, 50_064))
cfg = TrainConfig(num_modes=8, channels=32, batch_size=8, max_steps=300)
anchors = fit_anchors([s.ego_future for s in train_set], cfg.num_modes, seed=0)

result = train(train_set, anchors, cfg, log_path=OUT / "03_loss.jsonl")
h = result.history
for step in (0, 100, 200, len(h) - 1):
    print(f"step {step:>3}: total {h[step]['total']:.3f}, current map {h[step]['map_curr']:.3f}, "
          f"final traj (iter 2) {h[step]['traj_final/2']:.3f}")

# Checkpoints store weights, config and a config hash.
save_checkpoint(result.model, OUT / "03_model.ckpt", result.steps, h[-1]["total"])
model, header = load_checkpoint(OUT / "03_model.ckpt")
print("checkpoint config hash", header["config_hash"])

report = evaluate(model, test_set)
print("test:", {k: round(v, 3) for k, v in report.flat().items()})

# Compare against simply driving the most common anchor.
gt = np.stack([s.ego_future for s in test_set])
counts = np.bincount([int(np.argmin(np.linalg.norm(anchors.anchors - f, axis=-1).mean(-1))) for f in gt],
                     minlength=cfg.num_modes)
constant = anchors.anchors[counts.argmax()]
print(f"constant-anchor ADE {np.linalg.norm(gt - constant, axis=-1).mean():.3f} vs model {report.ade:.3f}")

side = render(RenderSpec(test_set[0].seed, out=str(OUT / "03_render.png")), model, test_set)
print("rendered panels", side["panels"], "->", OUT / "03_render.png")
