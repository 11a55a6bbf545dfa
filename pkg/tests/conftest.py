import sys
from pathlib import Path

import numpy as np
import pytest
import torch

sys.path.insert(0, str(Path(__file__).resolve().parent))

from futureplan.anchors import fit_anchors  # noqa: E402
from futureplan.config import TrainConfig  # noqa: E402
from futureplan.scenario import generate_dataset  # noqa: E402

TINY = dict(num_modes=4, channels=16, heads=2, grid_size=16, bev_tokens=4, world_model_layers=1)


def tiny_config(**kw) -> TrainConfig:
    return TrainConfig(**{**TINY, **kw})


@pytest.fixture(scope="session")
def corpus():
    return generate_dataset(range(64))


@pytest.fixture(scope="session")
def tiny_anchors(corpus):
    return fit_anchors([s.ego_future for s in corpus], TINY["num_modes"], seed=0)


def randomize_zero_init(model, scale=0.3, seed=0):
    """Perturb every all-zero (or constant-one) tensor so no path is dead at init."""
    g = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in model.parameters():
            if torch.all(p == 0) or torch.all(p == 1):
                p.add_(scale * torch.randn(p.shape, generator=g, dtype=p.dtype))
    return model


@pytest.fixture(autouse=True)
def _seed_everything():
    torch.manual_seed(0)
    np.random.seed(0)


@pytest.fixture(scope="session")
def tiny_ckpt(corpus, tiny_anchors, tmp_path_factory):
    """A briefly trained tiny model saved to disk."""
    from futureplan.training import save_checkpoint, train

    res = train(corpus[:16], tiny_anchors, tiny_config(max_steps=4, batch_size=4))
    path = tmp_path_factory.mktemp("ckpt") / "tiny.ckpt"
    save_checkpoint(res.model, path, res.steps, res.history[-1]["total"])
    return path
