"""Joint future-BEV world modelling and trajectory planning on synthetic driving scenes."""

from .anchors import AnchorSet, fit_anchors, load_anchors, save_anchors
from .config import TrainConfig, apply_overrides, load_config, save_config
from .errors import (CheckpointError, ChecksumError, ConfigError, DatasetError, DatasetVersionError, DomainError,
                     FutureplanError, InputError, TrainingDivergedError, TruncatedRecordError)
from .evaluation import MetricsReport, evaluate, run_ablation
from .model import FuturePlanner
from .scenario import GenConfig, Scenario, generate_dataset, generate_scenario, rasterize, read_dataset, write_dataset
from .training import load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"
