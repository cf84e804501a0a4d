"""Fast-gradient adversarial attacks (FGSM family and AI-FGTM) on small numpy classifiers."""

from .attacks import (
    AttackConfig,
    ConfigError,
    InvariantError,
    RunTrace,
    attack_batch,
    fgsm,
    make_config,
    run_attack,
    schedule_constant,
    schedule_dynamic,
    tanh_step,
)
from .model import EnsembleModel, LinearSoftmaxModel, MlpModel, train
from .transforms import DimConfig, SimConfig, TimConfig

__version__ = "0.1.0"
