from .bc import BcPolicy, bc_fit, demo_pairs
from .replay import ReplayBuffers, TransitionBuffer, assemble_batch, symmetric_sample
from .sac import SacAgent, TrainerConfig
from .trainer import TrainResult, load_policy, save_policy, train

__all__ = [
    "BcPolicy",
    "ReplayBuffers",
    "SacAgent",
    "TrainResult",
    "TrainerConfig",
    "TransitionBuffer",
    "assemble_batch",
    "bc_fit",
    "demo_pairs",
    "load_policy",
    "save_policy",
    "symmetric_sample",
    "train",
]
