from .encoders import Encoder, EncoderSpec, DEPTH_SHAPE, VOXEL_SHAPE
from .layers import Conv2d, Conv3d, Dense, LayerNorm, Relu, Sequential, SpatialSoftmax
from .optim import Adam
from .policy import (
    Actor,
    Critic,
    mlp,
    tanh_gaussian_backward,
    tanh_gaussian_logprob_of,
    tanh_gaussian_logprob_of_backward,
    tanh_gaussian_mode,
    tanh_gaussian_sample,
)

__all__ = [
    "Actor",
    "Adam",
    "Conv2d",
    "Conv3d",
    "Critic",
    "Dense",
    "DEPTH_SHAPE",
    "Encoder",
    "EncoderSpec",
    "LayerNorm",
    "Relu",
    "Sequential",
    "SpatialSoftmax",
    "VOXEL_SHAPE",
    "mlp",
    "tanh_gaussian_backward",
    "tanh_gaussian_logprob_of",
    "tanh_gaussian_logprob_of_backward",
    "tanh_gaussian_mode",
    "tanh_gaussian_sample",
]
