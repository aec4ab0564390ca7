"""Conv encoders for depth images and voxel grids.

The voxel trunk follows the two-conv pattern of classic volumetric CNNs
(conv k5 s2 then conv k3 s1) with spatial-softmax pooling, so the feature
vector is a set of per-channel expected 3D keypoints. The depth trunk is the
2D analogue. Both train from scratch and stay small (tens of thousands of
parameters, well under 300k).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import Conv2d, Conv3d, Relu, Sequential, SpatialSoftmax

DEPTH_SHAPE = (128, 128)
VOXEL_SHAPE = (50, 50, 40)


@dataclass(frozen=True)
class EncoderSpec:
    """kind: "conv2d_depth" (128x128xC input) or "conv3d_voxel" (50x50x40x1)."""

    kind: str
    layers: tuple = ()  # (channels, kernel, stride) per conv
    temperature: float = 1.0
    in_channels: int = 1

    @staticmethod
    def default_voxel():
        return EncoderSpec(kind="conv3d_voxel", layers=((16, 5, 2), (32, 3, 1)))

    @staticmethod
    def default_depth(in_channels=2):
        return EncoderSpec(
            kind="conv2d_depth",
            layers=((16, 8, 4), (32, 4, 2), (32, 3, 1)),
            in_channels=in_channels,
        )

    @staticmethod
    def from_dict(d):
        return EncoderSpec(
            kind=d["kind"],
            layers=tuple(tuple(v) for v in d["layers"]),
            temperature=d.get("temperature", 1.0),
            in_channels=d.get("in_channels", 1),
        )

    def to_dict(self):
        return {
            "kind": self.kind,
            "layers": [list(v) for v in self.layers],
            "temperature": self.temperature,
            "in_channels": self.in_channels,
        }


class Encoder:
    """Conv stack + spatial softmax built from an EncoderSpec."""

    def __init__(self, spec: EncoderSpec, name="enc"):
        if spec.kind not in ("conv2d_depth", "conv3d_voxel"):
            raise ValueError(f"unknown encoder kind {spec.kind!r}")
        self.spec = spec
        self.name = name
        conv_cls = Conv2d if spec.kind == "conv2d_depth" else Conv3d
        base = DEPTH_SHAPE if spec.kind == "conv2d_depth" else VOXEL_SHAPE
        self.ndim = len(base)

        layers = []
        c_in = spec.in_channels
        shape = base
        for i, (c_out, k, s) in enumerate(spec.layers):
            conv = conv_cls(f"{name}/conv{i}", c_in, c_out, k, s)
            layers.append(conv)
            layers.append(Relu())
            shape = conv.out_shape(*shape)
            if min(shape) < 1:
                raise ValueError(f"encoder layer {i} shrinks input below 1: {shape}")
            c_in = c_out
        layers.append(SpatialSoftmax(temperature=spec.temperature))
        self.net = Sequential(layers)
        self.out_shape = shape
        self.feature_dim = c_in * self.ndim

    def init(self, rng, dtype=np.float32):
        return self.net.init(rng, dtype)

    def expected_input(self):
        base = DEPTH_SHAPE if self.spec.kind == "conv2d_depth" else VOXEL_SHAPE
        return base + (self.spec.in_channels,)

    def forward(self, params, x):
        """x: (B, *spatial, C) float array matching expected_input()."""
        if x.shape[1:] != self.expected_input():
            raise ValueError(
                f"encoder input shape {x.shape[1:]} != expected {self.expected_input()}"
            )
        return self.net.forward(params, x)

    def backward(self, params, cache, gy, input_grad=False):
        """Input gradient is skipped by default: the encoder input is data."""
        if cache is None:
            raise ValueError("forward cache required for backward")
        return self.net.backward(params, cache, gy, input_grad=input_grad)

    def num_params(self, params):
        return sum(int(np.prod(v.shape)) for k, v in params.items() if k.startswith(self.name))
