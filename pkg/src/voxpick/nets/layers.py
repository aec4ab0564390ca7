"""Differentiable building blocks on plain numpy arrays.

Every layer exposes ``init(rng, dtype)``, ``forward(params, x) -> (y, cache)``
and ``backward(params, cache, gy) -> (grads, gx)`` with exact reverse-mode
gradients. Parameters live in a flat dict name -> ndarray so optimizers and
checkpoints stay trivial. Convolutions are im2col + GEMM with the patch
gather/scatter done by the kernel backend (compiled when available).

Conventions: batch first, channels last. Conv weights have shape
(kernel_volume * c_in, c_out), flattened kernel-major then input-channel,
matching the im2col patch layout.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels


def fan_in_uniform(rng, shape, fan_in, dtype):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Dense:
    def __init__(self, name, in_dim, out_dim, w_scale=1.0):
        self.name = name
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.w_scale = w_scale

    def init(self, rng, dtype):
        w = fan_in_uniform(rng, (self.in_dim, self.out_dim), self.in_dim, dtype)
        if self.w_scale != 1.0:
            w = (w * self.w_scale).astype(dtype)
        return {f"{self.name}/w": w, f"{self.name}/b": np.zeros(self.out_dim, dtype=dtype)}

    def forward(self, params, x):
        y = x @ params[f"{self.name}/w"] + params[f"{self.name}/b"]
        return y, x

    def backward(self, params, cache, gy):
        x = cache
        grads = {
            f"{self.name}/w": x.T @ gy,
            f"{self.name}/b": gy.sum(axis=0),
        }
        gx = gy @ params[f"{self.name}/w"].T
        return grads, gx


class Relu:
    def __init__(self):
        self.name = "relu"

    def init(self, rng, dtype):
        return {}

    def forward(self, params, x):
        mask = x > 0
        return x * mask, mask

    def backward(self, params, cache, gy):
        return {}, gy * cache


class LayerNorm:
    """Normalize the last axis to zero mean / unit variance, then scale+shift."""

    def __init__(self, name, dim, eps=1e-5):
        self.name = name
        self.dim = dim
        self.eps = eps

    def init(self, rng, dtype):
        return {
            f"{self.name}/g": np.ones(self.dim, dtype=dtype),
            f"{self.name}/b": np.zeros(self.dim, dtype=dtype),
        }

    def forward(self, params, x):
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        var = (xc * xc).mean(axis=-1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.eps)
        xn = xc * inv
        y = xn * params[f"{self.name}/g"] + params[f"{self.name}/b"]
        return y, (xn, inv)

    def backward(self, params, cache, gy):
        xn, inv = cache
        g = params[f"{self.name}/g"]
        n = xn.shape[-1]
        grads = {
            f"{self.name}/g": (gy * xn).sum(axis=tuple(range(gy.ndim - 1))),
            f"{self.name}/b": gy.sum(axis=tuple(range(gy.ndim - 1))),
        }
        gxn = gy * g
        # d/dx of (x - mu) * inv with mu, inv functions of x
        gx = inv * (
            gxn
            - gxn.mean(axis=-1, keepdims=True)
            - xn * (gxn * xn).mean(axis=-1, keepdims=True)
        )
        return grads, gx


class Conv2d:
    """VALID 2D convolution, input (B, H, W, Cin) -> (B, OH, OW, Cout)."""

    def __init__(self, name, c_in, c_out, kernel, stride):
        self.name = name
        self.c_in = c_in
        self.c_out = c_out
        self.k = kernel
        self.s = stride

    def init(self, rng, dtype):
        fan_in = self.k * self.k * self.c_in
        return {
            f"{self.name}/w": fan_in_uniform(rng, (fan_in, self.c_out), fan_in, dtype),
            f"{self.name}/b": np.zeros(self.c_out, dtype=dtype),
        }

    def out_shape(self, h, w):
        return (h - self.k) // self.s + 1, (w - self.k) // self.s + 1

    def forward(self, params, x):
        b, h, w, _ = x.shape
        oh, ow = self.out_shape(h, w)
        cols = _kernels.im2col2d(np.ascontiguousarray(x), self.k, self.k, self.s, self.s)
        flat = cols.reshape(b * oh * ow, -1)
        y = flat @ params[f"{self.name}/w"] + params[f"{self.name}/b"]
        return y.reshape(b, oh, ow, self.c_out), (flat, (b, h, w, oh, ow))

    def backward(self, params, cache, gy, compute_gx=True):
        flat, (b, h, w, oh, ow) = cache
        gy2 = gy.reshape(b * oh * ow, self.c_out)
        grads = {
            f"{self.name}/w": flat.T @ gy2,
            f"{self.name}/b": gy2.sum(axis=0),
        }
        if not compute_gx:
            return grads, None
        gcols = (gy2 @ params[f"{self.name}/w"].T).reshape(b, oh, ow, -1)
        gx = _kernels.col2im2d(np.ascontiguousarray(gcols), h, w, self.k, self.k, self.s, self.s)
        return grads, gx


class Conv3d:
    """VALID 3D convolution, input (B, X, Y, Z, Cin) -> (B, OX, OY, OZ, Cout)."""

    def __init__(self, name, c_in, c_out, kernel, stride):
        self.name = name
        self.c_in = c_in
        self.c_out = c_out
        self.k = kernel
        self.s = stride

    def init(self, rng, dtype):
        fan_in = self.k**3 * self.c_in
        return {
            f"{self.name}/w": fan_in_uniform(rng, (fan_in, self.c_out), fan_in, dtype),
            f"{self.name}/b": np.zeros(self.c_out, dtype=dtype),
        }

    def out_shape(self, d0, d1, d2):
        return tuple((d - self.k) // self.s + 1 for d in (d0, d1, d2))

    def forward(self, params, x):
        b, d0, d1, d2, _ = x.shape
        o0, o1, o2 = self.out_shape(d0, d1, d2)
        cols = _kernels.im2col3d(
            np.ascontiguousarray(x), self.k, self.k, self.k, self.s, self.s, self.s
        )
        flat = cols.reshape(b * o0 * o1 * o2, -1)
        y = flat @ params[f"{self.name}/w"] + params[f"{self.name}/b"]
        return y.reshape(b, o0, o1, o2, self.c_out), (flat, (b, d0, d1, d2, o0, o1, o2))

    def backward(self, params, cache, gy, compute_gx=True):
        flat, (b, d0, d1, d2, o0, o1, o2) = cache
        gy2 = gy.reshape(-1, self.c_out)
        grads = {
            f"{self.name}/w": flat.T @ gy2,
            f"{self.name}/b": gy2.sum(axis=0),
        }
        if not compute_gx:
            return grads, None
        gcols = (gy2 @ params[f"{self.name}/w"].T).reshape(b, o0, o1, o2, -1)
        gx = _kernels.col2im3d(
            np.ascontiguousarray(gcols),
            d0, d1, d2,
            self.k, self.k, self.k,
            self.s, self.s, self.s,
        )
        return grads, gx


class SpatialSoftmax:
    """Per-channel softmax pooling to expected spatial coordinates.

    Input (B, *spatial, C); output (B, C * ndim) with per-channel coordinate
    blocks ordered (x[, y[, z]]), each normalized to [-1, 1] via linspace over
    the axis. A uniform feature map therefore pools to the exact center, 0.
    """

    def __init__(self, temperature=1.0):
        self.name = "ssoftmax"
        self.temperature = temperature
        self._coords = {}

    def init(self, rng, dtype):
        return {}

    def _coord_table(self, spatial, dtype):
        key = (spatial, np.dtype(dtype).name)
        if key not in self._coords:
            axes = [
                np.linspace(-1.0, 1.0, n, dtype=np.float64) if n > 1 else np.zeros(1)
                for n in spatial
            ]
            mesh = np.meshgrid(*axes, indexing="ij")
            coords = np.stack([m.reshape(-1) for m in mesh], axis=1)  # (S, ndim)
            self._coords[key] = coords.astype(dtype)
        return self._coords[key]

    def forward(self, params, x):
        b = x.shape[0]
        c = x.shape[-1]
        spatial = x.shape[1:-1]
        coords = self._coord_table(spatial, x.dtype)
        logits = x.reshape(b, -1, c) / x.dtype.type(self.temperature)
        logits = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        p = e / e.sum(axis=1, keepdims=True)  # (B, S, C)
        expect = np.einsum("bsc,sd->bcd", p, coords)  # (B, C, ndim)
        y = expect.reshape(b, c * coords.shape[1])
        return y, (p, coords, expect, spatial)

    def backward(self, params, cache, gy):
        p, coords, expect, spatial = cache
        b, s, c = p.shape
        nd = coords.shape[1]
        g = gy.reshape(b, c, nd)
        # dE_d/dlogit_s = p_s * (coord_sd - E_d); chain through temperature
        inner = np.einsum("bcd,sd->bsc", g, coords) - np.einsum("bcd,bcd->bc", g, expect)[:, None, :]
        glogits = p * inner / p.dtype.type(self.temperature)
        gx = glogits.reshape(b, *spatial, c)
        return {}, gx


class Sequential:
    """Layer stack sharing one flat parameter dict."""

    def __init__(self, layers):
        self.layers = layers

    def init(self, rng, dtype):
        params = {}
        for layer in self.layers:
            params.update(layer.init(rng, dtype))
        return params

    def forward(self, params, x):
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(params, x)
            caches.append(cache)
        return x, caches

    def backward(self, params, caches, gy, input_grad=True):
        grads = {}
        n = len(self.layers)
        for i, (layer, cache) in enumerate(zip(reversed(self.layers), reversed(caches))):
            if not input_grad and i == n - 1 and isinstance(layer, (Conv2d, Conv3d)):
                layer_grads, gy = layer.backward(params, cache, gy, compute_gx=False)
            else:
                layer_grads, gy = layer.backward(params, cache, gy)
            grads.update(layer_grads)
        return grads, gy
