"""Pure-numpy implementations of the hot kernels.

Same contracts as the Cython twins in ``_native.pyx``. The gather kernels
(im2col, voxelize) match the compiled backend bitwise; the col2im scatters
accumulate in a different order (kernel-offset-major here, position-major in
the extension), so overlapping-window outputs agree only to float roundoff.
"""

import numpy as np

BACKEND = "numpy"


def im2col2d(x, kh, kw, sh, sw):
    """Extract conv patches from (B, H, W, C) into (B, OH, OW, kh*kw*C)."""
    b, h, w, c = x.shape
    oh = (h - kh) // sh + 1
    ow = (w - kw) // sw + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    win = win[:, ::sh, ::sw]  # (B, OH, OW, C, kh, kw)
    out = np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3))
    return out.reshape(b, oh, ow, kh * kw * c)


def col2im2d(cols, h, w, kh, kw, sh, sw):
    """Scatter-add patches (B, OH, OW, kh*kw*C) back onto (B, H, W, C)."""
    b, oh, ow, _ = cols.shape
    c = cols.shape[3] // (kh * kw)
    cols = cols.reshape(b, oh, ow, kh, kw, c)
    x = np.zeros((b, h, w, c), dtype=cols.dtype)
    for i in range(kh):
        for j in range(kw):
            x[:, i : i + oh * sh : sh, j : j + ow * sw : sw, :] += cols[:, :, :, i, j, :]
    return x


def im2col3d(x, k0, k1, k2, s0, s1, s2):
    """Extract conv patches from (B, D0, D1, D2, C) into (B, O0, O1, O2, k0*k1*k2*C)."""
    b, d0, d1, d2, c = x.shape
    o0 = (d0 - k0) // s0 + 1
    o1 = (d1 - k1) // s1 + 1
    o2 = (d2 - k2) // s2 + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (k0, k1, k2), axis=(1, 2, 3))
    win = win[:, ::s0, ::s1, ::s2]  # (B, O0, O1, O2, C, k0, k1, k2)
    out = np.ascontiguousarray(win.transpose(0, 1, 2, 3, 5, 6, 7, 4))
    return out.reshape(b, o0, o1, o2, k0 * k1 * k2 * c)


def col2im3d(cols, d0, d1, d2, k0, k1, k2, s0, s1, s2):
    """Scatter-add patches back onto (B, D0, D1, D2, C)."""
    b, o0, o1, o2, _ = cols.shape
    c = cols.shape[4] // (k0 * k1 * k2)
    cols = cols.reshape(b, o0, o1, o2, k0, k1, k2, c)
    x = np.zeros((b, d0, d1, d2, c), dtype=cols.dtype)
    for i in range(k0):
        for j in range(k1):
            for k in range(k2):
                x[
                    :,
                    i : i + o0 * s0 : s0,
                    j : j + o1 * s1 : s1,
                    k : k + o2 * s2 : s2,
                    :,
                ] += cols[:, :, :, :, i, j, k, :]
    return x


def voxelize_points(points, origin, voxel_size, nx, ny, nz):
    """Binary-occupancy voxelization; out-of-bounds points are dropped.

    Index of a point p is floor((p - origin) / voxel_size), per axis.
    """
    grid = np.zeros((nx, ny, nz), dtype=np.uint8)
    if len(points) == 0:
        return grid
    idx = np.floor((points - origin) / voxel_size).astype(np.int64)
    ok = (
        (idx[:, 0] >= 0)
        & (idx[:, 0] < nx)
        & (idx[:, 1] >= 0)
        & (idx[:, 1] < ny)
        & (idx[:, 2] >= 0)
        & (idx[:, 2] < nz)
    )
    idx = idx[ok]
    grid[idx[:, 0], idx[:, 1], idx[:, 2]] = 1
    return grid
