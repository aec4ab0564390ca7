# Cython twins of the numpy kernels in fallback.py. Gather kernels (im2col,
# voxelize) match the fallback bitwise; the col2im scatters accumulate in
# position-major order for cache locality, so overlapping-window results can
# differ from the fallback in the last float bits.

import numpy as np

cimport cython
from libc.math cimport floor

ctypedef fused floating:
    float
    double

BACKEND = "native"


def im2col2d(floating[:, :, :, ::1] x, int kh, int kw, int sh, int sw):
    cdef Py_ssize_t b = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef Py_ssize_t oh = (h - kh) // sh + 1
    cdef Py_ssize_t ow = (w - kw) // sw + 1
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.empty((b, oh, ow, kh * kw * c), dtype=dtype)
    cdef floating[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t bi, i, j, p, q, ci, col
    for bi in range(b):
        for i in range(oh):
            for j in range(ow):
                col = 0
                for p in range(kh):
                    for q in range(kw):
                        for ci in range(c):
                            out[bi, i, j, col] = x[bi, i * sh + p, j * sw + q, ci]
                            col += 1
    return out_arr


def col2im2d(floating[:, :, :, ::1] cols, int h, int w, int kh, int kw, int sh, int sw):
    # position-major traversal: patch reads are sequential, writes stay in a
    # kh x kw neighborhood
    cdef Py_ssize_t b = cols.shape[0], oh = cols.shape[1], ow = cols.shape[2]
    cdef Py_ssize_t c = cols.shape[3] // (kh * kw)
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    x_arr = np.zeros((b, h, w, c), dtype=dtype)
    cdef floating[:, :, :, ::1] x = x_arr
    cdef Py_ssize_t p, q, bi, i, j, ci, col
    for bi in range(b):
        for i in range(oh):
            for j in range(ow):
                col = 0
                for p in range(kh):
                    for q in range(kw):
                        for ci in range(c):
                            x[bi, i * sh + p, j * sw + q, ci] += cols[bi, i, j, col]
                            col += 1
    return x_arr


def im2col3d(floating[:, :, :, :, ::1] x, int k0, int k1, int k2, int s0, int s1, int s2):
    cdef Py_ssize_t b = x.shape[0], d0 = x.shape[1], d1 = x.shape[2], d2 = x.shape[3], c = x.shape[4]
    cdef Py_ssize_t o0 = (d0 - k0) // s0 + 1
    cdef Py_ssize_t o1 = (d1 - k1) // s1 + 1
    cdef Py_ssize_t o2 = (d2 - k2) // s2 + 1
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.empty((b, o0, o1, o2, k0 * k1 * k2 * c), dtype=dtype)
    cdef floating[:, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t bi, i, j, k, p, q, r, ci, base
    # (p, q) outer / (k, r) inner: reads sweep one contiguous z-row of x per
    # (bi, i, j, p, q); the scattered writes stay inside an L1-sized window
    for bi in range(b):
        for i in range(o0):
            for j in range(o1):
                for p in range(k0):
                    for q in range(k1):
                        base = (p * k1 + q) * k2 * c
                        for k in range(o2):
                            for r in range(k2):
                                for ci in range(c):
                                    out[bi, i, j, k, base + r * c + ci] = x[
                                        bi, i * s0 + p, j * s1 + q, k * s2 + r, ci
                                    ]
    return out_arr


def col2im3d(
    floating[:, :, :, :, ::1] cols,
    int d0, int d1, int d2,
    int k0, int k1, int k2,
    int s0, int s1, int s2,
):
    cdef Py_ssize_t b = cols.shape[0], o0 = cols.shape[1], o1 = cols.shape[2], o2 = cols.shape[3]
    cdef Py_ssize_t c = cols.shape[4] // (k0 * k1 * k2)
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    x_arr = np.zeros((b, d0, d1, d2, c), dtype=dtype)
    cdef floating[:, :, :, :, ::1] x = x_arr
    cdef Py_ssize_t p, q, r, bi, i, j, k, ci, col
    for bi in range(b):
        for i in range(o0):
            for j in range(o1):
                for k in range(o2):
                    col = 0
                    for p in range(k0):
                        for q in range(k1):
                            for r in range(k2):
                                for ci in range(c):
                                    x[bi, i * s0 + p, j * s1 + q, k * s2 + r, ci] += cols[
                                        bi, i, j, k, col
                                    ]
                                    col += 1
    return x_arr


def voxelize_points(double[:, ::1] points, double[::1] origin, double voxel_size,
                    int nx, int ny, int nz):
    grid_arr = np.zeros((nx, ny, nz), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] grid = grid_arr
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t i
    cdef long ix, iy, iz
    for i in range(n):
        ix = <long>floor((points[i, 0] - origin[0]) / voxel_size)
        iy = <long>floor((points[i, 1] - origin[1]) / voxel_size)
        iz = <long>floor((points[i, 2] - origin[2]) / voxel_size)
        if 0 <= ix < nx and 0 <= iy < ny and 0 <= iz < nz:
            grid[ix, iy, iz] = 1
    return grid_arr
