"""Synthetic depth cameras, point-cloud fusion, voxel grids, augmentation.

Two pinhole cameras ride on the end effector and ray-cast the table plane
and the episode box (sides as exact slabs, top face as a tilted plane with
per-cell height offsets, refined once for parallax). Depth is z-depth along
the optical axis, clipped to 0.20 m; clipped pixels are discarded during
unprojection, so fused clouds only contain real surface points.

The voxel grid is 50x50x40 cells of 2 mm anchored to the cup tip (x, y in
[-5, 5] cm, z in [-7, +1] cm), matching the unprojection frame, so the grid
is invariant to joint translation of scene and end effector.

Grids serialize as run-length-encoded blobs: cells flattened x-major (then
y, then z), alternating zero/one run lengths as little-endian uint16 with
65535-length runs chained by zero-length alternations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from . import boxes as boxmod

DEPTH_CLIP = 0.20
IMAGE_SIZE = 128
PAD_2D = 4
PAD_3D = 3


@dataclass(frozen=True)
class GridSpec:
    shape: tuple = (50, 50, 40)
    voxel_size: float = 0.002
    origin: tuple = (-0.05, -0.05, -0.07)


@dataclass
class Camera:
    pos: np.ndarray  # mount position in EE frame
    rot: np.ndarray  # 3x3, camera axes (x right, y down, z optical) in EE frame
    fov_deg: float = 87.0
    size: int = IMAGE_SIZE

    def __post_init__(self):
        f = (self.size / 2.0) / np.tan(np.deg2rad(self.fov_deg) / 2.0)
        c = (self.size - 1) / 2.0
        xs = (np.arange(self.size) - c) / f
        self.dirs = np.empty((self.size, self.size, 3))
        self.dirs[..., 0] = xs[None, :]  # u along columns
        self.dirs[..., 1] = xs[:, None]  # v along rows
        self.dirs[..., 2] = 1.0


def _look_at(pos, target):
    z = target - pos
    z = z / np.linalg.norm(z)
    x = np.cross(np.array([0.0, 0.0, 1.0]), z)
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return np.stack([x, y, z], axis=1)


@dataclass
class CameraRig:
    cameras: list

    @staticmethod
    def default():
        """Two cameras at +-45 deg around the tool axis, 6 cm out, looking at
        a point on the axis below the tip (about 30 deg off vertical)."""
        cams = []
        for az in (np.deg2rad(45.0), np.deg2rad(-135.0)):
            pos = np.array([0.06 * np.cos(az), 0.06 * np.sin(az), 0.02])
            target = np.array([0.0, 0.0, -0.084])
            cams.append(Camera(pos=pos, rot=_look_at(pos, target)))
        return CameraRig(cameras=cams)


@dataclass
class Scene:
    box: "boxmod.BoxSpec | None"
    box_pos: np.ndarray  # (3,) world, box center
    box_yaw: float
    table: bool = True


def render_depth(scene, cam_pos, cam_rot, size=IMAGE_SIZE, dirs=None,
                 noise_sigma=0.0, rng=None):
    """Ray-cast z-depth image from a world camera pose; clipped to 0.20 m.

    scene=None renders nothing: every pixel sits at the clip value.
    """
    if dirs is None:
        dirs = Camera(pos=np.zeros(3), rot=np.eye(3), size=size).dirs
    d_world = dirs @ cam_rot.T  # (H, W, 3)
    o = cam_pos
    t = np.full(dirs.shape[:2], np.inf)

    if scene is not None and scene.table:
        dz = d_world[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_table = -o[2] / dz
        ok = (dz < -1e-12) & (t_table > 1e-6)
        t = np.where(ok, np.minimum(t, t_table), t)

    if scene is not None and scene.box is not None:
        t_box = _raycast_box(scene, o, d_world)
        t = np.minimum(t, t_box)

    depth = np.minimum(t, DEPTH_CLIP)
    if noise_sigma > 0.0 and rng is not None:
        valid = depth < DEPTH_CLIP
        depth = depth + valid * rng.normal(0.0, noise_sigma, depth.shape)
        depth = np.clip(depth, 0.0, DEPTH_CLIP)
    return depth


def _raycast_box(scene, o, d_world):
    box = scene.box
    hx, hy, hz = box.half_extents
    c, s = np.cos(scene.box_yaw), np.sin(scene.box_yaw)
    R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    ob = R.T @ (o - scene.box_pos)
    db = d_world @ R  # row-vectors times R == R.T @ d

    half = np.array([hx, hy, hz])
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / db
        t1 = (-half - ob) * inv
        t2 = (half - ob) * inv
    tn = np.minimum(t1, t2)
    tf = np.maximum(t1, t2)
    # 0 * inf -> nan only when the origin lies exactly on a slab plane the
    # ray is parallel to; treat that slab as pass-through
    tn = np.where(np.isnan(tn), -np.inf, tn)
    tf = np.where(np.isnan(tf), np.inf, tf)
    t_enter = tn.max(axis=-1)
    t_exit = tf.min(axis=-1)
    hit = (t_enter <= t_exit) & (t_exit > 1e-6) & (t_enter > 1e-6)

    enter_axis = tn.argmax(axis=-1)
    top_entry = hit & (enter_axis == 2) & (db[..., 2] < 0.0)

    t_out = np.where(hit, t_enter, np.inf)
    if top_entry.any():
        slope = np.tan(np.deg2rad(box.tilt_deg))
        denom = db[..., 2] - slope * db[..., 1]
        # first pass on the tilted plane, no cell offset
        with np.errstate(divide="ignore", invalid="ignore"):
            t0 = (hz + slope * ob[1] - ob[2]) / denom
        px = ob[0] + t0 * db[..., 0]
        py = ob[1] + t0 * db[..., 1]
        iu = np.floor((px + hx) / boxmod.CELL_SIZE).astype(np.int64)
        iv = np.floor((py + hy) / boxmod.CELL_SIZE).astype(np.int64)
        nu, nv = box.surface.shape
        inside = (iu >= 0) & (iu < nu) & (iv >= 0) & (iv < nv)
        iu_c = np.clip(iu, 0, nu - 1)
        iv_c = np.clip(iv, 0, nv - 1)
        off = np.where(inside, _OFFSETS[box.surface[iu_c, iv_c]], 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_cell = (hz + slope * ob[1] + off - ob[2]) / denom
        use = top_entry & inside & (t_cell > 1e-6)
        t_out = np.where(use, t_cell, t_out)
        # top entries that miss the face cells fall back to the slab distance
    return t_out


_OFFSETS = np.array(
    [boxmod.CELL_OFFSET[k] for k in (boxmod.SMOOTH, boxmod.HOLE, boxmod.RIDGE, boxmod.CONCAVE)]
)


def render_rig(rig, cup_pos, cup_rot, scene, noise_sigma=0.0, rng=None):
    """Depth image per rig camera, given the cup world pose."""
    images = []
    for cam in rig.cameras:
        pos_w = cup_pos + cup_rot @ cam.pos
        rot_w = cup_rot @ cam.rot
        images.append(
            render_depth(scene, pos_w, rot_w, size=cam.size, dirs=cam.dirs,
                         noise_sigma=noise_sigma, rng=rng)
        )
    return images


def fuse_point_clouds(d0, d1, rig):
    """Unproject both depth images and merge into one EE-frame cloud.

    Pixels at the clip distance are discarded (no surface there).
    """
    clouds = []
    for depth, cam in zip((d0, d1), rig.cameras):
        valid = depth < DEPTH_CLIP
        if not valid.any():
            continue
        pts_cam = depth[valid, None] * cam.dirs[valid]
        clouds.append(pts_cam @ cam.rot.T + cam.pos)
    if not clouds:
        return np.zeros((0, 3))
    return np.concatenate(clouds, axis=0)


def voxelize(points, spec: GridSpec = GridSpec()):
    """Binary occupancy grid; a voxel is occupied if any point falls in it."""
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    origin = np.ascontiguousarray(np.asarray(spec.origin, dtype=np.float64))
    nx, ny, nz = spec.shape
    return _kernels.voxelize_points(pts, origin, spec.voxel_size, nx, ny, nz)


def cup_stamp_indices(spec: GridSpec, r_cup):
    """Grid indices of the cup stub (a short cylinder above the tip)."""
    nx, ny, nz = spec.shape
    ox, oy, oz = spec.origin
    xs = ox + (np.arange(nx) + 0.5) * spec.voxel_size
    ys = oy + (np.arange(ny) + 0.5) * spec.voxel_size
    zs = oz + (np.arange(nz) + 0.5) * spec.voxel_size
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    disc = xx**2 + yy**2 <= r_cup**2
    zmask = (zs >= 0.0) & (zs <= 0.01)
    ix, iy = np.nonzero(disc)
    iz = np.nonzero(zmask)[0]
    gx = np.repeat(ix, len(iz))
    gy = np.repeat(iy, len(iz))
    gz = np.tile(iz, len(ix))
    return gx, gy, gz


# ---------------------------------------------------------------------------
# DRQ-style random shifts


def shift_grid(grid, shift):
    """Translate occupancy by integer shift; cells moved past a face drop."""
    out = np.zeros_like(grid)
    src = []
    dst = []
    for ax, s in enumerate(shift):
        n = grid.shape[ax]
        if abs(s) >= n:
            return out
        if s >= 0:
            src.append(slice(0, n - s))
            dst.append(slice(s, n))
        else:
            src.append(slice(-s, n))
            dst.append(slice(0, n + s))
    out[tuple(dst)] = grid[tuple(src)]
    return out


def random_shift_3d(grid, rng, pad=PAD_3D):
    """Pad by `pad` empty voxels per side, crop back at a random offset."""
    shift = rng.integers(-pad, pad + 1, size=3)
    return shift_grid(grid, shift)


def random_shift_2d(img, rng, pad=PAD_2D):
    """Edge-replicated pad then random crop back to the original size."""
    h, w = img.shape[-2:]
    padded = np.pad(
        img,
        [(0, 0)] * (img.ndim - 2) + [(pad, pad), (pad, pad)],
        mode="edge",
    )
    r0, c0 = rng.integers(0, 2 * pad + 1, size=2)
    return padded[..., r0 : r0 + h, c0 : c0 + w].copy()


# ---------------------------------------------------------------------------
# grid run-length serialization


def rle_encode(grid):
    """RLE blob of a binary grid, x-major flattening, uint16 run lengths."""
    flat = np.asarray(grid, dtype=np.uint8).reshape(-1)
    runs = []
    change = np.flatnonzero(np.diff(flat))
    starts = np.concatenate([[0], change + 1])
    lengths = np.diff(np.concatenate([starts, [flat.size]]))
    if flat[0] != 0:
        runs.append(0)  # blobs always start with a zero-run
    for length in lengths:
        length = int(length)
        while length >= 0xFFFF:
            runs.append(0xFFFF)
            runs.append(0)
            length -= 0xFFFF
        runs.append(length)
    return np.asarray(runs, dtype="<u2").tobytes()


def rle_decode(blob, shape):
    runs = np.frombuffer(blob, dtype="<u2").astype(np.int64)
    total = int(np.prod(shape))
    flat = np.zeros(total, dtype=np.uint8)
    pos = 0
    val = 0
    for run in runs:
        if val == 1 and run > 0:
            flat[pos : pos + run] = 1
        pos += int(run)
        val ^= 1
    if pos != total:
        raise ValueError(f"RLE length {pos} does not match grid size {total}")
    return flat.reshape(shape)
