"""Replay buffers with symmetric demo/online sampling.

Transitions are stored structure-of-arrays; sensor frames are kept encoded
(voxel grids bit-packed, depth quantized to uint16 over [0, 0.2] m) and
decoded on batch assembly. A step's next-frame bytes object is reused as the
following step's frame, so episodes cost one frame per step.

done is the bootstrap mask: 1 only at goal termination, never at the step
limit (time limits are not environment terminals).
"""

from __future__ import annotations

import numpy as np

from .. import sensing
from ..nets.encoders import DEPTH_SHAPE, VOXEL_SHAPE

DEPTH_QUANT = 65535.0 / sensing.DEPTH_CLIP


def encode_voxel(grid) -> bytes:
    return np.packbits(np.asarray(grid, dtype=np.uint8).reshape(-1)).tobytes()


def decode_voxel(blob) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(blob, dtype=np.uint8))
    n = int(np.prod(VOXEL_SHAPE))
    return bits[:n].reshape(VOXEL_SHAPE)


def encode_depth(images) -> bytes:
    """images: (2, 128, 128) float in [0, 0.2]."""
    q = np.round(np.asarray(images) * DEPTH_QUANT).astype(np.uint16)
    return q.tobytes()


def decode_depth(blob) -> np.ndarray:
    """Returns (128, 128, 2) float32, channels last."""
    q = np.frombuffer(blob, dtype=np.uint16).reshape((2,) + DEPTH_SHAPE)
    return (q.astype(np.float32) / DEPTH_QUANT).transpose(1, 2, 0)


class TransitionBuffer:
    """Ring buffer of transitions for one source (demo or online)."""

    def __init__(self, capacity, obs_dim, act_dim=7):
        self.capacity = capacity
        self.obs_vec = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.next_obs_vec = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.action = np.zeros((capacity, act_dim), dtype=np.float32)
        self.reward = np.zeros(capacity, dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.float32)
        self.frames: list = [None] * capacity
        self.next_frames: list = [None] * capacity
        self.size = 0
        self.pos = 0

    def push(self, obs_vec, action, reward, done, next_obs_vec,
             frame=None, next_frame=None):
        i = self.pos
        self.obs_vec[i] = obs_vec
        self.next_obs_vec[i] = next_obs_vec
        self.action[i] = action
        self.reward[i] = reward
        self.done[i] = float(done)
        self.frames[i] = frame
        self.next_frames[i] = next_frame
        self.pos = (self.pos + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def __len__(self):
        return self.size

    def state_dict(self):
        blob, offsets = _pack_frames(self.frames[: self.size])
        nblob, noffsets = _pack_frames(self.next_frames[: self.size])
        return {
            "obs_vec": self.obs_vec[: self.size].copy(),
            "next_obs_vec": self.next_obs_vec[: self.size].copy(),
            "action": self.action[: self.size].copy(),
            "reward": self.reward[: self.size].copy(),
            "done": self.done[: self.size].copy(),
            "frames_blob": blob,
            "frames_off": offsets,
            "next_frames_blob": nblob,
            "next_frames_off": noffsets,
            "pos": self.pos,
            "size": self.size,
        }

    def load_state_dict(self, state):
        n = int(state["size"])
        self.size = n
        self.pos = int(state["pos"])
        self.obs_vec[:n] = state["obs_vec"]
        self.next_obs_vec[:n] = state["next_obs_vec"]
        self.action[:n] = state["action"]
        self.reward[:n] = state["reward"]
        self.done[:n] = state["done"]
        self.frames = _unpack_frames(state["frames_blob"], state["frames_off"]) + [None] * (
            self.capacity - n
        )
        self.next_frames = _unpack_frames(
            state["next_frames_blob"], state["next_frames_off"]
        ) + [None] * (self.capacity - n)


def _pack_frames(frames):
    if any(f is None for f in frames):
        return np.zeros(0, dtype=np.uint8), np.zeros(0, dtype=np.int64)
    blob = b"".join(frames)
    offsets = np.cumsum([0] + [len(f) for f in frames]).astype(np.int64)
    return np.frombuffer(blob, dtype=np.uint8), offsets


def _unpack_frames(blob, offsets):
    if len(offsets) == 0:
        return []
    raw = blob.tobytes()
    return [raw[offsets[i] : offsets[i + 1]] for i in range(len(offsets) - 1)]


class ReplayBuffers:
    """Demo buffer (immutable after loading) plus online ring buffer."""

    def __init__(self, obs_dim, demo_capacity=10_000, online_capacity=100_000):
        self.demo = TransitionBuffer(demo_capacity, obs_dim)
        self.online = TransitionBuffer(online_capacity, obs_dim)
        self._demo_locked = False

    def push_demo(self, *args, **kw):
        if self._demo_locked:
            raise RuntimeError("demo buffer is immutable after loading")
        self.demo.push(*args, **kw)

    def lock_demos(self):
        self._demo_locked = True

    def push_online(self, *args, **kw):
        self.online.push(*args, **kw)


def symmetric_sample(buffers: ReplayBuffers, batch_size, rng):
    """Half the batch from demos, half from online data (uniform within each).

    Falls back to a single source while the other is empty.
    Returns (buffer, index) pairs as ((demo_idx, online_idx)).
    """
    n_demo = len(buffers.demo)
    n_online = len(buffers.online)
    if n_demo == 0 and n_online == 0:
        raise ValueError("both replay buffers are empty")
    if n_online == 0:
        return rng.integers(0, n_demo, size=batch_size), np.zeros(0, dtype=np.int64)
    if n_demo == 0:
        return np.zeros(0, dtype=np.int64), rng.integers(0, n_online, size=batch_size)
    k_demo = (batch_size + 1) // 2
    k_online = batch_size // 2
    return (
        rng.integers(0, n_demo, size=k_demo),
        rng.integers(0, n_online, size=k_online),
    )


def assemble_batch(buffers, demo_idx, online_idx, modality, augment, rng):
    """Gather, decode and (optionally) shift-augment a training batch."""
    parts = []
    for buf, idx, is_demo in ((buffers.demo, demo_idx, 1.0), (buffers.online, online_idx, 0.0)):
        if len(idx) == 0:
            continue
        part = {
            "obs_vec": buf.obs_vec[idx],
            "next_obs_vec": buf.next_obs_vec[idx],
            "action": buf.action[idx],
            "reward": buf.reward[idx],
            "done": buf.done[idx],
            "is_demo": np.full(len(idx), is_demo, dtype=np.float32),
        }
        if modality in ("voxel", "voxel_only"):
            part["frames"] = [decode_voxel(buf.frames[i]) for i in idx]
            part["next_frames"] = [decode_voxel(buf.next_frames[i]) for i in idx]
        elif modality == "depth":
            part["frames"] = [decode_depth(buf.frames[i]) for i in idx]
            part["next_frames"] = [decode_depth(buf.next_frames[i]) for i in idx]
        parts.append(part)

    batch = {
        k: np.concatenate([p[k] for p in parts])
        for k in ("obs_vec", "next_obs_vec", "action", "reward", "done", "is_demo")
    }
    if modality == "proprio":
        batch["frames"] = None
        batch["next_frames"] = None
        return batch

    frames = [f for p in parts for f in p["frames"]]
    next_frames = [f for p in parts for f in p["next_frames"]]
    if augment:
        if modality in ("voxel", "voxel_only"):
            frames = [sensing.random_shift_3d(f, rng) for f in frames]
            next_frames = [sensing.random_shift_3d(f, rng) for f in next_frames]
        else:
            frames = [
                np.moveaxis(sensing.random_shift_2d(np.moveaxis(f, -1, 0), rng), 0, -1)
                for f in frames
            ]
            next_frames = [
                np.moveaxis(sensing.random_shift_2d(np.moveaxis(f, -1, 0), rng), 0, -1)
                for f in next_frames
            ]
    if modality in ("voxel", "voxel_only"):
        batch["frames"] = np.stack(frames).astype(np.float32)[..., None]
        batch["next_frames"] = np.stack(next_frames).astype(np.float32)[..., None]
    else:
        batch["frames"] = np.stack(frames)
        batch["next_frames"] = np.stack(next_frames)
    return batch
