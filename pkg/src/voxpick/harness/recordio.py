"""Trajectory / demonstration JSONL files and minimal image writers.

One schema serves demo sets and evaluation trajectory logs:

    {"type": "episode", "seed": ..., "box": ..., "is_demo": ...}
    {"type": "step", "t": ..., "obs_vec": [...27], "action": [...7],
     "reward": ..., "terminated": ..., "truncated": ...,
     "voxel_rle": base64 | null, "depth_u16": base64 | null}
    {"type": "final_obs", "obs_vec": [...], "voxel_rle": ..., "depth_u16": ...}

Voxel grids travel as the documented RLE blobs (x-major), depth images as
raw little-endian uint16 pairs quantized over [0, 0.2] m. Image output for
the replay command uses a dependency-free PNG/PGM encoder.
"""

from __future__ import annotations

import base64
import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .. import sensing
from ..baselines import DemoEpisode, DemoStep
from ..nets.encoders import VOXEL_SHAPE
from ..rl import replay


def _b64(blob) -> str:
    return base64.b64encode(blob).decode("ascii")


def _unb64(text) -> bytes:
    return base64.b64decode(text.encode("ascii"))


def _voxel_field(packed):
    if packed is None:
        return None
    return _b64(sensing.rle_encode(replay.decode_voxel(packed)))


def _voxel_unfield(text):
    if text is None:
        return None
    return replay.encode_voxel(sensing.rle_decode(_unb64(text), VOXEL_SHAPE))


def write_demos(path, demos):
    with open(path, "w") as f:
        for ep in demos:
            f.write(json.dumps(
                {"type": "episode", "seed": ep.seed, "box": ep.box_name, "is_demo": True},
                sort_keys=True) + "\n")
            for t, s in enumerate(ep.steps):
                f.write(json.dumps({
                    "type": "step",
                    "t": t,
                    "obs_vec": [round(float(v), 8) for v in s.obs_vec],
                    "action": [round(float(v), 8) for v in s.action],
                    "reward": round(float(s.reward), 8),
                    "terminated": bool(s.terminated),
                    "truncated": bool(s.truncated),
                    "voxel_rle": _voxel_field(s.voxel),
                    "depth_u16": _b64(s.depth) if s.depth is not None else None,
                }, sort_keys=True) + "\n")
            f.write(json.dumps({
                "type": "final_obs",
                "obs_vec": [round(float(v), 8) for v in ep.final_obs_vec],
                "voxel_rle": _voxel_field(ep.final_voxel),
                "depth_u16": _b64(ep.final_depth) if ep.final_depth is not None else None,
            }, sort_keys=True) + "\n")


def read_demos(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"demo file not found: {path}")
    demos = []
    current = None
    steps = []
    for line in path.read_text().splitlines():
        rec = json.loads(line)
        if rec["type"] == "episode":
            current = rec
            steps = []
        elif rec["type"] == "step":
            steps.append(DemoStep(
                obs_vec=np.array(rec["obs_vec"], dtype=np.float32),
                voxel=_voxel_unfield(rec["voxel_rle"]),
                depth=_unb64(rec["depth_u16"]) if rec["depth_u16"] else None,
                action=np.array(rec["action"]),
                reward=rec["reward"],
                terminated=rec["terminated"],
                truncated=rec["truncated"],
            ))
        elif rec["type"] == "final_obs":
            demos.append(DemoEpisode(
                seed=current["seed"],
                box_name=current["box"],
                steps=steps,
                final_obs_vec=np.array(rec["obs_vec"], dtype=np.float32),
                final_voxel=_voxel_unfield(rec["voxel_rle"]),
                final_depth=_unb64(rec["depth_u16"]) if rec["depth_u16"] else None,
            ))
    return demos


class TrajectorySink:
    """Streams evaluation episodes to a JSONL trajectory log."""

    def __init__(self, path):
        self.f = open(path, "w")
        self._t = 0
        self._pending = None

    def start_episode(self, environment, seed):
        self._t = 0
        self.f.write(json.dumps(
            {"type": "episode", "seed": seed, "box": environment.box.name,
             "is_demo": False}, sort_keys=True) + "\n")

    def pre_step(self, obs):
        self._pending = obs

    def record(self, action, reward, terminated, truncated):
        obs = self._pending
        voxel = replay.encode_voxel(obs.voxel) if obs.voxel is not None else None
        self.f.write(json.dumps({
            "type": "step",
            "t": self._t,
            "obs_vec": [round(float(v), 8) for v in obs.vec()],
            "action": [round(float(v), 8) for v in action],
            "reward": round(float(reward), 8),
            "terminated": bool(terminated),
            "truncated": bool(truncated),
            "voxel_rle": _voxel_field(voxel),
            "depth_u16": _b64(replay.encode_depth(obs.depth)) if obs.depth is not None else None,
        }, sort_keys=True) + "\n")
        self._t += 1

    def end_episode(self, obs):
        voxel = replay.encode_voxel(obs.voxel) if obs.voxel is not None else None
        self.f.write(json.dumps({
            "type": "final_obs",
            "obs_vec": [round(float(v), 8) for v in obs.vec()],
            "voxel_rle": _voxel_field(voxel),
            "depth_u16": _b64(replay.encode_depth(obs.depth)) if obs.depth is not None else None,
        }, sort_keys=True) + "\n")

    def close(self):
        self.f.close()


# ---------------------------------------------------------------------------
# minimal image writers (no plotting dependency)


def write_png(path, img):
    """Write a grayscale (H, W) or RGB (H, W, 3) uint8 PNG."""
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim == 2:
        color_type, channels = 0, 1
        h, w = img.shape
    elif img.ndim == 3 and img.shape[2] == 3:
        color_type, channels = 2, 3
        h, w = img.shape[:2]
    else:
        raise ValueError(f"unsupported image shape {img.shape}")
    raw = b"".join(
        b"\x00" + img[r].tobytes() for r in range(h)
    )

    def chunk(tag, data):
        body = tag + data
        return struct.pack(">I", len(data)) + body + struct.pack(
            ">I", zlib.crc32(body) & 0xFFFFFFFF
        )

    header = struct.pack(">IIBBBBB", w, h, 8, color_type, 0, 0, 0)
    png = (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", header)
        + chunk(b"IDAT", zlib.compress(raw, 6))
        + chunk(b"IEND", b"")
    )
    Path(path).write_bytes(png)
    return path


def write_pgm(path, img):
    """Binary PGM, grayscale uint8."""
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(img.tobytes())
    return path


def voxel_top_view(grid):
    """Top-down height map of an occupancy grid as uint8 (brighter = higher)."""
    grid = np.asarray(grid)
    nz = grid.shape[2]
    occ = grid.any(axis=2)
    top = np.where(occ, nz - 1 - np.argmax(grid[:, :, ::-1], axis=2), -1)
    img = np.zeros(grid.shape[:2], dtype=np.uint8)
    img[occ] = (40 + (215 * top[occ]) / max(nz - 1, 1)).astype(np.uint8)
    return img.T[::-1]  # x right, y up


def depth_to_u8(depth):
    return np.clip(depth / sensing.DEPTH_CLIP * 255.0, 0, 255).astype(np.uint8)


def render_trajectory(log_path, out_dir, every=1):
    """Render a trajectory log's grids/depth images to PNG frames."""
    log_path = Path(log_path)
    if not log_path.exists():
        raise FileNotFoundError(f"trajectory log not found: {log_path}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    episode = -1
    written = []
    for line in log_path.read_text().splitlines():
        rec = json.loads(line)
        if rec["type"] == "episode":
            episode += 1
        elif rec["type"] == "step" and rec["t"] % every == 0:
            tag = f"ep{episode:03d}_t{rec['t']:03d}"
            if rec.get("voxel_rle"):
                grid = sensing.rle_decode(_unb64(rec["voxel_rle"]), VOXEL_SHAPE)
                written.append(write_png(out_dir / f"{tag}_voxel.png", voxel_top_view(grid)))
            if rec.get("depth_u16"):
                pair = replay.decode_depth(_unb64(rec["depth_u16"]))
                for c in range(pair.shape[-1]):
                    written.append(
                        write_png(out_dir / f"{tag}_depth{c}.png", depth_to_u8(pair[..., c]))
                    )
    return written
