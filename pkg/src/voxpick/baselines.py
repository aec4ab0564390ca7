"""Scripted policies: behavior tree, demo generation, temporal ensembling.

The behavior tree descends whenever possible, activates the suction cup on
detecting a pressing force in negative z, ascends once gripped, and finishes
when the grasp is still active 1 cm above the start pose. A failed seal
makes it ascend, shift to a random XY offset, and reattempt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rl import replay


@dataclass
class BtConfig:
    f_trigger: float = 5.0  # N, pressing force that triggers activation
    patience: int = 5  # activate steps before giving up on a seal
    reposition_radius: float = 0.02  # m, random XY offset disc
    kp_xy: float = 60.0  # action per meter of lateral error
    ascend_clear: float = -0.005  # rel z above which repositioning descends again
    done_z: float = 0.0105


@dataclass
class BtState:
    phase: str = "descend"
    retry_count: int = 0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    target_xy: np.ndarray = field(default_factory=lambda: np.zeros(2))
    activate_steps: int = 0

    @staticmethod
    def fresh(seed):
        return BtState(rng=np.random.default_rng(seed))


def bt_policy(obs, bt: BtState, cfg: BtConfig | None = None):
    """One behavior-tree decision; returns (action, updated state)."""
    cfg = cfg or _DEFAULT_BT
    a = np.zeros(7)
    x, y, z = obs.rel_pos
    xy = np.array([x, y])
    gripped = obs.gripped > 0.5

    if bt.phase == "descend":
        a[:2] = np.clip(cfg.kp_xy * (bt.target_xy - xy), -1.0, 1.0)
        a[2] = -1.0
        if obs.force[2] < -cfg.f_trigger:
            bt.phase = "grasp"
            bt.activate_steps = 0
    elif bt.phase == "grasp":
        a[2] = -0.3  # keep pressing while the seal forms
        a[6] = 1.0
        bt.activate_steps += 1
        if gripped:
            bt.phase = "ascend"
        elif bt.activate_steps >= cfg.patience:
            bt.retry_count += 1
            bt.target_xy = xy + _disc_sample(bt.rng, cfg.reposition_radius)
            bt.phase = "reposition"
    elif bt.phase == "ascend":
        a[2] = 1.0
        if gripped and z >= cfg.done_z:
            bt.phase = "done"
        elif not gripped:
            bt.retry_count += 1
            bt.target_xy = xy + _disc_sample(bt.rng, cfg.reposition_radius)
            bt.phase = "reposition"
    elif bt.phase == "reposition":
        a[:2] = np.clip(cfg.kp_xy * (bt.target_xy - xy), -1.0, 1.0)
        if z < cfg.ascend_clear:
            a[2] = 1.0
        elif float(np.hypot(*(bt.target_xy - xy))) < 0.004:
            bt.phase = "descend"
    # "done": zero action
    return a, bt


_DEFAULT_BT = BtConfig()


def _disc_sample(rng, radius):
    r = radius * np.sqrt(rng.uniform())
    phi = rng.uniform(0.0, 2.0 * np.pi)
    return np.array([r * np.cos(phi), r * np.sin(phi)])

# ---------------------------------------------------------------------------
# demonstrations


@dataclass
class DemoStep:
    obs_vec: np.ndarray  # full 27-dim proprioception
    voxel: bytes | None  # packed occupancy, replay.encode_voxel
    depth: bytes | None  # quantized depth pair, replay.encode_depth
    action: np.ndarray
    reward: float
    terminated: bool
    truncated: bool


@dataclass
class DemoEpisode:
    seed: int
    box_name: str
    steps: list  # DemoStep per action
    final_obs_vec: np.ndarray
    final_voxel: bytes | None
    final_depth: bytes | None

    @property
    def total_reward(self):
        return float(sum(s.reward for s in self.steps))


def _snapshot(obs):
    voxel = replay.encode_voxel(obs.voxel) if obs.voxel is not None else None
    depth = replay.encode_depth(obs.depth) if obs.depth is not None else None
    return obs.vec(), voxel, depth


def run_bt_episode(env, seed, noise_sigma=0.0, noise_rng=None, cfg=None):
    """Roll one behavior-tree episode; returns (DemoEpisode, terminated)."""
    obs = env.reset(seed=seed)
    bt = BtState.fresh(seed)
    steps = []
    terminated = truncated = False
    while not (terminated or truncated):
        action, bt = bt_policy(obs, bt, cfg)
        if noise_sigma > 0.0 and noise_rng is not None:
            action = action.copy()
            action[:6] = np.clip(
                action[:6] + noise_rng.normal(0.0, noise_sigma, 6), -1.0, 1.0
            )
        vec, voxel, depth = _snapshot(obs)
        obs, reward, terminated, truncated = env.step(action)
        steps.append(
            DemoStep(
                obs_vec=vec,
                voxel=voxel,
                depth=depth,
                action=np.clip(action, -1.0, 1.0),
                reward=reward.total,
                terminated=terminated,
                truncated=truncated,
            )
        )
    vec, voxel, depth = _snapshot(obs)
    episode = DemoEpisode(
        seed=seed,
        box_name=env.box.name,
        steps=steps,
        final_obs_vec=vec,
        final_voxel=voxel,
        final_depth=depth,
    )
    return episode, terminated


def generate_demos(env, n, noise_sigma=0.05, seed=0):
    """Collect n successful scripted episodes (failures are discarded)."""
    if n < 1:
        raise ValueError("need at least one demonstration")
    rng = np.random.default_rng(seed)
    demos = []
    attempts = 0
    while len(demos) < n:
        if attempts >= 50 * n:
            raise RuntimeError(
                f"demo generation stuck: {len(demos)}/{n} successes in {attempts} attempts"
            )
        ep_seed = int(rng.integers(2**63))
        episode, success = run_bt_episode(
            env, ep_seed, noise_sigma=noise_sigma, noise_rng=rng
        )
        attempts += 1
        if success:
            demos.append(episode)
    return demos


# ---------------------------------------------------------------------------
# temporal ensembling and smoothness


ENSEMBLE_WEIGHTS = np.array([0.5, 0.3, 0.2, 0.1])


@dataclass
class EnsembleBuffer:
    """Last 4 sampled actions, newest first; seeded by replicating the first."""

    history: list = field(default_factory=list)

    def reset(self):
        self.history = []


def temporal_ensemble(buf: EnsembleBuffer, a_sampled):
    """Weighted sum of the recent action history on the continuous dims.

    The gripper command comes from the newest action unweighted (averaging a
    discrete command is meaningless). Weights are used exactly as given,
    summing to 1.1.
    """
    a_sampled = np.asarray(a_sampled, dtype=np.float64)
    if not buf.history:
        buf.history = [a_sampled.copy()] * len(ENSEMBLE_WEIGHTS)
    else:
        buf.history = [a_sampled.copy()] + buf.history[: len(ENSEMBLE_WEIGHTS) - 1]
    stacked = np.stack(buf.history)  # newest first
    out = a_sampled.copy()
    out[:6] = ENSEMBLE_WEIGHTS[: len(stacked)] @ stacked[:, :6]
    return out


def smoothness(trajectories):
    """Mean over trajectories of the summed consecutive action differences."""
    totals = []
    for actions in trajectories:
        actions = np.asarray(actions)
        if len(actions) < 2:
            raise ValueError("smoothness needs trajectories of length >= 2")
        totals.append(float(np.linalg.norm(np.diff(actions, axis=0), axis=1).sum()))
    return float(np.mean(totals))
