"""Demo-bootstrapped training loop.

Per environment step: one policy action (canonicalized observation in,
decanonicalized action out when symmetry is on), `utd_ratio` critic updates
on freshly sampled symmetric batches, then one actor/temperature update on
the last batch. Transitions enter the buffers already canonicalized when
symmetry is on, so every consumer sees the canonical quadrant.

Checkpoints capture everything needed to continue bitwise: parameters,
optimizer moments, both replay buffers, env state and every RNG stream.
Metrics stream to JSONL, one record per env step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import env as envmod
from . import replay
from .sac import SacAgent, TrainerConfig

CKPT_VERSION = 1


@dataclass
class TrainResult:
    out_dir: Path
    steps: int
    episodes: int
    successes: int
    metrics_path: Path
    policy_path: Path
    checkpoint_path: Path
    agent: SacAgent


def _needed_observe(modality):
    return {"proprio": "proprio", "depth": "depth", "voxel": "voxel",
            "voxel_only": "voxel"}[modality]


def process_snapshot(vec27, voxel_bytes, depth_bytes, config):
    """Canonicalize (when enabled) and slice a stored observation snapshot.

    Returns (vec for the agent, frame bytes for the buffer, k).
    """
    k = 0
    vec = np.asarray(vec27, dtype=np.float32)
    if config.symmetry:
        k = envmod.symmetry_index_of_vec(vec)
        if k:
            vec = envmod.canonicalize_vec27(vec, k).astype(np.float32)
    if config.modality in ("voxel", "voxel_only"):
        frame = voxel_bytes
        if k:
            from .. import geometry as geo

            grid = geo.rotate_grid_z90(replay.decode_voxel(voxel_bytes), k)
            frame = replay.encode_voxel(grid)
    elif config.modality == "depth":
        frame = depth_bytes  # oblique views have no exact 90-degree image twin
    else:
        frame = None
    if config.modality == "voxel_only":
        vec = vec[18:20]
    return vec, frame, k


def snapshot_observation(obs, config):
    """Encode a live Observation the same way demo snapshots are stored."""
    voxel = replay.encode_voxel(obs.voxel) if obs.voxel is not None else None
    depth = replay.encode_depth(obs.depth) if obs.depth is not None else None
    return process_snapshot(obs.vec(), voxel, depth, config)


def decode_frame(frame_bytes, modality):
    if modality in ("voxel", "voxel_only"):
        return replay.decode_voxel(frame_bytes).astype(np.float32)[..., None]
    if modality == "depth":
        return replay.decode_depth(frame_bytes)
    return None


def load_demos(buffers, demos, config):
    """Insert demo episodes (canonicalized per config) and lock the buffer."""
    for ep in demos:
        snaps = [(s.obs_vec, s.voxel, s.depth) for s in ep.steps]
        snaps.append((ep.final_obs_vec, ep.final_voxel, ep.final_depth))
        processed = [process_snapshot(*s, config) for s in snaps]
        for t, step in enumerate(ep.steps):
            vec, frame, k = processed[t]
            nvec, nframe, _ = processed[t + 1]
            action = envmod.canonicalize_action(step.action, k) if config.symmetry else step.action
            buffers.push_demo(
                vec, np.asarray(action, np.float32), step.reward,
                step.terminated, nvec, frame, nframe,
            )
    buffers.lock_demos()


def train(environment, config: TrainerConfig, demos, seed, out_dir,
          resume_from=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    needed = _needed_observe(config.modality)
    if needed != "proprio" and environment.observe not in (needed, "both"):
        raise ValueError(
            f"modality {config.modality} needs env.observe={needed!r}, "
            f"got {environment.observe!r}"
        )

    agent = SacAgent(config, seed=seed)
    buffers = replay.ReplayBuffers(
        config.obs_dim, online_capacity=config.online_capacity
    )
    if not demos:
        raise ValueError("training requires demonstrations")
    load_demos(buffers, demos, config)

    root = np.random.default_rng(seed)
    reset_rng = np.random.default_rng(int(root.integers(2**63)))
    aug_rng = np.random.default_rng(int(root.integers(2**63)))

    start_step = 0
    episodes = 0
    successes = 0
    episode_return = 0.0
    episode_len = 0

    metrics_path = out_dir / "metrics.jsonl"
    mode = "w"

    if resume_from is not None:
        state = _load_checkpoint(resume_from)
        # the run schedule may be extended on resume; everything else must match
        schedule = ("total_steps", "checkpoint_every")
        saved = {k: v for k, v in state["config"].items() if k not in schedule}
        wanted = {k: v for k, v in config.to_dict().items() if k not in schedule}
        if saved != wanted:
            raise ValueError("checkpoint config does not match the requested config")
        agent.load_state_dict(state["agent"])
        agent.set_rng_state(state["agent_rng"])
        buffers.demo.load_state_dict(state["demo_buffer"])
        buffers.lock_demos()
        buffers.online.load_state_dict(state["online_buffer"])
        environment.set_state(state["env_state"])
        reset_rng.bit_generator.state = state["reset_rng"]
        aug_rng.bit_generator.state = state["aug_rng"]
        start_step = state["step"]
        episodes = state["episodes"]
        successes = state["successes"]
        episode_return = state["episode_return"]
        episode_len = state["episode_len"]
        vec, frame, k = state["cur_vec"], state["cur_frame"], state["cur_k"]
        if metrics_path.exists():
            mode = "a"
    else:
        obs = environment.reset(seed=int(reset_rng.integers(2**63)))
        vec, frame, k = snapshot_observation(obs, config)

    log_f = open(metrics_path, mode)
    try:
        for step in range(start_step + 1, config.total_steps + 1):
            frame_dec = decode_frame(frame, config.modality)
            a_canon = agent.act(vec, frame_dec, deterministic=False)
            a_env = envmod.decanonicalize_action(a_canon, k)
            obs, reward, terminated, truncated = environment.step(a_env)
            nvec, nframe, nk = snapshot_observation(obs, config)
            buffers.push_online(
                vec, a_canon.astype(np.float32), reward.total, terminated,
                nvec, frame, nframe,
            )
            episode_return += reward.total
            episode_len += 1

            critic_loss = np.nan
            batch = None
            for _ in range(config.utd_ratio):
                d_idx, o_idx = replay.symmetric_sample(buffers, config.batch_size, aug_rng)
                batch = replay.assemble_batch(
                    buffers, d_idx, o_idx, config.modality, config.augmentation, aug_rng
                )
                critic_loss = agent.critic_update(batch)
            actor_loss = agent.actor_update(batch)

            if not (np.isfinite(critic_loss) and np.isfinite(actor_loss)
                    and np.isfinite(agent.alpha)):
                _dump_divergence(out_dir, step, critic_loss, actor_loss, agent)
                raise RuntimeError(
                    f"training diverged at step {step}; see divergence_dump.json"
                )

            record = {
                "step": step,
                "critic_loss": round(float(critic_loss), 8),
                "actor_loss": round(float(actor_loss), 8),
                "alpha": round(float(agent.alpha), 8),
                "episode_return": None,
                "success": None,
            }
            if terminated or truncated:
                episodes += 1
                successes += int(terminated)
                record["episode_return"] = round(float(episode_return), 8)
                record["success"] = bool(terminated)
                episode_return = 0.0
                episode_len = 0
                obs = environment.reset(seed=int(reset_rng.integers(2**63)))
                vec, frame, k = snapshot_observation(obs, config)
            else:
                vec, frame, k = nvec, nframe, nk
            if step % config.log_every == 0 or step == config.total_steps:
                log_f.write(json.dumps(record, sort_keys=True) + "\n")

            if config.checkpoint_every and step % config.checkpoint_every == 0:
                _save_checkpoint(
                    out_dir / f"ckpt_{step:07d}.npz", config, step, agent, buffers,
                    environment, reset_rng, aug_rng, episodes, successes,
                    episode_return, episode_len, vec, frame, k,
                )
    finally:
        log_f.close()

    ckpt_path = out_dir / "ckpt_final.npz"
    _save_checkpoint(
        ckpt_path, config, config.total_steps, agent, buffers, environment,
        reset_rng, aug_rng, episodes, successes, episode_return, episode_len,
        vec, frame, k,
    )
    policy_path = out_dir / "policy.npz"
    save_policy(policy_path, agent)
    return TrainResult(
        out_dir=out_dir,
        steps=config.total_steps,
        episodes=episodes,
        successes=successes,
        metrics_path=metrics_path,
        policy_path=policy_path,
        checkpoint_path=ckpt_path,
        agent=agent,
    )


def _dump_divergence(out_dir, step, critic_loss, actor_loss, agent):
    norms = {k: float(np.linalg.norm(v)) for k, v in agent.params.items()}
    dump = {
        "step": step,
        "critic_loss": float(critic_loss),
        "actor_loss": float(actor_loss),
        "alpha": float(agent.alpha),
        "param_norms": norms,
    }
    (Path(out_dir) / "divergence_dump.json").write_text(json.dumps(dump, indent=1))


# ---------------------------------------------------------------------------
# persistence


def _save_checkpoint(path, config, step, agent, buffers, environment,
                     reset_rng, aug_rng, episodes, successes,
                     episode_return, episode_len, cur_vec, cur_frame, cur_k):
    env_state = environment.get_state()
    meta = {
        "version": CKPT_VERSION,
        "step": step,
        "config": config.to_dict(),
        "episodes": episodes,
        "successes": successes,
        "episode_return": episode_return,
        "episode_len": episode_len,
        "cur_k": int(cur_k),
        "env_state": _jsonable(env_state),
        "reset_rng": reset_rng.bit_generator.state,
        "aug_rng": aug_rng.bit_generator.state,
        "agent_rng": agent.rng_state(),
    }
    arrays = {"meta": np.array(json.dumps(meta))}
    arrays["cur_vec"] = np.asarray(cur_vec, dtype=np.float32)
    arrays["cur_frame"] = (
        np.frombuffer(cur_frame, dtype=np.uint8)
        if cur_frame is not None
        else np.zeros(0, dtype=np.uint8)
    )
    for k, v in agent.state_dict().items():
        arrays[f"agent|{k}"] = v
    for k, v in buffers.demo.state_dict().items():
        arrays[f"demo|{k}"] = np.asarray(v)
    for k, v in buffers.online.state_dict().items():
        arrays[f"online|{k}"] = np.asarray(v)
    np.savez(path, **arrays)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return {"__array__": obj.tolist()}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _unjsonable(obj):
    if isinstance(obj, dict):
        if "__array__" in obj and len(obj) == 1:
            return np.array(obj["__array__"])
        return {k: _unjsonable(v) for k, v in obj.items()}
    return obj


def _load_checkpoint(path):
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta["version"] != CKPT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta['version']}")
        out = {
            "config": meta["config"],
            "step": meta["step"],
            "episodes": meta["episodes"],
            "successes": meta["successes"],
            "episode_return": meta["episode_return"],
            "episode_len": meta["episode_len"],
            "cur_k": meta["cur_k"],
            "env_state": _unjsonable(meta["env_state"]),
            "reset_rng": meta["reset_rng"],
            "aug_rng": meta["aug_rng"],
            "agent_rng": meta["agent_rng"],
            "cur_vec": np.array(data["cur_vec"]),
        }
        raw = np.array(data["cur_frame"])
        out["cur_frame"] = raw.tobytes() if raw.size else None
        out["agent"] = {
            k[len("agent|"):]: np.array(v)
            for k, v in data.items() if k.startswith("agent|")
        }
        out["demo_buffer"] = {
            k[len("demo|"):]: np.array(v)
            for k, v in data.items() if k.startswith("demo|")
        }
        out["online_buffer"] = {
            k[len("online|"):]: np.array(v)
            for k, v in data.items() if k.startswith("online|")
        }
    return out


def save_policy(path, policy):
    """Versioned map name -> array; kind picks the loader."""
    if isinstance(policy, SacAgent):
        meta = {"version": 1, "kind": "sac", "config": policy.cfg.to_dict()}
        arrays = {f"p|{k}": v for k, v in policy.params.items()}
    else:  # BcPolicy
        meta = {"version": 1, "kind": "bc", "obs_dim": policy.actor.net.layers[0].in_dim}
        arrays = {f"p|{k}": v for k, v in policy.params.items()}
    arrays["meta"] = np.array(json.dumps(meta))
    np.savez(path, **arrays)


def load_policy(path):
    """Returns (policy object with .act(vec, frame, deterministic), meta)."""
    from .bc import BcPolicy

    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"policy checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        params = {k[2:]: np.array(v) for k, v in data.items() if k.startswith("p|")}
    if meta["kind"] == "sac":
        config = TrainerConfig.from_dict(meta["config"])
        agent = SacAgent(config, seed=0)
        agent.params = params
        return agent, meta
    policy = BcPolicy(obs_dim=meta["obs_dim"])
    policy.params = params
    return policy, meta
