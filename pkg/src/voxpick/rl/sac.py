"""Soft actor-critic with the usual demo-bootstrapped modifications:
high update-to-data ratio, symmetric demo/online sampling (in replay),
layer-norm on the dense trunks, and twin critics with soft targets.

One encoder is shared by the actor and both critics; only critic updates
train it (actor updates treat its features as constants). Target copies of
the critics and the encoder compute the TD target

    y = r + gamma * (1 - done) * (min(Q1', Q2') - alpha * log pi(a'|s')).

The temperature alpha is tuned toward a target entropy of -dim(A) = -7.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from ..nets import Actor, Adam, Critic, Encoder, EncoderSpec
from ..nets.policy import (
    tanh_gaussian_backward,
    tanh_gaussian_mode,
    tanh_gaussian_sample,
)

ACT_DIM = 7
MODALITIES = ("proprio", "depth", "voxel", "voxel_only")


@dataclass
class TrainerConfig:
    modality: str = "proprio"
    gamma: float = 0.98
    utd_ratio: int = 4
    batch_size: int = 256
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    temp_lr: float = 3e-4
    target_tau: float = 0.005
    augmentation: bool = True
    symmetry: bool = False
    # artifact plumbing beyond the core algorithm knobs
    total_steps: int = 5000
    hidden: tuple = (256, 256)
    alpha_init: float = 0.1
    encoder: dict | None = None  # EncoderSpec override, dict form
    online_capacity: int = 100_000
    checkpoint_every: int = 0  # 0: only final
    log_every: int = 1

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"modality must be one of {MODALITIES}")
        for name in ("gamma", "utd_ratio", "batch_size", "actor_lr", "critic_lr",
                     "temp_lr", "target_tau", "total_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def obs_dim(self) -> int:
        return 2 if self.modality == "voxel_only" else 27

    @property
    def proprio_mode(self) -> str:
        return "gripper_only" if self.modality == "voxel_only" else "full"

    def encoder_spec(self):
        if self.modality == "proprio":
            return None
        if self.encoder is not None:
            return EncoderSpec.from_dict(self.encoder)
        if self.modality == "depth":
            return EncoderSpec.default_depth(in_channels=2)
        return EncoderSpec.default_voxel()

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @staticmethod
    def from_dict(d):
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(d["hidden"])
        return TrainerConfig(**d)


def _copy_params(params):
    return {k: v.copy() for k, v in params.items()}


class SacAgent:
    def __init__(self, config: TrainerConfig, seed=0, dtype=np.float32):
        self.cfg = config
        self.dtype = dtype
        self.target_entropy = -float(ACT_DIM)

        ss = np.random.SeedSequence(seed)
        init_rng, self.sample_rng = [np.random.default_rng(s) for s in ss.spawn(2)]

        spec = config.encoder_spec()
        self.encoder = Encoder(spec) if spec is not None else None
        feat_dim = self.encoder.feature_dim if self.encoder else 0
        in_dim = config.obs_dim + feat_dim

        self.actor = Actor(in_dim, ACT_DIM, hidden=config.hidden)
        self.q1 = Critic(in_dim, ACT_DIM, hidden=config.hidden, name="q1")
        self.q2 = Critic(in_dim, ACT_DIM, hidden=config.hidden, name="q2")

        self.params = {}
        if self.encoder:
            self.params.update(self.encoder.init(init_rng, dtype))
        self.params.update(self.actor.init(init_rng, dtype))
        self.params.update(self.q1.init(init_rng, dtype))
        self.params.update(self.q2.init(init_rng, dtype))

        self.target_params = _copy_params(
            {k: v for k, v in self.params.items() if not k.startswith("actor")}
        )
        self.log_alpha = float(np.log(config.alpha_init))

        self.actor_opt = Adam(lr=config.actor_lr)
        self.critic_opt = Adam(lr=config.critic_lr)
        self.alpha_opt = Adam(lr=config.temp_lr)
        self._alpha_param = {"log_alpha": np.array([self.log_alpha], dtype=np.float64)}
        self._actor_obs = None

    @property
    def alpha(self) -> float:
        return float(np.exp(self._alpha_param["log_alpha"][0]))

    # -- acting --------------------------------------------------------------

    def _features(self, obs_vec, frames, params=None):
        params = params or self.params
        obs_vec = np.asarray(obs_vec, dtype=self.dtype)
        if obs_vec.ndim == 1:
            obs_vec = obs_vec[None]
        if self.encoder is None:
            return obs_vec, None
        x = np.asarray(frames, dtype=self.dtype)
        if x.ndim == len(self.encoder.expected_input()):
            x = x[None]
        feats, cache = self.encoder.forward(params, x)
        return np.concatenate([obs_vec, feats.astype(self.dtype)], axis=1), cache

    def act(self, obs_vec, frames=None, deterministic=False):
        x, _ = self._features(obs_vec, frames)
        mean, log_std, _ = self.actor.forward(self.params, x)
        if deterministic:
            return tanh_gaussian_mode(mean)[0]
        a, _, _ = tanh_gaussian_sample(mean, log_std, self.sample_rng)
        return a[0]

    # -- updates ---------------------------------------------------------------

    def critic_update(self, batch):
        cfg = self.cfg
        b = len(batch["reward"])

        x_next, _ = self._features(
            batch["next_obs_vec"], batch["next_frames"], params={
                **self.params, **self.target_params,
            } if self.encoder else None,
        )
        mean, log_std, _ = self.actor.forward(self.params, x_next)
        a_next, logp_next, _ = tanh_gaussian_sample(mean, log_std, self.sample_rng)
        q1_t, _ = self.q1.forward(self.target_params, x_next, a_next)
        q2_t, _ = self.q2.forward(self.target_params, x_next, a_next)
        y = batch["reward"] + cfg.gamma * (1.0 - batch["done"]) * (
            np.minimum(q1_t, q2_t) - self.alpha * logp_next
        )

        if self.encoder is not None:
            x = np.asarray(batch["frames"], dtype=self.dtype)
            feats, enc_cache = self.encoder.forward(self.params, x)
            obs = np.concatenate(
                [np.asarray(batch["obs_vec"], dtype=self.dtype), feats], axis=1
            )
            # the actor update treats features as constants; reuse these
            self._actor_obs = obs
        else:
            obs = np.asarray(batch["obs_vec"], dtype=self.dtype)
            enc_cache = None

        q1, c1 = self.q1.forward(self.params, obs, batch["action"])
        q2, c2 = self.q2.forward(self.params, obs, batch["action"])
        d1 = q1 - y
        d2 = q2 - y
        loss = float((d1 * d1 + d2 * d2).mean())

        g1 = (2.0 / b) * d1.astype(self.dtype)
        g2 = (2.0 / b) * d2.astype(self.dtype)
        grads1, gobs1, _ = self.q1.backward(self.params, c1, g1)
        grads2, gobs2, _ = self.q2.backward(self.params, c2, g2)
        grads = {**grads1, **grads2}
        if self.encoder is not None:
            gfeat = (gobs1 + gobs2)[:, self.cfg.obs_dim :]
            enc_grads, _ = self.encoder.backward(self.params, enc_cache, gfeat)
            grads.update(enc_grads)
        self.critic_opt.step(self.params, grads)
        self._soft_update()
        return loss

    def _soft_update(self):
        tau = self.cfg.target_tau
        for k, tgt in self.target_params.items():
            tgt += tau * (self.params[k] - tgt)

    def actor_update(self, batch):
        """Policy and temperature step; encoder features are constants here.

        When the same batch just went through critic_update, the features
        computed there are reused (one optimizer step stale, standard
        shared-encoder practice; saves a full encoder pass).
        """
        cfg = self.cfg
        b = len(batch["reward"])
        reuse = getattr(self, "_actor_obs", None)
        if self.encoder is not None and reuse is not None and len(reuse) == b:
            obs = reuse
            self._actor_obs = None
        else:
            obs, _ = self._features(batch["obs_vec"], batch["frames"])

        mean, log_std, actor_cache = self.actor.forward(self.params, obs)
        a, logp, sample_cache = tanh_gaussian_sample(mean, log_std, self.sample_rng)
        q1, c1 = self.q1.forward(self.params, obs, a)
        q2, c2 = self.q2.forward(self.params, obs, a)
        q_min = np.minimum(q1, q2)
        loss = float((self.alpha * logp - q_min).mean())

        # d loss / d a through min(Q1, Q2); critic params stay fixed
        pick1 = (q1 <= q2).astype(self.dtype)
        gq = -(1.0 / b) * np.ones(b, dtype=self.dtype)
        _, _, ga1 = self.q1.backward(self.params, c1, gq * pick1)
        _, _, ga2 = self.q2.backward(self.params, c2, gq * (1.0 - pick1))
        ga = ga1 + ga2
        g_logp = (self.alpha / b) * np.ones(b, dtype=self.dtype)
        g_mean, g_lstd = tanh_gaussian_backward(sample_cache, g_logp, ga)
        actor_grads, _ = self.actor.backward(self.params, actor_cache, g_mean, g_lstd)
        self.actor_opt.step(self.params, actor_grads)

        # temperature toward target entropy
        g_alpha = -float((logp + self.target_entropy).mean())
        self.alpha_opt.step(self._alpha_param, {"log_alpha": np.array([g_alpha])})
        self.log_alpha = float(self._alpha_param["log_alpha"][0])
        return loss

    # -- persistence -----------------------------------------------------------

    def state_dict(self):
        state = {"log_alpha": np.array([self.log_alpha])}
        for k, v in self.params.items():
            state[f"p:{k}"] = v
        for k, v in self.target_params.items():
            state[f"t:{k}"] = v
        for k, v in self.actor_opt.state_dict().items():
            state[f"ao:{k}"] = v
        for k, v in self.critic_opt.state_dict().items():
            state[f"co:{k}"] = v
        for k, v in self.alpha_opt.state_dict().items():
            state[f"xo:{k}"] = v
        return state

    def load_state_dict(self, state):
        self.params = {k[2:]: np.array(v) for k, v in state.items() if k.startswith("p:")}
        self.target_params = {
            k[2:]: np.array(v) for k, v in state.items() if k.startswith("t:")
        }
        self.actor_opt.load_state_dict(
            {k[3:]: v for k, v in state.items() if k.startswith("ao:")}
        )
        self.critic_opt.load_state_dict(
            {k[3:]: v for k, v in state.items() if k.startswith("co:")}
        )
        self.alpha_opt.load_state_dict(
            {k[3:]: v for k, v in state.items() if k.startswith("xo:")}
        )
        self._alpha_param = {"log_alpha": np.array(state["log_alpha"], dtype=np.float64)}
        self.log_alpha = float(self._alpha_param["log_alpha"][0])

    def rng_state(self):
        return self.sample_rng.bit_generator.state

    def set_rng_state(self, state):
        self.sample_rng.bit_generator.state = state
