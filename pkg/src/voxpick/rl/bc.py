"""Behavioral cloning on the demonstration set.

Maximizes sum log pi(a|s) over demo state-action pairs with the same
tanh-Gaussian actor head the RL policies use, on the 27-dim proprioceptive
observation.
"""

from __future__ import annotations

import numpy as np

from ..nets import Actor, Adam
from ..nets.policy import (
    tanh_gaussian_logprob_of,
    tanh_gaussian_logprob_of_backward,
    tanh_gaussian_mode,
)


class BcPolicy:
    def __init__(self, obs_dim=27, act_dim=7, hidden=(256, 256), seed=0, lr=1e-3):
        self.actor = Actor(obs_dim, act_dim, hidden=hidden, name="bc")
        self.params = self.actor.init(np.random.default_rng(seed), np.float32)
        self.opt = Adam(lr=lr)

    def loss_and_update(self, obs, act):
        mean, log_std, cache = self.actor.forward(self.params, obs)
        logp, lcache = tanh_gaussian_logprob_of(mean, log_std, act)
        loss = -float(logp.mean())
        g = np.full(len(obs), -1.0 / len(obs), dtype=np.float32)
        g_mean, g_lstd = tanh_gaussian_logprob_of_backward(lcache, g)
        grads, _ = self.actor.backward(self.params, cache, g_mean, g_lstd)
        self.opt.step(self.params, grads)
        return loss

    def log_likelihood(self, obs, act):
        mean, log_std, _ = self.actor.forward(self.params, obs)
        logp, _ = tanh_gaussian_logprob_of(mean, log_std, act)
        return float(logp.mean())

    def act(self, obs_vec, frames=None, deterministic=True):
        mean, _, _ = self.actor.forward(self.params, np.asarray(obs_vec, np.float32)[None])
        return tanh_gaussian_mode(mean)[0]

    def state_dict(self):
        return {f"p:{k}": v for k, v in self.params.items()}

    def load_state_dict(self, state):
        self.params = {k[2:]: np.array(v) for k, v in state.items() if k.startswith("p:")}


def demo_pairs(demos):
    """Flatten demo episodes into (obs, action) training arrays."""
    obs = []
    act = []
    for ep in demos:
        for step in ep.steps:
            obs.append(step.obs_vec)
            act.append(step.action)
    return np.asarray(obs, dtype=np.float32), np.asarray(act, dtype=np.float32)


def bc_fit(demos, epochs=200, batch_size=256, seed=0, lr=1e-3, hidden=(256, 256)):
    """Fit a BC policy to demo episodes; returns (policy, loss history)."""
    if not demos:
        raise ValueError("behavioral cloning needs at least one demonstration")
    obs, act = demo_pairs(demos)
    policy = BcPolicy(obs_dim=obs.shape[1], seed=seed, lr=lr, hidden=hidden)
    rng = np.random.default_rng(seed + 1)
    losses = []
    n = len(obs)
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, batch_size):
            idx = order[lo : lo + batch_size]
            epoch_loss += policy.loss_and_update(obs[idx], act[idx]) * len(idx)
        losses.append(epoch_loss / n)
    return policy, losses
