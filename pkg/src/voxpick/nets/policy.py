"""MLP trunks, tanh-Gaussian action head, and twin Q networks.

The tanh-Gaussian gradients are closed-form totals through the
reparametrized sample u = mean + std * eps (eps held fixed):

    d logpi / d mean    = 2 * tanh(u)                       per dim
    d logpi / d logstd  = -1 + 2 * tanh(u) * std * eps
    d a / d mean        = 1 - tanh(u)^2
    d a / d logstd      = (1 - tanh(u)^2) * std * eps

The Gaussian density term contributes nothing to the mean/logstd gradients
under reparametrization (direct and through-sample parts cancel); what
remains comes from the tanh change-of-variables correction, computed in the
overflow-safe form log(1 - tanh(u)^2) = 2*(log 2 - u - softplus(-2u)).
"""

from __future__ import annotations

import numpy as np

from .layers import Dense, LayerNorm, Relu, Sequential

LOG_STD_MIN = -10.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def softplus(x):
    return np.logaddexp(0.0, x)


def mlp(name, in_dim, hidden, out_dim, out_scale=1.0, layer_norm=True):
    """Dense stack with layer norm + relu on hidden layers."""
    layers = []
    d = in_dim
    for i, h in enumerate(hidden):
        layers.append(Dense(f"{name}/fc{i}", d, h))
        if layer_norm:
            layers.append(LayerNorm(f"{name}/ln{i}", h))
        layers.append(Relu())
        d = h
    layers.append(Dense(f"{name}/out", d, out_dim, w_scale=out_scale))
    return Sequential(layers)


def tanh_gaussian_sample(mean, log_std, rng):
    """Sample squashed-Gaussian actions; returns (action, log_prob, cache)."""
    clip_mask = (log_std > LOG_STD_MIN) & (log_std < LOG_STD_MAX)
    log_std = np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)
    std = np.exp(log_std)
    eps = rng.standard_normal(mean.shape).astype(mean.dtype)
    return _squash(mean, log_std, std, eps, clip_mask)


def tanh_gaussian_mode(mean):
    """Deterministic action (zero-noise limit)."""
    return np.tanh(mean)


def _squash(mean, log_std, std, eps, clip_mask):
    u = mean + std * eps
    a = np.tanh(u)
    # log N(u; mean, std) - sum log(1 - tanh(u)^2)
    log_n = -log_std - _HALF_LOG_2PI - 0.5 * eps * eps
    log_det = 2.0 * (np.log(2.0) - u - softplus(-2.0 * u))
    log_prob = (log_n - log_det).sum(axis=-1)
    tiny = np.finfo(a.dtype).tiny
    a = np.clip(a, -1.0 + tiny, 1.0 - tiny)
    cache = (a, std, eps, clip_mask)
    return a, log_prob, cache


def tanh_gaussian_backward(cache, g_logp, g_action):
    """Backprop to (mean, log_std) from gradients on log_prob and action.

    g_logp: (B,) gradient on each sample's log_prob; g_action: (B, A) or None.
    log_std gradients are zeroed where the clamp was active.
    """
    a, std, eps, clip_mask = cache
    se = std * eps
    g_logp = g_logp[..., None]
    g_mean = g_logp * (2.0 * a)
    g_lstd = g_logp * (-1.0 + 2.0 * a * se)
    if g_action is not None:
        da_du = 1.0 - a * a
        g_mean = g_mean + g_action * da_du
        g_lstd = g_lstd + g_action * da_du * se
    return g_mean, g_lstd * clip_mask


def tanh_gaussian_logprob_of(mean, log_std, action):
    """log pi(action | mean, std) for given (already squashed) actions.

    Used by behavioral cloning. Actions are clipped slightly inside (-1, 1)
    before atanh. Returns (log_prob, cache).
    """
    clip_mask = (log_std > LOG_STD_MIN) & (log_std < LOG_STD_MAX)
    log_std = np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)
    a = np.clip(action, -1.0 + 1e-6, 1.0 - 1e-6)
    u = np.arctanh(a)
    std = np.exp(log_std)
    z = (u - mean) / std
    log_n = -log_std - _HALF_LOG_2PI - 0.5 * z * z
    log_det = 2.0 * (np.log(2.0) - u - softplus(-2.0 * u))
    log_prob = (log_n - log_det).sum(axis=-1)
    return log_prob, (z, std, clip_mask)


def tanh_gaussian_logprob_of_backward(cache, g_logp):
    """Gradients of logprob_of w.r.t. (mean, log_std); the action is fixed."""
    z, std, clip_mask = cache
    g = g_logp[..., None]
    g_mean = g * (z / std)
    g_lstd = g * (z * z - 1.0) * clip_mask
    return g_mean, g_lstd


class Actor:
    """Gaussian policy head over a feature vector; outputs (mean, log_std)."""

    def __init__(self, in_dim, act_dim=7, hidden=(256, 256), name="actor"):
        self.name = name
        self.act_dim = act_dim
        self.net = mlp(name, in_dim, hidden, 2 * act_dim, out_scale=0.01)
        # start exploration around std ~ 0.6
        self.log_std_init = -0.5

    def init(self, rng, dtype=np.float32):
        return self.net.init(rng, dtype)

    def forward(self, params, feats):
        out, cache = self.net.forward(params, feats)
        mean = out[:, : self.act_dim]
        log_std = out[:, self.act_dim :] + self.log_std_init
        return mean, log_std, cache

    def backward(self, params, cache, g_mean, g_lstd):
        gy = np.concatenate([g_mean, g_lstd], axis=-1)
        return self.net.backward(params, cache, gy)


class Critic:
    """Q(features, action) scalar head."""

    def __init__(self, in_dim, act_dim=7, hidden=(256, 256), name="q"):
        self.name = name
        self.in_dim = in_dim
        self.act_dim = act_dim
        self.net = mlp(name, in_dim + act_dim, hidden, 1)

    def init(self, rng, dtype=np.float32):
        return self.net.init(rng, dtype)

    def forward(self, params, feats, action):
        x = np.concatenate([feats, action], axis=-1)
        q, cache = self.net.forward(params, x)
        return q[:, 0], cache

    def backward(self, params, cache, gq):
        """Returns (grads, g_feats, g_action)."""
        grads, gx = self.net.backward(params, cache, gq[:, None])
        return grads, gx[:, : self.in_dim], gx[:, self.in_dim :]
