"""Gaussian actor-critic MLP with hand-written backpropagation.

Actor: ``obs -> 128 -> 128 -> act`` with ReLU hidden layers and a tanh mean.
Critic: ``obs -> 128 -> 128 -> 1`` (separate trunk). The action standard
deviation is a state-independent vector ``exp(log_std)``.

Optional observation normalization (fixed shift and scale, updated by the
trainer between iterations) is applied before both trunks.

Checkpoints are ``.npz`` archives holding every parameter array under its
name plus a JSON ``meta`` string (format version, layer shapes, task info).
"""
import json
from dataclasses import dataclass

import numpy as np

CHECKPOINT_VERSION = 1
LOG_STD_BOUNDS = (-4.0, 1.0)
LOG_2PI = np.log(2.0 * np.pi)
OBS_CLIP = 10.0


def _orthogonal(rng, shape, gain):
    a = rng.standard_normal(shape)
    u, _, vt = np.linalg.svd(a, full_matrices=False)
    q = u if u.shape == shape else vt
    return gain * q


def param_names(depth=3):
    names = []
    for head in ("actor", "critic"):
        for k in range(depth):
            names += [f"{head}.{k}.W", f"{head}.{k}.b"]
    return names + ["log_std"]


@dataclass
class ForwardCache:
    obs: np.ndarray
    actor: list  # post-activation outputs of each actor layer
    critic: list
    mean: np.ndarray
    value: np.ndarray


class MlpPolicy:
    """Parameter container plus forward, sampling and gradient routines."""

    def __init__(self, obs_dim, act_dim=6, hidden=(128, 128), seed=0, log_std_init=-1.0,
                 actor_out_gain=0.01, params=None):
        self.obs_dim = int(obs_dim)
        self.act_dim = int(act_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.obs_mean = self.obs_std = None
        if params is not None:
            self.params = {k: np.array(v, float) for k, v in params.items()}
            self._check_shapes()
            return
        rng = np.random.default_rng(seed)
        gain = np.sqrt(2.0)
        self.params = {}
        for head, out_dim, out_gain in (("actor", self.act_dim, actor_out_gain),
                                        ("critic", 1, 1.0)):
            sizes = (self.obs_dim,) + self.hidden + (out_dim,)
            last = len(sizes) - 2
            for k in range(len(sizes) - 1):
                g = out_gain if k == last else gain
                self.params[f"{head}.{k}.W"] = _orthogonal(rng, (sizes[k], sizes[k + 1]), g)
                self.params[f"{head}.{k}.b"] = np.zeros(sizes[k + 1])
        self.params["log_std"] = np.full(self.act_dim, float(log_std_init))
        self.clamp_log_std()

    # -- bookkeeping ----------------------------------------------------

    @property
    def depth(self):
        return len(self.hidden) + 1

    def shapes(self):
        return {k: list(v.shape) for k, v in self.params.items()}

    def _check_shapes(self):
        expected = set(param_names(self.depth))
        if set(self.params) != expected:
            raise ValueError(f"parameter names differ from {sorted(expected)}")
        for head, out_dim in (("actor", self.act_dim), ("critic", 1)):
            sizes = (self.obs_dim,) + self.hidden + (out_dim,)
            for k in range(self.depth):
                if self.params[f"{head}.{k}.W"].shape != (sizes[k], sizes[k + 1]):
                    raise ValueError(f"{head}.{k}.W has shape {self.params[f'{head}.{k}.W'].shape}")
        if self.params["log_std"].shape != (self.act_dim,):
            raise ValueError("log_std has the wrong length")

    def clamp_log_std(self):
        np.clip(self.params["log_std"], *LOG_STD_BOUNDS, out=self.params["log_std"])

    def copy(self):
        pol = MlpPolicy(self.obs_dim, self.act_dim, self.hidden, params=self.params)
        if self.obs_mean is not None:
            pol.set_obs_stats(self.obs_mean, self.obs_std)
        return pol

    def set_obs_stats(self, mean, std):
        mean = np.array(mean, float)
        std = np.array(std, float)
        if mean.shape != (self.obs_dim,) or std.shape != (self.obs_dim,) or np.any(std <= 0):
            raise ValueError("observation statistics need obs_dim entries and positive std")
        self.obs_mean, self.obs_std = mean, std

    def normalize(self, obs):
        if self.obs_mean is None:
            return obs
        return np.clip((obs - self.obs_mean) / self.obs_std, -OBS_CLIP, OBS_CLIP)

    def flat(self):
        return np.concatenate([self.params[k].ravel() for k in param_names(self.depth)])

    # -- forward --------------------------------------------------------

    def _trunk(self, head, x):
        outs = []
        for k in range(self.depth):
            x = x @ self.params[f"{head}.{k}.W"] + self.params[f"{head}.{k}.b"]
            if k < self.depth - 1:
                x = np.maximum(x, 0.0)
            outs.append(x)
        return outs

    def forward(self, obs, cache=False):
        """Return ``(mean, value)`` for ``obs`` of shape ``(..., obs_dim)``."""
        obs = np.asarray(obs, float)
        if obs.shape[-1] != self.obs_dim:
            raise ValueError(f"observation has {obs.shape[-1]} entries, policy expects {self.obs_dim}")
        obs = self.normalize(obs)
        a = self._trunk("actor", obs)
        c = self._trunk("critic", obs)
        mean = np.tanh(a[-1])
        a[-1] = mean
        value = c[-1][..., 0]
        if cache:
            return mean, value, ForwardCache(obs, a, c, mean, value)
        return mean, value

    @property
    def std(self):
        return np.exp(self.params["log_std"])

    def log_prob(self, actions, mean):
        log_std = self.params["log_std"]
        z = (actions - mean) / np.exp(log_std)
        return -0.5 * np.sum(z * z, axis=-1) - np.sum(log_std) - 0.5 * self.act_dim * LOG_2PI

    def entropy(self):
        return float(np.sum(self.params["log_std"]) + 0.5 * self.act_dim * (1.0 + LOG_2PI))

    def sample(self, obs, rng):
        """Draw actions; returns ``(actions, log_prob, value)``."""
        mean, value = self.forward(obs)
        eps = rng.standard_normal(mean.shape)
        actions = mean + self.std * eps
        return actions, self.log_prob(actions, mean), value

    def act(self, obs):
        return self.forward(obs)[0]

    # -- gradients ------------------------------------------------------

    def _trunk_backward(self, head, obs, outs, g_out, grads):
        g = g_out
        for k in reversed(range(self.depth)):
            x_in = obs if k == 0 else outs[k - 1]
            grads[f"{head}.{k}.W"] = x_in.T @ g
            grads[f"{head}.{k}.b"] = g.sum(axis=0)
            if k > 0:
                g = (g @ self.params[f"{head}.{k}.W"].T) * (outs[k - 1] > 0)

    def backward(self, cache, g_mean, g_value, g_log_std=None):
        """Gradients of a scalar loss given its partials w.r.t. the outputs.

        ``g_mean`` is ``(B, act_dim)``, ``g_value`` is ``(B,)``; ``g_log_std``
        is the direct partial w.r.t. ``log_std``.
        """
        grads = {}
        obs = cache.obs.reshape(-1, self.obs_dim)
        a = [o.reshape(-1, o.shape[-1]) for o in cache.actor]
        c = [o.reshape(-1, o.shape[-1]) for o in cache.critic]
        g_pre = np.reshape(g_mean, a[-1].shape) * (1.0 - a[-1] ** 2)
        self._trunk_backward("actor", obs, a, g_pre, grads)
        self._trunk_backward("critic", obs, c, np.reshape(g_value, (-1, 1)), grads)
        grads["log_std"] = (np.zeros(self.act_dim) if g_log_std is None
                            else np.asarray(g_log_std, float).copy())
        return grads

    def log_prob_grads(self, actions, mean):
        """Partials of ``log_prob`` w.r.t. ``mean`` (per row) and ``log_std`` (per row)."""
        inv_var = np.exp(-2.0 * self.params["log_std"])
        diff = actions - mean
        d_mean = diff * inv_var
        d_log_std = diff * diff * inv_var - 1.0
        return d_mean, d_log_std

    # -- serialization --------------------------------------------------

    def meta(self, **extra):
        return {"format": "centroidal_rl.policy", "version": CHECKPOINT_VERSION,
                "obs_dim": self.obs_dim, "act_dim": self.act_dim, "hidden": list(self.hidden),
                "shapes": self.shapes(), "obs_norm": self.obs_mean is not None, **extra}

    def save(self, path, arrays=None, **extra):
        """Write the parameters (plus optional extra arrays, e.g. optimizer moments)."""
        payload = {f"param/{k}": v for k, v in self.params.items()}
        if self.obs_mean is not None:
            payload["norm/mean"] = self.obs_mean
            payload["norm/std"] = self.obs_std
        for k, v in (arrays or {}).items():
            payload[f"extra/{k}"] = np.asarray(v)
        payload["meta"] = np.array(json.dumps(self.meta(**extra)))
        with open(path, "wb") as fh:
            np.savez(fh, **payload)

    @classmethod
    def load(cls, path, with_extra=False):
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            if meta.get("format") != "centroidal_rl.policy":
                raise ValueError(f"{path} is not a policy checkpoint")
            if meta["version"] > CHECKPOINT_VERSION:
                raise ValueError(f"checkpoint version {meta['version']} is newer than supported")
            params = {k[6:]: data[k] for k in data.files if k.startswith("param/")}
            extra = {k[6:]: data[k] for k in data.files if k.startswith("extra/")}
            norm = (data["norm/mean"], data["norm/std"]) if "norm/mean" in data.files else None
        pol = cls(meta["obs_dim"], meta["act_dim"], meta["hidden"], params=params)
        if norm is not None:
            pol.set_obs_stats(*norm)
        pol.checkpoint_meta = meta
        if with_extra:
            return pol, extra
        return pol
