"""Proximal policy optimization over the vectorized locomotion environment."""
import csv
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .controllers import PolicyController
from .env import LocomotionEnv
from .metrics import normalized_reward
from .policy import MlpPolicy
from .rollout import run_episodes

log = logging.getLogger(__name__)

CURVE_COLUMNS = ["iteration", "steps", "reward_mean", "reward_min", "reward_max",
                 "eval_normalized_reward", "policy_loss", "value_loss", "entropy",
                 "approx_kl", "clip_fraction"]


@dataclass(frozen=True)
class PpoConfig:
    num_envs: int = 256
    horizon: int = 64
    clip: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    lr: float = 3e-4
    epochs: int = 4
    minibatch: int = 4096
    vf_coef: float = 0.5
    ent_coef: float = 0.0
    max_grad_norm: float = 0.5
    iterations: int = 500
    seed: int = 0
    eval_every: int = 10
    eval_runs: int = 8
    log_std_init: float = -1.0
    normalize_obs: bool = False

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0 <= self.lam <= 1:
            raise ValueError("lam must lie in [0, 1]")
        if not 0 < self.clip < 1:
            raise ValueError("clip must lie in (0, 1)")
        for name in ("num_envs", "horizon", "epochs", "minibatch", "eval_every", "eval_runs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.iterations < 0 or self.lr < 0:
            raise ValueError("iterations and lr must be non-negative")


@dataclass
class RolloutBuffer:
    obs: np.ndarray  # (T, N, obs_dim)
    actions: np.ndarray  # (T, N, act_dim)
    log_probs: np.ndarray  # (T, N)
    rewards: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    bootstrap: np.ndarray  # value of the final observation where an episode was truncated
    last_value: np.ndarray  # (N,)
    advantages: np.ndarray = None
    returns: np.ndarray = None

    @property
    def size(self):
        return self.rewards.size

    def flat(self):
        T, N = self.rewards.shape
        return {
            "obs": self.obs.reshape(T * N, -1), "actions": self.actions.reshape(T * N, -1),
            "log_probs": self.log_probs.ravel(), "advantages": self.advantages.ravel(),
            "returns": self.returns.ravel(), "values": self.values.ravel(),
        }


class Adam:
    def __init__(self, params, lr=3e-4, betas=(0.9, 0.999), eps=1e-8):
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for k, g in grads.items():
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * g
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)

    def state_arrays(self):
        out = {"adam.t": np.array(self.t)}
        for k in self.m:
            out[f"adam.m.{k}"] = self.m[k]
            out[f"adam.v.{k}"] = self.v[k]
        return out

    def load_arrays(self, arrays):
        self.t = int(arrays["adam.t"])
        for k in self.m:
            self.m[k] = np.array(arrays[f"adam.m.{k}"], float)
            self.v[k] = np.array(arrays[f"adam.v.{k}"], float)


class RunningMoments:
    """Mean and variance over every observation seen so far (batched merge)."""

    def __init__(self, dim):
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def update(self, x):
        x = np.asarray(x, float).reshape(-1, self.mean.size)
        n = x.shape[0]
        if n == 0:
            return
        b_mean = x.mean(axis=0)
        b_m2 = ((x - b_mean) ** 2).sum(axis=0)
        total = self.count + n
        delta = b_mean - self.mean
        self.mean = self.mean + delta * n / total
        self.m2 = self.m2 + b_m2 + delta ** 2 * self.count * n / total
        self.count = total

    @property
    def var(self):
        return self.m2 / max(self.count, 1)

    def std(self, floor=1e-2):
        return np.maximum(np.sqrt(self.var), floor)


def collect(policy, env, horizon, rng, obs):
    """Step ``env`` (auto-resetting) for ``horizon`` ticks with sampled actions.

    Returns the buffer and the observation to continue from.
    """
    N = env.num_envs
    keys = ("obs", "actions", "log_probs", "rewards", "values", "dones", "bootstrap")
    rec = {k: [] for k in keys}
    for _ in range(horizon):
        actions, logp, value = policy.sample(obs, rng)
        next_obs, rew, done, info = env.step(actions)
        boot = np.zeros(N)
        trunc = info["truncated"]
        if trunc.any():
            boot[trunc] = policy.forward(info["final_obs"][trunc])[1]
        for k, v in zip(keys, (obs, actions, logp, rew, value, done.astype(float), boot)):
            rec[k].append(v)
        obs = next_obs
    last_value = policy.forward(obs)[1]
    buf = RolloutBuffer(**{k: np.stack(v) for k, v in rec.items()}, last_value=last_value)
    return buf, obs


def compute_gae(rewards, values, dones, last_value, gamma, lam, bootstrap=None):
    """Generalized advantage estimates over ``(T, N)`` arrays.

    ``dones[t]`` marks that the episode ended with transition ``t``; the next
    value is then ``bootstrap[t]`` (zero for a true termination).
    """
    rewards = np.asarray(rewards, float)
    values = np.asarray(values, float)
    dones = np.asarray(dones, float)
    T = rewards.shape[0]
    if bootstrap is None:
        bootstrap = np.zeros_like(rewards)
    adv = np.zeros_like(rewards)
    next_adv = np.zeros_like(rewards[0])
    for t in reversed(range(T)):
        next_v = last_value if t == T - 1 else values[t + 1]
        next_v = np.where(dones[t] > 0, bootstrap[t], next_v)
        delta = rewards[t] + gamma * next_v - values[t]
        next_adv = delta + gamma * lam * (1.0 - dones[t]) * next_adv
        adv[t] = next_adv
    return adv, adv + values


def normalize_advantages(adv):
    adv = np.asarray(adv, float)
    return (adv - adv.mean()) / (adv.std() + 1e-12)


def ppo_loss_grads(policy, batch, cfg):
    """Clipped-surrogate loss pieces and parameter gradients for one minibatch."""
    mean, value, cache = policy.forward(batch["obs"], cache=True)
    logp = policy.log_prob(batch["actions"], mean)
    ratio = np.exp(logp - batch["log_probs"])
    adv = batch["advantages"]
    clipped = np.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip)
    surr = np.minimum(ratio * adv, clipped * adv)
    B = adv.size
    policy_loss = -float(surr.mean())
    err = value - batch["returns"]
    value_loss = 0.5 * float(np.mean(err * err))
    entropy = policy.entropy()
    # d(-surr)/d logp: the unclipped branch is the minimum (ties count as unclipped)
    active = ratio * adv <= clipped * adv
    g_logp = np.where(active, -adv * ratio, 0.0) / B
    d_mean, d_log_std = policy.log_prob_grads(batch["actions"], mean)
    g_mean = g_logp[:, None] * d_mean
    g_log_std = np.sum(g_logp[:, None] * d_log_std, axis=0) - cfg.ent_coef
    g_value = cfg.vf_coef * err / B
    grads = policy.backward(cache, g_mean, g_value, g_log_std)
    stats = {
        "policy_loss": policy_loss, "value_loss": value_loss, "entropy": entropy,
        "approx_kl": float(np.mean(batch["log_probs"] - logp)),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > cfg.clip)),
        "ratio": ratio,
    }
    return stats, grads


def _clip_by_norm(grads, names, max_norm):
    norm = np.sqrt(sum(float(np.sum(grads[k] ** 2)) for k in names))
    if max_norm > 0 and norm > max_norm:
        for k in names:
            grads[k] = grads[k] * (max_norm / norm)
    return norm


def update(policy, optimizer, buffer, cfg, rng):
    """Epochs of minibatch Adam steps on the clipped surrogate; returns mean stats."""
    data = buffer.flat()
    data["advantages"] = normalize_advantages(data["advantages"])
    n = data["obs"].shape[0]
    mb = min(cfg.minibatch, n)
    actor = [k for k in policy.params if not k.startswith("critic")]
    critic = [k for k in policy.params if k.startswith("critic")]
    totals = {}
    count = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n - mb + 1, mb):
            idx = order[start:start + mb]
            batch = {k: v[idx] for k, v in data.items()}
            stats, grads = ppo_loss_grads(policy, batch, cfg)
            if not np.all([np.all(np.isfinite(g)) for g in grads.values()]) or \
                    not np.isfinite(stats["policy_loss"] + stats["value_loss"]):
                raise FloatingPointError(f"non-finite loss or gradient: {stats['policy_loss']}, "
                                         f"{stats['value_loss']}")
            # actor and critic trunks are clipped separately so value targets of size
            # ~1/(1-gamma) do not shrink the policy step
            _clip_by_norm(grads, actor, cfg.max_grad_norm)
            _clip_by_norm(grads, critic, cfg.max_grad_norm)
            optimizer.step(policy.params, grads)
            policy.clamp_log_std()
            for k, v in stats.items():
                if k != "ratio":
                    totals[k] = totals.get(k, 0.0) + v
            count += 1
    return {k: v / max(count, 1) for k, v in totals.items()}


def evaluate(policy, task, runs=8, seed=10_000, steps=None):
    """Mean normalized reward of the deterministic policy over fresh episodes."""
    steps = task.episode_length if steps is None else steps
    traj, _ = run_episodes(PolicyController(policy), task, steps, runs, seed)
    return float(np.mean([normalized_reward(traj.reward[:, k], steps) for k in range(runs)]))


@dataclass
class TrainResult:
    policy: MlpPolicy
    curve: list
    best_reward: float
    best_iteration: int
    aborted: bool = False
    wall_time: float = 0.0
    paths: dict = field(default_factory=dict)


def _write_curve(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CURVE_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else repr(r[k]) if isinstance(r[k], float)
                            else r[k]) for k in CURVE_COLUMNS})


def train(task, cfg=PpoConfig(), out_dir=None, policy=None, callback=None):
    """Iterate collect, advantage estimation and update; log a learning curve.

    With ``out_dir`` the curve (``curve.csv``), the best and final checkpoints
    (``best.npz`` and ``final.npz``, including optimizer moments) and a
    ``summary.json`` are written there.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng([cfg.seed, 1])
    if policy is None:
        policy = MlpPolicy(task.obs_dim, seed=cfg.seed, log_std_init=cfg.log_std_init)
    opt = Adam(policy.params, lr=cfg.lr)
    env = LocomotionEnv(task, cfg.num_envs, seed=cfg.seed, auto_reset=True)
    obs = env.reset()
    moments = None
    if cfg.normalize_obs:
        # statistics stay fixed while an iteration collects and updates, so
        # stored log-probabilities match the policy at the first epoch
        moments = RunningMoments(task.obs_dim)
        moments.update(obs)
        policy.set_obs_stats(moments.mean, moments.std())
    meta = {"task": task.name, "ppo": asdict(cfg)}
    paths = {}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        paths = {k: os.path.join(out_dir, f) for k, f in
                 (("curve", "curve.csv"), ("best", "best.npz"), ("final", "final.npz"),
                  ("summary", "summary.json"))}
    curve = []
    best = (-np.inf, -1)
    good = policy.copy()
    aborted = False
    for it in range(cfg.iterations):
        buf, obs = collect(policy, env, cfg.horizon, rng, obs)
        buf.advantages, buf.returns = compute_gae(buf.rewards, buf.values, buf.dones,
                                                  buf.last_value, cfg.gamma, cfg.lam, buf.bootstrap)
        try:
            stats = update(policy, opt, buf, cfg, rng)
        except FloatingPointError as exc:
            log.error("iteration %d aborted: %s; keeping the last good parameters", it, exc)
            policy.params = good.params
            policy.obs_mean, policy.obs_std = good.obs_mean, good.obs_std
            aborted = True
            break
        if moments is not None:
            moments.update(buf.obs)
            policy.set_obs_stats(moments.mean, moments.std())
        good = policy.copy()
        per_env = buf.rewards.mean(axis=0)
        row = {"iteration": it, "steps": (it + 1) * cfg.num_envs * cfg.horizon,
               "reward_mean": float(per_env.mean()), "reward_min": float(per_env.min()),
               "reward_max": float(per_env.max()), "eval_normalized_reward": None, **stats}
        last = it == cfg.iterations - 1
        if (it + 1) % cfg.eval_every == 0 or last:
            score = evaluate(policy, task, cfg.eval_runs, seed=cfg.seed + 10_000)
            row["eval_normalized_reward"] = score
            if score > best[0]:
                best = (score, it)
                if paths:
                    policy.save(paths["best"], opt.state_arrays(), iteration=it, score=score, **meta)
        curve.append(row)
        log.info("iter %d reward %.3f eval %s kl %.4f", it, row["reward_mean"],
                 row["eval_normalized_reward"], stats["approx_kl"])
        if callback is not None:
            callback(it, row, policy)
        if paths:
            _write_curve(paths["curve"], curve)
    wall = time.perf_counter() - t0
    if paths:
        _write_curve(paths["curve"], curve)
        policy.save(paths["final"], opt.state_arrays(), iteration=len(curve) - 1, **meta)
        if best[1] < 0:
            policy.save(paths["best"], opt.state_arrays(), iteration=-1, **meta)
        with open(paths["summary"], "w") as fh:
            json.dump({"best_eval_normalized_reward": None if best[1] < 0 else best[0],
                       "best_iteration": best[1], "iterations": len(curve), "aborted": aborted,
                       "wall_time_s": wall, **meta}, fh, indent=2)
    return TrainResult(policy, curve, best[0], best[1], aborted, wall, paths)


def read_curve(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class PPOAgent(BaseEstimator):
    """Estimator-style wrapper: ``fit(task)`` trains, ``predict(obs)`` returns mean actions."""

    def __init__(self, num_envs=256, horizon=64, clip=0.2, gamma=0.99, lam=0.95, lr=3e-4,
                 epochs=4, minibatch=4096, iterations=500, seed=0):
        self.num_envs = num_envs
        self.horizon = horizon
        self.clip = clip
        self.gamma = gamma
        self.lam = lam
        self.lr = lr
        self.epochs = epochs
        self.minibatch = minibatch
        self.iterations = iterations
        self.seed = seed

    def config(self):
        return PpoConfig(**self.get_params())

    def fit(self, task, y=None, out_dir=None):
        result = train(task, self.config(), out_dir)
        self.policy_ = result.policy
        self.curve_ = result.curve
        return self

    def predict(self, obs):
        return self.policy_.act(np.asarray(obs, float))
