"""Controllers that map environment state to desired body accelerations.

Both expose the scikit-learn estimator interface (``get_params`` /
``set_params`` / ``predict``) so they compose with parameter search tools;
``predict`` maps a batch of observations to raw or physical actions.
"""
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .env import scale_action
from .so3 import euler_angles


@dataclass(frozen=True)
class PdGains:
    kp: tuple = (0.0, 0.0, 100.0, 50.0, 50.0, 10.0)
    kd: tuple = (10.0, 10.0, 10.0, 5.0, 5.0, 5.0)

    def __post_init__(self):
        kp = tuple(float(v) for v in self.kp)
        kd = tuple(float(v) for v in self.kd)
        if len(kp) != 6 or len(kd) != 6:
            raise ValueError("kp and kd need six entries")
        if min(kp + kd) < 0:
            raise ValueError("PD gains must be non-negative")
        object.__setattr__(self, "kp", kp)
        object.__setattr__(self, "kd", kd)


# tuned on flat ground, trot preset, 0.5 m/s, default foot planner (see README)
_TROT_GAINS = PdGains(kp=(0.0, 0.0, 115.0, 50.0, 75.0, 12.5), kd=(1.5, 20.0, 8.5, 3.5, 28.5, 6.5))
TUNED_GAINS = {"a1": _TROT_GAINS, "laikago": _TROT_GAINS}


def tuned_gains(robot_name):
    try:
        return TUNED_GAINS[robot_name]
    except KeyError:
        raise ValueError(f"no tuned gains for robot {robot_name!r}; known: {sorted(TUNED_GAINS)}") from None


def pd_accel(state, task, gains, height=None):
    """Desired acceleration from position/orientation errors and their rates.

    The forward position error is never tracked (only the forward velocity
    is), so the x entry of ``kp`` has no effect. ``height`` overrides
    ``p_z`` with the height above the terrain.
    """
    kp = np.asarray(gains.kp)
    kd = np.asarray(gains.kd)
    p = np.asarray(state.p, float)
    z = p[..., 2] if height is None else np.asarray(height, float)
    e_p = np.stack([np.zeros_like(z), -p[..., 1], task.p_z_desired - z], axis=-1)
    v_d = np.zeros_like(p)
    v_d[..., 0] = task.desired_velocity
    e_v = v_d - state.pdot
    theta = euler_angles(state.R)
    lin = kp[:3] * e_p + kd[:3] * e_v
    ang = kp[3:] * (-theta) + kd[3:] * (-np.asarray(state.omega, float))
    return np.concatenate([lin, ang], axis=-1)


class CentroidalPD(BaseEstimator):
    """PD baseline producing desired accelerations directly."""

    requires_state = True

    def __init__(self, kp=PdGains.kp, kd=PdGains.kd):
        self.kp = kp
        self.kd = kd

    @classmethod
    def for_robot(cls, name):
        g = tuned_gains(name)
        return cls(kp=g.kp, kd=g.kd)

    @property
    def gains(self):
        return PdGains(self.kp, self.kd)

    def fit(self, X=None, y=None):
        self.gains_ = self.gains
        return self

    def desired_accel(self, env, obs=None):
        return pd_accel(env.state, env.task, self.gains, env.body_height())

    def predict(self, env):
        return self.desired_accel(env)


class PolicyController(BaseEstimator):
    """Deterministic (mean-action) wrapper around a trained policy."""

    requires_state = False

    def __init__(self, policy=None):
        self.policy = policy

    def check_task(self, task):
        if self.policy.obs_dim != task.obs_dim:
            raise ValueError(f"policy expects {self.policy.obs_dim} observations, "
                             f"task {task.name!r} provides {task.obs_dim}")

    def predict(self, obs):
        obs = np.asarray(obs, float)
        if obs.ndim != 2:
            raise ValueError("observations must be a 2-D batch")
        return self.policy.act(obs)

    def desired_accel(self, env, obs):
        return scale_action(self.predict(obs), env.task)
