"""Closed-loop rollouts with full per-step recording and CSV export."""
import csv
from dataclasses import dataclass

import numpy as np

from .dynamics import DT
from .env import LocomotionEnv
from .so3 import euler_angles

LEGS = ("FL", "FR", "RL", "RR")


def trajectory_columns():
    cols = ["t", "p_x", "p_y", "p_z", "v_x", "v_y", "v_z", "roll", "pitch", "yaw",
            "w_x", "w_y", "w_z"]
    cols += [f"foot_{leg}_{a}" for leg in LEGS for a in "xyz"]
    cols += [f"f_{leg}_{a}" for leg in LEGS for a in "xyz"]
    cols += [f"a_d_{k}" for k in range(6)]
    cols += [f"a_{k}" for k in range(6)]
    return cols + ["reward", "done"]


@dataclass
class Trajectory:
    """Arrays with leading axes ``(steps, runs)``; state is recorded after each step."""
    p: np.ndarray
    pdot: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    feet: np.ndarray
    forces: np.ndarray
    a_d: np.ndarray
    achieved: np.ndarray
    reward: np.ndarray
    done: np.ndarray
    live: np.ndarray
    terminated: np.ndarray
    qp_status: np.ndarray

    @property
    def steps(self):
        return self.reward.shape[0]

    @property
    def runs(self):
        return self.reward.shape[1]

    def run(self, k):
        return {name: np.asarray(getattr(self, name))[:, k] for name in self.__dataclass_fields__}

    def rows(self, k):
        d = self.run(k)
        T = self.steps
        t = (np.arange(T) + 1) * DT
        return np.column_stack([
            t, d["p"], d["pdot"], d["theta"], d["omega"], d["feet"].reshape(T, 12),
            d["forces"].reshape(T, 12), d["a_d"], d["achieved"], d["reward"], d["done"].astype(float),
        ])

    def write_csv(self, path, k=0):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(trajectory_columns())
            for row in self.rows(k):
                w.writerow([repr(float(v)) for v in row])


def read_csv(path):
    """Load a trajectory CSV into a dict of column arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    return {name: body[:, j] for j, name in enumerate(header)}


def run_episodes(controller, task, steps=1000, runs=10, seed=0, env_ids=None):
    """Run ``runs`` episodes in one batch without auto-reset.

    Finished runs stay frozen and earn zero reward for the rest of the
    horizon. Returns ``(trajectory, env)``.
    """
    if hasattr(controller, "check_task"):
        controller.check_task(task)
    env = LocomotionEnv(task, runs, seed=seed, env_ids=env_ids)
    obs = env.reset()
    rec = {k: [] for k in Trajectory.__dataclass_fields__}
    for _ in range(steps):
        feet = env.feet.copy()
        a_d = controller.desired_accel(env, obs)
        obs, rew, done, info = env.step_accel(a_d)
        live = info["live"]
        rec["p"].append(env.state.p.copy())
        rec["pdot"].append(env.state.pdot.copy())
        theta = np.zeros((runs, 3))
        ok = np.all(np.isfinite(env.state.R), axis=(1, 2))
        theta[ok] = euler_angles(env.state.R[ok])
        rec["theta"].append(theta)
        rec["omega"].append(env.state.omega.copy())
        rec["feet"].append(feet)
        rec["forces"].append(info["forces"])
        rec["a_d"].append(np.where(live[:, None], a_d, 0.0))
        rec["achieved"].append(info["achieved"])
        rec["reward"].append(rew)
        rec["done"].append(done)
        rec["live"].append(live)
        rec["terminated"].append(info["terminated"])
        rec["qp_status"].append(info["qp_status"])
    traj = Trajectory(**{k: np.stack(v) for k, v in rec.items()})
    return traj, env
