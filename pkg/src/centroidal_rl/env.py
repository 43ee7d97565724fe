"""Vectorized reinforcement-learning environment over the centroidal model.

One ``LocomotionEnv`` holds ``num_envs`` independent robots. Each step runs
action scaling, force transcription, rigid-body integration, phase
advance, foothold planning for legs entering swing, reward and
termination, all at 100 Hz.

Observation layout (version 1), 32 base entries::

    [0]      body height above the terrain under the COM
    [1:4]    linear velocity (world)
    [4:13]   rotation matrix, row-major
    [13:16]  angular velocity (body)
    [16:28]  foot positions relative to the COM, leg-major (world)
    [28:32]  normalized phases
    [32:]    p_y (balance beam) or p_x, p_y (two-leg balancing)
"""
from dataclasses import dataclass, field, replace

import numpy as np

from . import gait as gaits
from .dynamics import DT, CentroidalState, euler_step, net_wrench, wrench_accel
from .footplan import FootPlannerConfig, plan_touchdown_batch
from .grf import QpWeights, transcribe
from .so3 import euler_angles, from_euler
from .terrain import Flat

OBS_VERSION = 1
BASE_OBS_DIM = 32
EXTRA_OBS = {None: 0, "none": 0, "py": 1, "pxy": 2}


@dataclass
class TaskConfig:
    robot: object
    gait: object
    terrain: object = field(default_factory=Flat)  # Terrain, or callable(seed) -> Terrain
    name: str = "custom"
    desired_velocity: float = 0.5
    p_z_desired: float = None
    lin_bound: float = 15.0
    ang_bound: float = 30.0
    episode_length: int = 1000
    init_height: float = 0.02
    init_velocity: float = 0.05
    init_tilt: float = 0.05
    extra_obs: str = None
    planner: FootPlannerConfig = field(default_factory=FootPlannerConfig)
    weights: QpWeights = field(default_factory=QpWeights)
    sim_mass_offset: float = 0.0  # simulated mass minus the controller's model mass
    obs_scale: float = 1.0  # multiplies height and foot-position features
    max_tilt: float = 0.6
    height_bounds: tuple = (0.4, 1.6)

    def __post_init__(self):
        if self.p_z_desired is None:
            self.p_z_desired = self.robot.p_z_nominal
        if self.episode_length <= 0:
            raise ValueError("episode_length must be positive")
        if self.extra_obs not in EXTRA_OBS:
            raise ValueError(f"extra_obs must be one of {sorted(k for k in EXTRA_OBS if k)}")

    @property
    def obs_dim(self):
        return BASE_OBS_DIM + EXTRA_OBS[self.extra_obs]

    @property
    def action_bounds(self):
        return np.array([self.lin_bound] * 3 + [self.ang_bound] * 3)

    @property
    def sim_robot(self):
        if self.sim_mass_offset == 0.0:
            return self.robot
        return self.robot.with_mass(self.robot.mass + self.sim_mass_offset)

    def make_terrain(self, seed):
        if callable(self.terrain):
            return self.terrain(seed)
        return self.terrain

    def replace(self, **kw):
        return replace(self, **kw)


def scale_action(raw, task):
    """Map raw actions in ``[-1, 1]`` (clipped) to desired accelerations."""
    return np.clip(np.asarray(raw, float), -1.0, 1.0) * task.action_bounds


def reward(height, pdot, theta, task):
    """``0.5 r_p + 0.5 r_o`` from body height, velocity and Euler angles."""
    vx_err = pdot[..., 0] - task.desired_velocity
    z_err = height - task.p_z_desired
    r_p = np.exp(-10.0 * vx_err ** 2 - 50.0 * pdot[..., 1] ** 2 - 50.0 * z_err ** 2)
    r_o = np.exp(-10.0 * np.sum(theta ** 2, axis=-1))
    return 0.5 * r_p + 0.5 * r_o


class LocomotionEnv:
    """Batch of centroidal robots sharing one :class:`TaskConfig`.

    ``env_ids`` name the random stream of every slot; permuting them
    permutes the trajectories. With ``auto_reset`` finished slots start a
    new episode inside :meth:`step` (the information of the finished step is
    still reported); otherwise ``done`` is sticky and finished slots are
    frozen.
    """

    def __init__(self, task, num_envs=1, seed=0, env_ids=None, auto_reset=False):
        self.task = task
        self.num_envs = int(num_envs)
        self.seed = int(seed)
        self.env_ids = np.arange(self.num_envs) if env_ids is None else np.asarray(env_ids)
        if len(self.env_ids) != self.num_envs:
            raise ValueError("env_ids must name every environment")
        self.auto_reset = auto_reset
        self.model = task.robot
        self.sim = task.sim_robot
        self.episodes = np.zeros(self.num_envs, dtype=np.int64)
        self.terrains = [None] * self.num_envs
        self._allocated = False

    # -- construction -------------------------------------------------

    def _alloc(self):
        N = self.num_envs
        self.state = CentroidalState.standing(self.model, N)
        self.phases = self.task.gait.initial_phases(N)
        self.feet = np.zeros((N, 4, 3))
        self.t = np.zeros(N, dtype=np.int64)
        self.done = np.zeros(N, dtype=bool)
        self._allocated = True

    def _reset_rows(self, rows):
        task = self.task
        for i in rows:
            rng = np.random.default_rng([self.seed, int(self.env_ids[i]), int(self.episodes[i])])
            terrain_seed = int(rng.integers(2 ** 31))
            self.terrains[i] = task.make_terrain(terrain_seed)
            u = rng.uniform(-1.0, 1.0, size=6)
            ground = float(self.terrains[i].height_at(0.0, 0.0))
            self.state.p[i] = (0.0, 0.0, ground + task.p_z_desired + task.init_height * u[0])
            self.state.pdot[i] = task.init_velocity * u[1:4]
            self.state.R[i] = from_euler(np.array([task.init_tilt * u[4], task.init_tilt * u[5], 0.0]))
            self.state.omega[i] = 0.0
            self.episodes[i] += 1
        rows = np.asarray(rows, dtype=np.int64)
        if rows.size == 0:
            return
        self.phases[rows] = np.asarray(task.gait.phi0)
        self.t[rows] = 0
        self.done[rows] = False
        # initial footholds: default stance under a motionless body
        k = rows.size
        p = self.state.p[rows]
        zero = np.zeros((k, 3))
        R = self.state.R[rows]
        terrains = [self.terrains[i] for i in rows]
        for leg in range(4):
            self.feet[rows, leg], _ = plan_touchdown_batch(p, zero, R, np.full(k, leg), terrains,
                                                           task.planner, self.model)

    def reset(self):
        if not self._allocated:
            self._alloc()
        self._reset_rows(range(self.num_envs))
        return self.observe()

    # -- queries ------------------------------------------------------

    def ground_height(self, xy):
        out = np.zeros(len(xy))
        for i, terrain in enumerate(self.terrains):
            if terrain is not None and terrain.has_height:
                out[i] = terrain.height_at(xy[i, 0], xy[i, 1])
        return out

    def body_height(self):
        return self.state.p[:, 2] - self.ground_height(self.state.p[:, :2])

    def observe(self, height=None):
        task, st = self.task, self.state
        N = self.num_envs
        if height is None:
            height = self.body_height()
        r = (self.feet - st.p[:, None, :]).reshape(N, 12)
        parts = [task.obs_scale * height[:, None], st.pdot, st.R.reshape(N, 9), st.omega,
                 task.obs_scale * r, gaits.normalized_phase(self.phases, task.gait)]
        if task.extra_obs == "py":
            parts.append(st.p[:, 1:2])
        elif task.extra_obs == "pxy":
            parts.append(st.p[:, 0:2])
        return np.concatenate(parts, axis=1)

    def stance(self):
        return gaits.stance_mask(self.phases, self.task.gait)

    # -- stepping -----------------------------------------------------

    def step(self, actions):
        """Advance with raw policy actions in ``[-1, 1]``."""
        actions = np.asarray(actions, float).reshape(self.num_envs, 6)
        return self.step_accel(scale_action(actions, self.task))

    def step_accel(self, a_d):
        """Advance with desired accelerations ``(N, 6)`` (no clipping)."""
        task = self.task
        N = self.num_envs
        a_d = np.asarray(a_d, float).reshape(N, 6)
        live = ~self.done
        idx = np.nonzero(live)[0]
        st = self.state.take(idx)
        feet = self.feet[idx]
        sol = transcribe(a_d[idx], st, feet, self.stance()[idx], self.model, task.weights)
        f_net, tau_net = net_wrench(st, feet, sol.forces, self.sim)
        lin, ang = wrench_accel(st, f_net, tau_net, self.sim)
        new = euler_step(st, f_net, tau_net, self.sim, DT)

        forces = np.zeros((N, 4, 3))
        forces[idx] = sol.forces
        achieved = np.zeros((N, 6))
        achieved[idx] = np.concatenate([lin, ang], axis=1)
        qp_status = np.full(N, "done", dtype=object)
        qp_status[idx] = sol.status
        for name in ("p", "pdot", "R", "omega"):
            getattr(self.state, name)[idx] = getattr(new, name)
        phases = gaits.advance(self.phases[idx], task.gait)
        self.phases[idx] = phases
        self.t[idx] += 1

        finite = np.zeros(N, dtype=bool)
        finite[idx] = new.is_finite()
        no_foothold = np.zeros(N, dtype=bool)
        boundary = gaits.at_touchdown_boundary(phases, task.gait) & finite[idx, None]
        if boundary.any():
            rows, legs = np.nonzero(boundary)
            env_rows = idx[rows]
            planned, failed = plan_touchdown_batch(
                new.p[rows], new.pdot[rows], new.R[rows], legs,
                [self.terrains[i] for i in env_rows], task.planner, self.model)
            self.feet[env_rows, legs] = planned
            no_foothold[env_rows[failed]] = True

        p_safe = np.where(finite[:, None], self.state.p, 0.0)
        R_safe = np.where(finite[:, None, None], self.state.R, np.eye(3))
        height = p_safe[:, 2] - self.ground_height(p_safe[:, :2])
        theta = euler_angles(R_safe)
        pdot_safe = np.where(finite[:, None], self.state.pdot, 0.0)
        rew = np.where(finite & live, reward(height, pdot_safe, theta, task), 0.0)
        lo, hi = task.height_bounds
        tilt = np.max(np.abs(theta[:, :2]), axis=1) > task.max_tilt
        bad_height = (height < lo * task.p_z_desired) | (height > hi * task.p_z_desired)
        qp_failed = qp_status == "infeasible"
        terminated = live & (~finite | tilt | bad_height | no_foothold | qp_failed)
        truncated = live & ~terminated & (self.t >= task.episode_length)
        done_now = terminated | truncated
        self.done = self.done | done_now

        residual = np.where(live, np.linalg.norm(achieved - a_d, axis=1), 0.0)
        info = {
            "a_d": a_d, "achieved": achieved, "forces": forces, "qp_status": qp_status,
            "qp_residual": residual, "terminated": terminated, "truncated": truncated,
            "no_foothold": no_foothold, "live": live, "height": height, "theta": theta,
        }
        obs = self.observe(height)
        obs = np.where(np.isfinite(obs), obs, 0.0)
        if self.auto_reset and done_now.any():
            info["final_obs"] = obs.copy()
            rows = np.nonzero(done_now)[0]
            self._reset_rows(rows)
            obs[rows] = self.observe()[rows]
            return obs, rew, done_now, info
        return obs, rew, self.done.copy(), info


def make_env(task, num_envs=1, seed=0, **kw):
    env = LocomotionEnv(task, num_envs, seed, **kw)
    env.reset()
    return env
