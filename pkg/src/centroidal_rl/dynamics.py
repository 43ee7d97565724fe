"""Single-rigid-body model with four massless virtual legs.

Leg order is front-left, front-right, rear-left, rear-right. ``omega`` is
expressed in the body frame; positions, velocities and forces in the world
frame. All functions broadcast over a leading batch dimension.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .so3 import cross, exp_so3, hat

GRAVITY = 9.81
DT = 0.01
LEG_NAMES = ("FL", "FR", "RL", "RR")
# sign of (x, y) of each default foothold, in leg order
LEG_SIGNS = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])


def _footholds(dx, dy, height):
    r = np.empty((4, 3))
    r[:, 0] = LEG_SIGNS[:, 0] * dx
    r[:, 1] = LEG_SIGNS[:, 1] * dy
    r[:, 2] = -height
    return r


@dataclass(frozen=True)
class RobotParams:
    """Mass properties and leg geometry of the centroidal model."""

    mass: float
    inertia: np.ndarray
    r_ref: np.ndarray
    l_max: float
    p_z_nominal: float
    g: float = GRAVITY
    name: str = "custom"
    inertia_inv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        inertia = np.array(self.inertia, dtype=float).reshape(3, 3)
        r_ref = np.array(self.r_ref, dtype=float).reshape(4, 3)
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "r_ref", r_ref)
        object.__setattr__(self, "inertia_inv", np.linalg.inv(inertia))
        self.validate()

    def validate(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not np.allclose(self.inertia, self.inertia.T):
            raise ValueError("inertia must be symmetric")
        if np.min(np.linalg.eigvalsh(self.inertia)) <= 0:
            raise ValueError("inertia must be positive definite")
        if not self.l_max > self.p_z_nominal > 0:
            raise ValueError("need l_max > p_z_nominal > 0")
        signs = np.sign(self.r_ref[:, :2])
        if not np.array_equal(signs, LEG_SIGNS):
            raise ValueError("r_ref signs must follow FL, FR, RL, RR ordering")

    def with_mass(self, mass):
        return replace(self, mass=float(mass))

    def with_footholds(self, dx, dy):
        return replace(self, r_ref=_footholds(dx, dy, self.p_z_nominal))


def a1_params():
    return RobotParams(
        mass=12.0,
        inertia=np.diag([0.08, 0.28, 0.30]),
        r_ref=_footholds(0.18, 0.10, 0.30),
        l_max=0.45,
        p_z_nominal=0.30,
        name="a1",
    )


def laikago_params():
    return RobotParams(
        mass=13.0,
        inertia=np.diag([0.10, 0.30, 0.32]),
        r_ref=_footholds(0.21, 0.12, 0.40),
        l_max=0.55,
        p_z_nominal=0.40,
        name="laikago",
    )


ROBOT_PRESETS = {"a1": a1_params, "laikago": laikago_params}


def robot_preset(name):
    try:
        return ROBOT_PRESETS[name]()
    except KeyError:
        raise ValueError(
            f"unknown robot preset {name!r}; expected one of {sorted(ROBOT_PRESETS)}"
        ) from None


@dataclass
class CentroidalState:
    p: np.ndarray
    pdot: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    @classmethod
    def standing(cls, params, batch=None):
        shape = () if batch is None else (batch,)
        p = np.zeros(shape + (3,))
        p[..., 2] = params.p_z_nominal
        R = np.broadcast_to(np.eye(3), shape + (3, 3)).copy()
        return cls(p, np.zeros(shape + (3,)), R, np.zeros(shape + (3,)))

    def copy(self):
        return CentroidalState(self.p.copy(), self.pdot.copy(), self.R.copy(), self.omega.copy())

    def take(self, idx):
        return CentroidalState(self.p[idx], self.pdot[idx], self.R[idx], self.omega[idx])

    def is_finite(self):
        ok = np.isfinite(self.p).all(-1) & np.isfinite(self.pdot).all(-1)
        ok &= np.isfinite(self.R).all((-1, -2)) & np.isfinite(self.omega).all(-1)
        return ok


def mv(M, v):
    """Matrix-vector product broadcast slice by slice.

    Stacked ``matmul`` evaluates each slice independently, so results do not
    depend on how many states share a batch.
    """
    return (M @ v[..., None])[..., 0]


def net_wrench(state, foot_pos, forces, params):
    """Net world-frame force and torque about the COM.

    ``foot_pos`` and ``forces`` have shape ``(..., 4, 3)``; swing legs must
    already carry zero force.
    """
    forces = np.asarray(forces, dtype=float)
    r = np.asarray(foot_pos, dtype=float) - state.p[..., None, :]
    f_net = forces.sum(axis=-2)
    f_net[..., 2] -= params.mass * params.g
    tau_net = cross(r, forces).sum(axis=-2)
    return f_net, tau_net


def wrench_accel(state, f_net, tau_net, params):
    """Linear (world) and angular (body) acceleration produced by a wrench."""
    lin = f_net / params.mass
    I, I_inv = params.inertia, params.inertia_inv
    w = state.omega
    tau_body = mv(np.swapaxes(state.R, -1, -2), tau_net)
    gyro = cross(w, mv(I, w))
    ang = mv(I_inv, tau_body - gyro)
    return lin, ang


def euler_step(state, f_net, tau_net, params, dt=DT):
    """One explicit Euler step; orientation advances through the exponential map."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    lin, ang = wrench_accel(state, f_net, tau_net, params)
    p = state.p + state.pdot * dt
    pdot = state.pdot + lin * dt
    R = state.R @ exp_so3(state.omega * dt)
    omega = state.omega + ang * dt
    return CentroidalState(p, pdot, R, omega)


def skew_moment_arms(state, foot_pos):
    """``hat(r_i)`` for every leg, shape ``(..., 4, 3, 3)``."""
    return hat(np.asarray(foot_pos, dtype=float) - state.p[..., None, :])
