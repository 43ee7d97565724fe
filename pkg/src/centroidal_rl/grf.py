"""Desired body acceleration to ground reaction forces.

The achieved acceleration of the body is affine in the stacked foot forces
``f`` (12-vector, leg-major)::

    a = A f + bias,   bias = [-g e_z ; -I^-1 (omega x I omega)]

The linear part is in the world frame, the angular part in the body frame.
``transcribe`` minimizes ``||A f + bias - a_d||_Q^2 + lambda ||f||^2`` over the
stance-leg forces subject to a minimum normal force and the friction
pyramid; swing-leg forces are removed from the problem and are exactly zero.
"""
from dataclasses import dataclass

import numpy as np

from .dynamics import mv, net_wrench, wrench_accel
from .qp import solve_stacked
from .so3 import cross, hat

BALLISTIC = "ballistic"


@dataclass(frozen=True)
class QpWeights:
    Q: tuple = (1.0, 1.0, 10.0, 5.0, 5.0, 5.0)
    lam: float = 1e-4
    mu: float = 0.6
    f_z_min: float = 1.0
    tol: float = 1e-8
    max_iter: int = 30

    def __post_init__(self):
        Q = tuple(float(v) for v in self.Q)
        if len(Q) != 6 or min(Q) <= 0:
            raise ValueError("Q must hold six positive weights")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not 0 < self.mu <= 1.5:
            raise ValueError("mu must lie in (0, 1.5]")
        if self.f_z_min < 0:
            raise ValueError("f_z_min must be non-negative")
        object.__setattr__(self, "Q", Q)


def accel_map(state, footholds, params):
    """``A`` with shape ``(..., 6, 12)`` and ``bias`` with shape ``(..., 6)``."""
    footholds = np.asarray(footholds, float)
    batch = footholds.shape[:-2]
    A = np.zeros(batch + (6, 12))
    skew = hat(footholds - state.p[..., None, :])  # (..., 4, 3, 3)
    Rt = np.swapaxes(state.R, -1, -2)[..., None, :, :]
    ang = params.inertia_inv @ (Rt @ skew)  # (..., 4, 3, 3)
    for leg in range(4):
        cols = slice(3 * leg, 3 * leg + 3)
        A[..., 0:3, cols] = np.eye(3) / params.mass
        A[..., 3:6, cols] = ang[..., leg, :, :]
    bias = np.zeros(batch + (6,))
    bias[..., 2] = -params.g
    w = state.omega
    bias[..., 3:] = -mv(params.inertia_inv, cross(w, mv(params.inertia, w)))
    return A, bias


def achieved_accel(forces, state, footholds, params):
    """Body acceleration the simulator realizes for ``forces`` (shape ``(..., 4, 3)``)."""
    f_net, tau_net = net_wrench(state, footholds, forces, params)
    lin, ang = wrench_accel(state, f_net, tau_net, params)
    return np.concatenate([lin, ang], axis=-1)


def _leg_block(k, mu, f_z_min):
    G = np.zeros((5 * k, 3 * k))
    h = np.zeros(5 * k)
    for j in range(k):
        r, c = 5 * j, 3 * j
        G[r, c + 2] = -1.0
        h[r] = -f_z_min
        G[r + 1, [c, c + 2]] = (1.0, -mu)
        G[r + 2, [c, c + 2]] = (-1.0, -mu)
        G[r + 3, [c + 1, c + 2]] = (1.0, -mu)
        G[r + 4, [c + 1, c + 2]] = (-1.0, -mu)
    return G, h


def build_qp(a_d, A, bias, legs, params, weights):
    """Stacked QP data for instances sharing the same number of stance legs.

    ``legs`` has shape ``(B, k)`` and lists the stance legs of each instance.
    Returns ``H, c, G, h, x0`` in the solver's standard form.
    """
    B, k = legs.shape
    cols = (3 * legs[:, :, None] + np.arange(3)).reshape(B, 3 * k)
    As = np.take_along_axis(A, cols[:, None, :], axis=2)  # (B, 6, 3k)
    Q = np.asarray(weights.Q)
    QA = Q[None, :, None] * As
    H = np.swapaxes(As, 1, 2) @ QA + weights.lam * np.eye(3 * k)
    c = (np.swapaxes(QA, 1, 2) @ (bias - a_d)[..., None])[..., 0]
    G, h = _leg_block(k, weights.mu, weights.f_z_min)
    G = np.broadcast_to(G, (B,) + G.shape)
    h = np.broadcast_to(h, (B,) + h.shape)
    x0 = np.zeros((B, 3 * k))
    x0[:, 2::3] = max(params.mass * params.g / k, 10.0 * weights.f_z_min + 1.0)
    return H, c, G, h, x0


def qp_constant(a_d, bias, weights):
    """Half of ``||bias - a_d||_Q^2``, the term the solver form leaves out."""
    e = np.asarray(bias, float) - np.asarray(a_d, float)
    return 0.5 * np.sum(np.asarray(weights.Q) * e * e, axis=-1)


@dataclass
class GrfSolution:
    forces: np.ndarray  # (..., 4, 3)
    stance: np.ndarray  # (..., 4)
    status: np.ndarray  # per-instance strings
    iterations: np.ndarray = None

    @property
    def f(self):
        return self.forces.reshape(self.forces.shape[:-2] + (12,))


def transcribe(a_d, state, footholds, stance, params, weights=QpWeights()):
    """Solve for stance forces realizing ``a_d`` (batched over the leading axis).

    Instances with no stance leg return zero force and status ``ballistic``.
    """
    a_d = np.atleast_2d(np.asarray(a_d, float))
    single = np.asarray(state.p).ndim == 1
    if single:
        state = type(state)(state.p[None], state.pdot[None], state.R[None], state.omega[None])
        footholds = np.asarray(footholds)[None]
        stance = np.asarray(stance)[None]
    stance = np.asarray(stance, bool)
    B = stance.shape[0]
    A, bias = accel_map(state, footholds, params)
    forces = np.zeros((B, 4, 3))
    status = np.full(B, BALLISTIC, dtype=object)
    iters = np.zeros(B, dtype=np.int64)
    counts = stance.sum(axis=1)
    for k in range(1, 5):
        idx = np.nonzero(counts == k)[0]
        if idx.size == 0:
            continue
        legs = np.nonzero(stance[idx])[1].reshape(idx.size, k)
        H, c, G, h, x0 = build_qp(a_d[idx], A[idx], bias[idx], legs, params, weights)
        x, _, st, _, it = solve_stacked(H, c, G, h, x0, weights.tol, weights.max_iter)
        f = np.zeros((idx.size, 4, 3))
        np.put_along_axis(f, legs[:, :, None], x.reshape(idx.size, k, 3), axis=1)
        forces[idx] = f
        status[idx] = st
        iters[idx] = it
    sol = GrfSolution(forces, stance, status, iters)
    if single:
        sol = GrfSolution(forces[0], stance[0], status[0], iters[0])
    return sol


def qp_cost(forces, a_d, state, footholds, params, weights=QpWeights()):
    """Full transcription objective ``||A f + bias - a_d||_Q^2 + lambda ||f||^2``."""
    A, bias = accel_map(state, footholds, params)
    f = np.asarray(forces, float).reshape(np.shape(forces)[:-2] + (12,))
    e = mv(A, f) + bias - a_d
    return np.sum(np.asarray(weights.Q) * e * e, axis=-1) + weights.lam * np.sum(f * f, axis=-1)
