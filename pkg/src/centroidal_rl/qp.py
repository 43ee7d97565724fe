"""Batched primal-dual interior-point solver for small dense convex QPs.

Problems have the form::

    minimize    0.5 x^T H x + c^T x
    subject to  G x <= h

with ``H`` symmetric positive definite. Many instances with equal ``(n, m)``
are solved together on stacked arrays; every instance runs its own iteration
sequence (converged instances drop out of the active set), so a solution
does not depend on which other instances share the batch.
"""
from dataclasses import dataclass

import numpy as np

OPTIMAL, MAX_ITER, INFEASIBLE = "optimal", "max_iter", "infeasible"
_STATUS = (OPTIMAL, MAX_ITER, INFEASIBLE)

SIGMA = 0.05  # centering parameter
TAU = 0.995  # fraction to the boundary
MAX_BACKTRACK = 30


@dataclass
class DenseQp:
    H: np.ndarray
    c: np.ndarray
    G: np.ndarray
    h: np.ndarray
    x0: np.ndarray = None  # optional strictly feasible start
    const: float = 0.0  # constant dropped from the objective (reporting only)

    def __post_init__(self):
        self.H = np.asarray(self.H, float)
        self.c = np.asarray(self.c, float)
        n = self.c.shape[0]
        self.G = np.asarray(self.G, float).reshape(-1, n)
        self.h = np.asarray(self.h, float).reshape(-1)
        if self.H.shape != (n, n):
            raise ValueError(f"H must be {n}x{n}")
        if self.G.shape[0] != self.h.shape[0]:
            raise ValueError("G and h disagree on the constraint count")
        if self.x0 is not None:
            self.x0 = np.asarray(self.x0, float)

    @property
    def n(self):
        return self.c.shape[0]

    @property
    def m(self):
        return self.h.shape[0]

    def objective(self, x):
        return 0.5 * x @ self.H @ x + self.c @ x


@dataclass
class QpSolution:
    x: np.ndarray
    status: str
    gap: float
    iterations: int
    z: np.ndarray = None

    @property
    def ok(self):
        return self.status == OPTIMAL


def _mv(M, v):
    return (M @ v[..., None])[..., 0]


def _mtv(M, v):
    return (np.swapaxes(M, -1, -2) @ v[..., None])[..., 0]


def _solve_each(K, rhs):
    dx = np.zeros_like(rhs)
    broken = np.zeros(len(K), dtype=bool)
    for k in range(len(K)):
        try:
            dx[k] = np.linalg.solve(K[k], rhs[k][:, None])[:, 0]
        except np.linalg.LinAlgError:
            broken[k] = True
    broken |= ~np.all(np.isfinite(dx), axis=1)
    return dx, broken


def _ipm(H, c, G, h, x, tol, max_iter, history=None):
    """Path-following iterations from strictly feasible ``x`` (stacked)."""
    B, n = c.shape
    m = h.shape[1]
    x = x.copy()
    s = h - _mv(G, x)
    # start duals on a central path point scaled to the stationarity residual
    mu0 = 10.0 * np.maximum(1.0, np.max(np.abs(_mv(H, x) + c), axis=1))
    z = mu0[:, None] / s
    status = np.full(B, 1, dtype=np.int8)
    iters = np.zeros(B, dtype=np.int64)
    gap = np.sum(s * z, axis=1)
    active = np.arange(B)
    if history is not None:
        history.append(gap.copy())
    for it in range(max_iter + 1):
        if active.size == 0:
            break
        xa, sa, za = x[active], s[active], z[active]
        Ha, ca, Ga, ha = H[active], c[active], G[active], h[active]
        r_d = _mv(Ha, xa) + ca + _mtv(Ga, za)
        r_p = _mv(Ga, xa) + sa - ha
        g = np.sum(sa * za, axis=1)
        kkt = np.maximum(np.max(np.abs(r_d), axis=1), np.max(np.abs(r_p), axis=1))
        done = (g <= tol) & (kkt <= 10.0 * tol)
        if done.any():
            status[active[done]] = 0
            keep = ~done
            active = active[keep]
            xa, sa, za, r_d, r_p, g = xa[keep], sa[keep], za[keep], r_d[keep], r_p[keep], g[keep]
            Ha, ca, Ga, ha = Ha[keep], ca[keep], Ga[keep], ha[keep]
        if active.size == 0 or it == max_iter:
            break
        mu = g / m
        D = za / sa
        K = Ha + np.swapaxes(Ga, -1, -2) @ (D[..., None] * Ga)
        w = (SIGMA * mu[:, None] - sa * za) / sa + D * r_p
        rhs = -r_d - _mtv(Ga, w)
        try:
            dx = np.linalg.solve(K, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            dx, broken = _solve_each(K, rhs)
            if broken.any():
                # numerically singular systems stop where they are (status max_iter)
                keep = ~broken
                active = active[keep]
                sa, za, r_p, g, Ga, xa = sa[keep], za[keep], r_p[keep], g[keep], Ga[keep], xa[keep]
                mu, dx = mu[keep], dx[keep]
                if active.size == 0:
                    break
        ds = -r_p - _mv(Ga, dx)
        dz = (SIGMA * mu[:, None] - sa * za - za * ds) / sa
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio_s = np.where(ds < 0, -sa / ds, np.inf)
            ratio_z = np.where(dz < 0, -za / dz, np.inf)
        alpha = np.minimum(1.0, TAU * np.minimum(ratio_s.min(axis=1), ratio_z.min(axis=1)))
        # backtrack until the surrogate gap does not grow
        pending = np.ones(active.size, dtype=bool)
        for _ in range(MAX_BACKTRACK):
            g_new = np.sum((sa + alpha[:, None] * ds) * (za + alpha[:, None] * dz), axis=1)
            bad = pending & (g_new > g)
            if not bad.any():
                break
            alpha = np.where(bad, 0.5 * alpha, alpha)
            pending = bad
        a = alpha[:, None]
        x[active] = xa + a * dx
        s[active] = sa + a * ds
        z[active] = za + a * dz
        iters[active] += 1
        if history is not None:
            history.append(np.sum(s * z, axis=1))
    gap = np.sum(s * z, axis=1)
    return x, z, status, gap, iters


def _phase_one(H, c, G, h, tol, max_iter):
    """Strictly feasible points via ``min t s.t. G x - t <= h, t >= -1``."""
    B, n = c.shape
    m = h.shape[1]
    eps = 1e-6
    Hp = np.zeros((B, n + 1, n + 1))
    Hp[:, :n, :n] = eps * np.eye(n)
    Hp[:, n, n] = eps
    cp = np.zeros((B, n + 1))
    cp[:, n] = 1.0
    Gp = np.zeros((B, m + 1, n + 1))
    Gp[:, :m, :n] = G
    Gp[:, :m, n] = -1.0
    Gp[:, m, n] = -1.0
    hp = np.concatenate([h, np.ones((B, 1))], axis=1)
    x_start = np.zeros((B, n + 1))
    x_start[:, n] = np.max(-h, axis=1) + 1.0
    x_start[:, n] = np.maximum(x_start[:, n], 1.0)
    xp, _, _, _, _ = _ipm(Hp, cp, Gp, hp, x_start, tol, 4 * max_iter)
    feasible = xp[:, n] < -1e-9
    return xp[:, :n], feasible


def solve_stacked(H, c, G, h, x0=None, tol=1e-8, max_iter=30, history=None):
    """Solve stacked instances; returns ``(x, z, status, gap, iterations)``.

    ``status`` holds the strings ``optimal``, ``max_iter`` or ``infeasible``.
    Rows of ``x0`` that are not strictly feasible (or a missing ``x0``) go
    through a phase-one problem first.
    """
    H = np.asarray(H, float)
    c = np.asarray(c, float)
    B, n = c.shape
    G = np.asarray(G, float).reshape(B, -1, n)
    h = np.asarray(h, float).reshape(B, -1)
    m = h.shape[1]
    if m == 0:
        x = -np.linalg.solve(H, c[..., None])[..., 0]
        return (x, np.zeros((B, 0)), np.array([OPTIMAL] * B, dtype=object),
                np.zeros(B), np.zeros(B, dtype=np.int64))
    if x0 is None:
        x0 = -np.linalg.solve(H, c[..., None])[..., 0]
    x0 = np.array(x0, float)
    infeasible = np.zeros(B, dtype=bool)
    need = np.min(h - _mv(G, x0), axis=1) <= 0
    if need.any():
        idx = np.nonzero(need)[0]
        xs, ok = _phase_one(H[idx], c[idx], G[idx], h[idx], tol, max_iter)
        x0[idx] = xs
        infeasible[idx[~ok]] = True
    x, z, code, gap, iters = _ipm(H, c, G, h, x0, tol, max_iter, history)
    code[infeasible] = 2
    status = np.array([_STATUS[k] for k in code], dtype=object)
    return x, z, status, gap, iters


def solve(qp, tol=1e-8, max_iter=30):
    x0 = None if qp.x0 is None else qp.x0[None]
    x, z, status, gap, iters = solve_stacked(qp.H[None], qp.c[None], qp.G[None], qp.h[None],
                                             x0, tol, max_iter)
    return QpSolution(x[0], status[0], float(gap[0]), int(iters[0]), z[0])


def solve_batch(qps, tol=1e-8, max_iter=30):
    """Solve a sequence of problems, grouping instances of equal shape."""
    qps = list(qps)
    out = [None] * len(qps)
    groups = {}
    for k, qp in enumerate(qps):
        groups.setdefault((qp.n, qp.m, qp.x0 is not None), []).append(k)
    for (_, _, has_x0), idx in groups.items():
        H = np.stack([qps[k].H for k in idx])
        c = np.stack([qps[k].c for k in idx])
        G = np.stack([qps[k].G for k in idx])
        h = np.stack([qps[k].h for k in idx])
        x0 = np.stack([qps[k].x0 for k in idx]) if has_x0 else None
        x, z, status, gap, iters = solve_stacked(H, c, G, h, x0, tol, max_iter)
        for j, k in enumerate(idx):
            out[k] = QpSolution(x[j], status[j], float(gap[j]), int(iters[j]), z[j])
    return out
