"""Exhaustive active-set enumeration for small QPs.

Used to cross-check the interior-point solver. For each candidate active set
``W`` the equality-constrained minimizer ``x_W`` is found in closed form;
the optimum is the feasible ``x_W`` with the lowest objective (strict
convexity makes the true active set one of the candidates).
"""
import functools
import itertools

import numpy as np


def all_subsets(m, max_size):
    for w in range(0, min(m, max_size) + 1):
        for W in itertools.combinations(range(m), w):
            yield W


# per-leg rows: 0 fz >= fz_min, 1 fx <= mu fz, 2 -fx <= mu fz, 3 fy <= mu fz, 4 -fy <= mu fz
_LEG_PATTERNS = [
    tuple(r for r in (z, x, y) if r is not None)
    for z in (None, 0) for x in (None, 1, 2) for y in (None, 3, 4)
]


def contact_subsets(k):
    """Active sets for ``k`` stance legs without mutually exclusive pairs.

    ``fx = mu fz`` and ``fx = -mu fz`` together force ``fz = 0``, which the
    ``fz >= fz_min > 0`` row forbids (likewise for y), so such sets can never
    be active at a feasible point.
    """
    for combo in itertools.product(_LEG_PATTERNS, repeat=k):
        yield tuple(5 * leg + r for leg, rows in enumerate(combo) for r in rows)


def group_by_size(subsets, n):
    """``{size: int array of index rows}`` for the subsets with at most ``n`` rows."""
    by_size = {}
    for W in subsets:
        if len(W) <= n:
            by_size.setdefault(len(W), []).append(W)
    return {w: np.array(sets, dtype=np.int64).reshape(len(sets), w) for w, sets in by_size.items()}


@functools.lru_cache(maxsize=None)
def grouped_contact_subsets(k):
    """Cached :func:`group_by_size` of :func:`contact_subsets` for ``k`` legs."""
    groups = group_by_size(contact_subsets(k), 3 * k)
    for a in groups.values():
        a.setflags(write=False)
    return groups


def enumerate_qp(H, c, G, h, subsets, feas_tol=1e-9):
    """Return ``(x, objective, active_set)`` of the best feasible candidate.

    ``subsets`` is an iterable of row-index tuples or a mapping built by
    :func:`group_by_size`.
    """
    H = np.asarray(H, float)
    c = np.asarray(c, float)
    G = np.asarray(G, float)
    h = np.asarray(h, float)
    n = c.shape[0]
    Hinv = np.linalg.inv(H)
    x_u = -Hinv @ c
    HG = Hinv @ G.T  # (n, m)
    M = G @ HG
    v = G @ x_u - h
    by_size = subsets if isinstance(subsets, dict) else group_by_size(subsets, n)
    best = (None, np.inf, None)
    for w, Ws in sorted(by_size.items()):
        if w == 0:
            if np.all(v <= feas_tol):
                obj = 0.5 * x_u @ H @ x_u + c @ x_u
                if obj < best[1]:
                    best = (x_u.copy(), obj, ())
            continue
        for start in range(0, len(Ws), 20000):
            chunk = Ws[start:start + 20000]
            Mw = M[chunk[:, :, None], chunk[:, None, :]]
            vw = v[chunk]
            try:
                y = np.linalg.solve(Mw, vw[..., None])[..., 0]
            except np.linalg.LinAlgError:
                keep = np.linalg.matrix_rank(Mw) == w  # dependent rows cannot define a vertex
                chunk, Mw, vw = chunk[keep], Mw[keep], vw[keep]
                if len(chunk) == 0:
                    continue
                y = np.linalg.solve(Mw, vw[..., None])[..., 0]
            slack = v[None, :] - (M[:, chunk].transpose(1, 0, 2) @ y[..., None])[..., 0]
            ok = np.all(slack <= feas_tol, axis=1)
            if not ok.any():
                continue
            xs = x_u[None, :] - (HG[:, chunk[ok]].transpose(1, 0, 2) @ y[ok][..., None])[..., 0]
            objs = 0.5 * np.sum((xs @ H) * xs, axis=1) + xs @ c
            j = int(np.argmin(objs))
            if objs[j] < best[1]:
                best = (xs[j], float(objs[j]), tuple(int(r) for r in chunk[ok][j]))
    return best


def oracle_solve(qp, subsets=None):
    if subsets is None:
        subsets = all_subsets(qp.m, qp.n)
    return enumerate_qp(qp.H, qp.c, qp.G, qp.h, subsets)
