"""Synthetic force-distribution QPs and solver/environment timing."""
import time

import numpy as np

from .dynamics import CentroidalState, a1_params
from .grf import QpWeights, accel_map, build_qp, qp_constant
from .oracle import enumerate_qp, grouped_contact_subsets
from .qp import DenseQp, solve_batch
from .so3 import from_euler

STANCE_PATTERNS = {
    4: [(0, 1, 2, 3)],
    3: [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)],
    2: [(0, 3), (1, 2), (0, 1), (2, 3), (0, 2), (1, 3)],
}


def random_states(rng, n, params):
    st = CentroidalState.standing(params, n)
    st.p = st.p + rng.uniform(-0.03, 0.03, (n, 3))
    st.pdot = rng.uniform(-0.5, 0.5, (n, 3))
    st.R = from_euler(np.column_stack([rng.uniform(-0.2, 0.2, (n, 2)), rng.uniform(-np.pi, np.pi, n)]))
    st.omega = rng.uniform(-1.0, 1.0, (n, 3))
    return st


def random_instances(n, legs=(1, 2), seed=0, params=None, weights=QpWeights(), a_scale=(8.0, 15.0)):
    """``n`` QPs for the stance set ``legs`` with random states, footholds and targets."""
    rng = np.random.default_rng(seed)
    params = params or a1_params()
    st = random_states(rng, n, params)
    feet = st.p[:, None, :] + params.r_ref[None] + rng.uniform(-0.05, 0.05, (n, 4, 3))
    feet[..., 2] = 0.0
    a_d = np.column_stack([rng.uniform(-a_scale[0], a_scale[0], (n, 3)),
                           rng.uniform(-a_scale[1], a_scale[1], (n, 3))])
    A, bias = accel_map(st, feet, params)
    leg_idx = np.tile(np.asarray(legs), (n, 1))
    H, c, G, h, x0 = build_qp(a_d, A, bias, leg_idx, params, weights)
    const = qp_constant(a_d, bias, weights)
    return [DenseQp(H[k], c[k], G[k], h[k], x0[k], float(const[k])) for k in range(n)]


def mixed_instances(n, seed=0, params=None, weights=QpWeights()):
    """Instances with stance patterns drawn uniformly from the 11 masks of 2 to 4 legs."""
    rng = np.random.default_rng([seed, 17])
    patterns = [p for k in (4, 3, 2) for p in STANCE_PATTERNS[k]]
    picks = rng.integers(len(patterns), size=n)
    out = [None] * n
    for j, pat in enumerate(patterns):
        idx = np.nonzero(picks == j)[0]
        if idx.size:
            qps = random_instances(idx.size, pat, seed=seed * 1000 + j, params=params, weights=weights)
            for k, q in zip(idx, qps):
                out[k] = q
    return out


def oracle_check(qps, sols):
    """Largest relative objective error and constraint violation versus the oracle."""
    rel, viol = 0.0, 0.0
    for qp, sol in zip(qps, sols):
        x_o, obj_o, _ = enumerate_qp(qp.H, qp.c, qp.G, qp.h, grouped_contact_subsets(qp.n // 3))
        rel = max(rel, relative_objective_error(qp, sol.x, x_o))
        viol = max(viol, float(np.max(qp.G @ sol.x - qp.h)))
    return rel, viol


def relative_objective_error(qp, x, x_ref):
    """Relative gap of the full (non-negative) transcription costs at ``x`` and ``x_ref``."""
    f = qp.objective(x)
    f_ref = qp.objective(x_ref)
    return abs(f - f_ref) / max(1e-12, f_ref + qp.const)


def bench_qp(batch_sizes=(1, 10, 100, 1000), legs=(1, 2), seed=0, repeats=3, gate=20):
    """Time ``solve_batch`` over synthetic trot-stance problems.

    The first ``gate`` solutions of the largest batch are checked against
    the active-set oracle before any timing is reported.
    """
    largest = random_instances(max(batch_sizes), legs, seed)
    sols = solve_batch(largest[:gate])
    rel, viol = oracle_check(largest[:gate], sols)
    if rel > 1e-6 or viol > 1e-8:
        raise RuntimeError(f"solver disagrees with the oracle (rel {rel:.2e}, violation {viol:.2e})")
    rows = []
    for b in batch_sizes:
        qps = largest[:b]
        best = np.inf
        for _ in range(repeats):
            t = time.perf_counter()
            out = solve_batch(qps)
            best = min(best, time.perf_counter() - t)
        rows.append({"batch": int(b), "seconds": best, "qps_per_second": b / best,
                     "optimal": int(sum(s.ok for s in out)),
                     "max_iterations": int(max(s.iterations for s in out))})
    return {"stance_legs": list(legs), "oracle_gate": {"instances": gate, "max_rel_error": rel,
                                                       "max_violation": viol},
            "results": rows}
