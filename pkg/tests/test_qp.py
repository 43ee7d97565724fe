import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from centroidal_rl.bench import random_instances, relative_objective_error
from centroidal_rl.oracle import all_subsets, contact_subsets, enumerate_qp, oracle_solve
from centroidal_rl.qp import DenseQp, solve, solve_batch, solve_stacked


def random_qp(rng, n, m):
    M = rng.normal(size=(n, n))
    H = M @ M.T + 0.1 * np.eye(n)
    c = rng.normal(size=n) * 3
    G = rng.normal(size=(m, n))
    x_feas = rng.normal(size=n)
    h = G @ x_feas + rng.uniform(0.1, 1.0, m)  # strictly feasible at x_feas
    return DenseQp(H, c, G, h)


def test_scalar_kkt():
    sol = solve(DenseQp([[1.0]], [-1.0], [[1.0]], [0.5]))
    assert sol.ok
    assert sol.x[0] == pytest.approx(0.5, abs=1e-8)


def test_unconstrained():
    H = np.array([[2.0, 0.5], [0.5, 1.0]])
    c = np.array([1.0, -3.0])
    sol = solve(DenseQp(H, c, np.zeros((0, 2)), np.zeros(0)))
    assert sol.ok
    assert np.allclose(sol.x, -np.linalg.solve(H, c), atol=1e-14)


def test_shape_checks():
    with pytest.raises(ValueError):
        DenseQp(np.eye(2), np.zeros(3), np.zeros((1, 3)), np.zeros(1))
    with pytest.raises(ValueError):
        DenseQp(np.eye(2), np.zeros(2), np.zeros((2, 2)), np.zeros(1))


def test_infeasible_detected():
    # x <= -1 and -x <= -1 cannot both hold
    sol = solve(DenseQp(np.eye(1), [0.0], [[1.0], [-1.0]], [-1.0, -1.0]))
    assert sol.status == "infeasible"


def test_random_against_oracle(rng):
    worst = 0.0
    for _ in range(300):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 9))
        qp = random_qp(rng, n, m)
        sol = solve(qp)
        assert sol.ok
        x_o, obj_o, _ = oracle_solve(qp)
        assert np.max(qp.G @ sol.x - qp.h) <= 1e-8
        rel = abs(qp.objective(sol.x) - obj_o) / max(1.0, abs(obj_o))
        worst = max(worst, rel)
    assert worst <= 1e-6


def test_random_large_against_oracle(rng):
    for _ in range(10):
        qp = random_qp(rng, 12, 14)
        sol = solve(qp)
        x_o, obj_o, _ = oracle_solve(qp)
        assert sol.ok and abs(qp.objective(sol.x) - obj_o) <= 1e-6 * max(1.0, abs(obj_o))


def test_contact_subsets_agree_with_full_enumeration():
    # the pruned active-set family must not change the oracle answer
    for legs in ((0,), (1, 2), (0, 3)):
        for qp in random_instances(15, legs, seed=len(legs)):
            full = enumerate_qp(qp.H, qp.c, qp.G, qp.h, all_subsets(qp.m, qp.n))
            pruned = enumerate_qp(qp.H, qp.c, qp.G, qp.h, contact_subsets(len(legs)))
            assert pruned[1] == pytest.approx(full[1], rel=1e-12, abs=1e-12)


def test_contact_subsets_count():
    assert sum(1 for _ in contact_subsets(1)) == 18
    assert sum(1 for _ in contact_subsets(2)) == 18 ** 2


def test_gap_monotone(rng):
    for _ in range(50):
        qp = random_qp(rng, 6, 10)
        hist = []
        solve_stacked(qp.H[None], qp.c[None], qp.G[None], qp.h[None], None, history=hist)
        gaps = np.array([g[0] for g in hist])
        assert np.all(np.diff(gaps) <= 1e-12 * gaps[:-1])


def test_batch_of_one_and_copies(rng):
    qp = random_qp(rng, 6, 10)
    one = solve(qp)
    many = solve_batch([qp] * 1000)
    for s in many:
        assert np.array_equal(s.x, one.x)
        assert s.iterations == one.iterations


def test_permutation(rng):
    qps = [random_qp(rng, 6, 10) for _ in range(64)]
    base = solve_batch(qps)
    perm = rng.permutation(64)
    shuffled = solve_batch([qps[k] for k in perm])
    for j, k in enumerate(perm):
        assert np.array_equal(shuffled[j].x, base[k].x)


def test_mixed_shapes(rng):
    qps = [random_qp(rng, 3, 5), random_qp(rng, 6, 10), random_qp(rng, 3, 5)]
    out = solve_batch(qps)
    for qp, s in zip(qps, out):
        assert np.array_equal(s.x, solve(qp).x)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from([(0, 1, 2, 3), (0, 1, 3), (1, 2), (0,)]))
def test_contact_qp_properties(seed, legs):
    """Optimal solutions are cone-feasible and match the oracle."""
    qp = random_instances(1, legs, seed=seed)[0]
    sol = solve(qp)
    assert sol.ok and sol.gap <= 1e-8
    assert np.max(qp.G @ sol.x - qp.h) <= 1e-8
    x_o, _, _ = enumerate_qp(qp.H, qp.c, qp.G, qp.h, contact_subsets(len(legs)))
    assert relative_objective_error(qp, sol.x, x_o) <= 1e-6
