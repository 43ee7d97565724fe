import numpy as np
import pytest

from centroidal_rl.dynamics import CentroidalState, euler_step, net_wrench
from centroidal_rl.grf import (BALLISTIC, QpWeights, accel_map, achieved_accel, build_qp,
                               qp_cost, transcribe)
from centroidal_rl.oracle import contact_subsets, enumerate_qp
from centroidal_rl.so3 import from_euler


def _stand(a1):
    st_ = CentroidalState.standing(a1)
    feet = st_.p + a1.r_ref
    feet[:, 2] = 0.0
    return st_, feet


def test_accel_map_blocks(a1):
    st_, feet = _stand(a1)
    A, bias = accel_map(st_, feet, a1)
    f = np.zeros(12)
    f[2] = 50.0
    assert np.allclose((A @ f)[:3], [0, 0, 50.0 / 12.0], atol=1e-14)
    assert np.array_equal(bias[3:], np.zeros(3))
    assert np.allclose(bias[:3], [0, 0, -a1.g])


def test_accel_map_matches_simulator(a1, rng):
    st_ = CentroidalState(np.array([0.1, 0.0, 0.3]), rng.normal(size=3),
                          from_euler(rng.uniform(-0.3, 0.3, 3)), rng.normal(size=3))
    feet = st_.p + a1.r_ref + rng.uniform(-0.05, 0.05, (4, 3))
    forces = rng.uniform(-5, 40, (4, 3))
    A, bias = accel_map(st_, feet, a1)
    via_map = A @ forces.reshape(12) + bias
    assert np.allclose(via_map, achieved_accel(forces, st_, feet, a1), atol=1e-12)
    # one Euler step realizes exactly the reported acceleration
    f_net, tau_net = net_wrench(st_, feet, forces, a1)
    nxt = euler_step(st_, f_net, tau_net, a1)
    acc = achieved_accel(forces, st_, feet, a1)
    assert np.array_equal(nxt.pdot, st_.pdot + 0.01 * acc[:3])
    assert np.array_equal(nxt.omega, st_.omega + 0.01 * acc[3:])


def test_free_fall_accel(a1):
    st_, feet = _stand(a1)
    st_.omega = np.array([0.3, -0.2, 0.5])
    acc = achieved_accel(np.zeros((4, 3)), st_, feet, a1)
    assert np.allclose(acc[:3], [0, 0, -a1.g])
    I = a1.inertia
    w = st_.omega
    assert np.allclose(acc[3:], -np.linalg.solve(I, np.cross(w, I @ w)), atol=1e-14)


def test_hover_four_feet(a1):
    st_, feet = _stand(a1)
    sol = transcribe(np.zeros(6), st_, feet, np.ones(4, bool), a1)
    assert sol.status == "optimal"
    assert np.allclose(sol.forces[:, 2], 29.43, atol=0.1)
    assert np.max(np.abs(sol.forces[:, :2])) < 0.1


@pytest.mark.parametrize("pair", [(0, 3), (1, 2)])
def test_hover_diagonal(a1, pair):
    st_, feet = _stand(a1)
    stance = np.zeros(4, bool)
    stance[list(pair)] = True
    sol = transcribe(np.zeros(6), st_, feet, stance, a1)
    assert np.allclose(sol.forces[list(pair), 2], a1.mass * a1.g / 2, atol=0.1)
    swing = [k for k in range(4) if k not in pair]
    assert np.array_equal(sol.forces[swing], np.zeros((2, 3)))


def test_lateral_demand_binds_cone(a1):
    st_, feet = _stand(a1)
    a_d = np.array([0.0, 12.0, 0.0, 0, 0, 0])
    w = QpWeights()
    sol = transcribe(a_d, st_, feet, np.ones(4, bool), a1, w)
    f = sol.forces
    assert np.any(np.abs(np.abs(f[:, 1]) - w.mu * f[:, 2]) < 1e-6)
    # the oracle agrees on the optimum
    batch = CentroidalState(st_.p[None], st_.pdot[None], st_.R[None], st_.omega[None])
    A, bias = accel_map(batch, feet[None], a1)
    H, c, G, h, _ = build_qp(a_d[None], A, bias, np.array([[0, 1, 2, 3]]), a1, w)
    x_o, _, active = enumerate_qp(H[0], c[0], G[0], h[0], contact_subsets(4))
    assert np.allclose(f.reshape(12), x_o, atol=1e-4)


def test_ballistic_status(a1):
    st_, feet = _stand(a1)
    sol = transcribe(np.zeros(6), st_, feet, np.zeros(4, bool), a1)
    assert sol.status == BALLISTIC
    assert np.array_equal(sol.forces, np.zeros((4, 3)))


def test_batch_constraints_and_local_optimality(a1, rng):
    n = 64
    st_ = CentroidalState.standing(a1, n)
    st_.pdot = rng.normal(0, 0.3, (n, 3))
    st_.R = from_euler(rng.uniform(-0.2, 0.2, (n, 3)))
    st_.omega = rng.normal(0, 0.5, (n, 3))
    feet = st_.p[:, None, :] + a1.r_ref[None] + rng.uniform(-0.05, 0.05, (n, 4, 3))
    feet[..., 2] = 0.0
    stance = rng.random((n, 4)) < 0.7
    stance[:, 0] |= ~stance.any(axis=1)
    a_d = rng.uniform(-6, 6, (n, 6))
    w = QpWeights()
    sol = transcribe(a_d, st_, feet, stance, a1, w)
    f = sol.forces
    assert np.all(f[~stance] == 0.0)
    fz = f[..., 2][stance]
    assert np.all(fz >= w.f_z_min - 1e-8)
    assert np.all(np.abs(f[..., 0][stance]) <= w.mu * fz + 1e-8)
    assert np.all(np.abs(f[..., 1][stance]) <= w.mu * fz + 1e-8)
    cost = qp_cost(f, a_d, st_, feet, a1, w)
    for k in range(0, n, 8):
        legs = np.nonzero(stance[k])[0]
        for leg in legs:
            for comp in range(3):
                for d in (1e-3, -1e-3):
                    g = f[k].copy()
                    g[leg, comp] += d
                    g[leg, 2] = max(g[leg, 2], w.f_z_min)
                    lim = w.mu * g[leg, 2]
                    g[leg, :2] = np.clip(g[leg, :2], -lim, lim)
                    sub = st_.take(np.array([k]))
                    new = qp_cost(g[None], a_d[k:k + 1], sub, feet[k:k + 1], a1, w)[0]
                    assert new >= cost[k] - 1e-9 * max(1.0, cost[k])


def test_residual_matches_cost(a1, rng):
    st_, feet = _stand(a1)
    a_d = np.array([1.0, -0.5, 2.0, 3.0, -4.0, 1.0])
    w = QpWeights(Q=(1, 1, 1, 1, 1, 1), lam=1e-4)
    sol = transcribe(a_d, st_, feet, np.ones(4, bool), a1, w)
    resid = achieved_accel(sol.forces, st_, feet, a1) - a_d
    cost = qp_cost(sol.forces, a_d, st_, feet, a1, w)
    assert cost == pytest.approx(resid @ resid + w.lam * np.sum(sol.forces ** 2), rel=1e-12)


def test_weights_validation():
    with pytest.raises(ValueError):
        QpWeights(lam=0.0)
    with pytest.raises(ValueError):
        QpWeights(mu=2.0)
    with pytest.raises(ValueError):
        QpWeights(Q=(1, 1, 1, 1, 1, 0))
    with pytest.raises(ValueError):
        QpWeights(f_z_min=-1)
