import numpy as np
import pytest

from centroidal_rl import gait
from centroidal_rl.dynamics import a1_params
from centroidal_rl.grf import achieved_accel
from centroidal_rl.env import BASE_OBS_DIM, LocomotionEnv, TaskConfig, make_env, reward, scale_action
from centroidal_rl.so3 import from_euler
from centroidal_rl.terrain import laikago_stones


def _task(**kw):
    kw.setdefault("robot", a1_params())
    kw.setdefault("gait", gait.trot())
    return TaskConfig(**kw)


def _still(**kw):
    return _task(init_height=0.0, init_velocity=0.0, init_tilt=0.0, **kw)


def test_reward_spot_values():
    t = _task(desired_velocity=0.5)
    z = t.p_z_desired
    zero = np.zeros(3)
    assert reward(z, np.array([0.5, 0, 0]), zero, t) == 1.0
    assert reward(z, np.array([0.6, 0, 0]), zero, t) == pytest.approx(0.5 * np.exp(-0.1) + 0.5, abs=1e-12)
    assert reward(z, np.array([0.6, 0, 0]), zero, t) == pytest.approx(0.95242, abs=1e-5)
    assert reward(z + 0.1, np.array([0.5, 0, 0]), zero, t) == pytest.approx(0.80326, abs=1e-5)


def test_scale_action():
    t = _task(lin_bound=10.0)
    assert np.array_equal(scale_action(np.zeros(6), t), np.zeros(6))
    assert scale_action(np.ones(6), t)[0] == 10.0
    assert scale_action(np.full(6, 1.2), t)[3] == 30.0
    assert scale_action(np.full(6, -3.0), t)[1] == -10.0


def test_observation_layout():
    env = make_env(_task(), 3)
    obs = env.observe()
    assert obs.shape == (3, BASE_OBS_DIM) == (3, 32)
    st_ = env.state
    assert np.allclose(obs[:, 0], st_.p[:, 2])
    assert np.array_equal(obs[:, 1:4], st_.pdot)
    assert np.array_equal(obs[:, 4:13], st_.R.reshape(3, 9))
    assert np.array_equal(obs[:, 13:16], st_.omega)
    assert np.array_equal(obs[:, 16:28], (env.feet - st_.p[:, None]).reshape(3, 12))
    assert np.array_equal(obs[:, 28:32], np.tile([0, 0.5, 0.5, 0], (3, 1)))
    # no horizontal displacement unless a task appends it
    env.state.p[:, 0] += 5.0
    env.feet[..., 0] += 5.0
    assert np.allclose(env.observe(), obs)
    beam = make_env(_task(extra_obs="py"), 2)
    assert beam.observe().shape == (2, 33)
    two = make_env(_task(gait=gait.two_leg(), extra_obs="pxy"), 2)
    assert two.observe().shape == (2, 34)
    assert np.array_equal(two.observe()[:, 32:], two.state.p[:, :2])


def test_reset_nominal_and_repeatable():
    env = make_env(_still(), 2)
    assert np.array_equal(env.state.p, [[0, 0, 0.3]] * 2)
    assert np.array_equal(env.state.R, np.tile(np.eye(3), (2, 1, 1)))
    a = make_env(_task(), 4, seed=3).observe()
    b = make_env(_task(), 4, seed=3).observe()
    assert np.array_equal(a, b)
    assert not np.array_equal(a, make_env(_task(), 4, seed=4).observe())


def test_two_leg_hover_reward():
    env = make_env(_still(gait=gait.two_leg(), desired_velocity=0.0), 1)
    _, r, done, info = env.step_accel(np.zeros((1, 6)))
    assert r[0] == pytest.approx(1.0, abs=1e-6)
    assert not done[0]
    assert info["qp_status"][0] == "optimal"


def test_boundary_changes_only_boundary_legs():
    env = make_env(_still(desired_velocity=0.5), 1)
    env.state.pdot[:] = (0.5, 0.0, 0.0)
    # tick until the next step lands a phase on a multiple of T
    while True:
        before = env.feet.copy()
        nxt = env.phases[0] + 1
        _, _, done, _ = env.step_accel(np.zeros((1, 6)))
        changed = np.any(env.feet[0] != before[0], axis=1)
        boundary = nxt % 60 == 0
        assert np.array_equal(changed, boundary) or not boundary.any() and not changed.any()
        if boundary.any():
            assert changed[boundary].all() and not changed[~boundary].any()
            break


def test_swing_foothold_constant_between_boundaries():
    env = make_env(_task(), 2, seed=1)
    held = env.feet.copy()
    for _ in range(25):
        env.step(np.zeros((2, 6)))
    # first boundary after reset is 30 ticks away for every leg
    assert np.array_equal(env.feet, held)


def test_tilt_termination():
    t = _still()
    env = make_env(t, 2)
    env.state.R[0] = from_euler([0.0, t.max_tilt + 0.05, 0.0])
    env.state.R[1] = from_euler([0.0, t.max_tilt - 0.05, 0.0])
    _, r, done, info = env.step_accel(np.zeros((2, 6)))
    assert done.tolist() == [True, False]
    assert info["terminated"][0] and not info["truncated"][0]


def test_truncation_and_sticky_done():
    env = make_env(_still(gait=gait.two_leg(), desired_velocity=0.0, episode_length=5), 1)
    for k in range(5):
        _, _, done, info = env.step_accel(np.zeros((1, 6)))
    assert done[0] and info["truncated"][0]
    state = env.state.copy()
    _, r, done, info = env.step_accel(np.zeros((1, 6)))
    assert r[0] == 0.0 and done[0] and info["qp_status"][0] == "done"
    assert np.array_equal(env.state.p, state.p)


def test_auto_reset():
    env = make_env(_still(gait=gait.two_leg(), desired_velocity=0.0, episode_length=3), 2,
                   auto_reset=True)
    for _ in range(3):
        obs, _, done, info = env.step_accel(np.zeros((2, 6)))
    assert done.all() and "final_obs" in info
    assert (env.t == 0).all() and not env.done.any()
    assert np.array_equal(obs, env.observe())


def _rollout(env, actions):
    out = []
    for a in actions:
        obs, r, d, info = env.step(a)
        out.append((obs.copy(), r.copy(), d.copy(), info["forces"].copy()))
    return out


def test_batch_of_one_matches_batch(rng):
    task = _task()
    actions = rng.uniform(-0.2, 0.2, (80, 6, 6))
    batch = make_env(task, 6, seed=2)
    res = _rollout(batch, actions)
    for k in (0, 4):
        single = make_env(task, 1, seed=2, env_ids=[k])
        res1 = _rollout(single, actions[:, k:k + 1])
        for (o, r, d, f), (o1, r1, d1, f1) in zip(res, res1):
            assert np.array_equal(o[k], o1[0]) and r[k] == r1[0] and d[k] == d1[0]
            assert np.array_equal(f[k], f1[0])


def test_permutation_equivariance(rng):
    task = _task(terrain=laikago_stones)
    actions = rng.uniform(-0.2, 0.2, (60, 5, 6))
    perm = np.array([3, 0, 4, 1, 2])
    a = _rollout(make_env(task, 5, seed=7), actions)
    b = _rollout(make_env(task, 5, seed=7, env_ids=perm), actions[:, perm])
    for (o, r, d, f), (ob, rb, db, fb) in zip(a, b):
        assert np.array_equal(o[perm], ob) and np.array_equal(r[perm], rb)


def test_deterministic(rng):
    actions = rng.uniform(-1, 1, (50, 4, 6))
    a = _rollout(make_env(_task(), 4, seed=9), actions)
    b = _rollout(make_env(_task(), 4, seed=9), actions)
    for x, y in zip(a, b):
        for u, v in zip(x, y):
            assert np.array_equal(u, v)


def test_info_and_residual():
    env = make_env(_still(gait=gait.two_leg(), desired_velocity=0.0), 1)
    before, feet = env.state.copy(), env.feet.copy()
    a_d = np.zeros((1, 6))
    _, _, _, info = env.step_accel(a_d)
    again = achieved_accel(info["forces"], before, feet, env.sim)
    assert np.allclose(info["achieved"], again, atol=1e-12)
    assert info["qp_residual"][0] == pytest.approx(np.linalg.norm(again - a_d), rel=1e-12)
    # the force regularizer leaves only a small hover shortfall
    assert info["qp_residual"][0] < 0.05
    for key in ("a_d", "forces", "terminated", "truncated", "no_foothold", "live", "height", "theta"):
        assert key in info


def test_task_validation():
    with pytest.raises(ValueError):
        _task(episode_length=0)
    with pytest.raises(ValueError):
        _task(extra_obs="yaw")
    with pytest.raises(ValueError):
        LocomotionEnv(_task(), 3, env_ids=[0, 1])
