import numpy as np
import pytest

from centroidal_rl import gait
from centroidal_rl.controllers import (CentroidalPD, PdGains, PolicyController, pd_accel,
                                       tuned_gains)
from centroidal_rl.dynamics import CentroidalState, a1_params, laikago_params
from centroidal_rl.env import TaskConfig
from centroidal_rl.policy import MlpPolicy
from centroidal_rl.rollout import run_episodes
from centroidal_rl.so3 import from_euler


def _task(robot=None, **kw):
    return TaskConfig(robot=robot or a1_params(), gait=gait.trot(), name="flat_trot", **kw)


def _at_target(task):
    st_ = CentroidalState.standing(task.robot)
    st_.pdot[0] = task.desired_velocity
    return st_


def test_zero_error_gives_zero():
    task = _task()
    g = PdGains(kp=(10,) * 6, kd=(3,) * 6)
    assert np.array_equal(pd_accel(_at_target(task), task, g), np.zeros(6))


def test_height_example():
    task = _task()
    st_ = _at_target(task)
    st_.p[2] -= 0.05
    g = PdGains(kp=(0, 0, 100, 0, 0, 0), kd=(0, 0, 10, 0, 0, 0))
    assert pd_accel(st_, task, g)[2] == pytest.approx(5.0, abs=1e-12)


def test_roll_example():
    task = _task()
    st_ = _at_target(task)
    st_.R = from_euler([0.1, 0.0, 0.0])
    g = PdGains(kp=(0, 0, 0, 50, 0, 0), kd=(0,) * 6)
    assert pd_accel(st_, task, g)[3] == pytest.approx(-5.0, abs=1e-12)


def test_forward_position_untracked():
    task = _task()
    st_ = _at_target(task)
    st_.p[0] = 7.0
    g = PdGains(kp=(100,) * 6, kd=(1,) * 6)
    assert np.array_equal(pd_accel(st_, task, g), np.zeros(6))


def test_linear_in_errors(rng):
    task = _task()
    g = PdGains(kp=tuple(rng.uniform(0, 50, 6)), kd=tuple(rng.uniform(0, 10, 6)))
    base = _at_target(task)
    for _ in range(20):
        dp, dv, dw = rng.normal(0, 0.05, 3), rng.normal(0, 0.2, 3), rng.normal(0, 0.3, 3)
        one = base.copy()
        one.p = one.p + dp
        one.pdot = one.pdot + dv
        one.omega = dw
        two = base.copy()
        two.p = two.p + 2 * dp
        two.pdot = two.pdot + 2 * dv
        two.omega = 2 * dw
        assert np.allclose(pd_accel(two, task, g), 2 * pd_accel(one, task, g), rtol=1e-12, atol=1e-12)


def test_gain_validation():
    with pytest.raises(ValueError):
        PdGains(kp=(-1, 0, 0, 0, 0, 0), kd=(0,) * 6)
    with pytest.raises(ValueError):
        tuned_gains("spot")


@pytest.mark.parametrize("robot", [a1_params(), laikago_params()], ids=["a1", "laikago"])
def test_tuned_pd_trots_ten_seconds(robot):
    task = _task(robot)
    pd = CentroidalPD.for_robot(robot.name)
    traj, _ = run_episodes(pd, task, steps=1000, runs=10, seed=0)
    assert not traj.terminated.any()
    assert np.max(np.abs(traj.p[..., 2] - task.p_z_desired)) <= 0.1
    assert abs(traj.pdot[500:, :, 0].mean() - task.desired_velocity) < 0.05


def test_estimator_api():
    pd = CentroidalPD.for_robot("a1")
    assert pd.get_params()["kp"] == tuned_gains("a1").kp
    assert pd.fit().gains_ == tuned_gains("a1")
    pol = MlpPolicy(32, seed=0)
    ctrl = PolicyController(pol)
    ctrl.check_task(_task())
    with pytest.raises(ValueError):
        ctrl.check_task(_task(extra_obs="py"))
    with pytest.raises(ValueError):
        ctrl.predict(np.zeros(32))
    assert ctrl.predict(np.zeros((2, 32))).shape == (2, 6)
