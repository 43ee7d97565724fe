import numpy as np
import pytest

from centroidal_rl import gait
from centroidal_rl.gait import (GaitConfig, advance, at_touchdown_boundary, in_swing,
                                normalized_phase, stance_mask)


def test_presets():
    t = gait.trot()
    assert (t.T, t.T_swing, t.phi0) == (60, 30, (0, 30, 30, 0))
    w = gait.walk()
    assert (w.T, w.T_swing, w.phi0) == (120, 30, (0, 90, 60, 30))
    f = gait.fast_trot()
    assert (f.T, f.T_swing) == (40, 20)
    two = gait.two_leg()
    assert two.frozen and two.phi0 == (31, 0, 0, 31)
    with pytest.raises(ValueError):
        gait.gait_preset("gallop")


def test_advance():
    assert advance(np.array([0, 30, 30, 0]), gait.trot()).tolist() == [1, 31, 31, 1]
    assert advance(np.array([31, 0, 0, 31]), gait.two_leg()).tolist() == [31, 0, 0, 31]
    assert advance(np.array([59]), gait.trot()).tolist() == [60]


def test_swing_rule():
    t = gait.trot()
    assert in_swing(0, t)
    assert not in_swing(31, t)
    assert in_swing(90, t)
    assert in_swing(30, t)
    strict = GaitConfig(60, 30, (0, 30, 30, 0), strict_swing=True)
    assert not in_swing(30, strict)


def test_boundary_and_phase():
    t = gait.trot()
    assert at_touchdown_boundary(60, t) and not at_touchdown_boundary(59, t)
    two = gait.two_leg()
    assert not np.any(at_touchdown_boundary(np.arange(200), two))
    assert normalized_phase(0, t) == 0.0
    assert normalized_phase(30, t) == 0.5
    assert normalized_phase(119, gait.walk()) == pytest.approx(0.9917, abs=1e-4)


def test_trot_pairs_and_one_tick_flight():
    t = gait.trot()
    phi = t.initial_phases()
    flight = 0
    for _ in range(3 * t.T):
        s = stance_mask(phi, t)
        assert s[0] == s[3] and s[1] == s[2]
        if not s.any():
            flight += 1
            assert phi[0] % t.T in (0, 30)
        phi = advance(phi, t)
    # the inclusive swing rule leaves one ballistic tick per half cycle
    assert flight == 6


def test_walk_keeps_two_stance_legs():
    w = gait.walk()
    phi = w.initial_phases()
    for _ in range(w.T):
        assert stance_mask(phi, w).sum() >= 2
        phi = advance(phi, w)


def test_two_leg_stance_legs():
    two = gait.two_leg()
    assert stance_mask(two.initial_phases(), two).tolist() == [True, False, False, True]


def test_invalid_config():
    with pytest.raises(ValueError):
        GaitConfig(60, 60, (0, 0, 0, 0))
    with pytest.raises(ValueError):
        GaitConfig(60, 30, (0, 0, 0))
