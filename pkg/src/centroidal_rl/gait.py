"""Integer phase clocks and gait presets.

Phases are unbounded integers; the cycle length is applied with ``mod`` at
every use so touchdown detection stays exact.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GaitConfig:
    T: int
    T_swing: int
    phi0: tuple
    frozen: bool = False
    name: str = "custom"
    strict_swing: bool = False  # use ``<`` instead of ``<=`` for swing detection

    def __post_init__(self):
        if not 0 < self.T_swing < self.T:
            raise ValueError(f"need 0 < T_swing < T, got T={self.T}, T_swing={self.T_swing}")
        if len(self.phi0) != 4 or min(self.phi0) < 0:
            raise ValueError("phi0 must hold four non-negative phases")
        object.__setattr__(self, "phi0", tuple(int(v) for v in self.phi0))

    def initial_phases(self, batch=None):
        phi = np.array(self.phi0, dtype=np.int64)
        if batch is None:
            return phi
        return np.tile(phi, (batch, 1))


def trot():
    return GaitConfig(T=60, T_swing=30, phi0=(0, 30, 30, 0), name="trot")


def walk():
    return GaitConfig(T=120, T_swing=30, phi0=(0, 90, 60, 30), name="walk")


def fast_trot():
    return GaitConfig(T=40, T_swing=20, phi0=(0, 20, 20, 0), name="fast_trot")


def two_leg():
    return GaitConfig(T=60, T_swing=30, phi0=(31, 0, 0, 31), frozen=True, name="two_leg")


GAIT_PRESETS = {"trot": trot, "walk": walk, "fast_trot": fast_trot, "two_leg": two_leg}


def gait_preset(name):
    try:
        return GAIT_PRESETS[name]()
    except KeyError:
        raise ValueError(
            f"unknown gait {name!r}; expected one of {sorted(GAIT_PRESETS)}"
        ) from None


def advance(phases, cfg):
    phases = np.asarray(phases)
    if cfg.frozen:
        return phases.copy()
    return phases + 1


def in_swing(phi, cfg):
    m = np.mod(phi, cfg.T)
    return m < cfg.T_swing if cfg.strict_swing else m <= cfg.T_swing


def stance_mask(phases, cfg):
    return ~in_swing(phases, cfg)


def at_touchdown_boundary(phi, cfg):
    hit = np.mod(phi, cfg.T) == 0
    if cfg.frozen:
        return np.zeros_like(hit)
    return hit


def normalized_phase(phi, cfg):
    return np.mod(phi, cfg.T) / cfg.T
