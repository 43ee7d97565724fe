"""Raibert-style touchdown targets with leg-length clamping and terrain snapping."""
import logging
from dataclasses import dataclass

import numpy as np

from .so3 import yaw_rotation
from .terrain import NoFootholdError, local_grid, snap_to_feasible

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FootPlannerConfig:
    k_foot: tuple = (0.375, 0.045)  # from the trot stability sweep (see README)
    grid_resolution: float = 0.02
    grid_extent: float = 1.0
    yaw_only: bool = True

    def __post_init__(self):
        k = tuple(float(v) for v in self.k_foot)
        if len(k) != 2 or min(k) < 0:
            raise ValueError("k_foot must be two non-negative gains")
        object.__setattr__(self, "k_foot", k)


def raibert_offset(r_ref_xy, pdot_xy, cfg):
    return np.asarray(r_ref_xy, float) + np.asarray(cfg.k_foot) * np.asarray(pdot_xy, float)


def clamp_leg_length(p_foot, p, l_max):
    """Closest point to ``p_foot`` within ``l_max`` of ``p``."""
    if not l_max > 0:
        raise ValueError("l_max must be positive")
    p_foot = np.asarray(p_foot, float)
    p = np.asarray(p, float)
    d = p_foot - p
    n = np.linalg.norm(d, axis=-1, keepdims=True)
    down = np.zeros_like(d)
    down[..., 2] = -1.0
    safe = np.where(n > 0, n, 1.0)
    direction = np.where(n > 0, d / safe, down)
    clamped = p + l_max * direction
    return np.where((n >= l_max) | (n == 0), clamped, p_foot)


def _heading(R, yaw_only):
    return yaw_rotation(R) if yaw_only else np.asarray(R, float)


def raibert_target(p, pdot, R, leg, params, cfg):
    """World-frame xy target of ``leg`` before any terrain handling."""
    off = raibert_offset(params.r_ref[leg, :2], np.asarray(pdot)[..., :2], cfg)
    H = _heading(R, cfg.yaw_only)
    return np.asarray(p)[..., :2] + (H[..., :2, :2] @ off[..., None])[..., 0]


def _finish(target_xy, p, terrain, params, cfg):
    if not terrain.always_feasible and not bool(terrain.feasible(*target_xy)):
        grid = local_grid(terrain, p[:2], cfg.grid_resolution, cfg.grid_extent)
        target_xy = snap_to_feasible(grid, target_xy)
    foot = np.array([target_xy[0], target_xy[1], float(terrain.height_at(*target_xy))])
    clamped = clamp_leg_length(foot, p, params.l_max)
    if np.array_equal(clamped, foot):
        return foot
    if terrain.always_feasible or bool(terrain.feasible(clamped[0], clamped[1])):
        return clamped
    # re-snap once among feasible cells that the leg can reach
    grid = local_grid(terrain, p[:2], cfg.grid_resolution, cfg.grid_extent)
    X, Y = np.meshgrid(grid.xs, grid.ys, indexing="ij")
    reach = (X - p[0]) ** 2 + (Y - p[1]) ** 2 + (grid.heights - p[2]) ** 2 <= params.l_max ** 2
    grid.feasible = grid.feasible & reach
    try:
        xy = snap_to_feasible(grid, clamped[:2])
    except NoFootholdError:
        log.debug("accepting clamped foothold off feasible terrain at %s", clamped)
        return clamped
    return np.array([xy[0], xy[1], float(terrain.height_at(*xy))])


def plan_touchdown(state, leg, terrain, cfg, params):
    """World foothold for ``leg`` planned at the start of its swing."""
    p = np.asarray(state.p, float)
    target = raibert_target(p, state.pdot, state.R, leg, params, cfg)
    return _finish(target, p, terrain, params, cfg)


def plan_touchdown_batch(p, pdot, R, legs, terrains, cfg, params):
    """Plan footholds for rows ``(p[k], legs[k])`` on terrain ``terrains[k]``.

    Returns ``(footholds, failed)``; ``failed[k]`` marks rows whose local grid
    held no feasible cell. Flat rows are handled fully vectorized, rows
    needing terrain queries one at a time.
    """
    legs = np.asarray(legs)
    off = params.r_ref[legs, :2] + np.asarray(cfg.k_foot) * pdot[:, :2]
    H = _heading(R, cfg.yaw_only)
    xy = p[:, :2] + (H[:, :2, :2] @ off[..., None])[..., 0]
    out = np.zeros((len(legs), 3))
    out[:, :2] = xy
    out = clamp_leg_length(out, p, params.l_max)
    failed = np.zeros(len(legs), dtype=bool)
    for k, terrain in enumerate(terrains):
        if terrain.always_feasible and not terrain.has_height:
            continue
        try:
            out[k] = _finish(xy[k], p[k], terrain, params, cfg)
        except NoFootholdError:
            failed[k] = True
    return out, failed
