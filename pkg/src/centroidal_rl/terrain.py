"""Terrain generators and foothold feasibility queries.

Each terrain answers two vectorized questions about world ``(x, y)``
points: the ground height and whether a foot may be placed there.
"""
import json
from dataclasses import dataclass

import numpy as np
from scipy import signal


class NoFootholdError(RuntimeError):
    """Raised when a local grid contains no feasible foothold."""


class Terrain:
    kind = "base"

    def height_at(self, x, y):
        x = np.asarray(x, dtype=float)
        return np.zeros(np.broadcast(x, np.asarray(y)).shape)

    def feasible(self, x, y):
        x = np.asarray(x, dtype=float)
        return np.ones(np.broadcast(x, np.asarray(y)).shape, dtype=bool)

    @property
    def has_height(self):
        return False

    @property
    def always_feasible(self):
        return True

    def to_dict(self):
        return {"kind": self.kind}

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


class Flat(Terrain):
    kind = "flat"


@dataclass
class BalanceBeam(Terrain):
    half_width: float = 0.05
    kind = "balance_beam"

    def feasible(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.abs(y) <= self.half_width

    @property
    def always_feasible(self):
        return False

    def to_dict(self):
        return {"kind": self.kind, "half_width": self.half_width}


@dataclass
class Gap(Terrain):
    width: float = 0.12
    x_position: float = 0.5
    kind = "gap"

    def feasible(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return (x < self.x_position) | (x > self.x_position + self.width)

    @property
    def always_feasible(self):
        return False

    def to_dict(self):
        return {"kind": self.kind, "width": self.width, "x_position": self.x_position}


@dataclass
class WaveField(Terrain):
    period: float = 2.5
    peak_to_valley: float = 0.7
    kind = "wave_field"

    def height_at(self, x, y):
        k = 2.0 * np.pi / self.period
        return 0.25 * self.peak_to_valley * (np.sin(k * np.asarray(x, float)) + np.sin(k * np.asarray(y, float)))

    @property
    def has_height(self):
        return True

    def to_dict(self):
        return {"kind": self.kind, "period": self.period, "peak_to_valley": self.peak_to_valley}


class FilteredNoise(Terrain):
    """Sum of two independent low-passed white-noise profiles, ``h(x) + h(y)``.

    Each profile passes white noise through a second-order Butterworth
    filter (``cutoff`` in cycles per metre), is scaled to peak ``amplitude``
    and, if needed, shrunk so the combined gradient never exceeds
    ``max_slope_deg``.
    """

    kind = "filtered_noise"

    def __init__(self, cutoff=1.0, amplitude=0.05, seed=0, max_slope_deg=20.0,
                 half_length=20.0, resolution=0.01):
        self.cutoff = float(cutoff)
        self.amplitude = float(amplitude)
        self.seed = int(seed)
        self.max_slope_deg = float(max_slope_deg)
        self.half_length = float(half_length)
        self.resolution = float(resolution)
        n = int(round(2 * half_length / resolution)) + 1
        self.grid = np.linspace(-half_length, half_length, n)
        rng = np.random.default_rng([self.seed, 7919])
        fs = 1.0 / resolution
        b, a = signal.butter(2, self.cutoff / (0.5 * fs))
        profiles = []
        for _ in range(2):
            noise = rng.standard_normal(n + 2000)
            h = signal.lfilter(b, a, noise)[2000:]  # drop the filter transient
            h -= h.mean()
            h *= self.amplitude / np.max(np.abs(h))
            profiles.append(h)
        hx, hy = profiles
        slope = np.hypot(np.max(np.abs(np.diff(hx))), np.max(np.abs(np.diff(hy)))) / resolution
        limit = np.tan(np.radians(self.max_slope_deg))
        if slope > limit:
            hx *= limit / slope
            hy *= limit / slope
        self.hx, self.hy = hx, hy

    def height_at(self, x, y):
        return np.interp(x, self.grid, self.hx) + np.interp(y, self.grid, self.hy)

    @property
    def has_height(self):
        return True

    def to_dict(self):
        return {"kind": self.kind, "cutoff": self.cutoff, "amplitude": self.amplitude,
                "seed": self.seed, "max_slope_deg": self.max_slope_deg,
                "half_length": self.half_length, "resolution": self.resolution}


class SteppingStones(Terrain):
    """Axis-aligned square stones on a jittered lattice.

    Gaps between neighbouring stones are drawn uniformly from
    ``[spacing_min, spacing_max]`` independently along x and y, so stones form
    the product of an x-interval list and a y-interval list. A point is a
    valid foothold when it lies on a stone at least ``edge_margin`` from its
    border. With ``center_gap`` the y lattice is grown outwards from a gap
    centred on y = 0, so a robot spawned there has a stone row on each side.
    """

    kind = "stepping_stones"

    def __init__(self, spacing_min=0.10, spacing_max=0.20, stone_size=0.20, edge_margin=0.04,
                 seed=0, x_range=(-1.5, 12.0), y_range=(-1.5, 1.5), x_starts=None, y_starts=None,
                 center_gap=False):
        if not 0 < spacing_min <= spacing_max:
            raise ValueError("need 0 < spacing_min <= spacing_max")
        if not 0 <= 2 * edge_margin < stone_size:
            raise ValueError("edge_margin leaves no usable stone area")
        self.spacing_min = float(spacing_min)
        self.spacing_max = float(spacing_max)
        self.stone_size = float(stone_size)
        self.edge_margin = float(edge_margin)
        self.seed = int(seed)
        self.center_gap = bool(center_gap)
        self.x_range = tuple(float(v) for v in x_range)
        self.y_range = tuple(float(v) for v in y_range)
        rng = np.random.default_rng([self.seed, 104729])
        if x_starts is None:
            x_starts = self._lattice(rng, *self.x_range)
        if y_starts is None and self.center_gap:
            y_starts = self._centered_lattice(rng, *self.y_range)
        elif y_starts is None:
            y_starts = self._lattice(rng, *self.y_range)
        self.x_starts = np.asarray(x_starts, dtype=float)
        self.y_starts = np.asarray(y_starts, dtype=float)

    def _lattice(self, rng, lo, hi):
        starts = []
        pos = lo + rng.uniform(0.0, self.spacing_max)
        while pos < hi:
            starts.append(pos)
            pos += self.stone_size + rng.uniform(self.spacing_min, self.spacing_max)
        return starts

    def _centered_lattice(self, rng, lo, hi):
        half = 0.5 * rng.uniform(self.spacing_min, self.spacing_max)
        up, pos = [], half
        while pos < hi:
            up.append(pos)
            pos += self.stone_size + rng.uniform(self.spacing_min, self.spacing_max)
        down, pos = [], -half - self.stone_size
        while pos + self.stone_size > lo:
            down.append(pos)
            pos -= self.stone_size + rng.uniform(self.spacing_min, self.spacing_max)
        return down[::-1] + up

    @staticmethod
    def _inside(v, starts, size, margin):
        idx = np.searchsorted(starts, v, side="right") - 1
        valid = idx >= 0
        lo = starts[np.clip(idx, 0, None)]
        return valid & (v >= lo + margin) & (v <= lo + size - margin)

    def on_stone(self, x, y, margin=0.0):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return (self._inside(x, self.x_starts, self.stone_size, margin)
                & self._inside(y, self.y_starts, self.stone_size, margin))

    def feasible(self, x, y):
        return self.on_stone(x, y, self.edge_margin)

    @property
    def always_feasible(self):
        return False

    def gaps(self, axis="x"):
        starts = self.x_starts if axis == "x" else self.y_starts
        return np.diff(starts) - self.stone_size

    def rectangles(self):
        s = self.stone_size
        return [[float(x0), float(y0), float(x0 + s), float(y0 + s)]
                for x0 in self.x_starts for y0 in self.y_starts]

    def to_dict(self):
        return {"kind": self.kind, "spacing_min": self.spacing_min,
                "spacing_max": self.spacing_max, "stone_size": self.stone_size,
                "edge_margin": self.edge_margin, "seed": self.seed, "center_gap": self.center_gap,
                "x_range": list(self.x_range), "y_range": list(self.y_range),
                "x_starts": self.x_starts.tolist(), "y_starts": self.y_starts.tolist(),
                "stones": self.rectangles()}


class HeightOverlay(Terrain):
    """Feasibility of ``base`` combined with the heights of ``heights``."""

    kind = "overlay"

    def __init__(self, base, heights):
        self.base = base
        self.heights = heights

    def height_at(self, x, y):
        return self.heights.height_at(x, y)

    def feasible(self, x, y):
        return self.base.feasible(x, y)

    @property
    def has_height(self):
        return True

    @property
    def always_feasible(self):
        return self.base.always_feasible

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict(), "heights": self.heights.to_dict()}


def generate_stepping_stones(spacing_min, spacing_max, stone_size=0.20, seed=0,
                             extent=((-1.5, 12.0), (-1.5, 1.5)), edge_margin=0.04, center_gap=True):
    return SteppingStones(spacing_min, spacing_max, stone_size, edge_margin, seed,
                          x_range=extent[0], y_range=extent[1], center_gap=center_gap)


def laikago_stones(seed=0):
    return generate_stepping_stones(0.10, 0.20, seed=seed)


def a1_stones(seed=0):
    return generate_stepping_stones(0.05, 0.15, seed=seed)


def terrain_from_dict(d):
    d = dict(d)
    kind = d.pop("kind")
    if kind == "flat":
        return Flat()
    if kind == "balance_beam":
        return BalanceBeam(**d)
    if kind == "gap":
        return Gap(**d)
    if kind == "wave_field":
        return WaveField(**d)
    if kind == "filtered_noise":
        return FilteredNoise(**d)
    if kind == "stepping_stones":
        d.pop("stones", None)
        return SteppingStones(**d)
    if kind == "overlay":
        return HeightOverlay(terrain_from_dict(d["base"]), terrain_from_dict(d["heights"]))
    raise ValueError(f"unknown terrain kind {kind!r}")


@dataclass
class FeasibilityGrid:
    center: np.ndarray
    extent: float
    resolution: float
    xs: np.ndarray
    ys: np.ndarray
    feasible: np.ndarray  # (len(xs), len(ys)), indexed [ix, iy]
    heights: np.ndarray

    @property
    def shape(self):
        return self.feasible.shape


def local_grid(terrain, center, resolution=0.02, extent=1.0):
    """Sample ``terrain`` on an ``extent`` x ``extent`` square around ``center``."""
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    n = int(round(extent / resolution)) + 1
    half = 0.5 * extent
    center = np.asarray(center, dtype=float)[:2]
    xs = center[0] + np.linspace(-half, half, n)
    ys = center[1] + np.linspace(-half, half, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return FeasibilityGrid(center, extent, resolution, xs, ys,
                           terrain.feasible(X, Y), terrain.height_at(X, Y))


def snap_to_feasible(grid, target):
    """Feasible grid point nearest to ``target``; ties go to smaller x, then y."""
    ix, iy = np.nonzero(grid.feasible)
    if ix.size == 0:
        raise NoFootholdError("no feasible foothold in local grid")
    px, py = grid.xs[ix], grid.ys[iy]
    d2 = (px - target[0]) ** 2 + (py - target[1]) ** 2
    best = np.lexsort((py, px, d2))[0]
    return np.array([px[best], py[best]])
