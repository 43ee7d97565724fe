"""Run configuration: a flat ``key = value`` text format and the task presets.

Keys may carry dotted sections, e.g.::

    robot = a1
    task = flat_trot
    controller = policy
    seed = 0
    ppo.iterations = 500
    task.desired_velocity = 0.4
    terrain.kind = gap
    terrain.width = 0.12

Values are parsed as int, float, bool (``true``/``false``), ``none`` or a
comma-separated list; anything else stays a string. ``#`` starts a comment.
"""
import functools
import os
from dataclasses import dataclass, field, fields

from .dynamics import robot_preset
from .env import TaskConfig
from .footplan import FootPlannerConfig
from .gait import gait_preset
from .grf import QpWeights
from .ppo import PpoConfig
from .terrain import (BalanceBeam, Flat, Gap, SteppingStones, a1_stones, laikago_stones,
                      terrain_from_dict)

OUTPUT_ROOT_ENV = "CENTROIDAL_RL_OUTPUT"
CONTROLLERS = ("policy", "pd")


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


def parse_value(text):
    t = text.strip()
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null", ""):
        return None
    if "," in t:
        return [parse_value(p) for p in t.split(",") if p.strip()]
    for cast in (int, float):
        try:
            return cast(t)
        except ValueError:
            pass
    return t


def format_value(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ", ".join(format_value(x) for x in v) + ("," if len(v) == 1 else "")
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_text(text):
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {n}: empty key")
        if key in out:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        out[key] = parse_value(value)
    return out


def dump_text(flat):
    return "".join(f"{k} = {format_value(v)}\n" for k, v in sorted(flat.items()))


# -- task presets ------------------------------------------------------------

def _stones_for(robot_name):
    return laikago_stones if robot_name == "laikago" else a1_stones


def _seeded(factory, seed):
    return factory(seed=seed)


def _stones(seed, **kw):
    return SteppingStones(seed=seed, **kw)


TASKS = {
    "flat_trot": dict(gait="trot", desired_velocity=0.5),
    "flat_walk": dict(gait="walk", desired_velocity=0.2),
    "fast_trot": dict(gait="fast_trot", desired_velocity=0.5, footholds=(0.10, 0.05)),
    "stepping_stones": dict(gait="trot", desired_velocity=0.3, terrain="stones"),
    "balance_beam": dict(gait="trot", desired_velocity=0.1, terrain="beam", extra_obs="py"),
    "two_leg_balance": dict(gait="two_leg", desired_velocity=0.0, extra_obs="pxy"),
    "gap_proxy": dict(gait="trot", desired_velocity=0.3, terrain="gap"),
}

# tasks whose default robot differs from a1 (stone spacing is robot specific)
DEFAULT_ROBOT = {"stepping_stones": "laikago"}

TASK_KEYS = {f.name for f in fields(TaskConfig)} - {"robot", "gait", "terrain", "planner", "weights"}


def _terrain_spec(kind, robot_name, overrides):
    if overrides:
        spec = {k: tuple(v) if isinstance(v, list) else v for k, v in overrides.items()}
        if "kind" not in spec:
            raise ConfigError("terrain overrides need terrain.kind")
        try:
            if spec["kind"] == "stepping_stones" and "seed" not in spec:
                spec.pop("kind")
                _stones(0, **spec)  # validate now rather than at reset
                return functools.partial(_stones, **spec)
            return terrain_from_dict(spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad terrain spec: {exc}") from None
    if kind == "stones":
        return functools.partial(_seeded, _stones_for(robot_name))
    if kind == "beam":
        return BalanceBeam(0.05)
    if kind == "gap":
        return Gap(width=0.12, x_position=0.5)
    return Flat()


def build_task(task_name, robot_name=None, gait=None, terrain=None, task_overrides=None,
               planner=None, weights=None):
    """Resolve a preset name (plus overrides) into a :class:`TaskConfig`."""
    if task_name not in TASKS:
        raise ConfigError(f"unknown task {task_name!r}; valid: {', '.join(TASKS)}")
    spec = TASKS[task_name]
    robot_name = robot_name or DEFAULT_ROBOT.get(task_name, "a1")
    try:
        robot = robot_preset(robot_name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if "footholds" in spec:
        robot = robot.with_footholds(*spec["footholds"])
    try:
        g = gait_preset(gait or spec["gait"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    kw = {"desired_velocity": spec["desired_velocity"], "extra_obs": spec.get("extra_obs")}
    for k, v in (task_overrides or {}).items():
        if k not in TASK_KEYS:
            raise ConfigError(f"unknown task key task.{k}; valid: {', '.join(sorted(TASK_KEYS))}")
        kw[k] = tuple(v) if isinstance(v, list) else v
    try:
        return TaskConfig(robot=robot, gait=g, name=task_name,
                          terrain=_terrain_spec(spec.get("terrain"), robot_name, terrain),
                          planner=FootPlannerConfig(**(planner or {})),
                          weights=QpWeights(**(weights or {})), **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid task settings: {exc}") from None


# -- run configuration -------------------------------------------------------

@dataclass
class RunConfig:
    task: str = "flat_trot"
    robot: str = None
    controller: str = "policy"
    gait: str = None
    seed: int = 0
    output_dir: str = None
    checkpoint: str = None
    scenarios: list = field(default_factory=lambda: ["default"])
    runs: int = 10
    seconds: float = 10.0
    terrain: dict = field(default_factory=dict)
    ppo: dict = field(default_factory=dict)
    task_overrides: dict = field(default_factory=dict)
    planner: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)
    pd: dict = field(default_factory=dict)

    SECTIONS = {"terrain": "terrain", "ppo": "ppo", "task": "task_overrides",
                "planner": "planner", "qp": "weights", "pd": "pd"}
    SCALARS = ("task", "robot", "controller", "gait", "seed", "output_dir", "checkpoint",
               "scenarios", "runs", "seconds")

    @classmethod
    def from_flat(cls, flat):
        cfg = cls()
        for key, value in flat.items():
            if "." in key:
                section, sub = key.split(".", 1)
                if section not in cls.SECTIONS:
                    raise ConfigError(f"unknown section {section!r} in key {key!r}")
                getattr(cfg, cls.SECTIONS[section])[sub] = value
            elif key in cls.SCALARS:
                setattr(cfg, key, value)
            else:
                raise ConfigError(f"unknown key {key!r}")
        if isinstance(cfg.scenarios, str):
            cfg.scenarios = [cfg.scenarios]
        cfg.validate()
        return cfg

    @classmethod
    def from_text(cls, text):
        return cls.from_flat(parse_text(text))

    @classmethod
    def from_file(cls, path):
        try:
            with open(path) as fh:
                return cls.from_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None

    def validate(self):
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"controller must be one of {CONTROLLERS}")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if not isinstance(self.runs, int) or self.runs <= 0:
            raise ConfigError("runs must be a positive integer")
        if not self.seconds or self.seconds <= 0:
            raise ConfigError("seconds must be positive")
        unknown = set(self.ppo) - {f.name for f in fields(PpoConfig)}
        if unknown:
            raise ConfigError(f"unknown ppo keys: {sorted(unknown)}")
        self.build_task()
        self.ppo_config()

    def to_flat(self):
        flat = {k: getattr(self, k) for k in self.SCALARS if getattr(self, k) is not None}
        for section, attr in self.SECTIONS.items():
            for k, v in getattr(self, attr).items():
                flat[f"{section}.{k}"] = v
        return flat

    def to_text(self):
        return dump_text(self.to_flat())

    def build_task(self):
        return build_task(self.task, self.robot, self.gait, self.terrain, self.task_overrides,
                          self.planner, self.weights)

    def ppo_config(self):
        kw = dict(self.ppo)
        kw.setdefault("seed", self.seed)
        try:
            return PpoConfig(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid ppo settings: {exc}") from None

    def resolve_output(self, default_name):
        """Output directory; relative paths live under ``$CENTROIDAL_RL_OUTPUT`` if set."""
        out = self.output_dir or os.path.join("runs", default_name)
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not os.path.isabs(out):
            out = os.path.join(root, out)
        return out
