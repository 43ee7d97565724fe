"""Evaluation instruments: normalized reward, effort, spectral motion quality,
acceleration-tracking residuals and the perturbation scenario runner."""
import json
from dataclasses import asdict, dataclass, field

import jsonschema
import numpy as np

from .dynamics import DT
from .rollout import run_episodes
from .terrain import FilteredNoise, WaveField

RUNS = 10
EPISODE_STEPS = 1000


def normalized_reward(rewards, length=None):
    """Mean per-step reward, padding a run cut short with zeros up to ``length``."""
    r = np.asarray(rewards, float).ravel()
    if r.size == 0:
        raise ValueError("empty reward sequence")
    length = r.size if length is None else int(length)
    if length < r.size:
        raise ValueError("length is shorter than the recorded run")
    return float(r.sum() / length)


def effort(series):
    """Mean squared Euclidean norm of per-step vectors (shape ``(T, d)``)."""
    x = np.asarray(series, float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise ValueError("effort needs at least one step")
    return float(np.mean(np.sum(x.reshape(x.shape[0], -1) ** 2, axis=1)))


def energy_spectrum(signal, sample_rate=100.0):
    """One-sided frequencies and ``|X(f)|^2`` of the mean-removed signal."""
    x = np.asarray(signal, float)
    x = x - x.mean()
    X = np.fft.rfft(x)
    return np.fft.rfftfreq(x.size, d=1.0 / sample_rate), np.abs(X) ** 2


def parseval_sides(signal):
    """``(sum |X|^2 / N, sum x^2)`` for the mean-removed signal; equal by Parseval."""
    x = np.asarray(signal, float)
    x = x - x.mean()
    X = np.fft.fft(x)
    return float(np.sum(np.abs(X) ** 2) / x.size), float(np.sum(x * x))


def esd_high_fraction(signal, sample_rate=100.0, cutoff=10.0):
    """Share of spectral energy above ``cutoff`` among all positive frequencies."""
    x = np.asarray(signal, float)
    if x.size < max(2, int(np.ceil(2 * cutoff / sample_rate))):
        raise ValueError("signal too short for the requested cutoff")
    f, e = energy_spectrum(x, sample_rate)
    total = np.sum(e[f > 0])
    if total <= 1e-12 * max(1.0, np.sum(x * x)):
        return 0.0
    return float(np.sum(e[f > cutoff]) / total)


def qp_residual_series(a_d, achieved):
    """Per-step ``||achieved - a_d||`` (unweighted over the 6 components)."""
    return np.linalg.norm(np.asarray(achieved, float) - np.asarray(a_d, float), axis=-1)


# -- scenarios --------------------------------------------------------------

def _mass(delta):
    def apply(task):
        return task.replace(sim_mass_offset=task.sim_mass_offset + delta)
    return apply


def _terrain(factory):
    def apply(task):
        return task.replace(terrain=factory)
    return apply


def _wave(seed):
    return WaveField()


def _noise(seed):
    return FilteredNoise(seed=seed)


SCENARIOS = {
    "default": lambda task: task,
    "mass_plus_5kg": _mass(5.0),
    "mass_minus_5kg": _mass(-5.0),
    "wave_field": _terrain(_wave),
    "step_noise_height": _terrain(_noise),
}


def scenario_task(task, name):
    try:
        fn = SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; valid: {', '.join(SCENARIOS)}") from None
    return fn(task)


REPORT_SCHEMA = {
    "type": "object",
    "required": ["scenario", "task", "controller", "runs", "seed", "normalized_reward",
                 "effort", "survival_time", "aggregate", "extras"],
    "properties": {
        "scenario": {"type": "string"},
        "task": {"type": "string"},
        "controller": {"type": "string"},
        "runs": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "normalized_reward": {"type": "array", "items": {"type": "number"}},
        "effort": {"type": "array", "items": {"type": "number"}},
        "survival_time": {"type": "array", "items": {"type": "number"}},
        "aggregate": {
            "type": "object",
            "required": ["normalized_reward_mean", "normalized_reward_std", "effort_mean",
                         "effort_std", "survival_time_mean", "survival_time_std", "survived"],
        },
        "extras": {
            "type": "object",
            "required": ["qp_residual_mean", "qp_residual_std", "esd_high_fraction"],
        },
    },
}


@dataclass
class EvalReport:
    scenario: str
    task: str
    controller: str
    runs: int
    seed: int
    normalized_reward: list
    effort: list
    survival_time: list
    extras: dict = field(default_factory=dict)

    @property
    def aggregate(self):
        nr, ef, st = (np.asarray(v, float) for v in (self.normalized_reward, self.effort,
                                                      self.survival_time))
        horizon = self.extras.get("duration", EPISODE_STEPS * DT)
        return {
            "normalized_reward_mean": float(nr.mean()), "normalized_reward_std": float(nr.std()),
            "effort_mean": float(ef.mean()), "effort_std": float(ef.std()),
            "survival_time_mean": float(st.mean()), "survival_time_std": float(st.std()),
            "survived": int(np.sum(st >= horizon - 1e-9)),
        }

    def to_dict(self):
        d = asdict(self)
        d["aggregate"] = self.aggregate
        return d

    def to_json(self, path=None):
        d = self.to_dict()
        jsonschema.validate(d, REPORT_SCHEMA)
        text = json.dumps(d, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, d):
        jsonschema.validate(d, REPORT_SCHEMA)
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def summarize(traj, scenario, task_name, controller_name, seed):
    """Per-run metrics of a recorded batch of episodes."""
    steps = traj.steps
    nr, ef, st, res, esd = [], [], [], [], []
    for k in range(traj.runs):
        live = traj.live[:, k]
        n_live = int(live.sum())
        nr.append(normalized_reward(traj.reward[:, k], steps))
        ef.append(effort(traj.forces[:n_live, k].reshape(n_live, 12)) if n_live else 0.0)
        hit = np.nonzero(traj.terminated[:, k])[0]
        st.append((hit[0] + 1) * DT if hit.size else steps * DT)
        res.extend(qp_residual_series(traj.a_d[:n_live, k], traj.achieved[:n_live, k]))
        if n_live >= 4:
            esd.append(esd_high_fraction(traj.p[:n_live, k, 2]))  # body height; feet are massless here
    res = np.asarray(res)
    extras = {
        "qp_residual_mean": float(res.mean()) if res.size else 0.0,
        "qp_residual_std": float(res.std()) if res.size else 0.0,
        "esd_high_fraction": float(np.mean(esd)) if esd else 0.0,
        "duration": steps * DT,
    }
    return EvalReport(scenario, task_name, controller_name, traj.runs, int(seed), nr, ef, st, extras)


def run_scenario(controller, task, scenario="default", runs=RUNS, steps=EPISODE_STEPS, seed=0,
                 controller_name=None, return_trajectory=False):
    """Evaluate ``controller`` for ``runs`` seeded episodes of ``steps`` steps."""
    stask = scenario_task(task, scenario)
    traj, _ = run_episodes(controller, stask, steps, runs, seed)
    name = controller_name or type(controller).__name__
    report = summarize(traj, scenario, task.name, name, seed)
    if return_trajectory:
        return report, traj
    return report
