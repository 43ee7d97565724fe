"""Command-line entry point: ``train``, ``eval``, ``rollout`` and ``bench-qp``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""
import argparse
import json
import logging
import os
import sys

from .config import ConfigError, RunConfig, parse_value
from .controllers import CentroidalPD, PolicyController
from .dynamics import DT

log = logging.getLogger("centroidal_rl")


def _load_config(args):
    if args.config:
        cfg = RunConfig.from_file(args.config)
    else:
        cfg = RunConfig()
    flat = cfg.to_flat()
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        flat[key.strip()] = parse_value(value)
    return RunConfig.from_flat(flat)


def _output_dir(cfg, name):
    out = cfg.resolve_output(name)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.txt"), "w") as fh:
        fh.write(cfg.to_text())
    return out


def _controller(cfg, task):
    if cfg.controller == "pd":
        if cfg.pd:
            pd = CentroidalPD(kp=tuple(cfg.pd["kp"]), kd=tuple(cfg.pd["kd"]))
        else:
            pd = CentroidalPD.for_robot(task.robot.name)
        return pd, "pd"
    if not cfg.checkpoint:
        raise ConfigError("controller = policy needs a checkpoint")
    from .policy import MlpPolicy
    try:
        policy = MlpPolicy.load(cfg.checkpoint)
    except OSError as exc:
        raise ConfigError(f"cannot load checkpoint {cfg.checkpoint}: {exc}") from None
    ctrl = PolicyController(policy)
    try:
        ctrl.check_task(task)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ctrl, "policy"


def cmd_train(cfg):
    from .ppo import train
    task = cfg.build_task()
    ppo = cfg.ppo_config()
    out = _output_dir(cfg, f"train_{cfg.task}_seed{ppo.seed}")
    result = train(task, ppo, out_dir=out)
    print(json.dumps({"output_dir": out, "iterations": len(result.curve),
                      "best_eval_normalized_reward": result.best_reward, "aborted": result.aborted}))
    return 2 if result.aborted else 0


def cmd_eval(cfg):
    from .metrics import run_scenario, scenario_task
    task = cfg.build_task()
    for name in cfg.scenarios:
        try:
            scenario_task(task, name)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    ctrl, kind = _controller(cfg, task)
    out = _output_dir(cfg, f"eval_{cfg.task}_{kind}")
    steps = int(round(cfg.seconds / DT))
    summary = {}
    for name in cfg.scenarios:
        report = run_scenario(ctrl, task, name, runs=cfg.runs, steps=steps, seed=cfg.seed,
                              controller_name=kind)
        path = os.path.join(out, f"report_{name}.json")
        report.to_json(path)
        summary[name] = report.aggregate
    print(json.dumps({"output_dir": out, "scenarios": summary}, indent=2))
    return 0


def cmd_rollout(cfg):
    from .rollout import run_episodes
    task = cfg.build_task()
    ctrl, kind = _controller(cfg, task)
    out = _output_dir(cfg, f"rollout_{cfg.task}_{kind}")
    steps = int(round(cfg.seconds / DT))
    traj, env = run_episodes(ctrl, task, steps, runs=1, seed=cfg.seed)
    traj.write_csv(os.path.join(out, "trajectory.csv"))
    env.terrains[0].to_json(os.path.join(out, "terrain.json"))
    print(json.dumps({"output_dir": out, "rows": traj.steps, "survived": not traj.terminated.any()}))
    return 0


def cmd_bench_qp(cfg, sizes):
    from .bench import bench_qp
    out = _output_dir(cfg, "bench_qp")
    result = bench_qp(tuple(sizes), seed=cfg.seed)
    with open(os.path.join(out, "bench_qp.json"), "w") as fh:
        json.dump(result, fh, indent=2)
    print(json.dumps(result, indent=2))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="centroidal-rl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("train", "train a PPO policy"), ("eval", "evaluate scenarios"),
                            ("rollout", "record one trajectory"), ("bench-qp", "time the QP solver")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", nargs="?", help="run configuration file (key = value lines)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a configuration key (repeatable)")
        if name == "bench-qp":
            p.add_argument("--sizes", type=int, nargs="+", default=[1, 10, 100, 1000])
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "rollout":
            return cmd_rollout(cfg)
        return cmd_bench_qp(cfg, args.sizes)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
