"""Command-line entry point: generate, train, compare, speed-sweep.

Each command writes into an output directory holding exactly one ``manifest.json``.
Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import experiments as ex
from .a2c import TrainConfig, report_summary
from .config import ScenarioConfig, load_config
from .env import action_count, state_dim
from .errors import ConfigError, EcoEdgeError, NumericError
from .model import build_scenario
from .nn import load_checkpoint, save_checkpoint

log = logging.getLogger("ecoedgetwin")

TRAIN_CSV = "train.csv"
STEP_CSV = "steps.csv"
CHECKPOINT = "checkpoint.json"
COMPARE_CSV = "comparison.csv"
SUMMARY_CSV = "summary.csv"
SWEEP_CSV = "speed_sweep.csv"
SCENARIO_JSON = "scenario.json"
MANIFEST = "manifest.json"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(out: Path, command: str, config_path, config: ScenarioConfig, seed, started,
                   **extra) -> None:
    doc = {"command": command, "config_path": str(config_path), "seed": seed,
           "config_hash": config.content_hash(), "output_dir": str(out),
           "started": started, "finished": _now(), **extra}
    (out / MANIFEST).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args, config: ScenarioConfig) -> int:
    return config.seed if args.seed is None else args.seed


def _train_cfg(args, seed: int, episodes: int) -> TrainConfig:
    try:
        return TrainConfig(actor_rate=args.actor_rate, critic_rate=args.critic_rate,
                           episodes=episodes, max_steps=args.max_steps, discount=args.discount,
                           entropy_bonus=args.entropy_bonus, seed=seed,
                           discount_from_w3=args.discount_from_w3)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_list(text: str, kind=float) -> list:
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse list {text!r}: {exc}") from exc


def cmd_generate(args) -> int:
    started = _now()
    config = load_config(args.config)
    seed = _seed(args, config)
    out = _outdir(args.out)
    scenario = build_scenario(config, seed)
    (out / SCENARIO_JSON).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n")
    write_manifest(out, "generate", args.config, config, seed, started, files=[SCENARIO_JSON])
    print(f"{len(scenario.servers)} servers, {len(scenario.users)} users -> {out / SCENARIO_JSON}")
    return 0


def cmd_train(args) -> int:
    started = _now()
    config = load_config(args.config)
    seed = _seed(args, config)
    tcfg = _train_cfg(args, seed, args.episodes)
    mobility = "synthetic"
    if args.trajectories and args.trajectories != "synthetic":
        mobility = ex.load_trajectories(args.trajectories, config)
    out = _outdir(args.out)
    files = [TRAIN_CSV, CHECKPOINT]
    step_log = None
    if args.step_log:
        step_log = ex.StepLogWriter(out / STEP_CSV)
        files.append(STEP_CSV)
    try:
        report = ex.train_arm(config, tcfg, benchmark=args.benchmark, mobility=mobility,
                              step_log=step_log)
    finally:
        if step_log is not None:
            step_log.close()
    report.write_csv(out / TRAIN_CSV)
    save_checkpoint(out / CHECKPOINT, {"actor": report.actor, "critic": report.critic},
                    {"seed": seed, "benchmark": args.benchmark,
                     "config_hash": config.content_hash()})
    write_manifest(out, "train", args.config, config, seed, started, files=files,
                   arm="benchmark" if args.benchmark else "ecoedgetwin", episodes=args.episodes,
                   trajectories=args.trajectories or "synthetic")
    s = report_summary(report)
    print(f"mean_reward_last20={s['mean_reward_last']:.6g} total_energy_j={s['total_energy_j']:.6g} "
          f"mean_qoe={s['mean_qoe']:.6g}")
    return 0


def cmd_compare(args) -> int:
    started = _now()
    config = load_config(args.config)
    seeds = _parse_list(args.seeds, int)
    if not seeds:
        raise ConfigError("--seeds must list at least one seed")
    tcfg = _train_cfg(args, seeds[0], args.episodes)
    out = _outdir(args.out)
    cmp = ex.compare(config, seeds, tcfg, workers=args.workers)
    cmp.write_csv(out / COMPARE_CSV)
    cmp.write_summary_csv(out / SUMMARY_CSV)
    write_manifest(out, "compare", args.config, config, seeds, started,
                   files=[COMPARE_CSV, SUMMARY_CSV], episodes=args.episodes)
    for arm in ex.ARMS:
        print(f"{arm}: energy_j={cmp.tail_mean(arm, 'energy_j'):.6g} "
              f"qoe={cmp.tail_mean(arm, 'qoe'):.6g} latency_s={cmp.tail_mean(arm, 'latency_s'):.6g}"
              " (last 20 episodes, mean over seeds)")
    return 0


def cmd_speed_sweep(args) -> int:
    started = _now()
    config = load_config(args.config)
    seed = _seed(args, config)
    speeds = _parse_list(args.speeds)
    if any(v < 0 for v in speeds):
        raise ConfigError("--speeds must be nonnegative")
    out = _outdir(args.out)
    dims_in, n_act = state_dim(config.candidate_servers), action_count(config.candidate_servers)
    if args.checkpoint:
        nets = load_checkpoint(args.checkpoint)
        actor, critic = nets.get("actor"), nets.get("critic")
        if actor is None or critic is None:
            raise ConfigError("checkpoint must hold 'actor' and 'critic' networks")
        ex.check_checkpoint(actor, critic, dims_in, n_act)
    else:
        report = ex.train_arm(config, _train_cfg(args, seed, args.train_episodes),
                              benchmark=args.benchmark)
        actor, critic = report.actor, report.critic
    points = ex.speed_sweep(config, actor, critic, speeds, seed=seed, episodes=args.episodes,
                            max_steps=args.max_steps, benchmark=args.benchmark)
    ex.write_sweep_csv(out / SWEEP_CSV, points)
    write_manifest(out, "speed-sweep", args.config, config, seed, started, files=[SWEEP_CSV],
                   speeds=speeds, checkpoint=str(args.checkpoint) if args.checkpoint else None)
    for p in points:
        print(f"speed={p.speed_kmh:g} latency_s={p.mean_latency_s:.6g} "
              f"migrations={p.migrations_per_episode:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ecoedgetwin", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, episodes: int):
        sp.add_argument("config", help="scenario config JSON")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--episodes", type=int, default=episodes)
        sp.add_argument("--max-steps", type=int, default=50)
        sp.add_argument("--actor-rate", type=float, default=TrainConfig.actor_rate)
        sp.add_argument("--critic-rate", type=float, default=TrainConfig.critic_rate)
        sp.add_argument("--discount", type=float, default=TrainConfig.discount)
        sp.add_argument("--discount-from-w3", action="store_true",
                        help="bootstrap with the objective weight w3 instead of --discount")
        sp.add_argument("--entropy-bonus", type=float, default=TrainConfig.entropy_bonus)

    g = sub.add_parser("generate", help="build a scenario and dump it as JSON")
    g.add_argument("config")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=None)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train one arm, write per-episode CSV and checkpoint")
    common(t, 100)
    t.add_argument("--trajectories", default="synthetic", help="T-Drive CSV or 'synthetic'")
    t.add_argument("--benchmark", action="store_true", help="train the DT-blind benchmark arm")
    t.add_argument("--step-log", action="store_true", help=f"also write {STEP_CSV}")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("compare", help="train both arms per seed and compare")
    common(c, 100)
    c.add_argument("--seeds", default="0", help="comma-separated seeds")
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("speed-sweep", help="latency and migrations of a frozen policy vs speed")
    common(s, 20)
    s.add_argument("--speeds", default="0,20,40,60", help="comma-separated km/h")
    s.add_argument("--checkpoint", default=None, help="checkpoint from 'train'; trains one if absent")
    s.add_argument("--train-episodes", type=int, default=100)
    s.add_argument("--benchmark", action="store_true")
    s.set_defaults(func=cmd_speed_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"error: {exc}; diagnostic: {json.dumps(exc.diagnostic, default=str)}",
              file=sys.stderr)
        return exc.exit_code
    except EcoEdgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
