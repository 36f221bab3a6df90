"""Experiment drivers shared by the CLI and scripts/: single-arm training, paired
EcoEdgeTwin-vs-benchmark comparison, and the latency/migration speed sweep."""
from __future__ import annotations

import csv
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .a2c import TrainConfig, TrainReport, infer_offloading, train
from .baseline import wrap_benchmark
from .config import ScenarioConfig
from .env import EdgeEnv
from .mobility import Trajectory
from .model import build_scenario
from .nn import Network

ARMS = ("ecoedgetwin", "benchmark")
STEP_COLUMNS = ("episode", "step", "user", "action", "reward", "latency_s", "energy_j", "qoe",
                "migrated")
SWEEP_COLUMNS = ("speed_kmh", "mean_latency_s", "migrations_per_episode", "episodes")
PAIRED_COLUMNS = ("seed", "episode", "eco_energy_j", "bench_energy_j", "eco_qoe", "bench_qoe",
                  "eco_latency_s", "bench_latency_s", "eco_reward", "bench_reward")
SUMMARY_METRICS = ("energy_j", "qoe", "latency_s")


def make_env(config: ScenarioConfig, *, benchmark: bool = False, mobility="synthetic",
             max_steps: int = 50, speed_kmh: float | None = None, scenario_seed: int | None = None):
    scenario = build_scenario(config, scenario_seed)
    env = EdgeEnv(scenario, mobility=mobility, max_steps=max_steps, speed_kmh=speed_kmh)
    return wrap_benchmark(env) if benchmark else env


def train_arm(config: ScenarioConfig, tcfg: TrainConfig, *, benchmark: bool = False,
              mobility="synthetic", step_log=None) -> TrainReport:
    """Train one arm. The scenario layout is drawn from ``tcfg.seed`` so both arms of a seed
    share identical servers, users and task streams."""
    return train(lambda: make_env(config, benchmark=benchmark, mobility=mobility,
                                  max_steps=tcfg.max_steps, scenario_seed=tcfg.seed),
                 None, tcfg, step_log=step_log)


def _train_arm_job(args):
    config, tcfg, benchmark = args
    return train_arm(config, tcfg, benchmark=benchmark)


@dataclass
class Comparison:
    seeds: list[int]
    eco: list[TrainReport]
    bench: list[TrainReport]

    def tail_mean(self, arm: str, metric: str, last: int = 20) -> float:
        reports = self.eco if arm == "ecoedgetwin" else self.bench
        return float(np.mean([r.column(metric)[-last:].mean() for r in reports]))

    def paired_rows(self):
        for seed, e, b in zip(self.seeds, self.eco, self.bench):
            for re_, rb in zip(e.records, b.records):
                yield [seed, re_.episode, re_.energy_j, rb.energy_j, re_.qoe, rb.qoe,
                       re_.latency_s, rb.latency_s, re_.total_reward, rb.total_reward]

    def summary(self) -> dict[str, dict[str, tuple[float, float]]]:
        """Per arm: (mean, stdev) over every episode of every seed for each metric."""
        out = {}
        for arm, reports in (("ecoedgetwin", self.eco), ("benchmark", self.bench)):
            out[arm] = {}
            for m in SUMMARY_METRICS:
                vals = [v for r in reports for v in r.column(m)]
                out[arm][m] = ((statistics.fmean(vals), statistics.pstdev(vals)) if vals
                               else (float("nan"), float("nan")))
        return out

    def write_csv(self, path: str | Path) -> None:
        summ = self.summary()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(PAIRED_COLUMNS)
            for row in self.paired_rows():
                w.writerow([_fmt(v) for v in row])
            # one summary row; the episode column carries the tag
            w.writerow(["all", "summary",
                        *(_fmt(summ[a]["energy_j"][0]) for a in ARMS),
                        *(_fmt(summ[a]["qoe"][0]) for a in ARMS),
                        *(_fmt(summ[a]["latency_s"][0]) for a in ARMS), "", ""])

    def write_summary_csv(self, path: str | Path) -> None:
        summ = self.summary()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["arm", "metric", "mean", "stdev", "tail20_mean"])
            for arm in ARMS:
                for m in SUMMARY_METRICS:
                    mean, sd = summ[arm][m]
                    w.writerow([arm, m, _fmt(mean), _fmt(sd), _fmt(self.tail_mean(arm, m))])


def compare(config: ScenarioConfig, seeds: Sequence[int], tcfg: TrainConfig,
            workers: int = 1) -> Comparison:
    jobs = [(config, _with_seed(tcfg, s), b) for s in seeds for b in (False, True)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_train_arm_job, jobs))
    else:
        reports = [_train_arm_job(j) for j in jobs]
    return Comparison(list(seeds), reports[0::2], reports[1::2])


def _with_seed(tcfg: TrainConfig, seed: int) -> TrainConfig:
    return replace(tcfg, seed=int(seed))


@dataclass
class SweepPoint:
    speed_kmh: float
    mean_latency_s: float
    migrations_per_episode: float
    episodes: int


def speed_sweep(config: ScenarioConfig, actor: Network, critic: Network, speeds: Sequence[float],
                *, seed: int = 0, episodes: int = 20, max_steps: int = 50,
                benchmark: bool = False) -> list[SweepPoint]:
    """Frozen greedy rollouts with every user moving at a fixed speed."""
    points = []
    tcfg = TrainConfig(seed=seed, max_steps=max_steps)
    for v in speeds:
        env = make_env(config, benchmark=benchmark, max_steps=max_steps, speed_kmh=float(v),
                       scenario_seed=seed)
        rep = infer_offloading(env, actor, critic, episodes, max_steps, frozen=True, greedy=True,
                               cfg=tcfg, convergence=False)
        points.append(SweepPoint(float(v), float(rep.column("latency_s").mean()),
                                 float(rep.column("migrations").mean()), len(rep.records)))
    return points


def write_sweep_csv(path: str | Path, points: Sequence[SweepPoint]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for p in points:
            w.writerow([_fmt(p.speed_kmh), _fmt(p.mean_latency_s), _fmt(p.migrations_per_episode),
                        p.episodes])


class StepLogWriter:
    """Callable step hook for :func:`train` that streams the per-step CSV."""

    def __init__(self, path: str | Path):
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(STEP_COLUMNS)

    def __call__(self, episode, step, out, action, reward):
        c = out.cost
        self._w.writerow([episode, step, out.info.get("user", ""), action, _fmt(reward),
                          _fmt(c.latency.total_s), _fmt(c.energy.total_j), _fmt(c.qoe.value),
                          int(c.migrated)])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def load_trajectories(path: str | Path, config: ScenarioConfig) -> list[Trajectory]:
    from .mobility import load_tdrive

    return load_tdrive(path, config.area_side_km, config.slot_s)


def check_checkpoint(actor: Network, critic: Network, n_in: int, n_actions: int) -> None:
    from .errors import ShapeError

    if actor.n_in != n_in or critic.n_in != n_in or actor.n_out != n_actions or critic.n_out != 1:
        raise ShapeError(f"checkpoint networks {actor.layer_dims}/{critic.layer_dims} do not fit "
                         f"state length {n_in} and {n_actions} actions")
