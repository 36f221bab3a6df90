"""Advantage actor-critic: one on-policy update per environment step, no batching or replay.

The same loop serves training (updates on) and offloading inference (updates optional,
greedy or sampled actions, windowed convergence exit).
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .env import MdpAction, action_count
from .errors import NumericError, ShapeError
from .nn import GradientSet, Network, softmax_policy

REPORT_COLUMNS = ("episode", "total_reward", "scaled_reward", "energy_j", "latency_s", "qoe",
                  "migrations", "cache_hits")


@dataclass(frozen=True)
class TrainConfig:
    actor_rate: float = 3e-3
    critic_rate: float = 1e-3
    episodes: int = 100
    max_steps: int = 50
    discount: float = 0.99
    entropy_bonus: float = 0.01
    eval_interval: int = 10
    seed: int = 0
    hidden: tuple[int, ...] = (128, 128, 128)
    momentum: float = 0.0
    # bootstrap with the objective weight w3 instead of ``discount``
    discount_from_w3: bool = False

    def __post_init__(self):
        if not (self.actor_rate > 0 and self.critic_rate > 0):
            raise ValueError("learning rates must be > 0")
        if self.episodes < 0 or self.max_steps < 1:
            raise ValueError("episodes must be >= 0 and max_steps >= 1")
        if not 0 < self.discount <= 1:
            raise ValueError("discount must lie in (0, 1]")
        if self.entropy_bonus < 0 or not 0 <= self.momentum < 1:
            raise ValueError("entropy_bonus must be >= 0 and momentum in [0, 1)")


@dataclass
class EpisodeRecord:
    episode: int
    total_reward: float
    scaled_reward: float = 0.0
    energy_j: float = 0.0
    latency_s: float = 0.0
    qoe: float = 0.0
    migrations: int = 0
    cache_hits: int = 0
    steps: int = 0
    dt_uses: int = 0


@dataclass
class TrainReport:
    records: list[EpisodeRecord]
    actor: Network
    critic: Network
    converged_at: int | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def rows(self):
        for r in self.records:
            yield [r.episode, r.total_reward, r.scaled_reward, r.energy_j, r.latency_s, r.qoe,
                   r.migrations, r.cache_hits]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            for row in self.rows():
                w.writerow([_fmt(v) for v in row])


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else v


def scale_rewards(totals) -> np.ndarray:
    """Affine map of episode totals onto [-1, 1]; a flat run maps to 0."""
    x = np.asarray(totals, dtype=float)
    if x.size == 0:
        return x
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    return 2.0 * (x - lo) / (hi - lo) - 1.0


def episode_seed(seed: int, episode: int) -> int:
    return int(np.random.SeedSequence([seed, episode]).generate_state(1)[0])


def features(state) -> np.ndarray:
    return state.features if hasattr(state, "features") else np.asarray(state, dtype=float)


def select_action(actor: Network, state, rng: np.random.Generator | None, greedy: bool = False,
                  k: int | None = None):
    """A softmax sample, or the argmax (lowest index on ties) when greedy.

    Returns the flat index, or the decoded :class:`MdpAction` when the candidate count ``k``
    is given (the actor width must then equal the action-space size).
    """
    if k is not None and actor.n_out != action_count(k):
        raise ShapeError(f"actor width {actor.n_out} != action-space size {action_count(k)}")
    logits = actor.forward(features(state))
    if greedy:
        idx = int(np.argmax(logits))
    else:
        p = softmax_policy(logits)
        idx = int(rng.choice(len(p), p=p))
    return idx if k is None else MdpAction.from_index(idx, k)


def advantage_estimate(r_next: float, v_next: float, v_now: float, discount: float,
                       terminal: bool) -> float:
    """r + gamma V(s') - V(s), bootstrap cut at terminal steps. Also the TD error."""
    return r_next + discount * v_next * (0.0 if terminal else 1.0) - v_now


td_error = advantage_estimate


def policy_gradient_upstream(probs: np.ndarray, action: int, advantage: float,
                             entropy_bonus: float) -> np.ndarray:
    """d/dlogits of advantage * log pi(a) + entropy_bonus * H(pi)."""
    g = -probs.copy()
    g[action] += 1.0
    g *= advantage
    if entropy_bonus:
        logp = np.log(np.clip(probs, 1e-300, None))
        h = -np.dot(probs, logp)
        g += entropy_bonus * (-probs * (logp + h))
    return g


class Sgd:
    """Plain gradient steps with optional heavy-ball momentum."""

    def __init__(self, rate: float, direction: str, momentum: float = 0.0):
        self.rate, self.direction, self.momentum = rate, direction, momentum
        self._v: GradientSet | None = None

    def step(self, net: Network, grads: GradientSet) -> Network:
        from .nn import apply_update

        if self.momentum:
            self._v = grads if self._v is None else self._v.scaled(self.momentum) + grads
            grads = self._v
        return apply_update(net, grads, self.rate, self.direction)


class ConvergenceMonitor:
    """Mean reward over consecutive non-overlapping windows; converged once ``patience``
    successive window means each change by less than ``tol`` (relative)."""

    def __init__(self, window: int = 20, tol: float = 0.01, patience: int = 3):
        self.window, self.tol, self.patience = window, tol, patience
        self._buf: list[float] = []
        self._prev: float | None = None
        self._stable = 0

    def update(self, total_reward: float) -> bool:
        self._buf.append(total_reward)
        if len(self._buf) < self.window:
            return False
        mean = float(np.mean(self._buf))
        self._buf = []
        if self._prev is not None:
            change = abs(mean - self._prev) / max(abs(self._prev), 1e-12)
            self._stable = self._stable + 1 if change < self.tol else 0
        self._prev = mean
        return self._stable >= self.patience


def check_dims(env, actor: Network, critic: Network) -> None:
    if actor.n_in != env.state_dim or critic.n_in != env.state_dim:
        raise ShapeError(f"network input width must equal state length {env.state_dim}")
    if actor.n_out != env.n_actions:
        raise ShapeError(f"actor output width {actor.n_out} != action count {env.n_actions}")
    if critic.n_out != 1:
        raise ShapeError("critic must have a single output")


def make_networks(state_dim: int, n_actions: int, hidden=(128, 128, 128), seed: int = 0):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xAC]))
    actor = Network.init((state_dim, *hidden, n_actions), rng)
    critic = Network.init((state_dim, *hidden, 1), rng)
    return actor, critic


StepLog = Callable[[int, int, object, int, float], None]


def _run(env, actor: Network, critic: Network, cfg: TrainConfig, *, episodes: int, max_steps: int,
         learn: bool, greedy: bool, monitor: ConvergenceMonitor | None = None,
         step_log: StepLog | None = None) -> TrainReport:
    check_dims(env, actor, critic)
    gamma = float(env.cfg.weights[2]) if cfg.discount_from_w3 else cfg.discount
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x5EED]))
    actor_opt = Sgd(cfg.actor_rate, "ascent", cfg.momentum)
    critic_opt = Sgd(cfg.critic_rate, "descent", cfg.momentum)
    records: list[EpisodeRecord] = []
    converged_at = None
    for ep in range(episodes):
        state = env.reset(episode_seed(cfg.seed, ep))
        rec = EpisodeRecord(episode=ep + 1, total_reward=0.0)
        lat = qoe = 0.0
        for t in range(max_steps):
            x = features(state)
            logits = actor.forward(x)
            probs = softmax_policy(logits)
            a = int(np.argmax(logits)) if greedy else int(rng.choice(len(probs), p=probs))
            out = env.step(a)
            r = float(out.reward)
            x_next = features(out.next_state)
            if learn:
                v_next = float(critic.forward(x_next)[0])
                v_now = float(critic.forward(x)[0])
                adv = advantage_estimate(r, v_next, v_now, gamma, out.done)
                if not (math.isfinite(adv) and np.all(np.isfinite(probs))):
                    raise NumericError("nonfinite advantage or policy", {
                        "episode": ep + 1, "step": t + 1, "reward": r, "v_now": v_now,
                        "v_next": v_next, "action": a})
                # semi-gradient of adv^2: target treated as constant
                g_c = critic.backward(np.array([-2.0 * adv]))
                g_a = actor.backward(policy_gradient_upstream(probs, a, adv, cfg.entropy_bonus))
                try:
                    critic = critic_opt.step(critic, g_c)
                    actor = actor_opt.step(actor, g_a)
                except NumericError as exc:
                    raise NumericError(str(exc), {"episode": ep + 1, "step": t + 1, "reward": r,
                                                  "advantage": adv, "action": a}) from exc
            rec.total_reward += r
            rec.steps += 1
            cost = getattr(out, "cost", None)
            if cost is not None:
                rec.energy_j += cost.energy.total_j
                lat += cost.latency.total_s
                qoe += cost.qoe.value
                rec.migrations += int(cost.migrated)
                rec.cache_hits += int(cost.cache_hit)
                rec.dt_uses += int(out.info.get("dt_used", False))
            if step_log is not None:
                step_log(ep + 1, t + 1, out, a, r)
            state = out.next_state
            if out.done:
                break
        if rec.steps:
            rec.latency_s = lat / rec.steps
            rec.qoe = qoe / rec.steps
        records.append(rec)
        if monitor is not None and monitor.update(rec.total_reward):
            converged_at = ep + 1
            break
    for rec, s in zip(records, scale_rewards([r.total_reward for r in records])):
        rec.scaled_reward = float(s)
    return TrainReport(records, actor, critic, converged_at)


def train(env_factory: Callable, nets: tuple[Network, Network] | None, cfg: TrainConfig,
          step_log: StepLog | None = None) -> TrainReport:
    env = env_factory()
    if nets is None:
        nets = make_networks(env.state_dim, env.n_actions, cfg.hidden, cfg.seed)
    actor, critic = nets
    return _run(env, actor, critic, cfg, episodes=cfg.episodes, max_steps=cfg.max_steps,
                learn=True, greedy=False, step_log=step_log)


def infer_offloading(env, actor: Network, critic: Network, episodes: int, max_steps: int, *,
                     frozen: bool = True, greedy: bool = True, cfg: TrainConfig | None = None,
                     convergence: bool = True, step_log: StepLog | None = None) -> TrainReport:
    """Roll out a trained policy; with ``frozen=False`` keep learning from the TD error."""
    cfg = cfg or TrainConfig()
    monitor = ConvergenceMonitor() if convergence else None
    if frozen:
        actor, critic = actor.copy(), critic.copy()
    return _run(env, actor, critic, cfg, episodes=episodes, max_steps=max_steps, learn=not frozen,
                greedy=greedy, monitor=monitor, step_log=step_log)


def report_summary(report: TrainReport, last: int = 20) -> dict:
    tail = report.records[-last:]
    if not tail:
        return {"mean_reward_last": float("nan"), "total_energy_j": 0.0, "mean_qoe": float("nan")}
    return {
        "mean_reward_last": float(np.mean([r.total_reward for r in tail])),
        "total_energy_j": float(sum(r.energy_j for r in report.records)),
        "mean_qoe": float(np.mean([r.qoe for r in report.records])),
    }


def record_dicts(report: TrainReport) -> list[dict]:
    return [asdict(r) for r in report.records]
