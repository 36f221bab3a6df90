"""Offloading MDP: state encoding, composite actions, per-step costs, mobility and migration.

One step serves one user (round-robin); every step advances the world by one slot.
The DT deviation of every CPU drifts as a bounded random walk; the agent sees the last
DT snapshot, refreshed only when it pays for a fresh prediction (``dt_adjust``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import costs
from .channel import path_loss, snr
from .errors import DataError, LifecycleError
from .mobility import Trajectory, kmh_to_km_per_slot, synthetic_mobility
from .model import MAX_DT_RATIO, DigitalTwinView, Scenario, Task, nearest_from

BETA_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)
N_GLOBAL = 12
N_PER_SERVER = 5
SPEED_REF_KMH = 120.0
LINK_REF_BITS_PER_HZ = 30.0
LATENCY_SCALE = 4.0
MIN_DISTANCE_M = 1.0

(F_DATA, F_DT_DATA, F_CYCLES, F_DT_CYCLES, F_LATENCY, F_DT_LATENCY, F_MIG, F_DT_MIG,
 F_USER_FREQ, F_USER_DEV, F_OFFLOADED, F_SPEED) = range(N_GLOBAL)
# per-candidate slot offsets
S_DIST, S_FREQ, S_DEV, S_CACHED, S_LINK = range(N_PER_SERVER)


def state_dim(k: int) -> int:
    return N_GLOBAL + N_PER_SERVER * k


def action_count(k: int) -> int:
    return (k + 1) * len(BETA_LEVELS) * 2 * 2


def dt_feature_indices(k: int) -> list[int]:
    """Entries of the state vector that come from the digital twin."""
    idx = [F_DT_DATA, F_DT_CYCLES, F_DT_LATENCY, F_DT_MIG, F_USER_DEV]
    idx += [N_GLOBAL + N_PER_SERVER * s + S_DEV for s in range(k)]
    return idx


@dataclass(frozen=True)
class MdpAction:
    target: int  # 0 = local, s >= 1 = s-th nearest candidate server
    beta_level: float = 0.0
    cache: bool = False
    dt_adjust: bool = False

    def __post_init__(self):
        if self.target == 0 and self.beta_level != 0.0:
            object.__setattr__(self, "beta_level", 0.0)
        if self.beta_level not in BETA_LEVELS:
            raise ValueError(f"beta_level must be one of {BETA_LEVELS}")

    @property
    def alpha(self) -> float:
        return 1.0 - self.beta_level

    def index(self, k: int) -> int:
        if not 0 <= self.target <= k:
            raise ValueError(f"target {self.target} outside 0..{k}")
        b = BETA_LEVELS.index(self.beta_level)
        return ((self.target * len(BETA_LEVELS) + b) * 2 + int(self.cache)) * 2 + int(self.dt_adjust)

    @classmethod
    def from_index(cls, index: int, k: int) -> "MdpAction":
        if not 0 <= index < action_count(k):
            raise ValueError(f"action index {index} outside [0, {action_count(k)})")
        index, dt = divmod(int(index), 2)
        index, cache = divmod(index, 2)
        target, b = divmod(index, len(BETA_LEVELS))
        return cls(target, BETA_LEVELS[b] if target else 0.0, bool(cache), bool(dt))


@dataclass(frozen=True)
class MdpState:
    features: np.ndarray
    user: int

    def __len__(self):
        return len(self.features)


@dataclass(frozen=True)
class StepOutcome:
    next_state: MdpState
    reward: float
    cost: costs.CostBreakdown
    done: bool
    info: dict = field(default_factory=dict)


class EdgeEnv:
    """Single-threaded environment instance. ``mobility`` is "synthetic" or a list of trajectories."""

    def __init__(self, scenario: Scenario, mobility="synthetic", max_steps: int = 50,
                 speed_kmh: float | None = None):
        self.scenario = scenario
        self.cfg = cfg = scenario.config
        self.k = cfg.candidate_servers
        self.n_actions = action_count(self.k)
        self.state_dim = state_dim(self.k)
        self.max_steps = max_steps
        self.speed_override = speed_kmh
        if isinstance(mobility, str):
            if mobility != "synthetic":
                raise ValueError(f"unknown mobility source {mobility!r}")
            self.trajectories = None
        else:
            self.trajectories = list(mobility)
            if not self.trajectories:
                raise DataError("trajectory source is empty")

        self.server_xy = scenario.server_positions
        self.f_srv = np.array([s.cpu_freq_hz for s in scenario.servers])
        self.r_srv0 = np.array([s.dt_freq_dev_hz / s.cpu_freq_hz for s in scenario.servers])
        self.f_usr = np.array([u.cpu_freq_hz for u in scenario.users])
        self.r_usr0 = np.array([u.dt_freq_dev_hz / u.cpu_freq_hz for u in scenario.users])
        self.f_ref = max(cfg.user_cpu_freq_hz, cfg.server_cpu_freq_hz)
        self.dt_cost_ref = (cfg.migration_fixed_cost + cfg.dt_migration_discrepancy) * cfg.data_ref_bits
        self.dist_ref_km = cfg.area_side_km * math.sqrt(2)
        self._ready = False

    # -- lifecycle ---------------------------------------------------------
    def reset(self, seed: int = 0) -> MdpState:
        cfg = self.cfg
        users = self.scenario.users
        n = len(users)
        task_ss, walk_ss, chan_ss, drift_ss = np.random.SeedSequence(seed).spawn(4)
        self._task_rng = np.random.default_rng(task_ss)
        self._walk_rng = np.random.default_rng(walk_ss)
        self._chan_rng = np.random.default_rng(chan_ss)
        self._drift_rng = np.random.default_rng(drift_ss)

        self.t = 0
        self.steps = 0
        self.cur = 0
        if self.trajectories is None:
            self.pos = [u.position for u in users]
            side = cfg.area_side_km
            self.waypoints = [(self._walk_rng.uniform(0, side), self._walk_rng.uniform(0, side))
                              for _ in users]
            if self.speed_override is None:
                self.speed = [u.speed_kmh for u in users]
            else:
                self.speed = [float(self.speed_override)] * n
        else:
            self.pos = [self._traj(j).position(0) for j in range(n)]
            self.speed = [0.0] * n

        self.r_srv = self.r_srv0.copy()
        self.r_usr = self.r_usr0.copy()
        self.vis_srv = self.r_srv.copy()
        self.vis_usr = self.r_usr.copy()
        self.tasks = [self._sample_task(j) for j in range(n)]
        self.last_anchor = [self._anchor(p) for p in self.pos]
        self.cached_at: list[int | None] = [None] * n
        self.last_offloaded = [0.0] * n
        self.history: list[dict] = []
        self._ready = True
        return self.encode(0)

    def _traj(self, j: int) -> Trajectory:
        return self.trajectories[j % len(self.trajectories)]

    def _sample_task(self, j: int) -> Task:
        d = float(self._task_rng.uniform(*self.cfg.data_size_range_bits))
        cpb = float(self._task_rng.uniform(*self.cfg.cycles_per_bit_range))
        return Task(owner=j, data_bits=d, cpu_cycles=d * cpb)

    def _anchor(self, pos) -> int | None:
        idx, _ = nearest_from(self.server_xy, pos, 1)
        return int(idx[0]) if len(idx) else None

    # -- observation -------------------------------------------------------
    def encode(self, j: int) -> MdpState:
        cfg = self.cfg
        task = self.tasks[j]
        pos = self.pos[j]
        f = self.f_usr[j]
        feats = np.zeros(self.state_dim)
        cand, dist_km = nearest_from(self.server_xy, pos, self.k)
        h = int(len(cand) > 0 and int(cand[0]) != self.last_anchor[j])
        dt_d, dt_c = DigitalTwinView.mirror_task(task)
        latency = task.cpu_cycles / f
        dt_latency = dt_c / (f * (1.0 - self.vis_usr[j]))
        lat_ref = LATENCY_SCALE * cfg.latency_max_s
        feats[F_DATA] = task.data_bits / cfg.data_ref_bits
        feats[F_DT_DATA] = dt_d / cfg.data_ref_bits
        feats[F_CYCLES] = task.cpu_cycles / cfg.cycles_ref
        feats[F_DT_CYCLES] = dt_c / cfg.cycles_ref
        feats[F_LATENCY] = min(latency / lat_ref, 1.0)
        feats[F_DT_LATENCY] = min(dt_latency / lat_ref, 1.0)
        feats[F_MIG] = h * task.data_bits * cfg.migration_fixed_cost / cfg.cost_ref
        feats[F_DT_MIG] = h * dt_d * self.scenario.dt.dt_migration_cost / self.dt_cost_ref
        feats[F_USER_FREQ] = f / self.f_ref
        feats[F_USER_DEV] = self.vis_usr[j]
        feats[F_OFFLOADED] = self.last_offloaded[j] / cfg.data_ref_bits
        feats[F_SPEED] = min(self.speed[j] / SPEED_REF_KMH, 1.0)
        p = self.scenario.users[j].tx_power_w
        for s, (i, dkm) in enumerate(zip(cand, dist_km)):
            base = N_GLOBAL + N_PER_SERVER * s
            d_m = max(dkm * 1000.0, MIN_DISTANCE_M)
            gain = path_loss(d_m, cfg.channel.path_loss_exponent, cfg.channel.reference_distance_m)
            link = math.log2(1.0 + float(snr(p, gain, d_m, cfg.noise_power_w, 1, cfg.channel.literal_eq6)))
            feats[base + S_DIST] = min(dkm / self.dist_ref_km, 1.0)
            feats[base + S_FREQ] = self.f_srv[i] / self.f_ref
            feats[base + S_DEV] = self.vis_srv[i]
            feats[base + S_CACHED] = float(self.cached_at[j] == int(i))
            feats[base + S_LINK] = min(link / LINK_REF_BITS_PER_HZ, 1.0)
        np.clip(feats, -1.0, 1.0, out=feats)
        return MdpState(feats, j)

    # -- dynamics ----------------------------------------------------------
    def step(self, action) -> StepOutcome:
        if not self._ready:
            raise LifecycleError("step() called before reset()")
        a = action if isinstance(action, MdpAction) else MdpAction.from_index(int(action), self.k)
        idx = a.index(self.k)
        cfg = self.cfg
        j = self.cur
        task = self.tasks[j]
        pos = self.pos[j]

        cand, dist_km = nearest_from(self.server_xy, pos, self.k)
        anchor = int(cand[0]) if len(cand) else None
        h = int(anchor is not None and anchor != self.last_anchor[j])
        self.last_anchor[j] = anchor
        fading = self._chan_rng.exponential(1.0, size=self.k)

        server_id = None
        beta = 0.0
        slot = a.target - 1
        if a.target > 0 and slot < len(cand) and a.beta_level > 0:
            server_id, beta = int(cand[slot]), a.beta_level
        task = replace(task.with_split(1.0 - beta, server_id, beta), migration_flag=h,
                       cached_at=self.cached_at[j])

        dt_used = bool(a.dt_adjust)
        if dt_used:
            self.vis_srv = self.r_srv.copy()
            self.vis_usr = self.r_usr.copy()

        base_user = self.scenario.users[j]
        user = replace(base_user, position=pos, dt_freq_dev_hz=self.r_usr[j] * self.f_usr[j],
                       associated_server=server_id)
        server = None
        rate = 0.0
        if server_id is not None:
            base_srv = self.scenario.servers[server_id]
            server = replace(base_srv, dt_freq_dev_hz=self.r_srv[server_id] * self.f_srv[server_id])
            d_m = max(float(dist_km[slot]) * 1000.0, MIN_DISTANCE_M)
            gain = float(path_loss(d_m, cfg.channel.path_loss_exponent,
                                   cfg.channel.reference_distance_m)) * float(fading[slot])
            rate = cfg.bandwidth_hz * math.log2(
                1.0 + float(snr(user.tx_power_w, gain, d_m, server.noise_power_w, 1,
                                cfg.channel.literal_eq6)))

        offloaded = costs.offloaded_volume(task, server_id) if server_id is not None else 0.0
        cycles_off = costs.offloaded_cycles(task, server_id) if server_id is not None else 0.0
        cache_hit = bool(h and offloaded > 0 and self.cached_at[j] == server_id)
        if cache_hit:
            mig = mig_dt = 0.0
        else:
            mig = costs.migration_cost(task, cfg.migration_fixed_cost)
            mig_dt = costs.migration_cost(task, cfg.migration_fixed_cost, True, cfg.dt_migration_discrepancy)
        hops = 1 + (h and not cache_hit)
        latency = costs.latency_breakdown(task, user, server, rate, cfg.queue_latency_s * hops,
                                          cfg.latency.decomposed)
        energy = costs.energy_breakdown(task, user, [server] if server else [],
                                        {server_id: rate} if server else {}, cfg, int(dt_used))
        paid = costs.incurred_cost(mig, cycles_off, cfg.cost_per_cycle)
        w = costs.satisfaction(latency.total_s, cfg.latency_min_s, cfg.latency_max_s,
                               cfg.baseline_satisfaction)
        q = costs.qoe(w, user.budget, paid, *user.qoe_weights)
        g = (costs.discrepancy_factor(cycles_off, server.cpu_freq_hz, server.est_freq_hz)
             if server is not None else 0.0)

        cache_violation = False
        if a.cache:
            if server_id is None:
                cache_violation = True
            else:
                dt_d, _ = DigitalTwinView.mirror_task(task)
                ok = costs.caching_feasible(*costs.normalize_caching(
                    task.data_bits, mig, cfg.data_ref_bits, cfg.cost_ref))
                ok_dt = costs.caching_feasible(*costs.normalize_caching(
                    dt_d, mig_dt, cfg.data_ref_bits, cfg.cost_ref))
                if ok and ok_dt:
                    self.cached_at[j] = server_id
                else:
                    cache_violation = True

        l_norm = latency.total_s / cfg.latency_max_s
        e_norm = energy.total_j / cfg.reference_energy_j
        objective = costs.objective_value(l_norm, e_norm, costs.utility(q.value), cfg.weights)
        cost = costs.CostBreakdown(
            latency=latency, energy=energy, qoe=q, migration_cost=mig, dt_migration_cost=mig_dt,
            incurred_cost=paid, discrepancy=g, latency_norm=l_norm, energy_norm=e_norm,
            objective=objective, migrated=bool(h), offloaded_bits=offloaded, cache_hit=cache_hit,
            cache_violation=cache_violation, task_violation=task.data_bits < cfg.task_min_bits,
        )
        self.history.append({"step": self.steps, "user": j, "position": pos, "anchor": anchor,
                             "migrated": h, "server": server_id, "action": idx})

        self.last_offloaded[j] = offloaded
        self.tasks[j] = self._sample_task(j)
        self._advance()
        self.steps += 1
        self.cur = (j + 1) % len(self.tasks)
        done = self.steps >= self.max_steps
        info = {"user": j, "action": idx, "server": server_id, "dt_used": dt_used}
        return StepOutcome(self.encode(self.cur), costs.reward_value(objective, cfg.reward_clip),
                           cost, done, info)

    def _advance(self):
        cfg = self.cfg
        self.t += 1
        if self.trajectories is None:
            for j in range(len(self.pos)):
                self.pos[j], self.waypoints[j] = synthetic_mobility(
                    self.pos[j], self.waypoints[j], self.speed[j], cfg.slot_s, cfg.area_side_km,
                    self._walk_rng)
        else:
            for j in range(len(self.pos)):
                new = self._traj(j).position(self.t)
                moved = math.hypot(new[0] - self.pos[j][0], new[1] - self.pos[j][1])
                self.speed[j] = moved / cfg.slot_s * 3600.0
                self.pos[j] = new
        sd = cfg.dt_drift
        self.r_srv = np.clip(self.r_srv + self._drift_rng.normal(0.0, sd, self.r_srv.shape),
                             0.0, MAX_DT_RATIO)
        self.r_usr = np.clip(self.r_usr + self._drift_rng.normal(0.0, sd, self.r_usr.shape),
                             0.0, MAX_DT_RATIO)


__all__ = [
    "BETA_LEVELS", "EdgeEnv", "MdpAction", "MdpState", "StepOutcome", "action_count",
    "dt_feature_indices", "kmh_to_km_per_slot", "state_dim",
]
