"""Closed-form cost and utility models: split volumes, migration, caching rule,
latency with DT gap terms, energy, discrepancy factor, satisfaction, QoE, objective."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .config import ScenarioConfig
from .errors import ConsistencyError, DomainError, InfeasibleLinkError
from .model import EdgeServer, MobileUser, Task


@dataclass(frozen=True)
class LatencyBreakdown:
    local_s: float
    local_gap_s: float
    edge_s: float
    edge_gap_s: float
    queue_s: float

    @property
    def total_s(self) -> float:
        return self.local_s + self.local_gap_s + self.edge_s + self.edge_gap_s + self.queue_s


@dataclass(frozen=True)
class EnergyBreakdown:
    edge_compute_j: float
    comm_j: float
    local_compute_j: float
    updown_j: float
    dt_overhead_j: float

    @property
    def total_j(self) -> float:
        return (self.edge_compute_j + self.comm_j + self.local_compute_j
                + self.updown_j + self.dt_overhead_j)


@dataclass(frozen=True)
class QoeScore:
    satisfaction: float
    savings: float
    value: float


@dataclass(frozen=True)
class Weights:
    w1: float = 0.4
    w2: float = 0.4
    w3: float = 0.2

    def __post_init__(self):
        if any(not math.isfinite(w) or w < 0 for w in (self.w1, self.w2, self.w3)):
            raise DomainError("weights must be finite and nonnegative")

    @classmethod
    def of(cls, w) -> "Weights":
        return w if isinstance(w, Weights) else cls(*w)


@dataclass(frozen=True)
class CostBreakdown:
    latency: LatencyBreakdown
    energy: EnergyBreakdown
    qoe: QoeScore
    migration_cost: float
    dt_migration_cost: float
    incurred_cost: float
    discrepancy: float
    latency_norm: float
    energy_norm: float
    objective: float
    migrated: bool = False
    offloaded_bits: float = 0.0
    cache_hit: bool = False
    cache_violation: bool = False
    task_violation: bool = False


def _pi(task: Task, server: int, pi: int | None) -> int:
    if pi is not None:
        return int(pi)
    p = task.pi(server)
    if p == 0 and task.beta.get(server, 0.0) > 0:
        raise ConsistencyError(f"task has beta > 0 on unassociated server {server}")
    return p


def offloaded_volume(task: Task, server: int, pi: int | None = None) -> float:
    """T_ij = pi * beta * D. Pass ``pi`` to override the task's own association."""
    return _pi(task, server, pi) * task.beta.get(server, 0.0) * task.data_bits


def offloaded_cycles(task: Task, server: int, pi: int | None = None) -> float:
    return _pi(task, server, pi) * task.beta.get(server, 0.0) * task.cpu_cycles


def migration_cost(task: Task, fixed_cost: float, use_dt: bool = False,
                   dt_discrepancy: float = 0.0) -> float:
    """h * T * C_f, with C_f + C~_f in the DT view."""
    if task.migration_flag not in (0, 1):
        raise DomainError("migration_flag must be 0 or 1")
    if task.association is None:
        return 0.0
    unit = fixed_cost + dt_discrepancy if use_dt else fixed_cost
    return task.migration_flag * offloaded_volume(task, task.association) * unit


def normalize_caching(data_bits: float, mig_cost: float, data_ref: float, cost_ref: float):
    return data_bits / data_ref, mig_cost / cost_ref


def caching_feasible(data_norm: float, migration_norm: float) -> bool:
    return data_norm <= migration_norm


def latency_breakdown(task: Task, user: MobileUser, server: EdgeServer | None, rate_bps: float,
                      queue_s: float, decomposed: bool = False) -> LatencyBreakdown:
    fj, fj_dev = user.cpu_freq_hz, user.dt_freq_dev_hz
    if not fj > fj_dev >= 0:
        raise DomainError("user frequency must exceed its DT deviation")
    local_cycles = task.alpha * task.cpu_cycles
    local = local_cycles / fj
    local_gap = local_cycles * fj_dev / (fj * (fj - fj_dev))

    edge = edge_gap = queue = 0.0
    if server is not None:
        share = task.pi(server.id) * task.beta.get(server.id, 0.0)
        if share > 0:
            fi, fi_dev = server.cpu_freq_hz, server.dt_freq_dev_hz
            if not fi > fi_dev >= 0:
                raise DomainError("server frequency must exceed its DT deviation")
            if not rate_bps > 0:
                raise InfeasibleLinkError("offloaded fraction over a zero-rate link")
            cycles = share * task.cpu_cycles
            if decomposed:
                edge = share * task.data_bits / rate_bps + cycles / fi
                edge_gap = cycles * fi_dev / (fi * (fi - fi_dev))
            else:
                edge = cycles / (rate_bps * fi)
                edge_gap = cycles * fi_dev / (rate_bps * fi * (fi - fi_dev))
            queue = queue_s
    return LatencyBreakdown(local, local_gap, edge, edge_gap, queue)


def energy_breakdown(task: Task, user: MobileUser, servers: Sequence[EdgeServer],
                     rates: Mapping[int, float], cfg: ScenarioConfig,
                     dt_predictions: int = 0) -> EnergyBreakdown:
    e_unit = cfg.energy_per_cycle_j
    fsum = user.cpu_freq_hz + user.dt_freq_dev_hz
    if not fsum > 0:
        raise DomainError("user frequency must be positive")
    local = e_unit * task.alpha * task.cpu_cycles / fsum

    edge = comm = updown = 0.0
    for s in servers:
        share = task.pi(s.id) * task.beta.get(s.id, 0.0)
        if share <= 0:
            continue
        if not s.cpu_freq_hz + s.dt_freq_dev_hz > 0:
            raise DomainError("server frequency must be positive")
        rate = rates.get(s.id, 0.0)
        if not rate > 0:
            raise InfeasibleLinkError("offloaded fraction over a zero-rate link")
        bits = share * task.data_bits
        edge += share * task.cpu_cycles * e_unit / (s.cpu_freq_hz + s.dt_freq_dev_hz)
        comm += cfg.comm_energy_per_bit_j * bits
        updown += user.tx_power_w * bits / rate
        updown += cfg.download_power_w * cfg.result_size_fraction * bits / rate
    dt = dt_predictions * cfg.dt_energy_per_prediction_j
    return EnergyBreakdown(edge, comm, local, updown, dt)


def discrepancy_factor(workload_cycles: float, actual_freq_hz: float, est_freq_hz: float) -> float:
    """G = -lambda (f_hat - f) / (f (f + f_hat))."""
    if not (actual_freq_hz > 0 and est_freq_hz > 0):
        raise DomainError("frequencies must be positive")
    f, fh = actual_freq_hz, est_freq_hz
    return -workload_cycles * (fh - f) / (f * (f + fh))


def satisfaction(latency_s: float, l_min: float, l_max: float, baseline: float) -> float:
    if latency_s <= l_min:
        return 1.0
    if latency_s <= l_max:
        return (l_max - latency_s) / (l_max - l_min)
    return baseline


def qoe(w: float, budget: float, cost_incurred: float, lambda_w: float, lambda_s: float) -> QoeScore:
    if not budget > 0:
        raise DomainError("budget must be > 0")
    s = (budget - cost_incurred) / budget
    return QoeScore(w, s, lambda_w * w + lambda_s * s)


def incurred_cost(migration: float, offloaded_cycles: float, cost_per_cycle: float) -> float:
    return migration + cost_per_cycle * offloaded_cycles


def utility(q: float) -> float:
    """U(QoE). Identity."""
    return q


def objective_value(latency_s: float, energy_j: float, qoe_sum: float, w) -> float:
    """w1 L + w2 E - w3 sum U(QoE) on normalized inputs."""
    w = Weights.of(w)
    return w.w1 * latency_s + w.w2 * energy_j - w.w3 * qoe_sum


def reward_value(objective: float, clip: float | None = None) -> float:
    """Negated objective, with the objective capped at ``clip`` when one is set."""
    return -(objective if clip is None else min(objective, clip))
