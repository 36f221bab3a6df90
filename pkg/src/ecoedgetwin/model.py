"""Domain types for servers, users, tasks and the digital-twin view, plus scenario construction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .config import ScenarioConfig

SPLIT_TOL = 1e-9
# Upper bound on the DT deviation ratio f~/f; keeps estimated frequencies positive.
MAX_DT_RATIO = 0.9


@dataclass(frozen=True)
class EdgeServer:
    id: int
    position: tuple[float, float]
    cpu_freq_hz: float
    dt_freq_dev_hz: float
    coverage_radius_km: float
    noise_power_w: float

    def __post_init__(self):
        if not self.cpu_freq_hz > self.dt_freq_dev_hz >= 0:
            raise ValueError(f"server {self.id}: need cpu_freq_hz > dt_freq_dev_hz >= 0")

    @property
    def est_freq_hz(self) -> float:
        return self.cpu_freq_hz - self.dt_freq_dev_hz


@dataclass(frozen=True)
class MobileUser:
    id: int
    position: tuple[float, float]
    speed_kmh: float
    cpu_freq_hz: float
    dt_freq_dev_hz: float
    tx_power_w: float
    budget: float
    qoe_weights: tuple[float, float]
    associated_server: int | None = None

    def __post_init__(self):
        if not self.cpu_freq_hz > self.dt_freq_dev_hz >= 0:
            raise ValueError(f"user {self.id}: need cpu_freq_hz > dt_freq_dev_hz >= 0")

    @property
    def est_freq_hz(self) -> float:
        return self.cpu_freq_hz - self.dt_freq_dev_hz


@dataclass(frozen=True)
class Task:
    """One offloadable unit. ``beta`` maps server id to its offloading factor;
    ``association`` is the server with pi_ij = 1 (None when unassociated)."""

    owner: int
    data_bits: float
    cpu_cycles: float
    alpha: float = 1.0
    beta: Mapping[int, float] = field(default_factory=dict)
    association: int | None = None
    migration_flag: int = 0
    cached_at: int | None = None

    def pi(self, server: int) -> int:
        return 1 if self.association == server else 0

    def offloaded_fraction(self) -> float:
        return sum(self.pi(i) * b for i, b in self.beta.items())

    def with_split(self, alpha: float, server: int | None, beta: float) -> "Task":
        if server is None:
            return replace(self, alpha=alpha, beta={}, association=None)
        return replace(self, alpha=alpha, beta={server: beta}, association=server)


@dataclass(frozen=True)
class DigitalTwinView:
    est_server_freq_hz: tuple[float, ...]
    est_user_freq_hz: tuple[float, ...]
    dt_migration_cost: float

    @classmethod
    def of(cls, servers, users, config: ScenarioConfig) -> "DigitalTwinView":
        return cls(
            est_server_freq_hz=tuple(s.est_freq_hz for s in servers),
            est_user_freq_hz=tuple(u.est_freq_hz for u in users),
            dt_migration_cost=config.migration_fixed_cost + config.dt_migration_discrepancy,
        )

    @staticmethod
    def mirror_task(task: Task) -> tuple[float, float]:
        """DT copies of (data_bits, cpu_cycles). The twin mirrors task attributes exactly."""
        return task.data_bits, task.cpu_cycles


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    servers: tuple[EdgeServer, ...]
    users: tuple[MobileUser, ...]
    dt: DigitalTwinView

    @property
    def server_positions(self) -> np.ndarray:
        if not self.servers:
            return np.zeros((0, 2))
        return np.array([s.position for s in self.servers], dtype=float)

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config.content_hash(),
            "area_side_km": self.config.area_side_km,
            "servers": [
                {"id": s.id, "position_km": list(s.position), "cpu_freq_hz": s.cpu_freq_hz,
                 "dt_freq_dev_hz": s.dt_freq_dev_hz, "coverage_radius_km": s.coverage_radius_km,
                 "noise_power_w": s.noise_power_w}
                for s in self.servers
            ],
            "users": [
                {"id": u.id, "position_km": list(u.position), "speed_kmh": u.speed_kmh,
                 "cpu_freq_hz": u.cpu_freq_hz, "dt_freq_dev_hz": u.dt_freq_dev_hz,
                 "tx_power_w": u.tx_power_w, "budget": u.budget, "qoe_weights": list(u.qoe_weights)}
                for u in self.users
            ],
            "dt": {
                "est_server_freq_hz": list(self.dt.est_server_freq_hz),
                "est_user_freq_hz": list(self.dt.est_user_freq_hz),
                "dt_migration_cost": self.dt.dt_migration_cost,
            },
        }


def grid_positions(n: int, side: float) -> list[tuple[float, float]]:
    """Lattice with spacing side/sqrt(n), ceil(sqrt(n)) columns, rows and partial last row centred."""
    if n <= 0:
        return []
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    step = side / math.sqrt(n)
    y0 = (side - (rows - 1) * step) / 2
    out = []
    for r in range(rows):
        m = min(cols, n - r * cols)
        x0 = (side - (m - 1) * step) / 2
        out.extend((x0 + c * step, y0 + r * step) for c in range(m))
    return out


def dt_ratio_interval(mean: float, spread: float | None = None) -> tuple[float, float]:
    # symmetric around the mean so the expected ratio equals it exactly;
    # no spread given means the widest such interval inside [0, MAX_DT_RATIO]
    half = min(mean, MAX_DT_RATIO - mean)
    if spread is not None:
        half = min(half, spread)
    return mean - half, mean + half


def build_scenario(config: ScenarioConfig, rng_seed: int | None = None) -> Scenario:
    config.validate()
    seed = config.seed if rng_seed is None else rng_seed
    rng = np.random.default_rng(seed)
    lo, hi = dt_ratio_interval(config.dt_error_mean, config.dt_error_spread)

    servers = []
    for i, pos in enumerate(grid_positions(config.server_count, config.area_side_km)):
        f = config.server_cpu_freq_hz
        servers.append(EdgeServer(
            id=i, position=pos, cpu_freq_hz=f, dt_freq_dev_hz=float(rng.uniform(lo, hi)) * f,
            coverage_radius_km=config.server_radius_km, noise_power_w=config.noise_power_w,
        ))

    users = []
    side = config.area_side_km
    for j in range(config.user_count):
        f = config.user_cpu_freq_hz
        users.append(MobileUser(
            id=j,
            position=(float(rng.uniform(0, side)), float(rng.uniform(0, side))),
            speed_kmh=float(rng.uniform(*config.user_speed_range_kmh)),
            cpu_freq_hz=f,
            dt_freq_dev_hz=float(rng.uniform(lo, hi)) * f,
            tx_power_w=float(rng.uniform(*config.tx_power_range_w)),
            budget=float(rng.uniform(*config.budget_range)),
            qoe_weights=config.user_qoe_weights(j),
        ))
    servers, users = tuple(servers), tuple(users)
    return Scenario(config, servers, users, DigitalTwinView.of(servers, users, config))


def validate_split(task: Task, association: Mapping[int, int] | Sequence[int] | None = None) -> bool:
    """True iff alpha and every beta lie in [0, 1] and alpha + sum(pi * beta) = 1."""
    if association is None:
        pi = {i: task.pi(i) for i in task.beta}
    elif isinstance(association, Mapping):
        pi = association
    else:
        pi = dict(enumerate(association))
    if not 0.0 <= task.alpha <= 1.0:
        return False
    if any(not 0.0 <= b <= 1.0 for b in task.beta.values()):
        return False
    total = task.alpha + sum(pi.get(i, 0) * b for i, b in task.beta.items())
    return abs(total - 1.0) <= SPLIT_TOL


def nearest_servers(user: MobileUser | tuple[float, float], scenario: Scenario, k: int) -> list[int]:
    """Indices of the k closest servers, ties broken by lower id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    pos = user.position if isinstance(user, MobileUser) else user
    return nearest_from(scenario.server_positions, pos, k)[0].tolist()


def nearest_from(server_xy: np.ndarray, pos, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(indices, distances in km) of the k nearest rows of ``server_xy``."""
    if len(server_xy) == 0:
        return np.zeros(0, dtype=int), np.zeros(0)
    d = np.hypot(server_xy[:, 0] - pos[0], server_xy[:, 1] - pos[1])
    order = np.lexsort((np.arange(len(d)), d))[:k]
    return order, d[order]
