"""Scenario configuration and its JSON representation.

All quantities are SI unless the field name says otherwise (``_km``, ``_kmh``).
Defaults for the frequencies, energy coefficients, prices and budgets are
invented values chosen so that the satisfaction window [L_min, L_max] is
actually reachable by the sampled tasks; see README for the rationale.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError

KILOBYTE_BITS = 8000.0


@dataclass(frozen=True)
class ChannelConfig:
    path_loss_exponent: float = 2.7
    reference_distance_m: float = 1.0
    # Keep the explicit 1/d factor of the printed rate formula on top of path loss.
    literal_eq6: bool = True


@dataclass(frozen=True)
class LatencyConfig:
    # False: edge latency = beta*C / (R * f_i) as printed.
    # True: transmission plus compute, T/R + beta*C/f_i.
    decomposed: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    area_side_km: float
    server_density: float
    user_count: int
    server_radius_km: float = 0.15
    bandwidth_hz: float = 20e6
    noise_power_w: float = 2e-12
    tx_power_range_w: tuple[float, float] = (0.2, 0.6)
    data_size_range_bits: tuple[float, float] = (600 * KILOBYTE_BITS, 800 * KILOBYTE_BITS)
    cycles_per_bit_range: tuple[float, float] = (200 / KILOBYTE_BITS, 400 / KILOBYTE_BITS)
    queue_latency_s: float = 0.002
    latency_min_s: float = 0.15
    latency_max_s: float = 0.25
    migration_fixed_cost: float = 2e-8
    dt_migration_discrepancy: float = 2e-9
    energy_per_cycle_j: float = 0.1
    dt_energy_per_prediction_j: float = 1e-3
    comm_energy_per_bit_j: float = 4e-9
    dt_error_mean: float = 0.5
    # half-width of the per-device ratio interval; None = widest symmetric one
    dt_error_spread: float | None = None
    weights: tuple[float, float, float] = (0.4, 0.4, 0.2)
    qoe_weights: tuple = (0.5, 0.5)
    baseline_satisfaction: float = 0.2
    budget_range: tuple[float, float] = (0.5, 1.5)
    min_task_bits: float | None = None
    seed: int = 0
    user_cpu_freq_hz: float = 1.5e6
    server_cpu_freq_hz: float = 1.5e7
    user_speed_range_kmh: tuple[float, float] = (0.0, 60.0)
    slot_s: float = 1.0
    candidate_servers: int = 5
    dt_drift: float = 0.02
    download_power_w: float = 0.1
    result_size_fraction: float = 0.1
    cost_per_cycle: float = 4e-6
    energy_ref_j: float | None = None
    # cap on the per-step objective fed back as reward (metrics keep the raw values)
    reward_clip: float | None = 10.0
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    latency: LatencyConfig = field(default_factory=LatencyConfig)

    def __post_init__(self):
        self.validate()

    # -- derived -----------------------------------------------------------
    @property
    def server_count(self) -> int:
        return int(math.floor(self.server_density * self.area_side_km ** 2 + 0.5))

    @property
    def task_min_bits(self) -> float:
        if self.min_task_bits is None:
            return self.data_size_range_bits[0]
        return self.min_task_bits

    @property
    def data_ref_bits(self) -> float:
        return self.data_size_range_bits[1]

    @property
    def cost_ref(self) -> float:
        return self.migration_fixed_cost * self.data_ref_bits

    @property
    def cycles_ref(self) -> float:
        return self.data_size_range_bits[1] * self.cycles_per_bit_range[1]

    @property
    def reference_energy_j(self) -> float:
        """Energy of running the largest task fully locally with no DT deviation."""
        if self.energy_ref_j is not None:
            return self.energy_ref_j
        return self.energy_per_cycle_j * self.cycles_ref / self.user_cpu_freq_hz

    def user_qoe_weights(self, j: int) -> tuple[float, float]:
        qw = self.qoe_weights
        if _is_pair(qw):
            return float(qw[0]), float(qw[1])
        return float(qw[j][0]), float(qw[j][1])

    # -- validation --------------------------------------------------------
    def validate(self) -> None:
        def fail(msg):
            raise ConfigError(msg)

        if not self.area_side_km > 0:
            fail("area_side_km must be > 0")
        if self.server_density < 0:
            fail("server_density must be >= 0")
        if int(self.user_count) != self.user_count or self.user_count < 1:
            fail("user_count must be a positive integer")
        for name in ("tx_power_range_w", "data_size_range_bits", "cycles_per_bit_range",
                     "budget_range", "user_speed_range_kmh"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                fail(f"{name} must be a nonempty interval, got ({lo}, {hi})")
        if self.tx_power_range_w[0] < 0:
            fail("tx_power_range_w must be nonnegative")
        if self.data_size_range_bits[0] <= 0 or self.cycles_per_bit_range[0] <= 0:
            fail("data_size_range_bits and cycles_per_bit_range must be positive")
        if self.budget_range[0] <= 0:
            fail("budget_range must be positive (B_j > 0)")
        if self.user_speed_range_kmh[0] < 0:
            fail("user_speed_range_kmh must be nonnegative")
        if not self.latency_min_s < self.latency_max_s:
            fail("latency_min_s must be < latency_max_s (L_min < L_max)")
        if not 0.0 <= self.dt_error_mean <= 0.9:
            fail("dt_error_mean must lie in [0, 0.9]")
        if len(self.weights) != 3 or any(not math.isfinite(w) or w < 0 for w in self.weights):
            fail("weights must be three finite nonnegative numbers (w1, w2, w3)")
        if not 0.0 <= self.baseline_satisfaction < 1.0:
            fail("baseline_satisfaction must lie in [0, 1)")
        pairs = [self.qoe_weights] if _is_pair(self.qoe_weights) else list(self.qoe_weights)
        if not _is_pair(self.qoe_weights) and len(pairs) != self.user_count:
            fail("qoe_weights must be one (lambda_w, lambda_s) pair or one pair per user")
        for lw, ls in pairs:
            if lw < 0 or ls < 0 or abs(lw + ls - 1.0) > 1e-9:
                fail(f"qoe_weights must satisfy lambda_w + lambda_s = 1, got ({lw}, {ls})")
        for name in ("bandwidth_hz", "noise_power_w", "user_cpu_freq_hz", "server_cpu_freq_hz",
                     "slot_s", "server_radius_km"):
            if not getattr(self, name) > 0:
                fail(f"{name} must be > 0")
        for name in ("queue_latency_s", "migration_fixed_cost", "dt_migration_discrepancy",
                     "energy_per_cycle_j", "dt_energy_per_prediction_j", "comm_energy_per_bit_j",
                     "dt_drift", "download_power_w", "result_size_fraction", "cost_per_cycle"):
            if not getattr(self, name) >= 0:
                fail(f"{name} must be >= 0")
        if self.migration_fixed_cost <= 0:
            fail("migration_fixed_cost must be > 0 (it sets the caching cost scale)")
        if self.min_task_bits is not None and self.min_task_bits < 0:
            fail("min_task_bits must be >= 0")
        if int(self.candidate_servers) != self.candidate_servers or self.candidate_servers < 1:
            fail("candidate_servers must be an integer >= 1")
        if self.energy_ref_j is not None and not self.energy_ref_j > 0:
            fail("energy_ref_j must be > 0")
        if self.dt_error_spread is not None and self.dt_error_spread < 0:
            fail("dt_error_spread must be >= 0 or null")
        if self.reward_clip is not None and not self.reward_clip > 0:
            fail("reward_clip must be > 0 or null")
        if not self.channel.path_loss_exponent > 0 or not self.channel.reference_distance_m > 0:
            fail("channel.path_loss_exponent and channel.reference_distance_m must be > 0")

    # -- (de)serialization -------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        return json.loads(json.dumps(d))

    def content_hash(self) -> str:
        """git-style blob hash of the canonical JSON form."""
        body = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        fields = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(fields))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        required = [n for n, f in fields.items()
                    if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING]
        for name in required:
            if name not in data:
                raise ConfigError(f"missing required config key: {name}")
        kwargs: dict[str, Any] = {}
        for name, value in data.items():
            if name == "channel":
                kwargs[name] = _sub(ChannelConfig, value, "channel")
            elif name == "latency":
                kwargs[name] = _sub(LatencyConfig, value, "latency")
            elif name == "qoe_weights":
                kwargs[name] = _tuplify(value)
            elif isinstance(value, list):
                kwargs[name] = tuple(value)
            else:
                kwargs[name] = value
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def city(cls, user_count: int = 50, **overrides) -> "ScenarioConfig":
        """The 3 km / 5 per km^2 layout (45 servers)."""
        return cls(area_side_km=3.0, server_density=5.0, user_count=user_count, **overrides)

    @classmethod
    def desk(cls, **overrides) -> "ScenarioConfig":
        """Small 1 km layout used by the acceptance experiments."""
        return cls(area_side_km=1.0, server_density=5.0, user_count=10, **overrides)


def _is_pair(value) -> bool:
    return (isinstance(value, (tuple, list)) and len(value) == 2
            and all(isinstance(v, (int, float)) for v in value))


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def _sub(kind, value, prefix):
    if not isinstance(value, dict):
        raise ConfigError(f"{prefix} must be a JSON object")
    names = {f.name for f in dataclasses.fields(kind)}
    unknown = sorted(set(value) - names)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(prefix + '.' + u for u in unknown)}")
    return kind(**value)


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return ScenarioConfig.from_dict(data)
