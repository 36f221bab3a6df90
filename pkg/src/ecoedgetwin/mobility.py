"""User mobility: random-waypoint motion and T-Drive trajectory replay."""
from __future__ import annotations

import csv
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

TDRIVE_TIME_FORMAT = "%Y-%m-%d %H:%M:%S"


def kmh_to_km_per_slot(speed_kmh: float, slot_s: float) -> float:
    return speed_kmh * slot_s / 3600.0


def reflect(value: float, side: float) -> float:
    """Fold a coordinate back into [0, side]."""
    if side <= 0:
        return 0.0
    period = 2 * side
    v = math.fmod(value, period)
    if v < 0:
        v += period
    return period - v if v > side else v


def synthetic_mobility(position, waypoint, speed_kmh: float, slot_s: float, side_km: float,
                       rng: np.random.Generator):
    """Advance one slot of random-waypoint motion. Returns (position, waypoint)."""
    if speed_kmh < 0:
        raise ValueError("speed must be >= 0")
    x, y = position
    wx, wy = waypoint
    remaining = kmh_to_km_per_slot(speed_kmh, slot_s)
    while remaining > 0:
        dx, dy = wx - x, wy - y
        dist = math.hypot(dx, dy)
        if dist > remaining:
            x += dx / dist * remaining
            y += dy / dist * remaining
            remaining = 0.0
        else:
            x, y = wx, wy
            remaining -= dist
            wx, wy = rng.uniform(0, side_km), rng.uniform(0, side_km)
    return (reflect(x, side_km), reflect(y, side_km)), (wx, wy)


@dataclass
class Trajectory:
    """Raw (timestamp, longitude, latitude) samples plus the slot-resampled path in km."""

    user_id: str
    samples: tuple
    times: np.ndarray = field(default=None, repr=False)
    positions: np.ndarray = field(default=None, repr=False)
    dropped_rows: int = 0

    def __post_init__(self):
        if len(self.samples) < 2:
            raise DataError(f"trajectory {self.user_id} needs at least 2 samples")
        ts = [s[0] for s in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise DataError(f"trajectory {self.user_id} timestamps must be strictly increasing")

    def __len__(self):
        return 0 if self.positions is None else len(self.positions)

    def position(self, step: int) -> tuple[float, float]:
        """Position at slot ``step``; the last point is held once the trace ends."""
        k = min(step, len(self.positions) - 1)
        return float(self.positions[k, 0]), float(self.positions[k, 1])


def _parse_time(text: str) -> float:
    return datetime.strptime(text.strip(), TDRIVE_TIME_FORMAT).replace(tzinfo=timezone.utc).timestamp()


def resample(times, xs, ys, slot_s: float):
    n = int(math.floor((times[-1] - times[0]) / slot_s + 1e-9))
    t = times[0] + slot_s * np.arange(n + 1)
    return t, np.column_stack([np.interp(t, times, xs), np.interp(t, times, ys)])


def load_tdrive(path: str | Path, area_side_km: float = 1.0, slot_s: float = 1.0) -> list[Trajectory]:
    """Parse ``taxi_id,datetime,longitude,latitude`` rows.

    Longitude/latitude are mapped onto [0, side]^2 by the bounding box of all usable rows and
    each trace is linearly interpolated onto a ``slot_s`` grid. Malformed rows are skipped;
    rows whose timestamp does not increase are dropped and counted per trajectory.
    """
    rows: OrderedDict[str, list] = OrderedDict()
    dropped: dict[str, int] = {}
    malformed = 0
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read trajectory file {path}: {exc}") from exc
    with fh:
        for n, rec in enumerate(csv.reader(fh)):
            if not rec or (n == 0 and rec[0].strip().lower() == "taxi_id"):
                continue
            try:
                taxi, stamp, lon, lat = rec
                sample = (_parse_time(stamp), float(lon), float(lat))
            except ValueError:
                malformed += 1
                continue
            if not all(math.isfinite(v) for v in sample):
                malformed += 1
                continue
            taxi = taxi.strip()
            kept = rows.setdefault(taxi, [])
            dropped.setdefault(taxi, 0)
            if kept and sample[0] <= kept[-1][0]:
                dropped[taxi] += 1
                continue
            kept.append(sample)
    if malformed:
        log.warning("skipped %d malformed row(s) in %s", malformed, path)
    n_dropped = sum(dropped.values())
    if n_dropped:
        log.warning("dropped %d row(s) with non-increasing timestamps in %s", n_dropped, path)

    usable = {k: v for k, v in rows.items() if len(v) >= 2}
    if not usable:
        raise DataError(f"no usable trajectories in {path}")

    allpts = np.array([s for v in usable.values() for s in v])
    lon_lo, lat_lo = allpts[:, 1].min(), allpts[:, 2].min()
    lon_span, lat_span = allpts[:, 1].max() - lon_lo, allpts[:, 2].max() - lat_lo

    def scale(values, lo, span):
        if span <= 0:
            return np.full(len(values), area_side_km / 2)
        return (values - lo) / span * area_side_km

    out = []
    for taxi, samples in usable.items():
        arr = np.array(samples)
        t, pos = resample(arr[:, 0], scale(arr[:, 1], lon_lo, lon_span),
                          scale(arr[:, 2], lat_lo, lat_span), slot_s)
        out.append(Trajectory(taxi, tuple(samples), t, pos, dropped[taxi]))
    return out


def write_tdrive(path: str | Path, rows) -> None:
    """Write (taxi_id, unix_time, lon, lat) tuples in T-Drive format."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for taxi, ts, lon, lat in rows:
            stamp = datetime.fromtimestamp(ts, tz=timezone.utc).strftime(TDRIVE_TIME_FORMAT)
            w.writerow([taxi, stamp, repr(float(lon)), repr(float(lat))])
