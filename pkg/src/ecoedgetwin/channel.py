"""Uplink channel: log-distance path loss, Rayleigh power fading, Shannon rate."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ChannelState:
    distance_m: float
    path_loss: float
    fading: float

    @property
    def coefficient(self) -> float:
        return math.sqrt(self.path_loss * self.fading)

    @property
    def gain(self) -> float:
        """|rho|^2"""
        return self.path_loss * self.fading


def path_loss(d_m, exponent: float = 2.7, reference_m: float = 1.0):
    """(d0/d)^eta. Works on scalars and arrays."""
    return (reference_m / np.asarray(d_m, dtype=float)) ** exponent


def sample_channel(d_m: float, rng: np.random.Generator, exponent: float = 2.7,
                   reference_m: float = 1.0) -> ChannelState:
    if not (math.isfinite(d_m) and d_m > 0):
        raise DomainError(f"distance must be > 0, got {d_m}")
    gamma = float(path_loss(d_m, exponent, reference_m))
    return ChannelState(d_m, gamma, float(rng.exponential(1.0)))


def snr(p_w, gain, d_m, sigma2_w, associated=1, literal: bool = True):
    num = np.asarray(associated) * np.asarray(p_w) * np.asarray(gain)
    den = np.asarray(sigma2_w) * (np.asarray(d_m) if literal else 1.0)
    return num / den


def transmission_rate(p_w: float, ch: ChannelState, sigma2_w: float, bandwidth_hz: float,
                      associated: int = 1, literal: bool = True) -> float:
    """B log2(1 + pi p |rho|^2 / (d sigma^2)); drop the 1/d factor with literal=False."""
    values = (p_w, ch.distance_m, ch.path_loss, ch.fading, sigma2_w, bandwidth_hz)
    if not all(math.isfinite(v) for v in values):
        raise DomainError("transmission_rate inputs must be finite")
    if sigma2_w <= 0 or bandwidth_hz <= 0 or ch.distance_m <= 0:
        raise DomainError("need sigma2 > 0, bandwidth > 0 and distance > 0")
    if not associated:
        return 0.0
    return bandwidth_hz * math.log2(1.0 + float(snr(p_w, ch.gain, ch.distance_m, sigma2_w, 1, literal)))
