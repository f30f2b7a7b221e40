"""Geometry and radio-propagation math.

Pure functions: Euclidean distances, arrival angles, free-space path loss,
a triangular antenna-directivity model, and uniform weather-noise sampling.
All power arithmetic happens in one of two domains selected by the config:
a decibel-like scalar domain (default) or a literal linear-gain domain.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum

SPEED_OF_LIGHT = 299792458.0  # m/s


class DegenerateGeometryError(ValueError):
    """Raised when colocated stations make a distance or angle undefined."""


class PowerDomain(str, Enum):
    DECIBEL = "decibel"
    VERBATIM_LINEAR = "verbatim-linear"


@dataclass(frozen=True)
class Position:
    """2D station position in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"position coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class PropagationConfig:
    """Radio parameters shared by every link.

    ``noise_min_db``/``noise_max_db`` bound the uniform per-link weather
    noise. ``power_domain`` selects how path loss enters the power budget.
    """

    carrier_frequency_hz: float
    noise_min_db: float = 0.0
    noise_max_db: float = 0.0
    power_domain: PowerDomain = PowerDomain.DECIBEL

    def __post_init__(self):
        if not 30e9 <= self.carrier_frequency_hz <= 300e9:
            raise ValueError(
                "carrier_frequency_hz must lie in the mmWave band [30e9, 300e9], "
                f"got {self.carrier_frequency_hz!r}"
            )
        if self.noise_min_db < 0 or self.noise_max_db < 0:
            raise ValueError("noise bounds must be non-negative")
        if self.noise_min_db > self.noise_max_db:
            raise ValueError("noise_min_db must not exceed noise_max_db")


def distance(a: Position, b: Position) -> float:
    """Euclidean distance between two stations, in meters."""
    return math.hypot(a.x - b.x, a.y - b.y)


def fsl(d: float, f: float, cfg: PropagationConfig) -> float:
    """Free-space path loss over distance ``d`` at carrier frequency ``f``.

    Decibel domain: 20*log10(4*pi*d*f / c), a positive dB loss.
    Verbatim-linear domain: (c / (4*pi*d*f))**2, a linear gain < 1.
    """
    if d <= 0:
        raise DegenerateGeometryError(f"path loss undefined for colocated stations (d={d!r})")
    if f <= 0:
        raise ValueError(f"carrier frequency must be positive, got {f!r}")
    arg = 4.0 * math.pi * d * f / SPEED_OF_LIGHT
    if cfg.power_domain is PowerDomain.VERBATIM_LINEAR:
        return 1.0 / (arg * arg)
    return 20.0 * math.log10(arg)


def angle_to_power(alpha: float) -> float:
    """Receiver directivity for an arrival angle of ``alpha`` degrees.

    Triangular main-lobe model: full gain at 0, linear falloff to zero at
    90 degrees, zero beyond.
    """
    if alpha < 0:
        raise ValueError(f"angle must be non-negative, got {alpha!r}")
    if alpha <= 90.0:
        return 1.0 - alpha / 90.0
    return 0.0


def interference_angle(victim_rx: Position, intended_tx: Position, interferer_tx: Position) -> float:
    """Angle at the victim receiver between its intended transmitter and an interferer.

    Returns degrees in [0, 180]. The dot product is clamped to [-1, 1]
    before arccos to survive rounding on near-collinear geometry.
    """
    ux, uy = intended_tx.x - victim_rx.x, intended_tx.y - victim_rx.y
    vx, vy = interferer_tx.x - victim_rx.x, interferer_tx.y - victim_rx.y
    nu = math.hypot(ux, uy)
    nv = math.hypot(vx, vy)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateGeometryError("angle undefined: a transmitter coincides with the receiver")
    cos_a = (ux / nu) * (vx / nv) + (uy / nu) * (vy / nv)
    cos_a = max(-1.0, min(1.0, cos_a))
    return math.degrees(math.acos(cos_a))


def sample_noise(rng: random.Random, cfg: PropagationConfig) -> float:
    """One uniform weather-noise draw in [noise_min_db, noise_max_db].

    Consumes exactly one draw from ``rng``.
    """
    return rng.uniform(cfg.noise_min_db, cfg.noise_max_db)
