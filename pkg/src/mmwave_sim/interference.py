"""Per-step link radio state: interference coupling, capacities, packet budgets.

The coupling between every ordered link pair is precomputed once per
topology into an LxL model. Each step, the effective received power of
every active link is the direct received power minus the summed
interference from all other active links, and the link's capacity scales
its nominal capacity by the effective-to-direct power ratio.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .network import Link, Topology
from .propagation import (
    DegenerateGeometryError,
    PropagationConfig,
    angle_to_power,
    distance,
    fsl,
    interference_angle,
    sample_noise,
)


@dataclass(frozen=True)
class PowerLadder:
    """Ordered transmit-power levels; level 0 means the link is off."""

    levels: tuple[float, ...]

    def __post_init__(self):
        if not self.levels:
            raise ValueError("power ladder needs at least the off level")
        if self.levels[0] != 0.0:
            raise ValueError("power ladder must start with the off level 0")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("power ladder levels must be strictly increasing")

    @property
    def top_index(self) -> int:
        return len(self.levels) - 1

    def __len__(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class LinkRadioState:
    """Radio outcome of one link for one step."""

    p_received: float
    p_effective: float
    capacity: float
    packets_this_step: int


class InterferenceModel:
    """LxL geometric coupling: directivity factor and interferer-to-victim distance.

    Entry (victim, interferer) holds the receiver's directivity toward the
    interfering transmitter and the distance from that transmitter to the
    victim's receiver. Diagonal entries are unused. Pairs sharing a
    transmitter, or where the interferer transmits from the victim's
    receiver, couple with factor 0.
    """

    def __init__(self, coupling: np.ndarray, dist_tx_to_rx: np.ndarray, link_length: np.ndarray):
        self.coupling = coupling
        self.dist_tx_to_rx = dist_tx_to_rx
        self.link_length = link_length

    @property
    def num_links(self) -> int:
        return len(self.link_length)


def build_interference_model(t: Topology, cfg: PropagationConfig) -> InterferenceModel:
    L = t.num_links
    coupling = np.zeros((L, L))
    dist_tx_to_rx = np.zeros((L, L))
    link_length = np.zeros(L)
    for victim in t.links:
        rx = t.position_of(victim.dst)
        tx = t.position_of(victim.src)
        d = distance(tx, rx)
        if d == 0.0:
            raise DegenerateGeometryError(f"link {victim.src}->{victim.dst} has colocated endpoints")
        link_length[victim.id] = d
        for interferer in t.links:
            if interferer.id == victim.id:
                continue
            if interferer.src == victim.src or interferer.src == victim.dst:
                continue  # shared transmitter / transmitting from the receiver: no coupling
            alpha = interference_angle(rx, tx, t.position_of(interferer.src))
            coupling[victim.id, interferer.id] = angle_to_power(alpha)
            dist_tx_to_rx[victim.id, interferer.id] = distance(t.position_of(interferer.src), rx)
    return InterferenceModel(coupling, dist_tx_to_rx, link_length)


def received_power(t: Topology, l: Link, p: float, rng: random.Random, cfg: PropagationConfig) -> float:
    """Direct received power of a link transmitting at ``p``; draws one noise sample."""
    d = distance(t.position_of(l.src), t.position_of(l.dst))
    return p - fsl(d, cfg.carrier_frequency_hz, cfg) - sample_noise(rng, cfg)


def interference_term(
    victim: Link,
    interferer: Link,
    p_interferer: float,
    model: InterferenceModel,
    rng: random.Random,
    cfg: PropagationConfig,
) -> float:
    """Interference power the interferer lands on the victim's receiver; never negative."""
    coup = model.coupling[victim.id, interferer.id]
    if coup == 0.0:
        return 0.0
    d = model.dist_tx_to_rx[victim.id, interferer.id]
    arriving = p_interferer - fsl(d, cfg.carrier_frequency_hz, cfg) - sample_noise(rng, cfg)
    return max(0.0, coup * arriving)


def _mix(*parts: int) -> int:
    """Deterministic integer hash of a tuple of ints (hash() is salted for str only)."""
    h = 0x345678
    for p in parts:
        h = (h * 1000003 ^ (p & 0xFFFFFFFFFFFFFFFF)) & 0xFFFFFFFFFFFFFFFF
    return h


class StepNoise:
    """Noise draws for one (episode, step), keyed by link id.

    Each link gets exactly one uniform draw per step, reused for its role
    as receiver and as interferer, so results are independent of the
    order links are evaluated in.
    """

    def __init__(self, cfg: PropagationConfig, seed: int, episode: int, step: int):
        self._cfg = cfg
        self._seed = seed
        self._episode = episode
        self._step = step
        self._cache: dict[int, float] = {}

    def eta(self, link_id: int) -> float:
        if link_id not in self._cache:
            rng = random.Random(_mix(self._seed, self._episode, self._step, link_id))
            self._cache[link_id] = sample_noise(rng, self._cfg)
        return self._cache[link_id]


class NoiseField:
    """Factory of per-step noise draws from one seed."""

    def __init__(self, cfg: PropagationConfig, seed: int):
        self.cfg = cfg
        self.seed = seed

    def at(self, episode: int, step: int) -> StepNoise:
        return StepNoise(self.cfg, self.seed, episode, step)


def link_radio_state(
    p: float,
    link_length: float,
    eta: float,
    interference_sum: float,
    nominal_capacity: float,
    cfg: PropagationConfig,
    delta_t: float,
) -> LinkRadioState:
    """Capacity of one link given its power, geometry, noise and total interference."""
    p_rec = p - fsl(link_length, cfg.carrier_frequency_hz, cfg) - eta
    p_eff = p_rec - interference_sum
    if p_rec > 0.0:
        ratio = max(0.0, min(1.0, p_eff / p_rec))
        capacity = ratio * nominal_capacity
    else:
        capacity = 0.0
    return LinkRadioState(p_rec, p_eff, capacity, int(math.floor(capacity * delta_t)))


_ZERO_STATE = LinkRadioState(0.0, 0.0, 0.0, 0)


def adopt_interference(
    t: Topology,
    model: InterferenceModel,
    powers: Sequence[float],
    noise: StepNoise,
    cfg: PropagationConfig,
    delta_t: float = 1.0,
) -> list[LinkRadioState]:
    """Radio state of every link under a per-link power vector (0 = off).

    Inactive links get an all-zero state. Interference contributions are
    floored at zero per interferer; capacity is clamped to [0, nominal].
    """
    L = t.num_links
    if len(powers) != L:
        raise ValueError(f"expected {L} power entries, got {len(powers)}")
    states: list[LinkRadioState] = []
    f = cfg.carrier_frequency_hz
    for link in t.links:
        p = powers[link.id]
        if p <= 0.0:
            states.append(_ZERO_STATE)
            continue
        interference = 0.0
        for other in t.links:
            p_o = powers[other.id]
            if other.id == link.id or p_o <= 0.0:
                continue
            coup = model.coupling[link.id, other.id]
            if coup == 0.0:
                continue
            arriving = p_o - fsl(model.dist_tx_to_rx[link.id, other.id], f, cfg) - noise.eta(other.id)
            if arriving > 0.0:
                interference += coup * arriving
        states.append(
            link_radio_state(
                p, model.link_length[link.id], noise.eta(link.id), interference,
                link.nominal_capacity, cfg, delta_t,
            )
        )
    return states
