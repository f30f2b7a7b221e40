"""Per-step power-assignment policies.

The greedy profit scheduler visits links in a seeded random order and
activates each one at the power level whose profit (packets gained on
the link minus packets lost on already-decided links through the new
interference) is maximal and strictly positive. Baselines: uniform
random levels and everything-at-full-power.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .interference import InterferenceModel, PowerLadder, StepNoise, link_radio_state
from .network import Topology
from .propagation import PropagationConfig, fsl


@dataclass(frozen=True)
class PowerAssignment:
    """Per-link ladder indices; index 0 = off."""

    levels: tuple[int, ...]


@dataclass(frozen=True)
class ProfitBreakdown:
    c_plus: float
    c_minus: float

    @property
    def profit(self) -> float:
        return self.c_plus - self.c_minus


@dataclass
class LinkDecision:
    """One greedy decision, recorded for replay and audit."""

    link_id: int
    chosen_level: int
    breakdown: Optional[ProfitBreakdown] = None
    refused_transceiver: bool = False


@dataclass
class ScheduleTrace:
    order: list[int] = field(default_factory=list)
    decisions: list[LinkDecision] = field(default_factory=list)


def _arriving(model, cfg, victim_id: int, interferer_id: int, p_interferer: float, noise) -> float:
    """Interference power one active link lands on a victim's receiver (>= 0)."""
    coup = model.coupling[victim_id, interferer_id]
    if coup == 0.0:
        return 0.0
    d = model.dist_tx_to_rx[victim_id, interferer_id]
    arriving = p_interferer - fsl(d, cfg.carrier_frequency_hz, cfg) - noise.eta(interferer_id)
    return coup * arriving if arriving > 0.0 else 0.0


def profit(
    t: Topology,
    model: InterferenceModel,
    ladder: PowerLadder,
    link_id: int,
    level: int,
    decided: dict[int, int],
    noise: StepNoise,
    cfg: PropagationConfig,
    delta_t: float = 1.0,
) -> ProfitBreakdown:
    """Profit of activating ``link_id`` at ``level`` given the decided set.

    c_plus is the candidate's own packet budget under interference from
    the decided links. c_minus is the packet loss the candidate inflicts
    on each decided link, scaled by that link's nominal capacity over its
    direct received power. Noise draws come from the shared per-step
    field, so every candidate power is judged against the same weather.
    """
    if level <= 0:
        raise ValueError("profit is defined for nonzero power levels only")
    p_cand = ladder.levels[level]
    incoming = sum(
        _arriving(model, cfg, link_id, other, ladder.levels[lvl], noise)
        for other, lvl in decided.items()
    )
    cand_link = t.links[link_id]
    state = link_radio_state(
        p_cand, model.link_length[link_id], noise.eta(link_id), incoming,
        cand_link.nominal_capacity, cfg, delta_t,
    )
    c_plus = float(state.packets_this_step)
    c_minus = 0.0
    for other, lvl in decided.items():
        p_other = ladder.levels[lvl]
        other_link = t.links[other]
        p_rec = p_other - fsl(model.link_length[other], cfg.carrier_frequency_hz, cfg) - noise.eta(other)
        if p_rec <= 0.0:
            continue  # link carries nothing either way
        loss = _arriving(model, cfg, other, link_id, p_cand, noise)
        c_minus += loss * other_link.nominal_capacity / p_rec * delta_t
    return ProfitBreakdown(c_plus, c_minus)


def profitable_schedule_traced(
    t: Topology,
    model: InterferenceModel,
    ladder: PowerLadder,
    rng: random.Random,
    noise: StepNoise,
    cfg: PropagationConfig,
    delta_t: float = 1.0,
) -> tuple[PowerAssignment, ScheduleTrace]:
    """Greedy profit pass over all links in a seeded random order.

    Each link is decided once: activated at the argmax-profit power if
    that profit is strictly positive (ties break to the lowest power),
    otherwise left off. Links whose activation would exhaust a
    transceiver at either endpoint are skipped.
    """
    order = [l.id for l in t.links]
    rng.shuffle(order)
    free = {name: st.max_transceiver for name, st in t.stations.items()}
    decided: dict[int, int] = {}
    trace = ScheduleTrace(order=list(order))
    for link_id in order:
        link = t.links[link_id]
        if free[link.src] < 1 or free[link.dst] < 1:
            trace.decisions.append(LinkDecision(link_id, 0, refused_transceiver=True))
            continue
        best_level = 0
        best: Optional[ProfitBreakdown] = None
        for level in range(1, len(ladder.levels)):
            pb = profit(t, model, ladder, link_id, level, decided, noise, cfg, delta_t)
            if pb.profit > 0.0 and (best is None or pb.profit > best.profit):
                best = pb
                best_level = level
        if best_level > 0:
            decided[link_id] = best_level
            free[link.src] -= 1
            free[link.dst] -= 1
        trace.decisions.append(LinkDecision(link_id, best_level, breakdown=best))
    levels = tuple(decided.get(l.id, 0) for l in t.links)
    return PowerAssignment(levels), trace


def profitable_schedule(
    t: Topology,
    model: InterferenceModel,
    ladder: PowerLadder,
    rng: random.Random,
    noise: StepNoise,
    cfg: PropagationConfig,
    delta_t: float = 1.0,
) -> PowerAssignment:
    assignment, _ = profitable_schedule_traced(t, model, ladder, rng, noise, cfg, delta_t)
    return assignment


def random_schedule(t: Topology, ladder: PowerLadder, rng: random.Random) -> PowerAssignment:
    """Independent uniform ladder index per link (off included)."""
    return PowerAssignment(tuple(rng.randrange(len(ladder.levels)) for _ in t.links))


def full_power_schedule(t: Topology, ladder: PowerLadder) -> PowerAssignment:
    """Every link at the top ladder level."""
    if len(ladder.levels) < 2:
        raise ValueError("power ladder has no active level")
    return PowerAssignment(tuple(ladder.top_index for _ in t.links))
