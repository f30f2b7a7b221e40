"""The episode machine: demand, flow movement, observations, reward, termination.

One episode routes a randomly generated demand (a list of packet
bundles with shortest paths attached) until everything is delivered or
dropped, or a step cap is hit. Each step applies a per-link power
assignment, fixes every active link's packet budget from the
interference model, and moves bundles at most one hop.
"""

from __future__ import annotations

import copy
import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .interference import (
    InterferenceModel,
    LinkRadioState,
    NoiseField,
    PowerLadder,
    adopt_interference,
)
from .network import FlowBundle, StationId, Topology, packet_step
from .propagation import PropagationConfig


class MalformedActionError(ValueError):
    """Action vector has the wrong length or out-of-range entries."""


class LifecycleError(RuntimeError):
    """step() called on a finished episode, or no episode started."""


class EpisodeNotFoundError(IndexError):
    """reset_custom index outside the pre-generated evaluation list."""


@dataclass(frozen=True)
class DemandConfig:
    """Ranges for random episode demand (inclusive bounds)."""

    flow_count_min: int
    flow_count_max: int
    packet_min: int
    packet_max: int

    def __post_init__(self):
        if not 1 <= self.flow_count_min <= self.flow_count_max:
            raise ValueError("flow count range must satisfy 1 <= min <= max")
        if not 1 <= self.packet_min <= self.packet_max:
            raise ValueError("packet range must satisfy 1 <= min <= max")


@dataclass(frozen=True)
class EnvConfig:
    beta: float = 1.0
    delta_t: float = 1.0
    max_steps: Optional[int] = None  # None -> max_steps_factor * total_packets
    max_steps_factor: int = 10
    observe_after_injection: bool = True


@dataclass(frozen=True)
class FlowSeed:
    source: StationId
    destination: StationId
    packet_count: int
    path: tuple[StationId, ...]


@dataclass(frozen=True)
class EpisodeSpec:
    """Pre-generated demand for one episode."""

    demand_matrix: dict[tuple[StationId, StationId], int]
    total_packets: int
    flows: tuple[FlowSeed, ...]


def convert_actions_to_edges(
    action: Sequence[float], ladder: PowerLadder, t: Topology
) -> list[int]:
    """Map an agent action vector in [0,1]^L to per-link ladder indices.

    Entry i addresses link i. Values are scaled by the top ladder level
    and snapped to the nearest level; exact midpoints snap to the lower
    level. Zero means off.
    """
    if len(action) != t.num_links:
        raise MalformedActionError(f"expected {t.num_links} action entries, got {len(action)}")
    levels = []
    top = ladder.levels[-1]
    for a in action:
        try:
            a = float(a)
        except (TypeError, ValueError):
            raise MalformedActionError(f"non-numeric action entry {a!r}") from None
        if not (0.0 <= a <= 1.0) or math.isnan(a):
            raise MalformedActionError(f"action entry {a!r} outside [0, 1]")
        target = a * top
        best = 0
        best_err = abs(ladder.levels[0] - target)
        for i, lvl in enumerate(ladder.levels[1:], start=1):
            err = abs(lvl - target)
            if err < best_err:
                best, best_err = i, err
        levels.append(best)
    return levels


def reward(delivered_this_step: int, dropped_this_step: int, beta: float = 1.0) -> float:
    """Per-step reward: packets delivered minus beta times packets dropped."""
    return delivered_this_step - beta * dropped_this_step


@dataclass
class StepResult:
    observation: list[float]
    reward: float
    done: bool
    info: dict


class RoutingEnv:
    """Sequential episode environment over a fixed topology.

    Holds no scheduler: callers pass a per-link power assignment (or an
    agent action vector) into every step. Noise is keyed by (episode,
    step, link) from one seed, so traces are fully determined by the
    seed set regardless of evaluation order.
    """

    def __init__(
        self,
        topology: Topology,
        model: InterferenceModel,
        ladder: PowerLadder,
        prop_cfg: PropagationConfig,
        demand_cfg: DemandConfig,
        env_cfg: EnvConfig = EnvConfig(),
        noise_seed: int = 0,
        demand_seed: int = 0,
    ):
        self.topology = topology
        self.model = model
        self.ladder = ladder
        self.prop_cfg = prop_cfg
        self.demand_cfg = demand_cfg
        self.cfg = env_cfg
        self.noise = NoiseField(prop_cfg, noise_seed)
        self._demand_rng = random.Random(demand_seed)
        self.eval_episodes: list[EpisodeSpec] = []
        self._train_episode_counter = 0
        # Per-episode state.
        self._spec: Optional[EpisodeSpec] = None
        self._episode_key = 0
        self._next_flow_id = 0
        self._injected = False
        self.step_count = 0
        self.delivered = 0
        self.dropped = 0
        self.total_packets = 0
        self.max_steps = 0
        self.done = True
        self.truncated = False
        self.last_radio_states: list[LinkRadioState] = []

    # -- demand -----------------------------------------------------------

    def generate_demand_random(self, rng: Optional[random.Random] = None) -> EpisodeSpec:
        """Random demand: uniform flow count, uniform routable pair, uniform size."""
        rng = rng if rng is not None else self._demand_rng
        pairs = self.topology.routable_pairs()
        k = rng.randint(self.demand_cfg.flow_count_min, self.demand_cfg.flow_count_max)
        flows = []
        demand: dict[tuple[StationId, StationId], int] = {}
        for _ in range(k):
            src, dst = pairs[rng.randrange(len(pairs))]
            count = rng.randint(self.demand_cfg.packet_min, self.demand_cfg.packet_max)
            path = tuple(self.topology.shortest_paths[(src, dst)])
            flows.append(FlowSeed(src, dst, count, path))
            demand[(src, dst)] = demand.get((src, dst), 0) + count
        return EpisodeSpec(demand, sum(f.packet_count for f in flows), tuple(flows))

    def build_eval_list(self, n: int) -> None:
        """Pre-generate the shared evaluation episodes (once per run)."""
        self.eval_episodes = [self.generate_demand_random() for _ in range(n)]

    def set_eval_list(self, episodes: Sequence[EpisodeSpec]) -> None:
        self.eval_episodes = list(episodes)

    # -- lifecycle --------------------------------------------------------

    def reset(self) -> list[float]:
        """Start a fresh episode with newly drawn random demand."""
        spec = self.generate_demand_random()
        key = self._train_episode_counter
        self._train_episode_counter += 1
        return self._begin_episode(spec, key)

    def reset_custom(self, episode_index: int) -> list[float]:
        """Replay a pre-generated evaluation episode verbatim."""
        if not 0 <= episode_index < len(self.eval_episodes):
            raise EpisodeNotFoundError(episode_index)
        return self._begin_episode(self.eval_episodes[episode_index], episode_index)

    def _begin_episode(self, spec: EpisodeSpec, episode_key: int) -> list[float]:
        self._spec = copy.deepcopy(spec)
        self._episode_key = episode_key
        self._next_flow_id = 0
        self._injected = False
        self.step_count = 0
        self.delivered = 0
        self.dropped = 0
        self.total_packets = spec.total_packets
        self.max_steps = (
            self.cfg.max_steps
            if self.cfg.max_steps is not None
            else max(1, self.cfg.max_steps_factor * spec.total_packets)
        )
        self.done = False
        self.truncated = False
        self.last_radio_states = []
        self.topology.initialize_buffers(self.cfg.delta_t)
        self.topology.reset_transceivers()
        for link in self.topology.links:
            link.active = False
            link.power_level = 0
        if self.cfg.observe_after_injection:
            self._inject_flows()
        return self.get_state_observation()

    def _inject_flows(self) -> None:
        """Enqueue every demand flow at its source; overflow counts as dropped."""
        assert self._spec is not None
        for seed in self._spec.flows:
            bundle = FlowBundle(
                id=self._next_flow_id,
                source=seed.source,
                destination=seed.destination,
                current_location=seed.source,
                path=list(seed.path),
                packet_count=seed.packet_count,
            )
            self._next_flow_id += 1
            accepted = self.topology.stations[seed.source].add_flow(bundle)
            self.dropped += seed.packet_count - accepted
        self._injected = True
        if self.total_packets > 0 and self.dropped == self.total_packets:
            self.done = True  # everything overflowed on arrival

    # -- stepping ---------------------------------------------------------

    def next_step_noise(self):
        """Noise draws the coming step will use; schedulers share these."""
        return self.noise.at(self._episode_key, self.step_count)

    def step(self, action: Sequence[float]) -> StepResult:
        levels = convert_actions_to_edges(action, self.ladder, self.topology)
        return self.step_assignment(levels)

    def step_assignment(self, levels: Sequence[int]) -> StepResult:
        """Advance one step under a per-link power-level assignment."""
        if self._spec is None:
            raise LifecycleError("reset the environment before stepping")
        if self.done:
            raise LifecycleError("episode is finished; call reset")
        levels = list(levels)
        if len(levels) != self.topology.num_links:
            raise MalformedActionError(
                f"expected {self.topology.num_links} levels, got {len(levels)}"
            )
        for lvl in levels:
            if not isinstance(lvl, int) or not 0 <= lvl < len(self.ladder.levels):
                raise MalformedActionError(f"invalid ladder index {lvl!r}")

        # (1) zero per-step bandwidth and drop counters
        for st in self.topology.stations.values():
            st.zero_bw()
        # (2) transceiver-constrained activation
        self.topology.update_active_links(levels)
        # (3) fix per-link packet budgets from the interference model
        powers = [
            self.ladder.levels[l.power_level] if l.active else 0.0 for l in self.topology.links
        ]
        noise = self.noise.at(self._episode_key, self.step_count)
        states = adopt_interference(
            self.topology, self.model, powers, noise, self.prop_cfg, self.cfg.delta_t
        )
        self.last_radio_states = states
        # (4) late injection (when reset did not inject)
        if not self._injected:
            self._inject_flows()
        # (5) move bundles one hop, splitting on partial budgets
        delivered_step = self._process_flows(states)
        # (6) tallies
        dropped_step = sum(st.get_dropped_packets() for st in self.topology.stations.values())
        self.delivered += delivered_step
        self.dropped += dropped_step
        remaining = self.total_packets - self.delivered - self.dropped
        self.step_count += 1
        if remaining == 0:
            self.done = True
        elif self.step_count >= self.max_steps:
            self.done = True
            self.truncated = True
        # (7) reward, observation
        r = reward(delivered_step, dropped_step, self.cfg.beta)
        info = {
            "delivered": self.delivered,
            "dropped": self.dropped,
            "delivered_step": delivered_step,
            "dropped_step": dropped_step,
            "remaining": remaining,
            "step_count": self.step_count,
            "truncated": self.truncated,
            "packets_this_step": [s.packets_this_step for s in states],
        }
        return StepResult(self.get_state_observation(), r, self.done, info)

    def _process_flows(self, states: list[LinkRadioState]) -> int:
        """Serve each active link's buffer up to its packet budget.

        Arrivals are staged and enqueued only after every link has been
        served, so a bundle advances at most one hop per step.
        """
        delivered = 0
        staged: list[FlowBundle] = []
        for link in self.topology.links:
            if not link.active:
                continue
            budget = states[link.id].packets_this_step
            buf = self.topology.stations[link.src].out_links[link.dst]
            while budget > 0 and buf.flows:
                head = buf.flows[0]
                if head.packet_count <= budget:
                    buf.flows.pop(0)
                    moved = head
                else:
                    moved = FlowBundle(
                        id=self._next_flow_id,
                        source=head.source,
                        destination=head.destination,
                        current_location=head.current_location,
                        path=head.path,
                        packet_count=budget,
                    )
                    self._next_flow_id += 1
                    head.packet_count -= budget
                moved_count = moved.packet_count
                budget -= moved_count
                buf.used_bw += moved_count
                got = packet_step(moved)
                if got:
                    delivered += got
                else:
                    staged.append(moved)
        for bundle in staged:
            self.topology.stations[bundle.current_location].add_flow(bundle)
        return delivered

    # -- observations -----------------------------------------------------

    def get_state_observation(self) -> list[float]:
        """Flat (packets, load, dropped) triples, station-major, neighbor-ascending."""
        obs: list[float] = []
        for name in sorted(self.topology.stations):
            for packets, load, dropped in self.topology.stations[name].get_buffers_observations():
                obs.extend((float(packets), load, float(dropped)))
        return obs

    def get_dropped_packets(self) -> int:
        """Sum of per-step buffer drops across all stations."""
        return sum(st.get_dropped_packets() for st in self.topology.stations.values())

    def buffered_packets(self) -> int:
        return sum(
            buf.current_packets
            for st in self.topology.stations.values()
            for buf in st.out_links.values()
        )

    @property
    def observation_length(self) -> int:
        return 3 * self.topology.num_links
