"""Stations, links, buffers, flow bundles, topology generation and routing.

A topology is a directed graph of stations. Each directed edge is a
mmWave link with a dense integer id; each link owns one outgoing buffer
at its source station. Flows move as bundles (groups of packets sharing
a source/destination/path).
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .propagation import Position

StationId = str


class TopologyError(Exception):
    """The topology cannot support the simulation (e.g. disconnected)."""


class TopologySpecError(ValueError):
    """Malformed topology description (duplicate edges, unknown stations...)."""


class FlowNotFoundError(KeyError):
    """Requested flow id is not present in the buffer."""


@dataclass
class FlowBundle:
    """A group of packets sharing source, destination and path."""

    id: int
    source: StationId
    destination: StationId
    current_location: StationId
    path: list[StationId]
    packet_count: int
    arrival_seq: int = 0


def get_next_hop(f: FlowBundle) -> Optional[StationId]:
    """Path successor of the bundle's current location; None at destination."""
    idx = f.path.index(f.current_location)
    if idx + 1 < len(f.path):
        return f.path[idx + 1]
    return None


def packet_step(f: FlowBundle) -> int:
    """Advance the bundle one hop. Returns its packet count on delivery, else 0."""
    nxt = get_next_hop(f)
    if nxt is None:
        raise RuntimeError(f"packet_step called on flow {f.id} already at destination")
    f.current_location = nxt
    if f.current_location == f.destination:
        return f.packet_count
    return 0


@dataclass
class Buffer:
    """Outgoing packet queue of one station toward one neighbor.

    FIFO by arrival stamp; overflow drops the part of an incoming bundle
    that does not fit.
    """

    source_name: StationId
    outgoing_to: StationId
    link_max_capacity: int
    max_packets: int
    flows: list[FlowBundle] = field(default_factory=list)
    used_bw: int = 0
    power: int = 0
    dropped_packets: int = 0
    _next_seq: int = 0

    @property
    def total_flows(self) -> int:
        return len(self.flows)

    @property
    def current_packets(self) -> int:
        return sum(f.packet_count for f in self.flows)

    def add_flow_to_q(self, f: FlowBundle) -> int:
        """Admit as much of the bundle as fits; drop the rest.

        Returns the admitted packet count. A fully rejected bundle is not
        stored. The bundle's arrival stamp is assigned here.
        """
        room = self.max_packets - self.current_packets
        accepted = min(f.packet_count, room)
        self.dropped_packets += f.packet_count - accepted
        if accepted > 0:
            f.packet_count = accepted
            f.arrival_seq = self._next_seq
            self._next_seq += 1
            self.flows.append(f)
        return accepted

    def remove_flow_from_q(self, flow_id: int) -> FlowBundle:
        for i, f in enumerate(self.flows):
            if f.id == flow_id:
                return self.flows.pop(i)
        raise FlowNotFoundError(flow_id)

    def zero_bw_in_buffer(self) -> None:
        self.used_bw = 0
        self.dropped_packets = 0

    def get_total_data(self) -> int:
        return self.current_packets

    def get_dropped_packets_in_q(self) -> int:
        return self.dropped_packets


@dataclass
class Link:
    """A directed mmWave edge with a per-step power state."""

    id: int
    src: StationId
    dst: StationId
    weight: float
    nominal_capacity: float
    buffer_max_packets: int
    power_level: int = 0
    active: bool = False


class Station:
    """A node: position, transceiver budget, and per-neighbor outgoing buffers."""

    def __init__(self, name: StationId, position: Position, max_transceiver: int):
        self.name = name
        self.position = position
        self.max_transceiver = max_transceiver
        self.current_transceiver = max_transceiver
        self.out_links: dict[StationId, Buffer] = {}
        self.links_out: dict[StationId, Link] = {}
        # Shared topology views, set by Topology.
        self.connection_matrix: dict[StationId, list[StationId]] = {}
        self.shortest_paths: dict[tuple[StationId, StationId], list[StationId]] = {}

    def initialize_out_queues(self, delta_t: float = 1.0) -> None:
        """(Re)build fresh buffers with zeroed counters for a new episode."""
        self.out_links = {}
        for nbr in sorted(self.links_out):
            link = self.links_out[nbr]
            self.out_links[nbr] = Buffer(
                source_name=self.name,
                outgoing_to=nbr,
                link_max_capacity=int(math.floor(link.nominal_capacity * delta_t)),
                max_packets=link.buffer_max_packets,
            )

    def add_flow(self, f: FlowBundle) -> int:
        """Queue a bundle toward its next hop; returns the admitted count."""
        nxt = get_next_hop(f)
        if nxt is None:
            raise RuntimeError(f"flow {f.id} is already at its destination")
        if nxt not in self.out_links:
            raise TopologyError(f"station {self.name} has no link toward {nxt}")
        return self.out_links[nxt].add_flow_to_q(f)

    def remove_flow(self, neighbor: StationId, flow_id: int) -> FlowBundle:
        return self.out_links[neighbor].remove_flow_from_q(flow_id)

    def is_link_activated(self, neighbor: StationId) -> bool:
        return self.links_out[neighbor].active

    def update_active_links(
        self,
        assignments: dict[StationId, int],
        stations: dict[StationId, "Station"],
    ) -> list[int]:
        """Activate outgoing links at the given power levels.

        Neighbors are visited in ascending id order. A nonzero level
        activates the link only while both endpoints still have a free
        transceiver; otherwise the link stays off this step. Returns the
        link ids refused for transceiver exhaustion.
        """
        unknown = set(assignments) - set(self.out_links)
        if unknown:
            raise TopologySpecError(f"assignments for unknown neighbors of {self.name}: {sorted(unknown)}")
        refused: list[int] = []
        for nbr in sorted(self.out_links):
            link = self.links_out[nbr]
            buf = self.out_links[nbr]
            level = assignments.get(nbr, 0)
            if level <= 0:
                link.active = False
                link.power_level = 0
                buf.power = 0
                continue
            other = stations[nbr]
            if self.current_transceiver < 1 or other.current_transceiver < 1:
                link.active = False
                link.power_level = 0
                buf.power = 0
                refused.append(link.id)
                continue
            link.active = True
            link.power_level = level
            buf.power = level
            self.current_transceiver -= 1
            other.current_transceiver -= 1
        return refused

    def get_buffers_observations(self) -> list[tuple[int, float, int]]:
        """(packets, load in [0,1], dropped this step) per buffer, neighbor-ascending."""
        out = []
        for nbr in sorted(self.out_links):
            buf = self.out_links[nbr]
            out.append((buf.current_packets, buf.current_packets / buf.max_packets, buf.dropped_packets))
        return out

    def zero_bw(self) -> None:
        for buf in self.out_links.values():
            buf.zero_bw_in_buffer()

    def get_dropped_packets(self) -> int:
        return sum(buf.get_dropped_packets_in_q() for buf in self.out_links.values())


@dataclass(frozen=True)
class StationSpec:
    name: StationId
    x: float
    y: float
    max_transceivers: int


@dataclass(frozen=True)
class EdgeSpec:
    src: StationId
    dst: StationId
    nominal_capacity: float
    max_packets: int


@dataclass(frozen=True)
class TopologySpec:
    stations: tuple[StationSpec, ...]
    edges: tuple[EdgeSpec, ...]
    weight_bounds: tuple[float, float]


class Topology:
    """Immutable graph structure plus per-step mutable link/buffer state."""

    def __init__(self, stations: dict[StationId, Station], links: list[Link]):
        self.stations = stations
        self.links = links
        self.edges_to_id = {(l.src, l.dst): l.id for l in links}
        self.id_to_edges = {l.id: (l.src, l.dst) for l in links}
        adjacency = {name: {} for name in stations}
        for l in links:
            adjacency[l.src][l.dst] = l.weight
        self.adjacency: dict[StationId, dict[StationId, float]] = adjacency
        self.shortest_paths = all_shortest_paths(adjacency)
        conn = {name: sorted(adjacency[name]) for name in stations}
        for st in stations.values():
            st.connection_matrix = conn
            st.shortest_paths = self.shortest_paths

    @property
    def num_links(self) -> int:
        return len(self.links)

    def position_of(self, name: StationId) -> Position:
        return self.stations[name].position

    def routable_pairs(self) -> list[tuple[StationId, StationId]]:
        """Ordered station pairs (s != d) with a path, in sorted order."""
        return sorted((s, d) for (s, d) in self.shortest_paths if s != d)

    def reset_transceivers(self) -> None:
        for st in self.stations.values():
            st.current_transceiver = st.max_transceiver

    def initialize_buffers(self, delta_t: float = 1.0) -> None:
        for st in self.stations.values():
            st.initialize_out_queues(delta_t)

    def update_active_links(self, levels: list[int]) -> list[int]:
        """Apply a per-link power-level vector, station by station in id order."""
        self.reset_transceivers()
        refused: list[int] = []
        for name in sorted(self.stations):
            st = self.stations[name]
            assignments = {nbr: levels[st.links_out[nbr].id] for nbr in st.links_out}
            refused.extend(st.update_active_links(assignments, self.stations))
        return refused

    @classmethod
    def generate(cls, spec: TopologySpec, rng: random.Random) -> "Topology":
        """Build a topology from a spec, drawing link weights uniformly.

        Link ids are dense and assigned in (src, dst) sorted order;
        weights are drawn in id order so a fixed seed reproduces the
        topology regardless of edge listing order.
        """
        names = [s.name for s in spec.stations]
        if len(set(names)) != len(names):
            raise TopologySpecError("duplicate station names")
        stations = {
            s.name: Station(s.name, Position(s.x, s.y), s.max_transceivers) for s in spec.stations
        }
        seen = set()
        for e in spec.edges:
            if e.src == e.dst:
                raise TopologySpecError(f"self-loop edge {e.src}->{e.dst}")
            if e.src not in stations or e.dst not in stations:
                raise TopologySpecError(f"edge {e.src}->{e.dst} references unknown station")
            if (e.src, e.dst) in seen:
                raise TopologySpecError(f"duplicate edge {e.src}->{e.dst}")
            seen.add((e.src, e.dst))
        w_min, w_max = spec.weight_bounds
        if w_min > w_max:
            raise TopologySpecError("weight bounds out of order")
        links = []
        for i, e in enumerate(sorted(spec.edges, key=lambda e: (e.src, e.dst))):
            links.append(
                Link(
                    id=i,
                    src=e.src,
                    dst=e.dst,
                    weight=rng.uniform(w_min, w_max),
                    nominal_capacity=e.nominal_capacity,
                    buffer_max_packets=e.max_packets,
                )
            )
        _check_connected(stations, links)
        topo = cls(stations, links)
        for l in links:
            stations[l.src].links_out[l.dst] = l
        topo.initialize_buffers()
        return topo


def _check_connected(stations: dict[StationId, Station], links: list[Link]) -> None:
    """Weak connectivity: the undirected skeleton must span all stations."""
    if not stations:
        raise TopologySpecError("topology has no stations")
    neighbors: dict[StationId, set[StationId]] = {name: set() for name in stations}
    for l in links:
        neighbors[l.src].add(l.dst)
        neighbors[l.dst].add(l.src)
    start = next(iter(stations))
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for nbr in neighbors[node]:
            if nbr not in seen:
                seen.add(nbr)
                frontier.append(nbr)
    if len(seen) != len(stations):
        missing = sorted(set(stations) - seen)
        raise TopologyError(f"topology is disconnected; unreachable stations: {missing}")


def all_shortest_paths(
    adjacency: dict[StationId, dict[StationId, float]],
) -> dict[tuple[StationId, StationId], list[StationId]]:
    """Minimal-weight path for every ordered pair that has one.

    Ties among equal-weight paths break to the lexicographically smallest
    station-id sequence. Dijkstra with (cost, path) heap entries: tuple
    comparison yields the lexicographic tie-break directly.
    """
    table: dict[tuple[StationId, StationId], list[StationId]] = {}
    for src in adjacency:
        heap: list[tuple[float, tuple[StationId, ...]]] = [(0.0, (src,))]
        done: set[StationId] = set()
        while heap:
            cost, path = heapq.heappop(heap)
            node = path[-1]
            if node in done:
                continue
            done.add(node)
            table[(src, node)] = list(path)
            for nbr, w in adjacency[node].items():
                if nbr not in done:
                    heapq.heappush(heap, (cost + w, path + (nbr,)))
    return table
