import random

import pytest

from mmwave_sim.environment import DemandConfig, EnvConfig, RoutingEnv
from mmwave_sim.interference import PowerLadder, build_interference_model
from mmwave_sim.network import EdgeSpec, StationSpec, Topology, TopologySpec
from mmwave_sim.propagation import PropagationConfig


def make_topology(stations, edges, weight_bounds=(1.0, 1.0), seed=0,
                  capacity=4.0, max_packets=1000, transceivers=4):
    """stations: [(name, x, y)]; edges: [(src, dst)] or [(src, dst, cap, maxp)]."""
    st_specs = tuple(StationSpec(n, float(x), float(y), transceivers) for n, x, y in stations)
    e_specs = []
    for e in edges:
        if len(e) == 2:
            e_specs.append(EdgeSpec(e[0], e[1], capacity, max_packets))
        else:
            e_specs.append(EdgeSpec(e[0], e[1], float(e[2]), int(e[3])))
    return Topology.generate(TopologySpec(st_specs, tuple(e_specs), weight_bounds), random.Random(seed))


@pytest.fixture
def prop_cfg():
    return PropagationConfig(carrier_frequency_hz=60e9)


@pytest.fixture
def ladder():
    return PowerLadder((0.0, 110.0))


def line4_topology(capacity=4.0, max_packets=1000, transceivers=2):
    """A-B-C-D line, 100 m spacing, forward links only.

    At 60 GHz with transmit power 110 the next-hop loss (~108.0) leaves a
    positive margin while every interferer is two or more hops away
    (loss >= ~114.0), so interference terms floor to zero and every link
    runs at its nominal capacity.
    """
    return make_topology(
        [("A", 0, 0), ("B", 100, 0), ("C", 200, 0), ("D", 300, 0)],
        [("A", "B"), ("B", "C"), ("C", "D")],
        capacity=capacity, max_packets=max_packets, transceivers=transceivers,
    )


def square_topology(capacity=5.0, max_packets=1000, transceivers=4):
    """Strongly connected square, 200 m sides, links both ways along each side."""
    names = {"A": (0, 0), "B": (200, 0), "C": (200, 200), "D": (0, 200)}
    sides = [("A", "B"), ("B", "C"), ("C", "D"), ("D", "A")]
    edges = [(s, d) for s, d in sides] + [(d, s) for s, d in sides]
    return make_topology([(n, x, y) for n, (x, y) in names.items()], edges,
                         capacity=capacity, max_packets=max_packets, transceivers=transceivers)


def make_env(topology, prop_cfg, ladder, demand=None, env_cfg=None, noise_seed=0, demand_seed=0):
    model = build_interference_model(topology, prop_cfg)
    return RoutingEnv(
        topology=topology,
        model=model,
        ladder=ladder,
        prop_cfg=prop_cfg,
        demand_cfg=demand or DemandConfig(1, 3, 1, 10),
        env_cfg=env_cfg or EnvConfig(),
        noise_seed=noise_seed,
        demand_seed=demand_seed,
    )
