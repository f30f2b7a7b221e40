"""Run-config and topology-spec file loading.

Both files are JSON. The topology spec can live in its own file or be
inlined in the run config under the "topology" key.

Topology spec schema::

    {
      "stations": [{"name": "A", "x": 0.0, "y": 0.0, "max_transceivers": 2}, ...],
      "edges": [{"src": "A", "dst": "B", "nominal_capacity": 5, "max_packets": 50}, ...],
      "weight_bounds": [1.0, 2.0]
    }

Run config schema::

    {
      "topology": "topology.json" | {inline spec},
      "propagation": {"carrier_frequency_hz": 6e10, "noise_min_db": 0.0,
                      "noise_max_db": 0.0, "power_domain": "decibel"},
      "power_ladder": [0.0, 110.0, 115.0, 120.0],
      "delta_t": 1.0,
      "demand": {"flow_count": [1, 3], "packets": [1, 10]},
      "beta": 1.0,
      "max_steps": null,
      "seeds": {"topology": 1, "demand": 2, "scheduler": 3, "noise": 4},
      "schedulers": ["profitable", "random", "full-power"],
      "episodes": 5,
      "eval_list_size": 5,
      "output": {"csv": "results.csv", "summary": "summary.json"}
    }
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from .environment import DemandConfig, EnvConfig, RoutingEnv
from .interference import PowerLadder, build_interference_model
from .network import EdgeSpec, StationSpec, Topology, TopologySpec
from .propagation import PowerDomain, PropagationConfig

SCHEDULER_NAMES = ("profitable", "random", "full-power", "external")


class ConfigError(ValueError):
    """Malformed run config or topology spec file."""


@dataclass(frozen=True)
class Seeds:
    topology: int = 0
    demand: int = 0
    scheduler: int = 0
    noise: int = 0


@dataclass
class RunConfig:
    topology_spec: TopologySpec
    propagation: PropagationConfig
    ladder: PowerLadder
    demand: DemandConfig
    env: EnvConfig
    seeds: Seeds
    schedulers: list[str]
    episodes: int
    eval_list_size: int
    csv_path: str = "results.csv"
    summary_path: str = "summary.json"
    extras: dict = field(default_factory=dict)


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"missing '{key}' in {where}")
    return obj[key]


def parse_topology_spec(raw: dict) -> TopologySpec:
    try:
        stations = tuple(
            StationSpec(
                name=str(s["name"]),
                x=float(s["x"]),
                y=float(s["y"]),
                max_transceivers=int(s.get("max_transceivers", 2)),
            )
            for s in _require(raw, "stations", "topology spec")
        )
        edges = tuple(
            EdgeSpec(
                src=str(e["src"]),
                dst=str(e["dst"]),
                nominal_capacity=float(e["nominal_capacity"]),
                max_packets=int(e["max_packets"]),
            )
            for e in _require(raw, "edges", "topology spec")
        )
        wb = raw.get("weight_bounds", [1.0, 1.0])
        bounds = (float(wb[0]), float(wb[1]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed topology spec: {exc}") from exc
    return TopologySpec(stations, edges, bounds)


def load_topology_spec(path: str) -> TopologySpec:
    with open(path, encoding="utf-8") as fh:
        return parse_topology_spec(json.load(fh))


def parse_run_config(raw: dict, base_dir: str = ".") -> RunConfig:
    topo_raw = _require(raw, "topology", "run config")
    if isinstance(topo_raw, str):
        topo_spec = load_topology_spec(os.path.join(base_dir, topo_raw))
    elif isinstance(topo_raw, dict):
        topo_spec = parse_topology_spec(topo_raw)
    else:
        raise ConfigError("'topology' must be a path or an inline spec object")

    prop_raw = _require(raw, "propagation", "run config")
    try:
        prop = PropagationConfig(
            carrier_frequency_hz=float(_require(prop_raw, "carrier_frequency_hz", "propagation")),
            noise_min_db=float(prop_raw.get("noise_min_db", 0.0)),
            noise_max_db=float(prop_raw.get("noise_max_db", 0.0)),
            power_domain=PowerDomain(prop_raw.get("power_domain", "decibel")),
        )
        ladder = PowerLadder(tuple(float(x) for x in _require(raw, "power_ladder", "run config")))
        demand_raw = _require(raw, "demand", "run config")
        fc = demand_raw.get("flow_count", [1, 1])
        pk = demand_raw.get("packets", [1, 1])
        demand = DemandConfig(int(fc[0]), int(fc[1]), int(pk[0]), int(pk[1]))
        env = EnvConfig(
            beta=float(raw.get("beta", 1.0)),
            delta_t=float(raw.get("delta_t", 1.0)),
            max_steps=(int(raw["max_steps"]) if raw.get("max_steps") is not None else None),
        )
        seeds_raw = raw.get("seeds", {})
        seeds = Seeds(
            topology=int(seeds_raw.get("topology", 0)),
            demand=int(seeds_raw.get("demand", 0)),
            scheduler=int(seeds_raw.get("scheduler", 0)),
            noise=int(seeds_raw.get("noise", 0)),
        )
        schedulers = list(raw.get("schedulers", ["profitable"]))
        for name in schedulers:
            if name not in SCHEDULER_NAMES:
                raise ConfigError(f"unknown scheduler {name!r}; pick from {SCHEDULER_NAMES}")
        episodes = int(raw.get("episodes", 1))
        eval_list_size = int(raw.get("eval_list_size", episodes))
        if episodes < 0 or eval_list_size < episodes:
            raise ConfigError("need eval_list_size >= episodes >= 0")
        out_raw = raw.get("output", {})
        csv_path = str(out_raw.get("csv", "results.csv"))
        summary_path = str(out_raw.get("summary", "summary.json"))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed run config: {exc}") from exc
    return RunConfig(
        topology_spec=topo_spec,
        propagation=prop,
        ladder=ladder,
        demand=demand,
        env=env,
        seeds=seeds,
        schedulers=schedulers,
        episodes=episodes,
        eval_list_size=eval_list_size,
        csv_path=csv_path,
        summary_path=summary_path,
    )


def load_run_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read run config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("run config must be a JSON object")
    return parse_run_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def build_env(rc: RunConfig) -> RoutingEnv:
    """Topology, interference model and environment from one run config."""
    topology = Topology.generate(rc.topology_spec, random.Random(rc.seeds.topology))
    model = build_interference_model(topology, rc.propagation)
    return RoutingEnv(
        topology=topology,
        model=model,
        ladder=rc.ladder,
        prop_cfg=rc.propagation,
        demand_cfg=rc.demand,
        env_cfg=rc.env,
        noise_seed=rc.seeds.noise,
        demand_seed=rc.seeds.demand,
    )
