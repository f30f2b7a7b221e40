"""Acceptance suite: one test per exit criterion, each printing a PASS line."""

import math
import random
import threading
import time

from mmwave_sim.bridge import BridgeClient, BridgeServer
from mmwave_sim.cli import run_batch
from mmwave_sim.config import build_env, load_run_config
from mmwave_sim.environment import DemandConfig, EnvConfig, EpisodeSpec, FlowSeed
from mmwave_sim.interference import NoiseField, PowerLadder, adopt_interference, build_interference_model
from mmwave_sim.propagation import PropagationConfig, angle_to_power, fsl
from mmwave_sim.schedulers import (
    full_power_schedule,
    profitable_schedule,
    profitable_schedule_traced,
    random_schedule,
)

from conftest import line4_topology, make_env, square_topology
from test_cli import write_config
from test_interference import direct_capacities, random_fixture, raw_topology
from test_schedulers import oracle_profit, oracle_replay
from test_bridge import scripted_actions

CFG = PropagationConfig(60e9)


def report(name, elapsed, limit=None):
    budget = f" ({elapsed:.2f}s < {limit:.0f}s)" if limit else f" ({elapsed:.2f}s)"
    print(f"\n[PASS] {name}{budget}")


def test_criterion_interference_math_unit_suite():
    started = time.perf_counter()
    # triangular directivity on a 1-degree grid, exact
    for deg in range(0, 181):
        expected = 1.0 - deg / 90.0 if deg <= 90 else 0.0
        assert angle_to_power(float(deg)) == expected
    # distance doubling adds 20*log10(2) dB
    for d in (10.0, 55.0, 100.0, 730.0):
        delta = fsl(2 * d, 60e9, CFG) - fsl(d, 60e9, CFG)
        assert abs(delta - 20 * math.log10(2)) < 1e-9
    # zero interference: capacity equals nominal exactly
    t = raw_topology({"A": (0, 0), "B": (100, 0)}, [("A", "B")], capacity=7.0)
    model = build_interference_model(t, CFG)
    (state,) = adopt_interference(t, model, [120.0], NoiseField(CFG, 0).at(0, 0), CFG)
    assert state.capacity == 7.0
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    report("interference math unit suite", elapsed, 1.0)


def test_criterion_matrix_vs_direct_oracle():
    started = time.perf_counter()
    cfg = PropagationConfig(60e9, noise_min_db=0.0, noise_max_db=3.0)
    rng = random.Random(90210)
    worst = 0.0
    for trial in range(200):
        t, model, powers = random_fixture(rng, cfg, max_links=5)
        noise = NoiseField(cfg, 8).at(trial, 0)
        states = adopt_interference(t, model, powers, noise, cfg)
        expected = direct_capacities(t, powers, noise, cfg)
        worst = max(worst, max(abs(s.capacity - e) for s, e in zip(states, expected)))
    assert worst < 1e-9
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    report(f"matrix-vs-direct oracle (max dev {worst:.2e})", elapsed, 10.0)


def test_criterion_profitable_oracle_equivalence():
    started = time.perf_counter()
    cfg = PropagationConfig(60e9, noise_min_db=0.0, noise_max_db=3.0)
    rng = random.Random(1618)
    for trial in range(100):
        t, model, _ = random_fixture(rng, cfg, max_links=3)
        ladder = PowerLadder((0.0, 112.0, 118.0, 125.0)[: rng.randint(2, 4)])
        noise = NoiseField(cfg, 13).at(trial, 0)
        assignment, trace = profitable_schedule_traced(
            t, model, ladder, random.Random(trial), noise, cfg
        )
        assert assignment.levels == oracle_replay(t, ladder, noise, cfg, trace.order)
        decided = {}
        for decision in trace.decisions:
            if decision.chosen_level > 0:
                assert oracle_profit(
                    t, ladder, noise, cfg, decision.link_id, decision.chosen_level, decided
                ) > 0.0
                decided[decision.link_id] = decision.chosen_level
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0
    report("profitable oracle equivalence (100 fixtures)", elapsed, 30.0)


def test_criterion_conservation_suite():
    started = time.perf_counter()
    cfg = PropagationConfig(60e9, noise_min_db=0.0, noise_max_db=2.0)
    ladder = PowerLadder((0.0, 112.0, 118.0))
    env = make_env(
        square_topology(capacity=4.0, max_packets=12), cfg, ladder,
        demand=DemandConfig(1, 4, 1, 15), noise_seed=21, demand_seed=34,
    )
    env.build_eval_list(50)
    rng = random.Random(55)
    checks = 0
    for name in ("profitable", "random", "full-power"):
        for ep in range(50):
            env.reset_custom(ep)
            assert env.delivered + env.dropped + env.buffered_packets() == env.total_packets
            while not env.done:
                if name == "profitable":
                    levels = profitable_schedule(
                        env.topology, env.model, ladder, rng, env.next_step_noise(), cfg
                    ).levels
                elif name == "random":
                    levels = random_schedule(env.topology, ladder, rng).levels
                else:
                    levels = full_power_schedule(env.topology, ladder).levels
                env.step_assignment(levels)
                assert env.delivered + env.dropped + env.buffered_packets() == env.total_packets
                checks += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    report(f"conservation suite (3 schedulers x 50 episodes, {checks} step boundaries)", elapsed, 60.0)


def test_criterion_termination_and_throughput():
    started = time.perf_counter()
    # exact pipeline bound on the 4-station line under full power
    cfg = PropagationConfig(60e9)
    ladder = PowerLadder((0.0, 110.0))
    for total in (4, 10, 17):
        env = make_env(line4_topology(capacity=4.0), cfg, ladder)
        env.set_eval_list(
            [EpisodeSpec({("A", "D"): total}, total, (FlowSeed("A", "D", total, ("A", "B", "C", "D")),))]
        )
        env.reset_custom(0)
        steps = 0
        while not env.done:
            env.step_assignment(full_power_schedule(env.topology, ladder).levels)
            steps += 1
        hops, per_step = 3, 4
        assert env.delivered == total and env.dropped == 0
        assert steps == hops + math.ceil(total / per_step) - 1

    # profitable beats (or matches) random in mean delivery on shared episodes
    cfg_n = PropagationConfig(60e9, noise_min_db=0.0, noise_max_db=2.0)
    ladder2 = PowerLadder((0.0, 112.0, 118.0))
    # tight step cap: wasted steps (links left off) cost deliveries
    env = make_env(
        square_topology(capacity=4.0, max_packets=12), cfg_n, ladder2,
        demand=DemandConfig(1, 4, 1, 15), noise_seed=5, demand_seed=6,
        env_cfg=EnvConfig(max_steps_factor=1),
    )
    env.build_eval_list(50)
    means = {}
    rng = random.Random(7)
    for name in ("profitable", "random"):
        delivered = 0
        for ep in range(50):
            env.reset_custom(ep)
            while not env.done:
                if name == "profitable":
                    levels = profitable_schedule(
                        env.topology, env.model, ladder2, rng, env.next_step_noise(), cfg_n
                    ).levels
                else:
                    levels = random_schedule(env.topology, ladder2, rng).levels
                env.step_assignment(levels)
            delivered += env.delivered
        means[name] = delivered / 50
    assert means["profitable"] >= means["random"]
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    report(
        "termination & throughput sanity "
        f"(pipeline bound exact; profitable {means['profitable']:.1f} >= random {means['random']:.1f})",
        elapsed, 60.0,
    )


def test_criterion_determinism(tmp_path):
    started = time.perf_counter()
    cfg_path = write_config(tmp_path, schedulers=["profitable", "random", "full-power"], episodes=3,
                            eval_list_size=3)
    for sub in ("a", "b"):
        run_batch(
            load_run_config(str(cfg_path)),
            out_dir=str(tmp_path / sub),
            trace_dir=str(tmp_path / sub / "traces"),
        )
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()
    trace_names = sorted(p.name for p in (tmp_path / "a" / "traces").iterdir())
    assert trace_names == sorted(p.name for p in (tmp_path / "b" / "traces").iterdir())
    for name in trace_names:
        assert (tmp_path / "a" / "traces" / name).read_bytes() == (
            tmp_path / "b" / "traces" / name
        ).read_bytes()
    report("determinism (byte-identical CSV and traces)", time.perf_counter() - started)


def test_criterion_bridge_equivalence(tmp_path):
    started = time.perf_counter()
    rc = load_run_config(str(write_config(tmp_path, episodes=1, eval_list_size=1)))
    server = BridgeServer(rc, "127.0.0.1", 0)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        client = BridgeClient("127.0.0.1", server.port)
        spec = client.request("hello")
        actions = scripted_actions(spec["action_length"], steps=60, seed=9)

        wire = []
        client.request("reset_custom", episode_index=0)
        for action in actions:
            result = client.request("step", action=action)
            wire.append((result["observation"], result["reward"], result["done"], result["info"]))
            if result["done"]:
                break
        client.close()
    finally:
        server.shutdown()
        server.server_close()

    env = build_env(rc)
    env.build_eval_list(rc.eval_list_size)
    env.reset_custom(0)
    direct = []
    for action in actions:
        result = env.step(action)
        direct.append((
            result.observation,
            result.reward,
            result.done,
            {
                "delivered": result.info["delivered"],
                "dropped": result.info["dropped"],
                "step_count": result.info["step_count"],
                "truncated": result.info["truncated"],
            },
        ))
        if result.done:
            break
    assert wire == direct
    report(f"bridge equivalence ({len(wire)} scripted steps bit-identical)", time.perf_counter() - started)
