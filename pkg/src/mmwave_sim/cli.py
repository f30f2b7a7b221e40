"""Batch entry point: run episode batches per scheduler, emit metrics and traces.

Subcommands:
  run       replay the shared evaluation episodes under each scheduler,
            writing a per-episode CSV and a JSON summary (optionally
            JSON-lines traces per episode)
  validate  parse config and build the topology without running
  serve     expose the environment over the line-delimited wire protocol
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import sys
import time
from dataclasses import dataclass

from .config import ConfigError, RunConfig, build_env, load_run_config
from .environment import RoutingEnv
from .interference import _mix
from .network import TopologyError, TopologySpecError
from .schedulers import full_power_schedule, profitable_schedule, random_schedule

EXIT_CONFIG_ERROR = 2
EXIT_TOPOLOGY_ERROR = 3


@dataclass
class EpisodeReport:
    episode_index: int
    scheduler: str
    steps: int
    delivered: int
    dropped: int
    truncated: bool
    wall_time: float  # seconds; reported in the summary, kept out of the CSV

    def csv_row(self) -> list:
        return [
            self.episode_index,
            self.scheduler,
            self.steps,
            self.delivered,
            self.dropped,
            int(self.truncated),
        ]


CSV_HEADER = ["episode_index", "scheduler", "steps", "delivered", "dropped", "truncated"]


def _assignment_for(env: RoutingEnv, name: str, rng: random.Random):
    if name == "profitable":
        return profitable_schedule(
            env.topology, env.model, env.ladder, rng, env.next_step_noise(),
            env.prop_cfg, env.cfg.delta_t,
        )
    if name == "random":
        return random_schedule(env.topology, env.ladder, rng)
    if name == "full-power":
        return full_power_schedule(env.topology, env.ladder)
    raise ConfigError(f"scheduler {name!r} cannot run in batch mode")


def run_episode(
    env: RoutingEnv,
    scheduler: str,
    episode_index: int,
    scheduler_seed: int,
    trace_path: str | None = None,
) -> EpisodeReport:
    """One full episode under one scheduler, optionally traced to JSON lines."""
    started = time.perf_counter()
    env.reset_custom(episode_index)
    rng = random.Random(_mix(scheduler_seed, episode_index))
    lines = [
        json.dumps(
            {
                "episode": episode_index,
                "scheduler": scheduler,
                "total_packets": env.total_packets,
                "links": env.topology.num_links,
            },
            sort_keys=True,
        )
    ]
    while not env.done:
        assignment = _assignment_for(env, scheduler, rng)
        result = env.step_assignment(assignment.levels)
        lines.append(
            json.dumps(
                {
                    "step": result.info["step_count"] - 1,
                    "assignment": list(assignment.levels),
                    "packets_this_step": result.info["packets_this_step"],
                    "delivered": result.info["delivered_step"],
                    "dropped": result.info["dropped_step"],
                },
                sort_keys=True,
            )
        )
    if trace_path is not None:
        emit_trace(lines, trace_path)
    return EpisodeReport(
        episode_index=episode_index,
        scheduler=scheduler,
        steps=env.step_count,
        delivered=env.delivered,
        dropped=env.dropped,
        truncated=env.truncated,
        wall_time=time.perf_counter() - started,
    )


def emit_trace(lines: list[str], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def run_batch(
    rc: RunConfig,
    out_dir: str = ".",
    trace_dir: str | None = None,
) -> list[EpisodeReport]:
    """Shared eval episodes crossed with every configured scheduler."""
    env = build_env(rc)
    env.build_eval_list(rc.eval_list_size)
    if trace_dir is not None:
        os.makedirs(trace_dir, exist_ok=True)
    reports: list[EpisodeReport] = []
    for scheduler in rc.schedulers:
        for ep in range(rc.episodes):
            trace_path = None
            if trace_dir is not None:
                trace_path = os.path.join(trace_dir, f"{scheduler}_ep{ep:04d}.jsonl")
            reports.append(run_episode(env, scheduler, ep, rc.seeds.scheduler, trace_path))
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, rc.csv_path)
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rep in reports:
            writer.writerow(rep.csv_row())
    summary = {"schedulers": {}, "episodes": rc.episodes}
    for scheduler in rc.schedulers:
        rows = [r for r in reports if r.scheduler == scheduler]
        summary["schedulers"][scheduler] = {
            "episodes": len(rows),
            "delivered": sum(r.delivered for r in rows),
            "dropped": sum(r.dropped for r in rows),
            "truncated": sum(r.truncated for r in rows),
            "mean_steps": (sum(r.steps for r in rows) / len(rows)) if rows else 0.0,
            "wall_time_s": sum(r.wall_time for r in rows),
        }
    with open(os.path.join(out_dir, rc.summary_path), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return reports


def _apply_overrides(rc: RunConfig, args) -> RunConfig:
    if args.schedulers:
        rc.schedulers = [s.strip() for s in args.schedulers.split(",") if s.strip()]
    if args.episodes is not None:
        rc.episodes = args.episodes
        rc.eval_list_size = max(rc.eval_list_size, rc.episodes)
    for item in args.seed_override or []:
        key, _, value = item.partition("=")
        if key not in ("topology", "demand", "scheduler", "noise") or not value:
            raise ConfigError(f"bad --seed-override {item!r}; expected name=int")
        from dataclasses import replace

        rc.seeds = replace(rc.seeds, **{key: int(value)})
    return rc


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="mmwave-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an episode batch")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out-dir", default=".")
    p_run.add_argument("--trace-dir", default=None)
    p_run.add_argument("--schedulers", default=None, help="comma-separated override")
    p_run.add_argument("--episodes", type=int, default=None)
    p_run.add_argument("--seed-override", action="append", default=None, metavar="NAME=INT")

    p_val = sub.add_parser("validate", help="check config and topology files")
    p_val.add_argument("--config", required=True)

    p_srv = sub.add_parser("serve", help="serve the wire protocol")
    p_srv.add_argument("--config", required=True)
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=0)
    p_srv.add_argument("--stdio", action="store_true", help="speak the protocol on stdin/stdout")

    args = parser.parse_args(argv)
    try:
        rc = load_run_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    if args.command == "validate":
        try:
            build_env(rc)
        except (TopologyError, TopologySpecError) as exc:
            print(f"topology error: {exc}", file=sys.stderr)
            return EXIT_TOPOLOGY_ERROR
        print("ok")
        return 0

    if args.command == "run":
        try:
            rc = _apply_overrides(rc, args)
        except (ConfigError, ValueError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG_ERROR
        try:
            reports = run_batch(rc, out_dir=args.out_dir, trace_dir=args.trace_dir)
        except (TopologyError, TopologySpecError) as exc:
            print(f"topology error: {exc}", file=sys.stderr)
            return EXIT_TOPOLOGY_ERROR
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return 1
        print(f"wrote {len(reports)} episode rows to {os.path.join(args.out_dir, rc.csv_path)}")
        return 0

    if args.command == "serve":
        from .bridge import serve_stdio, serve_tcp

        try:
            if args.stdio:
                serve_stdio(rc)
            else:
                serve_tcp(rc, args.host, args.port)
        except (TopologyError, TopologySpecError) as exc:
            print(f"topology error: {exc}", file=sys.stderr)
            return EXIT_TOPOLOGY_ERROR
        return 0

    return EXIT_CONFIG_ERROR  # unreachable


if __name__ == "__main__":
    raise SystemExit(main())
