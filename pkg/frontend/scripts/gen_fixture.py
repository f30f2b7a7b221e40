#!/usr/bin/env python3
"""Regenerate tests/fixtures/session.json from the simulator directly.

The client test suite replays this scripted session over the wire and
asserts the identical reward sequence, so the fixture must come from the
environment itself, not from a previous wire recording. Run from the
frontend/ directory with the simulator package installed:

    python3 scripts/gen_fixture.py
"""

import json
import pathlib
import random

from mmwave_sim.config import build_env, load_run_config

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"
EPISODE_INDEX = 0
MAX_STEPS = 60
ACTION_CHOICES = (0.0, 0.5, 1.0)
SCRIPT_SEED = 11


def main() -> None:
    rc = load_run_config(str(FIXTURES / "run_config.json"))
    env = build_env(rc)
    env.build_eval_list(rc.eval_list_size)
    first_observation = env.reset_custom(EPISODE_INDEX)

    rng = random.Random(SCRIPT_SEED)
    steps = []
    for _ in range(MAX_STEPS):
        action = [rng.choice(ACTION_CHOICES) for _ in range(env.topology.num_links)]
        result = env.step(action)
        steps.append(
            {
                "action": action,
                "observation": result.observation,
                "reward": result.reward,
                "done": result.done,
                "info": {
                    "delivered": result.info["delivered"],
                    "dropped": result.info["dropped"],
                    "step_count": result.info["step_count"],
                    "truncated": result.info["truncated"],
                },
            }
        )
        if result.done:
            break

    session = {
        "episode_index": EPISODE_INDEX,
        "action_length": env.topology.num_links,
        "observation_length": env.observation_length,
        "first_observation": first_observation,
        "steps": steps,
    }
    out = FIXTURES / "session.json"
    out.write_text(json.dumps(session, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out} ({len(steps)} steps, done={steps[-1]['done']})")


if __name__ == "__main__":
    main()
