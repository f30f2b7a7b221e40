/**
 * Integration tests against a real simulator process.
 *
 * The suite spawns `python3 -m mmwave_sim.cli serve` on an ephemeral port
 * and drives it through RemoteEnv. The scripted session in
 * fixtures/session.json was produced by scripts/gen_fixture.py feeding the
 * same actions to the environment directly, so deep equality here is the
 * cross-interface check that the client adds nothing and loses nothing.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { readFileSync } from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  BadActionError,
  EpisodeNotFoundError,
  LifecycleError,
  RemoteEnv,
  type StepInfo,
} from "../src/client.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const configPath = path.join(here, "fixtures", "run_config.json");

interface SessionStep {
  action: number[];
  observation: number[];
  reward: number;
  done: boolean;
  info: { delivered: number; dropped: number; step_count: number; truncated: boolean };
}

interface Session {
  episode_index: number;
  action_length: number;
  observation_length: number;
  first_observation: number[];
  steps: SessionStep[];
}

const session: Session = JSON.parse(
  readFileSync(path.join(here, "fixtures", "session.json"), "utf8"),
);

let server: ChildProcess;
let port: number;

function startServer(): Promise<number> {
  return new Promise((resolve, reject) => {
    server = spawn("python3", ["-m", "mmwave_sim.cli", "serve", "--config", configPath, "--port", "0"], {
      stdio: ["ignore", "pipe", "pipe"],
    });
    let out = "";
    server.stdout!.setEncoding("utf8");
    server.stdout!.on("data", (chunk: string) => {
      out += chunk;
      const nl = out.indexOf("\n");
      if (nl >= 0) {
        const announce = JSON.parse(out.slice(0, nl));
        if (announce.event === "listening") {
          resolve(announce.port as number);
        } else {
          reject(new Error(`unexpected server announcement: ${out}`));
        }
      }
    });
    let err = "";
    server.stderr!.setEncoding("utf8");
    server.stderr!.on("data", (chunk: string) => {
      err += chunk;
    });
    server.on("exit", (code) => reject(new Error(`server exited with ${code}: ${err}`)));
    server.on("error", reject);
  });
}

beforeAll(async () => {
  port = await startServer();
}, 20_000);

afterAll(() => {
  server?.kill();
});

describe("handshake", () => {
  it("caches the spec from hello", async () => {
    const env = await RemoteEnv.connect("127.0.0.1", port);
    expect(env.spec.protocolVersion).toBe(1);
    expect(env.spec.actionLength).toBe(session.action_length);
    expect(env.spec.observationLength).toBe(session.observation_length);
    expect(env.spec.powerLadder[0]).toBe(0.0);
    expect(env.spec.powerLadder.length).toBeGreaterThan(1);
    await env.close();
  });
});

describe("reset", () => {
  it("reset_custom is deterministic and matches the recorded episode", async () => {
    const env = await RemoteEnv.connect("127.0.0.1", port);
    const first = await env.resetCustom(session.episode_index);
    const second = await env.resetCustom(session.episode_index);
    expect(first).toEqual(session.first_observation);
    expect(second).toEqual(first);
    expect(first).toHaveLength(env.spec.observationLength);
    await env.close();
  });

  it("two sessions see the same evaluation episode", async () => {
    const a = await RemoteEnv.connect("127.0.0.1", port);
    const b = await RemoteEnv.connect("127.0.0.1", port);
    expect(await a.resetCustom(0)).toEqual(await b.resetCustom(0));
    await a.close();
    await b.close();
  });

  it("out-of-range episode index raises EpisodeNotFoundError", async () => {
    const env = await RemoteEnv.connect("127.0.0.1", port);
    await expect(env.resetCustom(9999)).rejects.toBeInstanceOf(EpisodeNotFoundError);
    await env.close();
  });
});

describe("scripted session replay", () => {
  it("reproduces the recorded rewards, observations and counters exactly", async () => {
    const env = await RemoteEnv.connect("127.0.0.1", port);
    await env.resetCustom(session.episode_index);
    const rewards: number[] = [];
    let last: StepInfo | undefined;
    for (const recorded of session.steps) {
      const [observation, reward, done, info] = await env.step(recorded.action);
      rewards.push(reward);
      expect(observation).toEqual(recorded.observation);
      expect(reward).toBe(recorded.reward);
      expect(done).toBe(recorded.done);
      expect(info).toEqual({
        delivered: recorded.info.delivered,
        dropped: recorded.info.dropped,
        stepCount: recorded.info.step_count,
        truncated: recorded.info.truncated,
      });
      last = info;
      if (done) break;
    }
    expect(rewards).toEqual(session.steps.map((s) => s.reward));
    expect(last?.truncated).toBe(false);
    await env.close();
  });
});

describe("error mapping", () => {
  it("wrong-length action surfaces BadActionError and keeps the session alive", async () => {
    const env = await RemoteEnv.connect("127.0.0.1", port);
    await env.resetCustom(0);
    await expect(env.step([1.0])).rejects.toBeInstanceOf(BadActionError);
    // the episode is still steppable after the rejected action
    const [observation] = await env.step(new Array(env.spec.actionLength).fill(0));
    expect(observation).toHaveLength(env.spec.observationLength);
    await env.close();
  });

  it("out-of-range action values surface BadActionError", async () => {
    const env = await RemoteEnv.connect("127.0.0.1", port);
    await env.resetCustom(0);
    const action = new Array(env.spec.actionLength).fill(0);
    action[0] = 1.5;
    await expect(env.step(action)).rejects.toBeInstanceOf(BadActionError);
    await env.close();
  });

  it("step before any reset surfaces LifecycleError", async () => {
    const env = await RemoteEnv.connect("127.0.0.1", port);
    await expect(env.step(new Array(env.spec.actionLength).fill(0))).rejects.toBeInstanceOf(
      LifecycleError,
    );
    await env.close();
  });

  it("requests after close are rejected locally", async () => {
    const env = await RemoteEnv.connect("127.0.0.1", port);
    await env.close();
    await expect(env.reset()).rejects.toBeInstanceOf(LifecycleError);
  });
});
