/**
 * Remote environment client for the mmwave-sim wire protocol.
 *
 * The server speaks newline-delimited JSON over TCP (see docs/protocol.md
 * in the simulator repository): every request carries an `id` that the
 * single response echoes. This client is a protocol shim — it performs no
 * arithmetic on payloads beyond type conversion, so round-tripped values
 * are bit-equal to what the server sent.
 *
 * Usage:
 * ```ts
 * const env = await RemoteEnv.connect("127.0.0.1", port);
 * let obs = await env.resetCustom(0);
 * const [next, reward, done, info] = await env.step(new Array(env.spec.actionLength).fill(1));
 * await env.close();
 * ```
 */

import * as net from "node:net";

/** Static environment description returned by the `hello` handshake. */
export interface EnvSpec {
  protocolVersion: number;
  actionLength: number;
  observationLength: number;
  powerLadder: number[];
}

/** Episode counters attached to every step result. */
export interface StepInfo {
  delivered: number;
  dropped: number;
  stepCount: number;
  truncated: boolean;
}

/** The conventional (observation, reward, done, info) step tuple. */
export type StepTuple = [number[], number, boolean, StepInfo];

/** An `error` response from the server; `code` is the protocol error code. */
export class ProtocolError extends Error {
  constructor(
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ProtocolError";
  }
}

/** Action vector rejected by the server (wrong length or out-of-range values). */
export class BadActionError extends ProtocolError {
  constructor(message: string) {
    super("BAD_ACTION", message);
    this.name = "BadActionError";
  }
}

/** Step before any reset, after the episode ended, or after close(). */
export class LifecycleError extends ProtocolError {
  constructor(message: string) {
    super("LIFECYCLE", message);
    this.name = "LifecycleError";
  }
}

/** reset_custom index outside the server's evaluation list. */
export class EpisodeNotFoundError extends ProtocolError {
  constructor(message: string) {
    super("NOT_FOUND", message);
    this.name = "EpisodeNotFoundError";
  }
}

/** Transport failure: connection refused, dropped, or garbled framing. */
export class TransportError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "TransportError";
  }
}

interface WireMessage {
  id?: unknown;
  kind?: string;
  code?: string;
  message?: string;
  [key: string]: unknown;
}

interface Pending {
  resolve: (msg: WireMessage) => void;
  reject: (err: Error) => void;
}

const SUPPORTED_PROTOCOL_VERSION = 1;

function toError(msg: WireMessage): ProtocolError {
  const text = typeof msg.message === "string" ? msg.message : "server error";
  switch (msg.code) {
    case "BAD_ACTION":
      return new BadActionError(text);
    case "LIFECYCLE":
      return new LifecycleError(text);
    case "NOT_FOUND":
      return new EpisodeNotFoundError(text);
    default:
      return new ProtocolError(typeof msg.code === "string" ? msg.code : "UNKNOWN", text);
  }
}

/**
 * One TCP connection to the simulator = one environment instance.
 *
 * Requests are matched to responses by id, so the instance is safe to
 * use from a single async context; it is not meant to be shared across
 * concurrent episode drivers.
 */
export class RemoteEnv {
  readonly spec: EnvSpec;

  private readonly socket: net.Socket;
  private readonly pending = new Map<number, Pending>();
  private buffer = "";
  private nextId = 0;
  private closed = false;

  private constructor(socket: net.Socket, spec: EnvSpec) {
    this.socket = socket;
    this.spec = spec;
  }

  /** Connect and perform the `hello` handshake; rejects on version mismatch. */
  static async connect(host: string, port: number): Promise<RemoteEnv> {
    const socket = await new Promise<net.Socket>((resolve, reject) => {
      const s = net.createConnection({ host, port }, () => {
        s.off("error", reject);
        resolve(s);
      });
      s.once("error", reject);
    });
    socket.setEncoding("utf8");

    // Construct with a placeholder spec, wire up framing, then handshake.
    const env = new RemoteEnv(socket, {
      protocolVersion: 0,
      actionLength: 0,
      observationLength: 0,
      powerLadder: [],
    });
    env.attach();
    const hello = await env.request({ kind: "hello" });
    if (hello.kind !== "spec") {
      env.dispose(new TransportError(`expected spec, got ${hello.kind}`));
      throw new TransportError(`handshake returned kind ${JSON.stringify(hello.kind)}`);
    }
    const spec: EnvSpec = {
      protocolVersion: hello.protocol_version as number,
      actionLength: hello.action_length as number,
      observationLength: hello.observation_length as number,
      powerLadder: hello.power_ladder as number[],
    };
    if (spec.protocolVersion !== SUPPORTED_PROTOCOL_VERSION) {
      env.dispose(new TransportError("protocol version mismatch"));
      throw new TransportError(
        `server speaks protocol ${spec.protocolVersion}, client supports ${SUPPORTED_PROTOCOL_VERSION}`,
      );
    }
    Object.assign(env.spec, spec);
    return env;
  }

  /** Start a fresh randomly-generated episode; resolves to the first observation. */
  async reset(): Promise<number[]> {
    const msg = await this.request({ kind: "reset" });
    return this.observationOf(msg);
  }

  /** Replay a fixed evaluation episode by index (deterministic on the server). */
  async resetCustom(episodeIndex: number): Promise<number[]> {
    const msg = await this.request({ kind: "reset_custom", episode_index: episodeIndex });
    return this.observationOf(msg);
  }

  /**
   * Apply one power-allocation action (values in [0, 1], one per link).
   * Resolves to the (observation, reward, done, info) tuple.
   */
  async step(action: number[]): Promise<StepTuple> {
    const msg = await this.request({ kind: "step", action });
    if (msg.kind !== "result") {
      throw new TransportError(`expected result, got ${msg.kind}`);
    }
    const info = msg.info as Record<string, unknown>;
    return [
      msg.observation as number[],
      msg.reward as number,
      msg.done as boolean,
      {
        delivered: info.delivered as number,
        dropped: info.dropped as number,
        stepCount: info.step_count as number,
        truncated: info.truncated as boolean,
      },
    ];
  }

  /** Tell the server to end the session and drop the connection. */
  async close(): Promise<void> {
    if (this.closed) return;
    try {
      await this.request({ kind: "close" });
    } finally {
      this.dispose(new TransportError("client closed"));
    }
  }

  private observationOf(msg: WireMessage): number[] {
    if (msg.kind !== "observation") {
      throw new TransportError(`expected observation, got ${msg.kind}`);
    }
    return msg.observation as number[];
  }

  private request(payload: Record<string, unknown>): Promise<WireMessage> {
    if (this.closed) {
      return Promise.reject(new LifecycleError("environment handle is closed"));
    }
    const id = this.nextId++;
    const line = JSON.stringify({ id, ...payload }) + "\n";
    return new Promise<WireMessage>((resolve, reject) => {
      this.pending.set(id, {
        resolve: (msg) => {
          if (msg.kind === "error") {
            reject(toError(msg));
          } else {
            resolve(msg);
          }
        },
        reject,
      });
      this.socket.write(line);
    });
  }

  private attach(): void {
    this.socket.on("data", (chunk: string) => {
      this.buffer += chunk;
      let index: number;
      while ((index = this.buffer.indexOf("\n")) >= 0) {
        const line = this.buffer.slice(0, index).trim();
        this.buffer = this.buffer.slice(index + 1);
        if (line.length > 0) {
          this.dispatch(line);
        }
      }
    });
    this.socket.on("error", (err) => {
      this.dispose(new TransportError(`socket error: ${err.message}`));
    });
    this.socket.on("close", () => {
      this.dispose(new TransportError("connection closed by server"));
    });
  }

  private dispatch(line: string): void {
    let msg: WireMessage;
    try {
      msg = JSON.parse(line) as WireMessage;
    } catch {
      this.dispose(new TransportError(`unparseable response line: ${line}`));
      return;
    }
    const id = msg.id;
    if (typeof id === "number" && this.pending.has(id)) {
      const waiter = this.pending.get(id)!;
      this.pending.delete(id);
      waiter.resolve(msg);
    }
    // Responses with unknown ids (e.g. to raw probes) are dropped.
  }

  private dispose(reason: Error): void {
    if (this.closed) return;
    this.closed = true;
    this.socket.destroy();
    for (const waiter of this.pending.values()) {
      waiter.reject(reason);
    }
    this.pending.clear();
  }
}
