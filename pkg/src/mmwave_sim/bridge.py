"""Line-delimited JSON protocol exposing reset/step to external agents.

One connection = one session = one environment instance. Every request
carries an ``id`` that the single response echoes. See docs/protocol.md
for the full message schema.
"""

from __future__ import annotations

import json
import socket
import socketserver
import sys
from typing import IO

from .config import RunConfig, build_env
from .environment import EpisodeNotFoundError, LifecycleError, MalformedActionError, RoutingEnv

PROTOCOL_VERSION = 1


class BridgeSession:
    """Dispatches protocol messages onto one environment instance."""

    def __init__(self, rc: RunConfig):
        self.rc = rc
        self.env: RoutingEnv = build_env(rc)
        self.env.build_eval_list(rc.eval_list_size)
        self.closed = False

    def handle_line(self, line: str) -> dict:
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            return self._error(None, "MALFORMED", f"invalid JSON: {exc}")
        if not isinstance(msg, dict):
            return self._error(None, "MALFORMED", "message must be a JSON object")
        msg_id = msg.get("id")
        kind = msg.get("kind")
        try:
            if kind == "hello":
                return self._spec(msg_id)
            if kind == "reset":
                return self._obs(msg_id, self.env.reset())
            if kind == "reset_custom":
                idx = msg.get("episode_index")
                if not isinstance(idx, int):
                    return self._error(msg_id, "MALFORMED", "'episode_index' must be an integer")
                return self._obs(msg_id, self.env.reset_custom(idx))
            if kind == "step":
                action = msg.get("action")
                if not isinstance(action, list):
                    return self._error(msg_id, "BAD_ACTION", "'action' must be a list")
                result = self.env.step(action)
                return {
                    "id": msg_id,
                    "kind": "result",
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
            if kind == "close":
                self.closed = True
                return {"id": msg_id, "kind": "result", "closed": True}
            return self._error(msg_id, "MALFORMED", f"unknown kind {kind!r}")
        except MalformedActionError as exc:
            return self._error(msg_id, "BAD_ACTION", str(exc))
        except LifecycleError as exc:
            return self._error(msg_id, "LIFECYCLE", str(exc))
        except EpisodeNotFoundError as exc:
            return self._error(msg_id, "NOT_FOUND", f"no eval episode {exc}")
        except Exception as exc:  # keep the session alive on internal faults
            return self._error(msg_id, "INTERNAL", f"{type(exc).__name__}: {exc}")

    def _spec(self, msg_id) -> dict:
        return {
            "id": msg_id,
            "kind": "spec",
            "protocol_version": PROTOCOL_VERSION,
            "action_length": self.env.topology.num_links,
            "observation_length": self.env.observation_length,
            "power_ladder": list(self.env.ladder.levels),
        }

    @staticmethod
    def _obs(msg_id, observation: list[float]) -> dict:
        return {"id": msg_id, "kind": "observation", "observation": observation}

    @staticmethod
    def _error(msg_id, code: str, message: str) -> dict:
        return {"id": msg_id, "kind": "error", "code": code, "message": message}


def serve_session(rc: RunConfig, reader: IO[str], writer: IO[str]) -> None:
    """Run one session over text streams until close or EOF."""
    session = BridgeSession(rc)
    for line in reader:
        line = line.strip()
        if not line:
            continue
        response = session.handle_line(line)
        writer.write(json.dumps(response) + "\n")
        writer.flush()
        if session.closed:
            break


def serve_stdio(rc: RunConfig) -> None:
    serve_session(rc, sys.stdin, sys.stdout)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        reader = self.rfile
        session = BridgeSession(self.server.run_config)  # type: ignore[attr-defined]
        for raw in reader:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            response = session.handle_line(line)
            self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))
            if session.closed:
                break


class BridgeServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, rc: RunConfig, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _Handler)
        self.run_config = rc

    @property
    def port(self) -> int:
        return self.server_address[1]


def serve_tcp(rc: RunConfig, host: str = "127.0.0.1", port: int = 0) -> None:
    """Serve forever; announces the bound port as a JSON line on stdout."""
    with BridgeServer(rc, host, port) as server:
        print(json.dumps({"event": "listening", "host": host, "port": server.port}), flush=True)
        server.serve_forever()


class BridgeClient:
    """Minimal in-process client for tests and scripted sessions."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._file = self._sock.makefile("rw", encoding="utf-8", newline="\n")
        self._next_id = 0

    def request(self, kind: str, **payload) -> dict:
        msg_id = self._next_id
        self._next_id += 1
        msg = {"id": msg_id, "kind": kind, **payload}
        self._file.write(json.dumps(msg) + "\n")
        self._file.flush()
        line = self._file.readline()
        if not line:
            raise ConnectionError("bridge closed the connection")
        response = json.loads(line)
        if response.get("id") != msg_id:
            raise ConnectionError(f"response id mismatch: {response.get('id')} != {msg_id}")
        return response

    def send_raw(self, text: str) -> dict:
        self._file.write(text + "\n")
        self._file.flush()
        return json.loads(self._file.readline())

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass
