"""Synchronous client SDK for the match-server wire protocol.

The protocol is newline-delimited UTF-8 JSON objects, each with a "type"
field.  The server sends hello, match_assigned, observation, result and
error messages; the client sends login, queue and action.  A turn counter
rides on every observation and must be echoed on the matching action.

One :class:`RemoteEnvHandle` is one connection playing one match at a time;
run several handles (e.g. one per thread) for concurrency.  The handle's
state is built purely from received messages, so it can never hold
information the server did not explicitly send to this seat.
"""

from __future__ import annotations

import json
import os
import random
import socket
from typing import Any, Callable, Mapping

PROTOCOL_VERSION = 1
ADDR_ENV_VAR = "COLOSSEUM_ADDR"
DEFAULT_ADDR = "127.0.0.1:7648"

__all__ = [
    "PROTOCOL_VERSION",
    "ADDR_ENV_VAR",
    "DEFAULT_ADDR",
    "ClientError",
    "ProtocolError",
    "VersionMismatchError",
    "IllegalActionError",
    "MatchResult",
    "RemoteEnvHandle",
    "encode_message",
    "decode_message",
    "resolve_address",
    "connect",
    "queue_and_play",
    "run_bot",
]


class ClientError(Exception):
    """Base class for SDK failures."""


class ProtocolError(ClientError):
    """The server sent something outside the protocol grammar."""


class VersionMismatchError(ClientError):
    """Server and client speak different protocol versions."""

    def __init__(self, client_version: int, server_version: Any):
        super().__init__(
            f"protocol version mismatch: client speaks {client_version}, "
            f"server speaks {server_version}"
        )
        self.client_version = client_version
        self.server_version = server_version


class IllegalActionError(ClientError):
    """The agent callback returned an action outside the legal set;
    nothing was sent to the server."""


def encode_message(obj: Mapping[str, Any]) -> bytes:
    return (json.dumps(obj, sort_keys=True) + "\n").encode("utf-8")


def decode_message(line: bytes) -> dict:
    try:
        obj = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"undecodable server message: {exc}") from exc
    if not isinstance(obj, dict) or not isinstance(obj.get("type"), str):
        raise ProtocolError("server message is not an object with a 'type'")
    return obj


def resolve_address(address: str | None = None) -> tuple[str, int]:
    """Split host:port from the argument, $COLOSSEUM_ADDR, or the default."""
    text = address or os.environ.get(ADDR_ENV_VAR) or DEFAULT_ADDR
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must be host:port, got {text!r}")
    return host, int(port)


class MatchResult(dict):
    """Final match record: ranks, total_reward and substitutions keyed by
    seat, plus any error messages the server sent along the way."""

    @property
    def ranks(self) -> dict[int, int]:
        return {int(k): int(v) for k, v in self["ranks"].items()}

    @property
    def total_reward(self) -> dict[int, float]:
        return {int(k): float(v) for k, v in self["total_reward"].items()}

    @property
    def substitutions(self) -> dict[int, int]:
        return {int(k): int(v) for k, v in self.get("substitutions", {}).items()}


class RemoteEnvHandle:
    """One logged-in connection; play matches with :func:`queue_and_play`.

    Mirrors the server's view of this seat: ``observation``, ``legal_actions``
    and ``turn`` always hold the latest observation message, ``reward`` the
    step reward it carried and ``total_reward`` their running sum.
    """

    def __init__(self, sock: socket.socket, name: str, address: tuple[str, int]):
        self._sock = sock
        self._file = sock.makefile("rb")
        self.name = name
        self.address = address
        self.closed = False
        # match state, populated while playing
        self.match_id: str | None = None
        self.seat: int | None = None
        self.env_name: str | None = None
        self.env_config: dict | None = None
        self.observation: Any = None
        self.legal_actions: list[Any] = []
        self.turn: int = -1
        self.reward: float = 0.0
        self.total_reward: float = 0.0
        self.terminal: bool = False
        self.warnings: list[dict] = []
        self.result: MatchResult | None = None

    # -- plumbing -----------------------------------------------------------

    def send(self, obj: Mapping[str, Any]) -> None:
        if self.closed:
            raise ClientError("handle is closed")
        self._sock.sendall(encode_message(obj))

    def recv(self) -> dict:
        line = self._file.readline()
        if not line:
            self.closed = True
            raise ConnectionError("server closed the connection")
        return decode_message(line)

    def close(self) -> None:
        if not self.closed:
            self.closed = True
            try:
                self._file.close()
                self._sock.close()
            except OSError:
                pass

    def __enter__(self) -> "RemoteEnvHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def connect(address: str | None = None, name: str = "agent",
            timeout: float | None = 30.0) -> RemoteEnvHandle:
    """Open a connection, verify the protocol version and log in.

    Raises OSError if the server is unreachable and
    :class:`VersionMismatchError` if it speaks another protocol version;
    in both cases no handle is created.
    """
    host, port = resolve_address(address)
    sock = socket.create_connection((host, port), timeout=timeout)
    try:
        handle = RemoteEnvHandle(sock, name, (host, port))
        hello = handle.recv()
        if hello.get("type") != "hello":
            raise ProtocolError(f"expected hello, got {hello.get('type')!r}")
        if hello.get("v") != PROTOCOL_VERSION:
            raise VersionMismatchError(PROTOCOL_VERSION, hello.get("v"))
        handle.send({"type": "login", "name": name})
        return handle
    except BaseException:
        sock.close()
        raise


def queue_and_play(handle: RemoteEnvHandle, env_name: str,
                   callback: Callable[[Any, list[Any]], Any]) -> MatchResult:
    """Queue for one match of ``env_name`` and play it to completion.

    ``callback(observation, legal_actions)`` must return one of the legal
    actions; anything else raises :class:`IllegalActionError` locally and
    nothing is sent.  Server-side error messages (timeout substitutions,
    stale turns) are collected on ``handle.warnings``.  Returns the final
    :class:`MatchResult`.
    """
    handle.env_name = env_name
    handle.send({"type": "queue", "env": env_name})
    while True:
        msg = handle.recv()
        kind = msg["type"]
        if kind == "match_assigned":
            handle.match_id = msg.get("match_id")
            handle.seat = msg.get("seat")
            handle.env_config = msg.get("config")
        elif kind == "observation":
            handle.turn = msg["turn"]
            handle.observation = msg["obs"]
            handle.legal_actions = list(msg["legal"])
            handle.reward = float(msg["reward"])
            handle.total_reward += handle.reward
            handle.terminal = bool(msg["terminal"])
            if handle.terminal:
                continue
            action = callback(handle.observation, handle.legal_actions)
            if action not in handle.legal_actions:
                raise IllegalActionError(
                    f"callback returned {action!r}, not one of "
                    f"{handle.legal_actions!r}"
                )
            handle.send({"type": "action", "turn": handle.turn, "value": action})
        elif kind == "error":
            handle.warnings.append(msg)
        elif kind == "result":
            handle.result = MatchResult(msg)
            return handle.result
        else:
            raise ProtocolError(f"unexpected server message type {kind!r}")


def run_bot(address: str | None, env_name: str, name: str,
            seed: int = 0) -> MatchResult:
    """Connect, queue and play one match with a seeded random policy.

    The simplest complete agent: useful for filling seats in tests and
    demos, and a worked example of the SDK loop.
    """
    rng = random.Random(seed)

    def pick(_obs: Any, legal: list[Any]) -> Any:
        return legal[rng.randrange(len(legal))]

    with connect(address, name=name) as handle:
        return queue_and_play(handle, env_name, pick)
