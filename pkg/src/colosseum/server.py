"""Networked matchmaking and match execution over TCP.

Wire protocol: newline-delimited UTF-8 JSON objects, each carrying a
"type" field.  Server to client: hello, match_assigned, observation,
result, error.  Client to server: login, queue, action.  A turn counter
rides on every observation/action pair so stale or duplicated actions are
detected instead of applied.

Slow or disconnected seats never stall a match: after the per-action
timeout a uniformly random legal action is substituted and logged in the
transcript, and three consecutive substitutions forfeit the seat (random
play to completion, without waiting on the connection again).
"""

from __future__ import annotations

import asyncio
import io
import json
import uuid
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from colosseum.core import EnvConfig, RankRecord, make_env
from colosseum.rng import substream
from colosseum.tournament import GameRecord, PairwiseTable, sample_seating
from colosseum.transcript import TranscriptWriter

PROTOCOL_VERSION = 1
MAX_LINE_BYTES = 1 << 20
FORFEIT_AFTER = 3  # consecutive substitutions


def hello_message() -> dict:
    return {"type": "hello", "v": PROTOCOL_VERSION}


def observation_message(turn: int, obs_json: Any, legal: list[Any],
                        reward: float, terminal: bool) -> dict:
    """The only message carrying game state.

    Built exclusively from one seat's observation, that seat's legal
    actions and public match bookkeeping, so nothing hidden from the seat
    can reach the wire.
    """
    return {
        "type": "observation",
        "turn": turn,
        "obs": obs_json,
        "legal": legal,
        "reward": reward,
        "terminal": terminal,
    }


def result_message(record: RankRecord, substitutions: Mapping[int, int]) -> dict:
    return {
        "type": "result",
        "ranks": {str(p): r for p, r in record.ranks.items()},
        "total_reward": {str(p): v for p, v in record.total_reward.items()},
        "substitutions": {str(p): n for p, n in substitutions.items() if n},
    }


def error_message(code: str, detail: str) -> dict:
    return {"type": "error", "code": code, "detail": detail}


def encode_message(obj: Mapping[str, Any]) -> bytes:
    return (json.dumps(obj, sort_keys=True) + "\n").encode("utf-8")


def decode_message(line: bytes) -> dict:
    obj = json.loads(line.decode("utf-8"))
    if not isinstance(obj, dict) or not isinstance(obj.get("type"), str):
        raise ValueError("message must be a JSON object with a string 'type'")
    return obj


@dataclass
class ServerConfig:
    env_menu: Mapping[str, EnvConfig]
    host: str = "127.0.0.1"
    port: int = 0  # 0: let the OS pick
    timeout: float = 30.0
    max_matches: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        for name, cfg in self.env_menu.items():
            if name != cfg.env_name:
                raise ValueError(f"menu key {name!r} != env {cfg.env_name!r}")


class _Connection:
    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer
        self.name: str | None = None
        self.closed = False

    async def send(self, obj: Mapping[str, Any]) -> None:
        if self.closed:
            raise ConnectionError("connection closed")
        try:
            self.writer.write(encode_message(obj))
            await self.writer.drain()
        except (ConnectionError, OSError):
            self.closed = True
            raise

    async def recv(self) -> dict:
        line = await self.reader.readline()
        if not line:
            self.closed = True
            raise ConnectionError("peer disconnected")
        if len(line) > MAX_LINE_BYTES:
            raise ValueError("message too large")
        return decode_message(line)

    async def close(self) -> None:
        self.closed = True
        try:
            self.writer.close()
            await self.writer.wait_closed()
        except (ConnectionError, OSError):
            pass


class MatchServer:
    """Accepts agent connections, seats them into matches, drives play."""

    def __init__(self, config: ServerConfig):
        self.config = config
        self._queues: dict[str, list[_Connection]] = {n: [] for n in config.env_menu}
        self._server: asyncio.Server | None = None
        self._match_counter = 0
        self._match_sem = asyncio.Semaphore(config.max_matches)
        self._tasks: set[asyncio.Task] = set()
        self.running_matches = 0
        self.records: list[GameRecord] = []
        self.transcripts: dict[str, str] = {}
        self.table: PairwiseTable | None = None

    # -- lifecycle ----------------------------------------------------------

    async def start(self) -> None:
        self._server = await asyncio.start_server(
            self._handle_connection, self.config.host, self.config.port
        )

    @property
    def address(self) -> tuple[str, int]:
        assert self._server is not None, "server not started"
        sock = self._server.sockets[0]
        host, port = sock.getsockname()[:2]
        return host, port

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        for task in list(self._tasks):
            task.cancel()
        for task in list(self._tasks):
            try:
                await task
            except (asyncio.CancelledError, Exception):
                pass

    # -- connection handling ------------------------------------------------

    async def _handle_connection(self, reader: asyncio.StreamReader,
                                 writer: asyncio.StreamWriter) -> None:
        conn = _Connection(reader, writer)
        try:
            await conn.send(hello_message())
            msg = await conn.recv()
            if msg["type"] != "login" or not isinstance(msg.get("name"), str):
                await conn.send(error_message("protocol", "expected login{name}"))
                await conn.close()
                return
            conn.name = msg["name"]
            msg = await conn.recv()
            if msg["type"] != "queue" or msg.get("env") not in self._queues:
                await conn.send(error_message(
                    "protocol", f"expected queue with env in {sorted(self._queues)}"
                ))
                await conn.close()
                return
            self._queues[msg["env"]].append(conn)
            self._try_matchmake(msg["env"])
            # the match task owns the connection from here on
        except (ConnectionError, ValueError, json.JSONDecodeError, KeyError):
            try:
                if not conn.closed:
                    await conn.send(error_message("protocol", "malformed message"))
            except (ConnectionError, OSError):
                pass
            await conn.close()

    # -- matchmaking --------------------------------------------------------

    def _try_matchmake(self, env_name: str) -> None:
        env_config = self.config.env_menu[env_name]
        seats = env_config.player_count
        queue = self._queues[env_name]
        while len([c for c in queue if not c.closed]) >= seats:
            self._queues[env_name] = queue = [c for c in queue if not c.closed]
            rng = substream(self.config.seed, "matchmaking", self._match_counter)
            picked_idx = sample_seating(list(range(len(queue))), seats, rng)
            picked = [queue[i] for i in picked_idx]
            self._queues[env_name] = queue = [
                c for i, c in enumerate(queue) if i not in picked_idx
            ]
            match_id = f"m{self._match_counter:06d}-{uuid.uuid4().hex[:8]}"
            game_seed = int(substream(self.config.seed, "match-seed",
                                      self._match_counter).integers(1 << 62))
            self._match_counter += 1
            task = asyncio.ensure_future(
                self._run_match(match_id, env_config, picked, game_seed)
            )
            self._tasks.add(task)
            task.add_done_callback(self._tasks.discard)

    # -- match execution ----------------------------------------------------

    async def _run_match(self, match_id: str, env_config: EnvConfig,
                         seats: list[_Connection], game_seed: int) -> None:
        async with self._match_sem:
            self.running_matches += 1
            try:
                await self._drive_match(match_id, env_config, seats, game_seed)
            finally:
                self.running_matches -= 1
                for conn in seats:
                    await conn.close()

    async def _drive_match(self, match_id: str, env_config: EnvConfig,
                           seats: list[_Connection], game_seed: int) -> None:
        config = EnvConfig(
            env_name=env_config.env_name,
            player_count=env_config.player_count,
            rng_seed=game_seed,
            params=env_config.params,
        )
        env = make_env(config)
        sub_rng = substream(game_seed, "substitution")
        names = [c.name or f"seat{i}" for i, c in enumerate(seats)]
        log = io.StringIO()
        writer = TranscriptWriter(log)
        writer.start(match_id, config, names)

        for i, conn in enumerate(seats):
            try:
                await conn.send({
                    "type": "match_assigned",
                    "match_id": match_id,
                    "seat": i,
                    "env": config.env_name,
                    "config": config.to_json(),
                })
            except (ConnectionError, OSError):
                pass

        state = env.new_game()
        last_rewards = {p: 0.0 for p in range(config.player_count)}
        consecutive_subs = [0] * config.player_count
        total_subs = [0] * config.player_count
        forfeited = [False] * config.player_count
        turn = 0
        while not state.terminal:
            actors = sorted(env.current_players(state))
            legal = {p: env.legal_actions(state, p) for p in actors}
            asked = []
            for p in actors:
                if forfeited[p] or seats[p].closed:
                    continue
                msg = observation_message(
                    turn,
                    env.observe(state, p).to_json(),
                    [env.encode_action(a) for a in legal[p]],
                    last_rewards[p],
                    False,
                )
                try:
                    await seats[p].send(msg)
                    asked.append(p)
                except (ConnectionError, OSError):
                    pass

            actions: dict[int, Any] = {}
            substituted = []
            for p in actors:
                action = None
                if p in asked:
                    action = await self._collect_action(seats[p], turn, legal[p], env)
                if action is None:
                    action = legal[p][int(sub_rng.integers(len(legal[p])))]
                    substituted.append(p)
                    consecutive_subs[p] += 1
                    total_subs[p] += 1
                    if consecutive_subs[p] >= FORFEIT_AFTER:
                        forfeited[p] = True
                else:
                    consecutive_subs[p] = 0
                actions[p] = action

            writer.step(turn, {p: env.encode_action(a) for p, a in actions.items()},
                        substituted)
            result = env.step(state, actions)
            state = result.next_state
            last_rewards = dict(result.rewards)
            turn += 1

        record = env.rankings(state)
        writer.result(record)
        self.transcripts[match_id] = log.getvalue()
        self._record_result(names, record)

        final = result_message(record, dict(enumerate(total_subs)))
        for p, conn in enumerate(seats):
            try:
                await conn.send(observation_message(
                    turn, env.observe(state, p).to_json(), [],
                    last_rewards[p], True,
                ))
                await conn.send(final)
            except (ConnectionError, OSError):
                pass

    async def _collect_action(self, conn: _Connection, turn: int,
                              legal: list[Any], env) -> Any | None:
        """One seat's action for this turn, or None to trigger substitution."""
        loop = asyncio.get_event_loop()
        deadline = loop.time() + self.config.timeout
        while True:
            remaining = deadline - loop.time()
            if remaining <= 0:
                return None
            try:
                msg = await asyncio.wait_for(conn.recv(), timeout=remaining)
            except (asyncio.TimeoutError, ConnectionError, OSError):
                return None
            except (ValueError, json.JSONDecodeError):
                try:
                    await conn.send(error_message("protocol", "malformed message"))
                except (ConnectionError, OSError):
                    return None
                continue
            if msg["type"] != "action":
                try:
                    await conn.send(error_message("protocol", "expected action"))
                except (ConnectionError, OSError):
                    return None
                continue
            if msg.get("turn") != turn:
                try:
                    await conn.send(error_message(
                        "stale_turn",
                        f"action for turn {msg.get('turn')}, expected {turn}",
                    ))
                except (ConnectionError, OSError):
                    return None
                continue
            try:
                action = env.decode_action(msg.get("value"))
            except (TypeError, ValueError, KeyError):
                action = None
            if action is None or action not in legal:
                try:
                    await conn.send(error_message("illegal_action",
                                                  "action not in legal set"))
                except (ConnectionError, OSError):
                    return None
                continue
            return action

    def _record_result(self, names: list[str], record: RankRecord) -> None:
        seats = len(names)
        ranks = tuple(record.ranks[p] for p in range(seats))
        rewards = tuple(record.total_reward[p] for p in range(seats))
        self.records.append(GameRecord(len(self.records), tuple(names), ranks, rewards))
        if self.table is not None:
            self.table.add_game(names, ranks)


async def run_server(config: ServerConfig) -> MatchServer:
    server = MatchServer(config)
    await server.start()
    return server
