"""N-player light-cycle game on a walled grid.

Players spawn on a circle around the arena center, move forward/left/right
each step, and leave a trailing wall behind; touching any wall, another
head, or another mover's target cell is fatal.  Rewards: +1 per surviving
step, -1 on the crash step, +10 extra to a sole survivor (no bonus when the
last players crash together).  Trails of dead players stay on the board.
Supports simultaneous and sequential turn structures and full-board or
egocentric windowed observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Mapping

import numpy as np

from colosseum._kernels import maybe_jit
from colosseum.core import (
    ConfigError,
    EnvConfig,
    Environment,
    IllegalMoveError,
    PlayerId,
    RankRecord,
    StateError,
    StepResult,
    register,
    tie_rounded_ranks,
)

OPEN, WALL = 0, 1
TRAIL_BASE = 2
HEAD_BASE = 52
MAX_PLAYERS = 10  # bounded by the trail alphabet 'a'..'j'

ACTIONS = ("forward", "left", "right")
_TURN = {"forward": 0, "left": -1, "right": 1}

# heading index: 0 up, 1 right, 2 down, 3 left
_DR = (-1, 0, 1, 0)
_DC = (0, 1, 0, -1)


def cell_char(code: int) -> str:
    if code == OPEN:
        return "."
    if code == WALL:
        return "#"
    if code >= HEAD_BASE:
        return str(code - HEAD_BASE)
    return chr(ord("a") + code - TRAIL_BASE)


def cell_code(ch: str) -> int:
    if ch == ".":
        return OPEN
    if ch == "#":
        return WALL
    if ch.isdigit():
        return HEAD_BASE + int(ch)
    return TRAIL_BASE + ord(ch) - ord("a")


def spawn_positions(rows: int, cols: int, n: int, rng=None) -> list[tuple[tuple[int, int], int]]:
    """Equally spaced spawn cells on the circle of radius min(rows, cols)/3
    around the arena center, each heading toward the center.

    The layout is deterministic; ``rng`` is accepted for interface
    uniformity but not consulted.
    """
    if n < 1:
        raise ConfigError("need at least 1 player")
    if (rows - 2) * (cols - 2) < n:
        raise ConfigError("arena interior too small for player count")
    radius = min(rows, cols) / 3.0
    cr, cc = (rows - 1) / 2.0, (cols - 1) / 2.0
    out: list[tuple[tuple[int, int], int]] = []
    for i in range(n):
        angle = 2.0 * math.pi * i / n
        r = int(round(cr + radius * math.sin(angle)))
        c = int(round(cc + radius * math.cos(angle)))
        if not (1 <= r <= rows - 2 and 1 <= c <= cols - 2):
            raise ConfigError("arena too small for spawn circle")
        dr, dc = cr - r, cc - c
        if abs(dr) >= abs(dc):
            heading = 0 if dr < 0 else 2
            if dr == 0:
                heading = 1 if dc > 0 else 3
        else:
            heading = 1 if dc > 0 else 3
        out.append(((r, c), heading))
    if len({pos for pos, _ in out}) != n:
        raise ConfigError("arena too small: spawn positions collide")
    return out


@maybe_jit
def tron_resolve(arena, pos, heading, acting, action):
    """Advance every acting player one cell, in place; returns death mask.

    Resolution is order-independent: all old heads become trails first, then
    every mover's target is checked against the updated arena and against
    the other movers' targets (same-cell and head-swap both kill both).
    """
    n = pos.shape[0]
    died = np.zeros(n, np.uint8)
    for p in range(n):
        if acting[p]:
            arena[pos[p, 0], pos[p, 1]] = TRAIL_BASE + p
            h = heading[p]
            if action[p] == 1:
                h = (h + 3) % 4
            elif action[p] == 2:
                h = (h + 1) % 4
            heading[p] = h
            if h == 0:
                pos[p, 0] -= 1
            elif h == 1:
                pos[p, 1] += 1
            elif h == 2:
                pos[p, 0] += 1
            else:
                pos[p, 1] -= 1
    for p in range(n):
        if acting[p]:
            r, c = pos[p, 0], pos[p, 1]
            if arena[r, c] != OPEN:
                died[p] = 1
            else:
                for q in range(n):
                    if q != p and acting[q] and pos[q, 0] == r and pos[q, 1] == c:
                        died[p] = 1
    for p in range(n):
        if acting[p] and not died[p]:
            arena[pos[p, 0], pos[p, 1]] = HEAD_BASE + p
    return died


@dataclass(frozen=True)
class TronState:
    rows: int
    cols: int
    n_players: int
    mode: str  # "simultaneous" | "sequential"
    arena: bytes  # row-major cell codes
    positions: tuple[tuple[int, int], ...]
    headings: tuple[int, ...]
    alive: tuple[bool, ...]
    crash_step: tuple[int | None, ...]
    step_count: int
    next_mover: int  # sequential mode only
    total_reward: tuple[float, ...]

    @property
    def terminal(self) -> bool:
        n_alive = sum(self.alive)
        return n_alive == 0 or (n_alive == 1 and self.n_players > 1)

    def arena_array(self) -> np.ndarray:
        return np.frombuffer(self.arena, np.int8).reshape(self.rows, self.cols).copy()

    def arena_rows(self) -> list[str]:
        grid = self.arena_array()
        return ["".join(cell_char(int(v)) for v in row) for row in grid]


@dataclass(frozen=True)
class TronObservation:
    """One player's view plus the three cells reachable this step.

    ``clear`` reports whether the forward/left/right target cells are open,
    which is exactly what the scripted baseline agent consumes.
    """

    player: PlayerId
    mode: str
    grid: tuple[str, ...]
    heading: int
    position: tuple[int, int] | None
    alive: tuple[bool, ...]
    headings: tuple[int, ...] | None  # full mode only
    step: int
    clear: tuple[bool, bool, bool]

    def to_json(self) -> dict:
        return {
            "schema": "tron-obs",
            "v": 1,
            "player": self.player,
            "mode": self.mode,
            "grid": list(self.grid),
            "heading": self.heading,
            "position": None if self.position is None else list(self.position),
            "alive": list(self.alive),
            "headings": None if self.headings is None else list(self.headings),
            "step": self.step,
            "clear": list(self.clear),
        }


@register
class Tron(Environment):
    name = "tron"

    def __init__(self, config: EnvConfig):
        super().__init__(config)
        n = config.player_count
        if not 1 <= n <= MAX_PLAYERS:
            raise ConfigError(f"tron supports 1..{MAX_PLAYERS} players, got {n}")
        self.rows = int(config.param("rows", 15))
        self.cols = int(config.param("cols", 15))
        if self.rows < 5 or self.cols < 5:
            raise ConfigError("arena must be at least 5x5")
        self.mode = config.param("mode", "simultaneous")
        if self.mode not in ("simultaneous", "sequential"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        obs = config.param("observation", "full")
        if obs != "full" and not (isinstance(obs, int) and obs >= 1):
            raise ConfigError("observation must be 'full' or a window radius >= 1")
        self.observation = obs
        spawn_positions(self.rows, self.cols, n)  # validate geometry now

    def new_game(self) -> TronState:
        spawns = spawn_positions(self.rows, self.cols, self.n_players)
        arena = np.zeros((self.rows, self.cols), np.int8)
        arena[0, :] = WALL
        arena[-1, :] = WALL
        arena[:, 0] = WALL
        arena[:, -1] = WALL
        for p, (pos, _) in enumerate(spawns):
            arena[pos] = HEAD_BASE + p
        return TronState(
            rows=self.rows,
            cols=self.cols,
            n_players=self.n_players,
            mode=self.mode,
            arena=arena.tobytes(),
            positions=tuple(pos for pos, _ in spawns),
            headings=tuple(h for _, h in spawns),
            alive=(True,) * self.n_players,
            crash_step=(None,) * self.n_players,
            step_count=0,
            next_mover=0,
            total_reward=(0.0,) * self.n_players,
        )

    def current_players(self, state: TronState) -> frozenset[PlayerId]:
        if self._terminal(state):
            raise StateError("terminal state has no players to act")
        if state.mode == "sequential":
            return frozenset({state.next_mover})
        return frozenset(p for p in range(state.n_players) if state.alive[p])

    def legal_actions(self, state: TronState, p: PlayerId) -> list[str]:
        if p not in self.current_players(state):
            raise IllegalMoveError(p, "not acting in this state")
        return list(ACTIONS)

    def step(self, state: TronState, actions: Mapping[PlayerId, Any]) -> StepResult:
        self._check_actors(state, actions)
        n = state.n_players
        arena = state.arena_array()
        pos = np.array(state.positions, np.int32)
        heading = np.array(state.headings, np.int32)
        acting = np.zeros(n, np.uint8)
        action = np.zeros(n, np.int32)
        for p, a in actions.items():
            if a not in ACTIONS:
                raise IllegalMoveError(p, f"unknown action {a!r}")
            acting[p] = 1
            action[p] = ACTIONS.index(a)

        died = tron_resolve(arena, pos, heading, acting, action)

        step_count = state.step_count + 1
        alive = list(state.alive)
        crash = list(state.crash_step)
        rewards = {p: 0.0 for p in range(n)}
        for p in range(n):
            if acting[p]:
                if died[p]:
                    alive[p] = False
                    crash[p] = step_count
                    rewards[p] = -1.0
                else:
                    rewards[p] = 1.0

        n_alive = sum(alive)
        terminal = n_alive == 0 or (n_alive == 1 and n > 1)
        if terminal and n_alive == 1:
            winner = alive.index(True)
            rewards[winner] += 10.0

        next_mover = state.next_mover
        if state.mode == "sequential" and not terminal:
            q = (state.next_mover + 1) % n
            while not alive[q]:
                q = (q + 1) % n
            next_mover = q

        nxt = TronState(
            rows=state.rows,
            cols=state.cols,
            n_players=n,
            mode=state.mode,
            arena=arena.astype(np.int8).tobytes(),
            positions=tuple((int(r), int(c)) for r, c in pos),
            headings=tuple(int(h) for h in heading),
            alive=tuple(alive),
            crash_step=tuple(crash),
            step_count=step_count,
            next_mover=next_mover,
            total_reward=tuple(
                state.total_reward[p] + rewards[p] for p in range(n)
            ),
        )
        eliminated = frozenset(p for p in range(n) if not alive[p])
        return StepResult(nxt, rewards, terminal, eliminated)

    def observe(self, state: TronState, p: PlayerId) -> TronObservation:
        self._require_player(p)
        arena = state.arena_array()
        r, c = state.positions[p]
        h = state.headings[p]
        clear = self._clearance(arena, r, c, h) if state.alive[p] else (False, False, False)
        if self.observation == "full":
            return TronObservation(
                player=p,
                mode="full",
                grid=tuple(state.arena_rows()),
                heading=h,
                position=(r, c),
                alive=state.alive,
                headings=state.headings,
                step=state.step_count,
                clear=clear,
            )
        w = int(self.observation)
        padded = np.full((state.rows + 2 * w, state.cols + 2 * w), WALL, np.int8)
        padded[w: w + state.rows, w: w + state.cols] = arena
        crop = padded[r: r + 2 * w + 1, c: c + 2 * w + 1]
        crop = np.rot90(crop, k=h)
        grid = tuple("".join(cell_char(int(v)) for v in row) for row in crop)
        return TronObservation(
            player=p,
            mode="window",
            grid=grid,
            heading=0,  # egocentric: own heading always points up
            position=None,
            alive=state.alive,
            headings=None,
            step=state.step_count,
            clear=clear,
        )

    def rankings(self, state: TronState) -> RankRecord:
        if not self._terminal(state):
            raise StateError("rankings require a terminal state")
        # survivors first, then by crash step, latest crash first
        def key(p: PlayerId) -> float:
            return math.inf if state.alive[p] else state.crash_step[p]

        by_key: dict[float, list[PlayerId]] = {}
        for p in range(state.n_players):
            by_key.setdefault(key(p), []).append(p)
        blocks = [by_key[k] for k in sorted(by_key, reverse=True)]
        return RankRecord(
            ranks=tie_rounded_ranks(blocks),
            total_reward={p: state.total_reward[p] for p in range(state.n_players)},
        )

    def state_to_json(self, state: TronState) -> dict:
        return {
            "schema": "tron-state",
            "v": 1,
            "rows": state.rows,
            "cols": state.cols,
            "players": state.n_players,
            "mode": state.mode,
            "arena": state.arena_rows(),
            "positions": [list(pc) for pc in state.positions],
            "headings": list(state.headings),
            "alive": list(state.alive),
            "crash_step": list(state.crash_step),
            "step_count": state.step_count,
            "next_mover": state.next_mover,
            "total_reward": list(state.total_reward),
        }

    def state_from_json(self, obj: Mapping[str, Any]) -> TronState:
        arena = np.array(
            [[cell_code(ch) for ch in row] for row in obj["arena"]], np.int8
        )
        return TronState(
            rows=obj["rows"],
            cols=obj["cols"],
            n_players=obj["players"],
            mode=obj["mode"],
            arena=arena.tobytes(),
            positions=tuple((r, c) for r, c in obj["positions"]),
            headings=tuple(obj["headings"]),
            alive=tuple(obj["alive"]),
            crash_step=tuple(obj["crash_step"]),
            step_count=obj["step_count"],
            next_mover=obj["next_mover"],
            total_reward=tuple(obj["total_reward"]),
        )

    # -- helpers -----------------------------------------------------------

    def _terminal(self, state: TronState) -> bool:
        return state.terminal

    @staticmethod
    def _clearance(arena: np.ndarray, r: int, c: int, h: int) -> tuple[bool, bool, bool]:
        out = []
        for turn in (0, -1, 1):  # forward, left, right
            hh = (h + turn) % 4
            out.append(bool(arena[r + _DR[hh], c + _DC[hh]] == OPEN))
        return tuple(out)
