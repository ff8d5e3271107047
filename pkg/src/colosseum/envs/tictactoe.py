"""n-player tic-tac-toe on an n x m board.

Identical rules to the classic game with extra symbols: the first player to
line up three of their own symbol in any cardinal or inter-cardinal
direction wins (+1) and every other player loses equally (-1).  A full board
with no line is a draw: reward 0 for everyone and a full tie in the ranking.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Mapping

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

SYMBOLS = "XOYZABCDEFGH"

# (dr, dc) axes; each covers both directions of one line orientation.
_AXES = ((0, 1), (1, 0), (1, 1), (1, -1))

_EMPTY = -1

DEFAULT_SIZES = {3: (5, 5), 4: (6, 6)}


@dataclass(frozen=True)
class TttState:
    rows: int
    cols: int
    n_players: int
    cells: tuple[int, ...]  # row-major; _EMPTY or owning player index
    to_move: PlayerId
    winner: PlayerId | None
    total_reward: tuple[float, ...]

    def cell(self, r: int, c: int) -> int:
        return self.cells[r * self.cols + c]

    @property
    def move_count(self) -> int:
        return sum(1 for v in self.cells if v != _EMPTY)

    @property
    def terminal(self) -> bool:
        return self.winner is not None or _EMPTY not in self.cells


@dataclass(frozen=True)
class TttObservation:
    """Full-information view: the entire board plus whose turn it is."""

    rows: int
    cols: int
    board: tuple[int, ...]
    to_move: PlayerId
    player: PlayerId

    def to_json(self) -> dict:
        return {
            "schema": "ttt-obs",
            "v": 1,
            "rows": self.rows,
            "cols": self.cols,
            "board": board_string(self.rows, self.cols, self.board),
            "to_move": self.to_move,
            "player": self.player,
        }


def board_string(rows: int, cols: int, cells: tuple[int, ...]) -> str:
    return "".join(
        "." if v == _EMPTY else SYMBOLS[v] for v in cells
    )


def board_from_string(text: str) -> tuple[int, ...]:
    return tuple(_EMPTY if ch == "." else SYMBOLS.index(ch) for ch in text)


def has_three_in_row(state: TttState, p: PlayerId) -> bool:
    """True iff p owns three consecutive cells along any of the 8 directions."""
    rows, cols = state.rows, state.cols
    for r in range(rows):
        for c in range(cols):
            if state.cell(r, c) != p:
                continue
            for dr, dc in _AXES:
                r2, c2 = r + 2 * dr, c + 2 * dc
                if not (0 <= r2 < rows and 0 <= c2 < cols):
                    continue
                if 0 <= c + dc < cols and state.cell(r + dr, c + dc) == p \
                        and state.cell(r2, c2) == p:
                    return True
    return False


@register
class TicTacToe(Environment):
    name = "tictactoe"

    def __init__(self, config: EnvConfig):
        super().__init__(config)
        if not 2 <= config.player_count <= len(SYMBOLS):
            raise ConfigError(
                f"tictactoe supports 2..{len(SYMBOLS)} players, got {config.player_count}"
            )
        default = DEFAULT_SIZES.get(config.player_count, (5, 5))
        self.rows = int(config.param("rows", default[0]))
        self.cols = int(config.param("cols", default[1]))
        if self.rows < 3 or self.cols < 3:
            raise ConfigError("board must be at least 3x3")

    def new_game(self) -> TttState:
        return TttState(
            rows=self.rows,
            cols=self.cols,
            n_players=self.n_players,
            cells=(_EMPTY,) * (self.rows * self.cols),
            to_move=0,
            winner=None,
            total_reward=(0.0,) * self.n_players,
        )

    def current_players(self, state: TttState) -> frozenset[PlayerId]:
        if state.terminal:
            raise StateError("terminal state has no players to act")
        return frozenset({state.to_move})

    def legal_actions(self, state: TttState, p: PlayerId) -> list[tuple[int, int]]:
        if state.terminal:
            raise StateError("terminal state")
        if p != state.to_move:
            raise IllegalMoveError(p, "not this player's turn")
        return [
            (i // state.cols, i % state.cols)
            for i, v in enumerate(state.cells)
            if v == _EMPTY
        ]

    def step(self, state: TttState, actions: Mapping[PlayerId, Any]) -> StepResult:
        self._check_actors(state, actions)
        p = state.to_move
        r, c = actions[p]
        if not (0 <= r < state.rows and 0 <= c < state.cols):
            raise IllegalMoveError(p, f"cell ({r}, {c}) out of bounds")
        if state.cell(r, c) != _EMPTY:
            raise IllegalMoveError(p, f"cell ({r}, {c}) occupied")

        cells = list(state.cells)
        cells[r * state.cols + c] = p
        nxt = replace(state, cells=tuple(cells), to_move=(p + 1) % state.n_players)

        n = state.n_players
        rewards = {q: 0.0 for q in range(n)}
        if has_three_in_row(nxt, p):
            nxt = replace(nxt, winner=p)
            rewards = {q: (1.0 if q == p else -1.0) for q in range(n)}
        terminal = nxt.terminal
        total = tuple(state.total_reward[q] + rewards[q] for q in range(n))
        nxt = replace(nxt, total_reward=total)
        eliminated = frozenset(range(n)) if terminal else frozenset()
        return StepResult(nxt, rewards, terminal, eliminated)

    def observe(self, state: TttState, p: PlayerId) -> TttObservation:
        self._require_player(p)
        return TttObservation(
            rows=state.rows,
            cols=state.cols,
            board=state.cells,
            to_move=state.to_move,
            player=p,
        )

    def rankings(self, state: TttState) -> RankRecord:
        if not state.terminal:
            raise StateError("rankings require a terminal state")
        everyone = range(state.n_players)
        if state.winner is None:
            blocks = [list(everyone)]
        else:
            blocks = [[state.winner], [q for q in everyone if q != state.winner]]
        return RankRecord(
            ranks=tie_rounded_ranks(blocks),
            total_reward={q: state.total_reward[q] for q in everyone},
        )

    def state_to_json(self, state: TttState) -> dict:
        return {
            "schema": "ttt-state",
            "v": 1,
            "rows": state.rows,
            "cols": state.cols,
            "players": state.n_players,
            "board": board_string(state.rows, state.cols, state.cells),
            "to_move": state.to_move,
            "winner": state.winner,
            "total_reward": list(state.total_reward),
        }

    def state_from_json(self, obj: Mapping[str, Any]) -> TttState:
        return TttState(
            rows=obj["rows"],
            cols=obj["cols"],
            n_players=obj["players"],
            cells=board_from_string(obj["board"]),
            to_move=obj["to_move"],
            winner=obj["winner"],
            total_reward=tuple(obj["total_reward"]),
        )

    def encode_action(self, action: Any) -> Any:
        return [int(action[0]), int(action[1])]

    def decode_action(self, obj: Any) -> tuple[int, int]:
        return (int(obj[0]), int(obj[1]))
