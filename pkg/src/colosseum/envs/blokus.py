"""Four-player Blokus area-control game.

Each player holds one of each of the 21 free polyominoes of sizes 1..5
(89 cells total).  A placement must cover empty in-bounds cells, may never
share an edge with the placing player's own cells, must touch one of their
cells diagonally, and a player's first piece must cover their start corner.
Placing a piece scores its size in control; a player with no placement
passes (reward 0) and is out for good, since the board only ever fills.
The game ends when everyone has passed; final ranking is by total control
with tie rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Mapping, NamedTuple

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

EMPTY = -1

# canonical cells for the 21 free pieces: size-coded names for sizes 1-4,
# standard single-letter names for the 12 pentominoes
PIECE_CELLS: dict[str, tuple[tuple[int, int], ...]] = {
    "I1": ((0, 0),),
    "I2": ((0, 0), (0, 1)),
    "I3": ((0, 0), (0, 1), (0, 2)),
    "V3": ((0, 0), (1, 0), (1, 1)),
    "I4": ((0, 0), (1, 0), (2, 0), (3, 0)),
    "O4": ((0, 0), (0, 1), (1, 0), (1, 1)),
    "T4": ((0, 0), (0, 1), (0, 2), (1, 1)),
    "L4": ((0, 0), (1, 0), (2, 0), (2, 1)),
    "S4": ((0, 1), (0, 2), (1, 0), (1, 1)),
    "F": ((0, 1), (0, 2), (1, 0), (1, 1), (2, 1)),
    "I": ((0, 0), (1, 0), (2, 0), (3, 0), (4, 0)),
    "L": ((0, 0), (1, 0), (2, 0), (3, 0), (3, 1)),
    "N": ((0, 0), (1, 0), (2, 0), (2, 1), (3, 1)),
    "P": ((0, 0), (0, 1), (1, 0), (1, 1), (2, 0)),
    "T": ((0, 0), (0, 1), (0, 2), (1, 1), (2, 1)),
    "U": ((0, 0), (0, 2), (1, 0), (1, 1), (1, 2)),
    "V": ((0, 0), (1, 0), (2, 0), (2, 1), (2, 2)),
    "W": ((0, 0), (1, 0), (1, 1), (2, 1), (2, 2)),
    "X": ((0, 1), (1, 0), (1, 1), (1, 2), (2, 1)),
    "Y": ((0, 1), (1, 0), (1, 1), (2, 1), (3, 1)),
    "Z": ((0, 0), (0, 1), (1, 1), (2, 1), (2, 2)),
}

PIECE_NAMES = tuple(PIECE_CELLS)
PIECE_INDEX = {name: i for i, name in enumerate(PIECE_NAMES)}
PIECE_SIZES = tuple(len(cells) for cells in PIECE_CELLS.values())


def _normalize(cells) -> tuple[tuple[int, int], ...]:
    r0 = min(r for r, _ in cells)
    c0 = min(c for _, c in cells)
    return tuple(sorted((r - r0, c - c0) for r, c in cells))


def orientations(cells) -> list[tuple[tuple[int, int], ...]]:
    """Distinct rotations and reflections, deterministically ordered."""
    seen = set()
    for reflect in (False, True):
        pts = [(r, -c) for r, c in cells] if reflect else list(cells)
        for _ in range(4):
            pts = [(c, -r) for r, c in pts]
            seen.add(_normalize(pts))
    return sorted(seen)


PIECE_ORIENTATIONS: dict[str, list[tuple[tuple[int, int], ...]]] = {
    name: orientations(cells) for name, cells in PIECE_CELLS.items()
}


def _build_form_tables():
    """Flatten all oriented forms into numpy tables for the kernels."""
    piece_of, local_of, rows, cols, ncells = [], [], [], [], []
    start = np.zeros(len(PIECE_NAMES), np.int32)
    count = np.zeros(len(PIECE_NAMES), np.int32)
    f = 0
    for pi, name in enumerate(PIECE_NAMES):
        forms = PIECE_ORIENTATIONS[name]
        start[pi] = f
        count[pi] = len(forms)
        for li, form in enumerate(forms):
            piece_of.append(pi)
            local_of.append(li)
            rr = [r for r, _ in form]
            cc = [c for _, c in form]
            rows.append(rr + [0] * (5 - len(rr)))
            cols.append(cc + [0] * (5 - len(cc)))
            ncells.append(len(form))
            f += 1
    return (
        np.array(piece_of, np.int32),
        np.array(local_of, np.int32),
        np.array(rows, np.int32),
        np.array(cols, np.int32),
        np.array(ncells, np.int32),
        start,
        count,
    )


(FORM_PIECE, FORM_LOCAL, FORM_ROWS, FORM_COLS, FORM_NCELLS,
 PIECE_FORM_START, PIECE_FORM_COUNT) = _build_form_tables()
TOTAL_FORMS = len(FORM_PIECE)

MAX_PLACEMENTS = 8192


@maybe_jit
def placement_legal(board, p, first, sr, sc, f, ar, ac,
                    form_rows, form_cols, form_ncells):
    """The placement rule: in-bounds empty cells, no edge contact with own
    cells, diagonal contact with own cells (or covering the start corner on
    the first placement)."""
    rows, cols = board.shape
    nc = form_ncells[f]
    touch = False
    for k in range(nc):
        r = ar + form_rows[f, k]
        c = ac + form_cols[f, k]
        if r < 0 or r >= rows or c < 0 or c >= cols:
            return False
        if board[r, c] != EMPTY:
            return False
        if r > 0 and board[r - 1, c] == p:
            return False
        if r < rows - 1 and board[r + 1, c] == p:
            return False
        if c > 0 and board[r, c - 1] == p:
            return False
        if c < cols - 1 and board[r, c + 1] == p:
            return False
        if first:
            if r == sr and c == sc:
                touch = True
        elif not touch:
            if r > 0 and c > 0 and board[r - 1, c - 1] == p:
                touch = True
            elif r > 0 and c < cols - 1 and board[r - 1, c + 1] == p:
                touch = True
            elif r < rows - 1 and c > 0 and board[r + 1, c - 1] == p:
                touch = True
            elif r < rows - 1 and c < cols - 1 and board[r + 1, c + 1] == p:
                touch = True
    return touch


@maybe_jit
def enumerate_kernel(board, p, remaining, first, sr, sc,
                     form_rows, form_cols, form_ncells, form_piece,
                     piece_form_start, piece_form_count,
                     stamp_buf, stamp, out):
    """All distinct legal placements for player p, as (piece, form, r, c)
    rows in ``out``; returns the count.

    Candidates are generated by anchoring each form cell on each diagonal
    frontier seed, deduplicated with a stamp buffer, and filtered with
    :func:`placement_legal`.
    """
    rows, cols = board.shape
    n_seeds = 0
    seed_r = np.empty(4 * rows * cols, np.int32)
    seed_c = np.empty(4 * rows * cols, np.int32)
    if first:
        seed_r[0] = sr
        seed_c[0] = sc
        n_seeds = 1
    else:
        for r in range(rows):
            for c in range(cols):
                if board[r, c] != p:
                    continue
                for dr in (-1, 1):
                    for dc in (-1, 1):
                        rr = r + dr
                        cc = c + dc
                        if 0 <= rr < rows and 0 <= cc < cols and board[rr, cc] == EMPTY:
                            seed_r[n_seeds] = rr
                            seed_c[n_seeds] = cc
                            n_seeds += 1
    count = 0
    for s in range(n_seeds):
        for pi in range(len(piece_form_start)):
            if not remaining[pi]:
                continue
            for f in range(piece_form_start[pi], piece_form_start[pi] + piece_form_count[pi]):
                for k in range(form_ncells[f]):
                    ar = seed_r[s] - form_rows[f, k]
                    ac = seed_c[s] - form_cols[f, k]
                    if stamp_buf[f, ar + 5, ac + 5] == stamp:
                        continue
                    stamp_buf[f, ar + 5, ac + 5] = stamp
                    if placement_legal(board, p, first, sr, sc, f, ar, ac,
                                       form_rows, form_cols, form_ncells):
                        out[count, 0] = pi
                        out[count, 1] = f
                        out[count, 2] = ar
                        out[count, 3] = ac
                        count += 1
    return count


class _EnumScratch:
    """Reusable stamp buffer so enumeration never re-zeroes memory."""

    def __init__(self, rows: int, cols: int):
        self.stamp_buf = np.zeros((TOTAL_FORMS, rows + 10, cols + 10), np.int64)
        self.stamp = 0
        self.out = np.empty((MAX_PLACEMENTS, 4), np.int32)

    def next_stamp(self) -> int:
        self.stamp += 1
        return self.stamp


class Placement(NamedTuple):
    piece: str
    orientation: int
    row: int
    col: int

    def cells(self) -> tuple[tuple[int, int], ...]:
        form = PIECE_ORIENTATIONS[self.piece][self.orientation]
        return tuple((self.row + r, self.col + c) for r, c in form)


PASS = "pass"


@dataclass(frozen=True)
class BlokusState:
    rows: int
    cols: int
    n_players: int
    board: bytes  # row-major int8, EMPTY or owner
    remaining: tuple[int, ...]  # per-player bitmask over PIECE_NAMES
    passed: tuple[bool, ...]
    to_move: PlayerId
    control: tuple[int, ...]
    total_reward: tuple[float, ...]

    @property
    def terminal(self) -> bool:
        return all(self.passed)

    def board_array(self) -> np.ndarray:
        return np.frombuffer(self.board, np.int8).reshape(self.rows, self.cols).copy()

    def remaining_pieces(self, p: PlayerId) -> list[str]:
        return [name for i, name in enumerate(PIECE_NAMES) if self.remaining[p] >> i & 1]


@dataclass(frozen=True)
class BlokusObservation:
    """Perfect information: board, everyone's remaining pieces and control."""

    player: PlayerId
    board: tuple[str, ...]
    remaining: tuple[tuple[str, ...], ...]
    control: tuple[int, ...]
    passed: tuple[bool, ...]
    to_move: PlayerId

    def to_json(self) -> dict:
        return {
            "schema": "blokus-obs",
            "v": 1,
            "player": self.player,
            "board": list(self.board),
            "remaining": [list(r) for r in self.remaining],
            "control": list(self.control),
            "passed": list(self.passed),
            "to_move": self.to_move,
        }


def board_rows(state: BlokusState) -> list[str]:
    grid = state.board_array()
    return ["".join("." if v == EMPTY else str(v) for v in row) for row in grid]


@register
class Blokus(Environment):
    name = "blokus"

    def __init__(self, config: EnvConfig):
        super().__init__(config)
        if not 2 <= config.player_count <= 4:
            raise ConfigError("blokus supports 2-4 players")
        self.rows = int(config.param("rows", 20))
        self.cols = int(config.param("cols", 20))
        if self.rows < 3 or self.cols < 3:
            raise ConfigError("board too small")
        corners = [
            (0, 0),
            (0, self.cols - 1),
            (self.rows - 1, self.cols - 1),
            (self.rows - 1, 0),
        ]
        self.start_corners = corners[: self.n_players]
        self._scratch = _EnumScratch(self.rows, self.cols)

    def new_game(self) -> BlokusState:
        full = (1 << len(PIECE_NAMES)) - 1
        board = np.full((self.rows, self.cols), EMPTY, np.int8)
        return BlokusState(
            rows=self.rows,
            cols=self.cols,
            n_players=self.n_players,
            board=board.tobytes(),
            remaining=(full,) * self.n_players,
            passed=(False,) * self.n_players,
            to_move=0,
            control=(0,) * self.n_players,
            total_reward=(0.0,) * self.n_players,
        )

    def current_players(self, state: BlokusState) -> frozenset[PlayerId]:
        if state.terminal:
            raise StateError("terminal state has no players to act")
        return frozenset({state.to_move})

    def enumerate_placements(self, state: BlokusState, p: PlayerId) -> list[Placement]:
        """All legal placements for p, deduplicated across symmetric
        orientations; empty exactly when passing is legal."""
        board = state.board_array()
        remaining = np.array(
            [state.remaining[p] >> i & 1 for i in range(len(PIECE_NAMES))], np.uint8
        )
        first = state.control[p] == 0
        sr, sc = self.start_corners[p]
        scratch = self._scratch
        count = enumerate_kernel(
            board, p, remaining, first, sr, sc,
            FORM_ROWS, FORM_COLS, FORM_NCELLS, FORM_PIECE,
            PIECE_FORM_START, PIECE_FORM_COUNT,
            scratch.stamp_buf, scratch.next_stamp(), scratch.out,
        )
        names = PIECE_NAMES
        local = FORM_LOCAL
        placements = [
            Placement(names[pi], int(local[f]), ar, ac)
            for pi, f, ar, ac in scratch.out[:count].tolist()
        ]
        placements.sort()
        return placements

    def legal_actions(self, state: BlokusState, p: PlayerId) -> list[Any]:
        if state.terminal:
            raise StateError("terminal state")
        if p != state.to_move:
            raise IllegalMoveError(p, "not this player's turn")
        placements = self.enumerate_placements(state, p)
        return placements if placements else [PASS]

    def step(self, state: BlokusState, actions: Mapping[PlayerId, Any]) -> StepResult:
        self._check_actors(state, actions)
        p = state.to_move
        action = actions[p]
        n = state.n_players
        rewards = {q: 0.0 for q in range(n)}

        if action == PASS:
            if self.enumerate_placements(state, p):
                raise IllegalMoveError(p, "pass while placements exist")
            passed = tuple(
                v or q == p for q, v in enumerate(state.passed)
            )
            nxt = replace(state, passed=passed)
        else:
            self._validate_placement(state, p, action)
            board = state.board_array()
            for r, c in action.cells():
                board[r, c] = p
            pi = PIECE_INDEX[action.piece]
            remaining = list(state.remaining)
            remaining[p] &= ~(1 << pi)
            size = PIECE_SIZES[pi]
            rewards[p] = float(size)
            control = list(state.control)
            control[p] += size
            nxt = replace(
                state,
                board=board.tobytes(),
                remaining=tuple(remaining),
                control=tuple(control),
                total_reward=tuple(
                    state.total_reward[q] + rewards[q] for q in range(n)
                ),
            )

        # advance to the next player still in the game
        if not nxt.terminal:
            q = (p + 1) % n
            while nxt.passed[q]:
                q = (q + 1) % n
            nxt = replace(nxt, to_move=q)
        terminal = nxt.terminal
        eliminated = frozenset(q for q in range(n) if nxt.passed[q])
        return StepResult(nxt, rewards, terminal, eliminated)

    def observe(self, state: BlokusState, p: PlayerId) -> BlokusObservation:
        self._require_player(p)
        return BlokusObservation(
            player=p,
            board=tuple(board_rows(state)),
            remaining=tuple(
                tuple(state.remaining_pieces(q)) for q in range(state.n_players)
            ),
            control=state.control,
            passed=state.passed,
            to_move=state.to_move,
        )

    def rankings(self, state: BlokusState) -> RankRecord:
        if not state.terminal:
            raise StateError("rankings require a terminal state")
        by_control: dict[int, list[PlayerId]] = {}
        for p in range(state.n_players):
            by_control.setdefault(state.control[p], []).append(p)
        blocks = [by_control[v] for v in sorted(by_control, reverse=True)]
        return RankRecord(
            ranks=tie_rounded_ranks(blocks),
            total_reward={p: state.total_reward[p] for p in range(state.n_players)},
        )

    def state_to_json(self, state: BlokusState) -> dict:
        return {
            "schema": "blokus-state",
            "v": 1,
            "rows": state.rows,
            "cols": state.cols,
            "players": state.n_players,
            "board": board_rows(state),
            "remaining": [state.remaining_pieces(p) for p in range(state.n_players)],
            "passed": list(state.passed),
            "to_move": state.to_move,
            "control": list(state.control),
            "total_reward": list(state.total_reward),
        }

    def state_from_json(self, obj: Mapping[str, Any]) -> BlokusState:
        board = np.array(
            [[EMPTY if ch == "." else int(ch) for ch in row] for row in obj["board"]],
            np.int8,
        )
        remaining = tuple(
            sum(1 << PIECE_INDEX[name] for name in names)
            for names in obj["remaining"]
        )
        return BlokusState(
            rows=obj["rows"],
            cols=obj["cols"],
            n_players=obj["players"],
            board=board.tobytes(),
            remaining=remaining,
            passed=tuple(obj["passed"]),
            to_move=obj["to_move"],
            control=tuple(obj["control"]),
            total_reward=tuple(obj["total_reward"]),
        )

    def encode_action(self, action: Any) -> Any:
        if action == PASS:
            return PASS
        return {
            "piece": action.piece,
            "orientation": action.orientation,
            "row": action.row,
            "col": action.col,
        }

    def decode_action(self, obj: Any) -> Any:
        if obj == PASS:
            return PASS
        return Placement(obj["piece"], int(obj["orientation"]), int(obj["row"]), int(obj["col"]))

    # -- helpers -----------------------------------------------------------

    def _validate_placement(self, state: BlokusState, p: PlayerId, pl: Placement) -> None:
        if not isinstance(pl, Placement):
            raise IllegalMoveError(p, f"bad action {pl!r}")
        pi = PIECE_INDEX.get(pl.piece)
        if pi is None:
            raise IllegalMoveError(p, f"unknown piece {pl.piece!r}")
        if not state.remaining[p] >> pi & 1:
            raise IllegalMoveError(p, f"piece {pl.piece} already used")
        if not 0 <= pl.orientation < len(PIECE_ORIENTATIONS[pl.piece]):
            raise IllegalMoveError(p, f"bad orientation {pl.orientation}")
        f = int(PIECE_FORM_START[pi]) + pl.orientation
        first = state.control[p] == 0
        sr, sc = self.start_corners[p]
        ok = placement_legal(
            state.board_array(), p, first, sr, sc, f, pl.row, pl.col,
            FORM_ROWS, FORM_COLS, FORM_NCELLS,
        )
        if not ok:
            raise IllegalMoveError(p, f"illegal placement {pl}")
