"""One-shot normal-form environments.

``matrix`` draws a payoff tensor of shape (S_1, ..., S_P, P) with entries
uniform on [0, 1); with ``zero_sum`` set, each joint action's payoff vector
is mean-centered so it sums to zero.  ``rps`` is rock-paper-scissors for two
players (classic cycle) or three (the single player holding the unique
action wins; all-same or all-distinct is a tie), with configurable win,
lose, and tie payoffs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from typing import Any, Mapping, Sequence

import numpy as np

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
from colosseum.rng import substream

RPS_ACTIONS = ("R", "P", "S")


@dataclass(frozen=True)
class PayoffTensor:
    entries: np.ndarray  # shape (S_1, ..., S_P, P)
    zero_sum: bool

    @property
    def n_players(self) -> int:
        return self.entries.shape[-1]

    @property
    def action_counts(self) -> tuple[int, ...]:
        return self.entries.shape[:-1]


def zero_sum_project(entries: np.ndarray) -> np.ndarray:
    """Mean-center every joint action's payoff vector (idempotent)."""
    return entries - entries.mean(axis=-1, keepdims=True)


def random_payoff(shape: Sequence[int], seed: int, zero_sum: bool) -> PayoffTensor:
    shape = tuple(int(s) for s in shape)
    if len(shape) < 2:
        raise ConfigError("need at least 2 players")
    if any(s < 1 for s in shape):
        raise ConfigError("every player needs at least one action")
    rng = substream(seed, "matrix-payoff")
    entries = rng.random(shape + (len(shape),))
    if zero_sum:
        entries = zero_sum_project(entries)
    return PayoffTensor(entries=entries, zero_sum=zero_sum)


def rps_outcome(actions: Sequence[str], win: float, lose: float, tie: float) -> dict[PlayerId, float]:
    """Payoffs for one rock-paper-scissors round (2 or 3 players)."""
    for a in actions:
        if a not in RPS_ACTIONS:
            raise IllegalMoveError(list(actions).index(a), f"bad action {a!r}")
    n = len(actions)
    if n == 2:
        a, b = actions
        if a == b:
            return {0: tie, 1: tie}
        beats = {("R", "S"), ("S", "P"), ("P", "R")}
        if (a, b) in beats:
            return {0: win, 1: lose}
        return {0: lose, 1: win}
    if n == 3:
        singles = [i for i, a in enumerate(actions) if actions.count(a) == 1]
        if len(singles) == 1:
            w = singles[0]
            return {i: (win if i == w else lose) for i in range(3)}
        return {i: tie for i in range(3)}
    raise ConfigError(f"rps supports 2 or 3 players, got {n}")


def rps_tensor(players: int, win: float, lose: float, tie: float) -> PayoffTensor:
    """The normal-form tensor induced by the RPS rules (the observation)."""
    entries = np.zeros((3,) * players + (players,))
    for joint in np.ndindex(*(3,) * players):
        payoffs = rps_outcome([RPS_ACTIONS[a] for a in joint], win, lose, tie)
        for p in range(players):
            entries[joint + (p,)] = payoffs[p]
    return PayoffTensor(entries=entries, zero_sum=False)


# -- tensor file format: header line + flat row-major decimal values --------

def save_tensor(tensor: PayoffTensor, fh: io.TextIOBase, seed: int | None = None) -> None:
    shape = ",".join(str(s) for s in tensor.action_counts)
    fh.write(f"shape={shape} seed={'' if seed is None else seed} "
             f"zero_sum={int(tensor.zero_sum)}\n")
    for v in tensor.entries.ravel():
        fh.write(repr(float(v)) + "\n")


def load_tensor(fh: io.TextIOBase) -> PayoffTensor:
    header = fh.readline().strip()
    fields = dict(part.split("=", 1) for part in header.split())
    shape = tuple(int(s) for s in fields["shape"].split(","))
    zero_sum = fields["zero_sum"] == "1"
    values = np.array([float(line) for line in fh if line.strip()])
    entries = values.reshape(shape + (len(shape),))
    return PayoffTensor(entries=entries, zero_sum=zero_sum)


@dataclass(frozen=True)
class MatrixState:
    joint: tuple[int, ...] | None  # chosen joint action, None before the step
    rewards: tuple[float, ...]

    @property
    def terminal(self) -> bool:
        return self.joint is not None


@dataclass(frozen=True)
class MatrixObservation:
    """Every player sees the whole normal-form tensor."""

    player: PlayerId
    tensor: PayoffTensor

    def to_json(self) -> dict:
        return {
            "schema": "matrix-obs",
            "v": 1,
            "player": self.player,
            "shape": list(self.tensor.action_counts),
            "zero_sum": self.tensor.zero_sum,
            "entries": [float(v) for v in self.tensor.entries.ravel()],
        }


class _OneShot(Environment):
    """Shared machinery for single-step simultaneous games."""

    tensor: PayoffTensor

    def new_game(self) -> MatrixState:
        return MatrixState(joint=None, rewards=(0.0,) * self.n_players)

    def current_players(self, state: MatrixState) -> frozenset[PlayerId]:
        if state.terminal:
            raise StateError("terminal state has no players to act")
        return frozenset(range(self.n_players))

    def step(self, state: MatrixState, actions: Mapping[PlayerId, Any]) -> StepResult:
        self._check_actors(state, actions)
        joint = tuple(self._action_index(p, actions[p]) for p in range(self.n_players))
        payoff = self.tensor.entries[joint]
        rewards = {p: float(payoff[p]) for p in range(self.n_players)}
        nxt = MatrixState(joint=joint, rewards=tuple(payoff))
        return StepResult(nxt, rewards, True, frozenset(range(self.n_players)))

    def observe(self, state: MatrixState, p: PlayerId) -> MatrixObservation:
        self._require_player(p)
        return MatrixObservation(player=p, tensor=self.tensor)

    def rankings(self, state: MatrixState) -> RankRecord:
        if not state.terminal:
            raise StateError("rankings require a terminal state")
        order: dict[float, list[PlayerId]] = {}
        for p in range(self.n_players):
            order.setdefault(state.rewards[p], []).append(p)
        blocks = [order[v] for v in sorted(order, reverse=True)]
        return RankRecord(
            ranks=tie_rounded_ranks(blocks),
            total_reward={p: state.rewards[p] for p in range(self.n_players)},
        )

    def state_to_json(self, state: MatrixState) -> dict:
        return {
            "schema": f"{self.name}-state",
            "v": 1,
            "joint": None if state.joint is None else list(state.joint),
            "rewards": list(state.rewards),
        }

    def state_from_json(self, obj: Mapping[str, Any]) -> MatrixState:
        joint = obj["joint"]
        return MatrixState(
            joint=None if joint is None else tuple(joint),
            rewards=tuple(obj["rewards"]),
        )

    def _action_index(self, p: PlayerId, action: Any) -> int:
        raise NotImplementedError


@register
class MatrixGame(_OneShot):
    name = "matrix"

    def __init__(self, config: EnvConfig):
        super().__init__(config)
        shape = config.param("shape")
        if shape is None:
            shape = (2,) * config.player_count
        if len(shape) != config.player_count:
            raise ConfigError("shape length must equal player_count")
        self.tensor = random_payoff(shape, config.rng_seed, bool(config.param("zero_sum", False)))

    def legal_actions(self, state: MatrixState, p: PlayerId) -> list[int]:
        if state.terminal:
            raise StateError("terminal state")
        self._require_player(p)
        return list(range(self.tensor.action_counts[p]))

    def _action_index(self, p: PlayerId, action: Any) -> int:
        a = int(action)
        if not 0 <= a < self.tensor.action_counts[p]:
            raise IllegalMoveError(p, f"action index {a} out of range")
        return a


@register
class RockPaperScissors(_OneShot):
    name = "rps"

    def __init__(self, config: EnvConfig):
        super().__init__(config)
        if config.player_count not in (2, 3):
            raise ConfigError("rps supports 2 or 3 players")
        self.win = float(config.param("win", 1.0))
        self.lose = float(config.param("lose", -1.0))
        self.tie = float(config.param("tie", 0.0))
        self.tensor = rps_tensor(config.player_count, self.win, self.lose, self.tie)

    def legal_actions(self, state: MatrixState, p: PlayerId) -> list[str]:
        if state.terminal:
            raise StateError("terminal state")
        self._require_player(p)
        return list(RPS_ACTIONS)

    def _action_index(self, p: PlayerId, action: Any) -> int:
        if action not in RPS_ACTIONS:
            raise IllegalMoveError(p, f"bad action {action!r}")
        return RPS_ACTIONS.index(action)
