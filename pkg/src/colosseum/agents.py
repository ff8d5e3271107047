"""Baseline agents and opponent-pool scheduling.

Policies are opaque callables picked by name; learning happens outside the
framework and enters only as new frozen policy versions pushed into an
:class:`OpponentPool`.  The pool implements delayed-update self-play (pool
size 1) and fictitious self-play (size K): opponents are sampled per seat,
the latest snapshot with probability ``latest_prob`` and otherwise
uniformly among the older snapshots, and the pool refreshes whenever the
learner's running win rate reaches the configured threshold.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

ActFn = Callable[[Any, Sequence[Any], np.random.Generator], Any]


@dataclass(frozen=True)
class Policy:
    """A frozen, named decision function: (observation, legal, rng) -> action."""

    name: str
    version: int
    act: ActFn


def random_policy(name: str = "random", version: int = 0) -> Policy:
    def act(obs: Any, legal: Sequence[Any], rng: np.random.Generator) -> Any:
        return legal[int(rng.integers(len(legal)))]

    return Policy(name=name, version=version, act=act)


def scripted_tron_act(obs: Any, legal: Sequence[Any], epsilon: float,
                      rng: np.random.Generator) -> str:
    """Hand-coded Tron baseline with an epsilon chance of acting randomly.

    Deterministic part: go forward if the cell ahead is open, otherwise turn
    toward a clear side (uniform if both are clear); if every direction is
    blocked the move is forward into the crash.
    """
    if rng.random() < epsilon:
        return ["forward", "left", "right"][int(rng.integers(3))]
    ahead, left, right = obs.clear
    if ahead:
        return "forward"
    options = [a for a, ok in (("left", left), ("right", right)) if ok]
    if not options:
        return "forward"
    if len(options) == 1:
        return options[0]
    return options[int(rng.integers(2))]


def scripted_tron_policy(epsilon: float, version: int = 0) -> Policy:
    def act(obs: Any, legal: Sequence[Any], rng: np.random.Generator) -> str:
        return scripted_tron_act(obs, legal, epsilon, rng)

    return Policy(name=f"scripted:eps={epsilon:g}", version=version, act=act)


def resolve_policy(name: str) -> Policy:
    """Look up an agent by its identifier ("random" or "scripted:eps=X")."""
    if name == "random":
        return random_policy()
    if name.startswith("scripted:eps="):
        return scripted_tron_policy(float(name.split("=", 1)[1]))
    raise ValueError(f"unknown agent name {name!r}")


class OpponentPool:
    """Bounded pool of frozen policy snapshots with SP/FSP scheduling.

    Plain delayed-update self-play is the size-1 special case.  Snapshot
    reads are copy-on-write: samplers hold a list reference that updates
    never mutate in place.
    """

    def __init__(self, capacity: int, win_threshold: float,
                 latest_prob: float = 0.8, window: int = 100):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        if not 0.0 <= latest_prob <= 1.0:
            raise ValueError("latest_prob must be in [0, 1]")
        self.capacity = capacity
        self.win_threshold = win_threshold
        self.latest_prob = latest_prob
        self.window = window
        self._snapshots: tuple[Policy, ...] = ()
        self._created_at: tuple[int, ...] = ()
        self._results: deque[bool] = deque(maxlen=window)
        self._games_played = 0

    @property
    def snapshots(self) -> tuple[Policy, ...]:
        return self._snapshots

    @property
    def current_winrate(self) -> float | None:
        """Mean over the most recent window; None until the window fills."""
        if len(self._results) < self.window:
            return None
        return sum(self._results) / len(self._results)

    def seed(self, policy: Policy) -> None:
        """Install the initial snapshot (pool must be empty)."""
        if self._snapshots:
            raise ValueError("pool already seeded")
        self._snapshots = (policy,)
        self._created_at = (self._games_played,)

    def record_game(self, won: bool) -> None:
        """Record one completed learner game; a win is an untied first place."""
        self._results.append(bool(won))
        self._games_played += 1

    def sample_opponents(self, seats: int, rng: np.random.Generator) -> list[Policy]:
        """Independently per seat: latest with probability latest_prob, else
        uniform over the older snapshots."""
        snaps = self._snapshots
        if not snaps:
            raise ValueError("pool is empty")
        out = []
        for _ in range(seats):
            if len(snaps) == 1 or rng.random() < self.latest_prob:
                out.append(snaps[-1])
            else:
                out.append(snaps[int(rng.integers(len(snaps) - 1))])
        return out

    def maybe_update(self, learner: Policy) -> bool:
        """Push a frozen copy of the learner if the win rate has reached the
        threshold; evict the oldest snapshot beyond capacity and reset the
        win-rate window.  Returns whether an update happened."""
        rate = self.current_winrate
        if rate is None or rate < self.win_threshold:
            return False
        snaps = self._snapshots + (learner,)
        created = self._created_at + (self._games_played,)
        if len(snaps) > self.capacity:
            snaps = snaps[len(snaps) - self.capacity:]
            created = created[len(created) - self.capacity:]
        self._snapshots = snaps
        self._created_at = created
        self._results.clear()
        return True

    def manifest(self) -> list[dict]:
        """Ordered snapshot listing for the pool manifest file."""
        return [
            {"version": p.version, "policy": p.name, "games": g}
            for p, g in zip(self._snapshots, self._created_at)
        ]


def experiment_grid() -> dict[str, dict]:
    """The scripted/SP/FSP variant grid used for evaluation tournaments."""
    grid: dict[str, dict] = {
        "Sα": {"kind": "scripted", "epsilon": 0.05},
        "Sβ": {"kind": "scripted", "epsilon": 0.25},
        "Sγ": {"kind": "scripted", "epsilon": 1.0},
        "SPα": {"kind": "pool", "capacity": 1, "win_threshold": 0.5},
        "SPβ": {"kind": "pool", "capacity": 1, "win_threshold": 0.8},
        "FSPα": {"kind": "pool", "capacity": 4, "win_threshold": 0.5},
        "FSPβ": {"kind": "pool", "capacity": 4, "win_threshold": 0.8},
        "FSPγ": {"kind": "pool", "capacity": 16, "win_threshold": 0.5},
        "FSPδ": {"kind": "pool", "capacity": 16, "win_threshold": 0.8},
    }
    return grid


def make_pool(label: str) -> OpponentPool:
    spec = experiment_grid()[label]
    if spec["kind"] != "pool":
        raise ValueError(f"{label} is not a pool variant")
    return OpponentPool(capacity=spec["capacity"], win_threshold=spec["win_threshold"])
