"""Shared environment contract.

Every game exposes the same surface: ``new_game`` builds an initial state
from an :class:`EnvConfig`, ``step`` advances a state with a joint action
mapping (single-entry for sequential games), ``observe`` produces the
per-player view, and ``rankings`` reads the final ordering off a terminal
state.  States are immutable values; ``step`` returns a fresh state, so any
state may be shared across threads freely.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

PlayerId = int


class GameError(Exception):
    """Base class for rule and contract violations."""


class ConfigError(GameError):
    """Invalid environment configuration."""


class IllegalMoveError(GameError):
    """An action violating the rules; carries the offending player."""

    def __init__(self, player: PlayerId, message: str):
        super().__init__(f"player {player}: {message}")
        self.player = player


class StateError(GameError):
    """Operation applied to a state in the wrong phase (e.g. terminal)."""


@dataclass(frozen=True)
class EnvConfig:
    """Everything needed to create one match, including its seed."""

    env_name: str
    player_count: int
    rng_seed: int = 0
    params: Mapping[str, Any] = field(default_factory=dict)

    def param(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)

    def to_json(self) -> dict:
        return {
            "schema": "env-config",
            "v": 1,
            "env_name": self.env_name,
            "player_count": self.player_count,
            "rng_seed": self.rng_seed,
            "params": dict(self.params),
        }

    @staticmethod
    def from_json(obj: Mapping[str, Any]) -> "EnvConfig":
        return EnvConfig(
            env_name=obj["env_name"],
            player_count=int(obj["player_count"]),
            rng_seed=int(obj.get("rng_seed", 0)),
            params=dict(obj.get("params", {})),
        )


@dataclass(frozen=True)
class StepResult:
    next_state: Any
    rewards: dict[PlayerId, float]
    terminal: bool
    eliminated: frozenset[PlayerId]


@dataclass(frozen=True)
class RankRecord:
    """Final ranks (1 = best, ties rounded to the worst spanned position)
    and cumulative reward for one finished match."""

    ranks: dict[PlayerId, int]
    total_reward: dict[PlayerId, float]


def tie_rounded_ranks(blocks: Sequence[Iterable[PlayerId]]) -> dict[PlayerId, int]:
    """Assign ranks to an ordered partition of players (best block first).

    Every member of a tie block receives the worst position the block spans,
    i.e. the cumulative player count through that block.
    """
    if not blocks:
        raise ValueError("empty partition")
    ranks: dict[PlayerId, int] = {}
    seen = 0
    for block in blocks:
        members = list(block)
        if not members:
            raise ValueError("empty tie block")
        seen += len(members)
        for p in members:
            if p in ranks:
                raise ValueError(f"player {p} appears in two blocks")
            ranks[p] = seen
    return ranks


class Environment(ABC):
    """Stateless rules engine for one environment family.

    Instances are parameterized by a validated :class:`EnvConfig`; all match
    state lives in the immutable state values the methods exchange.
    """

    name: str = ""

    def __init__(self, config: EnvConfig):
        if config.player_count < 1:
            raise ConfigError("player_count must be >= 1")
        self.config = config
        self.n_players = config.player_count

    # -- rules surface -----------------------------------------------------

    @abstractmethod
    def new_game(self) -> Any:
        """Initial state; deterministic given the config's rng_seed."""

    @abstractmethod
    def current_players(self, state: Any) -> frozenset[PlayerId]:
        """Players that must act now; singleton for sequential games."""

    @abstractmethod
    def legal_actions(self, state: Any, p: PlayerId) -> list[Any]:
        """Nonempty, deterministically ordered actions for an acting player."""

    @abstractmethod
    def step(self, state: Any, actions: Mapping[PlayerId, Any]) -> StepResult:
        """Advance with a joint action mapping keyed exactly by
        current_players(state)."""

    @abstractmethod
    def observe(self, state: Any, p: PlayerId) -> Any:
        """Player p's view of the state; never mutates the state."""

    @abstractmethod
    def rankings(self, state: Any) -> RankRecord:
        """Final ranks of a terminal state, obeying tie rounding."""

    # -- serialization -----------------------------------------------------

    @abstractmethod
    def state_to_json(self, state: Any) -> dict:
        """Versioned, schema-tagged encoding (the wire/replay encoding)."""

    @abstractmethod
    def state_from_json(self, obj: Mapping[str, Any]) -> Any:
        ...

    def encode_action(self, action: Any) -> Any:
        """JSON-compatible encoding of one action (default: identity)."""
        return action

    def decode_action(self, obj: Any) -> Any:
        return obj

    # -- shared helpers ----------------------------------------------------

    def _require_player(self, p: PlayerId) -> None:
        if not 0 <= p < self.n_players:
            raise GameError(f"player {p} out of range [0, {self.n_players})")

    def _check_actors(self, state: Any, actions: Mapping[PlayerId, Any]) -> None:
        expected = self.current_players(state)
        got = frozenset(actions)
        if got != expected:
            raise IllegalMoveError(
                next(iter(got - expected), next(iter(expected - got), -1)),
                f"actions keyed by {sorted(got)}, expected {sorted(expected)}",
            )


_REGISTRY: dict[str, type] = {}


def register(cls: type) -> type:
    """Class decorator adding an Environment subclass to the registry."""
    _REGISTRY[cls.name] = cls
    return cls


def env_names() -> list[str]:
    return sorted(_REGISTRY)


def make_env(config: EnvConfig) -> Environment:
    import colosseum.envs  # noqa: F401  (populates the registry)

    try:
        cls = _REGISTRY[config.env_name]
    except KeyError:
        raise ConfigError(f"unknown environment {config.env_name!r}") from None
    return cls(config)


def new_game(config: EnvConfig) -> tuple[Environment, Any]:
    """Convenience: build the environment and its initial state."""
    env = make_env(config)
    return env, env.new_game()
