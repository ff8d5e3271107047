"""n-player general-sum game environments, self-play opponent scheduling,
tournament evaluation, and a networked matchmaking server."""

from colosseum.core import (
    ConfigError,
    EnvConfig,
    Environment,
    GameError,
    IllegalMoveError,
    PlayerId,
    RankRecord,
    StateError,
    StepResult,
    env_names,
    make_env,
    new_game,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EnvConfig",
    "Environment",
    "GameError",
    "IllegalMoveError",
    "PlayerId",
    "RankRecord",
    "StateError",
    "StepResult",
    "env_names",
    "make_env",
    "new_game",
    "__version__",
]
