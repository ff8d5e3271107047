"""Environment implementations; importing this package fills the registry."""

from colosseum.envs import blokus, kuhn, matrix, tictactoe, tron  # noqa: F401
