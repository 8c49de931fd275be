"""Nonlocal games: values, strategies and epsilon-optimality certificates."""

__version__ = "0.1.0"

from .games import (  # noqa: E402
    GameError,
    GameSpec,
    UnsupportedGame,
    build_chsh,
    build_ffl,
    build_odd_cycle,
    build_predicate_game,
    build_xor_game,
    game_tensor,
    symmetrize,
)
from .strategies import QuantumStrategy, eval_bias, eval_win_prob, optimal_chsh_strategy  # noqa: E402

__all__ = [
    "__version__",
    "GameError",
    "GameSpec",
    "UnsupportedGame",
    "QuantumStrategy",
    "build_chsh",
    "build_ffl",
    "build_odd_cycle",
    "build_predicate_game",
    "build_xor_game",
    "game_tensor",
    "symmetrize",
    "eval_bias",
    "eval_win_prob",
    "optimal_chsh_strategy",
]
