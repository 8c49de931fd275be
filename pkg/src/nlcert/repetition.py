"""Parallel repetition of games and strategies.

Two composition rules share the wedge notation and are kept apart here:

and_win       every copy must be won; a predicate game over answer tuples.
xor_combine   sign tensors multiply (Kronecker), distributions multiply;
              stays an XOR game and its bias is multiplicative for products.

Repeated labels join per-copy labels with "/". Local factors of the
repeated state are interleaved player-major, copy-minor: player p's space
is (copy 1 of p) (x) ... (x) (copy k of p).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .games import GameError, GameSpec, UnsupportedGame
from .strategies import QuantumStrategy, StrategyError, kron_all

RULES = ("and_win", "xor_combine")
DEFAULT_CELL_BUDGET = 1 << 24
SEP = "/"


def _join(labels) -> str:
    return SEP.join(labels)


def _prod_labels(labels, k):
    return tuple(_join(t) for t in itertools.product(labels, repeat=k))


def _prod_dist(game: GameSpec, k: int) -> np.ndarray:
    d = game.distribution
    out = d
    for _ in range(k - 1):
        out = np.multiply.outer(out, d)
    # axes are (copy1 players..., copy2 players...); regroup player-major
    n = game.players
    perm = [c * n + p for p in range(n) for c in range(k)]
    out = out.transpose(perm)
    return out.reshape(tuple(s ** k for s in game.shape))


def repeat_game(game: GameSpec, k: int, rule: str = "and_win", budget: int = DEFAULT_CELL_BUDGET) -> GameSpec:
    if rule not in RULES:
        raise GameError(f"rule must be one of {RULES}, got {rule!r}")
    if k < 1:
        raise GameError("k >= 1 required")
    if k == 1:
        return game
    n = game.players
    qs = tuple(_prod_labels(q, k) for q in game.question_sets)
    name = f"{game.name or 'game'}^{k}[{rule}]"
    meta = {"family": "repeat", "rule": rule, "copies": k, "base": game.name}
    if rule == "xor_combine":
        if not game.is_xor:
            raise UnsupportedGame("xor_combine needs an XOR-type game")
        cells = math.prod(s ** k for s in game.shape)
        if cells > budget:
            raise GameError(f"repeated game has {cells} cells, budget {budget}")
        signs = game.signs.astype(np.int64)
        out = signs
        for _ in range(k - 1):
            out = np.multiply.outer(out, signs)
        perm = [c * n + p for p in range(n) for c in range(k)]
        out = out.transpose(perm).reshape(tuple(s ** k for s in game.shape))
        return GameSpec(qs, _prod_dist(game, k), signs=out.astype(np.int8), name=name, meta=meta)

    from .classical import win_table

    answers = game.answers()
    asz = tuple(len(a) for a in answers)
    cells = math.prod(s ** k for s in game.shape) * math.prod(a ** k for a in asz)
    if cells > budget:
        raise GameError(f"repeated game has {cells} cells, budget {budget}")
    base = win_table(game)
    win = base
    for _ in range(k - 1):
        win = np.logical_and.outer(win, base)
    # axes: copy c contributes (q_1..q_n, a_1..a_n); regroup as
    # (q of p copy-minor for each p) then (a of p copy-minor for each p)
    perm = [c * 2 * n + p for p in range(n) for c in range(k)]
    perm += [c * 2 * n + n + p for p in range(n) for c in range(k)]
    win = win.transpose(perm).reshape(
        tuple(s ** k for s in game.shape) + tuple(a ** k for a in asz)
    )
    return GameSpec(
        qs,
        _prod_dist(game, k),
        answer_sets=tuple(_prod_labels(a, k) for a in answers),
        win=win,
        name=name,
        meta=meta,
    )


def repeat_strategy(strategy: QuantumStrategy, k: int, rule: str = "xor_combine", max_dim: int = 1 << 14) -> QuantumStrategy:
    """k copies of a strategy with each player's local factors grouped.

    The same tensor-product strategy serves both rules; ``rule`` is only
    recorded in the metadata so outputs can say which reading was used.
    """
    if rule not in RULES:
        raise StrategyError(f"rule must be one of {RULES}")
    if k == 1:
        return strategy
    dims = strategy.local_dims
    n = len(dims)
    total = math.prod(dims) ** k
    if total > max_dim:
        raise StrategyError(f"repeated state dimension {total} exceeds {max_dim}")
    psi = strategy.state
    out = psi
    for _ in range(k - 1):
        out = np.multiply.outer(out, psi)
    out = out.reshape(tuple(dims) * k)
    perm = [c * n + p for p in range(n) for c in range(k)]
    out = out.transpose(perm).reshape(-1)
    obs, factors = [], []
    for p in range(n):
        table, ftable = {}, {}
        labels = sorted(strategy.observables[p])
        for combo in itertools.product(labels, repeat=k):
            mats = [strategy.observables[p][q] for q in combo]
            table[_join(combo)] = kron_all(mats)
            ftable[_join(combo)] = tuple(mats)
        obs.append(table)
        factors.append(ftable)
    meta = dict(strategy.meta)
    meta.update({"copies": k, "rule": rule})
    return QuantumStrategy(tuple(d ** k for d in dims), out, tuple(obs), tuple(factors), meta)
