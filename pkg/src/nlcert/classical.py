"""Exact classical values by enumeration of deterministic strategies.

Every player's strategy is a table question -> answer. The default route
enumerates the tables of all players but the last, which then answers
each of its questions optimally (exact, and the search space shrinks by
the last player's whole table count). ``exhaustive=True`` enumerates every
joint table and serves as the audit route.

Tie-break: the strategy encoding is the concatenation of the per-player
tables (player 1 first, questions in declared order); the lexicographically
smallest optimal encoding is reported.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .games import GameSpec

DEFAULT_BUDGET = 2 ** 30
TIE_TOL = 1e-12
_CHUNK = 1 << 14


class BudgetExceeded(RuntimeError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"strategy count {required} exceeds budget {budget}")
        self.required = required
        self.budget = budget


@dataclass(frozen=True)
class ClassicalResult:
    value: object
    mode: str
    argmax_strategy: tuple
    tie_count: int
    strategies: int
    winprob: object
    bias: object
    exhaustive: bool

    def as_dict(self) -> dict:
        return {
            "value": _num(self.value),
            "mode": self.mode,
            "winprob": _num(self.winprob),
            "bias": _num(self.bias),
            "argmax_strategy": [dict(t) for t in self.argmax_strategy],
            "tie_count": self.tie_count,
            "strategies": self.strategies,
            "exhaustive": self.exhaustive,
        }


def _num(v):
    return str(v) if isinstance(v, Fraction) else float(v)


def win_table(game: GameSpec) -> np.ndarray:
    """Boolean win table, shape questions + answers."""
    if not game.is_xor:
        return np.asarray(game.win, dtype=bool)
    n = game.players
    parity = np.indices((2,) * n).sum(axis=0) % 2  # answer bits
    want = (1 - game.signs) // 2  # sign -1 <-> odd parity
    return want.reshape(game.shape + (1,) * n) == parity.reshape((1,) * n + (2,) * n)


def strategy_count(game: GameSpec) -> int:
    return math.prod(len(a) ** len(q) for q, a in zip(game.question_sets, game.answers()))


def _layout(game: GameSpec, weights: np.ndarray, exhaustive: bool):
    n = game.players
    qsz = game.shape
    asz = tuple(len(a) for a in game.answers())
    outer = list(range(n)) if exhaustive else list(range(n - 1))
    if exhaustive:
        w = weights.reshape(math.prod(qsz), 1, 1, math.prod(asz))
    else:
        perm = list(range(n - 1)) + [n - 1, 2 * n - 1] + [n + p for p in range(n - 1)]
        w = weights.transpose(perm).reshape(
            math.prod(qsz[:-1]), qsz[-1], asz[-1], math.prod(asz[:-1])
        )
    offsets, radix = [], []
    for p in outer:
        offsets.append(len(radix))
        radix.extend([asz[p]] * qsz[p])
    rdig = np.zeros((w.shape[0], len(outer)), dtype=np.int64)
    for r, qt in enumerate(np.ndindex(*[qsz[p] for p in outer])):
        for k, p in enumerate(outer):
            rdig[r, k] = offsets[k] + qt[k]
    astride = np.ones(len(outer), dtype=np.int64)
    for k in range(len(outer) - 2, -1, -1):
        astride[k] = astride[k + 1] * asz[outer[k + 1]]
    return np.ascontiguousarray(w, dtype=np.float64), rdig, astride, np.asarray(radix, dtype=np.int64), outer


def _merge(parts, tol):
    best, code, ties = -math.inf, -1, 0
    for b, c, t in parts:
        if b > best + tol:
            best, code, ties = b, c, t
        elif b >= best - tol:
            ties += t
            best = max(best, b)
    return best, code, ties


def _scan(w, rdig, astride, radix, total, threads):
    ranges = [(lo, min(total, lo + _CHUNK)) for lo in range(0, total, _CHUNK)]
    run = lambda rg: kernels.best_response_scan(w, rdig, astride, radix, rg[0], rg[1], TIE_TOL)
    workers = min(threads, len(ranges))
    if workers <= 1:
        parts = [run(rg) for rg in ranges]
    else:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, ranges))
    return _merge(parts, TIE_TOL)


def classical_value(
    game: GameSpec,
    mode: str = "winprob",
    budget: int = DEFAULT_BUDGET,
    exhaustive: bool = False,
    threads: int | None = None,
) -> ClassicalResult:
    if mode not in ("winprob", "bias"):
        raise ValueError(f"mode must be winprob or bias, got {mode!r}")
    total = strategy_count(game)
    if total > budget:
        raise BudgetExceeded(total, budget)
    wins = win_table(game)
    n = game.players
    prob = game.prob_float().reshape(game.shape + (1,) * n)
    weights = prob * wins
    w, rdig, astride, radix, outer = _layout(game, weights, exhaustive)
    outer_total = int(np.prod(radix.astype(object))) if len(radix) else 1
    threads = threads or kernels.thread_cap()
    _, code, ties = _scan(w, rdig, astride, radix, outer_total, threads)

    answers = game.answers()
    digits = []
    c = code
    for rad in reversed(radix.tolist()):
        digits.append(c % rad)
        c //= rad
    digits.reverse()
    tables = [[0] * len(q) for q in game.question_sets]
    pos = 0
    for p in outer:
        for x in range(len(game.question_sets[p])):
            tables[p][x] = digits[pos]
            pos += 1
    if not exhaustive:
        last = n - 1
        dig = np.asarray(digits, dtype=np.int64)
        if len(outer):
            ao = (dig[rdig] * astride[None, :]).sum(axis=1)
        else:
            ao = np.zeros(w.shape[0], dtype=np.int64)
        rows = np.arange(w.shape[0])
        for q in range(w.shape[1]):
            s = w[rows, q, :, ao].sum(axis=0)
            tables[last][q] = int(np.nonzero(s >= s.max() - TIE_TOL)[0][0])

    winprob = _exact_value(game, wins, tables)
    bias = 2 * winprob - 1
    argmax = tuple(
        tuple((game.question_sets[p][x], answers[p][a]) for x, a in enumerate(tables[p]))
        for p in range(n)
    )
    return ClassicalResult(
        bias if mode == "bias" else winprob, mode, argmax, int(ties), total, winprob, bias, exhaustive
    )


def _exact_value(game: GameSpec, wins: np.ndarray, tables) -> object:
    dist = game.distribution
    acc = Fraction(0) if game.is_rational else []
    for idx in np.ndindex(*game.shape):
        p = dist[idx]
        if p == 0:
            continue
        a = tuple(tables[k][idx[k]] for k in range(game.players))
        if wins[idx + a]:
            if game.is_rational:
                acc += p
            else:
                acc.append(float(p))
    return acc if game.is_rational else math.fsum(acc)


def classical_value_repeated(game: GameSpec, k: int, mode: str = "winprob", **kw) -> ClassicalResult:
    """Value of the k-fold repetition where every copy must be won.

    Strategies map question k-tuples to answer k-tuples, so correlations
    across copies are available to each player.
    """
    from .repetition import repeat_game

    return classical_value(repeat_game(game, k, "and_win"), mode=mode, **kw)
