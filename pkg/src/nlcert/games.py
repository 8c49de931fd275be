"""Game data model and the concrete game families.

A game is stored dense: one axis per player's question set for the
distribution and sign data, plus one axis per player's answer set for
predicate games. Axes follow the declared label order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

DIST_TOL = 1e-12


class GameError(ValueError):
    """Invalid game parameters or data."""


class UnsupportedGame(GameError):
    """Operation not defined for this kind of game."""


def pair_label(*idx) -> str:
    return ":".join(str(i) for i in idx)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _is_rational_array(a: np.ndarray) -> bool:
    return a.dtype == object


def as_distribution(values, shape) -> np.ndarray:
    """Coerce a nested sequence into a dense distribution array.

    Fractions and ints keep exact arithmetic (object dtype); any float
    entry switches the whole table to float64.
    """
    flat = list(np.asarray(values, dtype=object).reshape(-1))
    if len(flat) != math.prod(shape):
        raise GameError(f"distribution has {len(flat)} cells, expected {math.prod(shape)}")
    if all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in flat):
        arr = np.empty(len(flat), dtype=object)
        arr[:] = [Fraction(v) for v in flat]
        return arr.reshape(shape)
    return np.asarray([float(v) for v in flat], dtype=np.float64).reshape(shape)


@dataclass(frozen=True, eq=False)
class GameSpec:
    """Referee description of a nonlocal game.

    ``signs`` is set for XOR-type games (entries +-1, answer +1 <-> bit 0).
    ``win`` is set for predicate games, shape ``questions + answers``.
    """

    question_sets: tuple
    distribution: np.ndarray
    signs: np.ndarray | None = None
    answer_sets: tuple | None = None
    win: np.ndarray | None = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        qs = tuple(tuple(str(x) for x in q) for q in self.question_sets)
        object.__setattr__(self, "question_sets", qs)
        object.__setattr__(self, "distribution", _frozen(self.distribution))
        if self.signs is not None:
            object.__setattr__(self, "signs", _frozen(np.asarray(self.signs, dtype=np.int8)))
        if self.answer_sets is not None:
            object.__setattr__(
                self, "answer_sets", tuple(tuple(str(x) for x in a) for a in self.answer_sets)
            )
        if self.win is not None:
            object.__setattr__(self, "win", _frozen(np.asarray(self.win, dtype=bool)))
        self.validate()

    @property
    def players(self) -> int:
        return len(self.question_sets)

    @property
    def shape(self) -> tuple:
        return tuple(len(q) for q in self.question_sets)

    @property
    def is_xor(self) -> bool:
        return self.signs is not None

    @property
    def is_rational(self) -> bool:
        return _is_rational_array(self.distribution)

    def answers(self) -> tuple:
        if self.is_xor:
            return tuple(("0", "1") for _ in range(self.players))
        return self.answer_sets

    def validate(self) -> None:
        if self.players < 1:
            raise GameError("a game needs at least one player")
        for q in self.question_sets:
            if not q or len(set(q)) != len(q):
                raise GameError("question sets must be non-empty with distinct labels")
        d = self.distribution
        if d.shape != self.shape:
            raise GameError(f"distribution shape {d.shape} != question shape {self.shape}")
        if self.is_rational:
            if any(v < 0 for v in d.reshape(-1)):
                raise GameError("negative probability")
            if sum(d.reshape(-1), Fraction(0)) != 1:
                raise GameError("distribution does not sum to 1")
        else:
            if not np.all(np.isfinite(d)) or np.any(d < 0):
                raise GameError("negative or non-finite probability")
            if abs(float(d.sum()) - 1.0) > DIST_TOL:
                raise GameError("distribution does not sum to 1")
        if (self.signs is None) == (self.win is None):
            raise GameError("exactly one of sign tensor or predicate table is required")
        if self.signs is not None:
            if self.signs.shape != self.shape:
                raise GameError(f"sign tensor shape {self.signs.shape} != {self.shape}")
            if not np.all(np.abs(self.signs) == 1):
                raise GameError("sign tensor entries must be exactly +1 or -1")
        else:
            if self.answer_sets is None or len(self.answer_sets) != self.players:
                raise GameError("predicate games need one answer set per player")
            want = self.shape + tuple(len(a) for a in self.answer_sets)
            if self.win.shape != want:
                raise GameError(f"predicate table shape {self.win.shape} != {want}")

    def prob_float(self) -> np.ndarray:
        return np.asarray(self.distribution, dtype=np.float64)

    def __eq__(self, other):
        if not isinstance(other, GameSpec):
            return NotImplemented
        if self.question_sets != other.question_sets or self.answer_sets != other.answer_sets:
            return False
        if self.is_rational != other.is_rational:
            return False
        if not np.array_equal(self.distribution, other.distribution):
            return False
        for a, b in ((self.signs, other.signs), (self.win, other.win)):
            if (a is None) != (b is None) or (a is not None and not np.array_equal(a, b)):
                return False
        return True

    __hash__ = None


@dataclass(frozen=True)
class GameTensor:
    entries: np.ndarray
    normalization: float


@dataclass(frozen=True)
class SymmetrizedMatrix:
    matrix: np.ndarray
    rows: int
    cols: int


def _uniform(shape, support) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    arr[...] = Fraction(0)
    p = Fraction(1, len(support))
    for idx in support:
        arr[idx] = p
    return arr


def build_chsh(n: int) -> GameSpec:
    """CHSH(n): Alice gets i, Bob an ordered pair (i, j) with i != j."""
    if not isinstance(n, int) or n < 2:
        raise GameError(f"CHSH needs n >= 2, got {n!r}")
    alice = [str(i) for i in range(1, n + 1)]
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    bob = [pair_label(i, j) for i, j in pairs]
    bidx = {p: k for k, p in enumerate(pairs)}
    # each unordered pair contributes four cells of weight 1/(4 C(n,2))
    support, signs = [], np.ones((n, len(pairs)), dtype=np.int8)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            for a, b, s in ((i, (i, j), 1), (j, (i, j), 1), (i, (j, i), 1), (j, (j, i), -1)):
                cell = (a - 1, bidx[b])
                support.append(cell)
                signs[cell] = s
    dist = _uniform((n, len(pairs)), support)
    return GameSpec((alice, bob), dist, signs=signs, name=f"chsh{n}", meta={"family": "chsh", "n": n})


def build_odd_cycle(n: int) -> GameSpec:
    if not isinstance(n, int) or n < 3 or n % 2 == 0:
        raise GameError(f"odd-cycle needs odd n >= 3, got {n!r}")
    labels = [str(i) for i in range(n)]
    support = [(s, s) for s in range(n)] + [(s, (s + 1) % n) for s in range(n)]
    dist = _uniform((n, n), support)
    win = np.zeros((n, n, 2, 2), dtype=bool)
    for s, t in support:
        for a in range(2):
            for b in range(2):
                win[s, t, a, b] = (a ^ b) == (0 if s == t else 1)
    return GameSpec(
        (labels, labels), dist, answer_sets=(("0", "1"), ("0", "1")), win=win,
        name=f"oddcycle{n}", meta={"family": "odd_cycle", "n": n},
    )


def build_ffl() -> GameSpec:
    support = [(0, 0), (0, 1), (1, 0)]
    dist = _uniform((2, 2), support)
    win = np.zeros((2, 2, 2, 2), dtype=bool)
    for s, t, a, b in itertools.product(range(2), repeat=4):
        win[s, t, a, b] = (a | s) != (b | t)
    return GameSpec(
        (("0", "1"), ("0", "1")), dist, answer_sets=(("0", "1"), ("0", "1")), win=win,
        name="ffl", meta={"family": "ffl"},
    )


def build_xor_game(question_sets: Sequence[Sequence], sign_tensor, distribution, name: str = "") -> GameSpec:
    qs = tuple(tuple(str(x) for x in q) for q in question_sets)
    shape = tuple(len(q) for q in qs)
    raw = np.asarray(sign_tensor, dtype=object)
    if raw.shape != shape:
        raise GameError(f"sign tensor shape {raw.shape} != question shape {shape}")
    for v in raw.reshape(-1):
        if v not in (1, -1) or isinstance(v, bool):
            raise GameError(f"sign tensor entry {v!r} is not +-1")
    dist = as_distribution(distribution, shape)
    return GameSpec(qs, dist, signs=raw.astype(np.int8), name=name)


def build_predicate_game(question_sets, answer_sets, win, distribution, name: str = "") -> GameSpec:
    qs = tuple(tuple(str(x) for x in q) for q in question_sets)
    dist = as_distribution(distribution, tuple(len(q) for q in qs))
    return GameSpec(qs, dist, answer_sets=answer_sets, win=np.asarray(win, dtype=bool), name=name)


def game_tensor(game: GameSpec) -> GameTensor:
    if not game.is_xor:
        raise UnsupportedGame("predicate games have no sign tensor")
    g = game.prob_float() * game.signs
    return GameTensor(_frozen(g), float(np.abs(g).sum()))


def symmetrize(t: GameTensor | np.ndarray) -> SymmetrizedMatrix:
    g = t.entries if isinstance(t, GameTensor) else np.asarray(t, dtype=float)
    if g.ndim != 2:
        raise UnsupportedGame("block symmetrization needs a bipartite tensor")
    s, tt = g.shape
    m = np.zeros((s + tt, s + tt))
    # row block = player-1 questions, column block = player-2 questions
    m[:s, s:] = 0.5 * g
    m[s:, :s] = 0.5 * g.T
    return SymmetrizedMatrix(_frozen(m), s, tt)


def flatten_bipartite(g: np.ndarray) -> np.ndarray:
    """Player-1 index against the multi-index of all other players."""
    g = np.asarray(g, dtype=float)
    return g.reshape(g.shape[0], -1)


_TORPEDO = {
    "torpedo_classical": {2: 0.75, 3: 11 / 12},
    "torpedo_quantum": {2: 0.79, 3: 1.0},
    "torpedo_ratio": {2: 1.053, 3: 1.091},
}


def reference_bounds(kind: str, d: int = 2) -> float:
    if kind == "chsh_d_upper":
        if d < 2:
            raise GameError("chsh_d_upper needs d >= 2")
        return 1.0 / d + (d - 1) / (d * math.sqrt(d))
    if kind in _TORPEDO:
        try:
            return _TORPEDO[kind][d]
        except KeyError:
            raise GameError(f"{kind} is tabulated only for d in (2, 3)") from None
    raise GameError(f"unknown reference kind {kind!r}")
