"""Quantum strategies: states, +-1 observables, evaluation and state analysis."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Mapping, Sequence

import numpy as np

from .games import GameSpec, pair_label

log = logging.getLogger(__name__)

OBS_TOL = 1e-9
NORM_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": SX, "Z": SZ, "ZX": SZ @ SX}


class StrategyError(ValueError):
    pass


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def apply_local(state: np.ndarray, dims: Sequence[int], player: int, op: np.ndarray) -> np.ndarray:
    """Apply ``op`` to one tensor factor of ``state`` (identity elsewhere)."""
    t = state.reshape(dims)
    t = np.tensordot(op, t, axes=([1], [player]))
    return np.moveaxis(t, 0, player).reshape(-1)


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    """Shared pure state plus per-player +-1 observables keyed by question label.

    ``factors`` optionally records, for repeated strategies, the per-copy
    observables whose tensor product gives each entry of ``observables``.
    """

    local_dims: tuple
    state: np.ndarray
    observables: tuple
    factors: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.local_dims)
        object.__setattr__(self, "local_dims", dims)
        psi = np.asarray(self.state, dtype=complex).reshape(-1)
        psi.setflags(write=False)
        object.__setattr__(self, "state", psi)
        obs = []
        for p, table in enumerate(self.observables):
            fixed = {}
            for q, m in dict(table).items():
                m = np.asarray(m, dtype=complex)
                m.setflags(write=False)
                fixed[str(q)] = m
            obs.append(fixed)
        object.__setattr__(self, "observables", tuple(obs))
        self.validate()

    @property
    def players(self) -> int:
        return len(self.local_dims)

    def validate(self) -> None:
        if len(self.observables) != self.players:
            raise StrategyError("one observable table per player is required")
        if self.state.size != math.prod(self.local_dims):
            raise StrategyError(f"state length {self.state.size} != prod(dims) {math.prod(self.local_dims)}")
        if abs(np.linalg.norm(self.state) - 1.0) > NORM_TOL:
            raise StrategyError("state is not normalised")
        for p, table in enumerate(self.observables):
            d = self.local_dims[p]
            for q, m in table.items():
                if m.shape != (d, d):
                    raise StrategyError(f"observable {p}/{q} has shape {m.shape}, expected {(d, d)}")
                check_observable(m, f"player {p} question {q}")

    def obs(self, player: int, label: str) -> np.ndarray:
        try:
            return self.observables[player][label]
        except KeyError:
            raise StrategyError(f"missing observable for player {player} question {label!r}") from None

    def local(self, player: int, op: np.ndarray) -> np.ndarray:
        return apply_local(self.state, self.local_dims, player, op)

    def apply(self, ops: Mapping[int, np.ndarray], vec: np.ndarray | None = None) -> np.ndarray:
        v = self.state if vec is None else vec
        for p in sorted(ops):
            v = apply_local(v, self.local_dims, p, ops[p])
        return v


def check_observable(m: np.ndarray, what: str = "observable", tol: float = OBS_TOL) -> None:
    if np.linalg.norm(m - m.conj().T) > tol:
        raise StrategyError(f"{what} is not Hermitian")
    if np.linalg.norm(m @ m - np.eye(m.shape[0])) > tol:
        raise StrategyError(f"{what} does not square to the identity")


def hermitize(m: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Symmetrise at load time; the deviation is logged, not silently dropped."""
    m = np.asarray(m, dtype=complex)
    h = (m + m.conj().T) / 2
    dev = float(np.linalg.norm(m - h))
    if dev == 0:
        return m  # keeps signed zeros, so JSON round-trips stay bit-exact
    log.info("hermitized %s, deviation %.3e", what, dev)
    return h


def make_strategy(dims, state, observables, factors=None, meta=None, hermitian_fix=True) -> QuantumStrategy:
    if hermitian_fix:
        observables = [
            {q: hermitize(m, f"player {p} question {q}") for q, m in dict(t).items()}
            for p, t in enumerate(observables)
        ]
    return QuantumStrategy(tuple(dims), state, tuple(observables), factors, dict(meta or {}))


# -- states ---------------------------------------------------------------

def phi_plus(d: int = 2) -> np.ndarray:
    return np.eye(d, dtype=complex).reshape(-1) / math.sqrt(d)


def bell_chsh2(which: int) -> np.ndarray:
    ops = {0: I2, 1: SX, 2: SZ, 3: SX @ SZ}
    if which not in ops:
        raise StrategyError(f"Bell selector must be 0..3, got {which!r}")
    return np.kron(ops[which], I2) @ phi_plus(2)


def anticommuting_family(n: int) -> list[np.ndarray]:
    """``n`` pairwise anticommuting +-1 observables on 2**(n//2) dimensions.

    Order: Z..Z, then Jordan-Wigner strings Z..Z X I..I and Z..Z Y I..I.
    """
    m = n // 2
    if m == 0:
        return [SZ.copy()][:n]
    fam = [kron_all([SZ] * m)]
    for k in range(m):
        for p in (SX, SY):
            fam.append(kron_all([SZ] * k + [p] + [I2] * (m - k - 1)))
    return fam[:n]


def derived_b_observables(a_j: np.ndarray, a_k: np.ndarray, tol: float = OBS_TOL):
    """Bob observables ((A_j + A_k)/sqrt2)^T and ((A_j - A_k)/sqrt2)^T.

    Returns ``(B_jk, B_kj, flags)``; a flag is True when that output does
    not square to the identity (inputs fail to anticommute).
    """
    a_j = np.asarray(a_j, dtype=complex)
    a_k = np.asarray(a_k, dtype=complex)
    if a_j.shape != a_k.shape:
        raise StrategyError("observables must have equal dimension")
    eye = np.eye(a_j.shape[0])
    b_jk = ((a_j + a_k) / math.sqrt(2)).T
    b_kj = ((a_j - a_k) / math.sqrt(2)).T
    flags = tuple(bool(np.linalg.norm(b @ b - eye) > tol) for b in (b_jk, b_kj))
    return b_jk, b_kj, flags


def optimal_chsh_strategy(n: int) -> QuantumStrategy:
    if n < 2:
        raise StrategyError("n >= 2 required")
    fam = anticommuting_family(n)
    d = fam[0].shape[0]
    alice = {str(i + 1): fam[i] for i in range(n)}
    bob = {}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            b_ij, b_ji, _ = derived_b_observables(fam[i - 1], fam[j - 1])
            bob[pair_label(i, j)] = b_ij
            bob[pair_label(j, i)] = b_ji
    return QuantumStrategy((d, d), phi_plus(d), (alice, bob), meta={"family": "chsh", "n": n})


# -- evaluation -----------------------------------------------------------

def _correlators(strategy: QuantumStrategy, game: GameSpec, weights: np.ndarray):
    """<psi| (x)_p O_p[q_p] |psi> for every question tuple with nonzero weight."""
    if game.players != strategy.players:
        raise StrategyError("player count mismatch")
    qs = game.question_sets
    psi = strategy.state
    dims = strategy.local_dims
    cells = [idx for idx in np.ndindex(*game.shape) if weights[idx] != 0]
    if strategy.players == 2:
        left, right = {}, {}
        out = []
        for s, t in cells:
            if s not in left:
                left[s] = apply_local(psi, dims, 0, strategy.obs(0, qs[0][s]))
            if t not in right:
                right[t] = apply_local(psi, dims, 1, strategy.obs(1, qs[1][t]))
            out.append(np.vdot(left[s], right[t]))
        return cells, np.asarray(out, dtype=complex)
    cache = {(): psi}
    out = []
    for idx in cells:
        for k in range(1, len(idx) + 1):
            key = idx[:k]
            if key not in cache:
                p = k - 1
                cache[key] = apply_local(cache[idx[: k - 1]], dims, p, strategy.obs(p, qs[p][idx[p]]))
        out.append(np.vdot(psi, cache[idx]))
    return cells, np.asarray(out, dtype=complex)


def eval_bias(strategy: QuantumStrategy, game: GameSpec) -> float:
    if not game.is_xor:
        raise StrategyError("bias is defined for XOR-type games; use eval_win_prob")
    g = game.prob_float() * game.signs
    cells, corr = _correlators(strategy, game, g)
    if not cells:
        return 0.0
    terms = np.asarray([g[c] for c in cells]) * corr
    total = terms.sum()
    if abs(total.imag) > 1e-10:
        raise StrategyError(f"imaginary residue {total.imag:.3e} in bias contraction")
    return float(total.real)


def _projectors(strategy: QuantumStrategy, player: int, label: str, answers: Sequence[str]):
    fac = strategy.factors[player].get(label) if strategy.factors else None
    if fac is not None and all("/" in a for a in answers):
        out = []
        for a in answers:
            bits = a.split("/")
            if len(bits) != len(fac):
                raise StrategyError(f"answer {a!r} does not match {len(fac)} copies")
            out.append(kron_all([_binary_proj(m, b) for m, b in zip(fac, bits)]))
        return out
    if len(answers) != 2:
        raise StrategyError("a +-1 observable only resolves binary answer sets")
    o = strategy.obs(player, label)
    return [_binary_proj(o, "0"), _binary_proj(o, "1")]


def _binary_proj(o: np.ndarray, bit: str) -> np.ndarray:
    eye = np.eye(o.shape[0])
    return (eye + o) / 2 if bit == "0" else (eye - o) / 2


def eval_win_prob(strategy: QuantumStrategy, game: GameSpec) -> float:
    if game.is_xor:
        return (eval_bias(strategy, game) + 1) / 2
    if game.players != strategy.players:
        raise StrategyError("player count mismatch")
    p = game.prob_float()
    answers = game.answer_sets
    dims = strategy.local_dims
    psi = strategy.state
    proj_cache: dict = {}
    terms = []
    for idx in np.ndindex(*game.shape):
        if p[idx] == 0:
            continue
        projs = []
        for pl in range(game.players):
            key = (pl, idx[pl])
            if key not in proj_cache:
                proj_cache[key] = _projectors(strategy, pl, game.question_sets[pl][idx[pl]], answers[pl])
            projs.append(proj_cache[key])
        win = game.win[idx]
        for a in zip(*np.nonzero(win)):
            v = psi
            for pl, ai in enumerate(a):
                v = apply_local(v, dims, pl, projs[pl][ai])
            terms.append(p[idx] * np.vdot(psi, v).real)
    return float(np.sum(terms)) if terms else 0.0


# -- vectorisation and Schmidt analysis -----------------------------------

def vectorize(state: np.ndarray, split: tuple) -> np.ndarray:
    """Matrix M with M[i, j] = amplitude of |i>|j>."""
    d_a, d_b = split
    state = np.asarray(state)
    if d_a * d_b != state.size:
        raise StrategyError(f"split {split} does not match state length {state.size}")
    return state.reshape(d_a, d_b)


@dataclass(frozen=True)
class SchmidtReport:
    coefficients: np.ndarray
    block_size: int
    within_block_spread: float
    block_spreads: tuple
    partial_block: bool


def schmidt_blocks(state: np.ndarray, split: tuple, block_size: int) -> SchmidtReport:
    if block_size < 1:
        raise StrategyError("block size must be positive")
    s = np.linalg.svd(vectorize(state, split), compute_uv=False)
    spreads = []
    for k in range(0, len(s), block_size):
        blk = s[k : k + block_size]
        spreads.append(float(blk.max() - blk.min()))
    return SchmidtReport(
        s, block_size, max(spreads) if spreads else 0.0, tuple(spreads), len(s) % block_size != 0
    )


def nplayer_bell(word: Sequence[str], n_players: int):
    """Apply a Pauli word to the one-excitation superposition on N qubits.

    Returns ``(vector, annotations)``; each annotation records the excited
    position, the sign picked up from Z factors and the X-flipped positions.
    """
    word = [w.upper() for w in word]
    if len(word) != n_players or any(w not in PAULI for w in word):
        raise StrategyError(f"bad Pauli word {word!r} for {n_players} players")
    dim = 2 ** n_players
    vec = np.zeros(dim, dtype=complex)
    notes = []
    amp = 1 / math.sqrt(n_players)
    for j in range(n_players):
        bits = [1 if p == j else 0 for p in range(n_players)]
        sign = 1
        flipped = []
        for p, w in enumerate(word):
            # Z.X acts as X first, then Z
            if "X" in w:
                bits[p] ^= 1
                flipped.append(p)
            if "Z" in w and bits[p]:
                sign = -sign
        index = int("".join(map(str, bits)), 2)
        vec[index] += sign * amp
        notes.append({"term": j, "sign": sign, "flipped": flipped, "basis": "".join(map(str, bits))})
    return vec, notes


def pad_identity_player(strategy: QuantumStrategy, labels: Sequence[str]) -> QuantumStrategy:
    """Append a one-dimensional player whose observable is +1 on every label."""
    one = np.ones((1, 1), dtype=complex)
    obs = tuple(strategy.observables) + ({q: one for q in labels},)
    meta = dict(strategy.meta)
    meta["padded"] = meta.get("padded", 0) + 1
    return QuantumStrategy(tuple(strategy.local_dims) + (1,), strategy.state, obs, meta=meta)
