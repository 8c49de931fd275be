"""Epsilon-approximality certificates.

Each check evaluates one family of error-bound inequalities for a concrete
strategy and returns entries (bound_id, lhs, rhs, margin = rhs - lhs).
Bounds are reported, never asserted: a failing entry is a finding.

Question labels follow the game builders: player 1 asks "i", player 2 an
ordered pair "i:j", player p a p-tuple of distinct indices; repeated
strategies join per-copy labels with "/".

Pairing used throughout (k < l):
    A_k  <->  (B_kl + B_lk) / sqrt2,      A_l  <->  (B_kl - B_lk) / sqrt2
    B_kl <->  (A_k + A_l) / sqrt2,        B_lk <->  (A_k - A_l) / sqrt2
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .games import GameSpec, pair_label
from .strategies import QuantumStrategy, StrategyError, apply_local, eval_bias, vectorize

DEGENERATE_EIG = 1e-10
MARGIN_TOL = 1e-8
SQRT2 = math.sqrt(2.0)


class CertifyError(ValueError):
    pass


@dataclass(frozen=True)
class Entry:
    bound_id: str
    lhs: float
    rhs: float
    tol: float = MARGIN_TOL
    note: str = ""
    degenerate: int = 0

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tol

    def as_dict(self) -> dict:
        d = {
            "bound_id": self.bound_id,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "pass": self.passed,
        }
        if self.note:
            d["note"] = self.note
        if self.degenerate:
            d["degenerate"] = self.degenerate
        return d


@dataclass(frozen=True)
class EpsilonReport:
    epsilon: float
    entries: tuple
    strategy_bias: float
    optimal_bias: float
    family: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, bound_id: str) -> Entry:
        for e in self.entries:
            if e.bound_id == bound_id:
                return e
        raise KeyError(bound_id)

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "strategy_bias": self.strategy_bias,
            "optimal_bias": self.optimal_bias,
            "family": self.family,
            "all_pass": self.all_pass,
            "entries": [e.as_dict() for e in self.entries],
            **({"meta": self.meta} if self.meta else {}),
        }


def measure_epsilon(strategy: QuantumStrategy, game: GameSpec, optimal_bias: float) -> float:
    if not optimal_bias > 0:
        raise CertifyError("optimal bias must be positive")
    return max(0.0, 1.0 - eval_bias(strategy, game) / optimal_bias)


def sgn_op(y: np.ndarray):
    """y / |y| via eigendecomposition; None when an eigenvalue is ~0."""
    h = (y + y.conj().T) / 2
    w, v = np.linalg.eigh(h)
    if np.min(np.abs(w)) < DEGENERATE_EIG:
        return None
    return (v * np.sign(w)) @ v.conj().T


def falling(n: int, k: int) -> int:
    """n (n-1) ... (n-k+1)."""
    return math.prod(n - j for j in range(k))


def _sq(v: np.ndarray) -> float:
    return float(np.vdot(v, v).real)


def _norm(v: np.ndarray) -> float:
    return math.sqrt(_sq(v))


# -- two-player views ------------------------------------------------------

class View:
    """The CHSH-shaped part of a strategy: A_i on one slot, B_ij on another.

    Operators are full local matrices on their slot; ``psi`` and ``dims``
    describe the whole state.
    """

    def __init__(self, psi, dims, pa, pb, n, A, B, tag=""):
        self.psi, self.dims, self.pa, self.pb, self.n = psi, tuple(dims), pa, pb, n
        self.A, self.B, self.tag = A, B, tag
        self._cache = {}

    def a(self, op):
        return apply_local(self.psi, self.dims, self.pa, op)

    def b(self, op):
        return apply_local(self.psi, self.dims, self.pb, op)

    def ab(self, op_a, op_b):
        return apply_local(self.b(op_b), self.dims, self.pa, op_a)

    def bob_combo(self, k, l, sign):
        return (self.B[(k, l)] + sign * self.B[(l, k)]) / SQRT2

    def pairs(self):
        return [(k, l) for k in range(1, self.n + 1) for l in range(k + 1, self.n + 1)]


def _chsh_n(strategy: QuantumStrategy, player: int = 0) -> int:
    labels = strategy.observables[player]
    n = 0
    while str(n + 1) in labels:
        n += 1
    if n < 2:
        raise CertifyError("strategy is not CHSH-shaped (needs A_1, A_2, ...)")
    return n


def base_view(strategy: QuantumStrategy, pa: int = 0, pb: int = 1, n: int | None = None) -> View:
    n = n or _chsh_n(strategy, pa)
    try:
        A = {i: strategy.obs(pa, str(i)) for i in range(1, n + 1)}
        B = {
            (i, j): strategy.obs(pb, pair_label(i, j))
            for i in range(1, n + 1)
            for j in range(1, n + 1)
            if i != j
        }
    except StrategyError as e:
        raise CertifyError(str(e)) from None
    return View(strategy.state, strategy.local_dims, pa, pb, n, A, B)


def _base_tables(strategy: QuantumStrategy):
    k = strategy.meta.get("copies", 1)
    if not strategy.factors or k < 2:
        raise CertifyError("strategy carries no per-copy factors")
    out = []
    for p, table in enumerate(strategy.factors):
        per_copy = [dict() for _ in range(k)]
        for label, mats in table.items():
            for c, part in enumerate(label.split("/")):
                per_copy[c][part] = mats[c]
        out.append(per_copy)
    return k, out


def copy_views(strategy: QuantumStrategy) -> list:
    """One view per copy of a repeated two-player strategy, lifted to the full space."""
    k, base = _base_tables(strategy)
    views = []
    for c in range(k):
        lifted = []
        for p in range(strategy.players):
            d = round(strategy.local_dims[p] ** (1.0 / k))
            left, right = np.eye(d ** c), np.eye(d ** (k - c - 1))
            lifted.append({q: np.kron(np.kron(left, m), right) for q, m in base[p][c].items()})
        n = 0
        while str(n + 1) in lifted[0]:
            n += 1
        A = {i: lifted[0][str(i)] for i in range(1, n + 1)}
        B = {(i, j): lifted[1][pair_label(i, j)] for i in range(1, n + 1) for j in range(1, n + 1) if i != j}
        views.append(View(strategy.state, strategy.local_dims, 0, 1, n, A, B, tag=f"copy{c + 1}"))
    return views


# -- forward and reversed sums ----------------------------------------------------------

def bipartite_lhs(view: View) -> tuple[float, float]:
    """(forward, reversed) sums of squared deviations over all pairs."""
    fwd = rev = 0.0
    for k, l in view.pairs():
        ak, al = view.A[k], view.A[l]
        fwd += _sq(view.a((ak + al) / SQRT2) - view.b(view.B[(k, l)]))
        fwd += _sq(view.a((ak - al) / SQRT2) - view.b(view.B[(l, k)]))
        rev += _sq(view.a(ak) - view.b(view.bob_combo(k, l, +1)))
        rev += _sq(view.a(al) - view.b(view.bob_combo(k, l, -1)))
    return fwd, rev


def check_bipartite_bounds(strategy: QuantumStrategy, n: int | None, eps: float, view: View | None = None) -> list:
    view = view or base_view(strategy, n=n)
    n = view.n
    fwd, rev = bipartite_lhs(view)
    rhs = 2 * n * (n - 1) * eps
    return [
        Entry("sums.forward", fwd, rhs),
        Entry("sums.reversed", rev, rhs),
    ]


# -- anticommutator ----------------------------------------------------------

def anticommutator_lhs(view: View) -> float:
    tot = 0.0
    for k, l in view.pairs():
        ak, al = view.A[k], view.A[l]
        tot += _sq(view.a((ak @ al + al @ ak) / 2))
    return tot


def anticommutator_rhs(family: str, n: int, N: int, eps: float, c1: float = 1 / 50) -> float:
    if family == "ffl":
        return 2 * (7 / 3) ** 2 * n * (n - 1) * eps
    if family == "nxor":
        return c1 * n * falling(n - 1, N - 1) * eps
    raise CertifyError(f"unknown anticommutator family {family!r}")


def check_anticommutator(strategy, family: str, n: int | None, N: int, eps: float, c1: float = 1 / 50, view=None) -> list:
    view = view or base_view(strategy, n=n)
    lhs = anticommutator_lhs(view)
    return [Entry(f"anticomm.{family}", lhs, anticommutator_rhs(family, view.n, N, eps, c1))]


# -- sqrt(eps) bounds ----------------------------------------------------------

def sqrt_terms(view: View):
    """Per-pair deviations ||A psi - sgn(Y) psi||; None marks a degenerate Y."""
    out = {}
    for k, l in view.pairs():
        for sign, alice in ((+1, k), (-1, l)):
            s = sgn_op(view.bob_combo(k, l, sign))
            out[(k, l, sign)] = None if s is None else _norm(view.a(view.A[alice]) - view.b(s))
    return out


def check_sqrt_bounds(strategy: QuantumStrategy, eps: float, reps: int = 1, family: str = "ffl", n=None) -> list:
    if reps == 1:
        view = base_view(strategy, n=n)
        terms = sqrt_terms(view)
        good = [v for v in terms.values() if v is not None]
        degen = len(terms) - len(good)
        note = f"{degen} degenerate combination(s) skipped" if degen else ""
        return [Entry("sqrt.pair", max(good, default=0.0), 17 * math.sqrt(view.n * eps), note=note, degenerate=degen)]
    return _wedge_sqrt(strategy, eps, reps, family)


def _wedge_sqrt(strategy, eps, reps, family):
    views = copy_views(strategy)
    if len(views) != reps:
        raise CertifyError(f"strategy has {len(views)} copies, expected {reps}")
    n = views[0].n
    sgn = {}
    degen = 0
    for c, v in enumerate(views):
        for k, l in v.pairs():
            for sign in (+1, -1):
                s = sgn_op(v.bob_combo(k, l, sign))
                degen += s is None
                sgn[(c, k, l, sign)] = s
    joint = 0.0
    for combo in itertools.product(views[0].pairs(), repeat=reps):
        for signs in itertools.product((+1, -1), repeat=reps):
            a_op = b_op = None
            ok = True
            for c, ((k, l), sign) in enumerate(zip(combo, signs)):
                s = sgn[(c, k, l, sign)]
                if s is None:
                    ok = False
                    break
                a = views[c].A[k if sign > 0 else l]
                a_op = a if a_op is None else a_op @ a
                b_op = s if b_op is None else b_op @ s
            if ok:
                v0 = views[0]
                joint = max(joint, _norm(v0.a(a_op) - v0.b(b_op)))
    per_copy = []
    for c, v in enumerate(views):
        vals = [
            _norm(v.a(v.A[k if sign > 0 else l]) - v.b(sgn[(c, k, l, sign)]))
            for k, l in v.pairs()
            for sign in (+1, -1)
            if sgn[(c, k, l, sign)] is not None
        ]
        per_copy.append(max(vals, default=0.0))
    note = "per-copy normalised Bob combinations tensored across copies"
    main = ("sqrt.wedge_ffl", 20.0) if family == "ffl" else ("sqrt.wedge_xor", 18.0)
    return [
        Entry(main[0], joint, main[1] * math.sqrt(reps * eps), note=note, degenerate=degen),
        Entry("sqrt.copy_sum", float(sum(per_copy)), 20.0 * reps * math.sqrt(reps * eps), note="sum over copies", degenerate=degen),
    ]


# -- products of observables -----------------------------------------------------

def ordered_product(mats: list, d: int) -> np.ndarray:
    return reduce(np.matmul, mats, np.eye(d, dtype=complex))


def swap_sign(swaps: int, anticommuting: bool = True) -> int:
    """(-1)^(number of anticommutation swaps)."""
    return -1 if (anticommuting and swaps % 2) else 1


def permutation_lhs(view: View) -> float:
    n = view.n
    d = view.A[1].shape[0]
    worst = 0.0
    for bits in itertools.product((0, 1), repeat=n):
        present = [i + 1 for i in range(n) if bits[i]]
        if len(present) < 2:
            continue
        p = ordered_product([view.A[i] for i in present], d)
        for m in range(len(present) - 1):
            order = present[:]
            order[m], order[m + 1] = order[m + 1], order[m]
            q = ordered_product([view.A[i] for i in order], d)
            worst = max(worst, _norm(view.a(p - swap_sign(1) * q)))
    return worst


def permutation_rhs(bound: str, n: int, N: int, eps: float, omega: float) -> float:
    if bound == "perm.swap":
        return (100 / 9) * n ** 2 * math.sqrt(eps)
    if bound == "perm.swap_omega":
        return N * n ** (N + eps) * omega ** 3
    if bound == "perm.wedge":
        return n ** (N + eps) + 50 * n ** (N + eps) / math.sqrt(n ** (N - 1)) * omega
    if bound == "perm.wedge_single":
        return n ** (N + eps) + 50 * n ** (N + eps) / math.sqrt(n) * omega
    raise CertifyError(f"unknown permutation bound {bound!r}")


def check_permutation_bounds(strategy: QuantumStrategy, eps: float, family: str = "ffl", omega: float = 1 / SQRT2, n=None) -> list:
    reps = strategy.meta.get("copies", 1)
    N = strategy.players
    if reps > 1:
        views = copy_views(strategy)
        lhs = max(permutation_lhs(v) for v in views)
        nn = views[0].n
        ids = ["perm.wedge", "perm.wedge_single"]
    else:
        view = base_view(strategy, n=n)
        lhs = permutation_lhs(view)
        nn = view.n
        ids = ["perm.swap"] + (["perm.swap_omega"] if family == "nxor" or N > 2 else [])
    return [Entry(b, lhs, permutation_rhs(b, nn, N, eps, omega)) for b in ids]


def second_bound_lhs(view: View, squared: bool = False) -> float:
    n = view.n
    d = view.A[1].shape[0]
    worst = 0.0
    for bits in itertools.product((0, 1), repeat=n):
        p = ordered_product([view.A[i + 1] for i in range(n) if bits[i]], d)
        flipped = {}
        for m in range(1, n + 1):
            fb = list(bits)
            fb[m - 1] ^= 1
            sign = -1 if sum(bits[m:]) % 2 else 1
            flipped[m] = sign * ordered_product([view.A[i + 1] for i in range(n) if fb[i]], d)
        for (a, b), bob in view.B.items():
            lo, hi = min(a, b), max(a, b)
            coef_hi = 1 if a < b else -1
            target = (flipped[lo] + coef_hi * flipped[hi]) / SQRT2
            val = _norm(view.ab(p, bob) - view.a(target))
            worst = max(worst, val * val if squared else val)
    return worst


def parity_factor(n: int, players: int) -> float:
    return float(n ** (players // 2 + 5))


def second_bound_rhs(bound: str, n: int, N: int, eps: float) -> float:
    r = math.sqrt(eps)
    if bound == "second.plain":
        return 8200 * SQRT2 / 27 * n ** 2 * r
    if bound == "second.squared":
        if N == 3:
            return 1000 * n ** 3 * r
        if N == 4:
            return 100000 * n ** 4 * r
        if N == 5:
            return 1000 * SQRT2 * n ** 5 * r
        return math.factorial(N) * n ** N * r * parity_factor(n, N)
    if bound == "second.copies":
        return 130 * math.factorial(N) * n ** N * r * parity_factor(n, N)
    raise CertifyError(f"unknown second bound {bound!r}")


def check_second_bound(strategy: QuantumStrategy, family: str, eps: float, n=None) -> list:
    reps = strategy.meta.get("copies", 1)
    N = strategy.players
    if reps > 1:
        views = copy_views(strategy)
        lhs = max(second_bound_lhs(v) for v in views)
        return [Entry("second.copies", lhs, second_bound_rhs("second.copies", views[0].n, N, eps), note="max over copies")]
    view = base_view(strategy, n=n)
    if N >= 3:
        lhs = second_bound_lhs(view, squared=True)
        return [Entry("second.squared", lhs, second_bound_rhs("second.squared", view.n, N, eps), note="squared norm")]
    return [Entry("second.plain", second_bound_lhs(view), second_bound_rhs("second.plain", view.n, N, eps))]


# -- Frobenius intertwiner ---------------------------------------------------------

def _bipartite_T(strategy: QuantumStrategy, pa: int = 0):
    dims = strategy.local_dims
    d_a = dims[pa]
    rest = math.prod(dims) // d_a
    psi = strategy.state.reshape(dims)
    psi = np.moveaxis(psi, pa, 0).reshape(d_a, rest)
    return psi


def _lift_rest(op: np.ndarray, dims, slot: int, pa: int = 0) -> np.ndarray:
    """Operator on player ``slot`` embedded into the space of all players but ``pa``."""
    mats = [op if p == slot else np.eye(d) for p, d in enumerate(dims) if p != pa]
    return reduce(np.kron, mats, np.eye(1))


def frobenius_terms(strategy: QuantumStrategy, T=None, n=None):
    view = base_view(strategy, n=n)
    T = _bipartite_T(strategy) if T is None else np.asarray(T, dtype=complex)
    dims = strategy.local_dims
    if T.shape[0] != dims[0] or T.shape[1] != math.prod(dims) // dims[0]:
        raise CertifyError(f"T has shape {T.shape}, expected {(dims[0], math.prod(dims) // dims[0])}")
    a_terms, b_terms = {}, {}
    for i in range(1, view.n + 1):
        partner = 1 if i != 1 else 2
        k, l = min(i, partner), max(i, partner)
        y = view.bob_combo(k, l, +1 if i == k else -1)
        y = _lift_rest(y, dims, 1)
        a_terms[i] = float(np.linalg.norm(view.A[i] @ T - T @ y.T))
    for (a, b), bob in view.B.items():
        lo, hi = min(a, b), max(a, b)
        x = (view.A[lo] + (1 if a < b else -1) * view.A[hi]) / SQRT2
        b_terms[(a, b)] = float(np.linalg.norm(T @ _lift_rest(bob, dims, 1).T - x @ T))
    return view.n, T, a_terms, b_terms


def check_frobenius_intertwiner(strategy: QuantumStrategy, T=None, family: str = "ffl", eps: float = 0.0, n=None) -> list:
    n, T, a_terms, b_terms = frobenius_terms(strategy, T, n)
    N = strategy.players
    tn = float(np.linalg.norm(T))
    r = math.sqrt(eps)
    reps = strategy.meta.get("copies", 1)
    out = [
        Entry("frob.A", max(a_terms.values()), 9 * n ** 2 * r * tn),
        Entry("frob.B", max(b_terms.values()), 44 / 3 * n ** 2 * r * tn),
        Entry("frob.aggregate", float(sum(a_terms.values()) + sum(b_terms.values())), 5 * (N * n ** N) ** 2 * r),
    ]
    if reps > 1:
        out.append(Entry("frob.wedge", out[-1].lhs, (5 * (N * n ** N) ** 2) ** reps * math.sqrt(eps ** reps),
                         note="constants raised to the number of copies"))
    return out


# -- u.A / v.B ------------------------------------------------------------------

def check_uv_bound(strategy: QuantumStrategy, u_list, v_list, eps: float, beta: float, n=None) -> list:
    if len(u_list) != len(v_list):
        raise CertifyError("u and v lists must have equal length")
    view = base_view(strategy, n=n)
    keys = sorted(view.B)
    lhs = 0.0
    for u, v in zip(u_list, v_list):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.size != view.n or v.size != len(keys):
            raise CertifyError(f"u needs {view.n} entries and v needs {len(keys)}")
        ua = sum(c * view.A[i + 1] for i, c in enumerate(u))
        vb = sum(c * view.B[key] for c, key in zip(v, keys))
        lhs += _sq(view.a(ua) - view.b(vb))
    return [Entry("uv.combo", lhs, beta * eps)]


def uv_pair_keys(n: int) -> list:
    return sorted((i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j)


# -- N-player families ---------------------------------------------------------------

def _tuples(n: int, p: int):
    return itertools.permutations(range(1, n + 1), p)


def nxor_rhs(N: int, n: int, eps: float) -> float:
    return math.factorial(N) * n * falling(n - 1, N - 1) * eps


def check_nxor_bounds(strategy: QuantumStrategy, N: int, n: int, eps: float) -> list:
    if strategy.players != N:
        raise CertifyError(f"strategy has {strategy.players} players, expected {N}")
    psi, dims = strategy.state, strategy.local_dims

    def obs(p, t):
        try:
            return strategy.obs(p, pair_label(*t))
        except StrategyError as e:
            raise CertifyError(f"arity mismatch: {e}") from None

    def on(p, op):
        return apply_local(psi, dims, p, op)

    rhs = nxor_rhs(N, n, eps)
    out = []
    for p in range(2, N + 1):
        tot = 0.0
        for t in _tuples(n, p):
            if t[-2] > t[-1]:
                continue
            u, w = t[:-1], t[:-2] + (t[-1],)
            x_plus = (obs(p - 2, u) + obs(p - 2, w)) / SQRT2
            x_minus = (obs(p - 2, u) - obs(p - 2, w)) / SQRT2
            swapped = t[:-2] + (t[-1], t[-2])
            tot += _sq(on(p - 2, x_plus) - on(p - 1, obs(p - 1, t)))
            tot += _sq(on(p - 2, x_minus) - on(p - 1, obs(p - 1, swapped)))
        out.append(Entry(f"nxor.link.{p}", tot, rhs))
    for p in range(3, N + 1):
        tot = 0.0
        for t in itertools.combinations(range(1, n + 1), p):
            base = on(p - 1, obs(p - 1, t))
            for s in itertools.permutations(t):
                if s != t:
                    tot += _sq(base - on(p - 1, obs(p - 1, s)))
        out.append(Entry(f"nxor.interchange.{p}", tot, rhs))
    return out


# -- driver ----------------------------------------------------------------------

def default_family(strategy: QuantumStrategy) -> str:
    if strategy.meta.get("copies", 1) > 1:
        return "wedge"
    return "nxor" if strategy.players > 2 else "ffl"


def certify(
    strategy: QuantumStrategy,
    game: GameSpec,
    optimal_bias: float,
    family: str | None = None,
    omega: float | None = None,
    tol: float = MARGIN_TOL,
) -> EpsilonReport:
    """Measure epsilon and evaluate every applicable bound family."""
    family = family or default_family(strategy)
    if family not in ("ffl", "nxor", "wedge"):
        raise CertifyError(f"family must be ffl, nxor or wedge, got {family!r}")
    beta = eval_bias(strategy, game)
    eps = max(0.0, 1.0 - beta / optimal_bias) if optimal_bias > 0 else None
    if eps is None:
        raise CertifyError("optimal bias must be positive")
    omega = optimal_bias if omega is None else omega
    reps = strategy.meta.get("copies", 1)
    N = strategy.players
    entries: list = []
    if reps > 1:
        entries += check_sqrt_bounds(strategy, eps, reps=reps, family="ffl" if family == "ffl" else "xor")
        entries += check_permutation_bounds(strategy, eps, family, omega)
        entries += check_second_bound(strategy, family, eps)
    elif N == 2:
        view = base_view(strategy)
        entries += check_bipartite_bounds(strategy, None, eps, view)
        entries += check_anticommutator(strategy, "ffl", None, 2, eps, view=view)
        if family == "nxor":
            entries += check_anticommutator(strategy, "nxor", None, 2, eps, view=view)
        entries += check_sqrt_bounds(strategy, eps)
        entries += check_permutation_bounds(strategy, eps, family, omega)
        entries += check_second_bound(strategy, family, eps)
        entries += check_frobenius_intertwiner(strategy, None, family, eps)
    else:
        view = base_view(strategy)
        entries += check_nxor_bounds(strategy, N, view.n, eps)
        entries += check_anticommutator(strategy, "nxor", None, N, eps, view=view)
        entries += check_permutation_bounds(strategy, eps, "nxor", omega)
        entries += check_second_bound(strategy, "nxor", eps)
    entries = [Entry(e.bound_id, e.lhs, e.rhs, tol, e.note, e.degenerate) for e in entries]
    entries.sort(key=lambda e: e.bound_id)
    return EpsilonReport(eps, tuple(entries), beta, optimal_bias, family)
