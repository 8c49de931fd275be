"""XOR-game bias via the vector relaxation, plus SDP audit objects.

Index layout of the symmetrized matrix: player-1 questions first, then the
remaining questions (multi-index flattened row-major for N > 2 players).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .games import GameSpec, GameTensor, SymmetrizedMatrix, flatten_bipartite, game_tensor, symmetrize

PSD_TOL = 1e-9
FAMILIES = ("3xor", "4xor", "5xor", "nxor", "nxor_wedge", "ffl_wedge")


class SdpError(ValueError):
    pass


def _matrix(g) -> np.ndarray:
    if isinstance(g, GameSpec):
        g = game_tensor(g)
    if isinstance(g, GameTensor):
        g = g.entries
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2:
        raise SdpError("the vector relaxation needs a bipartite tensor")
    return np.ascontiguousarray(g)


@dataclass(frozen=True)
class BiasResult:
    bias: float
    u: np.ndarray
    v: np.ndarray
    trace: np.ndarray
    sweeps: int
    restart_values: tuple
    winner: int
    backend: str

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.trace) >= -1e-12))


def quantum_bias_bipartite(
    g,
    tol: float = 1e-10,
    restarts: int = 16,
    seed: int = 0,
    max_sweeps: int = 100_000,
    threads: int | None = None,
) -> BiasResult:
    """Maximise sum G[s,t] <u_s, v_t> over unit vectors by alternating updates.

    Each half-sweep replaces one side by its closed-form optimum given the
    other, so the objective never decreases. Vector dimension is
    min(|S|, |T|). Best restart wins; ties go to the lower restart index.
    """
    G = _matrix(g)
    S, T = G.shape
    d = max(1, min(S, T))
    rng = np.random.default_rng(seed)
    inits = []
    for _ in range(max(1, restarts)):
        u = rng.standard_normal((S, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        inits.append(u)

    def run(u0):
        u = np.ascontiguousarray(u0.copy())
        v = np.zeros((T, d))
        v[:, 0] = 1.0
        val, sweeps, trace = kernels.alternating_sweeps(G, u, v, tol, max_sweeps)
        return float(val), u, v, np.asarray(trace), int(sweeps)

    threads = threads or kernels.thread_cap()
    if threads > 1 and len(inits) > 1:
        with ThreadPoolExecutor(min(threads, len(inits))) as ex:
            runs = list(ex.map(run, inits))
    else:
        runs = [run(u) for u in inits]
    best = 0
    for k in range(1, len(runs)):
        if runs[k][0] > runs[best][0]:
            best = k
    val, u, v, trace, sweeps = runs[best]
    return BiasResult(val, u, v, trace, sweeps, tuple(r[0] for r in runs), best, kernels.sweep_backend(S, T, d))


# -- SDP objects -----------------------------------------------------------

@dataclass(frozen=True)
class SdpProblem:
    objective: np.ndarray
    constraints: tuple  # (F_i, c_i) pairs

    def __post_init__(self):
        n = self.objective.shape[0]
        mats = [self.objective] + [f for f, _ in self.constraints]
        for m in mats:
            if m.shape != (n, n):
                raise SdpError("all matrices must share one square size")
            if np.max(np.abs(m - m.T), initial=0.0) > 1e-12:
                raise SdpError("SDP matrices must be symmetric")

    @property
    def size(self) -> int:
        return self.objective.shape[0]


def unit_diag(n: int, i: int) -> np.ndarray:
    e = np.zeros((n, n))
    e[i, i] = 1.0
    return e


def sym_matrix(game_or_tensor) -> np.ndarray:
    """Symmetrized matrix; N-player tensors are flattened first."""
    if isinstance(game_or_tensor, GameSpec):
        g = game_tensor(game_or_tensor).entries
    elif isinstance(game_or_tensor, GameTensor):
        g = game_or_tensor.entries
    elif isinstance(game_or_tensor, SymmetrizedMatrix):
        return np.asarray(game_or_tensor.matrix)
    else:
        g = np.asarray(game_or_tensor, dtype=float)
    return np.asarray(symmetrize(flatten_bipartite(g)).matrix)


def tsirelson_problem(g) -> SdpProblem:
    c = sym_matrix(g)
    n = c.shape[0]
    return SdpProblem(c, tuple((unit_diag(n, i), 1.0) for i in range(n)))


def gram_from_vectors(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    w = np.vstack([u, v])
    return w @ w.T


def tsirelson_dual(g, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Dual vector matching a primal vector solution: y_i = (C Z)_ii."""
    G = _matrix(g)
    ys = 0.5 * np.linalg.norm(G @ v, axis=1)
    yt = 0.5 * np.linalg.norm(G.T @ u, axis=1)
    return np.concatenate([ys, yt])


def _min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(m)[0]) if m.size else 0.0


def primal_feasibility(problem: SdpProblem, Z, tol: float = PSD_TOL) -> dict:
    Z = np.asarray(Z, dtype=float)
    if Z.shape != (problem.size, problem.size):
        raise SdpError(f"Z has shape {Z.shape}, problem size {problem.size}")
    if np.max(np.abs(Z - Z.T), initial=0.0) > 1e-12:
        raise SdpError("Z must be symmetric")
    me = _min_eig(Z)
    viol = max((abs(float(np.sum(f * Z)) - c) for f, c in problem.constraints), default=0.0)
    return {
        "min_eig": me,
        "max_violation": viol,
        "objective": float(np.sum(problem.objective * Z)),
        "feasible": bool(me >= -tol and viol <= tol),
    }


def blockwise_dual_y(family: str, n: int, N: int | None = None, reps: int = 1, omega=Fraction(1)) -> np.ndarray:
    """Blockwise-constant dual vector of length n**N (n**2 for ffl_wedge).

    Block b (1-based) occupies indices n**(b-1) .. n**b - 1, block 1 being
    0 .. n-1, and carries omega / (N! n (n-1) ... (n-b+1)). The wedge form
    multiplies by omega**reps. ffl_wedge uses 1/(3n) and 1/(3n(n-1)).
    """
    if family not in FAMILIES:
        raise SdpError(f"unknown family {family!r}")
    fixed = {"3xor": 3, "4xor": 4, "5xor": 5}
    if family in fixed:
        if N not in (None, fixed[family]):
            raise SdpError(f"{family} fixes N={fixed[family]}")
        N = fixed[family]
    if family == "ffl_wedge":
        if n < 2:
            raise SdpError("ffl_wedge needs n >= 2")
        y = [Fraction(1, 3 * n)] * n + [Fraction(1, 3 * n * (n - 1))] * (n * n - n)
        return np.asarray([float(v) for v in y])
    if N is None or N < 2 or n < N:
        raise SdpError("need n >= N >= 2")
    if reps < 1:
        raise SdpError("reps >= 1")
    w = Fraction(omega) if not isinstance(omega, float) else omega
    scale = w ** reps if family == "nxor_wedge" else w
    out = []
    falling = 1
    for b in range(1, N + 1):
        falling *= n - b + 1
        size = n if b == 1 else n ** b - n ** (b - 1)
        out += [scale / (math.factorial(N) * falling)] * size
    return np.asarray([float(v) for v in out])


@dataclass(frozen=True)
class DualCertificate:
    y: np.ndarray
    operator: np.ndarray
    eigenvalues: np.ndarray
    min_eig: float
    psd: bool

    def as_dict(self) -> dict:
        return {
            "y": [float(v) for v in self.y],
            "min_eig": self.min_eig,
            "psd": self.psd,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "dual_value": float(np.sum(self.y)),
        }


def dual_certificate_audit(g_sym, y, tol: float = PSD_TOL) -> DualCertificate:
    """Audit sum y_i E_ii - G_Sym for positive semidefiniteness (recorded, never asserted)."""
    m = np.asarray(g_sym.matrix if isinstance(g_sym, SymmetrizedMatrix) else g_sym, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != m.shape[0]:
        raise SdpError(f"y has {y.size} entries, G_Sym has size {m.shape[0]}")
    op = np.diag(y) - m
    op = (op + op.T) / 2
    ev = np.linalg.eigvalsh(op)
    return DualCertificate(y, op, ev, float(ev[0]), bool(ev[0] >= -tol))


@dataclass(frozen=True)
class GapReport:
    gap_value: float
    classification: str
    primal_value: float
    dual_value: float
    primal_feasible: bool
    dual_feasible: bool


def duality_gap(problem: SdpProblem, Z, y, tol: float = PSD_TOL) -> GapReport:
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != len(problem.constraints):
        raise SdpError("one dual variable per constraint is required")
    prim = primal_feasibility(problem, Z, tol)
    slack = sum(yi * f for yi, (f, _) in zip(y, problem.constraints)) - problem.objective
    dual_ok = _min_eig((slack + slack.T) / 2) >= -tol
    gap = float(np.sum(slack * np.asarray(Z, dtype=float)))
    dual_value = float(sum(yi * c for yi, (_, c) in zip(y, problem.constraints)))
    if not (prim["feasible"] and dual_ok):
        cls = "infeasible"
    elif abs(gap) <= tol:
        cls = "vanishing"
    else:
        cls = "weak"
    return GapReport(gap, cls, prim["objective"], dual_value, prim["feasible"], bool(dual_ok))


def rayleigh_oracle(m, samples: int = 10_000, seed: int = 0, squarings: int = 40) -> float:
    """Minimum Rayleigh quotient over seeded random unit vectors.

    Each sample is also pushed through a power filter built by repeated
    squaring of (sigma I - M), which concentrates it on the bottom
    eigenspace without calling an eigensolver.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, samples))
    x /= np.linalg.norm(x, axis=0, keepdims=True)
    sigma = float(np.max(np.sum(np.abs(m), axis=1))) + 1.0
    p = sigma * np.eye(n) - m
    for _ in range(squarings):
        p = p @ p
        p /= np.max(np.abs(p))
    fx = p @ x
    norms = np.linalg.norm(fx, axis=0)
    fx = fx[:, norms > 0] / norms[norms > 0]
    rq = lambda v: np.einsum("ij,ij->j", v, m @ v)
    return float(min(rq(x).min(), rq(fx).min() if fx.size else np.inf))
