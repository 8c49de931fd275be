"""Operator identities: absolute values, defect operators, intertwiner residuals.

All checks report residuals and spectra; none of them raise on a failed
identity. Errors are reserved for malformed input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .strategies import SX, SZ, anticommuting_family, kron_all, vectorize

HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-10
DEGENERATE_EIG = 1e-10
KERNEL_SV = 1e-10
INVARIANT_TOL = 1e-8
UNIT_TOL = 1e-10


class OpidentError(ValueError):
    pass


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: tuple
    min: float
    psd: bool

    @classmethod
    def of(cls, m: np.ndarray, tol: float = PSD_TOL) -> "Spectrum":
        ev = np.linalg.eigvalsh((m + m.conj().T) / 2)
        return cls(tuple(float(x) for x in ev), float(ev[0]), bool(ev[0] >= -tol))

    def as_dict(self) -> dict:
        return {"eigenvalues": list(self.eigenvalues), "min": self.min, "psd": self.psd}


@dataclass(frozen=True)
class IntertwinerCandidate:
    matrix: np.ndarray
    frobenius_norm: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "frobenius_norm", float(np.linalg.norm(self.matrix)))


def _herm(m, what="matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise OpidentError(f"{what} must be square, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise OpidentError(f"{what} is not Hermitian")
    return (m + m.conj().T) / 2


def abs_op(m) -> np.ndarray:
    """sqrt(M^2) of a Hermitian matrix via its eigendecomposition."""
    h = _herm(m)
    w, v = np.linalg.eigh(h)
    return (v * np.abs(w)) @ v.conj().T


def _sgn(x: float) -> float:
    # same cut as the operator sign, so near-null eigenvalues map to 0
    return 0.0 if abs(x) < DEGENERATE_EIG else float(np.sign(x))


def _sign_op(h: np.ndarray):
    w, v = np.linalg.eigh(h)
    degenerate = int(np.sum(np.abs(w) < DEGENERATE_EIG))
    s = np.where(np.abs(w) < DEGENERATE_EIG, 0.0, np.sign(w))
    return (v * s) @ v.conj().T, w, degenerate


@dataclass(frozen=True)
class DefectReport:
    operator: np.ndarray
    spectrum: Spectrum
    sign: int
    degenerate: int
    formula: tuple  # closed-form eigenvalues, same order as spectrum
    discrepancy: tuple
    formula_unsigned: tuple = ()

    @property
    def max_discrepancy(self) -> float:
        return max((abs(x) for x in self.discrepancy), default=0.0)

    def as_dict(self) -> dict:
        return {
            "sign": "+" if self.sign > 0 else "-",
            "spectrum": self.spectrum.as_dict(),
            "degenerate": self.degenerate,
            "formula_eigenvalues": list(self.formula),
            "formula_unsigned_eigenvalues": list(self.formula_unsigned),
            "discrepancy": list(self.discrepancy),
            "max_discrepancy": self.max_discrepancy,
        }


def defect_operator(a, b, sign: int = +1) -> DefectReport:
    """((A+B)/sqrt2 +/- (A+B)/|A+B|)^2 against the formula [sign(l) l^2/2 - 1]^2.

    l runs over eigenvalues of A+B. The formula is compared eigenvalue by
    eigenvalue after sorting both lists. The unsigned reading [l^2/2 - 1]^2
    is carried alongside for reference.
    """
    if sign not in (1, -1):
        raise OpidentError("sign must be +1 or -1")
    a, b = _herm(a, "A"), _herm(b, "B")
    if a.shape != b.shape:
        raise OpidentError("A and B must have equal dimension")
    s = a + b
    sgn, lam, degen = _sign_op(s)
    inner = s / math.sqrt(2) + sign * sgn
    op = inner @ inner
    spec = Spectrum.of(op)
    formula = sorted(float((_sgn(x) * x * x / 2 - 1) ** 2) for x in lam)
    unsigned = sorted(float((x * x / 2 - 1) ** 2) for x in lam)
    disc = tuple(e - f for e, f in zip(spec.eigenvalues, formula))
    return DefectReport(op, spec, sign, degen, tuple(formula), disc, tuple(unsigned))


@dataclass(frozen=True)
class NPlayerDefectReport:
    operator: np.ndarray
    spectrum: Spectrum
    players: int
    degenerate: int
    psd_expected: bool
    formula: tuple
    discrepancy: tuple

    def as_dict(self) -> dict:
        return {
            "players": self.players,
            "spectrum": self.spectrum.as_dict(),
            "psd_expected": self.psd_expected,
            "degenerate": self.degenerate,
            "formula_eigenvalues": list(self.formula),
            "discrepancy": list(self.discrepancy),
        }


def nplayer_defect_operator(observables) -> NPlayerDefectReport:
    """[S/sqrt(N) + S/|S|]^N for S the sum of the N observables.

    The comparison formula expands the binomial on each eigenvalue l of S:
    sum_j C(N,j) sign(l)^j (l/sqrt N)^(N-j). PSD is only expected for even N.
    """
    obs = [_herm(o, f"observable {k}") for k, o in enumerate(observables)]
    if not obs:
        raise OpidentError("need at least one observable")
    if len({o.shape for o in obs}) != 1:
        raise OpidentError("observables must share one dimension")
    N = len(obs)
    s = reduce(np.add, obs)
    sgn, lam, degen = _sign_op(s)
    inner = s / math.sqrt(N) + sgn
    op = np.linalg.matrix_power(inner, N)
    spec = Spectrum.of(op)
    formula = sorted(
        float(sum(math.comb(N, j) * _sgn(x) ** j * (x / math.sqrt(N)) ** (N - j) for j in range(N + 1)))
        for x in lam
    )
    disc = tuple(e - f for e, f in zip(spec.eigenvalues, formula))
    return NPlayerDefectReport(op, spec, N, degen, N % 2 == 0, tuple(formula), disc)


# -- intertwiners --------------------------------------------------------------

def _check_pair(t, a, b):
    if a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1]:
        raise OpidentError("observables must be square")
    if t.shape != (b.shape[0], a.shape[0]):
        raise OpidentError(f"T has shape {t.shape}, need {(b.shape[0], a.shape[0])}")


def schur_residuals(t, a_list, b_list) -> list:
    """||T A_i - B_i T||_F for each i."""
    t = np.asarray(t, dtype=complex)
    if len(a_list) != len(b_list):
        raise OpidentError("A and B lists differ in length")
    out = []
    for a, b in zip(a_list, b_list):
        a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
        _check_pair(t, a, b)
        out.append(float(np.linalg.norm(t @ a - b @ t)))
    return out


SCHUR3_IDS = ("S-1", "S-2", "S-3", "S-4", "S-5", "S-6")


@dataclass(frozen=True)
class Schur3Report:
    residuals: dict
    base_residual: float
    c_norm: float

    @property
    def chain_holds(self) -> bool:
        return self.residuals["S-1"] <= self.c_norm * self.base_residual + 1e-12

    def as_dict(self) -> dict:
        return {
            "residuals": dict(self.residuals),
            "base_residual": self.base_residual,
            "c_spectral_norm": self.c_norm,
            "chain_holds": self.chain_holds,
        }


def schur3_residuals(t, a, b, c) -> Schur3Report:
    """Six three-operator intertwining residuals (all operators d x d).

    S-1  T A C = B T C      S-2  A T C = A B T      S-3  T B C = A T C
    S-4  T C A = B T A      S-5  A T C = T B C      S-6  B T C = T A C
    """
    t, a, b, c = (np.asarray(m, dtype=complex) for m in (t, a, b, c))
    d = t.shape[0]
    if any(m.shape != (d, d) for m in (t, a, b, c)):
        raise OpidentError("T, A, B and C must all be square of one size")
    f = np.linalg.norm
    res = {
        "S-1": f(t @ a @ c - b @ t @ c),
        "S-2": f(a @ t @ c - a @ b @ t),
        "S-3": f(t @ b @ c - a @ t @ c),
        "S-4": f(t @ c @ a - b @ t @ a),
        "S-5": f(a @ t @ c - t @ b @ c),
        "S-6": f(b @ t @ c - t @ a @ c),
    }
    return Schur3Report(
        {k: float(v) for k, v in res.items()},
        float(f(t @ a - b @ t)),
        float(np.linalg.norm(c, 2)),
    )


@dataclass(frozen=True)
class KernelReport:
    kernel_dim: int
    violations: tuple  # (op index, null vector index, ||T O v||)
    invariant: bool

    def as_dict(self) -> dict:
        return {
            "kernel_dim": self.kernel_dim,
            "max_violation": max((v[2] for v in self.violations), default=0.0),
            "violations": [list(v) for v in self.violations],
            "invariant": self.invariant,
        }


def kernel_invariance(t, ops) -> KernelReport:
    """Does every op map ker T into ker T? Reports ||T O v|| per null vector."""
    t = np.asarray(t, dtype=complex)
    _, s, vh = np.linalg.svd(t)
    full = np.zeros(t.shape[1])
    full[: len(s)] = s
    null = vh.conj().T[:, full < KERNEL_SV]
    rows = []
    for k, o in enumerate(ops):
        o = np.asarray(o, dtype=complex)
        if o.shape != (t.shape[1], t.shape[1]):
            raise OpidentError(f"op {k} has shape {o.shape}, T acts on dimension {t.shape[1]}")
        for j in range(null.shape[1]):
            rows.append((k, j, float(np.linalg.norm(t @ o @ null[:, j]))))
    return KernelReport(null.shape[1], tuple(rows), all(r[2] <= INVARIANT_TOL for r in rows))


# -- products of tilded observables ----------------------------------------------

def tilde_family(n: int) -> list:
    """Doubled anticommuting family A~_i = diag(A_i, -A_i).

    The doubled members still anticommute pairwise. For odd n the product of
    an irreducible family is a phase times I, so the doubled product is that
    phase times (-1)^n diag(I, -I). n = 1 uses the scalar A_1 = -1.
    """
    if n < 1:
        raise OpidentError("n >= 1 required")
    fam = [-np.eye(1, dtype=complex)] if n == 1 else anticommuting_family(n)
    out = []
    for a in fam:
        z = np.zeros_like(a)
        out.append(np.block([[a, z], [z, -a]]))
    return out


@dataclass(frozen=True)
class OddProductReport:
    n: int
    product: np.ndarray
    target: np.ndarray
    max_entry_error: float
    phase: complex
    state_error: float
    construction: str

    @property
    def matches(self) -> bool:
        return self.max_entry_error <= 1e-10

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "construction": self.construction,
            "max_entry_error": self.max_entry_error,
            "global_phase": [self.phase.real, self.phase.imag],
            "state_error": self.state_error,
            "matches": self.matches,
        }


def odd_product_expansion(a_list) -> OddProductReport:
    """Compare prod_i A_i with (-1)^n diag(I, -I) (equal-size blocks).

    A global phase is divided out first; it is reported. The action on the
    maximally entangled state is checked through (P (x) I) phi = (I (x) P^T) phi.
    """
    mats = [np.asarray(a, dtype=complex) for a in a_list]
    n = len(mats)
    if n % 2 == 0:
        raise OpidentError(f"odd number of observables required, got {n}")
    d = mats[0].shape[0]
    if d % 2:
        raise OpidentError("block identity needs even dimension")
    p = reduce(np.matmul, mats)
    target = (-1) ** n * np.diag([1.0] * (d // 2) + [-1.0] * (d // 2)).astype(complex)
    k = np.unravel_index(np.argmax(np.abs(p)), p.shape)
    phase = complex(p[k] / target[k]) if abs(target[k]) > 0 else 1.0
    if abs(abs(phase) - 1) > 1e-8:
        phase = 1.0
    err = float(np.max(np.abs(p / phase - target)))
    phi = np.eye(d, dtype=complex).reshape(-1) / math.sqrt(d)
    lhs = np.kron(p / phase, np.eye(d)) @ phi
    rhs = np.kron(np.eye(d), (p / phase).T) @ phi
    return OddProductReport(n, p, target, err, phase, float(np.linalg.norm(lhs - rhs)),
                            "doubled family diag(A_i, -A_i) over the Jordan-Wigner family")


# -- vectorisation -----------------------------------------------------------------

def frobenius_unit(t) -> tuple[float, bool]:
    f = float(np.linalg.norm(np.asarray(t)))
    return f, abs(f - 1.0) <= UNIT_TOL


def vectorization_identities(psi, split, a, b, u, w) -> dict:
    """Residuals of the four properties of the state-to-matrix map.

    product    vec(u (x) w) = u w^T
    left       A vec(psi) = vec((A (x) I) psi)
    right      vec(psi) B^T = vec((I (x) B) psi)
    norm       ||vec(psi)||_F = ||psi||
    """
    d_a, d_b = split
    psi = np.asarray(psi, dtype=complex)
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    u, w = np.asarray(u, dtype=complex), np.asarray(w, dtype=complex)
    t = vectorize(psi, split)
    return {
        "product": float(np.max(np.abs(vectorize(np.kron(u, w), split) - np.outer(u, w)))),
        "left": float(np.max(np.abs(a @ t - vectorize(np.kron(a, np.eye(d_b)) @ psi, split)))),
        "right": float(np.max(np.abs(t @ b.T - vectorize(np.kron(np.eye(d_a), b) @ psi, split)))),
        "norm": abs(float(np.linalg.norm(t)) - float(np.linalg.norm(psi))),
    }


__all__ = [
    "Spectrum", "IntertwinerCandidate", "abs_op", "defect_operator", "nplayer_defect_operator",
    "schur_residuals", "schur3_residuals", "kernel_invariance", "tilde_family",
    "odd_product_expansion", "frobenius_unit", "vectorization_identities", "SX", "SZ", "kron_all",
]
