"""Seeded random perturbations of the optimal CHSH(n) strategy."""

from __future__ import annotations

import numpy as np

from .strategies import QuantumStrategy, optimal_chsh_strategy


def _random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (m + m.conj().T) / 2


def _unitary(h: np.ndarray, eta: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * eta * w)) @ v.conj().T


def perturbed_chsh(n: int, eta: float, rng: np.random.Generator, ancilla: bool = False) -> QuantumStrategy:
    """Optimal CHSH(n) with every observable conjugated by exp(i eta H) and a noisy state.

    Conjugation keeps each observable a +-1 observable. With ``ancilla`` a
    qubit is appended to both players, initialised to a random product.
    """
    base = optimal_chsh_strategy(n)
    d = base.local_dims[0]
    psi = base.state
    obs = [dict(t) for t in base.observables]
    if ancilla:
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        anc = np.kron(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))
        # (d x d) (x) (2 x 2) regrouped as (d x 2) (x) (d x 2)
        psi = np.multiply.outer(psi.reshape(d, d), anc.reshape(2, 2))
        psi = psi.transpose(0, 2, 1, 3).reshape(-1)
        eye2 = np.eye(2)
        obs = [{q: np.kron(m, eye2) for q, m in t.items()} for t in obs]
        d *= 2
    out = []
    for table in obs:
        new = {}
        for q in sorted(table):
            u = _unitary(_random_hermitian(rng, d), eta)
            m = u @ table[q] @ u.conj().T
            new[q] = (m + m.conj().T) / 2  # exactly Hermitian, so loading it back is lossless
        out.append(new)
    noise = rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)
    psi = psi + eta * noise / np.linalg.norm(noise)
    psi = psi / np.linalg.norm(psi)
    meta = {"family": "chsh", "n": n, "perturbation": eta}
    return QuantumStrategy((d, d), psi, tuple(out), meta=meta)
