"""Acceptance suite: one PASS/FAIL line per criterion.

    pytest -v -s tests/test_acceptance.py
    python3 tests/test_acceptance.py
"""

import io
import json
import math
import sys
import time
from contextlib import redirect_stderr, redirect_stdout
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from nlcert.certify import certify, measure_epsilon
from nlcert.classical import classical_value, classical_value_repeated
from nlcert.cli import main as cli_main
from nlcert.games import build_chsh, build_ffl, build_odd_cycle, build_xor_game
from nlcert.jsonio import dump_game
from nlcert.opident import defect_operator, frobenius_unit, schur3_residuals, vectorization_identities
from nlcert.perturb import perturbed_chsh
from nlcert.repetition import repeat_game
from nlcert.sdp import dual_certificate_audit, blockwise_dual_y, quantum_bias_bipartite, rayleigh_oracle, sym_matrix
from nlcert.strategies import optimal_chsh_strategy, phi_plus, schmidt_blocks, vectorize

INV_SQRT2 = 1 / math.sqrt(2)


def _cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli_main(list(argv))
    return code, out.getvalue()


def _random_observable(rng, d):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, _ = np.linalg.qr(m)
    signs = rng.choice([-1.0, 1.0], size=d)
    return (q * signs) @ q.conj().T


def _random_unit(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def criterion_1(tmp):
    path = tmp / "chsh.json"
    path.write_text(dump_game(build_chsh(2)))
    t0 = time.perf_counter()
    code, out = _cli("value", "quantum", str(path))
    dt = time.perf_counter() - t0
    bias = json.loads(out)["bias"]
    ok = code == 0 and abs(bias - 0.7071068) <= 1e-6 and dt < 1.0
    return ok, f"bias {bias:.10f}, {dt:.3f}s"


def criterion_2(tmp):
    cases = [("chsh", build_chsh(2), Fraction(3, 4)), ("ffl", build_ffl(), Fraction(2, 3))]
    cases += [(f"odd_cycle({n})", build_odd_cycle(n), 1 - Fraction(1, 2 * n)) for n in (3, 5, 7)]
    bad, slow = [], 0.0
    for name, game, want in cases:
        t0 = time.perf_counter()
        got = classical_value(game).value
        dt = time.perf_counter() - t0
        slow = max(slow, dt)
        if got != want or dt >= 1.0:
            bad.append(f"{name}: {got} in {dt:.3f}s")
    return not bad, "; ".join(bad) or f"5 exact values, slowest {slow:.3f}s"


def criterion_3(tmp):
    t0 = time.perf_counter()
    bias = quantum_bias_bipartite(repeat_game(build_chsh(2), 2, "xor_combine")).bias
    win = classical_value_repeated(build_ffl(), 2).value
    dt = time.perf_counter() - t0
    ok = abs(bias - 0.5) <= 1e-5 and win == Fraction(2, 3) and dt < 30
    return ok, f"xor bias {bias:.9f}, and_win {win}, {dt:.2f}s"


def criterion_4(tmp):
    r = certify(optimal_chsh_strategy(2), build_chsh(2), INV_SQRT2)
    worst = max(e.lhs for e in r.entries)
    ok = worst <= 1e-8 and r.epsilon <= 1e-9
    return ok, f"epsilon {r.epsilon:.2e}, max lhs {worst:.2e} over {len(r.entries)} bounds"


CHECKED_PREFIXES = ("sums.", "anticomm.", "sqrt.", "perm.")


def criterion_5(tmp):
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    worst, checked, bad = math.inf, 0, []
    for k in range(100):
        n = 2 + k % 3
        s = perturbed_chsh(n, float(rng.uniform(0.005, 0.2)), rng, ancilla=bool(k % 2))
        assert max(s.local_dims) <= 8
        game = build_chsh(n)
        eps = measure_epsilon(s, game, INV_SQRT2)
        r = certify(s, game, INV_SQRT2)
        assert r.epsilon == eps
        for e in r.entries:
            if e.bound_id.startswith(CHECKED_PREFIXES):
                checked += 1
                worst = min(worst, e.margin)
                if e.margin < -1e-8:
                    bad.append(f"#{k} {e.bound_id} {e.margin:.3g}")
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    return ok, (", ".join(bad[:5]) if bad else f"{checked} margins, worst {worst:.2e}") + f", {dt:.2f}s"


def criterion_6(tmp):
    rng = np.random.default_rng(7)
    bad = []
    for k in range(50):
        s, t = (int(x) for x in rng.integers(1, 5, size=2))
        p = rng.random((s, t))
        p /= p.sum()
        g = build_xor_game([[str(i) for i in range(s)], [str(j) for j in range(t)]],
                           rng.choice([-1, 1], size=(s, t)).tolist(), p.tolist())
        cb = float(classical_value(g, mode="bias").value)
        res = quantum_bias_bipartite(g)
        if not (cb <= res.bias + 1e-7 and res.bias <= 1 and res.monotone):
            bad.append(f"#{k} classical {cb:.6f} quantum {res.bias:.6f} monotone {res.monotone}")
    return not bad, "; ".join(bad[:3]) or "50 games sandwiched, all sweeps monotone"


def criterion_7(tmp):
    rng = np.random.default_rng(99)
    worst = math.inf
    for _ in range(500):
        d = int(rng.integers(1, 6))
        rep = defect_operator(_random_observable(rng, d), _random_observable(rng, d), int(rng.choice([1, -1])))
        worst = min(worst, rep.spectrum.min)
    sz = np.diag([1.0, -1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    rep = defect_operator(sz, sx, +1)
    # independent route: build the operator by hand and diagonalise it
    s = sz + sx
    inner = s / math.sqrt(2) + s / math.sqrt(2)  # |sz + sx| = sqrt2 I
    direct = np.linalg.eigvalsh(inner @ inner)
    ok = (
        worst >= -1e-10
        and np.allclose(direct, [4, 4], atol=1e-12)
        and np.allclose(rep.spectrum.eigenvalues, direct, atol=1e-12)
        and rep.max_discrepancy > 0
    )
    return ok, f"min eig {worst:.2e}; plus spectrum {[round(float(x), 12) for x in direct]}, formula discrepancy {rep.max_discrepancy:g}"


def criterion_8(tmp):
    rng = np.random.default_rng(8)
    worst_id, chain_bad = 0.0, 0
    unit_bad = []
    for d in (2, 3, 4, 8):
        norm, flag = frobenius_unit(vectorize(phi_plus(d), (d, d)))
        if not flag or abs(norm - 1) > 1e-10:
            unit_bad.append(d)
        for _ in range(10):
            res = vectorization_identities(
                phi_plus(d), (d, d), _random_observable(rng, d), _random_observable(rng, d),
                _random_unit(rng, d), _random_unit(rng, d),
            )
            worst_id = max(worst_id, max(res.values()))
    for _ in range(200):
        d = int(rng.integers(1, 6))
        t = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        if not schur3_residuals(t, *(_random_observable(rng, d) for _ in range(3))).chain_holds:
            chain_bad += 1
    ok = not unit_bad and worst_id <= 1e-12 and chain_bad == 0
    return ok, f"unit norm fails {unit_bad}, identity residual {worst_id:.1e}, chain failures {chain_bad}/200"


def criterion_9(tmp):
    spreads = {}
    for n in (2, 3, 4):
        s = optimal_chsh_strategy(n)
        d = s.local_dims[0]
        rep = schmidt_blocks(s.state, (d, d), 2 ** (n // 2))
        spreads[n] = rep.within_block_spread if not rep.partial_block else math.inf
    ok = all(v <= 1e-10 for v in spreads.values())
    return ok, ", ".join(f"n={n} spread {v:.1e}" for n, v in spreads.items())


def _g3():
    rng = np.random.default_rng(3)
    shape = (3, 4, 6)
    return build_xor_game(
        [[str(i) for i in range(k)] for k in shape],
        rng.choice([-1, 1], size=shape).tolist(),
        np.full(shape, Fraction(1, 72), dtype=object).tolist(),
    )


def criterion_10(tmp):
    path = tmp / "g3.json"
    path.write_text(dump_game(_g3()))
    argv = ("sdp", "audit", str(path), "--family", "3xor", "--omega", "1/2")
    a, b = _cli(*argv), _cli(*argv)
    identical = a == b
    min_eig = json.loads(a[1])["min_eig"]
    y = blockwise_dual_y("3xor", 3, omega=Fraction(1, 2))
    oracle = rayleigh_oracle(dual_certificate_audit(sym_matrix(_g3()), y).operator, samples=10_000)
    # recorded outcomes for other families; PSD is data here, not a pass condition
    outcomes = [f"3xor psd={json.loads(a[1])['psd']}"]
    chsh = sym_matrix(build_chsh(2))
    for fam, yv in (("ffl_wedge", blockwise_dual_y("ffl_wedge", 2)), ("nxor", blockwise_dual_y("nxor", 2, 2, omega=INV_SQRT2))):
        outcomes.append(f"{fam}@chsh psd={dual_certificate_audit(chsh, yv).psd}")
    ok = identical and abs(min_eig - oracle) <= 1e-6
    return ok, f"min eig {min_eig:.9f} vs oracle {oracle:.9f}, bit-identical {identical}; " + ", ".join(outcomes)


CRITERIA = [globals()[f"criterion_{k}"] for k in range(1, 11)]


def _line(k, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"


@pytest.mark.parametrize("k", range(1, 11))
def test_criterion(k, tmp_path):
    ok, detail = CRITERIA[k - 1](tmp_path)
    print("\n" + _line(k, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    import tempfile

    failed = 0
    with tempfile.TemporaryDirectory() as d:
        for k, fn in enumerate(CRITERIA, 1):
            ok, detail = fn(Path(d))
            failed += not ok
            print(_line(k, ok, detail))
    sys.exit(1 if failed else 0)
