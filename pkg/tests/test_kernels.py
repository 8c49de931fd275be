import numpy as np
import pytest

from nlcert import _kernels_py as pure
from nlcert import kernels
from nlcert.classical import TIE_TOL, _layout, win_table
from nlcert.games import build_chsh, build_ffl, build_odd_cycle

compiled = pytest.importorskip("nlcert._kernels")


def _scan_args(game, exhaustive):
    wins = win_table(game)
    prob = game.prob_float().reshape(game.shape + (1,) * game.players)
    w, rdig, astride, radix, _ = _layout(game, prob * wins, exhaustive)
    return w, rdig, astride, radix, int(np.prod(radix.astype(object)))


@pytest.mark.parametrize("game", [build_chsh(2), build_chsh(3), build_odd_cycle(5), build_ffl()], ids=str)
@pytest.mark.parametrize("exhaustive", [False, True])
def test_scan_backends_agree(game, exhaustive):
    w, rdig, astride, radix, total = _scan_args(game, exhaustive)
    for lo, hi in ((0, total), (0, total // 2), (total // 3, total)):
        a = pure.best_response_scan(w, rdig, astride, radix, lo, hi, TIE_TOL)
        b = compiled.best_response_scan(w, rdig, astride, radix, lo, hi, TIE_TOL)
        assert a[1:] == b[1:]
        assert a[0] == pytest.approx(b[0], abs=1e-14)


@pytest.mark.parametrize("shape", [(2, 2), (3, 5), (6, 4)])
def test_sweep_backends_agree(shape, rng):
    g = rng.standard_normal(shape)
    g /= np.abs(g).sum()
    d = min(shape)
    u0 = rng.standard_normal((shape[0], d))
    u0 /= np.linalg.norm(u0, axis=1, keepdims=True)
    out = []
    for mod in (pure, compiled):
        u = u0.copy()
        v = np.zeros((shape[1], d))
        v[:, 0] = 1
        val, sweeps, trace = mod.alternating_sweeps(g, u, v, 1e-12, 10000)
        out.append((val, sweeps, trace, u, v))
    (va, sa, ta, ua, _), (vb, sb, tb, ub, _) = out
    assert sa == sb
    assert va == pytest.approx(vb, abs=1e-12)
    assert np.allclose(ta, tb, atol=1e-12)
    assert np.allclose(ua, ub, atol=1e-10)


def test_dispatch_threshold():
    assert kernels.sweep_backend(4, 4, 4) == compiled.BACKEND
    assert kernels.sweep_backend(64, 64, 64) == pure.BACKEND


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv("NGL_THREADS", "3")
    assert kernels.thread_cap() == 3
    monkeypatch.setenv("NGL_THREADS", "junk")
    assert kernels.thread_cap() >= 1


def test_pure_switch_selects_numpy_backend():
    import os
    import subprocess
    import sys

    code = (
        "from nlcert import kernels; from nlcert.classical import classical_value; "
        "from nlcert.games import build_odd_cycle; "
        "print(kernels.BACKEND, classical_value(build_odd_cycle(5)).value)"
    )
    env = dict(os.environ, NLCERT_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "9/10"]
