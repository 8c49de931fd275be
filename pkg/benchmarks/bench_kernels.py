"""Compiled vs pure-numpy kernels on the two hot loops.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Both backends are imported directly, so no environment switch is needed.
Results of each pair are compared before timings are printed.
"""

import argparse
import time

import numpy as np

from nlcert import _kernels_py as pure
from nlcert.classical import TIE_TOL, _layout, win_table
from nlcert.games import build_odd_cycle, build_xor_game

try:
    from nlcert import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def scan_case(game):
    wins = win_table(game)
    prob = game.prob_float().reshape(game.shape + (1,) * game.players)
    w, rdig, astride, radix, _ = _layout(game, prob * wins, exhaustive=False)
    total = int(np.prod(radix.astype(object)))
    return lambda mod: mod.best_response_scan(w, rdig, astride, radix, 0, total, TIE_TOL), total


def sweep_case(s, t, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((s, t))
    g /= np.abs(g).sum()
    d = min(s, t)
    u0 = rng.standard_normal((s, d))
    u0 /= np.linalg.norm(u0, axis=1, keepdims=True)

    def run(mod):
        u = np.ascontiguousarray(u0.copy())
        v = np.zeros((t, d))
        v[:, 0] = 1.0
        val, sweeps, _ = mod.alternating_sweeps(g, u, v, 1e-12, 100000)
        return float(val), int(sweeps)

    return run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if compiled is None:
        print("compiled extension not built; only the pure backend is available")
    cases = []
    rng = np.random.default_rng(0)
    shape = (7, 7, 3)
    xor3 = build_xor_game(
        [[str(i) for i in range(k)] for k in shape],
        rng.choice([-1, 1], size=shape).tolist(),
        np.full(shape, 1.0 / np.prod(shape)).tolist(),
    )
    for name, game in (("odd_cycle(15) scan", build_odd_cycle(15)), ("3-player xor 7x7x3 scan", xor3)):
        fn, total = scan_case(game)
        cases.append((f"{name} [{total} tables]", fn))
    for s, t in ((16, 16), (64, 48)):
        cases.append((f"sweeps {s}x{t}", sweep_case(s, t, seed=s)))

    print(f"{'case':<42}{'pure s':>10}{'compiled s':>12}{'speedup':>9}")
    for name, fn in cases:
        tp, rp = best_of(lambda: fn(pure), args.repeat)
        if compiled is None:
            print(f"{name:<42}{tp:>10.4f}{'-':>12}{'-':>9}")
            continue
        tc, rc = best_of(lambda: fn(compiled), args.repeat)
        # scans return (best, code, ties); sweeps return (value, sweeps)
        if abs(rp[0] - rc[0]) > 1e-9 or (len(rp) == 3 and rp[1:] != rc[1:]):
            raise SystemExit(f"{name}: backends disagree: {rp} vs {rc}")
        print(f"{name:<42}{tp:>10.4f}{tc:>12.4f}{tp / tc:>8.1f}x")


if __name__ == "__main__":
    main()
