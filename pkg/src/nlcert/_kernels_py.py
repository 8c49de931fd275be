"""Pure numpy twin of the compiled kernels (same signatures and semantics)."""

import numpy as np

BACKEND = "python"
_BATCH = 4096


def best_response_scan(W, rdig, astride, radix, start, stop, tol):
    W = np.asarray(W, dtype=np.float64)
    R, QL, AL, _ = W.shape
    radix = np.asarray(radix, dtype=np.int64)
    place = np.ones(len(radix), dtype=np.int64)
    for k in range(len(radix) - 2, -1, -1):
        place[k] = place[k + 1] * radix[k + 1]
    wt = np.ascontiguousarray(W.transpose(0, 3, 1, 2))  # r, o, q, a
    rows = np.arange(R)[None, :]
    best, best_code, ties = -np.inf, -1, 0
    for lo in range(start, stop, _BATCH):
        codes = np.arange(lo, min(stop, lo + _BATCH), dtype=np.int64)
        digits = (codes[:, None] // place[None, :]) % radix[None, :]
        if rdig.shape[1]:
            ao = (digits[:, np.asarray(rdig)] * np.asarray(astride)[None, None, :]).sum(-1)
        else:
            ao = np.zeros((len(codes), R), dtype=np.int64)
        scores = wt[rows, ao].sum(axis=1)  # batch, q, a
        m = scores.max(axis=2)
        cnt = (scores >= m[:, :, None] - tol).sum(axis=2)
        totals = m.sum(axis=1)
        mults = np.prod(cnt, axis=1)
        top = totals.max()
        if top > best + tol:
            hit = np.nonzero(totals >= top - tol)[0]
            best, best_code, ties = float(top), int(codes[hit[0]]), int(mults[hit].sum())
        elif top >= best - tol:
            hit = totals >= best - tol
            ties += int(mults[hit].sum())
            best = max(best, float(top))
    return best, best_code, ties


def alternating_sweeps(G, U, V, tol, max_sweeps):
    G = np.asarray(G, dtype=np.float64)
    trace = []
    prev = -np.inf
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        w = G.T @ U
        nrm = np.sqrt((w * w).sum(axis=1))
        ok = nrm > 0
        V[ok] = w[ok] / nrm[ok, None]
        trace.append(float(nrm.sum()))
        w = G @ V
        nrm = np.sqrt((w * w).sum(axis=1))
        ok = nrm > 0
        U[ok] = w[ok] / nrm[ok, None]
        f_u = float(nrm.sum())
        trace.append(f_u)
        if f_u - prev < tol:
            prev = f_u
            break
        prev = f_u
    return prev, sweeps, np.asarray(trace)
