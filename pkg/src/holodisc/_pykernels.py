"""numpy implementations of the compiled kernels (used when the extension is absent)."""

import numpy as np


def poly_mul(a, b, kmax, lmax):
    """Coefficients of a*b restricted to k < kmax, l < lmax."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    out = np.zeros((kmax, lmax), dtype=np.complex128)
    kb, lb = b.shape
    for i, j in zip(*np.nonzero(a[:kmax, :lmax])):
        kk = min(kb, kmax - i)
        ll = min(lb, lmax - j)
        out[i:i + kk, j:j + ll] += a[i, j] * b[:kk, :ll]
    return out


def holder_max(pts, vals, alpha, block=256):
    """Blockwise brute force over all node pairs; same contract as the compiled kernel."""
    pts = np.asarray(pts, dtype=float)
    vals = np.asarray(vals, dtype=float)
    n = pts.shape[0]
    best, bi, bj = 0.0, -1, -1
    for start in range(0, n, block):
        stop = min(n, start + block)
        d2 = ((pts[start:stop, None, :] - pts[None, :, :]) ** 2).sum(-1)
        v2 = ((vals[start:stop, None, :] - vals[None, :, :]) ** 2).sum(-1)
        rows = np.arange(start, stop)[:, None]
        mask = (np.arange(n)[None, :] > rows) & (d2 > 0.0)
        if not mask.any():
            continue
        q = np.zeros_like(d2)
        q[mask] = np.sqrt(v2[mask]) / d2[mask] ** (0.5 * alpha)
        idx = np.unravel_index(np.argmax(q), q.shape)
        if q[idx] > best:
            best = float(q[idx])
            bi, bj = start + int(idx[0]), int(idx[1])
    return best, bi, bj
