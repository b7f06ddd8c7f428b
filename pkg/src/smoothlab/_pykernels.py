"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` call-for-call and are used when the compiled
extension is unavailable or ``SMOOTHLAB_PURE_PYTHON=1`` is set.
"""
import numpy as np


def window_max(phi, w, halfwidth, alpha_lo, alpha_hi):
    """Max over ``alpha`` in ``[alpha_lo, alpha_hi]`` of ``sum w[|phi - alpha| < halfwidth]``.

    ``phi`` must be sorted ascending and ``w`` nonnegative. Returns
    ``(best_sum, best_alpha)``.
    """
    phi = np.asarray(phi, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    n = phi.shape[0]
    cum = np.zeros(n + 1)
    np.cumsum(w, out=cum[1:])
    best, best_alpha = 0.0, alpha_lo
    M = halfwidth
    if n:
        ends = np.searchsorted(phi, phi + 2.0 * M, side="left")
        sums = cum[ends] - cum[:n]
        # windows [phi_i, phi_i + 2M); the centre sits half the slack below phi_i + M
        # so that phi_i itself satisfies the strict inequality
        centers = phi + M - 0.5 * (phi + 2.0 * M - phi[ends - 1])
        ok = (centers >= alpha_lo) & (centers <= alpha_hi)
        if np.any(ok):
            idx = np.flatnonzero(ok)
            i = idx[np.argmax(sums[idx])]
            best, best_alpha = float(sums[i]), float(centers[i])
    for a in (alpha_lo, alpha_hi):
        lo = np.searchsorted(phi, a - M, side="right")
        hi = np.searchsorted(phi, a + M, side="left")
        val = float(cum[hi] - cum[lo])
        if val > best:
            best, best_alpha = val, float(a)
    return best, best_alpha


def window_sums(phi, w, alphas, halfwidth):
    """``sum w[|phi - alpha| < halfwidth]`` for each alpha; ``phi`` sorted ascending."""
    phi = np.asarray(phi, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    cum = np.zeros(phi.shape[0] + 1)
    np.cumsum(w, out=cum[1:])
    alphas = np.asarray(alphas, dtype=np.float64)
    lo = np.searchsorted(phi, alphas - halfwidth, side="right")
    hi = np.searchsorted(phi, alphas + halfwidth, side="left")
    return cum[hi] - cum[lo]


def lattice_form(coords, n, signs, phi, out_w, in_w, bexp, V, chunk=1 << 14):
    """Brute-force weighted multilinear sum over a lattice box.

    ``coords`` are integer lattice points ``(P, d)`` in ``[-n/2, n/2)^d`` laid out
    in row-major order of ``coords + n/2``. For every input tuple
    ``(p_1..p_k)`` the output point is ``p_0 = sum_j signs[j] coords[p_j]``
    (skipped when outside the box) and the term

        out_w[p0] * prod in_w[p_j] * <Phi>^bexp * conj(V[t,0,p0]) * prod V~[t,j,p_j]

    is accumulated, where ``Phi = phi[p0] - sum signs[j] phi[p_j]`` and ``V~`` is
    conjugated on slots with negative sign. Returns one complex value per trial.
    """
    coords = np.asarray(coords, dtype=np.int64)
    P, d = coords.shape
    k = len(signs) - 1
    signs = np.asarray(signs, dtype=np.float64)
    isigns = signs.astype(np.int64)
    V = np.asarray(V, dtype=np.complex128)
    T = V.shape[0]
    Vs = [V[:, 0, :].conj()] + [V[:, j, :].conj() if isigns[j] < 0 else V[:, j, :] for j in range(1, k + 1)]
    half = n // 2
    strides = n ** np.arange(d - 1, -1, -1)
    total = P ** k
    acc = np.zeros(T, dtype=np.complex128)
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total), dtype=np.int64)
        idx = []
        rem = flat
        for _ in range(k):
            idx.append(rem % P)
            rem = rem // P
        idx = idx[::-1]
        out = np.zeros((flat.shape[0], d), dtype=np.int64)
        for j in range(k):
            out += isigns[j + 1] * coords[idx[j]]
        ok = np.all((out >= -half) & (out < n - half), axis=1)
        if not np.any(ok):
            continue
        idx = [a[ok] for a in idx]
        p0 = (out[ok] + half) @ strides
        Phi = phi[p0].copy()
        wt = out_w[p0].copy()
        for j in range(k):
            Phi -= signs[j + 1] * phi[idx[j]]
            wt *= in_w[idx[j]]
        wt *= (1.0 + Phi * Phi) ** (0.5 * bexp)
        prod = Vs[0][:, p0] * wt
        for j in range(k):
            prod *= Vs[j + 1][:, idx[j]]
        acc += prod.sum(axis=1)
    return acc
