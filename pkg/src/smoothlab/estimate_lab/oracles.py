"""Closed-form and quadrature references used to cross-check the sampling engine."""
import warnings

import numpy as np
from scipy import integrate
from scipy.special import gammaln


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not converge; ``diagnostics`` holds the quad output."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def _clipped_sqrt(v, cap=None):
    v = np.maximum(v, 0.0)
    if cap is not None:
        v = np.minimum(v, cap)
    return np.sqrt(v)


def quadratic_sublevel_1d(alpha, M, N=None):
    """Length of ``{p : |p^2 - alpha| < M}``, optionally intersected with ``|p| < N``."""
    if M <= 0:
        raise ValueError("M must be positive")
    cap = None if N is None else float(N) ** 2
    return float(2.0 * (_clipped_sqrt(alpha + M, cap) - _clipped_sqrt(alpha - M, cap)))


def _quad(f, a, b, points=None, limit=400):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, points=points, limit=limit, epsabs=1e-11, epsrel=1e-10)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc), {"interval": (a, b), "points": points}) from exc
    return val, err


def quadratic_sublevel_2d(sign, alpha, M, N):
    """Area of ``{|p|, |q| < N : |p^2 + sign*q^2 - alpha| < M}``.

    For each ``q`` the admissible ``p`` form the 1D sublevel set of ``p^2`` at
    level ``alpha - sign*q^2``, whose length is exact; the remaining integral
    over ``q`` is done adaptively with the kinks supplied as breakpoints.
    """
    if M <= 0 or N <= 0:
        raise ValueError("M and N must be positive")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    N2 = float(N) ** 2

    def inner(q):
        c = alpha - sign * q * q
        return 2.0 * (_clipped_sqrt(c + M, N2) - _clipped_sqrt(c - M, N2))

    pts = set()
    for edge in (alpha - M, alpha + M, alpha - M - N2, alpha + M - N2):
        v = edge / sign
        if 0 < v < N2:
            pts.add(float(np.sqrt(v)))
    val, _ = _quad(inner, 0.0, float(N), points=sorted(pts) or None)
    return 2.0 * val


def jap_power_integral(p):
    """``int_R <tau>^(-p) dtau`` for ``p > 1``."""
    if p <= 1:
        raise ValueError("integral diverges for p <= 1")
    return float(np.sqrt(np.pi) * np.exp(gammaln(0.5 * p - 0.5) - gammaln(0.5 * p)))


def tau_bound_constant(b):
    """A rigorous constant ``C`` with ``int <t-a1>^-2b <t-a2>^-2b dt <= C <a1-a2>^-2b``.

    Split the line at the midpoint; on each half the far factor is at least
    ``<(a1-a2)/2>`` and ``<x/2> >= <x>/2``, so ``C = 2 * 2^(2b) * int <t>^-2b``.
    """
    return 2.0 * 2.0 ** (2 * b) * jap_power_integral(2 * b)


def tau_integral(a1, a2, b):
    """``int_R <tau - a1>^(-2b) <tau - a2>^(-2b) dtau`` by adaptive quadrature."""
    if b <= 0.5:
        raise ValueError("b must exceed 1/2")
    lo, hi = min(a1, a2), max(a1, a2)

    def f(t):
        return ((1.0 + (t - a1) ** 2) * (1.0 + (t - a2) ** 2)) ** (-b)

    pieces = [(-np.inf, lo), (hi, np.inf)]
    if hi > lo:
        mid = 0.5 * (lo + hi)
        pieces += [(lo, mid), (mid, hi)]
    total = 0.0
    for a, c in pieces:
        val, _ = _quad(f, a, c)
        total += val
    return total


def tau_convolution_bound(a1, a2, b):
    """Return ``(integral, ratio)`` with ``ratio = integral * <a1 - a2>^(2b)``."""
    val = tau_integral(a1, a2, b)
    return val, val * (1.0 + (a1 - a2) ** 2) ** b


def tau_bound_sweep(b, n=20, max_separation=1e4):
    """Ratios on an ``n x n`` grid of ``(a1, a2)`` spanning separations up to ``max_separation``.

    The integral is translation invariant, so the grid is centred at zero.
    Returns a dict with the grid, the ratios, and the per-decade maxima used to
    judge whether the ratio still trends upward.
    """
    a = np.linspace(-0.5 * max_separation, 0.5 * max_separation, n)
    ratios = np.empty((n, n))
    for i, a1 in enumerate(a):
        for j, a2 in enumerate(a):
            ratios[i, j] = tau_convolution_bound(a1, a2, b)[1]
    seps = np.abs(a[:, None] - a[None, :])
    # separation sweep 10^0..10^decades for the trend readout
    decades = np.arange(0, int(round(np.log10(max_separation))) + 1)
    decade_max = np.array([tau_convolution_bound(0.0, 10.0 ** e, b)[1] for e in decades])
    return {
        "b": b,
        "grid": a,
        "separations": seps,
        "ratios": ratios,
        "max_ratio": float(ratios.max()),
        "min_ratio": float(ratios.min()),
        "spread": float(ratios.max() / ratios.min()),
        "decades": decades,
        "decade_ratios": decade_max,
        "constant": tau_bound_constant(b),
    }


def no_growth_trend(decade_ratios, constant):
    """Bounded-without-trend readout for a separation sweep.

    The ratio must stay below the analytic constant and its increments per
    decade must shrink once the separation exceeds one (a saturating curve,
    not a power law).
    """
    r = np.asarray(decade_ratios, dtype=float)
    inc = np.diff(r[1:])
    shrinking = bool(np.all(inc[1:] <= inc[:-1] + 1e-12)) if inc.size > 1 else True
    return bool(r.max() <= constant) and shrinking
