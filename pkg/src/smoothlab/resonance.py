"""Stationary points of rescaled phases: location, Hessian rank and local sublevel scaling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from smoothlab.phase_models import Chart, fd_gradient, get_equation

RANK_TOL = 1e-6
GRAD_TOL = 1e-8
DEDUP_TOL = 1e-4
SEEDS_PER_AXIS = 9
SEED_RANGE = 1.5


class MorseWindowError(RuntimeError):
    pass


@dataclass(frozen=True)
class CriticalPoint:
    location: np.ndarray
    grad_norm: float
    hessian_eigenvalues: np.ndarray
    numerical_rank: int
    signature: tuple
    value: float = 0.0
    newton_steps: int = 0
    fd_grad_norm: float = 0.0
    hessian_scale: float = 0.0

    def as_dict(self):
        return {
            "location": [float(v) for v in self.location],
            "value": self.value,
            "grad_norm": self.grad_norm,
            "fd_grad_norm": self.fd_grad_norm,
            "hessian_eigenvalues": [float(v) for v in self.hessian_eigenvalues],
            "numerical_rank": self.numerical_rank,
            "signature": list(self.signature),
            "newton_steps": self.newton_steps,
            "class": classify(self),
        }


def hessian_spectrum(H, rank_tol=RANK_TOL, scale=None):
    """Sorted eigenvalues, numerical rank and signature ``(n+, n-, n0)`` of a symmetric matrix.

    Eigenvalues count toward the rank when ``|lambda| > rank_tol * ref`` with
    ``ref = max(max |lambda|, scale)``; pass the size of the terms that were
    summed into ``H`` as ``scale`` so that an exactly cancelling Hessian is not
    judged against its own rounding noise.
    """
    ev = np.sort(np.linalg.eigvalsh(0.5 * (H + H.T)))
    scale = max(np.max(np.abs(ev)) if ev.size else 0.0, scale or 0.0)
    if scale == 0:
        return ev, 0, (0, 0, ev.size)
    big = np.abs(ev) > rank_tol * scale
    pos = int(np.sum(big & (ev > 0)))
    neg = int(np.sum(big & (ev < 0)))
    return ev, pos + neg, (pos, neg, ev.size - pos - neg)


def analyze_point(chart: Chart, z, rank_tol=RANK_TOL, newton_steps=0) -> CriticalPoint:
    """Gradient and Hessian data of ``chart`` at ``z`` (not necessarily critical)."""
    z = np.asarray(z, dtype=float)
    g = chart.gradient(z)
    ev, rank, sig = hessian_spectrum(chart.hessian(z), rank_tol, chart.hessian_scale(z))
    fd = fd_gradient(lambda v: chart.value(v), z)
    return CriticalPoint(z.copy(), float(np.linalg.norm(g)), ev, rank, sig,
                         float(chart.value(z)), newton_steps, float(np.linalg.norm(fd)),
                         chart.hessian_scale(z))


def classify(point: CriticalPoint, rank_tol=None) -> str:
    """``nondegenerate``, ``semi_nondegenerate(rank r)`` (rank >= 2) or ``degenerate``."""
    if rank_tol is None:
        rank = point.numerical_rank
    else:
        rank = hessian_spectrum(np.diag(point.hessian_eigenvalues), rank_tol, point.hessian_scale)[1]
    n = len(point.hessian_eigenvalues)
    if rank == n and n > 0:
        return "nondegenerate"
    if rank >= 2:
        return f"semi_nondegenerate(rank {rank})"
    return "degenerate"


# ---------------------------------------------------------------------------
# Charts addressed by equation id
# ---------------------------------------------------------------------------

def build_chart(equation, fixed_block, free, dependent=None, dim=None) -> Chart:
    """Chart in rescaled coordinates.

    ``fixed_block`` maps pinned slots to their rescaled values; with slot 0
    pinned to a unit vector this is the ``P`` chart, pinning another slot to a
    unit vector gives the ``Q`` chart. Every slot must be pinned, free or the
    dependent one (default: the last unassigned slot).
    """
    eq = get_equation(equation, dim) if isinstance(equation, str) else equation
    k, d = eq.k, eq.dim
    free = tuple(int(f) for f in free)
    pinned = {int(j): np.atleast_1d(np.asarray(v, dtype=float)) for j, v in fixed_block.items()}
    rest = [j for j in range(k + 1) if j not in pinned and j not in free]
    if dependent is None:
        if len(rest) != 1:
            raise ValueError("slots must split into pinned, free and exactly one dependent")
        dependent = rest[0]
    elif sorted(rest) != [dependent]:
        raise ValueError("every slot other than the dependent one must be pinned or free")
    values = np.zeros((k + 1, d))
    for j, v in pinned.items():
        values[j] = v
    return Chart(eq.dispersion, eq.nonlinearity.signs, values, free, int(dependent))


def _newton(chart, z0, max_steps=50, tol=GRAD_TOL, blowup=1e3):
    z = np.array(z0, dtype=float)
    for step in range(max_steps + 1):
        g = chart.gradient(z)
        if np.linalg.norm(g) <= tol * 1e-2:
            return z, step
        if step == max_steps:
            break
        dz = np.linalg.lstsq(chart.hessian(z), g, rcond=None)[0]
        z = z - dz
        if not np.all(np.isfinite(z)) or np.linalg.norm(z) > blowup:
            return None, step
    return (z, max_steps) if np.linalg.norm(chart.gradient(z)) <= tol else (None, max_steps)


def find_critical_points(equation, fixed_block, free, dependent=None, seeds_per_axis=SEEDS_PER_AXIS,
                         seed_range=SEED_RANGE, rank_tol=RANK_TOL, dim=None):
    """Newton iteration on the chart gradient from a seed lattice, deduplicated.

    Returns ``(points, diagnostics)``; seeds whose iteration diverges are
    counted in ``diagnostics["diverged"]``.
    """
    chart = build_chart(equation, fixed_block, free, dependent, dim)
    n = chart.dim
    ax = np.linspace(-seed_range, seed_range, seeds_per_axis)
    seeds = np.stack([g.ravel() for g in np.meshgrid(*([ax] * n), indexing="ij")], axis=-1)
    found, diverged = [], 0
    for z0 in seeds:
        z, steps = _newton(chart, z0)
        if z is None:
            diverged += 1
            continue
        if any(np.linalg.norm(z - p.location) < DEDUP_TOL for p in found):
            continue
        found.append(analyze_point(chart, z, rank_tol, steps))
    found.sort(key=lambda p: tuple(np.round(p.location, 8)))
    return found, {"seeds": len(seeds), "diverged": diverged, "found": len(found)}


# ---------------------------------------------------------------------------
# Rank dichotomy for the three-dimensional ZK phase
# ---------------------------------------------------------------------------

def _unit(v):
    return v / np.linalg.norm(v)


def zk_rank_dichotomy(n_samples=1000, dim=3, rank_tol=RANK_TOL, seed=0):
    """Classify random configurations on and off ``{p1 = -p3}`` by Hessian rank.

    Chart: output ``p`` (unit) and ``p2`` pinned, ``p1`` free, ``p3`` dependent.
    On the variety ``p3 = -p1`` (equivalently ``p2 = p``) the rank must be at
    most one; off it, at least two.
    """
    rng = np.random.default_rng(seed)
    counts = {"on_le1": 0, "on_ge2": 0, "off_le1": 0, "off_ge2": 0}
    for _ in range(n_samples):
        p = _unit(rng.standard_normal(dim))
        p1 = rng.uniform(-1.5, 1.5, dim)
        for on in (True, False):
            p2 = p.copy() if on else rng.uniform(-1.5, 1.5, dim)
            chart = build_chart("mzk", {0: p, 2: p2}, free=(1,), dependent=3, dim=dim)
            _, rank, _ = hessian_spectrum(chart.hessian(p1), rank_tol, chart.hessian_scale(p1))
            key = ("on_" if on else "off_") + ("le1" if rank <= 1 else "ge2")
            counts[key] += 1
    counts["misclassified"] = counts["on_ge2"] + counts["off_le1"]
    counts["samples"] = n_samples
    return counts


def rearrange_for_semi_nondegeneracy(p, p1, p2, p3, rank_tol=RANK_TOL):
    """Permutation of the inputs making both the ``P`` and ``Q`` charts rank >= 2.

    ``P``: output pinned at unit scale, second input pinned, first free, third
    dependent. ``Q``: first input pinned at unit scale, third pinned, output
    free, second dependent. Returns ``(perm, rank_P, rank_Q)`` or ``None``.
    """
    inputs = [np.asarray(v, dtype=float) for v in (p1, p2, p3)]
    p = np.asarray(p, dtype=float)
    d = p.size
    for perm in ((0, 1, 2), (1, 0, 2), (0, 2, 1), (2, 1, 0), (1, 2, 0), (2, 0, 1)):
        a, b, c = (inputs[i] for i in perm)
        cP = build_chart("mzk", {0: p, 2: b}, free=(1,), dependent=3, dim=d)
        rP = hessian_spectrum(cP.hessian(a), rank_tol, cP.hessian_scale(a))[1]
        s1 = np.linalg.norm(a)
        cQ = build_chart("mzk", {1: a / s1, 3: c / s1}, free=(0,), dependent=2, dim=d)
        rQ = hessian_spectrum(cQ.hessian(p / s1), rank_tol, cQ.hessian_scale(p / s1))[1]
        if rP >= 2 and rQ >= 2:
            return perm, rP, rQ
    return None


# ---------------------------------------------------------------------------
# Local sublevel scaling near a critical point
# ---------------------------------------------------------------------------

def model_exponent(rank):
    return min(rank / 2.0, 1.0)


def morse_window_check(chart: Chart, point: CriticalPoint, radius=0.05, samples=1_000_000,
                       levels=8, rank_tol=RANK_TOL, retries=3):
    """Fit ``log |{|P - P(z)| < m}|`` against ``log m`` inside a window around ``z``.

    The window is the cube of half-width ``radius``; levels run dyadically
    down from ``m_max = 0.05 * |lambda|_max * radius^2``. A rank-two block
    with eigenvalues of both signs carries the logarithmic factor of the
    hyperbolic model, which is divided out before fitting. On a poor fit
    (``r2 < 0.9``) the radius is halved and the check retried.
    """
    z = np.asarray(point.location, dtype=float)
    n = z.size
    if n > 3:
        raise ValueError("window check is limited to charts of dimension <= 3")
    ev, rank, sig = hessian_spectrum(chart.hessian(z), rank_tol, chart.hessian_scale(z))
    if rank < min(2, n):
        raise ValueError("point is degenerate; no Morse block to check")
    lam = np.max(np.abs(ev))
    hyperbolic = rank == 2 and sig[0] == 1 and sig[1] == 1
    target = model_exponent(rank)
    P0 = float(chart.value(z))
    r = float(radius)
    for attempt in range(retries + 1):
        m_side = max(2, int(round(samples ** (1.0 / n))))
        ax = (np.arange(m_side) + 0.5) / m_side * 2 * r - r
        grid = np.stack([g.ravel() for g in np.meshgrid(*([ax] * n), indexing="ij")], axis=-1)
        dev = np.abs(chart.value(z + grid) - P0)
        cell = (2 * r / m_side) ** n
        m_max = 0.05 * lam * r * r
        ms = m_max * 2.0 ** -np.arange(levels)
        meas = np.array([np.count_nonzero(dev < m) * cell for m in ms])
        ok = meas > 0
        y = np.log(meas[ok])
        if hyperbolic:
            y = y - np.log(np.log(np.e * lam * r * r / ms[ok]))
        fit = stats.linregress(np.log(ms[ok]), y) if ok.sum() >= 3 else None
        r2 = float(fit.rvalue**2) if fit is not None else 0.0
        if fit is not None and r2 >= 0.9:
            exponent = float(fit.slope)
            return {
                "exponent": exponent,
                "model_exponent": target,
                "within_tolerance": bool(abs(exponent - target) <= 0.1),
                "r2": r2,
                "radius": r,
                "attempts": attempt + 1,
                "log_corrected": hyperbolic,
                "levels": [float(m) for m in ms],
                "measures": [float(v) for v in meas],
            }
        r *= 0.5
    raise MorseWindowError(f"no acceptable fit down to radius {r * 2:.3g}")


# named charts used by the atlas and the suite presets
NAMED_CHARTS = {
    "mkdv": dict(equation="mkdv", fixed_block={0: [1.0]}, free=(1, 2), dependent=3),
    "kdv4-p3": dict(equation="kdv4", fixed_block={0: [1.0], 3: [-0.5]}, free=(1, 2), dependent=4),
    "zk3d": dict(equation="mzk", dim=3, fixed_block={0: [1.0, 0.0, 0.0], 2: [0.3, 0.2, -0.1]},
                 free=(1,), dependent=3),
    "nls2d": dict(equation="nls-cubic", dim=2, fixed_block={0: [1.0, 0.0], 2: [0.2, -0.3]},
                  free=(1,), dependent=3),
}


def atlas(name, **overrides):
    """Critical points of a named chart as plain data."""
    if name not in NAMED_CHARTS:
        raise KeyError(f"unknown chart {name!r}; known: {sorted(NAMED_CHARTS)}")
    cfg = {**NAMED_CHARTS[name], **overrides}
    pts, diag = find_critical_points(cfg["equation"], cfg["fixed_block"], cfg["free"],
                                     cfg.get("dependent"), cfg.get("seeds_per_axis", SEEDS_PER_AXIS),
                                     cfg.get("seed_range", SEED_RANGE), cfg.get("rank_tol", RANK_TOL),
                                     cfg.get("dim"))
    return {
        "chart": name,
        "equation": cfg["equation"],
        "fixed_block": {str(k): list(np.atleast_1d(v).astype(float)) for k, v in cfg["fixed_block"].items()},
        "free": list(cfg["free"]),
        "points": [p.as_dict() for p in pts],
        "diagnostics": diag,
    }
