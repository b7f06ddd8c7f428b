"""Nonlinear smoothing measurements on the torus.

Rough random data of prescribed regularity is evolved, the Duhamel residual
``z(t) = u(t) - G(t) u0`` is formed, and its ``H^(s+eps)`` norm is tracked while
the resolution is refined. A norm that settles under refinement indicates the
residual really lives in ``H^(s+eps)``; a norm that keeps growing does not.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from smoothlab.phase_models import jap
from smoothlab.spectral.grid import Grid, SpectralState, from_physical
from smoothlab.spectral.solver import (SolverBlowup, as_model, default_dt, linear_propagate,
                                       sobolev_norm, solve)

PROFILES = ("power_law", "power_law_loglog")
STABLE_RATIO = 1.2
ROUGHNESS_GROWTH = 1.1
DEFAULT_T = 0.5
DEFAULT_TRIALS = 5
DEFAULT_L = 8.0
DEFAULT_AMPLITUDE = 0.05
DT_FACTOR = 2.0  # residual norms move by ~1e-5 relative against 0.4
EPS_MAX = 1.2

def regularity_floor(eq_id, dim) -> float:
    """Regularity below which smoothing is not predicted for this family."""
    if eq_id == "kdv4":
        return -1.0 / 6.0
    if eq_id in ("mkdv", "mzk-sym2d") or (eq_id == "mzk" and dim <= 2):
        return 0.25
    if eq_id in ("mzk", "nls-cubic"):
        return dim / 2.0 - 1.0
    if eq_id == "nls-quintic":
        return (dim - 1) / 2.0
    raise KeyError(eq_id)


def predicted_order(eq_id, dim, s) -> float:
    """Supremum of the smoothing orders predicted at regularity ``s`` (0 below the floor).

    No prediction is available for one-dimensional mKdV.
    """
    if eq_id == "mkdv":
        raise KeyError("no predicted smoothing order for mkdv")
    if s <= regularity_floor(eq_id, dim):
        return 0.0
    if eq_id == "kdv4":
        gain = min(3 * s + 0.5, s + 0.5)
    elif eq_id == "nls-quintic":
        gain = 4 * s + 2 - 2 * dim
    elif eq_id == "mzk-sym2d" or (eq_id == "mzk" and dim <= 2):
        gain = 2 * s - 0.5
    else:
        gain = 2 * s - dim + 2
    return float(min(gain, 1.0))


@dataclass(frozen=True)
class RoughDataSpec:
    s: float
    seed: int = 0
    amplitude: float = 1.0
    profile: str = "power_law_loglog"

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}")
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")


def rough_modulus(spec: RoughDataSpec, xi) -> np.ndarray:
    """``amplitude * <xi>^(-s - d/2)``, divided by ``log(e + |xi|)`` for the log profile."""
    d = xi.shape[-1]
    out = spec.amplitude * jap(xi) ** (-spec.s - 0.5 * d)
    if spec.profile == "power_law_loglog":
        out = out / np.log(np.e + np.linalg.norm(xi, axis=-1))
    return out


def _nested_phases(grid: Grid, seed: int) -> np.ndarray:
    """Uniform phases drawn shell by shell (sup-norm shells of integer modes).

    The draw order of the modes in shells ``0..r`` does not depend on ``n``, so
    refining the grid keeps every coarse coefficient and only adds new ones.
    """
    q = np.stack(np.meshgrid(*([grid.modes] * grid.dim), indexing="ij"), axis=-1).reshape(-1, grid.dim)
    keep = grid.mask.ravel()
    shell = np.max(np.abs(q), axis=1)
    keys = [q[:, j] for j in reversed(range(grid.dim))] + [shell]
    order = np.lexsort(keys)
    order = order[keep[order]]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    theta = np.zeros(q.shape[0])
    theta[order] = 2.0 * np.pi * rng.random(order.size)
    return theta.reshape(grid.shape)


def _positive_half(grid: Grid) -> np.ndarray:
    """True where the first nonzero component of the mode is positive."""
    q = np.stack(np.meshgrid(*([grid.modes] * grid.dim), indexing="ij"), axis=-1)
    pos = np.zeros(grid.shape, dtype=bool)
    undecided = np.ones(grid.shape, dtype=bool)
    for j in range(grid.dim):
        pos |= undecided & (q[..., j] > 0)
        undecided &= q[..., j] == 0
    return pos


def make_rough_data(spec: RoughDataSpec, grid: Grid, real=True) -> SpectralState:
    """Mean-zero coefficients with prescribed modulus and random phases.

    For real fields the phases of ``-q`` mirror those of ``q`` (Hermitian data).
    """
    mod = np.where(grid.mask, rough_modulus(spec, grid.xi), 0.0)
    mod[(0,) * grid.dim] = 0.0
    theta = _nested_phases(grid, spec.seed)
    if real:
        pos = _positive_half(grid)
        mirrored = np.roll(np.flip(theta), 1, axis=tuple(range(grid.dim)))
        neg = np.roll(np.flip(pos), 1, axis=tuple(range(grid.dim)))
        theta = np.where(pos, theta, np.where(neg, -mirrored, 0.0))
    return SpectralState(grid, mod * np.exp(1j * theta))


def duhamel_residual(equation, u0: SpectralState, t, dt=None, dt_factor=None,
                     renormalize=False) -> SpectralState:
    """``u(t) - G(t) u0``; solver blow-ups propagate."""
    model = as_model(equation, u0.grid.dim, renormalize=renormalize)
    if dt is None and dt_factor is not None:
        dt = default_dt(model, u0.grid, dt_factor)
        dt = t / max(1, int(np.ceil(t / dt - 1e-9)))
    u = solve(u0, t, dt, model).final
    lin = linear_propagate(u0, t, model)
    return u.copy(u.coeffs - lin.coeffs, u.time)


SCALING_TOLERANCE = 0.3


def smooth_bump(grid: Grid, amplitude, width=1.0) -> SpectralState:
    """Gaussian of the given height and width centred in the box."""
    x = grid.x()
    mesh = np.meshgrid(*([x] * grid.dim), indexing="ij")
    r2 = sum((m - np.pi * grid.L) ** 2 for m in mesh)
    return from_physical(grid, amplitude * np.exp(-0.5 * r2 / width ** 2))


def amplitude_scaling(equation, u0: SpectralState, t=0.1, dt_factor=0.4, renormalize=False) -> dict:
    """Residual ``L^2`` norms for ``u0`` and ``u0 / 2``.

    For small data the residual is dominated by the degree-``k`` Duhamel term,
    so halving the data should divide it by ``2^k``.
    """
    model = as_model(equation, u0.grid.dim, renormalize=renormalize)
    half = u0.copy(0.5 * u0.coeffs)
    full_norm = sobolev_norm(duhamel_residual(model, u0, t, dt_factor=dt_factor), 0.0)
    half_norm = sobolev_norm(duhamel_residual(model, half, t, dt_factor=dt_factor), 0.0)
    expected = 2.0 ** model.equation.k
    ratio = full_norm / half_norm if half_norm > 0 else float("inf")
    return {"k": model.equation.k, "norm_full": full_norm, "norm_half": half_norm, "ratio": ratio,
            "expected": expected, "relative_error": abs(ratio / expected - 1.0),
            "within_tolerance": bool(abs(ratio / expected - 1.0) <= SCALING_TOLERANCE)}


# ---------------------------------------------------------------------------
# Scan
# ---------------------------------------------------------------------------

@dataclass
class SmoothingReport:
    equation: str
    s: float
    t: float
    eps_grid: list
    resolutions: list
    residual_norms: list  # [eps][resolution], median over trials
    verdicts: list
    trials: int
    seeds: list
    flags: list = field(default_factory=list)
    blowups: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def verdict(self, eps) -> str:
        i = int(np.argmin(np.abs(np.asarray(self.eps_grid) - eps)))
        return self.verdicts[i]

    def ratios(self):
        a = np.asarray(self.residual_norms, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (a[:, 1:] / a[:, :-1]).tolist()

    def to_json(self) -> str:
        d = asdict(self)
        d["ratios"] = self.ratios()
        return json.dumps(_clean(d), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps"] + [f"n={n}" for n in self.resolutions] + ["verdict"])
        for e, row, v in zip(self.eps_grid, self.residual_norms, self.verdicts):
            w.writerow([repr(float(e))] + [repr(float(x)) for x in row] + [v])
        return buf.getvalue()

    def plot_data(self) -> str:
        """``eps,n,norm`` triples."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "n", "norm"])
        for e, row in zip(self.eps_grid, self.residual_norms):
            for n, x in zip(self.resolutions, row):
                w.writerow([repr(float(e)), n, repr(float(x))])
        return buf.getvalue()


def _clean(obj):
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def classify_row(norms, ratio=STABLE_RATIO) -> str:
    """Verdict from the last two refinement ratios."""
    norms = np.asarray(norms, dtype=float)
    if norms.size < 3 or not np.all(np.isfinite(norms)) or np.any(norms <= 0):
        return "inconclusive"
    r = norms[-2:] / norms[-3:-1]
    if np.all((r >= 1.0 / ratio) & (r <= ratio)):
        return "stable"
    if np.all(r > ratio):
        return "growing"
    return "inconclusive"


def enforce_monotone(eps_grid, verdicts):
    """A stable cell above a non-stable one cannot be certified; mark it inconclusive."""
    order = np.argsort(eps_grid, kind="stable")
    out = list(verdicts)
    flags = []
    seen_bad = False
    for i in order:
        if out[i] != "stable":
            seen_bad = True
        elif seen_bad:
            out[i] = "inconclusive"
            flags.append(f"eps={eps_grid[i]:g} stable above a non-stable eps; marked inconclusive")
    return out, flags


def smoothing_scan(equation, s, eps_grid, resolutions, t=DEFAULT_T, trials=DEFAULT_TRIALS,
                   seed=0, amplitude=DEFAULT_AMPLITUDE, L=DEFAULT_L, dim=None, dt_factor=DT_FACTOR,
                   profile="power_law_loglog", renormalize=True, focusing=False) -> SmoothingReport:
    """Median residual ``H^(s+eps)`` norms over seeds for each resolution, plus verdicts."""
    eps_grid = [float(e) for e in eps_grid]
    resolutions = [int(n) for n in resolutions]
    if not eps_grid:
        raise ValueError("eps_grid must be nonempty")
    if any(e < 0 or e > EPS_MAX for e in eps_grid):
        raise ValueError(f"eps values must lie in [0, {EPS_MAX}]")
    if len(resolutions) < 3 or sorted(set(resolutions)) != resolutions:
        raise ValueError("need at least three increasing resolutions")
    if trials < 3:
        raise ValueError("need at least three trials")
    model = as_model(equation, dim, focusing=focusing, renormalize=renormalize)
    eq = model.equation
    floor = regularity_floor(eq.id, eq.dim)
    flags = []
    if s <= floor:
        flags.append(f"s={s:g} at or below the floor {floor:g}")
    seeds = [int(seed) + i for i in range(trials)]
    norms = np.full((len(eps_grid), len(resolutions), trials), np.nan)
    blowups = []
    for j, n in enumerate(resolutions):
        grid = Grid(eq.dim, n, L)
        for r, sd in enumerate(seeds):
            u0 = make_rough_data(RoughDataSpec(s, sd, amplitude, profile), grid, real=model.real)
            try:
                z = duhamel_residual(model, u0, t, dt_factor=dt_factor)
            except SolverBlowup as exc:
                blowups.append({"n": n, "seed": sd, **exc.diagnostics})
                continue
            for i, e in enumerate(eps_grid):
                norms[i, j, r] = sobolev_norm(z, s + e)
    med = np.full(norms.shape[:2], np.nan)
    for i in range(len(eps_grid)):
        for j in range(len(resolutions)):
            cell = norms[i, j]
            if np.all(np.isfinite(cell)):
                med[i, j] = float(np.median(cell))
    verdicts = [classify_row(row) for row in med]
    verdicts, mflags = enforce_monotone(eps_grid, verdicts)
    flags += mflags
    if blowups:
        flags.append(f"{len(blowups)} trial(s) aborted; affected cells are inconclusive")
    return SmoothingReport(eq.id, float(s), float(t), eps_grid, resolutions, med.tolist(), verdicts,
                           trials, seeds, flags, blowups,
                           {"amplitude": amplitude, "L": L, "dim": eq.dim, "profile": profile,
                            "dt_factor": dt_factor, "focusing": eq.focusing,
                            "renormalize": renormalize,
                            "predicted_order": None if eq.id == "mkdv" else predicted_order(eq.id, eq.dim, s)})
