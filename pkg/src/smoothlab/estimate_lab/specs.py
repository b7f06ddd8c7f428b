"""Restricted-estimate specifications and the named region filters.

A spec describes the integral

    sup_{alpha, fixed}  int_{box(fixed)} weight(fixed, z) 1{|Phi(fixed, z) - alpha| < M} dz

through three callables acting on ``fixed`` (shape ``(n_fixed,)``) and a batch of
integrated points ``z`` (shape ``(S, n_int)``). Regions are folded into the
weight (zero outside).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from smoothlab.phase_models import (Equation, get_equation, jap, phase_from_slots,
                                    solve_slot)

B_DEFAULT = 0.51
B_PRIME_DEFAULT = B_DEFAULT - 1.0 + 0.01

COMPARABLE_RATIO = 2.0  # "|a| ~ |b|": within this factor
SEPARATION_RATIO = 4.0  # "|a| << |b|": smaller by at least this factor


@dataclass(frozen=True)
class RestrictedEstimateSpec:
    name: str
    n_fixed: int
    n_int: int
    phase: Callable
    weight: Callable
    int_box: Callable
    fixed_box: tuple
    alpha_box: Callable
    M_range: tuple
    fixed_set: tuple = (0,)
    integrated_set: tuple = (1,)
    equation: str | None = None
    region: str = "all"
    box: float = 1.0
    degree: int = 2
    hints: tuple = ()
    samples: int = 100_000
    search_samples: int = 20_000
    method: str = "mc"
    restarts: int = 32
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        k = len(self.fixed_set) + len(self.integrated_set)
        universe = set(range(k + 1))
        if not self.fixed_set:
            raise ValueError("fixed set must be nonempty")
        if not set(self.fixed_set) < universe:
            raise ValueError("fixed set must be a proper subset of the slots")
        if set(self.fixed_set) & set(self.integrated_set):
            raise ValueError("fixed and integrated sets overlap")
        if self.method not in ("mc", "grid"):
            raise ValueError("method must be 'mc' or 'grid'")
        if self.restarts < 1:
            raise ValueError("need at least one restart")

    def describe(self) -> dict:
        return {
            "name": self.name,
            "equation": self.equation,
            "region": self.region,
            "fixed_set": list(self.fixed_set),
            "integrated_set": list(self.integrated_set),
            "box": self.box,
            "M_range": list(self.M_range),
            "samples": self.samples,
            "method": self.method,
            "restarts": self.restarts,
            **{k: v for k, v in self.params.items() if isinstance(v, (int, float, str, bool))},
        }


def dyadic(lo_exp, hi_exp):
    return tuple(float(2.0 ** e) for e in range(lo_exp, hi_exp + 1))


# ---------------------------------------------------------------------------
# Model quadratics
# ---------------------------------------------------------------------------

def quadratic_1d(N=128.0, M_range=None, alpha_scale=2.0, **kw):
    """``Phi = p^2`` on ``|p| < N`` with unit weight; the sup runs over alpha only."""
    N = float(N)
    return RestrictedEstimateSpec(
        name="quadratic-1d",
        n_fixed=0,
        n_int=1,
        phase=lambda f, z: z[:, 0] ** 2,
        weight=lambda f, z: np.ones(z.shape[0]),
        int_box=lambda f: (np.array([-N]), np.array([N])),
        fixed_box=(np.zeros(0), np.zeros(0)),
        alpha_box=lambda f: (-alpha_scale * N**2, alpha_scale * N**2),
        M_range=tuple(M_range or dyadic(1, 12)),
        box=N,
        degree=2,
        params={"kind": "quadratic1d", "N": N, "alpha_scale": alpha_scale},
        **kw,
    )


def quadratic_2d(sign, N=8.0, M_range=None, alpha_scale=2.0, **kw):
    """``Phi = p^2 + sign*q^2`` on ``|p|, |q| < N`` with unit weight."""
    N = float(N)
    sign = int(sign)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return RestrictedEstimateSpec(
        name=f"quadratic-2d{'+' if sign > 0 else '-'}",
        n_fixed=0,
        n_int=2,
        phase=lambda f, z: z[:, 0] ** 2 + sign * z[:, 1] ** 2,
        weight=lambda f, z: np.ones(z.shape[0]),
        int_box=lambda f: (np.array([-N, -N]), np.array([N, N])),
        fixed_box=(np.zeros(0), np.zeros(0)),
        alpha_box=lambda f: (-alpha_scale * N**2, alpha_scale * N**2),
        M_range=tuple(M_range or dyadic(1, 6)),
        fixed_set=(0,),
        integrated_set=(1, 2),
        box=N,
        degree=2,
        params={"kind": "quadratic2d", "sign": sign, "N": N, "alpha_scale": alpha_scale},
        **kw,
    )


# ---------------------------------------------------------------------------
# Comparable-frequency mKdV region
# ---------------------------------------------------------------------------

def mkdv_phase(x, x1, x2):
    """``x^3 - x1^3 - x2^3 - x3^3`` with ``x3 = x - x1 - x2``."""
    x3 = x - x1 - x2
    return x * x * x - x1 * x1 * x1 - x2 * x2 * x2 - x3 * x3 * x3


def comparable_mask(ref, *others, ratio=COMPARABLE_RATIO):
    ref = np.abs(ref)
    ok = np.ones(np.broadcast(ref, *others).shape, dtype=bool)
    for o in others:
        o = np.abs(o)
        ok &= (o * ratio >= ref) & (o <= ratio * ref)
    return ok


def mkdv_comparable(s, N=64.0, M_range=None, **kw):
    """Weight ``<x>^(2(1-2s))`` on ``{|x| ~ |x1| ~ |x2| ~ |x3|}``, sup over ``|x| <= N``.

    The integration box for ``(x1, x2)`` follows the fixed output: comparability
    forces ``|x_j| <= 2|x|``.
    """
    N = float(N)
    r = COMPARABLE_RATIO

    def phase(f, z):
        return mkdv_phase(f[0], z[:, 0], z[:, 1])

    def weight(f, z):
        x = f[0]
        x3 = x - z[:, 0] - z[:, 1]
        ok = comparable_mask(x, z[:, 0], z[:, 1], x3)
        return np.where(ok, (1.0 + x * x) ** (1.0 - 2.0 * s), 0.0)

    def int_box(f):
        R = r * abs(f[0])
        return np.array([-R, -R]), np.array([R, R])

    def alpha_box(f):
        R = r * max(abs(f[0]), 1.0)
        return -4.0 * R**3, 4.0 * R**3

    hints = tuple(np.array([v]) for v in (N, -N, 1.0, 4.0, 16.0))
    return RestrictedEstimateSpec(
        name="mkdv-comparable",
        n_fixed=1,
        n_int=2,
        phase=phase,
        weight=weight,
        int_box=int_box,
        fixed_box=(np.array([-N]), np.array([N])),
        alpha_box=alpha_box,
        M_range=tuple(M_range or dyadic(1, 12)),
        fixed_set=(0,),
        integrated_set=(1, 2),
        equation="mkdv",
        region="comparable",
        box=N,
        degree=3,
        hints=hints,
        params={"kind": "mkdv_comparable", "s": s, "N": N},
        **kw,
    )


# ---------------------------------------------------------------------------
# Region filters on slot arrays (S, k+1, d)
# ---------------------------------------------------------------------------

def _norms(slots):
    return np.linalg.norm(slots, axis=-1)


def region_all(slots):
    return np.ones(slots.shape[0], dtype=bool)


def region_high(slots):
    """Output frequency above unit size."""
    return _norms(slots)[:, 0] > 1.0


def region_ordered(slots):
    """``|xi| >= |xi_1| >= ... >= |xi_k|`` (the symmetric reduction)."""
    n = _norms(slots)
    return np.all(n[:, :-1] >= n[:, 1:], axis=1)


def region_comparable(slots):
    """Every frequency within ``COMPARABLE_RATIO`` of the output."""
    n = _norms(slots)
    return comparable_mask(n[:, :1], *[n[:, j:j + 1] for j in range(1, n.shape[1])]).all(axis=1)


def region_separated(slots):
    """The smallest input is much smaller than the largest one."""
    n = _norms(slots)[:, 1:]
    return n.min(axis=1) * SEPARATION_RATIO <= n.max(axis=1)


def _cross_products(slots):
    # |x - x_j| |y - y_j| for each input j (two-dimensional charts)
    diff = slots[:, :1, :] - slots[:, 1:, :]
    return np.abs(diff[..., 0]) * np.abs(diff[..., 1])


def region_a1(slots):
    """Comparable frequencies with some ``|x - x_j||y - y_j| >~ |xi|``."""
    if slots.shape[-1] != 2:
        raise ValueError("region 'a1' is two-dimensional")
    big = _cross_products(slots) * COMPARABLE_RATIO >= _norms(slots)[:, :1]
    return region_comparable(slots) & big.any(axis=1)


def region_a2(slots):
    """Comparable frequencies with every ``|x - x_j||y - y_j| << |xi|``."""
    if slots.shape[-1] != 2:
        raise ValueError("region 'a2' is two-dimensional")
    small = _cross_products(slots) * SEPARATION_RATIO <= _norms(slots)[:, :1]
    return region_comparable(slots) & small.all(axis=1)


REGIONS = {
    "all": region_all,
    "high": region_high,
    "ordered": region_ordered,
    "comparable": region_comparable,
    "separated": region_separated,
    "a1": region_a1,
    "a2": region_a2,
}


def resolve_region(name):
    """Intersection of ``+``-joined region names, e.g. ``"high+ordered+a1"``."""
    parts = [p.strip() for p in name.split("+") if p.strip()]
    unknown = [p for p in parts if p not in REGIONS]
    if unknown:
        raise KeyError(f"unknown region(s) {unknown}; known: {sorted(REGIONS)}")
    fns = [REGIONS[p] for p in parts] or [region_all]

    def pred(slots):
        ok = fns[0](slots)
        for fn in fns[1:]:
            ok &= fn(slots)
        return ok

    return pred


# ---------------------------------------------------------------------------
# Equation-driven specs
# ---------------------------------------------------------------------------

def multiplier_weight(eq: Equation, slots, power=1):
    """``(m(xi) <xi>^s' / prod <xi_j>^s)^power`` on slot arrays."""
    nl = eq.nonlinearity
    w = nl.multiplier(slots[:, 0, :]) * jap(slots[:, 0, :]) ** nl.s_prime
    for j in range(1, nl.k + 1):
        w = w / jap(slots[:, j, :]) ** nl.s
    return w**power


def equation_spec(eq_id, fixed_set, integrated_set, s=0.0, epsilon=0.0, dim=None,
                  region="all", weight_power=1, N=16.0, M_range=None, alpha_scale=2.0,
                  name=None, hints=(), **kw):
    """Spec for ``sup int (M or M^2) 1{|Phi - alpha| < M}`` of a registered equation.

    Slots in ``fixed_set`` are supped over, slots in ``integrated_set`` are
    integrated, and the one remaining slot is eliminated through the
    convolution constraint. Every frequency is truncated to ``[-N, N]^d``.
    """
    eq = get_equation(eq_id, dim)
    nl = eq.nonlinearity.with_regularity(s, epsilon)
    eq = Equation(eq.id, eq.dim, eq.dispersion, nl, eq.real, eq.family,
                  eq.nonlinear_coeffs, eq.linear_sign, eq.focusing)
    k, d = nl.k, eq.dim
    fixed_set = tuple(int(j) for j in fixed_set)
    integrated_set = tuple(int(j) for j in integrated_set)
    rest = sorted(set(range(k + 1)) - set(fixed_set) - set(integrated_set))
    if len(rest) != 1:
        raise ValueError("fixed and integrated sets must leave exactly one dependent slot")
    dep = rest[0]
    signs = nl.signs
    pred = resolve_region(region)
    N = float(N)
    l = eq.dispersion.degree

    def slots_of(f, z):
        S = z.shape[0]
        slots = np.zeros((S, k + 1, d))
        for a, j in enumerate(fixed_set):
            slots[:, j, :] = f[a * d:(a + 1) * d]
        for a, j in enumerate(integrated_set):
            slots[:, j, :] = z[:, a * d:(a + 1) * d]
        slots[:, dep, :] = solve_slot(signs, slots, dep)
        return slots

    def phase(f, z):
        return phase_from_slots(eq.dispersion, signs, slots_of(f, z))

    def weight(f, z):
        slots = slots_of(f, z)
        inside = np.all(np.abs(slots[:, dep, :]) <= N, axis=1) & pred(slots)
        return np.where(inside, multiplier_weight(eq, slots, weight_power), 0.0)

    nf, ni = d * len(fixed_set), d * len(integrated_set)
    amax = alpha_scale * (k + 1) * (k * N) ** l
    return RestrictedEstimateSpec(
        name=name or f"{eq_id}-{region}",
        n_fixed=nf,
        n_int=ni,
        phase=phase,
        weight=weight,
        int_box=lambda f: (np.full(ni, -N), np.full(ni, N)),
        fixed_box=(np.full(nf, -N), np.full(nf, N)),
        alpha_box=lambda f: (-amax, amax),
        M_range=tuple(M_range or dyadic(1, 8)),
        fixed_set=fixed_set,
        integrated_set=integrated_set,
        equation=eq_id,
        region=region,
        box=N,
        degree=l,
        hints=tuple(np.asarray(h, dtype=float) for h in hints),
        params={"kind": "equation", "s": s, "epsilon": epsilon, "dim": d,
                "weight_power": weight_power, "dependent": dep, "N": N},
        **kw,
    )


SPEC_KINDS = {
    "quadratic1d": quadratic_1d,
    "quadratic2d": quadratic_2d,
    "mkdv_comparable": mkdv_comparable,
    "equation": equation_spec,
}


def build_spec(kind, **params):
    if kind not in SPEC_KINDS:
        raise KeyError(f"unknown spec kind {kind!r}; known: {sorted(SPEC_KINDS)}")
    return SPEC_KINDS[kind](**params)
