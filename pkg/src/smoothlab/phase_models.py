"""Dispersion symbols, nonlinearity patterns and total phase functions.

A k-linear interaction is described by a sign vector ``c`` over the frequency
slots ``0..k`` (slot 0 is the output frequency):

* ``c[0] = -1``
* ``c[j] = +1`` for a plain input ``u_j``
* ``c[j] = -1`` for a conjugated input ``conj(u_j)``

With this convention the convolution hyperplane is ``sum_j c[j] * xi_j = 0``
and the total phase is ``Phi = -sum_j c[j] * phi(xi_j)``, i.e.
``phi(xi) - sum_plain phi(xi_j) + sum_conj phi(xi_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

FD_STEP = 1e-5
SCALE_FLOOR = 1e-12


class DegenerateScaleError(ValueError):
    """Raised when a rescaling reference frequency is (numerically) zero."""


def jap(x, axis=-1):
    """Japanese bracket ``(1 + |x|^2)^(1/2)``; vectors are reduced along ``axis``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return np.sqrt(1.0 + x * x)
    return np.sqrt(1.0 + np.sum(x * x, axis=axis))


# ---------------------------------------------------------------------------
# Dispersion symbols
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dispersion:
    """A real homogeneous dispersion symbol ``phi: R^d -> R``.

    ``symbol``, ``gradient`` and ``hessian`` act on arrays whose last axis has
    length ``dim``. When ``gradient``/``hessian`` are omitted they are replaced
    by central finite differences with step ``FD_STEP``.
    """

    name: str
    dim: int
    degree: int
    symbol: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    hessian: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, xi):
        return self.symbol(np.asarray(xi, dtype=float))

    def grad(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.gradient is not None:
            return self.gradient(xi)
        return fd_gradient(self.symbol, xi)

    def hess(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.hessian is not None:
            return self.hessian(xi)
        return fd_hessian(self.symbol, xi)


def fd_gradient(f, x, h=FD_STEP):
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    g = np.empty(x.shape)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        g[..., i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_hessian(f, x, h=FD_STEP):
    """Central-difference Hessian built from differences of ``fd_gradient``-style stencils."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    H = np.empty(x.shape + (d,))
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        for j in range(i, d):
            ej = np.zeros(d)
            ej[j] = h
            val = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)
            H[..., i, j] = val
            H[..., j, i] = val
    return H


def schrodinger(dim: int) -> Dispersion:
    def symbol(x):
        return np.sum(x * x, axis=-1)

    def gradient(x):
        return 2.0 * x

    def hessian(x):
        return np.broadcast_to(2.0 * np.eye(dim), x.shape + (dim,)).copy()

    return Dispersion("schrodinger", dim, 2, symbol, gradient, hessian)


def zakharov_kuznetsov(dim: int) -> Dispersion:
    """``phi(xi) = x_1 |xi|^2``; for ``dim == 1`` this is the Airy symbol ``xi^3``."""

    def symbol(x):
        return x[..., 0] * np.sum(x * x, axis=-1)

    def gradient(x):
        g = 2.0 * x[..., :1] * x
        g[..., 0] = 3.0 * x[..., 0] ** 2 + np.sum(x[..., 1:] ** 2, axis=-1)
        return g

    def hessian(x):
        H = np.zeros(x.shape + (dim,))
        x1 = x[..., 0]
        H[..., 0, 0] = 6.0 * x1
        for j in range(1, dim):
            H[..., 0, j] = 2.0 * x[..., j]
            H[..., j, 0] = 2.0 * x[..., j]
            H[..., j, j] = 2.0 * x1
        return H

    return Dispersion("zk" if dim > 1 else "airy", dim, 3, symbol, gradient, hessian)


def symmetrized_zk() -> Dispersion:
    """``phi(x, y) = x^3 + y^3``."""

    def symbol(x):
        return np.sum(x * x * x, axis=-1)

    def gradient(x):
        return 3.0 * x**2

    def hessian(x):
        H = np.zeros(x.shape + (2,))
        H[..., 0, 0] = 6.0 * x[..., 0]
        H[..., 1, 1] = 6.0 * x[..., 1]
        return H

    return Dispersion("zk-sym", 2, 3, symbol, gradient, hessian)


def airy() -> Dispersion:
    """``phi(xi) = xi^3`` on the line."""
    return zakharov_kuznetsov(1)


# ---------------------------------------------------------------------------
# Nonlinearities
# ---------------------------------------------------------------------------

MULTIPLIER_KINDS = ("gradient_jap", "derivative_x", "unit")


@dataclass(frozen=True)
class NonlinearitySpec:
    k: int
    conjugated: tuple[bool, ...]
    multiplier_power: float = 0.0
    multiplier_kind: str = "unit"
    s: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("arity must be at least 2")
        if len(self.conjugated) != self.k:
            raise ValueError("conjugation mask must have length k")
        if self.multiplier_kind not in MULTIPLIER_KINDS:
            raise ValueError(f"unknown multiplier kind {self.multiplier_kind!r}")
        if self.multiplier_power < 0:
            raise ValueError("multiplier power must be nonnegative")

    @property
    def signs(self) -> np.ndarray:
        """Sign vector over slots ``0..k`` (see module docstring)."""
        c = np.empty(self.k + 1)
        c[0] = -1.0
        c[1:] = [-1.0 if conj else 1.0 for conj in self.conjugated]
        return c

    @property
    def s_prime(self) -> float:
        return self.s + self.epsilon

    def with_regularity(self, s: float, epsilon: float) -> "NonlinearitySpec":
        return NonlinearitySpec(self.k, self.conjugated, self.multiplier_power,
                                self.multiplier_kind, s, epsilon)

    def multiplier(self, xi):
        """``m(Xi)`` as a function of the output frequency (last axis = components)."""
        xi = np.asarray(xi, dtype=float)
        if self.multiplier_kind == "unit" or self.multiplier_power == 0:
            return np.ones(xi.shape[:-1])
        if self.multiplier_kind == "gradient_jap":
            return jap(xi) ** self.multiplier_power
        return np.abs(xi[..., 0]) ** self.multiplier_power


# ---------------------------------------------------------------------------
# Equation registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Equation:
    """A named dispersive equation: dispersion, nonlinearity and solver data.

    ``real`` marks real-valued fields. ``nonlinear_coeffs`` lists the constant
    vector ``a`` in ``N(u) = i (a . xi) * F[u^k]`` for the derivative
    nonlinearities; NLS uses ``N(u) = -i*sign*F[|u|^(k-1) u]`` instead.
    """

    id: str
    dim: int
    dispersion: Dispersion
    nonlinearity: NonlinearitySpec
    real: bool
    family: str
    nonlinear_coeffs: tuple[float, ...] = ()
    linear_sign: float = 1.0
    focusing: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def k(self) -> int:
        return self.nonlinearity.k

    def linear_symbol(self, xi):
        """``L(xi)`` with ``u_t = i L(D) u + N(u)``."""
        return self.linear_sign * self.dispersion(xi)


MU_SYM = 4.0 ** (-1.0 / 3.0)
LAMBDA_SYM = np.sqrt(3.0) * 4.0 ** (-1.0 / 3.0)

EQUATION_IDS = ("nls-cubic", "nls-quintic", "mzk", "mzk-sym2d", "kdv4", "mkdv")

_DEFAULT_DIM = {"nls-cubic": 2, "nls-quintic": 2, "mzk": 2, "mzk-sym2d": 2, "kdv4": 1, "mkdv": 1}


def get_equation(eq_id: str, dim: int | None = None, focusing: bool = False) -> Equation:
    """Look up an equation by string id; ``dim`` defaults per family."""
    if eq_id not in EQUATION_IDS:
        raise KeyError(f"unknown equation {eq_id!r}; known: {', '.join(EQUATION_IDS)}")
    d = _DEFAULT_DIM[eq_id] if dim is None else int(dim)
    if eq_id in ("nls-cubic", "nls-quintic"):
        k = 3 if eq_id == "nls-cubic" else 5
        mask = tuple(bool(j % 2) for j in range(k))  # u, conj u, u, conj u, u
        return Equation(eq_id, d, schrodinger(d), NonlinearitySpec(k, mask), real=False,
                        family="nls", linear_sign=-1.0, focusing=focusing)
    if eq_id == "mzk":
        if d == 1:
            return get_equation("mkdv")
        nl = NonlinearitySpec(3, (False,) * 3, 1.0, "gradient_jap")
        coeffs = (1.0,) + (0.0,) * (d - 1)
        return Equation(eq_id, d, zakharov_kuznetsov(d), nl, real=True, family="gzk",
                        nonlinear_coeffs=coeffs)
    if eq_id == "mzk-sym2d":
        if d != 2:
            raise ValueError("mzk-sym2d is two-dimensional")
        nl = NonlinearitySpec(3, (False,) * 3, 1.0, "gradient_jap")
        return Equation(eq_id, 2, symmetrized_zk(), nl, real=True, family="gzk",
                        nonlinear_coeffs=(MU_SYM, MU_SYM))
    if eq_id == "mkdv":
        if d != 1:
            raise ValueError("mkdv is one-dimensional")
        nl = NonlinearitySpec(3, (False,) * 3, 1.0, "derivative_x")
        return Equation(eq_id, 1, airy(), nl, real=True, family="gzk", nonlinear_coeffs=(1.0,))
    # kdv4
    if d != 1:
        raise ValueError("kdv4 is one-dimensional")
    nl = NonlinearitySpec(4, (False,) * 4, 1.0, "derivative_x")
    return Equation(eq_id, 1, airy(), nl, real=True, family="gzk", nonlinear_coeffs=(1.0,))


# ---------------------------------------------------------------------------
# Frequency tuples on the convolution hyperplane
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrequencyTuple:
    xi: np.ndarray
    inputs: tuple[np.ndarray, ...]

    @property
    def slots(self) -> np.ndarray:
        """All frequencies stacked as ``(k + 1, d)``, slot 0 being the output."""
        return np.vstack([np.atleast_1d(self.xi)] + [np.atleast_1d(v) for v in self.inputs])

    def residual(self, spec: NonlinearitySpec) -> float:
        return float(np.max(np.abs(spec.signs @ self.slots)))

    def on_hyperplane(self, spec: NonlinearitySpec, tol: float = 1e-10) -> bool:
        return self.residual(spec) <= tol


def make_tuple(xi, inputs) -> FrequencyTuple:
    return FrequencyTuple(np.atleast_1d(np.asarray(xi, dtype=float)),
                          tuple(np.atleast_1d(np.asarray(v, dtype=float)) for v in inputs))


def solve_slot(signs: np.ndarray, slots: np.ndarray, dependent: int) -> np.ndarray:
    """Solve ``sum_j signs[j] slots[j] = 0`` for ``slots[dependent]``.

    ``slots`` has shape ``(..., k + 1, d)``; the dependent row is ignored.
    """
    others = np.delete(np.arange(len(signs)), dependent)
    acc = np.tensordot(slots[..., others, :], signs[others], axes=([-2], [0]))
    return -acc / signs[dependent]


def resolve_dependent(spec: NonlinearitySpec, xi, free_inputs: Sequence, dependent_index: int) -> FrequencyTuple:
    """Complete a tuple on the hyperplane; ``dependent_index`` counts inputs from 1."""
    if not 1 <= dependent_index <= spec.k:
        raise ValueError("dependent_index must be in 1..k")
    if len(free_inputs) != spec.k - 1:
        raise ValueError("need k - 1 free inputs")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = xi.shape[0]
    slots = np.zeros((spec.k + 1, d))
    slots[0] = xi
    it = iter(free_inputs)
    for j in range(1, spec.k + 1):
        if j != dependent_index:
            slots[j] = np.atleast_1d(np.asarray(next(it), dtype=float))
    slots[dependent_index] = solve_slot(spec.signs, slots, dependent_index)
    return FrequencyTuple(slots[0], tuple(slots[1:]))


def phase_from_slots(disp: Dispersion, signs: np.ndarray, slots) -> np.ndarray:
    """``Phi = -sum_j signs[j] phi(slot_j)``, vectorized over leading axes of ``slots``."""
    slots = np.asarray(slots, dtype=float)
    return -np.tensordot(disp(slots), signs, axes=([-1], [0]))


def total_phase(disp: Dispersion, spec: NonlinearitySpec, t: FrequencyTuple) -> float:
    return float(phase_from_slots(disp, spec.signs, t.slots))


def _scale_of(slots: np.ndarray, scale_index: int | None) -> float:
    if scale_index is None:
        norms = np.linalg.norm(slots, axis=-1)
        scale = float(np.max(norms))
    else:
        scale = float(np.linalg.norm(slots[scale_index]))
    if scale < SCALE_FLOOR:
        raise DegenerateScaleError(f"reference frequency norm {scale:.3g} below {SCALE_FLOOR}")
    return scale


def rescaled_phase(disp: Dispersion, spec: NonlinearitySpec, t: FrequencyTuple,
                   scale_index: int | None = None) -> float:
    """Scale-free phase ``Phi / |xi_ref|^l``.

    ``scale_index`` selects the reference slot (0 = output); ``None`` uses the
    largest frequency.
    """
    slots = t.slots
    scale = _scale_of(slots, scale_index)
    return float(phase_from_slots(disp, spec.signs, slots / scale))


def rescaled_phase_p(disp: Dispersion, spec: NonlinearitySpec, p_inputs: Sequence) -> float:
    """``P(p_1, ..., p_k)``: the phase at output ``sum c_j p_j`` given unit-scaled inputs."""
    p = np.array([np.atleast_1d(np.asarray(v, dtype=float)) for v in p_inputs])
    slots = np.vstack([np.zeros((1, p.shape[1])), p])
    slots[0] = solve_slot(spec.signs, slots, 0)
    return float(phase_from_slots(disp, spec.signs, slots))


# ---------------------------------------------------------------------------
# Charts: P restricted to a block of differentiation variables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Chart:
    """A rescaled phase viewed as a function of a block of free slots.

    ``values`` holds every slot in rescaled coordinates ``(k + 1, d)``. Slots in
    ``free`` are the variables; ``dependent`` is eliminated through the
    hyperplane; all other slots stay pinned.
    """

    disp: Dispersion
    signs: np.ndarray
    values: np.ndarray
    free: tuple[int, ...]
    dependent: int

    def __post_init__(self):
        if self.dependent in self.free:
            raise ValueError("dependent slot cannot be free")
        if not self.free:
            raise ValueError("need at least one free slot")

    @property
    def dim(self) -> int:
        return self.disp.dim * len(self.free)

    def slots_at(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        d = self.disp.dim
        lead = z.shape[:-1]
        slots = np.broadcast_to(self.values, lead + self.values.shape).copy()
        for a, j in enumerate(self.free):
            slots[..., j, :] = z[..., a * d:(a + 1) * d]
        slots[..., self.dependent, :] = solve_slot(self.signs, slots, self.dependent)
        return slots

    def point(self) -> np.ndarray:
        return np.concatenate([self.values[j] for j in self.free])

    def value(self, z):
        return phase_from_slots(self.disp, self.signs, self.slots_at(z))

    def gradient(self, z) -> np.ndarray:
        """Analytic gradient: ``-c_f grad phi(p_f) + c_f grad phi(p_dep)``."""
        slots = self.slots_at(z)
        c = self.signs
        g_dep = self.disp.grad(slots[..., self.dependent, :])
        parts = [-c[f] * self.disp.grad(slots[..., f, :]) + c[f] * g_dep for f in self.free]
        return np.concatenate(parts, axis=-1)

    def hessian(self, z) -> np.ndarray:
        """Analytic Hessian: ``-c_f delta_fg H(p_f) - (c_f c_g / c_dep) H(p_dep)``."""
        z = np.asarray(z, dtype=float)
        slots = self.slots_at(z)
        c = self.signs
        d = self.disp.dim
        n = len(self.free)
        H_dep = self.disp.hess(slots[..., self.dependent, :])
        out = np.zeros(z.shape[:-1] + (n * d, n * d))
        for a, f in enumerate(self.free):
            for b, g in enumerate(self.free):
                block = -(c[f] * c[g] / c[self.dependent]) * H_dep
                if a == b:
                    block = block - c[f] * self.disp.hess(slots[..., f, :])
                out[..., a * d:(a + 1) * d, b * d:(b + 1) * d] = block
        return out

    def hessian_scale(self, z) -> float:
        """Largest spectral norm among the dispersion Hessians that enter :meth:`hessian`.

        The chart Hessian is a signed sum of these terms, so this is the scale
        against which cancellation to zero should be judged.
        """
        slots = self.slots_at(np.asarray(z, dtype=float))
        idx = list(self.free) + [self.dependent]
        return float(max(np.linalg.norm(self.disp.hess(slots[..., j, :]), 2) for j in idx))


def make_chart(disp: Dispersion, spec: NonlinearitySpec, t: FrequencyTuple, free: Sequence[int],
               dependent: int | None = None, scale_index: int | None = 0) -> Chart:
    """Chart of ``P`` at tuple ``t`` after rescaling by slot ``scale_index``.

    ``dependent`` defaults to the last slot not in ``free`` and not the scale
    reference, following the convention of eliminating the last frequency.
    """
    slots = t.slots
    scale = _scale_of(slots, scale_index)
    free = tuple(int(f) for f in free)
    if dependent is None:
        candidates = [j for j in range(len(slots)) if j not in free and j != scale_index]
        dependent = candidates[-1]
    return Chart(disp, spec.signs, slots / scale, free, int(dependent))


def phase_gradient_hessian(disp: Dispersion, spec: NonlinearitySpec, t: FrequencyTuple,
                           free_block: Sequence[int], dependent: int | None = None,
                           scale_index: int | None = 0):
    """Gradient and Hessian of the rescaled phase in the ``free_block`` slots."""
    chart = make_chart(disp, spec, t, free_block, dependent, scale_index)
    z = chart.point()
    return chart.gradient(z), chart.hessian(z)


# ---------------------------------------------------------------------------
# Two-dimensional symmetrization
# ---------------------------------------------------------------------------

def symmetrize_zk2d(xy):
    """Spatial change of coordinates ``(x, y) -> (mu x + lam y, mu x - lam y)``.

    Under this map ``d_x (d_x^2 + d_y^2)`` becomes ``d_x'^3 + d_y'^3``.
    Frequencies transform with the inverse transpose, see
    :func:`symmetrize_frequency`.
    """
    xy = np.asarray(xy, dtype=float)
    x, y = xy[..., 0], xy[..., 1]
    return np.stack([MU_SYM * x + LAMBDA_SYM * y, MU_SYM * x - LAMBDA_SYM * y], axis=-1)


def symmetrize_frequency(xi):
    """Frequency map dual to :func:`symmetrize_zk2d`: ``zk(xi) == sym(xi')``."""
    xi = np.asarray(xi, dtype=float)
    x, y = xi[..., 0], xi[..., 1]
    a = x / (2 * MU_SYM)
    b = y / (2 * LAMBDA_SYM)
    return np.stack([a + b, a - b], axis=-1)


def unsymmetrize_frequency(xi_sym):
    """Inverse of :func:`symmetrize_frequency` (the transpose of the spatial map)."""
    xi_sym = np.asarray(xi_sym, dtype=float)
    a, b = xi_sym[..., 0], xi_sym[..., 1]
    return np.stack([MU_SYM * (a + b), LAMBDA_SYM * (a - b)], axis=-1)
