"""Integrating-factor pseudospectral solvers for ``u_t = i L(D) u + N(u)``.

Nonlinearities:

* derivative family (gKdV, gZK, symmetrized mZK): ``N(u) = i (a . xi) F[u^k]``
* NLS family: ``N(u) = -i * sigma * F[|u|^(k-1) u]`` with ``sigma = +1`` defocusing

Products are formed on a zero-padded grid large enough that the k-fold product
is alias-free on the retained modes, so ``nonlinear_term`` is the exact
truncated convolution.

``renormalize`` subtracts the interactions in which a proper group of input
frequencies cancels (``xi_i + xi_j = 0``, and for quartic terms also triples).
On a torus these carry positive weight and act as a mode-wise phase rotation or
a drift, ``i xi c u_hat``; on the line they form a null set. The subtraction is
Wick ordering with the instantaneous moments, which also over-counts the
diagonal terms where a mode pairs with itself; their weight is one mode out of
the whole spectrum and vanishes as the box grows.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from smoothlab.phase_models import Equation, get_equation, jap
from smoothlab.spectral.grid import Grid, SpectralState, from_padded, to_padded

BLOWUP_FACTOR = 1e6
DT_FACTOR = 0.4


class SolverBlowup(RuntimeError):
    """The l2 norm grew past the abort threshold (or became non-finite)."""

    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Model:
    """An equation bound to solver switches."""

    equation: Equation
    linear_only: bool = False
    renormalize: bool = False

    @property
    def k(self):
        return self.equation.k

    @property
    def real(self):
        return self.equation.real


def as_model(equation, dim=None, focusing=False, linear_only=False, renormalize=False) -> Model:
    if isinstance(equation, Model):
        return equation
    eq = get_equation(equation, dim, focusing) if isinstance(equation, str) else equation
    return Model(eq, linear_only, renormalize)


def linear_symbol(model, grid: Grid) -> np.ndarray:
    eq = as_model(model).equation
    return np.where(grid.mask, eq.linear_symbol(grid.xi), 0.0)


def max_symbol(model, grid: Grid) -> float:
    return float(np.max(np.abs(linear_symbol(model, grid))))


def default_dt(model, grid: Grid, factor=DT_FACTOR) -> float:
    top = max_symbol(model, grid)
    return factor / top if top > 0 else factor


def linear_propagate(state: SpectralState, dt, model) -> SpectralState:
    """Exact flow of the linear part: multiply every mode by ``exp(i dt L(xi))``."""
    sym = linear_symbol(model, state.grid)
    return state.copy(np.exp(1j * dt * sym) * state.coeffs, state.time + dt)


def _power(u, model: Model):
    eq = model.equation
    k = eq.k
    if eq.family == "nls":
        a2 = np.abs(u) ** 2
        if not model.renormalize:
            return a2 ** ((k - 1) // 2) * u
        P = np.mean(a2)
        if k == 3:
            return (a2 - 2.0 * P) * u
        if k == 5:
            return (a2 * a2 - 6.0 * P * a2 + 6.0 * P * P) * u
        raise ValueError(f"no renormalization for NLS power {k}")
    if model.real:
        u = u.real
    if not model.renormalize:
        return u ** k
    u2 = u * u
    P2 = np.mean(u2)
    if k == 3:
        return (u2 - 3.0 * P2) * u
    if k == 4:
        return u2 * u2 - 6.0 * P2 * u2 - 4.0 * np.mean(u2 * u) * u
    raise ValueError(f"no renormalization for power {k}")


def _apply_multiplier(prod_hat, model: Model, grid: Grid):
    eq = model.equation
    if eq.family == "nls":
        sigma = -1.0 if eq.focusing else 1.0
        return -1j * sigma * prod_hat
    a = np.asarray(eq.nonlinear_coeffs, dtype=float)
    return 1j * (grid.xi @ a) * prod_hat


def nonlinear_term(state: SpectralState, model) -> SpectralState:
    """``N(u)`` on the retained modes (exact truncated convolution)."""
    model = as_model(model)
    g = state.grid
    if model.linear_only:
        return state.copy(np.zeros_like(state.coeffs))
    u = to_padded(state, g.padded_size(model.k))
    prod_hat = from_padded(_power(u, model), g)
    return state.copy(_apply_multiplier(prod_hat, model, g))


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def _centered(coeffs, grid: Grid):
    """Retained coefficients as a centred array indexed by ``q + qmax``."""
    src, _ = grid.retained_index(grid.n)
    return coeffs[np.ix_(*([src] * grid.dim))]


def brute_force_nonlinear(state: SpectralState, model) -> SpectralState:
    """Same quantity as ``nonlinear_term`` by explicit direct convolution sums."""
    model = as_model(model)
    g = state.grid
    if model.linear_only:
        return state.copy(np.zeros_like(state.coeffs))
    if model.renormalize:
        raise ValueError("the direct-sum oracle covers the plain nonlinearity only")
    eq = model.equation
    c = _centered(state.coeffs, g)
    cbar = np.conj(np.flip(c))  # coefficients of conj(u), still centred
    factors = [cbar if conj else c for conj in eq.nonlinearity.conjugated]
    acc = factors[0]
    for f in factors[1:]:
        acc = signal.convolve(acc, f, method="direct")
    # acc is centred at (k * qmax); read back the retained window
    off = (eq.k - 1) * g.qmax
    win = acc[tuple(slice(off, off + 2 * g.qmax + 1) for _ in range(g.dim))]
    out = np.zeros(g.shape, dtype=np.complex128)
    src, _ = g.retained_index(g.n)
    out[np.ix_(*([src] * g.dim))] = win
    return state.copy(_apply_multiplier(out, model, g))


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------

def step(state: SpectralState, dt, model) -> SpectralState:
    """One integrating-factor RK4 (Lawson) step."""
    model = as_model(model)
    g = state.grid
    sym = linear_symbol(model, g)
    E2 = np.exp(0.5j * dt * sym)
    return _step(state, dt, model, E2, E2 * E2)


def _step(state, dt, model, E2, E):
    c = state.coeffs
    if model.linear_only:
        return state.copy(E * c, state.time + dt)

    def N(v):
        return nonlinear_term(state.copy(v), model).coeffs

    k1 = N(c)
    k2 = N(E2 * (c + 0.5 * dt * k1))
    k3 = N(E2 * c + 0.5 * dt * k2)
    k4 = N(E * c + dt * (E2 * k3))
    new = E * c + (dt / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
    return state.copy(new, state.time + dt)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    steps: int = 0
    dt: float = 0.0

    @property
    def final(self) -> SpectralState:
        return self.states[-1]


def l2(coeffs) -> float:
    return float(np.sqrt(np.sum(np.abs(coeffs) ** 2)))


def solve(u0: SpectralState, T, dt=None, model="kdv4", snapshots=1) -> Trajectory:
    """Integrate to time ``T``; keeps ``snapshots`` evenly spaced states after ``u0``
    (only the endpoint when ``snapshots`` does not divide the step count).

    ``T / dt`` must be (numerically) an integer. Raises ``SolverBlowup`` if the
    l2 norm grows by more than ``BLOWUP_FACTOR`` or stops being finite.
    """
    model = as_model(model)
    g = u0.grid
    if dt is None:
        dt = default_dt(model, g)
        nsteps = max(1, int(np.ceil(T / dt - 1e-9)))
        dt = T / nsteps
    else:
        nsteps = int(round(T / dt))
        if nsteps < 1 or abs(nsteps * dt - T) > 1e-9 * max(1.0, abs(T)):
            raise ValueError("T/dt must be a positive integer")
    if snapshots < 1 or nsteps % snapshots:
        snapshots = 1
    every = nsteps // snapshots
    sym = linear_symbol(model, g)
    E2 = np.exp(0.5j * dt * sym)
    E = E2 * E2
    n0 = max(l2(u0.coeffs), 1e-300)
    traj = Trajectory([u0.time], [u0], nsteps, dt)
    state = u0
    for i in range(1, nsteps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            state = _step(state, dt, model, E2, E)
        nrm = l2(state.coeffs)
        if not np.isfinite(nrm) or nrm > BLOWUP_FACTOR * n0:
            raise SolverBlowup(
                f"l2 norm {nrm:.3e} exceeded {BLOWUP_FACTOR:g} x initial at t={state.time:.6g}",
                {"step": i, "time": state.time, "l2": nrm, "l2_initial": n0, "dt": dt,
                 "equation": model.equation.id, "n": g.n})
        if i % every == 0:
            state = state.copy(time=u0.time + i * dt)
            traj.times.append(state.time)
            traj.states.append(state)
    return traj


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def sobolev_norm(state: SpectralState, sigma) -> float:
    """``(vol * sum <xi>^(2 sigma) |c|^2)^(1/2)`` with ``vol = (2 pi L)^d``.

    ``vol`` makes the sigma = 0 value equal to the L2 norm of the field.
    """
    g = state.grid
    w = jap(g.xi) ** (2.0 * sigma)
    return float(np.sqrt(g.volume * np.sum(w * np.abs(state.coeffs) ** 2)))


def mass(state: SpectralState) -> float:
    """``int |u|^2 dx``."""
    return sobolev_norm(state, 0.0) ** 2


def _energy_symbol(eq: Equation, xi):
    if eq.family == "nls":
        return np.sum(xi * xi, axis=-1)
    if eq.id == "mzk-sym2d":
        x, y = xi[..., 0], xi[..., 1]
        return (x * x - x * y + y * y) / eq.nonlinear_coeffs[0]
    return np.sum(xi * xi, axis=-1)


def hamiltonian(state: SpectralState, model) -> float:
    """Conserved energy of the equation.

    Derivative family: ``int |grad u|^2 / 2 + u^(k+1) / (k+1)`` (quadratic form
    adapted to the symmetrized symbol). NLS: ``int |grad u|^2 + 2 sigma |u|^(k+1) / (k+1)``.
    """
    model = as_model(model)
    eq = model.equation
    g = state.grid
    quad = g.volume * float(np.sum(_energy_symbol(eq, g.xi) * np.abs(state.coeffs) ** 2))
    k = eq.k
    u = to_padded(state, g.padded_size(k))
    cell = g.volume / u.size
    if eq.family == "nls":
        sigma = -1.0 if eq.focusing else 1.0
        pot = cell * float(np.sum(np.abs(u) ** (k + 1)))
        return quad + 2.0 * sigma * pot / (k + 1)
    pot = cell * float(np.sum(u.real ** (k + 1)))
    return 0.5 * quad + pot / (k + 1)
