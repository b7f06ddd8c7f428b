"""Brute-force check of the dualized multilinear form on a small frequency lattice."""
from dataclasses import dataclass

import numpy as np

from smoothlab import kernels
from smoothlab.estimate_lab.specs import B_DEFAULT
from smoothlab.phase_models import get_equation, jap

MAX_GRID = {1: 64, 2: 16}


@dataclass(frozen=True)
class MultilinearResult:
    lhs: np.ndarray
    rhs: np.ndarray
    ratios: np.ndarray
    grid_size: int
    b_prime: float

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else 0.0


def lattice(dim, n):
    """Integer points of ``[-n/2, n/2)^dim`` in row-major order."""
    ax = np.arange(-(n // 2), n - n // 2)
    mesh = np.meshgrid(*([ax] * dim), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def discrete_multilinear_check(equation, s, epsilon, grid_size, trials=100, seed=0,
                               b=B_DEFAULT, sequences=None, dim=None):
    """Compare ``|sum_Gamma W(Xi) <Phi>^b' conj(v(xi)) prod v_j(xi_j)|`` with ``|v| prod |v_j|``.

    ``W = m(xi) <xi>^(s+eps) / prod <xi_j>^s`` on unit-spaced lattice points and
    ``b' = b - 1 + 0.01``. ``sequences`` may supply the test data as an array
    ``(trials, k + 1, P)``; otherwise unit-variance complex Gaussians are drawn.
    """
    eq = get_equation(equation, dim) if isinstance(equation, str) else equation
    d = eq.dim
    if grid_size > MAX_GRID.get(d, 0):
        raise ValueError(f"grid_size {grid_size} too large for brute force in d={d}")
    nl = eq.nonlinearity.with_regularity(s, epsilon)
    coords = lattice(d, grid_size)
    xi = coords.astype(float)
    phi = eq.dispersion(xi)
    out_w = nl.multiplier(xi) * jap(xi) ** nl.s_prime
    in_w = jap(xi) ** (-nl.s)
    b_prime = b - 1.0 + 0.01
    if sequences is None:
        rng = np.random.default_rng(seed)
        shape = (trials, nl.k + 1, coords.shape[0])
        V = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    else:
        V = np.asarray(sequences, dtype=np.complex128)
    lhs = np.abs(kernels.lattice_form(coords, grid_size, nl.signs, phi, out_w, in_w, b_prime, V))
    rhs = np.prod(np.linalg.norm(V, axis=2), axis=1)
    ratios = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), 0.0)
    return MultilinearResult(lhs, rhs, ratios, grid_size, b_prime)


def grid_refinement(equation, s, epsilon, sizes=(32, 64), trials=100, seed=0, dim=None):
    """Max ratio per grid size; the readout for stability under doubling."""
    return [discrete_multilinear_check(equation, s, epsilon, n, trials, seed, dim=dim).max_ratio
            for n in sizes]
