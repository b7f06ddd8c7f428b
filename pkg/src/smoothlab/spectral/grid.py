"""Periodic grids and spectral states.

A field on the box ``[0, 2*pi*L)^d`` is stored through its Fourier coefficients
``c_q`` (``u(x) = sum_q c_q exp(i q.x / L)``), so the frequency of mode ``q`` is
``xi = q / L``. Coefficients sit in FFT order on an ``n^d`` array; the Nyquist
row of every axis is kept at zero so that real fields stay Hermitian.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

MIN_MODES = 16
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    dim: int
    n: int
    L: float = 8.0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if self.n < MIN_MODES or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= {MIN_MODES}")
        if not self.L > 0:
            raise ValueError("box length must be positive")

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def volume(self) -> float:
        return float((2.0 * np.pi * self.L) ** self.dim)

    @property
    def qmax(self) -> int:
        """Largest retained integer mode per axis."""
        return self.n // 2 - 1

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer modes in FFT order along one axis."""
        return np.rint(np.fft.fftfreq(self.n, 1.0 / self.n)).astype(np.int64)

    @cached_property
    def xi(self) -> np.ndarray:
        """Frequencies with shape ``shape + (dim,)``."""
        ax = self.modes / self.L
        mesh = np.meshgrid(*([ax] * self.dim), indexing="ij")
        out = np.stack(mesh, axis=-1)
        out.setflags(write=False)
        return out

    @cached_property
    def mask(self) -> np.ndarray:
        """Retained modes: every component strictly below ``n/2`` in size."""
        ok1 = np.abs(self.modes) <= self.qmax
        m = ok1
        for _ in range(self.dim - 1):
            m = m[..., None] & ok1
        m = np.broadcast_to(m, self.shape).copy()
        m.setflags(write=False)
        return m

    def padded_size(self, k: int) -> int:
        """Smallest fast FFT length on which a k-fold product is alias-free on retained modes."""
        return sfft.next_fast_len((k + 1) * self.qmax + 1)

    def x(self) -> np.ndarray:
        """Physical grid points along one axis."""
        return 2.0 * np.pi * self.L * np.arange(self.n) / self.n

    def retained_index(self, size):
        """Index arrays placing retained modes of this grid into an FFT array of ``size``."""
        q = np.arange(-self.qmax, self.qmax + 1)
        return q % self.n, q % size


@dataclass
class SpectralState:
    grid: Grid
    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}")

    def copy(self, coeffs=None, time=None) -> "SpectralState":
        return SpectralState(self.grid, self.coeffs.copy() if coeffs is None else coeffs,
                             self.time if time is None else time)

    def hermitian_defect(self) -> float:
        """``max |c(-q) - conj(c(q))|``; zero for real fields."""
        c = self.coeffs
        flipped = np.conj(np.roll(np.flip(c), 1, axis=tuple(range(c.ndim))))
        return float(np.max(np.abs(c - flipped))) if c.size else 0.0

    def physical(self) -> np.ndarray:
        """Field values on the ``n^d`` grid."""
        return sfft.ifftn(self.coeffs) * self.coeffs.size


def zeros(grid: Grid, time=0.0) -> SpectralState:
    return SpectralState(grid, np.zeros(grid.shape, dtype=np.complex128), time)


def from_physical(grid: Grid, u, time=0.0) -> SpectralState:
    """Coefficients of grid values ``u``; modes outside the retained set are dropped."""
    c = sfft.fftn(np.asarray(u)) / np.asarray(u).size
    return SpectralState(grid, np.where(grid.mask, c, 0.0), time)


def single_mode(grid: Grid, q, amplitude=1.0, real=False) -> SpectralState:
    """``amplitude * exp(i q.x/L)``, or its real part (both +q and -q) when ``real``."""
    q = tuple(int(v) for v in np.atleast_1d(q))
    if len(q) != grid.dim or max(abs(v) for v in q) > grid.qmax:
        raise ValueError("mode outside the retained set")
    c = np.zeros(grid.shape, dtype=np.complex128)
    idx = tuple(v % grid.n for v in q)
    if real:
        neg = tuple(-v % grid.n for v in q)
        c[idx] += 0.5 * amplitude
        c[neg] += 0.5 * np.conj(amplitude)
    else:
        c[idx] = amplitude
    return SpectralState(grid, c)


def to_padded(state: SpectralState, size: int) -> np.ndarray:
    """Physical values on a ``size^d`` grid (trigonometric interpolation)."""
    g = state.grid
    src, dst = g.retained_index(size)
    big = np.zeros((size,) * g.dim, dtype=np.complex128)
    big[np.ix_(*([dst] * g.dim))] = state.coeffs[np.ix_(*([src] * g.dim))]
    return sfft.ifftn(big, workers=-1) * big.size


def from_padded(values, grid: Grid) -> np.ndarray:
    """Retained coefficients (``grid`` layout) of values sampled on a padded grid."""
    size = values.shape[0]
    big = sfft.fftn(values, workers=-1) / values.size
    src, dst = grid.retained_index(size)
    out = np.zeros(grid.shape, dtype=np.complex128)
    out[np.ix_(*([src] * grid.dim))] = big[np.ix_(*([dst] * grid.dim))]
    return out
