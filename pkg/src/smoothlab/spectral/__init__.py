"""Periodic-box pseudospectral solvers."""
from smoothlab.spectral.grid import (Grid, SpectralState, from_physical, single_mode, to_padded,
                                     zeros)
from smoothlab.spectral.io import CheckpointError, read_checkpoint, write_checkpoint
from smoothlab.spectral.solver import (Model, SolverBlowup, Trajectory, as_model,
                                       brute_force_nonlinear, default_dt, hamiltonian,
                                       linear_propagate, linear_symbol, mass, max_symbol,
                                       nonlinear_term, sobolev_norm, solve, step)

__all__ = [
    "Grid", "SpectralState", "from_physical", "single_mode", "to_padded", "zeros",
    "CheckpointError", "read_checkpoint", "write_checkpoint",
    "Model", "SolverBlowup", "Trajectory", "as_model", "brute_force_nonlinear", "default_dt",
    "hamiltonian", "linear_propagate", "linear_symbol", "mass", "max_symbol",
    "nonlinear_term", "sobolev_norm", "solve", "step",
]
