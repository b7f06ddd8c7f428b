"""Frequency-restricted sublevel estimates: specs, sampling engine and oracles."""
from smoothlab.estimate_lab.engine import (BetaFit, SublevelResult, SupResult, Witness, alpha_sup,
                                           fit_beta, sublevel_integral, sup_scan)
from smoothlab.estimate_lab.multilinear import MultilinearResult, discrete_multilinear_check
from smoothlab.estimate_lab.oracles import (QuadratureError, quadratic_sublevel_1d, quadratic_sublevel_2d,
                                            tau_bound_constant, tau_bound_sweep, tau_convolution_bound)
from smoothlab.estimate_lab.specs import (RestrictedEstimateSpec, build_spec, dyadic, equation_spec,
                                          mkdv_comparable, quadratic_1d, quadratic_2d)
