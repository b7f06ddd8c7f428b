"""Kernel backend selection.

The compiled Cython extension is used when importable; otherwise (or when
``SMOOTHLAB_PURE_PYTHON=1``) the numpy implementations are used. Both expose
``window_max``, ``window_sums`` and ``lattice_form`` with identical semantics.
"""
import os

from smoothlab import _pykernels

python_backend = _pykernels

if os.environ.get("SMOOTHLAB_PURE_PYTHON", "") not in ("", "0"):
    compiled_backend = None
else:
    try:
        from smoothlab import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

window_max = backend.window_max
window_sums = backend.window_sums
lattice_form = backend.lattice_form
