"""Binary checkpoints: a fixed little-endian header followed by the coefficients.

Layout::

    int64   dim
    int64   n
    float64 L
    float64 time
    complex n^d coefficients, FFT order, C order, as (re, im) float64 pairs

A JSON sidecar (``<path>.json``) carries free-form metadata.
"""
import json
from pathlib import Path

import numpy as np

from smoothlab.spectral.grid import Grid, SpectralState

HEADER = np.dtype([("dim", "<i8"), ("n", "<i8"), ("L", "<f8"), ("time", "<f8")])
PAYLOAD = np.dtype("<c16")


class CheckpointError(ValueError):
    pass


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_checkpoint(path, state: SpectralState, metadata=None):
    path = Path(path)
    g = state.grid
    head = np.array([(g.dim, g.n, g.L, state.time)], dtype=HEADER)
    with open(path, "wb") as fh:
        fh.write(head.tobytes())
        fh.write(np.ascontiguousarray(state.coeffs, dtype=PAYLOAD).tobytes())
    meta = {"dim": g.dim, "n": g.n, "L": g.L, "time": state.time, "format": "smoothlab-checkpoint-1"}
    meta.update(metadata or {})
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_checkpoint(path):
    """Returns ``(state, metadata)``; metadata is empty when the sidecar is absent."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER.itemsize:
        raise CheckpointError("file shorter than header")
    head = np.frombuffer(raw[:HEADER.itemsize], dtype=HEADER)[0]
    grid = Grid(int(head["dim"]), int(head["n"]), float(head["L"]))
    body = raw[HEADER.itemsize:]
    expected = PAYLOAD.itemsize * int(np.prod(grid.shape))
    if len(body) != expected:
        raise CheckpointError(f"payload has {len(body)} bytes, expected {expected}")
    coeffs = np.frombuffer(body, dtype=PAYLOAD).reshape(grid.shape).astype(np.complex128)
    side = sidecar_path(path)
    meta = json.loads(side.read_text()) if side.exists() else {}
    return SpectralState(grid, coeffs, float(head["time"])), meta
