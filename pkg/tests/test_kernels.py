import itertools
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothlab import _pykernels, kernels

try:
    from smoothlab import _kernels
except ImportError:
    _kernels = None

BACKENDS = [_pykernels] + ([_kernels] if _kernels is not None else [])
needs_compiled = pytest.mark.skipif(_kernels is None, reason="compiled extension not built")


def brute_sum(phi, w, alpha, M, slack=0.0):
    return float(sum(wi for p, wi in zip(phi, w) if abs(p - alpha) < M + slack))


def bracket(phi, w, alpha, M):
    """Sums over the window with points within rounding of its edge excluded / included."""
    tol = 1e-12 * (1.0 + abs(alpha) + M)
    return brute_sum(phi, w, alpha, M, -tol), brute_sum(phi, w, alpha, M, tol)


samples = st.lists(st.tuples(st.floats(-10, 10), st.floats(0, 5)), min_size=0, max_size=40)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__)
@settings(max_examples=150, deadline=None)
@given(samples, st.floats(0.01, 4.0), st.floats(-12, 0), st.floats(0, 12))
def test_window_max_is_attained_and_maximal(mod, pts, M, lo, hi):
    pts = sorted(pts)
    phi = np.array([p for p, _ in pts], dtype=float)
    w = np.array([x for _, x in pts], dtype=float)
    best, alpha = mod.window_max(phi, w, M, lo, hi)
    assert lo <= alpha <= hi
    # the reported alpha realizes the reported value
    low, high = bracket(phi, w, alpha, M)
    assert low - 1e-9 <= best <= high + 1e-9
    # no alpha in the box does better: candidates are box edges and points shifted by just under M
    cands = [lo, hi] + [p + s * M * (1 - 1e-9) for p in phi for s in (-1, 1)]
    for a in cands:
        if lo <= a <= hi:
            assert bracket(phi, w, a, M)[0] <= best + 1e-9


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__)
def test_window_max_edge_cases(mod):
    empty = np.zeros(0)
    assert mod.window_max(empty, empty, 1.0, -1.0, 1.0) == (0.0, -1.0)
    phi, w = np.array([0.0, 0.5, 10.0]), np.array([1.0, 1.0, 5.0])
    # the heavy point lies outside the alpha box and more than M from it
    best, alpha = mod.window_max(phi, w, 1.0, -2.0, 2.0)
    assert best == 2.0 and -2.0 <= alpha <= 2.0
    # reachable through the box edge
    best, alpha = mod.window_max(phi, w, 9.5, -2.0, 2.0)
    assert best == 7.0


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__)
@settings(max_examples=100, deadline=None)
@given(samples, st.lists(st.floats(-12, 12), min_size=1, max_size=10), st.floats(0.01, 4.0))
def test_window_sums_brute_force(mod, pts, alphas, M):
    pts = sorted(pts)
    phi = np.array([p for p, _ in pts], dtype=float)
    w = np.array([x for _, x in pts], dtype=float)
    got = mod.window_sums(phi, w, np.array(alphas, dtype=float), M)
    for g, a in zip(got, alphas):
        low, high = bracket(phi, w, a, M)
        assert low - 1e-9 <= g <= high + 1e-9


def lattice_brute(coords, n, signs, phi, out_w, in_w, bexp, V):
    k = len(signs) - 1
    half = n // 2
    index = {tuple(c): i for i, c in enumerate(coords.tolist())}
    acc = np.zeros(V.shape[0], dtype=complex)
    for tup in itertools.product(range(len(coords)), repeat=k):
        out = sum(signs[j + 1] * coords[tup[j]] for j in range(k)).astype(int)
        if np.any(out < -half) or np.any(out >= n - half):
            continue
        p0 = index[tuple(out.tolist())]
        Phi = phi[p0] - sum(signs[j + 1] * phi[tup[j]] for j in range(k))
        wt = out_w[p0] * np.prod([in_w[i] for i in tup]) * (1 + Phi**2) ** (bexp / 2)
        term = np.conj(V[:, 0, p0]) * wt
        for j, i in enumerate(tup):
            v = V[:, j + 1, i]
            term = term * (np.conj(v) if signs[j + 1] < 0 else v)
        acc += term
    return acc


def lattice_case(d, n, signs, seed=0, trials=3):
    rng = np.random.default_rng(seed)
    axes = [np.arange(n) - n // 2] * d
    coords = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    P = coords.shape[0]
    phi = rng.standard_normal(P)
    ow, iw = rng.random(P), rng.random(P)
    V = rng.standard_normal((trials, len(signs), P)) + 1j * rng.standard_normal((trials, len(signs), P))
    return coords, n, np.array(signs, dtype=float), phi, ow, iw, -0.49, V


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__)
@pytest.mark.parametrize("d,n,signs", [(1, 8, [-1, 1, 1, 1]), (1, 6, [-1, 1, -1, 1]),
                                       (2, 4, [-1, 1, -1, 1]), (1, 6, [-1, 1, 1, 1, 1])])
def test_lattice_form_brute_force(mod, d, n, signs):
    args = lattice_case(d, n, signs)
    assert np.allclose(mod.lattice_form(*args), lattice_brute(*args), rtol=1e-12, atol=1e-12)


def test_lattice_form_chunking_is_invisible():
    args = lattice_case(1, 8, [-1, 1, 1, 1])
    assert np.allclose(_pykernels.lattice_form(*args, chunk=7), _pykernels.lattice_form(*args), atol=1e-12)


@needs_compiled
def test_backends_agree_on_large_inputs():
    rng = np.random.default_rng(5)
    phi = np.sort(rng.normal(size=50_000))
    w = rng.random(phi.size)
    a = _pykernels.window_max(phi, w, 1e-2, -2.0, 2.0)
    b = _kernels.window_max(phi, w, 1e-2, -2.0, 2.0)
    assert a[0] == pytest.approx(b[0], rel=1e-12) and a[1] == pytest.approx(b[1], abs=1e-12)
    alphas = np.linspace(-3, 3, 1000)
    assert np.allclose(_pykernels.window_sums(phi, w, alphas, 0.05),
                       _kernels.window_sums(phi, w, alphas, 0.05), rtol=1e-12)
    args = lattice_case(1, 16, [-1, 1, -1, 1, -1, 1], trials=2)
    assert np.allclose(_pykernels.lattice_form(*args), _kernels.lattice_form(*args), rtol=1e-10)


def test_dispatch_exports():
    assert kernels.BACKEND in ("cython", "python")
    for name in ("window_max", "window_sums", "lattice_form"):
        assert getattr(kernels, name) is getattr(kernels.backend, name)


@pytest.mark.parametrize("flag,expected", [("1", "python"), ("0", None)])
def test_pure_python_switch(flag, expected):
    env = {**os.environ, "SMOOTHLAB_PURE_PYTHON": flag}
    r = subprocess.run([sys.executable, "-c", "from smoothlab import kernels; print(kernels.BACKEND)"],
                       capture_output=True, text=True, env=env, check=True)
    want = expected or ("cython" if _kernels is not None else "python")
    assert r.stdout.strip() == want


def test_pure_python_pipeline_matches(tmp_path):
    # the same sup estimate through either backend
    code = ("from smoothlab.estimate_lab import engine, specs\n"
            "s = specs.build_spec('quadratic2d', sign=-1, N=8.0, samples=20000)\n"
            "print(repr(engine.alpha_sup(s, (), 4.0, 3)))\n")
    outs = []
    for flag in ("1", "0"):
        env = {**os.environ, "SMOOTHLAB_PURE_PYTHON": flag}
        r = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
        outs.append(eval(r.stdout.strip()))
    assert outs[0][0] == pytest.approx(outs[1][0], rel=1e-12)
    assert outs[0][1] == pytest.approx(outs[1][1], abs=1e-12)
