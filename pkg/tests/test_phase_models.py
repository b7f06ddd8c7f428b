import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothlab import phase_models as pm
from smoothlab.phase_models import (DegenerateScaleError, get_equation, make_chart, make_tuple,
                                    phase_gradient_hessian, rescaled_phase, rescaled_phase_p,
                                    resolve_dependent, total_phase)

DISPERSIONS = [pm.schrodinger(1), pm.schrodinger(2), pm.schrodinger(3), pm.zakharov_kuznetsov(2),
               pm.zakharov_kuznetsov(3), pm.symmetrized_zk(), pm.airy()]
EQUATIONS = [("nls-cubic", 1), ("nls-cubic", 2), ("nls-quintic", 2), ("mzk", 2), ("mzk", 3),
             ("mzk-sym2d", 2), ("kdv4", 1), ("mkdv", 1)]

coord = st.floats(-5, 5, allow_nan=False)
lam = st.floats(0.1, 10)


def vec(d):
    return st.lists(coord, min_size=d, max_size=d).map(np.array)


def cubic_kdv_spec():
    return pm.NonlinearitySpec(3, (False, False, False))


def test_jap():
    assert pm.jap(0.0) == 1.0
    assert pm.jap(np.array([3.0, 4.0])) == pytest.approx(np.sqrt(26.0))
    assert pm.jap(np.zeros((5, 2))).shape == (5,)


@pytest.mark.parametrize("disp", DISPERSIONS, ids=lambda d: f"{d.name}{d.dim}")
@settings(max_examples=50, deadline=None)
@given(data=st.data(), scale=lam)
def test_dispersion_homogeneous(disp, data, scale):
    xi = data.draw(vec(disp.dim))
    assert disp(scale * xi) == pytest.approx(scale ** disp.degree * disp(xi), rel=1e-10, abs=1e-9)


@pytest.mark.parametrize("disp", DISPERSIONS, ids=lambda d: f"{d.name}{d.dim}")
def test_closed_forms_match_finite_differences(disp):
    rng = np.random.default_rng(1)
    xi = rng.uniform(0.5, 2.0, size=(20, disp.dim)) * rng.choice([-1, 1], size=(20, disp.dim))
    g = disp.grad(xi)
    g_fd = pm.fd_gradient(disp.symbol, xi)
    np.testing.assert_allclose(g, g_fd, rtol=1e-6, atol=1e-8)
    H = disp.hess(xi)
    H_fd = pm.fd_hessian(disp.symbol, xi, h=1e-4)
    np.testing.assert_allclose(H, H_fd, rtol=1e-4, atol=1e-5)


def test_user_dispersion_falls_back_to_finite_differences():
    disp = pm.Dispersion("quartic", 1, 4, lambda x: np.sum(x ** 4, axis=-1))
    assert disp.grad(np.array([2.0]))[0] == pytest.approx(32.0, rel=1e-6)
    assert disp.hess(np.array([1.0]))[0, 0] == pytest.approx(12.0, rel=1e-4)


def test_sign_vector_follows_conjugation():
    nls = get_equation("nls-cubic", 1).nonlinearity
    assert nls.conjugated == (False, True, False)
    np.testing.assert_array_equal(nls.signs, [-1, 1, -1, 1])
    quintic = get_equation("nls-quintic", 2).nonlinearity
    assert quintic.conjugated == (False, True, False, True, False)
    for eq_id in ("mzk", "mzk-sym2d", "kdv4", "mkdv"):
        assert not any(get_equation(eq_id).nonlinearity.conjugated)


def test_nonlinearity_validation():
    with pytest.raises(ValueError):
        pm.NonlinearitySpec(1, (False,))
    with pytest.raises(ValueError):
        pm.NonlinearitySpec(3, (False, False))
    with pytest.raises(ValueError):
        pm.NonlinearitySpec(3, (False,) * 3, -1.0)
    with pytest.raises(ValueError):
        pm.NonlinearitySpec(3, (False,) * 3, 1.0, "laplacian")
    nl = pm.NonlinearitySpec(3, (False,) * 3).with_regularity(0.3, 0.2)
    assert nl.s_prime == pytest.approx(0.5)


def test_registry():
    with pytest.raises(KeyError):
        get_equation("kdv5")
    with pytest.raises(ValueError):
        get_equation("kdv4", 2)
    assert get_equation("mzk", 1).id == "mkdv"
    assert get_equation("nls-cubic").dim == 2
    assert get_equation("mzk", 3).dispersion.dim == 3


# -- convolution hyperplane --------------------------------------------------

def test_resolve_dependent_examples():
    nls = get_equation("nls-cubic", 1).nonlinearity
    t = resolve_dependent(nls, 1.0, [2.0, 0.0], 2)
    assert t.inputs[1][0] == pytest.approx(1.0)
    kdv4 = get_equation("kdv4").nonlinearity
    t = resolve_dependent(kdv4, 0.0, [0.0, 0.0, 0.0], 4)
    assert t.inputs[3][0] == 0.0
    mzk = get_equation("mzk", 2).nonlinearity
    t = resolve_dependent(mzk, [3.0, 0.0], [[1.0, 0.0], [1.0, 0.0]], 3)
    np.testing.assert_allclose(t.inputs[2], [1.0, 0.0])


def test_resolve_dependent_rejects_bad_index():
    nl = cubic_kdv_spec()
    with pytest.raises(ValueError):
        resolve_dependent(nl, 1.0, [1.0, 1.0], 0)
    with pytest.raises(ValueError):
        resolve_dependent(nl, 1.0, [1.0], 2)


@pytest.mark.parametrize("eq_id,dim", EQUATIONS)
def test_resolve_dependent_lands_on_hyperplane(eq_id, dim):
    eq = get_equation(eq_id, dim)
    nl = eq.nonlinearity
    rng = np.random.default_rng(2)
    for _ in range(10_000 // len(EQUATIONS)):
        dep = int(rng.integers(1, nl.k + 1))
        xi = rng.uniform(-50, 50, dim)
        free = list(rng.uniform(-50, 50, (nl.k - 1, dim)))
        assert resolve_dependent(nl, xi, free, dep).on_hyperplane(nl)


# -- phases ------------------------------------------------------------------

def test_total_phase_examples():
    kdv = cubic_kdv_spec()
    assert total_phase(pm.airy(), kdv, make_tuple(3.0, [1.0, 1.0, 1.0])) == pytest.approx(24.0)
    nls = get_equation("nls-cubic", 1)
    t = make_tuple(1.0, [2.0, 1.0, 0.0])
    assert total_phase(nls.dispersion, nls.nonlinearity, t) == pytest.approx(-2.0)
    zero = make_tuple([0.0, 0.0], [[0.0, 0.0]] * 3)
    assert total_phase(pm.zakharov_kuznetsov(2), get_equation("mzk", 2).nonlinearity, zero) == 0.0


@settings(max_examples=200, deadline=None)
@given(x1=coord, x2=coord, x3=coord)
def test_cubic_airy_phase_factorizes(x1, x2, x3):
    x = x1 + x2 + x3
    phi = total_phase(pm.airy(), cubic_kdv_spec(), make_tuple(x, [x1, x2, x3]))
    assert phi == pytest.approx(3 * (x - x1) * (x - x2) * (x1 + x2), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(x1=coord, x2=coord, x3=coord)
def test_cubic_nls_phase_factorizes(x1, x2, x3):
    eq = get_equation("nls-cubic", 1)
    x = x1 - x2 + x3
    phi = total_phase(eq.dispersion, eq.nonlinearity, make_tuple(x, [x1, x2, x3]))
    assert phi == pytest.approx(2 * (x - x1) * (x - x3), abs=1e-9)


@pytest.mark.parametrize("eq_id,dim", EQUATIONS)
@settings(max_examples=30, deadline=None)
@given(data=st.data(), scale=lam)
def test_total_phase_homogeneous(eq_id, dim, data, scale):
    eq = get_equation(eq_id, dim)
    nl = eq.nonlinearity
    free = [data.draw(vec(dim)) for _ in range(nl.k - 1)]
    t = resolve_dependent(nl, data.draw(vec(dim)), free, nl.k)
    t2 = make_tuple(scale * t.xi, [scale * v for v in t.inputs])
    l = eq.dispersion.degree
    a, b = total_phase(eq.dispersion, nl, t2), scale ** l * total_phase(eq.dispersion, nl, t)
    terms = scale ** l * np.sum(np.abs(eq.dispersion(t.slots)))  # cancellation scale
    assert a == pytest.approx(b, rel=1e-8, abs=1e-12 * terms)


def test_rescaled_phase_examples():
    kdv = cubic_kdv_spec()
    t = make_tuple(1.0, [1 / 3, 1 / 3, 1 / 3])
    assert rescaled_phase(pm.airy(), kdv, t, scale_index=0) == pytest.approx(8 / 9)
    assert rescaled_phase_p(pm.airy(), kdv, [1.0, 1.0, -1.0]) == pytest.approx(0.0, abs=1e-14)
    big = make_tuple(10.0, [10 / 3] * 3)
    assert rescaled_phase(pm.airy(), kdv, big, 0) == pytest.approx(8 / 9, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(data=st.data(), scale=st.floats(0.01, 100))
def test_rescaled_phase_is_scale_free(data, scale):
    eq = get_equation("mzk", 2)
    nl = eq.nonlinearity
    t = resolve_dependent(nl, data.draw(vec(2)), [data.draw(vec(2)) for _ in range(2)], 3)
    if np.max(np.linalg.norm(t.slots, axis=1)) < 1e-3:
        return
    t2 = make_tuple(scale * t.xi, [scale * v for v in t.inputs])
    for ref in (None, 1):
        if np.linalg.norm(t.slots[ref or 0]) < 1e-3:
            continue
        a = rescaled_phase(eq.dispersion, nl, t, ref)
        b = rescaled_phase(eq.dispersion, nl, t2, ref)
        assert b == pytest.approx(a, rel=1e-8, abs=1e-10)


def test_degenerate_scale():
    with pytest.raises(DegenerateScaleError):
        rescaled_phase(pm.airy(), cubic_kdv_spec(), make_tuple(0.0, [0.0, 0.0, 0.0]))
    with pytest.raises(DegenerateScaleError):
        make_chart(pm.airy(), cubic_kdv_spec(), make_tuple(0.0, [1.0, 0.0, -1.0]), [1, 2])


# -- charts ------------------------------------------------------------------

def test_mkdv_critical_point_is_a_saddle():
    t = make_tuple(1.0, [1.0, 1.0, -1.0])
    g, H = phase_gradient_hessian(pm.airy(), cubic_kdv_spec(), t, [1, 2])
    np.testing.assert_allclose(g, 0.0, atol=1e-12)
    assert np.linalg.det(H) < 0


def test_zk3d_hessian_rank_drops_on_variety():
    nl = get_equation("mzk", 3).nonlinearity
    p1 = np.array([1.0, 0.0, 0.0])
    p2 = np.array([0.3, -0.2, 0.5])
    t = make_tuple(p1 + p2 - p1, [p1, p2, -p1])
    _, H = phase_gradient_hessian(pm.zakharov_kuznetsov(3), nl, t, [1], dependent=3, scale_index=None)
    s = np.linalg.svd(H, compute_uv=False)
    assert np.sum(s > 1e-6 * s[0]) <= 1


@pytest.mark.parametrize("eq_id,dim", EQUATIONS)
def test_chart_derivatives_match_finite_differences(eq_id, dim):
    eq = get_equation(eq_id, dim)
    nl = eq.nonlinearity
    rng = np.random.default_rng(3)
    for _ in range(5):
        t = resolve_dependent(nl, rng.uniform(1, 2, dim), list(rng.uniform(-1, 1, (nl.k - 1, dim))), nl.k)
        free = list(range(1, nl.k))[:2]
        chart = make_chart(eq.dispersion, nl, t, free)
        z = chart.point()
        g_fd = pm.fd_gradient(chart.value, z)
        H_fd = pm.fd_hessian(chart.value, z)
        np.testing.assert_allclose(chart.gradient(z), g_fd, rtol=1e-4, atol=1e-6)
        np.testing.assert_allclose(chart.hessian(z), H_fd, rtol=1e-4, atol=1e-4)


def test_chart_validation():
    t = make_tuple(1.0, [1.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        pm.Chart(pm.airy(), cubic_kdv_spec().signs, t.slots, (1, 2), 2)
    with pytest.raises(ValueError):
        pm.Chart(pm.airy(), cubic_kdv_spec().signs, t.slots, (), 2)


# -- symmetrization ----------------------------------------------------------

def test_symmetrize_examples():
    np.testing.assert_allclose(pm.symmetrize_zk2d([0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_allclose(pm.symmetrize_zk2d([1.0, 0.0]), [4 ** (-1 / 3)] * 2)


@settings(max_examples=200, deadline=None)
@given(x=coord, y=coord)
def test_symmetrized_symbol_identity(x, y):
    xi = np.array([x, y])
    zk, sym = pm.zakharov_kuznetsov(2), pm.symmetrized_zk()
    xs = pm.symmetrize_frequency(xi)
    assert sym(xs) == pytest.approx(zk(xi), abs=1e-10 * max(1.0, abs(zk(xi))))
    np.testing.assert_allclose(pm.unsymmetrize_frequency(xs), xi, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(x=coord, y=coord, a=coord, b=coord)
def test_frequency_map_is_dual_to_spatial_map(x, y, a, b):
    # pairing <xi, x> is preserved: xi' . T(x) = xi . x
    pt, xi = np.array([x, y]), np.array([a, b])
    lhs = pm.symmetrize_frequency(xi) @ pm.symmetrize_zk2d(pt)
    assert lhs == pytest.approx(xi @ pt, abs=1e-9)
