import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from spacegnn import geometry as geo
from spacegnn.errors import DegenerateDenominatorError, DomainViolationError, PoleProximityError

TANH_1 = 0.761594155955764888
TWO_TAN_QUARTER = 0.510683842442072533
ATANH_HALF = 0.549306144334054846
TANH_HALF = 0.462117157260009759


def test_tan_kappa_branches():
    assert geo.tan_kappa(0.0, 0.7) == 0.7
    assert geo.tan_kappa(-1.0, 1.0) == pytest.approx(TANH_1, abs=1e-15)
    assert geo.tan_kappa(0.25, 0.5) == pytest.approx(TWO_TAN_QUARTER, abs=1e-15)


def test_tan_kappa_pole():
    with pytest.raises(PoleProximityError):
        geo.tan_kappa(1.0, np.pi / 2)


def test_atan_kappa_branches():
    assert geo.atan_kappa(0.0, 0.3) == 0.3
    assert geo.atan_kappa(-1.0, 0.5) == pytest.approx(ATANH_HALF, abs=1e-15)
    with pytest.raises(DomainViolationError):
        geo.atan_kappa(-1.0, 1.0)


@given(st.sampled_from([-1.0, -0.3, -0.01, 0.01, 0.3, 1.0]), st.floats(-0.9, 0.9))
def test_atan_inverts_tan(kappa, t):
    s = geo.tan_kappa(kappa, t)
    assert geo.atan_kappa(kappa, s) == pytest.approx(t, abs=1e-12)


def test_mobius_example():
    out = geo.mobius_add(-1.0, np.array([0.1, 0.0]), np.array([0.0, 0.1]))
    assert_allclose(out, [0.100989901009899010, 0.098990100989901010], atol=1e-15)


vec2 = st.lists(st.floats(-0.6, 0.6), min_size=3, max_size=3).map(np.array)


@given(st.sampled_from([-1.0, -0.2, 0.0, 0.2, 1.0]), vec2)
def test_mobius_identities(kappa, x):
    assert_allclose(geo.mobius_add(kappa, x, np.zeros(3)), x, atol=1e-12)
    assert_allclose(geo.mobius_add(kappa, -x, x), np.zeros(3), atol=1e-12)


def test_mobius_degenerate_denominator():
    # kappa=1, x=y=(1,0): 1 - 2 + 1 = 0
    x = np.array([1.0, 0.0])
    with pytest.raises(DegenerateDenominatorError):
        geo.mobius_add(1.0, x, x)


def test_exp_log_examples():
    assert_allclose(geo.exp_origin(0.0, [0.3, -0.2]), [0.3, -0.2])
    assert_allclose(geo.exp_origin(-1.0, np.array([0.5, 0.0])), [TANH_HALF, 0.0], atol=1e-15)
    assert_allclose(geo.exp_origin(-1.0, np.zeros(2)), np.zeros(2), atol=0)
    assert_allclose(geo.log_origin(-1.0, np.array([0.462117, 0.0])), [0.5, 0.0], atol=1e-6)
    assert_allclose(geo.log_origin(0.0, [1.5, 2.0]), [1.5, 2.0])


def test_log_outside_ball():
    with pytest.raises(DomainViolationError):
        geo.log_origin(-1.0, np.array([1.0, 0.0]))


@given(st.sampled_from([-1.0, -0.1, 0.1, 1.0]),
       st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4).map(np.array))
def test_log_inverts_exp(kappa, v):
    # stay inside the spherical chart: sqrt|k| |v| < pi/2
    v = v * min(1.0, 1.4 / (np.sqrt(abs(kappa)) * max(np.linalg.norm(v), 1e-300)))
    back = geo.log_origin(kappa, geo.exp_origin(kappa, v))
    assert np.linalg.norm(back - v) <= 1e-8 * np.linalg.norm(v) + 1e-14


def test_clamp_examples():
    row = np.array([[0.3, 0.4]])
    assert_allclose(geo.clamp_to_domain(-1.0, row), row)
    out = geo.clamp_to_domain(-1.0, np.array([[2.0, 0.0]]))
    assert_allclose(out, [[1.0 - 1e-8, 0.0]], atol=1e-16)
    X = np.random.default_rng(0).normal(size=(5, 3))
    assert_allclose(geo.clamp_to_domain(0.0, X), X)


@given(st.sampled_from([-1.0, -0.1, 0.5]),
       st.lists(st.floats(-50, 50), min_size=6, max_size=6).map(lambda a: np.array(a).reshape(2, 3)))
def test_clamp_postcondition(kappa, X):
    out = geo.clamp_to_domain(kappa, X)
    assert np.all(np.sqrt(abs(kappa)) * np.linalg.norm(out, axis=1) <= 1.0 - 1e-8 + 1e-15)


def test_dist_exact_examples():
    x = np.array([0.2, -0.1])
    assert geo.dist_exact(-1.0, x, x) == pytest.approx(0.0, abs=1e-15)
    assert geo.dist_exact(-1.0, np.zeros(2), np.array([0.5, 0.0])) == pytest.approx(2 * ATANH_HALF, abs=1e-14)
    assert geo.dist_exact(0.0, np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(2 * np.sqrt(2), abs=1e-15)


@given(st.sampled_from([-1.0, -0.2, 0.2, 1.0]), vec2, vec2)
def test_dist_exact_symmetric(kappa, x, y):
    assert geo.dist_exact(kappa, x, y) == pytest.approx(geo.dist_exact(kappa, y, x), rel=1e-9, abs=1e-12)


def test_dist_approx_examples():
    x, y = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert geo.dist_approx(0.01, x, y) == pytest.approx(2.809570943914548830, abs=1e-12)
    assert geo.dist_approx_quadratic(0.01, x, y) == pytest.approx(2.809570943914548830, abs=1e-12)
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=3), rng.normal(size=3)
    assert geo.dist_approx(0.0, a, b) == pytest.approx(2 * np.linalg.norm(a - b), abs=1e-15)


def test_dist_approx_second_order():
    rng = np.random.default_rng(3)
    for _ in range(20):
        x, y = rng.uniform(-0.5, 0.5, size=(2, 3))
        errs = [abs(geo.dist_exact(k, x, y) - geo.dist_approx(k, x, y)) for k in (0.04, 0.02, 0.01)]
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_batched_rows():
    rng = np.random.default_rng(2)
    X, Y = rng.uniform(-0.4, 0.4, size=(2, 5, 3))
    d = geo.dist_exact(-0.5, X, Y)
    assert d.shape == (5,)
    assert_allclose(d, [geo.dist_exact(-0.5, X[i], Y[i]) for i in range(5)], rtol=1e-14)


def test_curvature_projection_and_bounds():
    c = geo.Curvature(-0.1, "negative")
    assert c.project(0.5) == -1e-4
    assert c.project(-3.0) == -1.0
    assert geo.Curvature(0.0, "zero").learnable is False
    with pytest.raises(ValueError):
        geo.Curvature(0.2, "negative")
    assert geo.in_domain(-1.0, np.array([[0.5, 0.5]]))
    assert not geo.in_domain(-1.0, np.array([[1.0, 0.0]]))
