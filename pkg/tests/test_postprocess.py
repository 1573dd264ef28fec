import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eldg.limiter import limit_coeffs, minmod, tvd_limit
from eldg.mesh import Mesh1D, build_uniform_mesh
from eldg.projection import DGField, project_function
from eldg.siac import SiacKernel, siac_filter
from eldg.system import total_mass


def test_minmod():
    np.testing.assert_allclose(minmod(np.array([1.0, -1.0, 2.0]), np.array([2.0, -0.5, -1.0]),
                                      np.array([0.5, -3.0, 1.0])), [0.5, -0.5, 0.0])


def test_spike_slope_is_zeroed():
    m = build_uniform_mesh(0, 1, 5)
    c = np.zeros((5, 1, 2))
    c[2, 0] = [1.0, 0.3]
    out = tvd_limit(DGField(m, c))
    assert out.coeffs[2, 0, 1] == 0.0
    np.testing.assert_array_equal(out.coeffs[:, 0, 0], c[:, 0, 0])


def test_linear_data_untouched():
    m = build_uniform_mesh(0, 1, 8)
    c = np.zeros((8, 1, 3))
    c[:, 0, 0] = np.arange(8.0)
    c[:, 0, 1] = 0.5
    c[0, 0, 1] = 0.0
    c[-1, 0, 1] = 0.0
    np.testing.assert_array_equal(tvd_limit(DGField(m, c)).coeffs[1:-1], c[1:-1])


def test_smooth_field_keeps_means_and_mass():
    m = build_uniform_mesh(0, 2 * np.pi, 160)
    f = project_function(m, np.sin, 2)
    out = tvd_limit(f)
    np.testing.assert_array_equal(out.coeffs[..., 0], f.coeffs[..., 0])
    assert total_mass(out)[0] == total_mass(f)[0]
    changed = np.any(out.coeffs != f.coeffs, axis=(1, 2))
    assert changed.sum() < 10  # only near extrema


def test_tvb_constant_relaxes_limiting():
    m = build_uniform_mesh(0, 2 * np.pi, 40)
    f = project_function(m, np.sin, 2)
    assert np.array_equal(tvd_limit(f, m_param=50.0).coeffs, f.coeffs)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 12), st.integers(1, 3), st.integers(0, 2 ** 31))
def test_limiter_preserves_means_and_is_idempotent(n, k, seed):
    m = build_uniform_mesh(0, 1, n)
    c = np.random.default_rng(seed).normal(size=(1, n, 2, k + 1))
    out = limit_coeffs(c, m)
    np.testing.assert_array_equal(out[..., 0], c[..., 0])
    np.testing.assert_allclose(limit_coeffs(out, m), out, atol=1e-15)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_kernel_unit_mass_and_moments(k):
    K = SiacKernel(k)
    assert K.moment(0) == pytest.approx(1.0, abs=1e-13)
    for p in range(1, 2 * k + 1):
        assert abs(K.moment(p)) <= 1e-12


def test_kernel_coefficients():
    np.testing.assert_allclose(SiacKernel(1).coefficients, [-1 / 12, 7 / 6, -1 / 12], rtol=1e-12)
    np.testing.assert_allclose(SiacKernel(2).coefficients, [37 / 1920, -97 / 480, 437 / 320, -97 / 480,
                                                            37 / 1920], rtol=1e-12)


@pytest.mark.parametrize("k", [1, 2])
def test_filter_reproduces_polynomials(k):
    # a P^k field that is globally a polynomial of degree <= k, evaluated well inside the domain
    m = build_uniform_mesh(0, 10, 40)
    poly = lambda x: 0.3 - 0.7 * x + (0.05 * x ** 2 if k == 2 else 0)
    f = project_function(m, poly, k)
    x = np.linspace(3, 7, 41)
    np.testing.assert_allclose(siac_filter(f)(x)[:, 0], poly(x), atol=1e-10)


def test_filter_constant_and_nonuniform():
    m = build_uniform_mesh(0, 1, 10)
    c = np.zeros((10, 1, 3))
    c[:, 0, 0] = 4.2
    f = siac_filter(DGField(m, c))
    np.testing.assert_allclose(f(np.linspace(0, 1, 23)), 4.2, atol=1e-13)
    with pytest.raises(NotImplementedError):
        siac_filter(DGField(Mesh1D([0, 0.2, 0.5, 1.0]), np.zeros((3, 1, 2))))


def test_filter_superconverges():
    errs = []
    for n in (20, 40):
        m = build_uniform_mesh(0, 2 * np.pi, n)
        f = project_function(m, np.sin, 1)
        x = np.linspace(0, 2 * np.pi, 301)
        errs.append(np.max(np.abs(siac_filter(f)(x)[:, 0] - np.sin(x))))
    assert np.log2(errs[0] / errs[1]) > 2.7
