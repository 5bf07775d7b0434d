import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symplab.generators import Generator
from symplab.hodge import (NotClosed, curl_defect, exterior_d, hodge_decompose, poisson_potential,
                           spectral_gradient)
from symplab.torus import HarmonicForm, OneFormField, ScalarField, TorusGrid

TWO_PI = 2 * np.pi


def _form(grid, *components):
    return OneFormField(grid, np.stack([np.broadcast_to(c, grid.shape) for c in components]))


def test_exterior_d_constant_is_zero(grid16):
    assert np.abs(exterior_d(ScalarField.constant(grid16, 4.0)).components).max() < 1e-14


def test_exterior_d_sine(grid64):
    x, _ = grid64.coords
    du = exterior_d(ScalarField(grid64, np.sin(TWO_PI * x) + 0 * x))
    np.testing.assert_allclose(du.components[0], TWO_PI * np.cos(TWO_PI * x) + 0 * x, atol=1e-11)
    np.testing.assert_allclose(du.components[1], 0.0, atol=1e-11)


def test_exact_forms_have_zero_means(grid32, rng):
    du = exterior_d(ScalarField(grid32, rng.normal(size=grid32.shape)))
    np.testing.assert_allclose(du.means(), 0.0, atol=1e-13)


def test_spectral_gradient_index_convention(grid32):
    # output [..., i, j, grid] = d_j v_i
    x, y = grid32.coords
    v = np.stack([np.sin(TWO_PI * y) + 0 * x, np.cos(TWO_PI * x) + 0 * y])
    g = spectral_gradient(v, grid32)
    np.testing.assert_allclose(g[0, 1], TWO_PI * np.cos(TWO_PI * y) + 0 * x, atol=1e-11)
    np.testing.assert_allclose(g[1, 0], -TWO_PI * np.sin(TWO_PI * x) + 0 * y, atol=1e-11)
    np.testing.assert_allclose(g[0, 0], 0.0, atol=1e-11)


def test_decompose_harmonic(grid16):
    split = hodge_decompose(_form(grid16, 1.0, 0.0))
    np.testing.assert_allclose(split.harmonic.coeffs, [1.0, 0.0])
    assert np.abs(split.potential.values).max() < 1e-14
    assert split.residual < 1e-14


def test_decompose_exact(grid64):
    x, _ = grid64.coords
    split = hodge_decompose(_form(grid64, TWO_PI * np.cos(TWO_PI * x), 0.0))
    np.testing.assert_allclose(split.potential.values, np.sin(TWO_PI * x) + 0 * x, atol=1e-12)
    np.testing.assert_allclose(split.harmonic.coeffs, 0.0, atol=1e-14)


def test_decompose_mixed(grid64):
    _, y = grid64.coords
    u = np.cos(TWO_PI * y) + 0 * y
    alpha = exterior_d(ScalarField(grid64, u)) + OneFormField.constant(grid64, [0.0, 3.0])
    split = hodge_decompose(alpha)
    np.testing.assert_allclose(split.harmonic.coeffs, [0.0, 3.0], atol=1e-13)
    np.testing.assert_allclose(split.potential.values, u - u.mean(), atol=1e-12)


def test_non_closed_form_rejected(grid32):
    x, y = grid32.coords
    alpha = _form(grid32, np.sin(TWO_PI * y) + 0 * x, 0.0)
    assert curl_defect(alpha) > 1.0
    with pytest.raises(NotClosed) as info:
        hodge_decompose(alpha)
    assert info.value.defect > info.value.tol


def test_poisson_potential_least_squares(grid32):
    # the rotational part is discarded; the gradient part is recovered
    x, y = grid32.coords
    grad = np.stack([TWO_PI * np.cos(TWO_PI * x) + 0 * y, 0 * x + 0 * y])
    rot = np.stack([np.sin(TWO_PI * y) + 0 * x, 0 * x + 0 * y])
    u = poisson_potential(grad + rot, grid32)
    np.testing.assert_allclose(u, np.sin(TWO_PI * x) + 0 * y, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_round_trip_random_band_limited(seed, n):
    grid = TorusGrid(n, 16 if n == 1 else 8)
    g = Generator.random(np.random.default_rng(seed), grid, 1, amplitude=1.0)
    u, h = g.hams[-1], g.harms[-1]
    alpha = exterior_d(ScalarField(grid, u)) + OneFormField.constant(grid, h)
    split = hodge_decompose(alpha)
    assert np.abs(split.potential.values - u).max() < 1e-10
    assert np.abs(split.harmonic.coeffs - h).max() < 1e-12


def test_harmonic_form_ops():
    h = HarmonicForm(np.array([1.0, -2.0]))
    assert h.norm() == 3.0
    assert h.sup_norm() == pytest.approx(np.sqrt(5.0))
    np.testing.assert_array_equal((h - h).coeffs, 0.0)
    np.testing.assert_array_equal((-h).coeffs, [-1.0, 2.0])
