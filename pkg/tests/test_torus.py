import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symplab.torus import (DimensionMismatch, HarmonicForm, OneFormField, PeriodicInterpolator,
                           ScalarField, TorusGrid, VectorFieldGrid, flat, flat_coeffs, flat_vector,
                           min_image, normalize, osc, sharp, sharp_coeffs, sharp_vector,
                           toroidal_norm, wedge_pair_top)

coeff = st.floats(-5, 5, allow_nan=False)


def test_grid_coordinates():
    grid = TorusGrid(1, 8)
    assert grid.dim == 2 and grid.shape == (8, 8) and grid.num_points == 64
    np.testing.assert_allclose(grid.coords[0][:, 0], np.arange(8) / 8)
    assert grid.points.shape == (2, 64)


@pytest.mark.parametrize("n, size", [(0, 8), (1, 1)])
def test_grid_rejects_bad_sizes(n, size):
    with pytest.raises(ValueError):
        TorusGrid(n, size)


def test_sharp_of_zero_is_zero(grid16):
    z = sharp(OneFormField.zero(grid16))
    assert not np.any(z.components)


def test_sharp_dtheta1_is_minus_d_theta2(grid16):
    z = sharp(HarmonicForm.basis(1, 0), grid16)
    np.testing.assert_array_equal(z.means(), [0.0, -1.0])


def test_sharp_of_rotation_form_gives_v():
    # sum a_i dtheta_{i+n} - b_i dtheta_i
    a, b = np.array([0.3, -0.1]), np.array([0.4, 0.25])
    form = HarmonicForm(np.concatenate([-b, a]))
    np.testing.assert_allclose(sharp_vector(form), np.concatenate([a, b]))


def test_flat_inverts_sharp(grid16):
    z = sharp(HarmonicForm.basis(1, 0), grid16)
    np.testing.assert_array_equal(flat(z).means(), [1.0, 0.0])
    assert not np.any(flat(VectorFieldGrid.zero(grid16)).components)


def test_flat_vector_matches_rotation_form():
    np.testing.assert_allclose(flat_vector([0.3, 0.4]).coeffs, [-0.4, 0.3])


@given(st.lists(coeff, min_size=4, max_size=4))
def test_sharp_flat_round_trip(c):
    c = np.array(c)
    np.testing.assert_allclose(flat_coeffs(sharp_coeffs(c)), c)
    np.testing.assert_allclose(sharp_coeffs(flat_coeffs(c)), c)


def test_symplectic_pairing_is_omega():
    # omega(Z, W) = flat(Z)(W) must be antisymmetric with omega(e1, e2) = 1 for n = 1
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert flat_coeffs(e1) @ e2 == 1.0
    assert flat_coeffs(e2) @ e1 == -1.0


def test_osc_of_constant_and_shift_invariance(grid64):
    assert osc(ScalarField.constant(grid64, 3.0)) == 0.0
    f = ScalarField.from_function(grid64, lambda x, y: np.sin(2 * np.pi * x))
    assert osc(f + ScalarField.constant(grid64, 7.5)) == pytest.approx(osc(f), abs=1e-14)


def test_osc_of_sine_matches_sampled_extremes(grid64):
    x = np.arange(64) / 64
    samples = np.sin(2 * np.pi * x)
    f = ScalarField.from_function(grid64, lambda x, y: np.sin(2 * np.pi * x))
    assert osc(f) == pytest.approx(samples.max() - samples.min(), abs=1e-15)
    # the grid j/64 contains theta = 1/4 and 3/4, so the sampled extremes are exact
    assert osc(f) == pytest.approx(2.0, abs=1e-15)


def test_normalize(grid16):
    assert not np.any(normalize(ScalarField.constant(grid16, 2.0)).values)
    s = ScalarField.from_function(grid16, lambda x, y: np.sin(2 * np.pi * x))
    np.testing.assert_allclose(normalize(s).values, s.values, atol=1e-15)
    rng = np.random.default_rng(1)
    f = ScalarField(grid16, rng.normal(size=grid16.shape) + 3.2)
    out = normalize(f)
    assert abs(out.mean()) < 1e-14
    np.testing.assert_allclose(out.values - f.values, -f.mean())


def test_wedge_pair_top_examples():
    assert wedge_pair_top(HarmonicForm.zero(1), [1, 0]) == 0.0
    a, b = 0.3, 0.4
    h = HarmonicForm(np.array([-b, a]))  # a dtheta_2 - b dtheta_1
    assert wedge_pair_top(h, [1, 0]) == pytest.approx(a)
    assert wedge_pair_top(h * 2.0, [1, 0]) == pytest.approx(2 * wedge_pair_top(h, [1, 0]))
    with pytest.raises(DimensionMismatch):
        wedge_pair_top(h, [1, 0, 0, 0])


@given(st.lists(coeff, min_size=4, max_size=4),
       st.lists(st.integers(-3, 3), min_size=4, max_size=4),
       st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_wedge_pair_top_bilinear(c, m1, m2):
    h = HarmonicForm(np.array(c))
    lhs = wedge_pair_top(h, np.add(m1, m2))
    assert lhs == pytest.approx(wedge_pair_top(h, m1) + wedge_pair_top(h, m2), abs=1e-12)


def test_min_image_and_toroidal_norm():
    d = np.array([[0.9, -0.6, 0.25], [0.0, 0.0, 0.0]])
    np.testing.assert_allclose(min_image(d)[0], [-0.1, 0.4, 0.25])
    np.testing.assert_allclose(toroidal_norm(d), [0.1, 0.4, 0.25])


@pytest.mark.parametrize("method, tol", [("fourier", 1e-11), ("cubic", 5e-4), ("quintic", 5e-5),
                                         ("linear", 5e-2)])
def test_interpolator_accuracy(grid32, method, tol):
    x, y = grid32.coords
    f = np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y) + 0.3 * np.cos(4 * np.pi * y)
    pts = np.random.default_rng(3).random((2, 200)) * 3 - 1
    exact = np.sin(2 * np.pi * pts[0]) * np.cos(2 * np.pi * pts[1]) + 0.3 * np.cos(4 * np.pi * pts[1])
    got = PeriodicInterpolator(np.stack([f, 2 * f]), 2, method)(pts)
    assert got.shape == (2, 200)
    np.testing.assert_allclose(got[0], exact, atol=tol)
    np.testing.assert_allclose(got[1], 2 * exact, atol=2 * tol)


def test_interpolator_reproduces_grid_values(grid16):
    f = np.random.default_rng(0).normal(size=grid16.shape)
    for method in ("fourier", "cubic"):
        np.testing.assert_allclose(PeriodicInterpolator(f, 2, method)(grid16.points),
                                   f.reshape(-1), atol=1e-10)


def test_unknown_interpolation_method(grid16):
    with pytest.raises(ValueError):
        PeriodicInterpolator(np.zeros(grid16.shape), 2, "sinc")


def test_field_arithmetic_checks_grids():
    a = ScalarField.constant(TorusGrid(1, 8), 1.0)
    b = ScalarField.constant(TorusGrid(1, 16), 1.0)
    with pytest.raises(ValueError):
        a + b
