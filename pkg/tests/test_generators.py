import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symplab.flows import Isotopy
from symplab.generators import (DiscretizationMismatch, Generator, GeneratorSeq, cauchy_report_gen,
                                d2_distance, delta_tilde, group_inverse, group_product,
                                linf_family_norm, vf_norm, vf_norms)
from symplab.torus import HarmonicForm, ScalarField, TorusGrid, flat_vector

TWO_PI = 2 * np.pi


def sine_ham(grid):
    return np.sin(TWO_PI * grid.coords[0]) / TWO_PI


def test_generator_normalizes_hamiltonian(grid16):
    g = Generator.autonomous(grid16, 4, ham=np.full(grid16.shape, 2.0) + sine_ham(grid16))
    assert np.abs(g.hams.mean(axis=(1, 2))).max() < 1e-14


def test_generator_rejects_bad_shapes_and_times(grid16):
    with pytest.raises(DiscretizationMismatch):
        Generator(grid16, [0.0, 1.0], np.zeros((3,) + grid16.shape), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        Generator(grid16, [0.0, 0.2, 1.0], np.zeros((3,) + grid16.shape), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        Generator(grid16, [0.0, 1.0], np.full((2,) + grid16.shape, np.nan), np.zeros((2, 2)))


def test_vf_norm_examples(grid64):
    assert vf_norm(ScalarField.constant(grid64), HarmonicForm.zero(1)) == 0.0
    a, b = 0.3, -0.4
    assert vf_norm(np.zeros(grid64.shape), HarmonicForm(np.array([-b, a]))) == pytest.approx(abs(a) + abs(b))
    u = np.sin(TWO_PI * grid64.coords[0]) + 0 * grid64.coords[1]
    assert vf_norm(u, HarmonicForm.basis(1, 0)) == pytest.approx(3.0, abs=1e-12)


def test_linf_family_norm_examples(grid16):
    assert linf_family_norm(Generator.zero(grid16, 10)) == 0.0
    h = np.array([0.2, -0.5])
    assert linf_family_norm(Generator.autonomous(grid16, 10, harm=h)) == pytest.approx(0.7)
    g = Generator.from_functions(grid16, 200, harm_fn=lambda t: [np.sin(TWO_PI * t), 0.0])
    expected = np.abs(np.sin(TWO_PI * np.linspace(0, 1, 201))).max()
    assert linf_family_norm(g) == pytest.approx(expected)
    assert linf_family_norm(g) == pytest.approx(1.0, abs=1e-12)


def test_delta_tilde_vanishing_cases(grid16, intg):
    rot = Generator.autonomous(grid16, 20, harm=flat_vector([0.3, 0.1]))
    phi = intg.integrate(rot)
    assert np.abs(delta_tilde(np.zeros((21, 2)), phi)).max() == 0.0
    ident = Isotopy.identity(grid16, 20)
    assert np.abs(delta_tilde(np.tile([1.0, 2.0], (21, 1)), ident)).max() == 0.0
    assert np.abs(delta_tilde(np.tile([1.0, 2.0], (21, 1)), phi)).max() < 1e-14


def test_delta_tilde_time_grid_mismatch(grid16, intg):
    phi = Isotopy.identity(grid16, 20)
    with pytest.raises(DiscretizationMismatch):
        delta_tilde(np.zeros((11, 2)), phi)


def test_product_with_identity_is_exact(grid16, intg, rng):
    a = Generator.random(rng, grid16, 20, amplitude=0.005)
    ab = group_product(a, Generator.zero(grid16, 20), intg)
    np.testing.assert_array_equal(ab.hams, a.hams)
    np.testing.assert_array_equal(ab.harms, a.harms)


def test_product_of_constant_harmonics(grid16, intg):
    h, k = np.array([0.1, 0.2]), np.array([-0.3, 0.05])
    ab = group_product(Generator.autonomous(grid16, 20, harm=h), Generator.autonomous(grid16, 20, harm=k), intg)
    np.testing.assert_allclose(ab.harms, np.tile(h + k, (21, 1)))
    assert np.abs(ab.hams).max() < 1e-13


def test_product_of_hamiltonians_is_classical(grid16, intg):
    u = Generator.autonomous(grid16, 50, ham=0.02 * sine_ham(grid16) * TWO_PI)
    v = Generator.autonomous(grid16, 50, ham=0.01 * np.cos(TWO_PI * grid16.coords[1]) + 0 * grid16.coords[0])
    ab = group_product(u, v, intg)
    phi_inv = intg.invert(intg.integrate(u))
    expected = u.hams + intg.pullback(v.hams, phi_inv)
    np.testing.assert_allclose(ab.hams, expected - expected.mean(axis=(1, 2), keepdims=True), atol=1e-12)
    assert not np.any(ab.harms)


def test_inverse_examples(grid16, intg):
    zero = group_inverse(Generator.zero(grid16, 10), intg)
    assert not np.any(zero.hams) and not np.any(zero.harms)
    h = np.array([0.25, -0.1])
    inv = group_inverse(Generator.autonomous(grid16, 10, harm=h), intg)
    np.testing.assert_allclose(inv.harms, np.tile(-h, (11, 1)))
    assert np.abs(inv.hams).max() < 1e-13


def test_inverse_of_hamiltonian(grid16, intg):
    u = Generator.autonomous(grid16, 50, ham=0.05 * sine_ham(grid16))
    inv = group_inverse(u, intg)
    phi = intg.integrate(u)
    np.testing.assert_allclose(inv.hams, -intg.pullback(u.hams, phi), atol=1e-12)


def test_d2_examples(grid16, intg):
    h, k = np.array([0.1, 0.2]), np.array([-0.3, 0.05])
    a = Generator.autonomous(grid16, 10, harm=h)
    b = Generator.autonomous(grid16, 10, harm=k)
    assert d2_distance(a, a, intg) == 0.0
    assert d2_distance(a, b, intg) == pytest.approx(np.abs(h - k).sum(), abs=1e-12)
    assert d2_distance(a, b, intg) == pytest.approx(d2_distance(b, a, intg))


@settings(max_examples=4)
@given(st.integers(0, 2**32 - 1))
def test_d2_triangle_inequality(seed):
    grid = TorusGrid(1, 16)
    rng = np.random.default_rng(seed)
    a, b, c = (Generator.random(rng, grid, 40, amplitude=0.005) for _ in range(3))
    inv = {id(g): group_inverse(g) for g in (a, b, c)}

    def d(x, y):
        return d2_distance(x, y, a_inv=inv[id(x)], b_inv=inv[id(y)])

    assert d(a, c) <= d(a, b) + d(b, c) + 1e-12


def test_cauchy_constant_sequence(grid16, intg):
    g = Generator.autonomous(grid16, 10, harm=[0.2, 0.1])
    rep = cauchy_report_gen([g, g, g], intg)
    assert np.abs(rep.d2_gaps).max() == 0.0 and np.abs(rep.pushforward_gaps).max() == 0.0


def test_cauchy_scaled_harmonics(grid16, intg):
    h = np.array([0.3, -0.2])
    seq = GeneratorSeq([Generator.autonomous(grid16, 10, harm=j / (1 + j) * h) for j in range(1, 6)])
    rep = cauchy_report_gen(seq, intg)
    expected = [np.abs(h).sum() / ((j + 1) * (j + 2)) for j in range(1, 5)]
    np.testing.assert_allclose(rep.forward_gaps, expected, atol=1e-14)
    np.testing.assert_allclose(rep.d2_gaps, expected, atol=1e-13)
    assert all(rep.flags.values())
    header = rep.to_csv().splitlines()[0]
    assert header == "i,d2,forward_gap,pushforward_gap"


def test_cauchy_needs_two_items(grid16):
    with pytest.raises(ValueError):
        cauchy_report_gen([Generator.zero(grid16, 4)])


def test_vf_norms_shape(grid16, rng):
    g = Generator.random(rng, grid16, 12)
    assert vf_norms(g).shape == (13,)
