import numpy as np
import pytest

from symplab.deformations import (FluxNotZero, NotHarmonic, TwoParamFamily, harmonic_family,
                                  homotopy_eval, ldefor2_family, ldefor2_hamiltonian_residual,
                                  ldefor2_sequence_report, weinstein_deform, weinstein_family)
from symplab.flows import Isotopy, c0_distance
from symplab.generators import Generator, uniform_times
from symplab.torus import TorusGrid, flat_coeffs

TWO_PI = 2 * np.pi


def sine_harmonic(grid, steps, c=0.3):
    return Generator.from_functions(grid, steps, harm_fn=lambda t: [c * np.sin(TWO_PI * t), 0.0])


# --- Weinstein ----------------------------------------------------------------

def test_weinstein_hamiltonian_input_is_unchanged(grid32, intg):
    g = Generator.autonomous(grid32, 50, ham=0.02 * np.sin(TWO_PI * grid32.coords[0]) + 0 * grid32.coords[1])
    res = weinstein_deform(g, intg)
    assert not np.any(res.family.shifts)
    np.testing.assert_allclose(res.ham_isotopy.disp, intg.integrate(g).disp, atol=1e-12)
    assert res.report.ok


def test_weinstein_sine_harmonic(grid32, intg):
    res = weinstein_deform(sine_harmonic(grid32, 200), intg)
    rep = res.report
    assert rep.boundary_t0 <= 1e-3 and rep.boundary_t1 <= 1e-3
    assert rep.harmonic_residual <= 1e-3 and rep.endpoint_distance <= 1e-3
    assert rep.to_dict()["ok"] is True


def test_weinstein_rejects_flux(grid16, intg):
    with pytest.raises(FluxNotZero):
        weinstein_deform(Generator.autonomous(grid16, 10, harm=[1.0, 0.0]), intg)


def test_weinstein_family_boundaries(grid16):
    fam = weinstein_family(sine_harmonic(grid16, 100), s_steps=10)
    assert fam.s_zero_defect() == 0.0
    assert np.abs(fam.shifts[:, 0]).max() == 0.0
    assert np.abs(fam.shifts[:, -1]).max() <= 1e-12


# --- homotopy evaluation ------------------------------------------------------

def test_homotopy_identity_family(grid16, intg):
    fam = TwoParamFamily(grid16, uniform_times(4), uniform_times(8), np.zeros((5, 9, 2)))
    rep = homotopy_eval(fam, Isotopy.identity(grid16, 8), intg)
    assert rep.to_dict() == {"max_s_dC0_H(s,0)_id": 0.0, "max_s_dC0_H(s,1)_H(0,1)": 0.0,
                             "dbar_H(0,.)_base": 0.0}


def test_homotopy_of_weinstein_output(grid32, intg):
    res = weinstein_deform(sine_harmonic(grid32, 200), intg)
    rep = homotopy_eval(res.family, res.base, intg)
    assert max(rep.start_defect, rep.end_defect, rep.base_defect) <= 1e-3


def test_homotopy_flux_broken_control(grid16, intg):
    g = Generator.autonomous(grid16, 20, harm=[1.0, 0.0])
    rep = homotopy_eval(weinstein_family(g, 10), intg.integrate(g), intg)
    assert rep.end_defect > 0.1


def test_homotopy_time_grid_mismatch(grid16, intg):
    fam = TwoParamFamily(grid16, uniform_times(2), uniform_times(4), np.zeros((3, 5, 2)))
    with pytest.raises(ValueError):
        homotopy_eval(fam, Isotopy.identity(grid16, 8), intg)


def test_family_shape_is_checked(grid16):
    with pytest.raises(ValueError):
        TwoParamFamily(grid16, uniform_times(2), uniform_times(4), np.zeros((3, 4, 2)))


# --- sequential deformation ---------------------------------------------------

def test_ldefor2_zero(grid16):
    b = ldefor2_family(np.zeros((11, 2)), grid16, s_steps=5)
    for arr in (b.y, b.zst, b.g.shifts, b.v, b.theta.shifts):
        assert not np.any(arr)


def test_ldefor2_constant_field(grid16):
    z = np.array([0.2, -0.1])
    b = ldefor2_family(np.tile(z, (21, 1)), grid16, s_steps=10)
    t, s = b.t_times, b.s_times
    np.testing.assert_allclose(b.y, -t[:, None] * z, atol=1e-14)
    expected = (t[None, :, None] * (1 - 2 * s[:, None, None])) * z
    np.testing.assert_allclose(b.zst, expected, atol=1e-14)
    np.testing.assert_allclose(b.zst[-1], -t[:, None] * z, atol=1e-14)
    # s-flow of t(1 - 2s)Z is t(s - s^2)Z, which returns to the identity at s = 1
    np.testing.assert_allclose(b.g.shifts[-1], 0.0, atol=1e-14)


def test_ldefor2_accepts_grid_fields(grid16):
    z = np.zeros((5, 2) + grid16.shape) + np.array([0.1, 0.0])[None, :, None, None]
    np.testing.assert_allclose(harmonic_family(z), np.tile([0.1, 0.0], (5, 1)))
    z[2, 0, 3, 3] += 1e-3
    with pytest.raises(NotHarmonic):
        ldefor2_family(z, grid16)


def test_ldefor2_dimension_mismatch(grid16):
    with pytest.raises(ValueError):
        ldefor2_family(np.zeros((5, 4)), grid16)


@pytest.mark.parametrize("steps", [50, 200])
def test_ldefor2_sequence_bounds(grid16, steps):
    t = uniform_times(steps)
    bundles = []
    for j in range(1, 9):
        eps = 1.0 / (j * j)
        z = np.stack([0.2 * np.cos(TWO_PI * t) + eps * np.sin(TWO_PI * j * t) / 10, 0.1 + eps * t], axis=1)
        bundles.append(ldefor2_family(z, grid16, s_steps=10, times=t))
    rows = ldefor2_sequence_report(bundles)
    assert len(rows) == 7
    for r in rows:
        assert r.y_ok and r.zst_ok
        assert len(r.zst_gap_per_s) == 11 and max(r.zst_gap_per_s) == pytest.approx(r.zst_gap)


def test_ldefor2_hamiltonian_residual(grid32, intg):
    t = uniform_times(200)
    z = np.stack([0.3 * np.sin(TWO_PI * t), 0.1 * t], axis=1)
    assert ldefor2_hamiltonian_residual(ldefor2_family(z, grid32, times=t), intg) <= 1e-3


def test_ldefor2_theta_is_translation_by_y(grid16):
    z = np.tile([0.2, 0.3], (11, 1))
    b = ldefor2_family(z, grid16, s_steps=4)
    path = b.theta.t_path(-1)
    assert c0_distance(path.disp[-1], np.zeros_like(path.disp[-1]) - np.array([0.2, 0.3])[:, None, None]) < 1e-14


@pytest.mark.slow
def test_higher_dimension_weinstein(intg):
    grid = TorusGrid(2, 8)
    g = Generator.from_functions(grid, 20, harm_fn=lambda t: flat_coeffs(
        np.array([0.1, 0.0, 0.0, 0.2]) * np.sin(TWO_PI * t)))
    rep = weinstein_deform(g, intg).report
    assert max(rep.boundary_t0, rep.boundary_t1, rep.endpoint_distance) <= 1e-12
    # second order in dt: 2.4e-3 at 20 steps, 6.1e-4 at 40
    assert rep.harmonic_residual <= 3e-3
