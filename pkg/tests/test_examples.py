import warnings

import numpy as np
import pytest

from symplab.examples import (NotHamiltonianConjugator, RotationSpec, ScenarioRangeWarning,
                              build_conjugated, build_rotation, build_strip_scenario,
                              conjugated_trend, mollified_conjugator, smooth_conjugator)
from symplab.flows import Integrator, c0_distance, compose_slice
from symplab.flux import flux
from symplab.generators import Generator, group_inverse, linf_family_norm
from symplab.hofer import RotationSearch, length_linf
from symplab.torus import TorusGrid, osc


def test_rotation_spec_validation():
    with pytest.raises(ValueError):
        RotationSpec((0.1, 0.2, 0.3))
    with pytest.raises(ValueError):
        RotationSpec((0.1, 0.2), 0)
    assert RotationSpec((0.3, 0.4), 2).speed == pytest.approx(2 / 3)


def test_zero_rotation(grid16):
    g = build_rotation(RotationSpec((0.0, 0.0)), grid16, 10)
    assert not np.any(g.hams) and not np.any(g.harms)


@pytest.mark.parametrize("a, b", [(0.3, 0.4), (-0.2, 0.1)])
def test_rotation_generator(grid16, a, b):
    g = build_rotation(RotationSpec((a, b)), grid16, 10)
    # a dtheta_2 - b dtheta_1
    np.testing.assert_allclose(g.harms, np.tile([-b, a], (11, 1)), atol=1e-15)


def test_reparametrized_length(grid16):
    g = build_rotation(RotationSpec((0.3, 0.4), 2), grid16, 10)
    assert length_linf(g) == pytest.approx(0.4667, abs=1e-4)


def test_rotation_inverse(grid16, intg):
    v = (0.3, -0.1)
    inv = group_inverse(build_rotation(RotationSpec(v), grid16, 20), intg)
    neg = build_rotation(RotationSpec(tuple(-x for x in v)), grid16, 20)
    assert linf_family_norm(inv - neg) <= 1e-12


def test_rotation_grid_mismatch():
    with pytest.raises(ValueError):
        build_rotation(RotationSpec((0.1, 0.2, 0.3, 0.4)), TorusGrid(1, 8), 4)


def test_conjugated_by_zero_is_rotation(grid16, intg):
    spec = RotationSpec((0.3, 0.4))
    gen, path = build_conjugated(spec, Generator.zero(grid16, 10), intg)
    assert linf_family_norm(gen - build_rotation(spec, grid16, 10)) == 0.0
    np.testing.assert_allclose(path.disp[-1], np.broadcast_to(np.array([0.3, 0.4])[:, None, None],
                                                              path.disp[-1].shape), atol=1e-14)


@pytest.fixture(scope="module")
def conjugated():
    intg = Integrator()
    grid = TorusGrid(1, 32)
    conj = smooth_conjugator(grid, 100, amplitude=0.02)
    spec = RotationSpec((0.3, 0.4))
    gen, path = build_conjugated(spec, conj, intg)
    return intg, grid, conj, spec, gen, path


def test_conjugated_flux(conjugated):
    _, _, _, spec, gen, _ = conjugated
    np.testing.assert_allclose(flux(gen).coeffs, spec.harmonic().coeffs, atol=1e-14)


def test_conjugated_length_structure(conjugated):
    _, _, _, _, gen, _ = conjugated
    oscs = max(osc(u) for u in gen.hams)
    assert oscs > 0
    assert length_linf(gen) == pytest.approx(oscs + 0.7, abs=1e-14)


def test_conjugated_potential_is_normalized(conjugated):
    _, _, _, _, gen, _ = conjugated
    assert np.abs(gen.hams.reshape(gen.times.size, -1).mean(axis=1)).max() <= 1e-14


def test_conjugated_endpoint(conjugated):
    intg, grid, conj, spec, gen, path = conjugated
    phi = intg.integrate(conj)
    rot = phi.disp[-1] + spec.velocity[:, None, None]
    expected = compose_slice(intg.invert(phi).disp[-1], rot, grid, intg)
    assert c0_distance(path.disp[-1], expected) <= 1e-12
    assert c0_distance(intg.integrate(gen).disp[-1], path.disp[-1]) <= 1e-3


def test_conjugator_must_be_hamiltonian(grid16, intg):
    with pytest.raises(NotHamiltonianConjugator):
        build_conjugated(RotationSpec((0.3, 0.4)), Generator.autonomous(grid16, 4, harm=[0.1, 0.0]), intg)


def test_mollified_conjugator_widths(grid64):
    sharp = mollified_conjugator(grid64, 2, width=0.0).hams[0]
    x = grid64.coords[0]
    raw = 0.05 * np.abs(np.sin(np.pi * x)) ** 1.5
    np.testing.assert_allclose(sharp, raw - raw.mean(), atol=1e-15)
    smooth = mollified_conjugator(grid64, 2, width=0.05).hams[0]
    assert osc(smooth) < osc(sharp)
    with pytest.raises(ValueError):
        mollified_conjugator(grid64, 2, width=-1.0)


def test_conjugated_trend_contracts(intg):
    grid = TorusGrid(1, 64)
    trend = conjugated_trend(RotationSpec((0.3, 0.4)), grid, 100, (0.08, 0.04, 0.02, 0.01), integrator=intg)
    gaps = trend.mu_gaps
    assert len(trend.rows()) == 3
    assert all(gaps[i + 1] < gaps[i] for i in range(len(gaps) - 1))


@pytest.mark.parametrize("nu, a1, displaced", [(0.2, 0.3, True), (0.2, 0.1, False)])
def test_strip_scenario(grid64, intg, nu, a1, displaced):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sc = build_strip_scenario(nu, a1, grid64, steps=10, integrator=intg)
    assert sc.displacement.displaced is displaced
    assert 0 < sc.energy.bound < np.inf
    assert sc.to_dict()["warnings"] == []


def test_strip_scenario_out_of_range(grid64, intg):
    with pytest.warns(ScenarioRangeWarning):
        sc = build_strip_scenario(0.3, 0.6, grid64, steps=10, integrator=intg,
                                  search=RotationSearch.uniform(0.1))
    assert len(sc.warnings) == 2


def test_strip_scenario_conjugated(intg):
    grid = TorusGrid(1, 32)
    conj = smooth_conjugator(grid, 50, amplitude=0.005, center=(0.6, 0.5))
    sc = build_strip_scenario(0.2, 0.4, grid, steps=50, conj=conj, integrator=intg)
    assert sc.displacement.displaced and sc.energy.bound <= 0.5
