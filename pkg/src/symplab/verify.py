"""Check suites: measured quantities against fixed thresholds.

Each suite takes a :class:`~symplab.config.RunConfig` and returns a list of
:class:`Check` rows.  The command line ``verify`` subcommand writes them as
CSV and exits nonzero if any row fails.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import RunConfig
from .deformations import (FluxNotZero, homotopy_eval, ldefor2_family, ldefor2_sequence_report,
                           weinstein_deform)
from .examples import RotationSpec, build_conjugated, build_rotation, mollified_conjugator
from .flows import Isotopy, compose, one_param_group_check, path_distance
from .flux import basis_classes, duality_gap, flux, mass_flow_direct
from .generators import Generator, group_inverse, group_product
from .hodge import exterior_d, hodge_decompose
from .hofer import Region, RotationSearch, displacement_energy_upper, displacement_test, length_linf
from .io import rows_to_csv
from .torus import OneFormField, ScalarField, TorusGrid, flat_vector

SUITES = ("group", "hodge", "duality", "weinstein", "ldefor2", "examples", "ugr")


@dataclass(frozen=True)
class Check:
    """One measured value against a threshold; ``relation`` is "le", "ge" or "eq"."""

    suite: str
    name: str
    value: float
    threshold: float
    relation: str = "le"

    @property
    def passed(self) -> bool:
        if self.relation == "le":
            return bool(self.value <= self.threshold)
        if self.relation == "ge":
            return bool(self.value >= self.threshold)
        return bool(self.value == self.threshold)

    @property
    def ratio(self) -> float:
        """value / threshold oriented so that values above 1 fail."""
        if self.relation == "ge":
            return self.threshold / self.value if self.value > 0 else np.inf
        if self.relation == "eq":
            return 0.5 if self.passed else 2.0
        return self.value / self.threshold if self.threshold > 0 else (0.0 if self.value <= 0 else np.inf)


def checks_to_csv(checks) -> str:
    return rows_to_csv(["suite", "check", "value", "relation", "threshold", "passed"],
                       [(c.suite, c.name, float(c.value), c.relation, float(c.threshold), int(c.passed))
                        for c in checks])


def _grid(cfg: RunConfig) -> TorusGrid:
    return TorusGrid(cfg.n, cfg.grid_size)


def suite_group(cfg: RunConfig) -> list:
    """Isomorphism and inverse law on random generator pairs."""
    grid, intg, rng = _grid(cfg), cfg.integrator(), cfg.rng()
    ident = Isotopy.identity(grid, cfg.steps)
    out = []
    for i in range(cfg.samples):
        a = Generator.random(rng, grid, cfg.steps, amplitude=cfg.amplitude)
        b = Generator.random(rng, grid, cfg.steps, amplitude=cfg.amplitude)
        lhs = intg.integrate(group_product(a, b, intg))
        rhs = compose(intg.integrate(a), intg.integrate(b), intg)
        out.append(Check("group", f"pair {i} isomorphism dbar", path_distance(lhs, rhs, intg).dbar,
                         cfg.check_tol))
        unit = intg.integrate(group_product(a, group_inverse(a, intg), intg))
        out.append(Check("group", f"pair {i} inverse law dbar", path_distance(unit, ident, intg).dbar,
                         cfg.check_tol))
    return out


def suite_hodge(cfg: RunConfig) -> list:
    """Round trip (U, H) -> dU + H -> (U, H) on random band-limited data."""
    grid, rng = _grid(cfg), cfg.rng()
    rec = exact = 0.0
    for _ in range(cfg.samples):
        g = Generator.random(rng, grid, 1, amplitude=1.0)
        u, h = g.hams[-1], g.harms[-1]
        du = exterior_d(ScalarField(grid, u))
        alpha = OneFormField(grid, du.components + h.reshape((grid.dim,) + (1,) * grid.dim))
        split = hodge_decompose(alpha, cfg.closed_tol)
        rec = max(rec, float(np.abs(split.potential.values - u).max()),
                  float(np.abs(split.harmonic.coeffs - h).max()))
        exact = max(exact, float(np.abs(hodge_decompose(du, cfg.closed_tol).harmonic.coeffs).max()))
    return [Check("hodge", f"reconstruction sup error ({cfg.samples} samples)", rec, 1e-8),
            Check("hodge", "harmonic part of exact forms", exact, 1e-10)]


def rotation_vectors(n: int) -> list:
    """(+-0.3, 0), (0, +-0.4) and (0.3, 0.4) embedded in the first conjugate pair."""
    out = []
    for a, b in ((0.3, 0.0), (-0.3, 0.0), (0.0, 0.4), (0.0, -0.4), (0.3, 0.4)):
        v = np.zeros(2 * n)
        v[0], v[n] = a, b
        out.append(v)
    return out


def suite_duality(cfg: RunConfig) -> list:
    """Mass flow by formula against the direct lift integral."""
    grid, intg, rng = _grid(cfg), cfg.integrator(), cfg.rng()
    out = []
    for v in rotation_vectors(cfg.n):
        g = build_rotation(RotationSpec(tuple(v)), grid, cfg.steps)
        out.append(Check("duality", f"rotation {tuple(float(x) for x in v)} gap",
                         duality_gap(g, intg.integrate(g)), 1e-6))
    for i in range(cfg.samples):
        v = rotation_vectors(cfg.n)[i % 5]
        pert = Generator.random(rng, grid, cfg.steps, amplitude=cfg.amplitude, hamiltonian_only=True)
        g = Generator(grid, pert.times, pert.hams, np.broadcast_to(flat_vector(v).coeffs, pert.harms.shape))
        out.append(Check("duality", f"perturbed rotation {i} gap", duality_gap(g, intg.integrate(g)),
                         cfg.check_tol))
    for i in range(cfg.samples):
        g = Generator.random(rng, grid, cfg.steps, amplitude=cfg.amplitude, hamiltonian_only=True)
        phi = intg.integrate(g)
        worst = max(abs(mass_flow_direct(phi, m)) for m in basis_classes(cfg.n))
        out.append(Check("duality", f"hamiltonian {i} mass flow", worst, cfg.check_tol))
    return out


def sin_harmonic_generator(grid: TorusGrid, steps: int, amplitude: float = 0.3) -> Generator:
    """(0, amplitude sin(2 pi t) dtheta_1), a flux-zero non-Hamiltonian generator."""
    e1 = np.zeros(grid.dim)
    e1[0] = amplitude
    return Generator.from_functions(grid, steps, harm_fn=lambda t: np.sin(2 * np.pi * t) * e1)


def suite_weinstein(cfg: RunConfig) -> list:
    grid, intg = _grid(cfg), cfg.integrator()
    g = sin_harmonic_generator(grid, cfg.steps)
    res = weinstein_deform(g, intg, flux_tol=cfg.flux_tol, tol=cfg.check_tol, s_steps=cfg.s_steps)
    rep = res.report
    hom = homotopy_eval(res.family, res.base, intg)
    out = [Check("weinstein", "harmonic residual", rep.harmonic_residual, cfg.check_tol),
           Check("weinstein", "boundary t=0", rep.boundary_t0, cfg.check_tol),
           Check("weinstein", "boundary t=1", rep.boundary_t1, cfg.check_tol),
           Check("weinstein", "endpoint dC0", rep.endpoint_distance, cfg.check_tol),
           Check("weinstein", "homotopy start defect", hom.start_defect, cfg.check_tol),
           Check("weinstein", "homotopy end defect", hom.end_defect, cfg.check_tol)]
    e1 = np.zeros(grid.dim)
    e1[0] = 1.0
    try:
        weinstein_deform(Generator.autonomous(grid, cfg.steps, harm=e1), intg, flux_tol=cfg.flux_tol)
        raised = 0.0
    except FluxNotZero:
        raised = 1.0
    out.append(Check("weinstein", "nonzero flux rejected", raised, 1.0, "eq"))
    return out


def suite_ldefor2(cfg: RunConfig) -> list:
    grid = _grid(cfg)
    v = np.asarray(cfg.rotation)
    times = np.linspace(0.0, 1.0, cfg.steps + 1)
    bundles = [ldefor2_family(np.broadcast_to(j / (1 + j) * v, (times.size, grid.dim)), grid,
                              cfg.s_steps, times) for j in range(1, 9)]
    out = []
    for r in ldefor2_sequence_report(bundles):
        out.append(Check("ldefor2", f"i={r.index} Z(s,t) gap", r.zst_gap, 3 * r.z_gap + 1e-6))
        out.append(Check("ldefor2", f"i={r.index} Y gap", r.y_gap, r.z_gap + 1e-6))
    return out


def strip_displaced(nu: Fraction, a1: Fraction, size: int) -> bool:
    """Exact rational oracle: every grid point of C(nu) lands at least one cell outside it."""
    h = Fraction(1, size)
    last = (-(-nu * size // 1) - 1) * h  # largest grid point below nu
    clearance = min(a1 - nu, 1 - a1 - last)
    return clearance >= h


def suite_examples(cfg: RunConfig) -> list:
    """Golden lengths of reparametrized rotations, displacement table, energy bound."""
    grid, intg = _grid(cfg), cfg.integrator()
    out = []
    v = np.asarray(cfg.rotation)
    for j in cfg.reparam:
        g = build_rotation(RotationSpec(tuple(v), j), grid, cfg.steps)
        golden = j / (1 + j) * float(np.abs(v).sum())
        out.append(Check("examples", f"length j={j}", abs(length_linf(g) - golden), 1e-9))
    mismatches = 0
    for nu in (Fraction(1, 10), Fraction(1, 5), Fraction(1, 4)):
        region = Region.strip(float(nu))
        for k in range(1, 11):
            a1 = Fraction(k, 20)
            shift = np.zeros(grid.dim)
            shift[0] = float(a1)
            phi = Isotopy.translation(grid, 4, shift)
            expect = strip_displaced(nu, a1, grid.size)
            mismatches += int(bool(displacement_test(phi, region)) != expect)
    out.append(Check("examples", "displacement table mismatches", float(mismatches), 0.0, "eq"))
    cert = displacement_energy_upper(Region.strip(cfg.nu), RotationSearch.uniform(cfg.energy_step),
                                     grid, intg)
    out.append(Check("examples", f"energy bound C({cfg.nu}) > nu", cert.bound, cfg.nu, "ge"))
    out.append(Check("examples", f"energy bound C({cfg.nu}) finite", cert.bound, 0.5, "le"))
    spec = RotationSpec(tuple(v))
    conj = mollified_conjugator(grid, cfg.steps, cfg.conj_amplitude, cfg.conj_widths[-1])
    gen, path = build_conjugated(spec, conj, intg)
    out.append(Check("examples", "conjugated flux - [eta]",
                     float(np.abs(flux(gen).coeffs - spec.harmonic().coeffs).max()), 1e-12))
    end = intg.integrate(gen).disp[-1]
    out.append(Check("examples", "conjugated endpoint dC0",
                     float(np.abs(end - path.disp[-1]).max()), cfg.check_tol))
    return out


def ugr_generators(grid: TorusGrid, steps: int) -> dict:
    e1 = np.zeros(grid.dim)
    e1[0] = 1.0
    rot = build_rotation(RotationSpec((0.3,) + (0.0,) * (grid.dim - 2) + (0.4,)), grid, steps)
    ham = Generator.autonomous(grid, steps, ham=np.sin(2 * np.pi * grid.coords[0]) / (2 * np.pi))
    tdep = Generator.from_functions(grid, steps, harm_fn=lambda t: np.sin(2 * np.pi * t) * e1)
    return {"rotation": rot, "autonomous hamiltonian": ham, "time-dependent harmonic": tdep}


def suite_ugr(cfg: RunConfig) -> list:
    grid, intg = _grid(cfg), cfg.integrator()
    out = []
    for label, g in ugr_generators(grid, cfg.steps).items():
        rep = one_param_group_check(intg.integrate(g), intg)
        if label.startswith("time-dependent"):
            out.append(Check("ugr", f"{label} group defect", rep.group_defect, 0.1, "ge"))
        else:
            out.append(Check("ugr", f"{label} group defect", rep.group_defect, cfg.check_tol))
    return out


def run_suite(name: str, cfg: RunConfig) -> list:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    return globals()[f"suite_{name}"](cfg)
