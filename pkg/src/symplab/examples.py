"""Worked examples on the torus: rotations, conjugated rotations, strip displacement."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .flows import Integrator, Isotopy, compose_slice, default_integrator
from .generators import Generator
from .hofer import (DisplacementResult, EnergyCertificate, Region, RotationSearch,
                    displacement_energy_upper, displacement_test)
from .torus import TorusGrid, flat_vector


class NotHamiltonianConjugator(ValueError):
    """The conjugating generator has a nonzero harmonic part."""


class ScenarioRangeWarning(UserWarning):
    """Scenario parameters lie outside the ranges of the worked example."""


@dataclass(frozen=True)
class RotationSpec:
    """Rotation by v, optionally reparametrized by f_j(t) = (j/(1+j)) t."""

    v: tuple
    reparam_j: int | None = None

    def __post_init__(self):
        v = tuple(float(x) for x in np.ravel(self.v))
        if len(v) % 2 or not np.all(np.isfinite(v)):
            raise ValueError("rotation vector needs an even number of finite entries")
        if self.reparam_j is not None and int(self.reparam_j) < 1:
            raise ValueError("reparametrization index must be a positive integer")
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return len(self.v) // 2

    @property
    def speed(self) -> float:
        """The factor j/(1+j), or 1 without reparametrization."""
        if self.reparam_j is None:
            return 1.0
        j = int(self.reparam_j)
        return j / (1 + j)

    @property
    def velocity(self) -> np.ndarray:
        return self.speed * np.asarray(self.v)

    def harmonic(self):
        """The form iota(dR/dt) omega = speed * sum a_i dtheta_{i+n} - b_i dtheta_i."""
        return flat_vector(self.velocity)


def build_rotation(spec: RotationSpec, grid: TorusGrid, steps: int) -> Generator:
    """Generator (0, H) of the (reparametrized) rotation."""
    if grid.n != spec.n:
        raise ValueError(f"rotation has n={spec.n}, grid has n={grid.n}")
    return Generator.autonomous(grid, steps, harm=spec.harmonic())


def conjugation_potential(spec: RotationSpec, conj_path: Isotopy,
                          integrator: Integrator | None = None) -> np.ndarray:
    """Normalized mu = int_0^1 eta(dPhi/ds) o Phi(s) ds on the grid."""
    intg = integrator or default_integrator()
    eta = spec.harmonic().coeffs.reshape((conj_path.grid.dim,) + (1,) * conj_path.grid.dim)
    if intg.quadrature == "lift":
        mu = (eta * conj_path.disp[-1]).sum(axis=0)
    else:
        integrand = (eta[None] * conj_path.velocity).sum(axis=1)
        mu = np.trapezoid(integrand, conj_path.times, axis=0)
    return mu - mu.mean()


def build_conjugated(spec: RotationSpec, conj: Generator,
                     integrator: Integrator | None = None,
                     harmonic_tol: float = 1e-12) -> tuple:
    """Rotation conjugated by the time-one map phi of a Hamiltonian path.

    Returns ``(generator, path)``: the generator (mu, eta) and the path
    t -> phi^{-1} o R^t o phi computed by composing maps directly.

    Raises
    ------
    NotHamiltonianConjugator
        If ``conj`` has a harmonic part.
    """
    worst = float(np.abs(conj.harms).max()) if conj.harms.size else 0.0
    if worst > harmonic_tol:
        raise NotHamiltonianConjugator(f"conjugator harmonic part {worst:.3e} is nonzero")
    intg = integrator or default_integrator()
    grid = conj.grid
    steps = conj.steps
    if not np.any(conj.hams):
        gen = build_rotation(spec, grid, steps)
        return gen, intg.integrate(gen)
    conj_path = intg.integrate(conj)
    mu = conjugation_potential(spec, conj_path, intg)
    gen = Generator(grid, conj.times, np.broadcast_to(mu, (conj.times.size,) + grid.shape),
                    np.broadcast_to(spec.harmonic().coeffs, (conj.times.size, grid.dim)))
    phi = conj_path.disp[-1]
    phi_inv = intg.invert(conj_path).disp[-1]
    v = spec.velocity.reshape((grid.dim,) + (1,) * grid.dim)
    disp = []
    for t in conj.times:
        rot_phi = phi + t * v
        disp.append(compose_slice(phi_inv, rot_phi, grid, intg))
    return gen, Isotopy(grid, conj.times, np.stack(disp))


def smooth_conjugator(grid: TorusGrid, steps: int, amplitude: float = 0.02,
                      width: float = 0.15, center=None) -> Generator:
    """Autonomous Hamiltonian: a periodic von Mises bump of the given width.

    exp(kappa (cos 2 pi x - 1)) with kappa = 1/(2 pi width)^2 matches a
    Gaussian of standard deviation ``width`` near its center.
    """
    c = np.full(grid.dim, 0.5) if center is None else np.asarray(center, dtype=float)
    delta = grid.coords - c.reshape((grid.dim,) + (1,) * grid.dim)
    kappa = 1.0 / (2 * np.pi * width) ** 2
    bump = amplitude * np.exp(kappa * (np.cos(2 * np.pi * delta) - 1.0).sum(axis=0))
    return Generator.autonomous(grid, steps, ham=bump)


def mollified_conjugator(grid: TorusGrid, steps: int, amplitude: float = 0.05,
                         width: float = 0.02, exponent: float = 1.5) -> Generator:
    """Autonomous Hamiltonian a |sin(pi theta_1)|^p mollified at scale ``width``.

    For 1 < p < 2 the unmollified flow is a shear with Hoelder but not
    Lipschitz velocity: a Hamiltonian homeomorphism that is not a
    diffeomorphism.  The mollifier is the periodic heat kernel, applied as
    exp(-2 (pi k width)^2) on Fourier modes.
    """
    if width < 0:
        raise ValueError("width must be nonnegative")
    base = np.abs(np.sin(np.pi * grid.coords[0])) ** exponent
    k = grid.wavenumbers[0]
    damp = np.exp(-2.0 * (np.pi * k * width) ** 2)
    smooth = np.real(np.fft.ifftn(np.fft.fftn(base) * damp))
    return Generator.autonomous(grid, steps, ham=amplitude * smooth)


@dataclass(frozen=True)
class ConjugatorTrend:
    widths: tuple
    mu_gaps: tuple

    def rows(self):
        return [(self.widths[i], self.widths[i + 1], self.mu_gaps[i]) for i in range(len(self.mu_gaps))]


def conjugated_trend(spec: RotationSpec, grid: TorusGrid, steps: int, widths,
                     amplitude: float = 0.05, integrator: Integrator | None = None) -> ConjugatorTrend:
    """sup|mu_j - mu_{j+1}| along mollified conjugators of shrinking width."""
    intg = integrator or default_integrator()
    mus = []
    for w in widths:
        path = intg.integrate(mollified_conjugator(grid, steps, amplitude, w))
        mus.append(conjugation_potential(spec, path, intg))
    gaps = tuple(float(np.abs(mus[i] - mus[i + 1]).max()) for i in range(len(mus) - 1))
    return ConjugatorTrend(tuple(float(w) for w in widths), gaps)


@dataclass(frozen=True, eq=False)
class StripScenario:
    region: Region
    a1: float
    generator: Generator
    path: Isotopy
    displacement: DisplacementResult
    energy: EnergyCertificate
    warnings: tuple = field(default=())

    def to_dict(self) -> dict:
        return {"region": self.region.describe(), "a1": self.a1,
                "displacement": self.displacement.to_dict(), "energy": self.energy.to_dict(),
                "warnings": list(self.warnings)}


def build_strip_scenario(nu: float, a1: float, grid: TorusGrid, steps: int = 200,
                         conj: Generator | None = None, search: RotationSearch | None = None,
                         integrator: Integrator | None = None) -> StripScenario:
    """Displace the strip C(nu) by the rotation R_(a1, 0, ...), optionally conjugated.

    Parameters outside 0 < nu < 1/4 and 0 < a1 <= 1/2 raise a
    :class:`ScenarioRangeWarning` but are still evaluated.
    """
    notes = []
    if not 0.0 < nu < 0.25:
        notes.append(f"nu={nu} outside (0, 1/4)")
    if not 0.0 < a1 <= 0.5:
        notes.append(f"a1={a1} outside (0, 1/2]")
    for msg in notes:
        warnings.warn(msg, ScenarioRangeWarning, stacklevel=2)
    intg = integrator or default_integrator()
    v = np.zeros(grid.dim)
    v[0] = a1
    spec = RotationSpec(tuple(v))
    if conj is None:
        gen = build_rotation(spec, grid, steps)
        path = intg.integrate(gen)
    else:
        gen, path = build_conjugated(spec, conj, intg)
    region = Region.strip(nu)
    disp = displacement_test(path, region)
    search = search or RotationSearch.uniform(0.05)
    candidates = [("scenario", gen)] + list(search.candidates(grid))
    energy = displacement_energy_upper(region, candidates, grid, intg)
    return StripScenario(region, float(a1), gen, path, disp, energy, tuple(notes))
