"""Flux, mass flow and related cohomological functionals of torus isotopies.

Homotopy classes of maps f: T^{2n} -> S^1 are integer vectors m, with
f(theta) = sum_i m_i theta_i mod 1.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .flows import Integrator, Isotopy, default_integrator
from .generators import DiscretizationMismatch, Generator
from .hodge import DEFAULT_CLOSED_TOL, NotClosed, curl_defect, hodge_decompose, spectral_gradient
from .torus import HarmonicForm, OneFormField, flat_coeffs, wedge_pair_top

GAMMA_NOTE = ("membership of the flux in the flux group is not decidable numerically; "
              "raw magnitudes are reported instead")


@dataclass(frozen=True)
class FluxClass:
    """Cohomology class of a time-integrated harmonic family."""

    harmonic_rep: HarmonicForm

    @property
    def coeffs(self) -> np.ndarray:
        return self.harmonic_rep.coeffs

    def norm(self) -> float:
        return self.harmonic_rep.norm()

    def __add__(self, other: "FluxClass") -> "FluxClass":
        return FluxClass(self.harmonic_rep + other.harmonic_rep)

    def __sub__(self, other: "FluxClass") -> "FluxClass":
        return FluxClass(self.harmonic_rep - other.harmonic_rep)


@dataclass(frozen=True)
class MassFlowValue:
    """Mass flow values keyed by class vectors m."""

    values: dict

    def __getitem__(self, m) -> float:
        return self.values[tuple(int(x) for x in m)]

    def items(self):
        return self.values.items()


def flux(g: Generator) -> FluxClass:
    """Trapezoid time integral of the harmonic family."""
    return FluxClass(HarmonicForm(np.trapezoid(g.harms, g.times, axis=0)))


def pulled_back_velocity_forms(phi: Isotopy) -> np.ndarray:
    """phi_t^*(iota(dphi_t/dt) omega) on the grid, shape (M+1, 2n, N..).

    The Lagrangian velocity is the Eulerian field already evaluated at
    phi_t(x), so the pullback only needs the spatial Jacobian of phi_t.
    """
    grid = phi.grid
    beta = np.moveaxis(flat_coeffs(np.moveaxis(phi.velocity, 1, 0)), 0, 1)
    grad = spectral_gradient(phi.disp, grid)  # [t, i, j] = d_j d_i
    return beta + np.einsum("ti...,tij...->tj...", beta, grad)


def flux_direct(phi: Isotopy, closed_tol: float | None = None,
                integrator: Integrator | None = None) -> FluxClass:
    """Harmonic part of int_0^1 phi_t^*(iota(dphi_t/dt) omega) dt.

    Raises
    ------
    NotClosed
        If the time-integrated pullback fails the closedness test.
    """
    if closed_tol is None:
        closed_tol = (integrator or default_integrator()).closed_tol
    forms = pulled_back_velocity_forms(phi)
    sigma = OneFormField(phi.grid, np.trapezoid(forms, phi.times, axis=0))
    defect = curl_defect(sigma)
    if defect > closed_tol:
        raise NotClosed(defect, closed_tol)
    return FluxClass(HarmonicForm(sigma.means()))


def mass_flow_formula(g: Generator, m) -> float:
    """Pairing of the flux of g with the class m."""
    return wedge_pair_top(flux(g).harmonic_rep, m)


def _class_vector(m, dim: int) -> np.ndarray:
    m = np.asarray(m)
    if m.shape != (dim,):
        raise ValueError(f"class vector must have length {dim}, got shape {m.shape}")
    return m.astype(float)


def mass_flow_trace(phi: Isotopy, m) -> np.ndarray:
    """Grid mean of the lifted f o phi_t - f at every time sample."""
    phi.check_lift()
    mv = _class_vector(m, phi.grid.dim)
    axes = tuple(range(2, 2 + phi.grid.dim))
    return phi.disp.mean(axis=axes) @ mv


def mass_flow_direct(phi: Isotopy, m) -> float:
    """Integral over the torus of the lift of f o phi_1 - f.

    Raises
    ------
    LiftBroken
        If consecutive displacements jump by half a period or more.
    """
    return float(mass_flow_trace(phi, m)[-1])


def basis_classes(n: int) -> list:
    """The classes +-e_1, ..., +-e_{2n}."""
    out = []
    for i in range(2 * n):
        for sign in (1, -1):
            m = np.zeros(2 * n, dtype=int)
            m[i] = sign
            out.append(m)
    return out


def mass_flow_values(phi: Isotopy, m_set) -> MassFlowValue:
    return MassFlowValue({tuple(int(x) for x in m): mass_flow_direct(phi, m) for m in m_set})


@dataclass(frozen=True)
class DualityRow:
    m: tuple
    formula: float
    direct: float

    @property
    def gap(self) -> float:
        return abs(self.formula - self.direct)


@dataclass(frozen=True)
class DualityTable:
    rows: list

    @property
    def max_gap(self) -> float:
        return max((r.gap for r in self.rows), default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "formula", "direct", "gap"])
        for r in self.rows:
            w.writerow([" ".join(str(x) for x in r.m), repr(r.formula), repr(r.direct), repr(r.gap)])
        return buf.getvalue()


def duality_table(g: Generator, phi: Isotopy, m_set=None) -> DualityTable:
    """Formula and direct mass flow side by side for each class in ``m_set``."""
    if g.times.size != phi.times.size:
        raise DiscretizationMismatch("generator and path have different time grids")
    if m_set is None:
        m_set = basis_classes(g.grid.n)
    rows = [DualityRow(tuple(int(x) for x in m), mass_flow_formula(g, m), mass_flow_direct(phi, m))
            for m in m_set]
    return DualityTable(rows)


def duality_gap(g: Generator, phi: Isotopy, m_set=None) -> float:
    """max over m of |mass_flow_formula(g, m) - mass_flow_direct(phi, m)|."""
    return duality_table(g, phi, m_set).max_gap


def delta_one(phi: Isotopy, alpha: OneFormField, integrator: Integrator | None = None,
              closed_tol: float = DEFAULT_CLOSED_TOL, k: int = -1) -> np.ndarray:
    """Unnormalized int_0^t alpha(d/ds phi_s(x)) ds at time index k.

    With alpha = dV + c the integral is V(phi_t x) - V(x) + c . (lifted
    displacement), which needs no time quadrature.
    """
    intg = integrator or default_integrator()
    split = hodge_decompose(alpha, closed_tol)
    grid = phi.grid
    c = split.harmonic.coeffs.reshape((grid.dim,) + (1,) * grid.dim)
    disp = phi.disp[k]
    v = split.potential.values
    v_moved = intg.interpolator(v, grid)(phi.positions(k % phi.times.size)).reshape(grid.shape)
    return v_moved - v + (c * disp).sum(axis=0)


def s_alpha(g: Generator | None, phi: Isotopy, alpha: OneFormField,
            integrator: Integrator | None = None,
            closed_tol: float = DEFAULT_CLOSED_TOL) -> float:
    """(1/n) int Delta_1(alpha, phi) omega^n.

    The torus has omega-volume n!, so the value is (n-1)! times the grid
    mean of Delta_1.
    """
    if g is not None and g.times.size != phi.times.size:
        raise DiscretizationMismatch("generator and path have different time grids")
    d1 = delta_one(phi, alpha, integrator, closed_tol)
    return math.factorial(phi.grid.n - 1) * float(d1.mean())


@dataclass(frozen=True)
class ClassifierReport:
    flux_norm: float
    flux_coeffs: tuple
    max_harmonic: float
    classification: str
    tol: float
    note: str = GAMMA_NOTE

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "flux_norm": self.flux_norm,
            "flux_coeffs": list(self.flux_coeffs),
            "max_harmonic": self.max_harmonic,
            "tol": self.tol,
            "note": self.note,
        }


def hamiltonian_classifier(g: Generator, tol: float = 1e-8) -> ClassifierReport:
    """Classify a generator by its harmonic family and its flux.

    ``hamiltonian_generator`` when every harmonic sample vanishes,
    ``flux_zero_only`` when only the time integral does, else
    ``nonzero_flux``.
    """
    fl = flux(g)
    max_h = float(np.abs(g.harms).sum(axis=1).max()) if g.harms.size else 0.0
    if max_h <= tol:
        cls = "hamiltonian_generator"
    elif fl.norm() <= tol:
        cls = "flux_zero_only"
    else:
        cls = "nonzero_flux"
    return ClassifierReport(fl.norm(), tuple(float(x) for x in fl.coeffs), max_h, cls, tol)


def class_vectors(n: int, bound: int = 1) -> list:
    """All nonzero integer class vectors with entries in [-bound, bound]."""
    rng = range(-bound, bound + 1)
    return [np.array(m) for m in itertools.product(rng, repeat=2 * n) if any(m)]
