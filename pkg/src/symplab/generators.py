"""Generator calculus for symplectic isotopies of the flat torus.

A generator is the time-sampled pair (U_t, H_t): a normalized Hamiltonian
family and a family of harmonic one-forms, so that the isotopy velocity Z_t
satisfies iota(Z_t) omega = dU_t + H_t.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .torus import HarmonicForm, ScalarField, TorusGrid, osc


class DiscretizationMismatch(ValueError):
    """Objects sampled on incompatible space or time grids were combined."""


def uniform_times(steps: int, t_end: float = 1.0) -> np.ndarray:
    return np.linspace(0.0, t_end, steps + 1)


def _check_times(times: np.ndarray) -> None:
    if times.ndim != 1 or times.size < 2:
        raise ValueError("need at least two time samples")
    if times[0] != 0.0:
        raise ValueError("time samples must start at 0")
    dt = np.diff(times)
    if np.any(dt <= 0):
        raise ValueError("time samples must be strictly increasing")
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
        raise ValueError("time samples must be uniform")


@dataclass(frozen=True, eq=False)
class Generator:
    """Time-sampled generator (U, H).

    The Hamiltonian family is normalized (zero grid mean) at construction.

    Attributes
    ----------
    grid : TorusGrid
    times : ndarray, shape (M+1,)
    hams : ndarray, shape (M+1, N, ..., N)
    harms : ndarray, shape (M+1, 2n)
    """

    grid: TorusGrid
    times: np.ndarray
    hams: np.ndarray
    harms: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        _check_times(times)
        hams = np.array(self.hams, dtype=float)
        harms = np.array(self.harms, dtype=float)
        m1 = times.size
        if hams.shape != (m1,) + self.grid.shape:
            raise DiscretizationMismatch(f"hams shape {hams.shape} does not match grid/times")
        if harms.shape != (m1, self.grid.dim):
            raise DiscretizationMismatch(f"harms shape {harms.shape} does not match grid/times")
        if not (np.all(np.isfinite(hams)) and np.all(np.isfinite(harms))):
            raise ValueError("generator has non-finite entries")
        axes = tuple(range(1, self.grid.dim + 1))
        hams -= hams.mean(axis=axes, keepdims=True)
        for a in (times, hams, harms):
            a.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "hams", hams)
        object.__setattr__(self, "harms", harms)

    # construction helpers
    @classmethod
    def zero(cls, grid: TorusGrid, steps: int, t_end: float = 1.0) -> "Generator":
        times = uniform_times(steps, t_end)
        return cls(grid, times, np.zeros((times.size,) + grid.shape),
                   np.zeros((times.size, grid.dim)))

    @classmethod
    def autonomous(cls, grid: TorusGrid, steps: int, ham=None, harm=None) -> "Generator":
        """Time-independent generator from a ScalarField/array and HarmonicForm/array."""
        times = uniform_times(steps)
        u = np.zeros(grid.shape) if ham is None else _values(ham)
        h = np.zeros(grid.dim) if harm is None else _coeffs(harm)
        return cls(grid, times, np.broadcast_to(u, (times.size,) + grid.shape),
                   np.broadcast_to(h, (times.size, grid.dim)))

    @classmethod
    def from_functions(cls, grid: TorusGrid, steps: int, ham_fn=None, harm_fn=None,
                       t_end: float = 1.0) -> "Generator":
        """Sample ``ham_fn(t, *coords)`` and ``harm_fn(t)`` on the grids."""
        times = uniform_times(steps, t_end)
        hams = np.zeros((times.size,) + grid.shape)
        harms = np.zeros((times.size, grid.dim))
        for k, t in enumerate(times):
            if ham_fn is not None:
                hams[k] = np.broadcast_to(ham_fn(t, *grid.coords), grid.shape)
            if harm_fn is not None:
                harms[k] = _coeffs(harm_fn(t))
        return cls(grid, times, hams, harms)

    @classmethod
    def random(cls, rng: np.random.Generator, grid: TorusGrid, steps: int,
               amplitude: float = 0.01, kmax: int = 2, harmonic: float = 0.3,
               hamiltonian_only: bool = False) -> "Generator":
        """Random band-limited generator.

        Fourier modes with 0 < |k|_inf <= kmax carry coefficients that are affine
        or sinusoidal in t, scaled by ``amplitude / |k|^2``.  The harmonic part
        is h0 + t h1 with N(0, harmonic^2) entries.
        """
        times = uniform_times(steps)
        t = times.reshape((-1,) + (1,) * grid.dim)
        hams = np.zeros((times.size,) + grid.shape)
        rng_k = range(-kmax, kmax + 1)
        for k in np.stack(np.meshgrid(*([rng_k] * grid.dim), indexing="ij"), -1).reshape(-1, grid.dim):
            nz = np.flatnonzero(k)
            if nz.size == 0 or k[nz[0]] < 0:
                continue
            a, b, c, d = rng.normal(size=4) * amplitude / float(k @ k)
            ph = 2 * np.pi * np.tensordot(k, grid.coords, axes=1)
            hams += (a + b * t) * np.cos(ph) + (c + d * np.sin(2 * np.pi * t)) * np.sin(ph)
        if hamiltonian_only:
            harms = np.zeros((times.size, grid.dim))
        else:
            h0, h1 = rng.normal(size=(2, grid.dim)) * harmonic
            harms = h0 + np.outer(times, h1)
        return cls(grid, times, hams, harms)

    # accessors
    @property
    def steps(self) -> int:
        return self.times.size - 1

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def ham(self, k: int) -> ScalarField:
        return ScalarField(self.grid, self.hams[k])

    def harm(self, k: int) -> HarmonicForm:
        return HarmonicForm(self.harms[k])

    def check_compatible(self, other: "Generator") -> None:
        self.grid.check_same(other.grid)
        if self.times.shape != other.times.shape or not np.allclose(self.times, other.times):
            raise DiscretizationMismatch("generators have different time grids")

    def _with(self, hams, harms) -> "Generator":
        return Generator(self.grid, self.times, hams, harms)

    def __add__(self, other: "Generator") -> "Generator":
        self.check_compatible(other)
        return self._with(self.hams + other.hams, self.harms + other.harms)

    def __sub__(self, other: "Generator") -> "Generator":
        self.check_compatible(other)
        return self._with(self.hams - other.hams, self.harms - other.harms)

    def __neg__(self) -> "Generator":
        return self._with(-self.hams, -self.harms)

    def scaled(self, c: float) -> "Generator":
        return self._with(c * self.hams, c * self.harms)


@dataclass(frozen=True)
class GeneratorSeq:
    """Finite prefix of a sequence of generators sharing one discretization."""

    items: tuple

    def __post_init__(self):
        items = tuple(self.items)
        for g in items[1:]:
            items[0].check_compatible(g)
        object.__setattr__(self, "items", items)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)


def _coeffs(h) -> np.ndarray:
    return h.coeffs if isinstance(h, HarmonicForm) else np.asarray(h, dtype=float)


# --- norms --------------------------------------------------------------------

def vf_norm(u, h) -> float:
    """Banyaga norm |H| + osc(U) of the symplectic vector field X^(U,H)."""
    return float(np.abs(_coeffs(h)).sum()) + osc(_values(u))


def vf_norms(g: Generator) -> np.ndarray:
    """Per-time-sample Banyaga norms osc(U_t) + |H_t|."""
    axes = tuple(range(1, g.grid.dim + 1))
    oscs = g.hams.max(axis=axes) - g.hams.min(axis=axes)
    return oscs + np.abs(g.harms).sum(axis=1)


def linf_family_norm(g: Generator) -> float:
    """max_t ||X^(U_t, H_t)||."""
    return float(vf_norms(g).max())


# --- the Delta-tilde integral -------------------------------------------------

def cumulative_trapezoid(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """int_0^{t_k} values ds along axis 0 (trapezoid rule), starting at 0."""
    dt = np.diff(times).reshape((-1,) + (1,) * (values.ndim - 1))
    out = np.zeros_like(values)
    out[1:] = np.cumsum(0.5 * dt * (values[1:] + values[:-1]), axis=0)
    return out


def delta_tilde(harms, phi, reading: str = "literal", quadrature: str = "lift") -> np.ndarray:
    """Normalized Delta_t(K, phi) for every time sample t.

    Delta_t(K, phi)(x) = int_0^t K_t(d/ds phi^s(x)) ds, then minus its grid mean.

    Parameters
    ----------
    harms : ndarray (M+1, 2n) or Generator
        The harmonic family K (a Generator contributes its ``harms``).
    phi : Isotopy
        Path whose Lagrangian velocities are integrated.
    reading : {"literal", "inner"}
        "literal" holds K at the outer time t; "inner" uses K_s inside the integral.
    quadrature : {"lift", "trapezoid"}
        With the literal reading and constant-coefficient K the integrand is
        K_t applied to d/ds phi^s(x), so the integral is exactly K_t of the
        lifted displacement ("lift").  "trapezoid" integrates the stored
        velocities instead.

    Returns
    -------
    ndarray, shape (M+1, N, ..., N)
    """
    k = _coeffs(harms.harms if isinstance(harms, Generator) else harms)
    if k.shape[0] != phi.times.size:
        raise DiscretizationMismatch(
            f"harmonic family has {k.shape[0]} samples, path has {phi.times.size}")
    dim = phi.grid.dim
    kb = k.reshape(k.shape + (1,) * dim)
    if reading == "literal":
        if quadrature == "lift":
            integral = phi.disp
        elif quadrature == "trapezoid":
            integral = cumulative_trapezoid(phi.velocity, phi.times)
        else:
            raise ValueError(f"unknown quadrature {quadrature!r}")
        out = (kb * integral).sum(axis=1)
    elif reading == "inner":
        out = cumulative_trapezoid((kb * phi.velocity).sum(axis=1), phi.times)
    else:
        raise ValueError(f"unknown reading {reading!r}")
    axes = tuple(range(1, dim + 1))
    return out - out.mean(axis=axes, keepdims=True)


# --- group law ----------------------------------------------------------------

def _default_integrator(integrator):
    if integrator is None:
        from .flows import Integrator

        return Integrator()
    return integrator


def group_product(a: Generator, b: Generator, integrator=None) -> Generator:
    """(U,H) * (V,K) = (U + V o phi^{-1} + Delta~(K, phi^{-1}), H + K), phi = phi_(U,H)."""
    a.check_compatible(b)
    intg = _default_integrator(integrator)
    if not np.any(a.hams) and not np.any(a.harms):
        return b
    if not np.any(b.hams) and not np.any(b.harms):
        return a
    phi_inv = intg.invert(intg.integrate(a))
    v_pulled = intg.pullback(b.hams, phi_inv)
    delta = delta_tilde(b.harms, phi_inv, intg.reading, intg.quadrature)
    return Generator(a.grid, a.times, a.hams + v_pulled + delta, a.harms + b.harms)


def group_inverse(a: Generator, integrator=None) -> Generator:
    """Inverse generator (-U o phi - Delta~(H, phi), -H)."""
    intg = _default_integrator(integrator)
    phi = intg.integrate(a)
    u_pulled = intg.pullback(a.hams, phi)
    delta = delta_tilde(a.harms, phi, intg.reading, intg.quadrature)
    return Generator(a.grid, a.times, -u_pulled - delta, -a.harms)


def d2_distance(a: Generator, b: Generator, integrator=None,
                a_inv: Generator | None = None, b_inv: Generator | None = None) -> float:
    """D^2 = (||X_a - X_b||^inf + ||X_abar - X_bbar||^inf) / 2.

    Precomputed inverse generators may be passed to avoid re-integration.
    """
    a.check_compatible(b)
    if a_inv is None:
        a_inv = group_inverse(a, integrator)
    if b_inv is None:
        b_inv = group_inverse(b, integrator)
    return 0.5 * (linf_family_norm(a - b) + linf_family_norm(a_inv - b_inv))


# --- Cauchy diagnostics -------------------------------------------------------

@dataclass
class CauchyReport:
    """Consecutive-gap table for a finite generator sequence."""

    d2_gaps: np.ndarray
    forward_gaps: np.ndarray
    pushforward_gaps: np.ndarray
    flags: dict = field(default_factory=dict)

    def rows(self):
        for i, (d2, fw, pf) in enumerate(zip(self.d2_gaps, self.forward_gaps,
                                             self.pushforward_gaps)):
            yield {"i": i, "d2": float(d2), "forward_gap": float(fw),
                   "pushforward_gap": float(pf)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["i", "d2", "forward_gap", "pushforward_gap"],
                           lineterminator="\n")
        w.writeheader()
        for r in self.rows():
            w.writerow({k: (f"{v:.12e}" if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()


def _nonincreasing(x: np.ndarray, slack: float = 1e-12) -> bool:
    return bool(np.all(np.diff(x) <= slack * max(1.0, float(np.abs(x).max(initial=0.0)))))


def cauchy_report_gen(seq: Sequence[Generator], integrator=None) -> CauchyReport:
    """Consecutive D^2 distances, forward gaps and pushforward gaps.

    The pushforward family Y^i_t = -(phi_i^{-t})_* X^i_t is generated by the
    inverse generator of the i-th item, so its gaps are the L^inf gaps of the
    inverse generators.
    """
    items = list(seq)
    if len(items) < 2:
        raise ValueError("need at least two generators")
    for g in items[1:]:
        items[0].check_compatible(g)
    intg = _default_integrator(integrator)
    inverses = [group_inverse(g, intg) for g in items]
    fw = np.array([linf_family_norm(items[i] - items[i + 1]) for i in range(len(items) - 1)])
    pf = np.array([linf_family_norm(inverses[i] - inverses[i + 1])
                   for i in range(len(items) - 1)])
    d2 = 0.5 * (fw + pf)
    flags = {
        "d2_nonincreasing": _nonincreasing(d2),
        "forward_nonincreasing": _nonincreasing(fw),
        "pushforward_nonincreasing": _nonincreasing(pf),
    }
    return CauchyReport(d2, fw, pf, flags)
