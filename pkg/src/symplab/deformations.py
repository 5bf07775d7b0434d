"""Two-parameter deformations of symplectic isotopies of the torus.

Both constructions here move points by constant harmonic vector fields,
whose flows are translations.  A :class:`TwoParamFamily` therefore stores
one shift vector per (s, t) sample and broadcasts it over the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .flows import (Integrator, Isotopy, StepUnstable, c0_distance, compose, compose_slice,
                    default_integrator, generator_of, path_distance)
from .flux import flux
from .generators import Generator, cumulative_trapezoid, uniform_times
from .torus import TorusGrid, flat_coeffs, sharp_coeffs


class FluxNotZero(ValueError):
    """The generator's flux exceeds the tolerance."""


class NotHarmonic(ValueError):
    """A vector field family is not spatially constant."""


@dataclass(frozen=True, eq=False)
class TwoParamFamily:
    """Maps G(s, t) of the torus given by uniform shifts, shape (S+1, M+1, 2n)."""

    grid: TorusGrid
    s_times: np.ndarray
    t_times: np.ndarray
    shifts: np.ndarray

    def __post_init__(self):
        shape = (self.s_times.size, self.t_times.size, self.grid.dim)
        if self.shifts.shape != shape:
            raise ValueError(f"shift array has shape {self.shifts.shape}, expected {shape}")

    def slice_disp(self, i: int, k: int) -> np.ndarray:
        """Displacement field of G(s_i, t_k), shape (2n, N..)."""
        v = self.shifts[i, k].reshape((self.grid.dim,) + (1,) * self.grid.dim)
        return np.broadcast_to(v, (self.grid.dim,) + self.grid.shape)

    def s_zero_defect(self) -> float:
        return float(np.abs(self.shifts[0]).max())

    def lift_jumps(self) -> tuple:
        """Largest jumps of the lifts along s and along t."""
        js = float(np.abs(np.diff(self.shifts, axis=0)).max()) if self.s_times.size > 1 else 0.0
        jt = float(np.abs(np.diff(self.shifts, axis=1)).max()) if self.t_times.size > 1 else 0.0
        return js, jt

    def t_path(self, i: int) -> Isotopy:
        """The path t -> G(s_i, t)."""
        return _translation_path(self.grid, self.t_times, self.shifts[i])


def _translation_path(grid: TorusGrid, times: np.ndarray, shifts: np.ndarray) -> Isotopy:
    shape = (times.size, grid.dim) + grid.shape
    disp = np.broadcast_to(shifts.reshape(shifts.shape + (1,) * grid.dim), shape)
    return Isotopy(grid, times, disp)


def _shift_dist(v: np.ndarray) -> np.ndarray:
    """C0 distance of translations by v from the identity (minimum image)."""
    w = v - np.round(v)
    return np.sqrt((w * w).sum(axis=-1))


# --- Weinstein flux-killing deformation ---------------------------------------

@dataclass(frozen=True)
class WeinsteinReport:
    boundary_t0: float
    boundary_t1: float
    harmonic_residual: float
    endpoint_distance: float
    flux_norm: float
    tol: float

    @property
    def ok(self) -> bool:
        return max(self.boundary_t0, self.boundary_t1, self.harmonic_residual,
                   self.endpoint_distance) <= self.tol

    def to_dict(self) -> dict:
        return {"boundary_t0": self.boundary_t0, "boundary_t1": self.boundary_t1,
                "harmonic_residual": self.harmonic_residual,
                "endpoint_distance": self.endpoint_distance, "flux_norm": self.flux_norm,
                "tol": self.tol, "ok": self.ok}


@dataclass(frozen=True, eq=False)
class WeinsteinResult:
    ham_isotopy: Isotopy
    family: TwoParamFamily
    base: Isotopy
    report: WeinsteinReport


def weinstein_family(g: Generator, s_steps: int = 20) -> TwoParamFamily:
    """theta_s^t, the time-s flow of Y_t = -(int_0^t H_u du)^sharp.

    Y_t is a constant field, so theta_s^t is the translation by s Y_t.
    No flux check is made; see :func:`weinstein_deform`.
    """
    y = -sharp_coeffs(cumulative_trapezoid(g.harms, g.times).T).T  # (M+1, 2n)
    s = uniform_times(s_steps)
    return TwoParamFamily(g.grid, s, g.times, s[:, None, None] * y[None])


def weinstein_deform(g: Generator, integrator: Integrator | None = None,
                     flux_tol: float = 1e-8, tol: float = 1e-3,
                     s_steps: int = 20) -> WeinsteinResult:
    """Homotope a flux-zero isotopy, with fixed endpoints, to a Hamiltonian one.

    The path of g = (U, H) is phi_H o alpha with alpha generated by
    (U o phi_H, 0).  The output isotopy is theta_1^t o phi_H^t o alpha_t.

    Raises
    ------
    FluxNotZero
        If |flux(g)| > flux_tol.
    StepUnstable
        Propagated from integration.
    """
    fl = flux(g).norm()
    if fl > flux_tol:
        raise FluxNotZero(f"flux norm {fl:.3e} exceeds tolerance {flux_tol:.3e}")
    intg = integrator or default_integrator()
    grid = g.grid
    harm_only = Generator(grid, g.times, np.zeros_like(g.hams), g.harms)
    phi_h = intg.integrate(harm_only)
    alpha_gen = Generator(grid, g.times, intg.pullback(g.hams, phi_h), np.zeros_like(g.harms))
    base = compose(phi_h, intg.integrate(alpha_gen), intg)
    family = weinstein_family(g, s_steps)
    theta_one = family.t_path(-1)
    ham = compose(theta_one, base, intg)
    report = WeinsteinReport(
        boundary_t0=float(_shift_dist(family.shifts[:, 0]).max()),
        boundary_t1=float(_shift_dist(family.shifts[:, -1]).max()),
        harmonic_residual=float(np.abs(generator_of(ham, intg).harms).sum(axis=1).max()),
        endpoint_distance=c0_distance(ham.disp[-1], intg.integrate(g).disp[-1]),
        flux_norm=fl, tol=tol)
    return WeinsteinResult(ham, family, base, report)


@dataclass(frozen=True)
class HomotopyReport:
    start_defect: float
    end_defect: float
    base_defect: float

    def to_dict(self) -> dict:
        return {"max_s_dC0_H(s,0)_id": self.start_defect,
                "max_s_dC0_H(s,1)_H(0,1)": self.end_defect,
                "dbar_H(0,.)_base": self.base_defect}


def homotopy_eval(family: TwoParamFamily, base: Isotopy,
                  integrator: Integrator | None = None) -> HomotopyReport:
    """Boundary defects of H(s, t) = G(s, t) o base_t."""
    intg = integrator or default_integrator()
    grid = base.grid
    grid.check_same(family.grid)
    if family.t_times.size != base.times.size:
        raise ValueError("family and base have different time grids")

    def h(i, k):
        return compose_slice(family.slice_disp(i, k), base.disp[k], grid, intg)

    s_count = family.s_times.size
    start = max(c0_distance(h(i, 0), np.zeros_like(base.disp[0])) for i in range(s_count))
    end0 = h(0, -1)
    end = max(c0_distance(h(i, -1), end0) for i in range(s_count))
    h0 = Isotopy(grid, base.times, np.stack([h(0, k) for k in range(base.times.size)]))
    return HomotopyReport(start, end, path_distance(h0, base, intg).dbar)


# --- sequential deformation of harmonic families ------------------------------

def harmonic_family(z) -> np.ndarray:
    """Coefficients (M+1, 2n) of a harmonic vector field family.

    Accepts coefficients directly or grid fields (M+1, 2n, N..), which must
    be spatially constant.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim == 2:
        return z
    spatial = tuple(range(2, z.ndim))
    spread = float((z.max(axis=spatial) - z.min(axis=spatial)).max())
    if spread > 1e-10:
        raise NotHarmonic(f"vector field family varies in space by {spread:.3e}")
    return z.mean(axis=spatial)


@dataclass(frozen=True, eq=False)
class LDefor2Bundle:
    """Items of the sequential deformation of a harmonic family Z.

    ``y`` holds Y^t = -int_0^t Z_u du, ``theta`` the s-flows of Y^t,
    ``zst`` the fields Z^(s,t), ``g`` the s-flow of Z^(s,t) and ``v`` the
    t-velocity of G(s, t).
    """

    grid: TorusGrid
    s_times: np.ndarray
    t_times: np.ndarray
    z: np.ndarray
    y: np.ndarray
    theta: TwoParamFamily
    zst: np.ndarray
    g: TwoParamFamily
    v: np.ndarray


def _z_of_time(z: np.ndarray, times: np.ndarray):
    if times.size < 4:
        return lambda tau: np.array([np.interp(tau, times, z[:, i]) for i in range(z.shape[1])]).T
    return CubicSpline(times, z, axis=0)


def ldefor2_family(z, grid: TorusGrid, s_steps: int = 20, times=None) -> LDefor2Bundle:
    """Build the sequential deformation of a harmonic vector field family.

    Z^(s,t) = t Z_{st} - 2s int_0^t Z_u du and G(., t) is its flow in s,
    integrated by RK4; V(s, t) = dG(s,t)/dt o G(s,t)^{-1} reduces to the
    central difference of the shifts in t.

    Raises
    ------
    NotHarmonic
        If ``z`` is given on the grid and is not spatially constant.
    """
    zc = harmonic_family(z)
    if zc.shape[1] != grid.dim:
        raise ValueError("vector field family does not match the grid dimension")
    t = uniform_times(zc.shape[0] - 1) if times is None else np.asarray(times, dtype=float)
    s = uniform_times(s_steps)
    w = cumulative_trapezoid(zc, t)            # int_0^t Z
    y = -w
    theta = TwoParamFamily(grid, s, t, s[:, None, None] * y[None])
    zfun = _z_of_time(zc, t)

    def field(si):
        return t[:, None] * zfun(si * t) - 2 * si * w

    zst = np.stack([field(si) for si in s])
    shifts = np.zeros((s.size, t.size, grid.dim))
    ds = s[1] - s[0] if s.size > 1 else 0.0
    for i in range(s.size - 1):
        si = s[i]
        k1 = field(si)
        k2 = field(si + 0.5 * ds)
        k4 = field(si + ds)
        shifts[i + 1] = shifts[i] + ds / 6.0 * (k1 + 4 * k2 + k4)
        if np.abs(shifts[i + 1] - shifts[i]).max() >= 0.5:
            raise StepUnstable(f"s-step {i} moves points by half a period or more")
    g = TwoParamFamily(grid, s, t, shifts)
    v = np.gradient(shifts, t, axis=1, edge_order=2) if t.size > 2 else np.zeros_like(shifts)
    return LDefor2Bundle(grid, s, t, zc, y, theta, zst, g, v)


def field_sup(v: np.ndarray) -> float:
    """sup over samples of the l1 length of constant field coefficients."""
    v = np.asarray(v, dtype=float)
    return float(np.abs(v).sum(axis=-1).max()) if v.size else 0.0


@dataclass(frozen=True)
class LDefor2Row:
    index: int
    z_gap: float
    y_gap: float
    zst_gap: float
    zst_gap_per_s: tuple

    @property
    def zst_ok(self) -> bool:
        return self.zst_gap <= 3 * self.z_gap + 1e-6

    @property
    def y_ok(self) -> bool:
        return self.y_gap <= self.z_gap + 1e-6


def ldefor2_sequence_report(bundles) -> list:
    """Cauchy transfer gaps between consecutive bundles.

    Each row reports sup|Z_i - Z_{i+1}|, sup|Y_i - Y_{i+1}|, the joint sup
    over (s, t) of |Z^(s,t)_i - Z^(s,t)_{i+1}| and its per-s sups.
    """
    rows = []
    for i in range(len(bundles) - 1):
        a, b = bundles[i], bundles[i + 1]
        dz = field_sup(a.z - b.z)
        dy = field_sup(a.y - b.y)
        dzst = np.abs(a.zst - b.zst).sum(axis=-1)  # (S+1, M+1)
        rows.append(LDefor2Row(i, dz, dy, float(dzst.max()), tuple(float(x) for x in dzst.max(axis=1))))
    return rows


def ldefor2_hamiltonian_residual(bundle: LDefor2Bundle, integrator: Integrator | None = None) -> float:
    """max_t |harmonic part| of the generator of theta_{1,t} o phi_Z^t."""
    intg = integrator or default_integrator()
    grid = bundle.grid
    gen = Generator(grid, bundle.t_times, np.zeros((bundle.t_times.size,) + grid.shape),
                    flat_coeffs(bundle.z.T).T)
    path = compose(bundle.theta.t_path(-1), intg.integrate(gen), intg)
    return float(np.abs(generator_of(path, intg).harms).sum(axis=1).max())
