"""Integration and analysis of isotopies of the flat torus.

Isotopies are stored as lifted displacement fields: the k-th slice maps the
grid point x to x + disp[k](x) in R^{2n}, with disp[0] = 0 and the lift
continued continuously in time.  Because every map in play is homotopic to
the identity, each displacement field is a periodic function on the torus
and can be interpolated like any other field.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .generators import DiscretizationMismatch, Generator, linf_family_norm, uniform_times
from .hodge import NotClosed, curl_defect, poisson_potential, spectral_gradient
from .torus import (OneFormField, PeriodicInterpolator, TorusGrid, flat_coeffs, sharp_coeffs,
                    toroidal_norm)


class StepUnstable(RuntimeError):
    """Consecutive samples moved by half a period or more; refine the time grid."""


class NoConvergence(RuntimeError):
    """The inverse-map iteration did not reach its tolerance."""


class LiftBroken(RuntimeError):
    """The continuous-lift invariant of an isotopy is violated."""


class Isotopy:
    """Time-sampled path of torus maps starting at the identity.

    Parameters
    ----------
    grid : TorusGrid
    times : ndarray, shape (M+1,)
    disp : ndarray, shape (M+1, 2n, N, ..., N)
        Lifted displacement of every grid point.
    velocity : ndarray, optional
        Lagrangian velocities d/dt phi_t(x) at the grid points; derived by
        finite differences when omitted.
    """

    def __init__(self, grid: TorusGrid, times, disp, velocity=None, eulerian=None):
        times = np.array(times, dtype=float)
        disp = np.array(disp, dtype=float)
        if disp.shape != (times.size, grid.dim) + grid.shape:
            raise DiscretizationMismatch(f"displacement shape {disp.shape} does not match grid")
        disp.setflags(write=False)
        times.setflags(write=False)
        self.grid = grid
        self.times = times
        self.disp = disp
        self._velocity = velocity
        self.eulerian = eulerian
        self._inverse_ref = None
        self._inverse_factory = None

    def __repr__(self):
        return f"Isotopy(n={self.grid.n}, N={self.grid.size}, steps={self.steps})"

    @property
    def steps(self) -> int:
        return self.times.size - 1

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @classmethod
    def identity(cls, grid: TorusGrid, steps: int, t_end: float = 1.0) -> "Isotopy":
        times = uniform_times(steps, t_end)
        shape = (times.size, grid.dim) + grid.shape
        return cls(grid, times, np.zeros(shape), velocity=np.zeros(shape))

    @classmethod
    def translation(cls, grid: TorusGrid, steps: int, v, t_end: float = 1.0) -> "Isotopy":
        """The path t -> R_{t v}."""
        times = uniform_times(steps, t_end)
        v = np.asarray(v, dtype=float).reshape((1, grid.dim) + (1,) * grid.dim)
        shape = (times.size, grid.dim) + grid.shape
        disp = np.broadcast_to(times.reshape((-1, 1) + (1,) * grid.dim) * v, shape)
        return cls(grid, times, disp, velocity=np.broadcast_to(v, shape))

    @cached_property
    def velocity(self) -> np.ndarray:
        """Lagrangian velocities, shape (M+1, 2n, N..)."""
        if self._velocity is not None:
            return np.asarray(self._velocity)
        return finite_difference_velocity(self.disp, self.times)

    @cached_property
    def fd_velocity(self) -> np.ndarray:
        return finite_difference_velocity(self.disp, self.times)

    def positions(self, k: int) -> np.ndarray:
        """Lifted images of the grid points at sample k, shape (2n, P)."""
        return self.grid.points + self.disp[k].reshape(self.grid.dim, -1)

    def check_compatible(self, other: "Isotopy") -> None:
        self.grid.check_same(other.grid)
        if self.times.shape != other.times.shape or not np.allclose(self.times, other.times):
            raise DiscretizationMismatch("isotopies have different time grids")

    def lift_jump(self) -> float:
        """Largest per-coordinate displacement change between consecutive samples."""
        if self.steps == 0:
            return 0.0
        return float(np.abs(np.diff(self.disp, axis=0)).max())

    def check_lift(self) -> None:
        if np.abs(self.disp[0]).max() > 1e-12:
            raise LiftBroken("displacement at t=0 is not zero")
        jump = self.lift_jump()
        if jump >= 0.5:
            raise LiftBroken(f"consecutive displacement jump {jump:.3f} >= 1/2")


def finite_difference_velocity(disp: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Second-order central differences, one-sided second order at the ends."""
    if times.size < 3:
        return np.gradient(disp, times, axis=0)
    return np.gradient(disp, times, axis=0, edge_order=2)


@dataclass(frozen=True)
class PathDistanceReport:
    """Per-time C^0 distances between two paths, plus the path metric."""

    d_c0_forward: np.ndarray
    d_c0_inverse: np.ndarray
    d0: np.ndarray
    dbar: float


def _midpoint_weights(k: int, steps: int):
    """Indices/weights interpolating a time-sampled quantity at t_k + dt/2."""
    if steps < 3:
        return (k, k + 1), (0.5, 0.5)
    if k == 0:
        return (0, 1, 2), (3 / 8, 6 / 8, -1 / 8)
    if k == steps - 1:
        return (k - 1, k, k + 1), (-1 / 8, 6 / 8, 3 / 8)
    return (k - 1, k, k + 1, k + 2), (-1 / 16, 9 / 16, 9 / 16, -1 / 16)


class Integrator:
    """Numerical settings and caches for integrating and inverting isotopies.

    Parameters
    ----------
    interp : str
        Off-grid evaluation method: "fourier", "cubic", "quintic", "linear",
        or "auto" (fourier for n = 1, cubic otherwise).
    inverse_tol, inverse_maxiter : float, int
        Stopping rule of the Newton inverse-map iteration.
    inverse_method : str
        "newton" solves y + d(y) = x slice by slice.  "transport" integrates
        d/dt e = -(I + De) Z_t for the inverse displacement on the grid, which
        needs the Eulerian field of the path.  "auto" tries transport, checks
        the residual on sampled slices against ``inverse_check_tol`` and falls
        back to Newton.
    closed_tol : float
        Closedness tolerance used when recovering generators from paths;
        finite-difference velocities are only closed to discretization error.
    reading, quadrature : str
        Options forwarded to :func:`symplab.generators.delta_tilde`.
    """

    def __init__(self, interp: str = "auto", inverse_tol: float = 1e-10,
                 inverse_maxiter: int = 100, closed_tol: float = 1e-2,
                 reading: str = "literal", quadrature: str = "lift",
                 inverse_method: str = "auto", inverse_check_tol: float = 1e-6):
        if inverse_method not in ("auto", "newton", "transport"):
            raise ValueError(f"unknown inverse method {inverse_method!r}")
        self.interp = interp
        self.inverse_method = inverse_method
        self.inverse_check_tol = inverse_check_tol
        self.inverse_tol = inverse_tol
        self.inverse_maxiter = inverse_maxiter
        self.closed_tol = closed_tol
        self.reading = reading
        self.quadrature = quadrature
        self._paths = weakref.WeakKeyDictionary()

    def method(self, grid: TorusGrid) -> str:
        if self.interp == "auto":
            return "fourier" if grid.n == 1 else "cubic"
        return self.interp

    def interpolator(self, values: np.ndarray, grid: TorusGrid) -> PeriodicInterpolator:
        return PeriodicInterpolator(values, grid.dim, self.method(grid))

    # --- forward integration --------------------------------------------

    def velocity_fields(self, g: Generator) -> np.ndarray:
        """Z_t = sharp(dU_t + H_t) on the grid, shape (M+1, 2n, N..)."""
        grid = g.grid
        alpha = spectral_gradient(g.hams, grid)
        alpha = alpha + g.harms.reshape(g.harms.shape + (1,) * grid.dim)
        return np.moveaxis(sharp_coeffs(np.moveaxis(alpha, 1, 0)), 0, 1)

    def integrate(self, g: Generator) -> Isotopy:
        """RK4 solution of d/dt phi_t = Z_t o phi_t on the generator's time grid."""
        cached = self._paths.get(g)
        if cached is not None:
            return cached
        grid = g.grid
        z = self.velocity_fields(g)
        if not np.any(z):
            phi = Isotopy.identity(grid, g.steps, float(g.times[-1]))
            phi.eulerian = z
            self._paths[g] = phi
            return phi
        if not np.any(g.hams) and np.all(g.harms == g.harms[0]):
            # constant harmonic generator: the flow is an exact translation
            phi = Isotopy.translation(grid, g.steps, sharp_coeffs(g.harms[0]),
                                      float(g.times[-1]))
            phi.eulerian = z
            self._paths[g] = phi
            return phi
        interps = [self.interpolator(z[k], grid) for k in range(g.times.size)]
        steps = g.steps
        dt = g.dt
        x = grid.points.copy()
        disp = np.zeros((steps + 1, grid.dim) + grid.shape)
        vel = np.zeros_like(disp)
        for k in range(steps):
            idx, w = _midpoint_weights(k, steps)
            mid = interps[k].combine(w, [interps[i] for i in idx])
            k1 = interps[k](x)
            k2 = mid(x + 0.5 * dt * k1)
            k3 = mid(x + 0.5 * dt * k2)
            k4 = interps[k + 1](x + dt * k3)
            step = dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            jump = float(np.abs(step).max())
            if jump >= 0.5:
                raise StepUnstable(f"displacement jump {jump:.3f} at step {k}; refine the time grid")
            vel[k] = k1.reshape((grid.dim,) + grid.shape)
            x = x + step
            disp[k + 1] = (x - grid.points).reshape((grid.dim,) + grid.shape)
        vel[steps] = interps[steps](x).reshape((grid.dim,) + grid.shape)
        phi = Isotopy(grid, g.times, disp, velocity=vel, eulerian=z)
        self._paths[g] = phi
        return phi

    # --- inversion ----------------------------------------------------------

    def invert(self, phi: Isotopy) -> Isotopy:
        """Slice-wise inverse maps of a path (cached and linked both ways)."""
        if phi._inverse_ref is not None:
            inv = phi._inverse_ref()
            if inv is not None:
                return inv
        if phi._inverse_factory is not None:
            inv = phi._inverse_factory()
        else:
            inv = guess = None
            if self.inverse_method != "newton" and phi.eulerian is not None:
                inv = self._transport_inverse(phi)
                if self.inverse_method == "auto" and \
                        self.inverse_residual(phi, inv) > self.inverse_check_tol:
                    inv, guess = None, inv
            if inv is None:
                if self.inverse_method == "transport":
                    raise ValueError("transport inversion needs the Eulerian field of the path")
                inv = self._solve_inverse(phi, guess)
        _link_inverse(phi, inv)
        return inv

    def inverse_residual(self, phi: Isotopy, inv: Isotopy, samples: int = 10) -> float:
        """sup |phi_t(inv_t(x)) - x| over about ``samples`` slices and the endpoint."""
        grid = phi.grid
        stride = max(1, phi.steps // samples)
        ks = sorted(set(range(stride, phi.times.size, stride)) | {phi.steps})
        worst = 0.0
        for k in ks:
            comp = compose_slice(phi.disp[k], inv.disp[k], grid, self)
            worst = max(worst, float(np.abs(comp).max()))
        return worst

    def _transport_inverse(self, phi: Isotopy) -> Isotopy:
        grid = phi.grid
        z = phi.eulerian
        steps, dt = phi.steps, phi.dt
        e = np.zeros_like(phi.disp)

        def rate(ek, zk):
            de = spectral_gradient(ek, grid)  # [i, j] = d_j e_i
            return -zk - np.einsum("ij...,j...->i...", de, zk)

        for k in range(steps):
            idx, w = _midpoint_weights(k, steps)
            zm = sum(wi * z[i] for wi, i in zip(w, idx))
            k1 = rate(e[k], z[k])
            k2 = rate(e[k] + 0.5 * dt * k1, zm)
            k3 = rate(e[k] + 0.5 * dt * k2, zm)
            k4 = rate(e[k] + dt * k3, z[k + 1])
            e[k + 1] = e[k] + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return Isotopy(grid, phi.times, e)

    def _solve_inverse(self, phi: Isotopy, start: Isotopy | None = None) -> Isotopy:
        grid = phi.grid
        dim = grid.dim
        x = grid.points
        inv = np.zeros_like(phi.disp)
        hist = [np.zeros_like(x)] * 3
        for k in range(1, phi.times.size):
            d = phi.disp[k]
            if not np.any(d):
                hist = hist[1:] + [np.zeros_like(x)]
                continue
            if start is not None:
                guess = start.disp[k].reshape(dim, -1)
            elif k >= 3:
                # quadratic extrapolation in time
                guess = 3 * hist[2] - 3 * hist[1] + hist[0]
            elif k == 2:
                guess = 2 * hist[2] - hist[1]
            else:
                guess = hist[2]
            e = self._solve_slice(d, x, x + guess, grid)
            inv[k] = e.reshape((dim,) + grid.shape)
            hist = hist[1:] + [e]
        return Isotopy(grid, phi.times, inv)

    def _solve_slice(self, d: np.ndarray, x: np.ndarray, y: np.ndarray,
                     grid: TorusGrid) -> np.ndarray:
        """Solve y + d(y) = x by chord steps with Jacobian refresh and backtracking."""
        dim = grid.dim
        disp = self.interpolator(d, grid)
        grad = spectral_gradient(d, grid).reshape((dim * dim,) + grid.shape)  # [i*dim+j] = d_j d_i
        both = self.interpolator(np.concatenate([d, grad]), grid)
        eye = np.eye(dim)

        def residual(y):
            r = x - y - disp(y)
            return r, float(np.abs(r).max())

        def refresh(y):
            v = both(y)
            r = x - y - v[:dim]
            jac = np.moveaxis(v[dim:].reshape(dim, dim, -1), -1, 0) + eye
            return r, float(np.abs(r).max()), jac

        r, err, jac = refresh(y)
        fresh = True
        for _ in range(self.inverse_maxiter):
            if err <= self.inverse_tol:
                return y - x
            step = np.linalg.solve(jac, r.T[..., None])[..., 0].T
            y_new = y + step
            r_new, err_new = residual(y_new)
            if err_new <= 0.25 * err or (fresh and err_new < err):
                y, r, err = y_new, r_new, err_new
                fresh = False
                continue
            if not fresh:
                # slow contraction: re-linearize at the current iterate
                r, err, jac = refresh(y)
                fresh = True
                continue
            # fresh Newton step that does not reduce the residual: backtrack
            beta = 0.5
            while beta >= 1e-3:
                r_new, err_new = residual(y + beta * step)
                if err_new < err:
                    break
                beta *= 0.5
            if err_new >= err:
                break
            r, err, jac = refresh(y + beta * step)
            y = y + beta * step
        if err <= self.inverse_tol:
            return y - x
        raise NoConvergence(f"inverse iteration stalled at residual {err:.3e}")

    # --- pullbacks ----------------------------------------------------------

    def pullback(self, values: np.ndarray, phi: Isotopy) -> np.ndarray:
        """F_t o phi_t for a time-sampled scalar family F, shape (M+1, N..)."""
        grid = phi.grid
        if values.shape[0] != phi.times.size:
            raise DiscretizationMismatch("scalar family and path have different time grids")
        out = np.empty_like(values)
        for k in range(phi.times.size):
            if not np.any(phi.disp[k]):
                out[k] = values[k]
                continue
            f = self.interpolator(values[k], grid)
            out[k] = f(phi.positions(k)).reshape(grid.shape)
        return out


def _link_inverse(phi: Isotopy, inv: Isotopy) -> None:
    phi._inverse_ref = weakref.ref(inv)
    inv._inverse_ref = weakref.ref(phi)
    # keep the pair alive together
    phi._inverse_strong = inv


_DEFAULT = None


def default_integrator() -> Integrator:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Integrator()
    return _DEFAULT


def integrate(g: Generator, integrator: Integrator | None = None) -> Isotopy:
    return (integrator or default_integrator()).integrate(g)


def invert(phi: Isotopy, integrator: Integrator | None = None) -> Isotopy:
    return (integrator or default_integrator()).invert(phi)


def compose_slice(outer: np.ndarray, inner: np.ndarray, grid: TorusGrid,
                  integrator: Integrator) -> np.ndarray:
    """Displacement of outer o inner for single-slice displacements (2n, N..)."""
    if not np.any(outer):
        return np.array(inner)
    pos = grid.points + inner.reshape(grid.dim, -1)
    moved = integrator.interpolator(outer, grid)(pos).reshape(inner.shape)
    return inner + moved


def compose(phi: Isotopy, psi: Isotopy, integrator: Integrator | None = None) -> Isotopy:
    """The path t -> phi_t o psi_t."""
    intg = integrator or default_integrator()
    phi.check_compatible(psi)
    disp = np.stack([compose_slice(phi.disp[k], psi.disp[k], phi.grid, intg)
                     for k in range(phi.times.size)])
    out = Isotopy(phi.grid, phi.times, disp)
    out._inverse_factory = lambda: compose(intg.invert(psi), intg.invert(phi), intg)
    return out


def generator_of(phi: Isotopy, integrator: Integrator | None = None) -> Generator:
    """Recover (U_t, H_t) from a sampled path.

    Finite-difference Lagrangian velocities are moved to Eulerian form via the
    inverse maps, turned into one-forms by the flat map, and Hodge-split.
    """
    intg = integrator or default_integrator()
    if phi.times.size < 3:
        raise ValueError("generator recovery needs at least three time samples")
    grid = phi.grid
    vel = phi.fd_velocity
    inv = intg.invert(phi)
    hams = np.zeros((phi.times.size,) + grid.shape)
    harms = np.zeros((phi.times.size, grid.dim))
    for k in range(phi.times.size):
        if np.any(inv.disp[k]):
            z = intg.interpolator(vel[k], grid)(inv.positions(k)).reshape(vel[k].shape)
        else:
            z = vel[k]
        alpha = flat_coeffs(z)
        defect = curl_defect(OneFormField(grid, alpha))
        if defect > intg.closed_tol:
            raise NotClosed(defect, intg.closed_tol)
        h = alpha.reshape(grid.dim, -1).mean(axis=1)
        exact = alpha - h.reshape((grid.dim,) + (1,) * grid.dim)
        hams[k] = poisson_potential(exact, grid)
        harms[k] = h
    return Generator(grid, phi.times, hams, harms)


def time_shift(phi: Isotopy, s: float, integrator: Integrator | None = None) -> Isotopy:
    """The path t -> phi_{t+s} o phi_s^{-1} on [0, 1 - s]."""
    intg = integrator or default_integrator()
    j = int(round(s / phi.dt))
    if j < 0 or j >= phi.steps or abs(j * phi.dt - s) > 1e-9:
        raise ValueError(f"shift s={s} is not on the time grid (dt={phi.dt})")
    if j == 0:
        return phi
    inv = intg.invert(phi)
    grid = phi.grid
    e = inv.disp[j]
    disp = np.stack([compose_slice(phi.disp[k], e, grid, intg)
                     for k in range(j, phi.times.size)])
    disp[0] = 0.0
    times = phi.times[: phi.times.size - j]
    return Isotopy(grid, times, disp)


def c0_distance(d1: np.ndarray, d2: np.ndarray) -> float:
    """sup_x of the flat toroidal distance between two slices given as displacements."""
    return float(toroidal_norm(d1 - d2, axis=0).max())


def path_distance(phi: Isotopy, psi: Isotopy, integrator: Integrator | None = None
                  ) -> PathDistanceReport:
    """d_C0 of maps and inverses per time, d0 = their max, dbar = max over time."""
    intg = integrator or default_integrator()
    phi.check_compatible(psi)
    fwd = np.array([c0_distance(phi.disp[k], psi.disp[k]) for k in range(phi.times.size)])
    pinv, qinv = intg.invert(phi), intg.invert(psi)
    bwd = np.array([c0_distance(pinv.disp[k], qinv.disp[k]) for k in range(phi.times.size)])
    d0 = np.maximum(fwd, bwd)
    return PathDistanceReport(fwd, bwd, d0, float(d0.max()))


@dataclass(frozen=True)
class GroupCheckReport:
    """One-parameter-group defect of a path and the autonomy defect of its generator."""

    group_defect: float
    worst_pair: tuple
    autonomy_defect: float
    pairs_checked: int


def one_param_group_check(phi: Isotopy, integrator: Integrator | None = None,
                          stride: int | None = None) -> GroupCheckReport:
    """max over grid-compatible (s, t) of d0(phi_{t+s}, phi_t o phi_s).

    ``stride`` subsamples the time indices (default: about 20 per axis).
    """
    intg = integrator or default_integrator()
    grid = phi.grid
    steps = phi.steps
    if stride is None:
        stride = max(1, steps // 20)
    inv = intg.invert(phi)
    worst, worst_pair, count = 0.0, (0, 0), 0
    for i in range(stride, steps + 1, stride):
        for j in range(stride, steps + 1 - i, stride):
            fwd = compose_slice(phi.disp[i], phi.disp[j], grid, intg)
            bwd = compose_slice(inv.disp[j], inv.disp[i], grid, intg)
            d = max(c0_distance(phi.disp[i + j], fwd), c0_distance(inv.disp[i + j], bwd))
            count += 1
            if d > worst:
                worst, worst_pair = d, (float(phi.times[i]), float(phi.times[j]))
    g = generator_of(phi, intg)
    drift = g - Generator(grid, g.times, np.broadcast_to(g.hams[0], g.hams.shape),
                          np.broadcast_to(g.harms[0], g.harms.shape))
    return GroupCheckReport(worst, worst_pair, linf_family_norm(drift), count)


def jacobian_defect(phi: Isotopy) -> float:
    """max over slices and grid points of |det D phi_t - 1|."""
    grid = phi.grid
    worst = 0.0
    for k in range(phi.times.size):
        jac = spectral_gradient(phi.disp[k], grid)  # [i, j] = d_j d_i
        jac = np.moveaxis(jac.reshape(grid.dim, grid.dim, -1), -1, 0) + np.eye(grid.dim)
        worst = max(worst, float(np.abs(np.linalg.det(jac) - 1.0).max()))
    return worst
