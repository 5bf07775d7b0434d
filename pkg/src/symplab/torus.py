"""
Flat torus T^{2n} = R^{2n}/Z^{2n} with the symplectic form
omega = sum_i dtheta_i ^ dtheta_{i+n} and the flat metric.

Fields are sampled on a uniform periodic grid with N points per axis,
grid point j sitting at theta = j / N.  Component arrays carry the
coordinate index first, i.e. a one-form field has shape (2n, N, ..., N).

Sign convention for the musical isomorphism: iota(Z) omega is

    sum_i Z_i dtheta_{i+n} - Z_{i+n} dtheta_i

so the constant field v = (a, b) corresponds to the harmonic form
sum_i a_i dtheta_{i+n} - b_i dtheta_i.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from scipy import ndimage


class DimensionMismatch(ValueError):
    """Raised when fields living on different grids or dimensions are mixed."""


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on T^{2n}.

    Parameters
    ----------
    n : int
        Half-dimension; the torus has dimension 2n.
    size : int
        Number of grid points per axis.
    """

    n: int
    size: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"half-dimension must be >= 1, got {self.n}")
        if self.size < 2:
            raise ValueError(f"grid size must be >= 2, got {self.size}")

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def shape(self) -> tuple:
        return (self.size,) * self.dim

    @property
    def num_points(self) -> int:
        return self.size ** self.dim

    @property
    def spacing(self) -> float:
        return 1.0 / self.size

    @cached_property
    def coords(self) -> np.ndarray:
        """Grid coordinates, shape (2n, N, ..., N)."""
        axis = np.arange(self.size) / self.size
        c = np.stack(np.meshgrid(*([axis] * self.dim), indexing="ij"))
        c.setflags(write=False)
        return c

    @cached_property
    def points(self) -> np.ndarray:
        """Grid coordinates flattened to shape (2n, N^{2n})."""
        p = self.coords.reshape(self.dim, -1)
        p.setflags(write=False)
        return p

    @cached_property
    def wavenumbers(self) -> tuple:
        """Integer wavenumbers per axis, broadcastable to the grid shape."""
        k = np.fft.fftfreq(self.size, d=1.0 / self.size)
        out = []
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = self.size
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def derivative_wavenumbers(self) -> tuple:
        """Wavenumbers used for first derivatives (Nyquist mode zeroed)."""
        out = []
        for k in self.wavenumbers:
            k = k.copy()
            if self.size % 2 == 0:
                k[k == -self.size // 2] = 0.0
            out.append(k)
        return tuple(out)

    @cached_property
    def rfft_derivative_wavenumbers(self) -> tuple:
        """Derivative wavenumbers on the half spectrum of a real FFT (Nyquist zeroed)."""
        out = []
        for axis, k in enumerate(self.derivative_wavenumbers):
            if axis == self.dim - 1:
                k = np.fft.rfftfreq(self.size, d=1.0 / self.size)
                if self.size % 2 == 0:
                    k[-1] = 0.0
                k = k.reshape((1,) * (self.dim - 1) + (-1,))
            out.append(k)
        return tuple(out)

    def check_same(self, other: "TorusGrid") -> None:
        if self != other:
            raise DimensionMismatch(f"grid mismatch: {self} vs {other}")


@dataclass(frozen=True)
class HarmonicForm:
    """Constant-coefficient one-form sum_i lam_i dtheta_i.

    On the flat torus these are exactly the harmonic one-forms; the basis
    dtheta_i has uniform sup norm 1, so |H|_0 <= |H| with |H| the l1 norm.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size % 2:
            raise DimensionMismatch("harmonic form needs an even number of coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, n: int) -> "HarmonicForm":
        return cls(np.zeros(2 * n))

    @classmethod
    def basis(cls, n: int, i: int) -> "HarmonicForm":
        c = np.zeros(2 * n)
        c[i] = 1.0
        return cls(c)

    @property
    def n(self) -> int:
        return self.coeffs.size // 2

    def norm(self) -> float:
        """The l1 norm sum |lam_i| used throughout for harmonic forms."""
        return float(np.abs(self.coeffs).sum())

    def sup_norm(self) -> float:
        """Pointwise operator norm w.r.t. the flat metric (Euclidean length)."""
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other):
        return HarmonicForm(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return HarmonicForm(self.coeffs - other.coeffs)

    def __neg__(self):
        return HarmonicForm(-self.coeffs)

    def __mul__(self, c):
        return HarmonicForm(self.coeffs * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class ScalarField:
    """Periodic function sampled on a TorusGrid."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise DimensionMismatch(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("scalar field has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: TorusGrid, c: float = 0.0) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid: TorusGrid, f) -> "ScalarField":
        """Sample ``f(*coords)`` on the grid."""
        return cls(grid, np.broadcast_to(f(*grid.coords), grid.shape))

    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def normalized(self) -> bool:
        return abs(self.mean()) <= 1e-12 * max(1.0, float(np.abs(self.values).max()))

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self.grid.check_same(other.grid)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self.grid.check_same(other.grid)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - other)

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __mul__(self, c):
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class _ComponentField:
    grid: TorusGrid
    components: np.ndarray

    def __post_init__(self):
        c = np.array(self.components, dtype=float)
        expected = (self.grid.dim,) + self.grid.shape
        if c.shape != expected:
            raise DimensionMismatch(f"components shape {c.shape} != {expected}")
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    @classmethod
    def zero(cls, grid: TorusGrid):
        return cls(grid, np.zeros((grid.dim,) + grid.shape))

    @classmethod
    def constant(cls, grid: TorusGrid, coeffs):
        coeffs = np.asarray(coeffs, dtype=float).reshape((grid.dim,) + (1,) * grid.dim)
        return cls(grid, np.broadcast_to(coeffs, (grid.dim,) + grid.shape))

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.components[i])

    def means(self) -> np.ndarray:
        axes = tuple(range(1, self.grid.dim + 1))
        return self.components.mean(axis=axes)

    def _binary(self, other, op):
        if isinstance(other, _ComponentField):
            self.grid.check_same(other.grid)
            return type(self)(self.grid, op(self.components, other.components))
        return type(self)(self.grid, op(self.components, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return type(self)(self.grid, -self.components)

    def __mul__(self, c):
        return type(self)(self.grid, self.components * c)

    __rmul__ = __mul__


class OneFormField(_ComponentField):
    """Grid-sampled one-form; component i is the coefficient of dtheta_i."""


class VectorFieldGrid(_ComponentField):
    """Grid-sampled vector field; component i is the coefficient of d/dtheta_i."""


FormLike = Union[OneFormField, HarmonicForm]


# --- musical isomorphisms ---------------------------------------------------

def sharp_coeffs(c: np.ndarray) -> np.ndarray:
    """Apply the omega-sharp map to coefficient arrays with the form index first."""
    c = np.asarray(c, dtype=float)
    n = c.shape[0] // 2
    return np.concatenate([c[n:], -c[:n]], axis=0)


def flat_coeffs(z: np.ndarray) -> np.ndarray:
    """Inverse of :func:`sharp_coeffs`: Z -> iota(Z) omega."""
    z = np.asarray(z, dtype=float)
    n = z.shape[0] // 2
    return np.concatenate([-z[n:], z[:n]], axis=0)


def sharp(alpha: FormLike, grid: TorusGrid | None = None) -> VectorFieldGrid:
    """Vector field Z with iota(Z) omega = alpha.

    A HarmonicForm needs a ``grid`` to be sampled on.
    """
    if isinstance(alpha, HarmonicForm):
        if grid is None:
            raise ValueError("sharp of a HarmonicForm needs a grid")
        if alpha.n != grid.n:
            raise DimensionMismatch(f"form has n={alpha.n}, grid has n={grid.n}")
        return VectorFieldGrid.constant(grid, sharp_coeffs(alpha.coeffs))
    if grid is not None:
        alpha.grid.check_same(grid)
    return VectorFieldGrid(alpha.grid, sharp_coeffs(alpha.components))


def flat(z: VectorFieldGrid) -> OneFormField:
    """The one-form iota(Z) omega."""
    return OneFormField(z.grid, flat_coeffs(z.components))


def sharp_vector(h: HarmonicForm) -> np.ndarray:
    """Constant vector corresponding to a harmonic form."""
    return sharp_coeffs(h.coeffs)


def flat_vector(v) -> HarmonicForm:
    """Harmonic form corresponding to a constant vector field v."""
    return HarmonicForm(flat_coeffs(np.asarray(v, dtype=float)))


# --- scalar utilities -------------------------------------------------------

def osc(f) -> float:
    """max - min over the grid samples."""
    v = f.values if isinstance(f, ScalarField) else np.asarray(f)
    return float(v.max() - v.min())


def normalize(f: ScalarField) -> ScalarField:
    """Subtract the grid mean (discrete zero-integral normalization)."""
    return ScalarField(f.grid, f.values - f.values.mean())


def wedge_pair_top(h: HarmonicForm, m) -> float:
    """Pairing of a harmonic class with omega^{n-1}/(n-1)! ^ f*sigma.

    ``m`` is the integer vector of the class of f: T^{2n} -> S^1, so
    f*sigma is cohomologous to sum_i m_i dtheta_i.  The value is

        int f*sigma ^ H ^ omega^{n-1}/(n-1)!

    over the torus oriented by omega^n/n!, which for H = sum c_i dtheta_i
    reduces to sum_k m_k c_{k+n} - m_{k+n} c_k.  Ordering f*sigma first
    fixes the orientation so the value equals the lift integral of a
    translation flow.
    """
    m = np.asarray(m, dtype=float).reshape(-1)
    c = h.coeffs
    if m.size != c.size:
        raise DimensionMismatch(f"class vector has length {m.size}, form has {c.size}")
    n = h.n
    return float(m[:n] @ c[n:] - m[n:] @ c[:n])


def min_image(delta: np.ndarray) -> np.ndarray:
    """Shortest representative of a torus displacement, componentwise in [-1/2, 1/2]."""
    return delta - np.round(delta)


def toroidal_norm(delta: np.ndarray, axis: int = 0) -> np.ndarray:
    """Flat-metric length of the minimal-image displacement along ``axis``."""
    return np.sqrt((min_image(delta) ** 2).sum(axis=axis))


# --- periodic interpolation -------------------------------------------------

class PeriodicInterpolator:
    """Evaluate grid-sampled periodic data at arbitrary torus points.

    ``method`` is one of ``"linear"``, ``"cubic"``, ``"quintic"`` (periodic
    B-splines via scipy.ndimage) or ``"fourier"`` (trigonometric
    interpolation through a type-2 non-uniform FFT).

    Parameters
    ----------
    values : ndarray, shape (..., N, ..., N)
        Leading axes are batch axes (e.g. vector components).
    dim : int
        Number of trailing spatial axes.
    """

    _ORDERS = {"linear": 1, "cubic": 3, "quintic": 5}

    def __init__(self, values: np.ndarray, dim: int, method: str = "cubic"):
        values = np.asarray(values, dtype=float)
        self.dim = dim
        self.method = method
        self.batch_shape = values.shape[:-dim]
        self.size = values.shape[-1]
        flat_batch = values.reshape((-1,) + values.shape[-dim:])
        if method == "fourier":
            axes = tuple(range(1, dim + 1))
            self._coeffs = np.fft.fftn(flat_batch, axes=axes) / self.size ** dim
        elif method in self._ORDERS:
            order = self._ORDERS[method]
            if order > 1:
                self._coeffs = np.stack([
                    ndimage.spline_filter(b, order=order, mode="grid-wrap") for b in flat_batch
                ])
            else:
                self._coeffs = flat_batch
            self._order = order
        else:
            raise ValueError(f"unknown interpolation method {method!r}")

    @classmethod
    def from_coeffs(cls, coeffs, dim, method, batch_shape, size):
        obj = cls.__new__(cls)
        obj.dim, obj.method, obj.batch_shape, obj.size = dim, method, batch_shape, size
        obj._coeffs = coeffs
        if method in cls._ORDERS:
            obj._order = cls._ORDERS[method]
        return obj

    def combine(self, weights, others) -> "PeriodicInterpolator":
        """Linear combination of interpolators sharing shape and method."""
        coeffs = sum(w * o._coeffs for w, o in zip(weights, others))
        return PeriodicInterpolator.from_coeffs(coeffs, self.dim, self.method,
                                                self.batch_shape, self.size)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Values at ``points`` of shape (dim, P); returns (..., P)."""
        points = np.asarray(points, dtype=float)
        p = np.mod(points, 1.0)
        if self.method == "fourier":
            out = _nufft_eval(self._coeffs, p)
        else:
            idx = p * self.size
            out = np.stack([
                ndimage.map_coordinates(c, idx, order=self._order, mode="grid-wrap",
                                        prefilter=False)
                for c in self._coeffs
            ])
        return out.reshape(self.batch_shape + (points.shape[1],))


_plans = threading.local()
NUFFT_EPS = 1e-10  # relative to the l2 norm of the coefficients


def _nufft_plan(modes: tuple, n_trans: int):
    import finufft

    cache = getattr(_plans, "cache", None)
    if cache is None:
        cache = _plans.cache = {}
    key = (modes, n_trans)
    if key not in cache:
        cache[key] = finufft.Plan(2, modes, n_trans=n_trans, eps=NUFFT_EPS, isign=1, nthreads=1,
                                  modeord=1)
    return cache[key]


def _nufft_eval(coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Real trigonometric interpolant of FFT coefficients at off-grid points."""
    batch, *modes = coeffs.shape
    dim = len(modes)
    if dim > 3:
        return _direct_eval(coeffs, points)
    coeffs = np.ascontiguousarray(coeffs, dtype=complex)
    plan = _nufft_plan(tuple(modes), batch)
    plan.setpts(*[np.ascontiguousarray(2 * np.pi * points[i]) for i in range(dim)])
    out = plan.execute(coeffs if batch > 1 else coeffs[0])
    return np.real(out).reshape(batch, -1)


def _direct_eval(coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    # separable contraction; O(P N^dim) so only sensible for small grids
    batch, *modes = coeffs.shape
    dim = len(modes)
    size = modes[0]
    k = np.fft.fftfreq(size, d=1.0 / size)
    cur = coeffs.reshape(batch, 1, *modes).astype(complex)
    cur = np.broadcast_to(cur, (batch, points.shape[1], *modes))
    for axis in range(dim - 1, -1, -1):
        e = np.exp(2j * np.pi * np.outer(points[axis], k))
        cur = np.einsum("bp...k,pk->bp...", cur, e)
    return np.real(cur)

