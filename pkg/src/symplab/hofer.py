"""Hofer-like lengths, norm upper bounds and displacement energy bounds.

Norms and energies are infima over all isotopies; the functions here take
minima over explicit candidate families and therefore only ever produce
upper bounds.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .flows import Integrator, Isotopy, c0_distance, default_integrator
from .generators import Generator, GeneratorSeq, delta_tilde, group_inverse, group_product
from .torus import TorusGrid, flat_vector, osc, toroidal_norm

VERSIONS = ("linf", "l1inf")


class NoValidCandidate(ValueError):
    """No candidate reaches the target time-one map."""


class NoDisplacer(ValueError):
    """No candidate displaces the region."""


# --- lengths ------------------------------------------------------------------

def length_integrand(g: Generator) -> np.ndarray:
    """osc(U_t) + |H_t| at every time sample."""
    axes = tuple(range(1, g.grid.dim + 1))
    oscs = g.hams.max(axis=axes) - g.hams.min(axis=axes)
    return oscs + np.abs(g.harms).sum(axis=1)


def length_linf(g: Generator) -> float:
    """max_t osc(U_t) + |H_t|."""
    return float(length_integrand(g).max())


def length_l1inf(g: Generator) -> float:
    """int_0^1 osc(U_t) + |H_t| dt by the trapezoid rule."""
    return float(np.trapezoid(length_integrand(g), g.times))


def length(g: Generator, version: str = "linf") -> float:
    if version == "linf":
        return length_linf(g)
    if version == "l1inf":
        return length_l1inf(g)
    raise ValueError(f"unknown length version {version!r}; expected one of {VERSIONS}")


def length_symmetric(g: Generator, integrator: Integrator | None = None,
                     version: str = "linf") -> float:
    """Mean of the length of g and of its group inverse."""
    inv = group_inverse(g, integrator)
    return 0.5 * (length(g, version) + length(inv, version))


@dataclass(frozen=True)
class LengthReport:
    l_inf: float
    l_1inf: float
    l_sym_inf: float
    l_sym_1inf: float

    def to_dict(self) -> dict:
        return {"l_inf": self.l_inf, "l_1inf": self.l_1inf,
                "l_sym_inf": self.l_sym_inf, "l_sym_1inf": self.l_sym_1inf}


def length_report(g: Generator, integrator: Integrator | None = None) -> LengthReport:
    inv = group_inverse(g, integrator)
    li, l1 = length_linf(g), length_l1inf(g)
    return LengthReport(li, l1, 0.5 * (li + length_linf(inv)), 0.5 * (l1 + length_l1inf(inv)))


@dataclass(frozen=True)
class TriangleReport:
    product_length: float
    sum_of_lengths: float
    delta_osc: float

    @property
    def bound(self) -> float:
        return self.sum_of_lengths + 2 * self.delta_osc

    @property
    def holds(self) -> bool:
        return self.product_length <= self.bound


def triangle_report(a: Generator, b: Generator, integrator: Integrator | None = None,
                    version: str = "linf") -> TriangleReport:
    """Symmetric length of a * b against the sum of the symmetric lengths.

    The slack term is the largest oscillation of the Delta~ correction that
    the group law adds to the Hamiltonian part.
    """
    intg = integrator or default_integrator()
    ab = group_product(a, b, intg)
    phi_inv = intg.invert(intg.integrate(a))
    delta = delta_tilde(b.harms, phi_inv, intg.reading, intg.quadrature)
    dosc = max(osc(d) for d in delta)
    return TriangleReport(length_symmetric(ab, intg, version),
                          length_symmetric(a, intg, version) + length_symmetric(b, intg, version),
                          float(dosc))


# --- norm upper bounds --------------------------------------------------------

@dataclass(frozen=True)
class CandidateRow:
    index: int
    label: str
    length: float
    endpoint_distance: float
    accepted: bool


@dataclass(frozen=True)
class NormUpperResult:
    """Minimum symmetric length over candidates reaching the target (an upper bound)."""

    bound: float
    best: int
    version: str
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "label", "symmetric_length", "endpoint_distance", "accepted"])
        for r in self.rows:
            w.writerow([r.index, r.label, repr(r.length), repr(r.endpoint_distance), int(r.accepted)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"kind": "UPPER BOUND", "bound": self.bound, "best": self.best,
                "version": self.version, "accepted": sum(r.accepted for r in self.rows),
                "candidates": len(self.rows)}


def _time_one(target, intg: Integrator) -> np.ndarray:
    if isinstance(target, Generator):
        target = intg.integrate(target)
    if isinstance(target, Isotopy):
        return target.disp[-1]
    return np.asarray(target, dtype=float)


def norm_upper(target, candidates, integrator: Integrator | None = None,
               version: str = "linf", endpoint_tol: float = 1e-3,
               labels=None) -> NormUpperResult:
    """Upper bound on the symmetric norm of a time-one map.

    Parameters
    ----------
    target : Generator, Isotopy or ndarray
        The map, given by a generator, a path (its last slice is used) or a
        displacement slice of shape (2n, N..).
    candidates : GeneratorSeq or sequence of Generator
        Candidates whose time-one map is farther than ``endpoint_tol`` from
        the target in the C0 distance are rejected and reported.

    Raises
    ------
    NoValidCandidate
        If every candidate is rejected.
    """
    intg = integrator or default_integrator()
    end = _time_one(target, intg)
    items = list(candidates.items if isinstance(candidates, GeneratorSeq) else candidates)
    labels = list(labels) if labels is not None else [f"c{i}" for i in range(len(items))]
    rows = []
    best, bound = -1, np.inf
    for i, g in enumerate(items):
        dist = c0_distance(intg.integrate(g).disp[-1], end)
        ok = dist <= endpoint_tol
        lsym = length_symmetric(g, intg, version) if ok else float("nan")
        rows.append(CandidateRow(i, labels[i], lsym, dist, ok))
        if ok and lsym < bound:
            best, bound = i, lsym
    if best < 0:
        raise NoValidCandidate(f"none of {len(items)} candidates reaches the target within {endpoint_tol:g}")
    return NormUpperResult(float(bound), best, version, rows)


@dataclass(frozen=True)
class VersionComparison:
    """Both norm upper bounds over one candidate family; data only."""

    linf: NormUpperResult
    l1inf: NormUpperResult

    @property
    def difference(self) -> float:
        return self.linf.bound - self.l1inf.bound

    def to_dict(self) -> dict:
        return {"kind": "UPPER BOUND", "linf": self.linf.bound, "l1inf": self.l1inf.bound,
                "difference": self.difference}


def compare_versions(target, candidates, integrator: Integrator | None = None,
                     endpoint_tol: float = 1e-3) -> VersionComparison:
    """Norm upper bounds for both length versions over the same candidates."""
    intg = integrator or default_integrator()
    items = list(candidates.items if isinstance(candidates, GeneratorSeq) else candidates)
    return VersionComparison(norm_upper(target, items, intg, "linf", endpoint_tol),
                             norm_upper(target, items, intg, "l1inf", endpoint_tol))


# --- regions and displacement ------------------------------------------------

@dataclass(frozen=True)
class Region:
    """Subset of the torus: a strip {0 <= theta_1 < nu}, a ball or a grid mask."""

    kind: str
    nu: float = 0.0
    center: tuple = ()
    radius: float = 0.0
    mask: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == "strip":
            if not 0.0 < self.nu < 1.0:
                raise ValueError(f"strip width must lie in (0, 1), got {self.nu}")
        elif self.kind == "ball":
            if self.radius <= 0:
                raise ValueError("ball radius must be positive")
        elif self.kind == "mask":
            if self.mask is None or not np.any(self.mask):
                raise ValueError("mask region is empty")
        else:
            raise ValueError(f"unknown region kind {self.kind!r}")

    @classmethod
    def strip(cls, nu: float) -> "Region":
        return cls("strip", nu=float(nu))

    @classmethod
    def ball(cls, center, radius: float) -> "Region":
        return cls("ball", center=tuple(float(c) for c in center), radius=float(radius))

    @classmethod
    def from_mask(cls, mask) -> "Region":
        return cls("mask", mask=np.asarray(mask, dtype=bool))

    @classmethod
    def whole(cls, grid: TorusGrid) -> "Region":
        return cls.from_mask(np.ones(grid.shape, dtype=bool))

    def describe(self) -> dict:
        if self.kind == "strip":
            return {"kind": "strip", "nu": self.nu}
        if self.kind == "ball":
            return {"kind": "ball", "center": list(self.center), "radius": self.radius}
        return {"kind": "mask", "cells": int(self.mask.sum()), "shape": list(self.mask.shape)}

    def inside_grid(self, grid: TorusGrid) -> np.ndarray:
        """Boolean mask of grid points in the region."""
        if self.kind == "strip":
            inside = grid.coords[0] < self.nu
        elif self.kind == "ball":
            c = np.asarray(self.center).reshape((grid.dim,) + (1,) * grid.dim)
            inside = toroidal_norm(grid.coords - c) < self.radius
        else:
            if self.mask.shape != grid.shape:
                raise ValueError("mask shape does not match the grid")
            inside = self.mask
        if not np.any(inside):
            raise ValueError("region has no grid points")
        return inside

    def clearance(self, points: np.ndarray, grid: TorusGrid) -> np.ndarray:
        """Signed distance of points (2n, P) from the region; negative inside."""
        p = np.mod(points, 1.0)
        if self.kind == "strip":
            return np.minimum(p[0] - self.nu, 1.0 - p[0])
        if self.kind == "ball":
            c = np.asarray(self.center).reshape(grid.dim, 1)
            return toroidal_norm(p - c) - self.radius
        cells = grid.points[:, self.inside_grid(grid).reshape(-1)]
        tree = cKDTree(cells.T, boxsize=1.0)
        dist, _ = tree.query(np.mod(p.T, 1.0), p=np.inf)
        return dist - 0.5 * grid.spacing


@dataclass(frozen=True)
class DisplacementResult:
    displaced: bool
    clearance: float
    guard: float

    def __bool__(self) -> bool:
        return self.displaced

    def to_dict(self) -> dict:
        return {"displaced": self.displaced, "clearance": self.clearance, "guard": self.guard}


def displacement_test(phi, region: Region, grid: TorusGrid | None = None) -> DisplacementResult:
    """Whether the map sends every region grid point at least one cell off the region.

    ``phi`` is an Isotopy (its time-one slice is tested) or a displacement
    slice of shape (2n, N..) together with ``grid``.
    """
    if isinstance(phi, Isotopy):
        grid, disp = phi.grid, phi.disp[-1]
    else:
        if grid is None:
            raise ValueError("a grid is required for a bare displacement slice")
        disp = np.asarray(phi, dtype=float)
    inside = region.inside_grid(grid).reshape(-1)
    pts = grid.points[:, inside] + disp.reshape(grid.dim, -1)[:, inside]
    clear = float(region.clearance(pts, grid).min())
    guard = grid.spacing
    return DisplacementResult(clear >= guard, clear, guard)


# --- displacement energy ------------------------------------------------------

@dataclass(frozen=True)
class RotationSearch:
    """Rotation candidates R_{a e_axis} for each amplitude a.

    Constant generators flow by exact translations on any time grid, so a
    short grid of ``steps`` samples is used.
    """

    amplitudes: tuple
    axis: int = 0
    steps: int = 4

    @classmethod
    def uniform(cls, step: float, stop: float = 0.5, axis: int = 0) -> "RotationSearch":
        count = int(np.floor(stop / step + 1e-9))
        return cls(tuple(step * k for k in range(1, count + 1)), axis)

    def candidates(self, grid: TorusGrid):
        for a in self.amplitudes:
            v = np.zeros(grid.dim)
            v[self.axis] = a
            yield f"rotation a={a:.6g}", Generator.autonomous(grid, self.steps, harm=flat_vector(v))


@dataclass(frozen=True)
class EnergyCertificate:
    region: dict
    best: str
    bound: float
    clearance: float
    guard: float
    tested: int
    displacing: int
    version: str

    def to_dict(self) -> dict:
        return {"kind": "UPPER BOUND", "region": self.region, "best_candidate": self.best,
                "bound": self.bound, "margin": {"clearance": self.clearance, "guard": self.guard},
                "tested": self.tested, "displacing": self.displacing, "version": self.version}


def displacement_energy_upper(region: Region, search, grid: TorusGrid,
                              integrator: Integrator | None = None,
                              version: str = "linf") -> EnergyCertificate:
    """Minimum symmetric length over candidates that displace the region.

    ``search`` is a :class:`RotationSearch` or an iterable of
    ``(label, Generator)`` pairs.

    Raises
    ------
    NoDisplacer
        If no candidate displaces the region.
    """
    intg = integrator or default_integrator()
    pairs = search.candidates(grid) if hasattr(search, "candidates") else search
    best = None
    tested = displacing = 0
    for label, g in pairs:
        tested += 1
        res = displacement_test(intg.integrate(g), region)
        if not res.displaced:
            continue
        displacing += 1
        lsym = length_symmetric(g, intg, version)
        if best is None or lsym < best[1]:
            best = (label, lsym, res)
    if best is None:
        raise NoDisplacer(f"none of {tested} candidates displaces the region")
    label, bound, res = best
    return EnergyCertificate(region.describe(), label, float(bound), res.clearance, res.guard,
                             tested, displacing, version)
