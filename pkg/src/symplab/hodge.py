"""Spectral Hodge decomposition of closed one-forms on the flat torus.

For a closed one-form alpha the harmonic part is the per-component grid
mean, and the exact part dU solves the periodic Poisson problem
Lap U = div(alpha - H) with the zero mode pinned to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .torus import HarmonicForm, OneFormField, ScalarField, TorusGrid

DEFAULT_CLOSED_TOL = 1e-6


class NotClosed(ValueError):
    """The input one-form fails the closedness test."""

    def __init__(self, defect: float, tol: float):
        super().__init__(f"one-form is not closed: curl defect {defect:.3e} > tol {tol:.3e}")
        self.defect = defect
        self.tol = tol


@dataclass(frozen=True)
class HodgeSplit:
    potential: ScalarField
    harmonic: HarmonicForm
    residual: float


def _spatial_axes(grid: TorusGrid) -> tuple:
    return tuple(range(-grid.dim, 0))


def spectral_gradient(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Spectral gradient of batched periodic data, shape (..., N..) -> (..., 2n, N..)."""
    axes = _spatial_axes(grid)
    fh = np.fft.rfftn(values, axes=axes)
    out = [np.fft.irfftn(2j * np.pi * k * fh, s=grid.shape, axes=axes)
           for k in grid.rfft_derivative_wavenumbers]
    return np.stack(out, axis=-grid.dim - 1)


def exterior_d(f: ScalarField) -> OneFormField:
    """dF via spectral differentiation."""
    return OneFormField(f.grid, spectral_gradient(f.values, f.grid))


def curl_defect(alpha: OneFormField) -> float:
    """sup |d_i alpha_j - d_j alpha_i| over the grid and all index pairs."""
    grid = alpha.grid
    grad = spectral_gradient(alpha.components, grid)  # grad[j, i] = d_i alpha_j
    defect = 0.0
    for i in range(grid.dim):
        for j in range(i + 1, grid.dim):
            defect = max(defect, float(np.abs(grad[j, i] - grad[i, j]).max()))
    return defect


def poisson_potential(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Least-squares potential U (zero mean) with dU closest to the batched one-form.

    ``values`` has shape (..., 2n, N..).  Solves Lap U = div(alpha) spectrally.
    """
    axes = _spatial_axes(grid)
    ah = np.fft.fftn(values, axes=axes)
    ks = grid.derivative_wavenumbers
    num = 0
    k2 = 0
    for i, k in enumerate(ks):
        num = num + (-2j * np.pi * k) * np.take(ah, i, axis=-grid.dim - 1)
        k2 = k2 + (2 * np.pi * k) ** 2
    k2 = np.broadcast_to(k2, grid.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        uh = np.where(k2 > 0, num / np.where(k2 > 0, k2, 1.0), 0.0)
    return np.real(np.fft.ifftn(uh, axes=axes))


def hodge_decompose(alpha: OneFormField, closed_tol: float = DEFAULT_CLOSED_TOL) -> HodgeSplit:
    """Split a closed one-form field as dU + H.

    Parameters
    ----------
    alpha : OneFormField
        Closed one-form sampled on the grid.
    closed_tol : float
        Maximum admissible sup-norm of the antisymmetrized derivative.

    Raises
    ------
    NotClosed
        If the curl defect exceeds ``closed_tol``.
    """
    defect = curl_defect(alpha)
    if defect > closed_tol:
        raise NotClosed(defect, closed_tol)
    grid = alpha.grid
    h = alpha.means()
    exact = alpha.components - h.reshape((grid.dim,) + (1,) * grid.dim)
    u = poisson_potential(exact, grid)
    u -= u.mean()
    du = spectral_gradient(u, grid)
    residual = float(np.abs(exact - du).max())
    return HodgeSplit(ScalarField(grid, u), HarmonicForm(h), residual)
