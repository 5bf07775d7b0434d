"""Matplotlib figures for command reports.

Figures are built on the Agg canvas directly, so no display or pyplot state
is involved.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .generators import vf_norms
from .torus import toroidal_norm

STYLE = {"figsize": (6.0, 4.0), "dpi": 120}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    return path


def _spatial_slice(values: np.ndarray, dim: int) -> np.ndarray:
    """First two axes of a (N..) array; remaining axes fixed at index 0."""
    return values[(slice(None), slice(None)) + (0,) * (dim - 2)]


def plot_isotopy(phi, path) -> Path:
    """Time-one displacement magnitude and the sup displacement over time."""
    fig = Figure(figsize=(10.0, 4.0), dpi=STYLE["dpi"])
    ax0, ax1 = fig.subplots(1, 2)
    grid = phi.grid
    mag = _spatial_slice(toroidal_norm(phi.disp[-1]), grid.dim)
    im = ax0.imshow(mag.T, origin="lower", extent=(0, 1, 0, 1), cmap="viridis")
    fig.colorbar(im, ax=ax0, label="|phi_1(x) - x|")
    ax0.set_xlabel(r"$\theta_1$")
    ax0.set_ylabel(r"$\theta_2$")
    ax0.set_title("time-one displacement")
    sup = toroidal_norm(phi.disp, axis=1).reshape(phi.times.size, -1).max(axis=1)
    ax1.plot(phi.times, sup, color="C0")
    ax1.set_xlabel("t")
    ax1.set_ylabel("sup displacement")
    ax1.grid(alpha=0.3)
    return _save(fig, path)


def plot_lengths(g, path, inverse=None) -> Path:
    """The length integrand osc(U_t) + |H_t| against t."""
    fig = Figure(**STYLE)
    ax = fig.subplots()
    ax.plot(g.times, vf_norms(g), label="generator")
    if inverse is not None:
        ax.plot(inverse.times, vf_norms(inverse), ls="--", label="inverse")
    ax.set_xlabel("t")
    ax.set_ylabel(r"osc$(U_t) + |H_t|$")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_duality(table, path) -> Path:
    """Formula and direct mass flow per class, with the gap on a log axis."""
    fig = Figure(figsize=(8.0, 4.0), dpi=STYLE["dpi"])
    ax0, ax1 = fig.subplots(1, 2)
    labels = ["(" + ",".join(str(x) for x in r.m) + ")" for r in table.rows]
    x = np.arange(len(labels))
    ax0.bar(x - 0.2, [r.formula for r in table.rows], 0.4, label="formula")
    ax0.bar(x + 0.2, [r.direct for r in table.rows], 0.4, label="direct")
    ax0.set_xticks(x, labels, rotation=45, fontsize=8)
    ax0.axhline(0, color="k", lw=0.5)
    ax0.legend(frameon=False)
    ax0.set_title("mass flow")
    ax1.semilogy(x, [max(r.gap, 1e-17) for r in table.rows], "o")
    ax1.set_xticks(x, labels, rotation=45, fontsize=8)
    ax1.set_title("|formula - direct|")
    ax1.grid(alpha=0.3)
    return _save(fig, path)


def plot_cauchy(report, path) -> Path:
    """Consecutive gaps of a generator sequence."""
    fig = Figure(**STYLE)
    ax = fig.subplots()
    i = np.arange(len(report.d2_gaps))
    floor = 1e-17
    ax.semilogy(i, np.maximum(report.d2_gaps, floor), "o-", label=r"$D^2$")
    ax.semilogy(i, np.maximum(report.forward_gaps, floor), "s--", label="forward")
    ax.semilogy(i, np.maximum(report.pushforward_gaps, floor), "^:", label="pushforward")
    ax.set_xlabel("i")
    ax.set_ylabel("gap between items i and i+1")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3, which="both")
    return _save(fig, path)


def plot_norm_upper(result, path) -> Path:
    """Symmetric length of each accepted candidate; the bound is marked."""
    fig = Figure(**STYLE)
    ax = fig.subplots()
    acc = [r for r in result.rows if r.accepted]
    rej = [r for r in result.rows if not r.accepted]
    ax.plot([r.index for r in acc], [r.length for r in acc], "o", label="accepted")
    if rej:
        ax.plot([r.index for r in rej], np.zeros(len(rej)), "x", color="C3", label="rejected")
    ax.axhline(result.bound, color="k", ls="--", lw=0.8, label=f"upper bound {result.bound:.4g}")
    ax.set_xlabel("candidate")
    ax.set_ylabel(f"symmetric length ({result.version})")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_displacement(phi, region, path) -> Path:
    """Region grid points and their time-one images in the first two coordinates."""
    fig = Figure(figsize=(4.5, 4.5), dpi=STYLE["dpi"])
    ax = fig.subplots()
    grid = phi.grid
    inside = region.inside_grid(grid).reshape(-1)
    pts = grid.points[:2, inside]
    img = np.mod(pts + phi.disp[-1].reshape(grid.dim, -1)[:2, inside], 1.0)
    ax.plot(pts[0], pts[1], ".", ms=2, color="C0", label="region")
    ax.plot(img[0], img[1], ".", ms=2, color="C1", label="image")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")
    ax.set_xlabel(r"$\theta_1$")
    ax.set_ylabel(r"$\theta_2$")
    ax.legend(frameon=False, loc="upper right")
    return _save(fig, path)


def plot_family(family, path, title: str = "") -> Path:
    """Shift components of G(1, t) against t and the s = 0 and s = 1 rows."""
    fig = Figure(**STYLE)
    ax = fig.subplots()
    for c in range(family.shifts.shape[-1]):
        ax.plot(family.t_times, family.shifts[-1, :, c], label=f"component {c + 1}, s=1")
    ax.set_xlabel("t")
    ax.set_ylabel("translation")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_ldefor2(rows, path) -> Path:
    """Consecutive Z, Y and Z^(s,t) gaps with the transfer bound 3 |dZ|."""
    fig = Figure(**STYLE)
    ax = fig.subplots()
    i = [r.index for r in rows]
    ax.semilogy(i, [r.z_gap for r in rows], "o-", label="Z gap")
    ax.semilogy(i, [r.y_gap for r in rows], "s--", label="Y gap")
    ax.semilogy(i, [r.zst_gap for r in rows], "^:", label="Z(s,t) gap")
    ax.semilogy(i, [3 * r.z_gap for r in rows], color="k", lw=0.6, label="3 x Z gap")
    ax.set_xlabel("i")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3, which="both")
    return _save(fig, path)


def plot_checks(checks, path) -> Path:
    """Measured value over threshold for each check; bars above 1 fail."""
    fig = Figure(figsize=(7.0, 0.35 * len(checks) + 1.5), dpi=STYLE["dpi"])
    ax = fig.subplots()
    ratio = [c.ratio for c in checks]
    y = np.arange(len(checks))
    colors = ["C2" if c.passed else "C3" for c in checks]
    ax.barh(y, np.maximum(ratio, 1e-16), color=colors)
    ax.set_xscale("log")
    ax.axvline(1.0, color="k", lw=0.8)
    ax.set_yticks(y, [c.name for c in checks], fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("value / threshold")
    return _save(fig, path)
