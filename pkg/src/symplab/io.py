"""Field container format and report writers.

A container is a JSON manifest next to raw little-endian float64 arrays in
row-major order.  Manifests are written with sorted keys so that repeated
runs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .deformations import TwoParamFamily
from .flows import Isotopy
from .generators import Generator
from .torus import TorusGrid

FORMAT = "symplab-container"
VERSION = 1
DTYPE = "<f8"
CSV_MAX_POINTS = 4096


class ContainerError(ValueError):
    """A container manifest or its binary payload is malformed."""


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(obj))
    return path


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _manifest_path(path) -> Path:
    path = Path(path)
    return path if path.suffix == ".json" else path.with_suffix(".json")


def write_container(path, kind: str, grid: TorusGrid, arrays: dict, meta: dict | None = None) -> Path:
    """Write ``arrays`` as ``<stem>.<name>.bin`` files plus a JSON manifest.

    Every array's leading axes are free; the manifest records its full shape
    and the number of field components it carries.
    """
    mpath = _manifest_path(path)
    mpath.parent.mkdir(parents=True, exist_ok=True)
    entries = {}
    for name, arr in arrays.items():
        a = np.ascontiguousarray(arr, dtype=DTYPE)
        fname = f"{mpath.stem}.{name}.bin"
        (mpath.parent / fname).write_bytes(a.tobytes(order="C"))
        entries[name] = {"file": fname, "shape": list(a.shape), "dtype": DTYPE, "order": "C"}
    manifest = {"format": FORMAT, "version": VERSION, "kind": kind, "dim": grid.dim,
                "grid_size": grid.size, "arrays": entries, "meta": meta or {}}
    write_json(mpath, manifest)
    return mpath


def read_container(path, kind: str | None = None) -> tuple:
    """Return ``(manifest, grid, arrays)``.

    Raises
    ------
    ContainerError
        On unreadable manifests, wrong kinds, missing files or size mismatches.
    """
    mpath = _manifest_path(path)
    try:
        manifest = json.loads(mpath.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ContainerError(f"cannot read manifest {mpath}: {exc}") from exc
    if not isinstance(manifest, dict) or manifest.get("format") != FORMAT:
        raise ContainerError(f"{mpath} is not a {FORMAT} manifest")
    if kind is not None and manifest.get("kind") != kind:
        raise ContainerError(f"{mpath} holds a {manifest.get('kind')!r}, expected {kind!r}")
    try:
        dim, size = int(manifest["dim"]), int(manifest["grid_size"])
        grid = TorusGrid(dim // 2, size)
        if grid.dim != dim:
            raise ValueError(f"odd dimension {dim}")
        arrays = {}
        for name, entry in manifest["arrays"].items():
            if entry.get("dtype", DTYPE) != DTYPE or entry.get("order", "C") != "C":
                raise ValueError(f"array {name!r} is not little-endian float64 row-major")
            shape = tuple(int(s) for s in entry["shape"])
            raw = (mpath.parent / entry["file"]).read_bytes()
            if len(raw) != 8 * int(np.prod(shape)):
                raise ValueError(f"array {name!r} has {len(raw)} bytes, expected {8 * int(np.prod(shape))}")
            arrays[name] = np.frombuffer(raw, dtype=DTYPE).reshape(shape).astype(float)
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise ContainerError(f"malformed container {mpath}: {exc}") from exc
    return manifest, grid, arrays


def _need(arrays: dict, names, mpath) -> None:
    missing = [n for n in names if n not in arrays]
    if missing:
        raise ContainerError(f"{mpath}: missing arrays {missing}")


# --- fields -------------------------------------------------------------------

def save_field(path, grid: TorusGrid, values) -> Path:
    """Save a field with shape (N..) or (components, N..)."""
    values = np.asarray(values, dtype=float)
    comps = 1 if values.shape == grid.shape else values.shape[0]
    if values.reshape((comps,) + grid.shape).shape != (comps,) + grid.shape:
        raise ValueError("field does not match the grid")
    return write_container(path, "field", grid, {"values": values.reshape((comps,) + grid.shape)},
                           {"components": comps})


def load_field(path) -> tuple:
    """Return ``(grid, values)`` with values of shape (components, N..)."""
    manifest, grid, arrays = read_container(path, "field")
    _need(arrays, ["values"], path)
    vals = arrays["values"]
    if vals.shape[1:] != grid.shape:
        raise ContainerError(f"{path}: field shape {vals.shape} does not match the grid")
    return grid, vals


def field_to_csv(grid: TorusGrid, values, max_points: int = CSV_MAX_POINTS) -> str:
    """One row per grid point: integer indices, then one column per component."""
    if grid.num_points > max_points:
        raise ValueError(f"grid has {grid.num_points} points; CSV export is limited to {max_points}")
    values = np.asarray(values, dtype=float).reshape((-1,) + grid.shape)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"i{a}" for a in range(grid.dim)] + [f"c{c}" for c in range(values.shape[0])])
    for idx in np.ndindex(*grid.shape):
        w.writerow(list(idx) + [repr(float(values[(c,) + idx])) for c in range(values.shape[0])])
    return buf.getvalue()


# --- generators, isotopies, families --------------------------------------------

def save_generator(path, g: Generator) -> Path:
    return write_container(path, "generator", g.grid,
                           {"times": g.times, "hams": g.hams, "harms": g.harms},
                           {"steps": g.steps})


def load_generator(path) -> Generator:
    _, grid, arrays = read_container(path, "generator")
    _need(arrays, ["times", "hams", "harms"], path)
    try:
        return Generator(grid, arrays["times"], arrays["hams"], arrays["harms"])
    except ValueError as exc:
        raise ContainerError(f"{path}: {exc}") from exc


def save_isotopy(path, phi: Isotopy) -> Path:
    return write_container(path, "isotopy", phi.grid,
                           {"times": phi.times, "disp": phi.disp, "velocity": phi.velocity},
                           {"steps": phi.steps})


def load_isotopy(path) -> Isotopy:
    _, grid, arrays = read_container(path, "isotopy")
    _need(arrays, ["times", "disp"], path)
    try:
        return Isotopy(grid, arrays["times"], arrays["disp"], arrays.get("velocity"))
    except ValueError as exc:
        raise ContainerError(f"{path}: {exc}") from exc


def save_family(path, family: TwoParamFamily) -> Path:
    return write_container(path, "two_param_family", family.grid,
                           {"s_times": family.s_times, "t_times": family.t_times,
                            "shifts": family.shifts})


def load_family(path) -> TwoParamFamily:
    _, grid, arrays = read_container(path, "two_param_family")
    _need(arrays, ["s_times", "t_times", "shifts"], path)
    try:
        return TwoParamFamily(grid, arrays["s_times"], arrays["t_times"], arrays["shifts"])
    except ValueError as exc:
        raise ContainerError(f"{path}: {exc}") from exc


def rows_to_csv(header, rows) -> str:
    """CSV with floats written by ``repr`` for exact round trips."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()
