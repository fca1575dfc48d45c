"""Field containers on disk: ``.npz`` with grid metadata, and flat CSV.

CSV layout is one row per grid point: the coordinates x1[, x2] followed by
the field components.  Complex components are split into ``<name>_re`` and
``<name>_im`` columns.  Rows run in C order over the grid indices.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .grid import Grid
from .state import PhysicalConstants, WaveFunction

FORMAT_VERSION = 1


def _components(grid: Grid, fields: dict) -> list[tuple[str, np.ndarray]]:
    cols = []
    for name, f in fields.items():
        f = np.asarray(f)
        if f.shape == grid.shape:
            parts = [(name, f)]
        elif f.shape[1:] == grid.shape:
            parts = [(f"{name}{k + 1}", f[k]) for k in range(f.shape[0])]
        else:
            raise ValueError(f"field {name!r} has shape {f.shape}, grid is {grid.shape}")
        for label, arr in parts:
            if np.iscomplexobj(arr):
                cols += [(label + "_re", arr.real), (label + "_im", arr.imag)]
            else:
                cols.append((label, arr))
    return cols


def save_fields(path, grid: Grid, fields: dict, meta: dict | None = None) -> Path:
    """Write named fields plus grid parameters to an ``.npz`` container."""
    path = Path(path)
    header = {"format_version": FORMAT_VERSION, "n_dims": grid.n_dims, "points": grid.points,
              "extent": grid.extent, "meta": meta or {}}
    for name in fields:
        if name.startswith("_"):
            raise ValueError("field names may not start with an underscore")
        grid.check(np.asarray(fields[name]), components=np.ndim(fields[name]) - grid.n_dims)
    np.savez(path, _header=np.array(json.dumps(header, sort_keys=True)), **fields)
    return path


def load_fields(path) -> tuple[Grid, dict, dict]:
    """Inverse of :func:`save_fields`; returns (grid, fields, meta)."""
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["_header"]))
        fields = {k: data[k] for k in data.files if k != "_header"}
    grid = Grid(header["n_dims"], header["points"], header["extent"])
    return grid, fields, header["meta"]


def save_wavefunction(path, wf: WaveFunction, meta: dict | None = None) -> Path:
    meta = dict(meta or {}, hbar=wf.constants.hbar, mass=wf.constants.mass)
    return save_fields(path, wf.grid, {"psi": wf.psi}, meta)


def load_wavefunction(path) -> WaveFunction:
    grid, fields, meta = load_fields(path)
    c = PhysicalConstants(meta.get("hbar", 1.0), meta.get("mass", 1.0))
    return WaveFunction(grid, fields["psi"], c)


def write_fields_csv(path, grid: Grid, fields: dict) -> Path:
    path = Path(path)
    cols = _components(grid, fields)
    names = [f"x{k + 1}" for k in range(grid.n_dims)] + [c[0] for c in cols]
    data = np.column_stack([x.ravel() for x in grid.coords] + [c[1].ravel() for c in cols])
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")
    return path


def read_fields_csv(path, grid: Grid) -> dict:
    """Columns of a field CSV reshaped onto ``grid`` (coordinate columns included)."""
    with open(path, newline="") as fh:
        names = next(csv.reader(fh))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i].reshape(grid.shape) for i, name in enumerate(names)}


def write_table(path, rows: list[dict]) -> Path:
    """Rows of scalars to CSV; the column set is the union of keys in first-seen order."""
    path = Path(path)
    columns = list(dict.fromkeys(k for row in rows for k in row))
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) for k, v in row.items()})
    return path


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and tuples into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if np.isfinite(value) else str(value)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj
