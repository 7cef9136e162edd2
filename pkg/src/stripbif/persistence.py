"""Branch files (JSON) and plot exports (CSV).

Branch schema, version 1::

    {"schema_version": 1, "m": int, "ell": int, "Nx": int, "Nt": int,
     "points": [{"s", "lambda", "u_modes" (Nx x Nt nested list), "h_coeffs",
                 "residual_interior", "residual_neumann", "newton_iters"}, ...]}

Floats are written with ``repr`` precision, so a round trip is bit exact.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from stripbif.continuation import Branch, BranchPoint
from stripbif.domain import BoundaryProfile, StripField, StripParams, collocation_grid, make_strip
from stripbif.verify import pushforward_solution

SCHEMA_VERSION = 1
POINT_FIELDS = ("s", "lambda", "u_modes", "h_coeffs", "residual_interior", "residual_neumann", "newton_iters")


class BranchFormatError(ValueError):
    """A branch file that cannot be parsed; ``where`` locates the problem."""

    def __init__(self, path, where: str, message: str):
        super().__init__(f"{path}: {where}: {message}")
        self.path, self.where, self.message = str(path), where, message


class ExportError(OSError):
    pass


@dataclass(frozen=True, eq=False)
class BranchFile:
    params: StripParams
    Nx: int
    Nt: int
    points: Branch


def _point_dict(p: BranchPoint) -> dict:
    return {
        "s": p.s,
        "lambda": p.lam,
        "u_modes": p.u.modes.tolist(),
        "h_coeffs": p.h.coeffs.tolist(),
        "residual_interior": p.residual_interior,
        "residual_neumann": p.residual_neumann,
        "newton_iters": p.newton_iters,
    }


def export_branch(points, path, params: StripParams, format: str = "json") -> Path:
    """Write a branch to ``path``; only the JSON format is defined."""
    if format != "json":
        raise ValueError(f"unsupported branch format {format!r}")
    if not points:
        raise ValueError("cannot export an empty branch")
    grid = points[0].grid
    doc = {"schema_version": SCHEMA_VERSION, "m": params.m, "ell": params.ell,
           "Nx": grid.Nx, "Nt": grid.Nt, "points": [_point_dict(p) for p in points]}
    path = Path(path)
    try:
        path.write_text(json.dumps(doc, indent=1))
    except OSError as exc:
        raise ExportError(f"{path}: {exc.strerror or exc}") from exc
    return path


def _require(obj, key, kind, path, where):
    if not isinstance(obj, dict) or key not in obj:
        raise BranchFormatError(path, where, f"missing field {key!r}")
    val = obj[key]
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise BranchFormatError(path, f"{where}.{key}", f"expected an integer, got {type(val).__name__}")
    if kind is float and (isinstance(val, bool) or not isinstance(val, (int, float))):
        raise BranchFormatError(path, f"{where}.{key}", f"expected a number, got {type(val).__name__}")
    return val


def _array(val, shape, path, where) -> np.ndarray:
    try:
        a = np.array(val, dtype=float)
    except (TypeError, ValueError) as exc:
        raise BranchFormatError(path, where, f"not a numeric array ({exc})") from exc
    if a.shape != shape:
        raise BranchFormatError(path, where, f"shape {a.shape}, expected {shape}")
    return a


def import_branch(path) -> BranchFile:
    """Read a branch file written by :func:`export_branch`."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise BranchFormatError(path, "file", exc.strerror or str(exc)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BranchFormatError(path, f"line {exc.lineno}, column {exc.colno}", exc.msg) from exc

    version = _require(doc, "schema_version", int, path, "header")
    if version != SCHEMA_VERSION:
        raise BranchFormatError(path, "header.schema_version", f"unsupported version {version}")
    m = _require(doc, "m", int, path, "header")
    ell = _require(doc, "ell", int, path, "header")
    Nx = _require(doc, "Nx", int, path, "header")
    Nt = _require(doc, "Nt", int, path, "header")
    try:
        params = make_strip(m, ell)
        grid = collocation_grid(params, Nx, Nt)
    except ValueError as exc:
        raise BranchFormatError(path, "header", str(exc)) from exc
    raw = _require(doc, "points", list, path, "header")
    if not isinstance(raw, list) or not raw:
        raise BranchFormatError(path, "points", "expected a non-empty list")

    points = Branch()
    for i, rp in enumerate(raw):
        where = f"points[{i}]"
        vals = {k: _require(rp, k, float, path, where)
                for k in ("s", "lambda", "residual_interior", "residual_neumann")}
        iters = _require(rp, "newton_iters", int, path, where)
        modes = _array(_require(rp, "u_modes", list, path, where), (Nx, Nt), path, f"{where}.u_modes")
        coeffs = _require(rp, "h_coeffs", list, path, where)
        h = _array(coeffs, (len(coeffs),), path, f"{where}.h_coeffs")
        if h.size == 0:
            raise BranchFormatError(path, f"{where}.h_coeffs", "empty coefficient list")
        points.append(BranchPoint(float(vals["s"]), float(vals["lambda"]), StripField(grid, modes),
                                  BoundaryProfile(h), float(vals["residual_interior"]),
                                  float(vals["residual_neumann"]), iters))
    return BranchFile(params, Nx, Nt, points)


def select_point(points, s: float) -> BranchPoint:
    """The branch point whose amplitude is closest to ``s``."""
    return min(points, key=lambda p: abs(p.s - s))


def _write_csv(path, header, rows):
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise ExportError(f"{path}: {exc.strerror or exc}") from exc
    return path


def domain_samples(point: BranchPoint, params: StripParams, samples: int):
    """Rows ``(x, t, u, boundary)``: both boundary curves (flag +1 / -1) and an interior grid (flag 0)."""
    if samples < 2:
        raise ValueError("samples must be at least 2")
    sol = pushforward_solution(point, params)
    x = np.linspace(-np.pi, np.pi, samples)
    gamma = sol.boundary(x)
    rows = []
    for side in (1, -1):
        t = side * gamma
        rows.extend(zip(x, t, sol(x, t), np.full(samples, side)))
    rho = np.linspace(-1, 1, samples + 2)[1:-1]
    X = np.repeat(x[:, None], samples, axis=1)
    T = rho[None, :] * gamma[:, None]
    rows.extend(zip(X.ravel(), T.ravel(), sol(X, T).ravel(), np.zeros(X.size, dtype=int)))
    return [(float(a), float(b), float(c), int(d)) for a, b, c, d in rows]


def export_domain(point: BranchPoint, params: StripParams, samples: int, path) -> Path:
    """CSV with header ``x,t,u,boundary``."""
    return _write_csv(path, ("x", "t", "u", "boundary"), domain_samples(point, params, samples))


def export_rescaled(W, samples: int, path) -> Path:
    """CSV ``y,zeta,W,boundary`` for a rescaled solution."""
    y = np.linspace(-np.pi, np.pi, samples) / W.lam
    top = W.boundary(y)
    rows = []
    for side in (1, -1):
        rows.extend(zip(y, side * top, W(y, side * top), np.full(samples, side)))
    Y, Z, V = W.sample(samples, samples)
    inner = np.abs(Z) < np.abs(W.boundary(Y))
    rows.extend(zip(Y[inner], Z[inner], V[inner], np.zeros(int(inner.sum()), dtype=int)))
    return _write_csv(path, ("y", "zeta", "W", "boundary"),
                      [(float(a), float(b), float(c), int(d)) for a, b, c, d in rows])
