"""Continuous piecewise-bilinear bottom interpolant on a quadtree.

Corner values live on the finest-lattice vertex array so that neighboring
cells share them.  Vertices are assigned coarse level first; a vertex that
sits at the midpoint of a coarser neighbor's edge (a hanging vertex) takes
the mean of that edge's endpoint values instead of a fresh sample, which
keeps the interpolant continuous.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DataError, InvalidArgument, PreconditionViolation
from .grid import QuadtreeGrid, Rect, is_balanced

# corner order used throughout: SW, SE, NW, NE
SW, SE, NW, NE = 0, 1, 2, 3

N_PROBES = 16
_ANGLES = 2.0 * np.pi * np.arange(N_PROBES) / N_PROBES


@dataclass(frozen=True)
class BottomField:
    """Bottom elevation ``B(x, y)``, vectorized over numpy arrays.

    Set ``continuous=False`` for topographies with jumps; vertex values then
    use the mean of the largest and smallest one-sided limits.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    continuous: bool = True
    name: str = "bottom"

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(self.func(x, y), dtype=float), np.broadcast(x, y).shape)


def constant_bottom(c: float = 0.0) -> BottomField:
    return BottomField(lambda x, y: np.full(np.broadcast(x, y).shape, float(c)), True, f"constant({c})")


def vertex_value(bottom: BottomField, x, y, probe_radius: float):
    """Point value of B used at a cell vertex.

    For a discontinuous field the one-sided limits are approximated by
    sampling a circle of radius ``probe_radius`` around the vertex; the result
    is ``(max + min) / 2`` over the finite samples.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if bottom.continuous:
        v = bottom(x, y)
        bad = ~np.isfinite(v)
        if bad.any():
            k = np.argwhere(bad)[0]
            raise DataError(f"non-finite bottom sample at ({np.broadcast_to(x, v.shape)[tuple(k)]}, "
                            f"{np.broadcast_to(y, v.shape)[tuple(k)]})")
        return v
    if not probe_radius > 0:
        raise InvalidArgument("probe_radius must be positive")
    px = x[..., None] + probe_radius * np.cos(_ANGLES)
    py = y[..., None] + probe_radius * np.sin(_ANGLES)
    v = bottom(px, py)
    fin = np.isfinite(v)
    if not fin.any(axis=-1).all():
        k = np.argwhere(~fin.any(axis=-1))[0]
        xb, yb = np.broadcast_to(x, fin.shape[:-1]), np.broadcast_to(y, fin.shape[:-1])
        raise DataError(f"all bottom probes non-finite around ({xb[tuple(k)]}, {yb[tuple(k)]})")
    hi = np.where(fin, v, -np.inf).max(axis=-1)
    lo = np.where(fin, v, np.inf).min(axis=-1)
    return 0.5 * (hi + lo)


def default_probe_radius(root: Rect, m: int) -> float:
    return 1e-3 * min(root.width, root.height) / (1 << m)


class BottomLattice:
    """Lazily cached vertex values of a BottomField on a finest lattice."""

    def __init__(self, bottom: BottomField, root: Rect, m: int, probe_radius: float | None = None):
        self.bottom = bottom
        self.root = Rect(*root)
        self.m = m
        self.probe_radius = default_probe_radius(self.root, m) if probe_radius is None else probe_radius
        self._values = None

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            n = 1 << self.m
            xs = self.root.x0 + np.arange(n + 1) * (self.root.width / n)
            ys = self.root.y0 + np.arange(n + 1) * (self.root.height / n)
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            self._values = vertex_value(self.bottom, X, Y, self.probe_radius)
            self._values.flags.writeable = False
        return self._values

    def __call__(self, I, J):
        return self.values[I, J]


@dataclass(frozen=True)
class BathymetryData:
    """Corner, edge-midpoint and center values of the bilinear interpolant.

    ``corners`` is ``(N, 4)`` in SW, SE, NW, NE order; ``edge_mid`` is
    ``(N, 4)`` in LEFT, RIGHT, BOTTOM, TOP order; ``center`` is the cell
    average of the interpolant.  ``vertex`` holds the shared lattice values
    (NaN where no leaf corner lies).
    """

    vertex: np.ndarray
    corners: np.ndarray
    edge_mid: np.ndarray
    center: np.ndarray
    hanging: np.ndarray  # bool over the vertex lattice

    def at_lattice(self, I, J):
        return self.vertex[I, J]


def _corner_lattice(grid: QuadtreeGrid, sel=None):
    X0, Y0, s = grid.X0, grid.Y0, grid.span
    if sel is not None:
        X0, Y0, s = X0[sel], Y0[sel], s[sel]
    I = np.stack([X0, X0 + s, X0, X0 + s], axis=-1)
    J = np.stack([Y0, Y0, Y0 + s, Y0 + s], axis=-1)
    return I, J


def build_bathymetry(grid: QuadtreeGrid, bottom: BottomField | BottomLattice, check: bool = True) -> BathymetryData:
    """Assign corner values level by level and derive the bilinear data."""
    if check and not is_balanced(grid):
        raise PreconditionViolation("build_bathymetry requires a 2:1 balanced grid")
    lattice = bottom if isinstance(bottom, BottomLattice) else BottomLattice(bottom, grid.root, grid.max_level)
    n = grid.lattice_size
    Bv = np.full((n + 1, n + 1), np.nan)
    hanging = np.zeros((n + 1, n + 1), dtype=bool)
    owner, lev, X0, Y0, span = grid.owner, grid.level, grid.X0, grid.Y0, grid.span
    for l in np.unique(lev):
        sel = np.nonzero(lev == l)[0]
        I, J = _corner_lattice(grid, sel)
        flat = np.unique(I.ravel() * (n + 1) + J.ravel())
        I, J = np.divmod(flat, n + 1)
        todo = np.isnan(Bv[I, J])
        I, J = I[todo], J[todo]
        val = np.full(I.size, np.nan)
        is_hang = np.zeros(I.size, dtype=bool)
        for di, dj in ((-1, -1), (0, -1), (-1, 0), (0, 0)):
            X, Y = I + di, J + dj
            ok = (X >= 0) & (Y >= 0) & (X < n) & (Y < n) & ~is_hang
            o = owner[np.clip(X, 0, n - 1), np.clip(Y, 0, n - 1)]
            ok &= lev[o] < l
            rI, rJ, S = I - X0[o], J - Y0[o], span[o]
            cI = (rI == 0) | (rI == S)
            cJ = (rJ == 0) | (rJ == S)
            h = ok & ~(cI & cJ)
            if not h.any():
                continue
            vert = h & cI  # vertex inside a vertical edge of the coarse owner
            horz = h & ~cI
            oh = o[vert]
            val[vert] = 0.5 * (Bv[I[vert], Y0[oh]] + Bv[I[vert], Y0[oh] + span[oh]])
            oh = o[horz]
            val[horz] = 0.5 * (Bv[X0[oh], J[horz]] + Bv[X0[oh] + span[oh], J[horz]])
            is_hang |= h
        fresh = ~is_hang
        if fresh.any():
            val[fresh] = lattice(I[fresh], J[fresh])
        if np.isnan(val).any():
            raise PreconditionViolation("hanging vertex refers to an unset coarse vertex")
        Bv[I, J] = val
        hanging[I[is_hang], J[is_hang]] = True
    I, J = _corner_lattice(grid)
    corners = Bv[I, J]
    edge_mid = np.stack(
        [
            0.5 * (corners[:, SW] + corners[:, NW]),
            0.5 * (corners[:, SE] + corners[:, NE]),
            0.5 * (corners[:, SW] + corners[:, SE]),
            0.5 * (corners[:, NW] + corners[:, NE]),
        ],
        axis=-1,
    )
    center = (edge_mid[:, 1] + edge_mid[:, 0] + edge_mid[:, 3] + edge_mid[:, 2]) / 4.0
    return BathymetryData(Bv, corners, edge_mid, center, hanging)


def bilinear(corners, s, t):
    """Bilinear interpolation of (SW, SE, NW, NE) corner values at local (s, t) in [0, 1]^2."""
    c = np.asarray(corners, dtype=float)
    sw, se, nw, ne = c[..., SW], c[..., SE], c[..., NW], c[..., NE]
    # tensor form: exact at corners and edge midpoints, so dry faces stay exactly dry
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return (1.0 - t) * ((1.0 - s) * sw + s * se) + t * ((1.0 - s) * nw + s * ne)


def eval_Btilde(data: BathymetryData, grid: QuadtreeGrid, index: int, x: float, y: float) -> float:
    """Value of the bilinear bottom piece of leaf ``index`` at ``(x, y)``."""
    s = (x - (grid.xc[index] - 0.5 * grid.dx[index])) / grid.dx[index]
    t = (y - (grid.yc[index] - 0.5 * grid.dy[index])) / grid.dy[index]
    tol = 1e-12
    if not (-tol <= s <= 1 + tol and -tol <= t <= 1 + tol):
        raise InvalidArgument(f"point ({x}, {y}) lies outside cell {tuple(grid.cell(index))}")
    return float(bilinear(data.corners[index], s, t))


# ------------------------------------------------------------------ rasters


def read_raster(path) -> tuple[np.ndarray, tuple[int, int, float, float, float, float]]:
    """Read a ``quadswe-raster v1`` file; values are returned as ``[iy, ix]``."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read raster {path}: {exc}") from exc
    head = lines[0].split() if lines else []
    if len(head) != 9 or head[:3] != ["#", "quadswe-raster", "v1"]:
        raise DataError(f"{path}: bad raster header")
    nx, ny = int(head[3]), int(head[4])
    x0, y0, dx, dy = map(float, head[5:9])
    vals = np.array([float(v) for line in lines[1:] for v in line.split()])
    if vals.size != nx * ny:
        raise DataError(f"{path}: expected {nx * ny} values, found {vals.size}")
    if not np.isfinite(vals).all():
        raise DataError(f"{path}: non-finite raster value")
    return vals.reshape(ny, nx), (nx, ny, x0, y0, dx, dy)


def write_raster(path, values, x0, y0, dx, dy) -> None:
    values = np.asarray(values, dtype=float)
    ny, nx = values.shape
    with open(path, "w") as fh:
        fh.write(f"# quadswe-raster v1 {nx} {ny} {x0:.17g} {y0:.17g} {dx:.17g} {dy:.17g}\n")
        for row in values:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def raster_bottom(path, continuous: bool = True) -> BottomField:
    """BottomField given by bilinear sampling of a node-registered raster."""
    vals, (nx, ny, x0, y0, dx, dy) = read_raster(path)

    def f(x, y):
        fx = np.clip((x - x0) / dx, 0, nx - 1)
        fy = np.clip((y - y0) / dy, 0, ny - 1)
        i = np.minimum(np.floor(fx).astype(int), max(nx - 2, 0))
        j = np.minimum(np.floor(fy).astype(int), max(ny - 2, 0))
        s, t = fx - i, fy - j
        i1, j1 = np.minimum(i + 1, nx - 1), np.minimum(j + 1, ny - 1)
        return (
            vals[j, i] * (1 - s) * (1 - t)
            + vals[j, i1] * s * (1 - t)
            + vals[j1, i] * (1 - s) * t
            + vals[j1, i1] * s * t
        )

    return BottomField(f, continuous, f"raster({Path(path).name})")
