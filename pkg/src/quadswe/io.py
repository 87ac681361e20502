"""Text formats for grids, solutions and sampled matrices."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, OutputError
from .grid import QuadtreeGrid, Rect

GRID_HEADER = "# quadswe-grid v1"
SOLUTION_HEADER = "# quadswe-solution v1"
SOLUTION_COLUMNS = ("level", "ix", "iy", "xc", "yc", "dx", "dy", "w", "hu", "hv", "B")


def _g(v: float) -> str:
    return "%.17g" % v


def _write(path, text: str) -> Path:
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _read_lines(path) -> list[str]:
    path = Path(path)
    try:
        return path.read_text().splitlines()
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _origin(level, ix, xc, dx) -> float:
    return float(xc[0] - (ix[0] + 0.5) * dx[0]) if len(level) else 0.0


# ---------------------------------------------------------------- grid files


def format_grid(grid: QuadtreeGrid) -> str:
    r = grid.root
    lines = [f"{GRID_HEADER} {_g(r.width)} {_g(r.height)} {grid.max_level}"]
    act = grid.active.astype(int)
    for k in range(grid.n_cells):
        lines.append(
            f"{grid.level[k]} {grid.ix[k]} {grid.iy[k]} {_g(grid.xc[k])} {_g(grid.yc[k])} "
            f"{_g(grid.dx[k])} {_g(grid.dy[k])} {act[k]}"
        )
    return "\n".join(lines) + "\n"


def dump_grid(grid: QuadtreeGrid, path) -> Path:
    """One leaf per line in Morton order: ``level ix iy xc yc dx dy mask``."""
    return _write(path, format_grid(grid))


def read_grid(path) -> QuadtreeGrid:
    lines = _read_lines(path)
    head = lines[0].split() if lines else []
    if len(head) != 6 or " ".join(head[:3]) != GRID_HEADER:
        raise DataError(f"{path}: not a quadswe grid file")
    W, H, m = float(head[3]), float(head[4]), int(head[5])
    rows = [ln.split() for ln in lines[1:] if ln.strip()]
    if any(len(r) != 8 for r in rows):
        raise DataError(f"{path}: grid rows need 8 fields")
    level = np.array([int(r[0]) for r in rows], dtype=np.int64)
    ix = np.array([int(r[1]) for r in rows], dtype=np.int64)
    iy = np.array([int(r[2]) for r in rows], dtype=np.int64)
    f = np.array([[float(v) for v in r[3:7]] for r in rows]).reshape(-1, 4)
    x0 = _origin(level, ix, f[:, 0], f[:, 2])
    y0 = _origin(level, iy, f[:, 1], f[:, 3])
    active = np.array([r[7] != "0" for r in rows], dtype=bool)
    return QuadtreeGrid(Rect(x0, y0, W, H), m, level, ix, iy, active)


# ------------------------------------------------------------ solution files


@dataclass
class Solution:
    t: float
    grid: QuadtreeGrid
    U: np.ndarray  # (N, 3) rows in grid order
    B: np.ndarray


def format_solution(grid: QuadtreeGrid, U, Bc, t: float = 0.0) -> str:
    U = np.asarray(U, dtype=float)
    Bc = np.asarray(Bc, dtype=float)
    if U.shape != (grid.n_cells, 3) or Bc.shape != (grid.n_cells,):
        raise DataError("state and bottom arrays do not match the grid")
    lines = [f"{SOLUTION_HEADER} t={_g(t)}", ",".join(SOLUTION_COLUMNS)]
    for k in range(grid.n_cells):
        vals = (grid.xc[k], grid.yc[k], grid.dx[k], grid.dy[k], U[k, 0], U[k, 1], U[k, 2], Bc[k])
        lines.append(f"{grid.level[k]},{grid.ix[k]},{grid.iy[k]}," + ",".join(_g(v) for v in vals))
    return "\n".join(lines) + "\n"


def dump_solution(grid: QuadtreeGrid, U, bathy, path, t: float = 0.0) -> Path:
    """CSV of leaf averages in Morton order; ``bathy`` is BathymetryData or center values."""
    Bc = getattr(bathy, "center", bathy)
    return _write(path, format_solution(grid, U, Bc, t))


def read_solution(path, max_level: int | None = None) -> Solution:
    """Inverse of :func:`dump_solution`; the max level defaults to the finest leaf present."""
    lines = _read_lines(path)
    if len(lines) < 2 or not lines[0].startswith(SOLUTION_HEADER + " t="):
        raise DataError(f"{path}: not a quadswe solution file")
    t = float(lines[0].split("t=", 1)[1])
    if tuple(lines[1].split(",")) != SOLUTION_COLUMNS:
        raise DataError(f"{path}: unexpected column header")
    rows = [ln.split(",") for ln in lines[2:] if ln.strip()]
    if not rows or any(len(r) != len(SOLUTION_COLUMNS) for r in rows):
        raise DataError(f"{path}: malformed solution rows")
    ints = np.array([[int(v) for v in r[:3]] for r in rows], dtype=np.int64)
    f = np.array([[float(v) for v in r[3:]] for r in rows])
    level, ix, iy = ints.T
    m = int(level.max()) if max_level is None else int(max_level)
    W = float(f[0, 2] * (1 << int(level[0])))
    H = float(f[0, 3] * (1 << int(level[0])))
    root = Rect(_origin(level, ix, f[:, 0], f[:, 2]), _origin(level, iy, f[:, 1], f[:, 3]), W, H)
    grid = QuadtreeGrid(root, m, level, ix, iy)
    pos = {(int(l), int(i), int(j)): k for k, (l, i, j) in enumerate(ints)}
    perm = np.array([pos[(int(l), int(i), int(j))] for l, i, j in zip(grid.level, grid.ix, grid.iy)])
    return Solution(t, grid, f[perm, 4:7].copy(), f[perm, 7].copy())


# ------------------------------------------------------------------ sampling


def sample_matrix(grid: QuadtreeGrid, values, nx: int, ny: int) -> np.ndarray:
    """Leaf values sampled at the centers of an ``nx x ny`` lattice, shape ``(ny, nx)``."""
    if nx < 1 or ny < 1:
        raise DataError("sample sizes must be positive")
    r = grid.root
    xs = r.x0 + (np.arange(nx) + 0.5) * (r.width / nx)
    ys = r.y0 + (np.arange(ny) + 0.5) * (r.height / ny)
    X, Y = np.meshgrid(xs, ys)
    return np.asarray(values)[grid.locate(X.ravel(), Y.ravel())].reshape(ny, nx)


def write_matrix(path, M, root: Rect) -> Path:
    """Gnuplot ``nonuniform matrix`` layout: x coordinates in the first row, y in the first column."""
    ny, nx = M.shape
    xs = root.x0 + (np.arange(nx) + 0.5) * (root.width / nx)
    ys = root.y0 + (np.arange(ny) + 0.5) * (root.height / ny)
    lines = [" ".join([str(nx)] + [_g(x) for x in xs])]
    for j in range(ny):
        lines.append(" ".join([_g(ys[j])] + [_g(v) for v in M[j]]))
    return _write(path, "\n".join(lines) + "\n")
