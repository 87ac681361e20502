"""Error norms of quadtree or lattice fields against a uniform reference lattice."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgument
from .grid import QuadtreeGrid, Rect, check_root


@dataclass(frozen=True)
class LatticeField:
    """Cell averages ``values[i, j]`` on an ``nx x ny`` uniform lattice over ``root``."""

    root: Rect
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "root", check_root(self.root))
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or min(v.shape) < 1:
            raise InvalidArgument("lattice values must be a nonempty 2-D array")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def centers(self):
        nx, ny = self.shape
        r = self.root
        xs = r.x0 + (np.arange(nx) + 0.5) * (r.width / nx)
        ys = r.y0 + (np.arange(ny) + 0.5) * (r.height / ny)
        return np.meshgrid(xs, ys, indexing="ij")

    def cell_area(self) -> float:
        nx, ny = self.shape
        return (self.root.width / nx) * (self.root.height / ny)

    def sample(self, x, y) -> np.ndarray:
        nx, ny = self.shape
        r = self.root
        i = np.clip(np.floor((np.asarray(x) - r.x0) / r.width * nx).astype(np.int64), 0, nx - 1)
        j = np.clip(np.floor((np.asarray(y) - r.y0) / r.height * ny).astype(np.int64), 0, ny - 1)
        return self.values[i, j]


@dataclass(frozen=True)
class QuadtreeField:
    """One value per leaf of ``grid``; sampled piecewise constant."""

    grid: QuadtreeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.grid.n_cells:
            raise InvalidArgument(f"expected {self.grid.n_cells} leaf values, got {v.size}")
        object.__setattr__(self, "values", v)

    @property
    def root(self) -> Rect:
        return self.grid.root

    def sample(self, x, y) -> np.ndarray:
        return self.values[self.grid.locate(np.ravel(x), np.ravel(y))].reshape(np.shape(x))


@dataclass(frozen=True)
class ErrorReport:
    l1: float
    linf: float
    order_l1: float | None = None  # relative to the previous (coarser) report
    order_linf: float | None = None

    def __post_init__(self):
        if not (self.l1 >= 0 and self.linf >= 0):
            raise InvalidArgument("norms must be nonnegative")


def _same_domain(a: Rect, b: Rect) -> bool:
    return all(math.isclose(p, q, rel_tol=1e-12, abs_tol=1e-12) for p, q in zip(a, b))


def error_norms(field, reference: LatticeField) -> ErrorReport:
    """L1 (area weighted) and max-norm of ``field - reference`` at the reference cell centers."""
    if not isinstance(reference, LatticeField):
        raise InvalidArgument("reference must be a LatticeField")
    if not _same_domain(field.root, reference.root):
        raise InvalidArgument(f"domains differ: {tuple(field.root)} vs {tuple(reference.root)}")
    X, Y = reference.centers()
    d = np.abs(field.sample(X, Y) - reference.values)
    return ErrorReport(float(d.sum() * reference.cell_area()), float(d.max()))


def observed_order(e_coarse: float, e_fine: float, ratio: float = 2.0) -> float:
    if not (e_coarse > 0 and e_fine > 0):
        raise InvalidArgument("errors must be positive to define an order")
    return math.log(e_coarse / e_fine) / math.log(ratio)


def convergence_table(reports: Sequence[ErrorReport], ratio: float = 2.0) -> list[ErrorReport]:
    """Copies of ``reports`` (coarse to fine) annotated with observed orders."""
    out = []
    for k, r in enumerate(reports):
        if k == 0:
            out.append(r)
            continue
        p = reports[k - 1]
        o1 = observed_order(p.l1, r.l1, ratio) if p.l1 > 0 and r.l1 > 0 else None
        oi = observed_order(p.linf, r.linf, ratio) if p.linf > 0 and r.linf > 0 else None
        out.append(ErrorReport(r.l1, r.linf, o1, oi))
    return out
