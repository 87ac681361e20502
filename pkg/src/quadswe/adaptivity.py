"""Slope-driven seeding, regridding and conservative projection between quadtrees."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bathymetry import BathymetryData
from .errors import ConsistencyError, InvalidArgument
from .grid import QuadtreeGrid, grid_from_lattice_cells, regularize, seed_lattice_cells
from .reconstruction import SlopeSet

CLAMP_TOL = 1e-13


@dataclass(frozen=True)
class SeedCriterion:
    c_seed: float

    def __post_init__(self):
        if not (np.isfinite(self.c_seed) and self.c_seed > 0):
            raise InvalidArgument("C_seed must be a positive number")


def select_seed_cells(grid: QuadtreeGrid, slopes: SlopeSet, criterion: SeedCriterion | float) -> np.ndarray:
    """Indices of active leaves with ``|w_x| >= C`` or ``|w_y| >= C``."""
    c = criterion.c_seed if isinstance(criterion, SeedCriterion) else SeedCriterion(criterion).c_seed
    hit = (np.abs(slopes.ux[:, 0]) >= c) | (np.abs(slopes.uy[:, 0]) >= c)
    return np.nonzero(hit & grid.active)[0]


def select_seeds(grid: QuadtreeGrid, slopes: SlopeSet, criterion: SeedCriterion | float) -> np.ndarray:
    """Centers ``(k, 2)`` of the seeded leaves."""
    idx = select_seed_cells(grid, slopes, criterion)
    return np.column_stack([grid.xc[idx], grid.yc[idx]])


def build_grid(root, m: int, X, Y, mask_fn: Callable | None = None) -> QuadtreeGrid:
    """Regularized grid whose seeded lattice cells are at level m, with the active mask applied."""
    grid = regularize(grid_from_lattice_cells(root, m, X, Y))
    if mask_fn is not None:
        grid = grid.with_active(np.asarray(mask_fn(grid.xc, grid.yc), dtype=bool))
    return grid


@dataclass
class RegridReport:
    n_old: int
    n_new: int
    case1: int
    case2: int
    case3: int
    restored: int  # prolongation groups with reduced surface slope
    clamped: int  # cells raised to the bottom
    surface_before: float  # sum of w * area
    surface_after: float
    volume_before: float  # sum of (w - B) * area
    volume_after: float
    discharge_before: tuple[float, float]
    discharge_after: tuple[float, float]

    @property
    def surface_change(self) -> float:
        return abs(self.surface_after - self.surface_before) / max(abs(self.surface_before), 1e-300)

    @property
    def volume_change(self) -> float:
        return abs(self.volume_after - self.volume_before) / max(abs(self.volume_before), 1e-300)

    def to_line(self) -> str:
        return (
            f"regrid old={self.n_old} new={self.n_new} copy={self.case1} prolong={self.case2} "
            f"restrict={self.case3} restored={self.restored} clamped={self.clamped} "
            f"surface={self.surface_before:.15e}->{self.surface_after:.15e} "
            f"volume={self.volume_before:.15e}->{self.volume_after:.15e}"
        )


def _totals(grid: QuadtreeGrid, U, Bc):
    a = grid.active
    area = grid.area[a]
    return (
        float(np.sum(U[a, 0] * area)),
        float(np.sum((U[a, 0] - Bc[a]) * area)),
        (float(np.sum(U[a, 1] * area)), float(np.sum(U[a, 2] * area))),
    )


def project(grid_old: QuadtreeGrid, U_old, slopes_old: SlopeSet, bathy_old: BathymetryData,
            grid_new: QuadtreeGrid, bathy_new: BathymetryData):
    """Transfer cell averages from ``grid_old`` to ``grid_new``.

    Equal leaves copy; a new leaf inside a coarser old leaf takes the old
    linear piece at its center; a new leaf covering several old leaves takes
    their area-weighted mean.  Inside each refined old leaf the surface slope
    is scaled down just enough for every new leaf to have nonnegative depth;
    if no scaling suffices, the old depth is spread uniformly.
    Returns ``(U_new, RegridReport)``.
    """
    if grid_old.root != grid_new.root or grid_old.max_level != grid_new.max_level:
        raise InvalidArgument("grids must share root rectangle and max level")
    Bn = bathy_new.center
    N = grid_new.n_cells
    o = grid_old.owner[grid_new.X0, grid_new.Y0]
    lo, ln = grid_old.level[o], grid_new.level
    c1, c2, c3 = ln == lo, ln > lo, ln < lo
    U_new = np.empty((N, 3))
    U_new[c1] = U_old[o[c1]]

    # restriction: exact lattice average
    if c3.any():
        own_new = grid_new.owner.ravel()
        own_old = grid_old.owner.ravel()
        sums = np.stack([np.bincount(own_new, weights=U_old[own_old, k], minlength=N) for k in range(3)], axis=1)
        U_new[c3] = sums[c3] / (grid_new.span[c3].astype(float) ** 2)[:, None]
        if not np.allclose(np.bincount(own_new, minlength=N)[c3], grid_new.span[c3] ** 2):
            raise ConsistencyError("restricted leaf not covered by the finest lattice")

    restored = 0
    dry_groups = 0
    if c2.any():
        i = np.nonzero(c2)[0]
        p = o[i]
        ox = grid_new.xc[i] - grid_old.xc[p]
        oy = grid_new.yc[i] - grid_old.yc[p]
        lin = ox[:, None] * slopes_old.ux[p] + oy[:, None] * slopes_old.uy[p]
        U_new[i] = U_old[p] + lin
        # per-parent maximal theta in [0, 1] keeping w >= B on every child
        wbar = U_old[p, 0]
        s = lin[:, 0]
        gap = wbar - Bn[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where(s < 0, gap / -s, np.where((s == 0) & (gap < 0), -np.inf, np.inf))
            dn = np.where(s > 0, -gap / s, -np.inf)
        n_old = grid_old.n_cells
        upper = np.ones(n_old)
        lower = np.zeros(n_old)
        np.minimum.at(upper, p, up)
        np.maximum.at(lower, p, dn)
        bad = upper[p] < 1.0
        if bad.any():
            restored = int(np.unique(p[bad]).size)
            feas = lower[p] <= upper[p]
            fix = bad & feas
            U_new[i[fix], 0] = wbar[fix] + upper[p[fix]] * s[fix]
            inf = bad & ~feas
            if inf.any():
                # uniform depth over the group: keeps the group's surface integral when possible
                a = grid_new.area[i]
                Bsum = np.bincount(p, weights=Bn[i] * a, minlength=n_old)
                asum = np.bincount(p, weights=a, minlength=n_old)
                d = wbar - Bsum[p] / asum[p]
                dry_groups = int((inf & (d < 0)).sum())
                U_new[i[inf], 0] = Bn[i[inf]] + np.maximum(d[inf], 0.0)

    act = grid_new.active
    low = act & (U_new[:, 0] < Bn)
    clamped = dry_groups + int((low & (U_new[:, 0] < Bn - CLAMP_TOL * np.maximum(1.0, np.abs(Bn)))).sum())
    U_new[low, 0] = Bn[low]
    if (~act).any():
        U_new[~act] = np.column_stack([Bn[~act], np.zeros((~act).sum()), np.zeros((~act).sum())])

    sb, vb, qb = _totals(grid_old, U_old, bathy_old.center)
    sa, va, qa = _totals(grid_new, U_new, Bn)
    report = RegridReport(grid_old.n_cells, N, int(c1.sum()), int(c2.sum()), int(c3.sum()), restored, clamped,
                          sb, sa, vb, va, qb, qa)
    return U_new, report


def regrid_and_project(grid_old: QuadtreeGrid, U_old, slopes_old: SlopeSet, bathy_old: BathymetryData,
                       seed_cells, make_bathy: Callable[[QuadtreeGrid], BathymetryData], *, closed: bool = False,
                       extra_cells=None, mask_fn: Callable | None = None):
    """New grid from the seeded old leaves, plus the projected state.

    ``seed_cells`` are old-leaf indices whose centers act as seeds;
    ``extra_cells`` is an optional ``(X, Y)`` pair of lattice cells that are
    always refined.  Returns ``(grid_new, bathy_new, U_new, report)``.
    """
    X, Y = seed_lattice_cells(grid_old, seed_cells, closed)
    if extra_cells is not None:
        X = np.concatenate([X, extra_cells[0]])
        Y = np.concatenate([Y, extra_cells[1]])
    grid_new = build_grid(grid_old.root, grid_old.max_level, X, Y, mask_fn)
    bathy_new = make_bathy(grid_new)
    U_new, report = project(grid_old, U_old, slopes_old, bathy_old, grid_new, bathy_new)
    return grid_new, bathy_new, U_new, report
