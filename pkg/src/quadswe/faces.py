"""Oriented interfaces of a balanced quadtree, split into sub-faces.

Every sub-face is a full edge of the finer of its two cells, so each carries
one midpoint quadrature node.  A coarse cell facing two finer neighbors sees
two sub-faces, each covering half of its edge.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionViolation
from .grid import MASK_WALL, QuadtreeGrid, Side, is_balanced


@dataclass(frozen=True)
class SubFaces:
    """Structure-of-arrays for the sub-faces normal to one axis.

    ``lo``/``hi`` are the cells on the low (left or bottom) and high side;
    ``-1`` marks a ghost.  ``boundary`` is ``-1`` for interior sub-faces,
    otherwise the domain :class:`Side` or ``MASK_WALL``.  ``tan_lo``/``tan_hi``
    give the tangential offset of the midpoint from each cell's center as a
    fraction of that cell's tangential size (0 or +-1/4), and ``frac_lo``/
    ``frac_hi`` the sub-face length over that cell's edge length.
    ``(Ia, Ja)``-``(Ib, Jb)`` are the lattice endpoints.
    """

    axis: int
    lo: np.ndarray
    hi: np.ndarray
    boundary: np.ndarray
    length: np.ndarray
    xm: np.ndarray
    ym: np.ndarray
    tan_lo: np.ndarray
    tan_hi: np.ndarray
    frac_lo: np.ndarray
    frac_hi: np.ndarray
    Ia: np.ndarray
    Ja: np.ndarray
    Ib: np.ndarray
    Jb: np.ndarray

    @property
    def size(self) -> int:
        return int(self.lo.size)

    @property
    def interior(self) -> np.ndarray:
        return self.boundary < 0


@dataclass(frozen=True)
class FaceSet:
    x: SubFaces
    y: SubFaces

    @property
    def n_interior(self) -> int:
        return int(self.x.interior.sum() + self.y.interior.sum())

    @property
    def n_boundary(self) -> int:
        return int((~self.x.interior).sum() + (~self.y.interior).sum())

    def of_cell(self, index: int, side) -> list[dict]:
        """Sub-faces on one side of a cell, as plain records (for inspection)."""
        side = Side(side)
        sf = self.x if side in (Side.LEFT, Side.RIGHT) else self.y
        hit = sf.hi == index if side in (Side.LEFT, Side.BOTTOM) else sf.lo == index
        out = []
        for k in np.nonzero(hit)[0]:
            out.append(
                dict(
                    midpoint=(float(sf.xm[k]), float(sf.ym[k])),
                    length=float(sf.length[k]),
                    lo=int(sf.lo[k]),
                    hi=int(sf.hi[k]),
                    boundary=int(sf.boundary[k]),
                    frac=float(sf.frac_hi[k] if side in (Side.LEFT, Side.BOTTOM) else sf.frac_lo[k]),
                )
            )
        out.sort(key=lambda r: r["midpoint"])
        return out


def _half_offset(fine_start, coarse_start):
    return np.where(fine_start == coarse_start, -0.25, 0.25)


def _axis_faces(grid: QuadtreeGrid, axis: int) -> SubFaces:
    nb = grid.neighbor_table
    lev, s = grid.level, grid.span
    if axis == 0:
        low_side, high_side = Side.LEFT, Side.RIGHT
        N0, T0 = grid.X0, grid.Y0  # normal / tangential lattice starts
        tsize = grid.dy
    else:
        low_side, high_side = Side.BOTTOM, Side.TOP
        N0, T0 = grid.Y0, grid.X0
        tsize = grid.dx
    cells = np.arange(grid.n_cells)

    # faces generated from the low side of each cell: boundary or a single
    # (same-level or coarser) neighbor
    a0, a1 = nb[:, low_side, 0], nb[:, low_side, 1]
    gen_lo = (a0 < 0) | (a1 < 0)
    c_lo = cells[gen_lo]
    n_lo = a0[gen_lo]
    # faces generated from the high side: boundary or a strictly coarser neighbor
    b0, b1 = nb[:, high_side, 0], nb[:, high_side, 1]
    coarser = (b0 >= 0) & (b1 < 0) & (lev[np.maximum(b0, 0)] < lev)
    gen_hi = (b0 < 0) | coarser
    c_hi = cells[gen_hi]
    n_hi = b0[gen_hi]

    lo = np.concatenate([n_lo, c_hi])
    hi = np.concatenate([c_lo, n_hi])
    gen = np.concatenate([c_lo, c_hi])  # cell whose full edge the sub-face is
    normal = np.concatenate([N0[c_lo], N0[c_hi] + s[c_hi]])
    boundary = np.concatenate(
        [np.where(n_lo < 0, int(low_side), -1), np.where(n_hi < 0, int(high_side), -1)]
    ).astype(np.int64)

    tan_lo = np.zeros(lo.size)
    tan_hi = np.zeros(lo.size)
    frac_lo = np.ones(lo.size)
    frac_hi = np.ones(lo.size)
    has_lo, has_hi = lo >= 0, hi >= 0
    lo_c, hi_c = np.maximum(lo, 0), np.maximum(hi, 0)
    lo_coarse = has_lo & has_hi & (lev[lo_c] < lev[hi_c])
    hi_coarse = has_lo & has_hi & (lev[hi_c] < lev[lo_c])
    tan_lo[lo_coarse] = _half_offset(T0[hi[lo_coarse]], T0[lo[lo_coarse]])
    frac_lo[lo_coarse] = 0.5
    tan_hi[hi_coarse] = _half_offset(T0[lo[hi_coarse]], T0[hi[hi_coarse]])
    frac_hi[hi_coarse] = 0.5

    # masking: active|masked pairs become walls, fully masked faces are dropped
    act = grid.active
    lo_act = has_lo & act[lo_c]
    hi_act = has_hi & act[hi_c]
    keep = lo_act | hi_act
    wall_lo = keep & has_lo & ~lo_act
    wall_hi = keep & has_hi & ~hi_act
    lo = np.where(wall_lo, -1, lo)
    hi = np.where(wall_hi, -1, hi)
    boundary = np.where(wall_lo | wall_hi, MASK_WALL, boundary)
    tan_lo[wall_lo] = 0.0
    frac_lo[wall_lo] = 1.0
    tan_hi[wall_hi] = 0.0
    frac_hi[wall_hi] = 1.0

    sel = np.nonzero(keep)[0]
    lo, hi, gen, normal, boundary = lo[sel], hi[sel], gen[sel], normal[sel], boundary[sel]
    tan_lo, tan_hi, frac_lo, frac_hi = tan_lo[sel], tan_hi[sel], frac_lo[sel], frac_hi[sel]
    ta = T0[gen]
    tb = ta + s[gen]
    length = tsize[gen]
    if axis == 0:
        Ia, Ib, Ja, Jb = normal, normal, ta, tb
        xm = grid.lattice_x(normal)
        ym = grid.lattice_y(ta + 0.5 * s[gen])
    else:
        Ja, Jb, Ia, Ib = normal, normal, ta, tb
        ym = grid.lattice_y(normal)
        xm = grid.lattice_x(ta + 0.5 * s[gen])
    return SubFaces(axis, lo, hi, boundary, length, xm, ym, tan_lo, tan_hi, frac_lo, frac_hi, Ia, Ja, Ib, Jb)


def build_faces(grid: QuadtreeGrid, check: bool = True) -> FaceSet:
    """Sub-face decomposition of all interfaces of a balanced grid."""
    if check and not is_balanced(grid):
        raise PreconditionViolation("build_faces requires a 2:1 balanced grid")
    return FaceSet(_axis_faces(grid, 0), _axis_faces(grid, 1))
