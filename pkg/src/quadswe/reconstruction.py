"""Limited piecewise-linear reconstruction with a positivity-preserving surface correction.

State arrays are ``(N, 3)`` cell averages of ``(w, hu, hv)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bathymetry import NE, NW, SE, SW, BathymetryData, bilinear
from .boundary import BoundarySpec, ghost_average
from .errors import ConsistencyError, InvalidArgument, PositivityViolation
from .grid import MASK_WALL, QuadtreeGrid, Side

# h point values in [-DEPTH_ROUNDOFF * scale, 0) are treated as roundoff zeros
DEPTH_ROUNDOFF = 1e-14

# corner offsets (x, y) in units of the cell size, SW, SE, NW, NE
CORNER_OFFSETS = np.array([(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)])
_SPREAD = np.array([1.0, 4.0 / 3.0, 2.0, 4.0, 1.0])


def minmod(values) -> float:
    """Smallest-magnitude argument if all share a sign, else 0."""
    z = np.asarray(values, dtype=float).ravel()
    if z.size == 0:
        raise InvalidArgument("minmod needs at least one argument")
    if (z > 0).all():
        return float(z.min())
    if (z < 0).all():
        return float(z.max())
    return 0.0


def minmod_rows(c: np.ndarray) -> np.ndarray:
    """Minmod over the last axis, ignoring NaN entries (missing candidates)."""
    missing = np.isnan(c)
    lo = np.where(missing, np.inf, c).min(axis=-1)
    hi = np.where(missing, -np.inf, c).max(axis=-1)
    return np.where(lo > 0, lo, np.where(hi < 0, hi, 0.0))


@dataclass(frozen=True)
class SlopeSet:
    """Limited slopes plus the (possibly corrected) corner values of w.

    ``corners`` holds the w corner values of every cell (SW, SE, NW, NE); for
    cells with ``corrected`` False they are those of the linear piece.
    """

    ux: np.ndarray
    uy: np.ndarray
    corners: np.ndarray
    corrected: np.ndarray
    n_violations: np.ndarray

    @property
    def case_counts(self) -> dict[int, int]:
        return {k: int((self.n_violations == k).sum()) for k in (1, 2, 3)}


_SLOT_SIDES = {0: (Side.LEFT, Side.LEFT, Side.RIGHT, Side.RIGHT), 1: (Side.BOTTOM, Side.BOTTOM, Side.TOP, Side.TOP)}
_SLOT_SIGN = np.array([-1.0, -1.0, 1.0, 1.0])


def _slope_stencil(grid: QuadtreeGrid):
    """Per axis: neighbor index ``(N, 4)``, distance ``(N, 4)`` and ghost slots.

    Slots are (low side, two entries; high side, two entries).  A side with
    a single neighbor repeats it, which leaves minmod unchanged.  Ghost
    slots hold ``-1`` and are listed as ``(cells, slot, tags)``.
    """
    cached = grid.__dict__.get("_slope_stencil")
    if cached is not None:
        return cached
    nb = grid.neighbor_table
    act = grid.active
    N = grid.n_cells
    out = []
    for axis, size in ((0, grid.dx), (1, grid.dy)):
        idx = np.empty((N, 4), dtype=np.int64)
        dist = np.empty((N, 4))
        ghosts = []
        for slot, side in enumerate(_SLOT_SIDES[axis]):
            k = slot % 2
            n = nb[:, side, k]
            if k == 1:
                n = np.where(n >= 0, n, nb[:, side, 0])
            has = n >= 0
            nc = np.maximum(n, 0)
            live = has & act[nc]
            idx[:, slot] = np.where(live, nc, -1)
            dist[:, slot] = np.where(live, 0.5 * (size + size[nc]), size)
            g = np.nonzero(~live)[0]
            if g.size:
                ghosts.append((g, slot, np.where(has[g], MASK_WALL, int(side))))
        out.append((idx, dist, ghosts))
    grid.__dict__["_slope_stencil"] = out
    return out


def compute_slopes(grid: QuadtreeGrid, U: np.ndarray, Bc: np.ndarray, bc: BoundarySpec):
    """Minmod slopes with one candidate quotient per neighbor per side.

    Quotients use the center-to-center distance along the axis.  Boundary
    sides and masked neighbors contribute a same-level ghost cell.
    """
    act = grid.active
    out = []
    for axis, (idx, dist, ghosts) in enumerate(_slope_stencil(grid)):
        V = U[np.maximum(idx, 0)]
        for cells, slot, tags in ghosts:
            V[cells, slot] = ghost_average(U[cells], Bc[cells], tags, axis, bc)
        c = (V - U[:, None, :]) * (_SLOT_SIGN[None, :, None] / dist[:, :, None])
        lo = np.minimum(np.minimum(c[:, 0], c[:, 1]), np.minimum(c[:, 2], c[:, 3]))
        hi = np.maximum(np.maximum(c[:, 0], c[:, 1]), np.maximum(c[:, 2], c[:, 3]))
        s = np.where(lo > 0, lo, np.where(hi < 0, hi, 0.0))
        s[~act] = 0.0
        out.append(s)
    return out[0], out[1]


def linear_corners(wbar, wx, wy, dx, dy) -> np.ndarray:
    """Corner values (SW, SE, NW, NE) of the linear piece of w."""
    ox = CORNER_OFFSETS[:, 0] * np.asarray(dx)[..., None]
    oy = CORNER_OFFSETS[:, 1] * np.asarray(dy)[..., None]
    return np.asarray(wbar)[..., None] + np.asarray(wx)[..., None] * ox + np.asarray(wy)[..., None] * oy


def correct_corners(wbar, lin_corners, B_corners, B_center):
    """Replace corner values that fall below the bottom.

    With ``k`` violated corners (1-3), violated corners are set to the bottom
    value and the others to ``B + 4/(4-k) * (wbar - B_center)``; this keeps
    the corner mean equal to ``wbar``.  Returns ``(corners, k)``.
    """
    wbar = np.asarray(wbar, dtype=float)
    lin = np.asarray(lin_corners, dtype=float)
    Bk = np.asarray(B_corners, dtype=float)
    viol = lin < Bk
    k = viol.sum(axis=-1)
    depth = np.asarray(wbar - B_center, dtype=float)
    if ((k == 4) & (depth > DEPTH_ROUNDOFF * np.maximum(1.0, np.abs(wbar)))).any():
        raise ConsistencyError("all four corners below the bottom in a wet cell")
    d = np.maximum(depth, 0.0)
    lifted = Bk + (_SPREAD[k] * d)[..., None]
    out = np.where(viol, Bk, lifted)
    out = np.where((k == 0)[..., None], lin, out)
    return out, k


@dataclass(frozen=True)
class CorrectionRecord:
    kind: str  # "linear" or "bilinear"
    corners: tuple[float, float, float, float]
    case: int


def correct_positivity(wbar, wx, wy, dx, dy, B_corners, B_center) -> CorrectionRecord:
    """Single-cell form of :func:`correct_corners` starting from the linear slopes."""
    lin = linear_corners(wbar, wx, wy, dx, dy)
    out, k = correct_corners(wbar, lin, B_corners, B_center)
    return CorrectionRecord("linear" if int(k) == 0 else "bilinear", tuple(float(v) for v in out), int(k))


def reconstruct(grid: QuadtreeGrid, U: np.ndarray, bathy: BathymetryData, bc: BoundarySpec) -> SlopeSet:
    ux, uy = compute_slopes(grid, U, bathy.center, bc)
    lin = linear_corners(U[:, 0], ux[:, 0], uy[:, 0], grid.dx, grid.dy)
    corners, k = correct_corners(U[:, 0], lin, bathy.corners, bathy.center)
    k = np.where(grid.active, k, 0)
    return SlopeSet(ux, uy, corners, k > 0, k)


def evaluate(U, slopes: SlopeSet, grid: QuadtreeGrid, cells, sx, sy):
    """Reconstructed ``(w, hu, hv)`` inside ``cells`` at local offsets.

    ``sx``, ``sy`` are offsets from the cell center in units of the cell size
    (so edges are at +-1/2).  Corrected cells take w from the bilinear piece.
    """
    ox = sx * grid.dx[cells]
    oy = sy * grid.dy[cells]
    V = U[cells] + slopes.ux[cells] * ox[:, None] + slopes.uy[cells] * oy[:, None]
    fix = slopes.corrected[cells]
    if fix.any():
        V[fix, 0] = bilinear(slopes.corners[cells[fix]], sx[fix] + 0.5, sy[fix] + 0.5)
    return V


def depth_at(w, B, where: str = "point"):
    """``w - B`` with roundoff negatives clamped to zero."""
    h = w - B
    tol = DEPTH_ROUNDOFF * np.maximum(1.0, np.abs(B))
    if (h < -tol).any():
        i = int(np.argmin(h))
        raise PositivityViolation(f"negative reconstructed depth {h.flat[i]:.3e} at {where} {i}")
    return np.maximum(h, 0.0)


def desingularize(h, hu, hv, eps):
    """Regularized velocities and recomputed discharges ``(u, v, hu', hv')``."""
    if not np.all(np.asarray(eps) > 0):
        raise InvalidArgument("desingularization parameter must be positive")
    h = np.asarray(h, dtype=float)
    h4 = h**4
    denom = np.sqrt(h4 + np.maximum(h4, eps))
    u = np.sqrt(2.0) * h * hu / denom
    v = np.sqrt(2.0) * h * hv / denom
    return u, v, h * u, h * v


def desingularization_eps(grid: QuadtreeGrid) -> float:
    return max(float(np.min(grid.dx[grid.active] if grid.active.any() else grid.dx)) ** 4,
               float(np.min(grid.dy[grid.active] if grid.active.any() else grid.dy)) ** 4)
