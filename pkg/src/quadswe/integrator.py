"""Semi-discrete right-hand side on a quadtree, CFL control and explicit time stepping."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bathymetry import BathymetryData, BottomField, BottomLattice, build_bathymetry
from .boundary import BoundarySpec, ghost_point
from .errors import InvalidArgument, NumericalError, PositivityViolation
from .faces import FaceSet, SubFaces, build_faces
from .flux import SOURCE_MODES, face_flux, source_naive, source_wb
from .grid import QuadtreeGrid, Side
from .reconstruction import SlopeSet, depth_at, desingularization_eps, evaluate, reconstruct

POSITIVITY_TOL = 1e-13
QUIESCENT_SPEED = 1e-14
RESTART_SHRINK = 0.9


@dataclass
class Discretization:
    """Everything that is fixed while the grid is frozen.

    Build with :meth:`build`; masked (inactive) leaves take no part in the
    update and their faces with active cells are walls.
    """

    grid: QuadtreeGrid
    faces: FaceSet
    bathy: BathymetryData
    bc: BoundarySpec
    g: float = 1.0
    source_mode: str = "well-balanced"
    eps: float = field(default=0.0)

    def __post_init__(self):
        if self.source_mode not in SOURCE_MODES:
            raise InvalidArgument(f"unknown source mode {self.source_mode!r}")
        if not self.g > 0:
            raise InvalidArgument("g must be positive")
        if not self.eps > 0:
            self.eps = desingularization_eps(self.grid)
        self._B_pt = []
        for sf in (self.faces.x, self.faces.y):
            v = self.bathy.vertex
            self._B_pt.append(0.5 * (v[sf.Ia, sf.Ja] + v[sf.Ib, sf.Jb]))

    @classmethod
    def build(cls, grid, bottom: BottomField | BottomLattice, bc: BoundarySpec, g=1.0, source_mode="well-balanced"):
        return cls(grid, build_faces(grid), build_bathymetry(grid, bottom), bc, g, source_mode)

    @property
    def active(self) -> np.ndarray:
        return self.grid.active

    def face_bottom(self, axis: int) -> np.ndarray:
        """Bottom value at every sub-face midpoint of the given axis."""
        return self._B_pt[axis]

    def depth(self, U) -> np.ndarray:
        return U[:, 0] - self.bathy.center

    def water_volume(self, U) -> float:
        a = self.active
        return float(np.sum(((U[:, 0] - self.bathy.center) * self.grid.area)[a]))

    def surface_integral(self, U) -> float:
        a = self.active
        return float(np.sum((U[:, 0] * self.grid.area)[a]))


@dataclass
class RhsResult:
    rhs: np.ndarray
    slopes: SlopeSet
    dt_bound: float  # CFL bound for this state (inf if quiescent)


def _side_point_values(disc: Discretization, U, slopes: SlopeSet, sf: SubFaces):
    """Point values on both sides of every sub-face of one axis, ghosts filled in."""
    axis = sf.axis
    grid = disc.grid
    Bp = disc.face_bottom(axis)
    n = sf.size
    V_lo = np.empty((n, 3))
    V_hi = np.empty((n, 3))
    has_lo = sf.lo >= 0
    has_hi = sf.hi >= 0
    lo = sf.lo[has_lo]
    hi = sf.hi[has_hi]
    if axis == 0:
        V_lo[has_lo] = evaluate(U, slopes, grid, lo, np.full(lo.size, 0.5), sf.tan_lo[has_lo])
        V_hi[has_hi] = evaluate(U, slopes, grid, hi, np.full(hi.size, -0.5), sf.tan_hi[has_hi])
    else:
        V_lo[has_lo] = evaluate(U, slopes, grid, lo, sf.tan_lo[has_lo], np.full(lo.size, 0.5))
        V_hi[has_hi] = evaluate(U, slopes, grid, hi, sf.tan_hi[has_hi], np.full(hi.size, -0.5))
    g_lo = ~has_lo
    if g_lo.any():
        V_lo[g_lo] = ghost_point(V_hi[g_lo], Bp[g_lo], sf.boundary[g_lo], axis, disc.bc)
    g_hi = ~has_hi
    if g_hi.any():
        V_hi[g_hi] = ghost_point(V_lo[g_hi], Bp[g_hi], sf.boundary[g_hi], axis, disc.bc)
    depth_at(V_lo[:, 0], Bp, f"{'xy'[axis]}-face (low side)")
    depth_at(V_hi[:, 0], Bp, f"{'xy'[axis]}-face (high side)")
    return V_lo, V_hi, Bp


def assemble_rhs(disc: Discretization, U: np.ndarray) -> RhsResult:
    """Flux divergence plus source average on every active leaf."""
    grid = disc.grid
    N = grid.n_cells
    slopes = reconstruct(grid, U, disc.bathy, disc.bc)
    flux_sum = np.zeros((N, 4, 3))
    hsq_sum = np.zeros((N, 4))
    bound = np.inf
    for sf, (s_lo, s_hi) in ((disc.faces.x, (Side.RIGHT, Side.LEFT)), (disc.faces.y, (Side.TOP, Side.BOTTOM))):
        axis = sf.axis
        V_lo, V_hi, Bp = _side_point_values(disc, U, slopes, sf)
        H, ap, am, h_lo, h_hi = face_flux(V_lo, V_hi, Bp, disc.g, disc.eps, axis)
        speed = np.maximum(ap, -am)
        # s_lo is the side of the low cell this sub-face lies on (its right/top)
        for cells, side, frac, h in ((sf.lo, s_lo, sf.frac_lo, h_lo), (sf.hi, s_hi, sf.frac_hi, h_hi)):
            has = cells >= 0
            c = cells[has]
            f = frac[has]
            for q in range(3):
                flux_sum[:, side, q] += np.bincount(c, weights=f * H[has, q], minlength=N)
            hsq_sum[:, side] += np.bincount(c, weights=f * h[has] ** 2, minlength=N)
            # min over cells of size / max incident speed == min over incidences
            live = grid.active[c] & (speed[has] > QUIESCENT_SPEED)
            if live.any():
                size = (grid.dx if axis == 0 else grid.dy)[c[live]]
                bound = min(bound, float(np.min(size / speed[has][live])))

    dx, dy = grid.dx, grid.dy
    rhs = -(flux_sum[:, Side.RIGHT] - flux_sum[:, Side.LEFT]) / dx[:, None]
    rhs -= (flux_sum[:, Side.TOP] - flux_sum[:, Side.BOTTOM]) / dy[:, None]
    depth = U[:, 0] - disc.bathy.center
    if disc.source_mode == "well-balanced":
        S = source_wb(
            hsq_sum[:, Side.RIGHT], hsq_sum[:, Side.LEFT], hsq_sum[:, Side.TOP], hsq_sum[:, Side.BOTTOM],
            slopes.ux[:, 0], slopes.uy[:, 0], depth, dx, dy, disc.g,
        )
    else:
        S = source_naive(disc.bathy.corners, depth, dx, dy, disc.g, as_printed=disc.source_mode == "naive-as-printed")
    rhs += S
    rhs[~grid.active] = 0.0
    if not np.isfinite(rhs).all():
        i = int(np.nonzero(~np.isfinite(rhs).all(axis=1))[0][0])
        raise NumericalError(f"non-finite right-hand side in cell {tuple(grid.cell(i))}")
    return RhsResult(rhs, slopes, 0.25 * bound)


def max_stable_dt(disc: Discretization, U, sigma: float = 0.9, cap: float = np.inf, rhs: RhsResult | None = None) -> float:
    """``sigma/4 * min(dx/a, dy/b)`` over active cells, or ``cap``."""
    if not 0 < sigma <= 1:
        raise InvalidArgument("CFL safety factor must lie in (0, 1]")
    r = assemble_rhs(disc, U) if rhs is None else rhs
    return float(min(sigma * r.dt_bound, cap))


def check_positivity(disc: Discretization, U, where: str = "step") -> float:
    """Minimum active-cell depth; raises below ``-POSITIVITY_TOL``."""
    h = disc.depth(U)[disc.active]
    if h.size == 0:
        return 0.0
    if not np.isfinite(U[disc.active]).all():
        raise NumericalError(f"non-finite state after {where}")
    hmin = float(h.min())
    if hmin < -POSITIVITY_TOL:
        i = int(np.nonzero(disc.active)[0][np.argmin(h)])
        raise PositivityViolation(f"negative depth {hmin:.3e} in cell {tuple(disc.grid.cell(i))} after {where}")
    return hmin


def euler_step(disc: Discretization, U, rhs, dt: float, check: bool = True):
    """``U + dt * rhs`` with the depth positivity assertion."""
    out = U + dt * (rhs.rhs if isinstance(rhs, RhsResult) else rhs)
    if check:
        check_positivity(disc, out, "Euler step")
    return out


def ssp_rk3(U, dt: float, rhs_fn):
    """Shu-Osher three-stage SSP-RK step for ``U' = rhs_fn(U)``."""
    U1 = U + dt * rhs_fn(U)
    U2 = 0.75 * U + 0.25 * (U1 + dt * rhs_fn(U1))
    return U / 3.0 + (2.0 / 3.0) * (U2 + dt * rhs_fn(U2))


@dataclass
class StepInfo:
    dt: float
    restarts: int
    slopes_final: SlopeSet | None = None


def ssp_rk3_step(disc: Discretization, U, dt: float | None = None, sigma: float = 0.9, cap: float = np.inf,
                 rhs0: RhsResult | None = None, max_restarts: int = 30):
    """One three-stage SSP-RK step in Shu-Osher form on a frozen grid.

    With ``dt=None`` the step size is ``sigma`` times the CFL bound of ``U``.
    If a later stage state violates the bound at that step size, the step
    is restarted from ``U`` with ``sigma`` times the stage's bound (and at
    least a factor ``RESTART_SHRINK`` smaller).  Returns ``(U_new, StepInfo)``.
    """
    r0 = assemble_rhs(disc, U) if rhs0 is None else rhs0
    fixed = dt is not None
    if dt is None:
        dt = min(sigma * r0.dt_bound, cap)
    if not np.isfinite(dt) or dt <= 0:
        raise NumericalError(f"invalid time step {dt!r}")
    for attempt in range(max_restarts + 1):
        U1 = euler_step(disc, U, r0, dt)
        r1 = assemble_rhs(disc, U1)
        if not fixed and dt > r1.dt_bound:
            dt = min(sigma * r1.dt_bound, RESTART_SHRINK * dt)
            continue
        U2 = 0.75 * U + 0.25 * euler_step(disc, U1, r1, dt)
        check_positivity(disc, U2, "RK stage 2")
        r2 = assemble_rhs(disc, U2)
        if not fixed and dt > r2.dt_bound:
            dt = min(sigma * r2.dt_bound, RESTART_SHRINK * dt)
            continue
        U3 = U / 3.0 + (2.0 / 3.0) * euler_step(disc, U2, r2, dt)
        check_positivity(disc, U3, "RK stage 3")
        return U3, StepInfo(dt, attempt)
    raise NumericalError("time step restarted too often")


def diagnostics_line(step: int, t: float, dt: float, disc: Discretization, U) -> str:
    a = disc.active
    h = disc.depth(U)[a]
    return (f"{step} {t:.10g} {dt:.6e} {float(h.min()) if h.size else 0.0:.6e} "
            f"{disc.water_volume(U):.15e} {float(U[a, 0].max()) if h.size else 0.0:.15e} {int(a.sum())}")
