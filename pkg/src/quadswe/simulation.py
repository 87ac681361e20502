"""Problem definition, initial grid construction and the adaptive time loop."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .adaptivity import RegridReport, build_grid, regrid_and_project, select_seed_cells
from .bathymetry import BathymetryData, BottomField, BottomLattice, build_bathymetry
from .boundary import BoundarySpec
from .errors import InvalidArgument, QuadsweError
from .faces import build_faces
from .grid import QuadtreeGrid, Rect, check_max_level, check_root, lattice_cells_from_points
from .integrator import Discretization, check_positivity, diagnostics_line, ssp_rk3_step
from .reconstruction import reconstruct

InitFn = Callable[[np.ndarray, np.ndarray, np.ndarray], tuple]


@dataclass
class Problem:
    """A complete run description.

    ``init(x, y, B)`` returns ``(w, hu, hv)`` point values at cell centers,
    where ``B`` is the cell's bottom value.  ``mask(x, y)`` (optional) is
    True where the point lies in the flow domain.
    """

    name: str
    root: Rect
    m: int
    bottom: BottomField
    init: InitFn
    bc: BoundarySpec
    t_end: float
    c_seed: float
    g: float = 1.0
    sigma: float = 0.9
    source_mode: str = "well-balanced"
    init_level: int = 5
    closed_seeding: bool = False
    regrid_every: int = 1
    mask: Optional[Callable] = None
    with_mask_seeds: bool = True
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.root = check_root(self.root)
        self.m = check_max_level(self.m)
        for name in ("t_end", "c_seed", "g"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidArgument(f"{name} must be a positive number, got {v!r}")
        if not 0 < self.sigma <= 1:
            raise InvalidArgument("sigma must lie in (0, 1]")
        if int(self.regrid_every) != self.regrid_every or self.regrid_every < 0:
            raise InvalidArgument("regrid_every must be a nonnegative integer")
        if not 1 <= self.init_level <= self.m:
            self.init_level = min(max(self.init_level, 1), self.m)

    def with_(self, **kw) -> "Problem":
        return replace(self, **kw)


# ---------------------------------------------------------------- initial grid


# interior sample offsets of the initial-seeding stencil, in cell sizes
_SAMPLE_OFFSET = 0.375


def _sampled_gradient_hits(f: np.ndarray, hx: float, hy: float, c: float) -> np.ndarray:
    """Cells whose 3x3 samples ``f[:, :, 3, 3]`` change faster than ``c`` along x or y."""
    gx = np.abs(np.diff(f, axis=2)).max(axis=(2, 3)) / (_SAMPLE_OFFSET * hx)
    gy = np.abs(np.diff(f, axis=3)).max(axis=(2, 3)) / (_SAMPLE_OFFSET * hy)
    return (gx >= c) | (gy >= c)


def initial_seed_points(problem: Problem) -> np.ndarray:
    """Centers of level-l cells in which sampled B or initial w varies faster than C_seed.

    Each level-l cell is sampled on a 3x3 stencil at offsets
    ``0, +-_SAMPLE_OFFSET`` cell sizes from its center; differences between
    adjacent samples divided by their spacing are the gradient estimate.
    """
    root, l = problem.root, problem.init_level
    n = 1 << l
    hx, hy = root.width / n, root.height / n
    xs = root.x0 + (np.arange(n) + 0.5) * hx
    ys = root.y0 + (np.arange(n) + 0.5) * hy
    XC, YC = np.meshgrid(xs, ys, indexing="ij")
    off = np.array([-_SAMPLE_OFFSET, 0.0, _SAMPLE_OFFSET])
    X = XC[:, :, None, None] + hx * off[None, None, :, None]
    Y = YC[:, :, None, None] + hy * off[None, None, None, :]
    X, Y = np.broadcast_arrays(X, Y)
    B = np.asarray(problem.bottom(X, Y), dtype=float)
    w = np.asarray(problem.init(X, Y, B)[0], dtype=float)
    hit = _sampled_gradient_hits(B, hx, hy, problem.c_seed) | _sampled_gradient_hits(w, hx, hy, problem.c_seed)
    return np.column_stack([XC[hit], YC[hit]])


def mask_boundary_cells(problem: Problem):
    """Finest-lattice cells that neighbor a cell of different mask status."""
    if problem.mask is None or not problem.with_mask_seeds:
        return None
    n = 1 << problem.m
    root = problem.root
    xs = root.x0 + (np.arange(n) + 0.5) * (root.width / n)
    ys = root.y0 + (np.arange(n) + 0.5) * (root.height / n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    a = np.asarray(problem.mask(X, Y), dtype=bool)
    edge = np.zeros_like(a)
    dx = a[1:] != a[:-1]
    dy = a[:, 1:] != a[:, :-1]
    edge[1:] |= dx
    edge[:-1] |= dx
    edge[:, 1:] |= dy
    edge[:, :-1] |= dy
    I, J = np.nonzero(edge)
    return I.astype(np.int64), J.astype(np.int64)


def initial_state(problem: Problem, grid: QuadtreeGrid, bathy: BathymetryData) -> np.ndarray:
    w, hu, hv = problem.init(grid.xc, grid.yc, bathy.center)
    U = np.column_stack([np.broadcast_to(np.asarray(v, dtype=float), grid.xc.shape) for v in (w, hu, hv)])
    U = U.copy()
    low = U[:, 0] < bathy.center
    U[low, 0] = bathy.center[low]
    if (~grid.active).any():
        off = ~grid.active
        U[off] = 0.0
        U[off, 0] = bathy.center[off]
    return U


# ---------------------------------------------------------------- the run loop


@dataclass
class RunResult:
    problem: Problem
    disc: Discretization
    U: np.ndarray
    t: float
    steps: int
    min_h: float
    reports: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    initial_cells: int = 0
    wall_time: float = 0.0

    @property
    def grid(self) -> QuadtreeGrid:
        return self.disc.grid

    @property
    def bathy(self) -> BathymetryData:
        return self.disc.bathy


class Simulation:
    """Adaptive solver state for one :class:`Problem`."""

    def __init__(self, problem: Problem, grid: QuadtreeGrid | None = None):
        self.problem = problem
        self.lattice = BottomLattice(problem.bottom, problem.root, problem.m)
        self.extra = mask_boundary_cells(problem)
        if grid is None:
            grid = self.initial_grid()
        elif problem.mask is not None:
            grid = grid.with_active(np.asarray(problem.mask(grid.xc, grid.yc), dtype=bool))
        self.disc = self._discretize(grid)
        self.U = initial_state(problem, grid, self.disc.bathy)
        self.t = 0.0
        self.steps = 0
        self.min_h = float(np.min(self.disc.depth(self.U)[grid.active])) if grid.active.any() else 0.0
        self.reports: list[RegridReport] = []
        self.diagnostics: list[str] = []
        self.initial_cells = grid.n_cells

    def initial_grid(self) -> QuadtreeGrid:
        p = self.problem
        X, Y = lattice_cells_from_points(p.root, initial_seed_points(p), p.m, p.closed_seeding)
        if self.extra is not None:
            X = np.concatenate([X, self.extra[0]])
            Y = np.concatenate([Y, self.extra[1]])
        return build_grid(p.root, p.m, X, Y, p.mask)

    def _discretize(self, grid) -> Discretization:
        p = self.problem
        return Discretization.build(grid, self.lattice, p.bc, p.g, p.source_mode)

    def make_bathy(self, grid) -> BathymetryData:
        return build_bathymetry(grid, self.lattice)

    def step(self, cap: float = np.inf):
        """One RK step (and a regrid if due); returns the step size."""
        p = self.problem
        U, info = ssp_rk3_step(self.disc, self.U, sigma=p.sigma, cap=cap)
        self.U = U
        self.t += info.dt
        self.steps += 1
        self.min_h = min(self.min_h, check_positivity(self.disc, U, f"step {self.steps} (t={self.t:.6g})"))
        self.diagnostics.append(diagnostics_line(self.steps, self.t, info.dt, self.disc, U))
        if p.regrid_every and self.steps % p.regrid_every == 0:
            self.regrid()
        return info.dt

    def regrid(self) -> RegridReport:
        p = self.problem
        disc = self.disc
        slopes = reconstruct(disc.grid, self.U, disc.bathy, disc.bc)
        seeds = select_seed_cells(disc.grid, slopes, p.c_seed)
        grid, bathy, U, report = regrid_and_project(
            disc.grid, self.U, slopes, disc.bathy, seeds, self.make_bathy,
            closed=p.closed_seeding, extra_cells=self.extra, mask_fn=p.mask,
        )
        self.disc = Discretization(grid, build_faces(grid, check=False), bathy, p.bc, p.g, p.source_mode)
        self.U = U
        self.reports.append(report)
        self.diagnostics.append(report.to_line())
        a = grid.active
        if a.any():
            self.min_h = min(self.min_h, float(np.min(self.disc.depth(U)[a])))
        return report

    def run(self, t_end: float | None = None, max_steps: int | None = None,
            callback: Callable[["Simulation"], None] | None = None) -> RunResult:
        t_end = self.problem.t_end if t_end is None else t_end
        t0 = time.perf_counter()
        while self.t < t_end * (1.0 - 1e-14):
            if max_steps is not None and self.steps >= max_steps:
                break
            try:
                self.step(cap=t_end - self.t)
            except QuadsweError as exc:
                exc.args = (f"{exc.args[0] if exc.args else exc} [step {self.steps + 1}, t={self.t:.6g}]",)
                raise
            if callback is not None:
                callback(self)
        return RunResult(self.problem, self.disc, self.U, self.t, self.steps, self.min_h, self.reports,
                         self.diagnostics, self.initial_cells, time.perf_counter() - t0)


def run_problem(problem: Problem, **kw) -> RunResult:
    return Simulation(problem).run(**kw)
