"""Cell-based quadtree meshes over a rectangle.

Leaves are identified by ``(level, ix, iy)`` with ``0 <= ix, iy < 2**level``.
The root rectangle itself is level 0 and is always split, so every leaf has
level >= 1.  Internally all geometry is expressed on the *finest lattice*
(level ``m``): a leaf of level ``l`` covers ``span = 2**(m - l)`` lattice
cells in each direction starting at ``(X0, Y0) = (ix * span, iy * span)``.

Leaves are kept sorted by the Morton (Z-order) key of ``(X0, Y0)``.
"""
from __future__ import annotations

import enum
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import CapacityError, InvalidArgument, PreconditionViolation

MAX_LEVEL = 12


class Side(enum.IntEnum):
    LEFT = 0
    RIGHT = 1
    BOTTOM = 2
    TOP = 3


# Boundary tag for faces that separate an active cell from a masked one.
MASK_WALL = 4


class Rect(NamedTuple):
    x0: float
    y0: float
    width: float
    height: float


class CellRef(NamedTuple):
    level: int
    ix: int
    iy: int

    def parent(self) -> "CellRef":
        return CellRef(self.level - 1, self.ix >> 1, self.iy >> 1)

    def children(self) -> list["CellRef"]:
        l, i, j = self.level + 1, 2 * self.ix, 2 * self.iy
        return [CellRef(l, i, j), CellRef(l, i + 1, j), CellRef(l, i, j + 1), CellRef(l, i + 1, j + 1)]


def _part1by1(v):
    v = np.asarray(v, dtype=np.int64) & 0xFFFF
    v = (v | (v << 8)) & 0x00FF00FF
    v = (v | (v << 4)) & 0x0F0F0F0F
    v = (v | (v << 2)) & 0x33333333
    v = (v | (v << 1)) & 0x55555555
    return v


def morton_key(X, Y):
    """Interleave the bits of lattice coordinates (x in the even bits)."""
    return _part1by1(X) | (_part1by1(Y) << 1)


def check_root(root) -> Rect:
    root = Rect(*map(float, root))
    if not (np.isfinite(root).all() and root.width > 0 and root.height > 0):
        raise InvalidArgument(f"degenerate root rectangle {tuple(root)}")
    return root


def check_max_level(m) -> int:
    if int(m) != m or not 1 <= m <= MAX_LEVEL:
        raise InvalidArgument(f"max level must be an integer in [1, {MAX_LEVEL}], got {m!r}")
    return int(m)


class QuadtreeGrid:
    """Leaf set of a quadtree over ``root`` with maximum level ``max_level``.

    Instances are treated as immutable; every mutating operation returns a
    new grid.  ``active`` flags leaves that take part in the flow (masked
    leaves are walls).
    """

    def __init__(self, root, max_level, level, ix, iy, active=None):
        self.root = check_root(root)
        self.max_level = m = check_max_level(max_level)
        level = np.asarray(level, dtype=np.int64).ravel()
        ix = np.asarray(ix, dtype=np.int64).ravel()
        iy = np.asarray(iy, dtype=np.int64).ravel()
        if not (level.shape == ix.shape == iy.shape):
            raise InvalidArgument("level, ix, iy must have equal length")
        if level.size and (level.min() < 1 or level.max() > m):
            raise InvalidArgument("leaf levels must lie in [1, max_level]")
        if ix.size and ((ix < 0).any() or (iy < 0).any() or (ix >> level).any() or (iy >> level).any()):
            raise InvalidArgument("leaf indices out of range for their level")
        if active is None:
            active = np.ones(level.size, dtype=bool)
        active = np.asarray(active, dtype=bool).ravel()
        if active.shape != level.shape:
            raise InvalidArgument("active mask has the wrong length")
        span = np.left_shift(1, m - level)
        key = morton_key(ix * span, iy * span)
        order = np.argsort(key, kind="stable")
        self.level = level[order]
        self.ix = ix[order]
        self.iy = iy[order]
        self.active = active[order]
        self.key = key[order]
        for a in (self.level, self.ix, self.iy, self.active, self.key):
            a.flags.writeable = False

    # ------------------------------------------------------------------ basics
    @property
    def n_cells(self) -> int:
        return int(self.level.size)

    def __len__(self) -> int:
        return self.n_cells

    def __repr__(self) -> str:
        return f"QuadtreeGrid(root={tuple(self.root)}, m={self.max_level}, cells={self.n_cells})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuadtreeGrid):
            return NotImplemented
        return (
            self.root == other.root
            and self.max_level == other.max_level
            and np.array_equal(self.level, other.level)
            and np.array_equal(self.ix, other.ix)
            and np.array_equal(self.iy, other.iy)
        )

    __hash__ = None

    def cells(self) -> list[CellRef]:
        return [CellRef(int(l), int(i), int(j)) for l, i, j in zip(self.level, self.ix, self.iy)]

    def cell(self, index: int) -> CellRef:
        return CellRef(int(self.level[index]), int(self.ix[index]), int(self.iy[index]))

    @cached_property
    def _index(self) -> dict:
        return {c: k for k, c in enumerate(self.cells())}

    def index_of(self, cell: CellRef) -> int:
        try:
            return self._index[CellRef(*cell)]
        except KeyError:
            raise InvalidArgument(f"{tuple(cell)} is not a leaf of this grid") from None

    def is_leaf(self, cell: CellRef) -> bool:
        return CellRef(*cell) in self._index

    # ---------------------------------------------------------------- geometry
    @cached_property
    def span(self) -> np.ndarray:
        return np.left_shift(1, self.max_level - self.level)

    @cached_property
    def X0(self) -> np.ndarray:
        return self.ix * self.span

    @cached_property
    def Y0(self) -> np.ndarray:
        return self.iy * self.span

    @cached_property
    def dx(self) -> np.ndarray:
        return self.root.width / np.left_shift(1, self.level).astype(float)

    @cached_property
    def dy(self) -> np.ndarray:
        return self.root.height / np.left_shift(1, self.level).astype(float)

    @cached_property
    def xc(self) -> np.ndarray:
        return self.root.x0 + (self.ix + 0.5) * self.dx

    @cached_property
    def yc(self) -> np.ndarray:
        return self.root.y0 + (self.iy + 0.5) * self.dy

    @cached_property
    def area(self) -> np.ndarray:
        return self.dx * self.dy

    @property
    def lattice_size(self) -> int:
        return 1 << self.max_level

    @property
    def dx_min(self) -> float:
        return self.root.width / self.lattice_size

    @property
    def dy_min(self) -> float:
        return self.root.height / self.lattice_size

    def lattice_x(self, I):
        return self.root.x0 + np.asarray(I) * self.dx_min

    def lattice_y(self, J):
        return self.root.y0 + np.asarray(J) * self.dy_min

    @cached_property
    def owner(self) -> np.ndarray:
        """Leaf index owning each finest-lattice cell, indexed ``[X, Y]``.

        Raises PreconditionViolation if leaves overlap or leave holes.
        """
        n = self.lattice_size
        owner = np.full((n, n), -1, dtype=np.int64)
        count = np.zeros(n * n, dtype=np.int64)
        for l in np.unique(self.level):
            sel = np.nonzero(self.level == l)[0]
            s = 1 << (self.max_level - int(l))
            off = np.arange(s)
            I = self.X0[sel][:, None, None] + off[None, :, None]
            J = self.Y0[sel][:, None, None] + off[None, None, :]
            owner[I, J] = sel[:, None, None]
            count += np.bincount((I * n + J).ravel(), minlength=n * n)
        if (count != 1).any():
            raise PreconditionViolation("leaves do not tile the root rectangle")
        owner.flags.writeable = False
        return owner

    def check_tiling(self) -> None:
        self.owner  # noqa: B018 - raises on overlap or hole

    def locate(self, x, y):
        """Index of the leaf containing each point (half-open cells)."""
        X = _lattice_index(x, self.root.x0, self.root.width, self.lattice_size)
        Y = _lattice_index(y, self.root.y0, self.root.height, self.lattice_size)
        return self.owner[X, Y]

    def with_active(self, active) -> "QuadtreeGrid":
        g = QuadtreeGrid.__new__(QuadtreeGrid)
        g.__dict__.update({k: v for k, v in self.__dict__.items() if k != "active"})
        a = np.asarray(active, dtype=bool).ravel().copy()
        if a.shape != self.level.shape:
            raise InvalidArgument("active mask has the wrong length")
        a.flags.writeable = False
        g.active = a
        return g

    # --------------------------------------------------------------- neighbors
    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """``(N, 4, 2)`` neighbor indices per side, ``-1`` where absent.

        Valid only for balanced grids: a side has either one neighbor (same or
        coarser level) in slot 0, or two finer neighbors ordered lower/upper
        (x sides) or left/right (y sides).  Domain boundaries give ``-1, -1``.
        """
        owner, n = self.owner, self.lattice_size
        X0, Y0, s = self.X0, self.Y0, self.span
        nb = np.full((self.n_cells, 4, 2), -1, dtype=np.int64)
        probes = {
            Side.LEFT: (X0 - 1, Y0, X0 - 1, Y0 + s - 1, X0 > 0),
            Side.RIGHT: (X0 + s, Y0, X0 + s, Y0 + s - 1, X0 + s < n),
            Side.BOTTOM: (X0, Y0 - 1, X0 + s - 1, Y0 - 1, Y0 > 0),
            Side.TOP: (X0, Y0 + s, X0 + s - 1, Y0 + s, Y0 + s < n),
        }
        for side, (ia, ja, ib, jb, ok) in probes.items():
            a = np.where(ok, owner[np.clip(ia, 0, n - 1), np.clip(ja, 0, n - 1)], -1)
            b = np.where(ok, owner[np.clip(ib, 0, n - 1), np.clip(jb, 0, n - 1)], -1)
            nb[:, side, 0] = a
            nb[:, side, 1] = np.where(a != b, b, -1)
        nb.flags.writeable = False
        return nb


def _lattice_index(v, lo, length, n):
    f = (np.asarray(v, dtype=float) - lo) / length * n
    return np.clip(np.floor(f).astype(np.int64), 0, n - 1)


# ---------------------------------------------------------------------------
# internal node sets
#
# A tree is described by the set of split (internal) cells per level; keys are
# ``ix * 2**level + iy``.  Level 0 (the root) is always split.


def _encode(ix, iy, level):
    return np.asarray(ix, dtype=np.int64) * (1 << level) + np.asarray(iy, dtype=np.int64)


def _decode(keys, level):
    return np.divmod(np.asarray(keys, dtype=np.int64), 1 << level)


def _internal_from_leaves(level, ix, iy, m) -> list[np.ndarray]:
    internal = [np.zeros(1, dtype=np.int64)]
    for k in range(1, m):
        deeper = level > k
        shift = level[deeper] - k
        internal.append(np.unique(_encode(ix[deeper] >> shift, iy[deeper] >> shift, k)))
    return internal


def _internal_from_finest(X, Y, m) -> list[np.ndarray]:
    X = np.asarray(X, dtype=np.int64)
    Y = np.asarray(Y, dtype=np.int64)
    internal = [np.zeros(1, dtype=np.int64)]
    for k in range(1, m):
        internal.append(np.unique(_encode(X >> (m - k), Y >> (m - k), k)))
    return internal


_CHILD_DX = np.array([0, 1, 0, 1])
_CHILD_DY = np.array([0, 0, 1, 1])


def _leaves_from_internal(internal, m):
    levels, ixs, iys = [], [], []
    for l in range(1, m + 1):
        pix, piy = _decode(internal[l - 1], l - 1)
        cix = (2 * pix[:, None] + _CHILD_DX).ravel()
        ciy = (2 * piy[:, None] + _CHILD_DY).ravel()
        if l < m:
            keep = ~np.isin(_encode(cix, ciy, l), internal[l], assume_unique=False)
            cix, ciy = cix[keep], ciy[keep]
        levels.append(np.full(cix.size, l, dtype=np.int64))
        ixs.append(cix)
        iys.append(ciy)
    return np.concatenate(levels), np.concatenate(ixs), np.concatenate(iys)


_OFFS = np.array([(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)], dtype=np.int64)


def _balance_internal(internal, m) -> list[np.ndarray]:
    """Close the split sets under the edge+diagonal 2:1 rule.

    A split cell at level k forces every level-(k-1) cell touching it to be
    split as well.  Sweeping from fine to coarse reaches the fixpoint in one
    pass because additions at level k-1 only constrain coarser levels.
    """
    internal = list(internal)
    for k in range(m - 1, 1, -1):
        if internal[k].size == 0:
            continue
        ix, iy = _decode(internal[k], k)
        nx = ix[:, None] + _OFFS[:, 0]
        ny = iy[:, None] + _OFFS[:, 1]
        ok = (nx >= 0) & (ny >= 0) & (nx < (1 << k)) & (ny < (1 << k))
        forced = _encode(nx[ok] >> 1, ny[ok] >> 1, k - 1)
        internal[k - 1] = np.union1d(internal[k - 1], forced)
    return internal


# ---------------------------------------------------------------------------
# public operations


def lattice_cells_from_points(root, seeds, m, closed=False):
    """Finest-lattice cells ``(X, Y)`` containing the given points.

    Cells are half-open ``[lo, hi)``; points on the far domain edge belong to
    the last cell.  With ``closed=True`` a point lying exactly on a lattice
    line is assigned to the cells on both sides of it.
    """
    root = check_root(root)
    n = 1 << m
    pts = np.asarray(seeds, dtype=float).reshape(-1, 2)
    fx = (pts[:, 0] - root.x0) / root.width * n
    fy = (pts[:, 1] - root.y0) / root.height * n
    inside = np.isfinite(fx) & np.isfinite(fy) & (fx >= 0) & (fx <= n) & (fy >= 0) & (fy <= n)
    fx, fy = fx[inside], fy[inside]
    X = np.clip(np.floor(fx).astype(np.int64), 0, n - 1)
    Y = np.clip(np.floor(fy).astype(np.int64), 0, n - 1)
    if not closed:
        return X, Y
    onx = (fx == np.floor(fx)) & (fx > 0) & (fx < n)
    ony = (fy == np.floor(fy)) & (fy > 0) & (fy < n)
    Xs = [X, X[onx] - 1, X[ony], X[onx & ony] - 1]
    Ys = [Y, Y[onx], Y[ony] - 1, Y[onx & ony] - 1]
    return np.concatenate(Xs), np.concatenate(Ys)


def grid_from_lattice_cells(root, m, X, Y) -> QuadtreeGrid:
    """Unbalanced quadtree whose seeded finest-lattice cells are all at level m."""
    m = check_max_level(m)
    internal = _internal_from_finest(X, Y, m)
    return QuadtreeGrid(root, m, *_leaves_from_internal(internal, m))


def generate_from_seeds(root, seeds: Iterable, m: int, closed: bool = False) -> QuadtreeGrid:
    """Recursively split every cell containing a seed until level ``m``.

    The first split of the root always happens.  Seeds outside the root are
    ignored.  The result is not regularized.
    """
    root = check_root(root)
    m = check_max_level(m)
    X, Y = lattice_cells_from_points(root, list(seeds) if not isinstance(seeds, np.ndarray) else seeds, m, closed)
    return grid_from_lattice_cells(root, m, X, Y)


def uniform_grid(root, level: int, max_level: int | None = None) -> QuadtreeGrid:
    """All ``4**level`` cells of one level."""
    m = check_max_level(level if max_level is None else max_level)
    if not 1 <= level <= m:
        raise InvalidArgument("uniform level must lie in [1, max_level]")
    n = 1 << level
    ix, iy = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return QuadtreeGrid(root, m, np.full(n * n, level), ix.ravel(), iy.ravel())


def regularize(grid: QuadtreeGrid) -> QuadtreeGrid:
    """Minimal refinement of ``grid`` satisfying edge and diagonal 2:1 balance.

    Never coarsens; idempotent.  The active mask is not carried over.
    """
    m = grid.max_level
    internal = _internal_from_leaves(grid.level, grid.ix, grid.iy, m)
    internal = _balance_internal(internal, m)
    return QuadtreeGrid(grid.root, m, *_leaves_from_internal(internal, m))


def is_balanced(grid: QuadtreeGrid) -> bool:
    m = grid.max_level
    internal = _internal_from_leaves(grid.level, grid.ix, grid.iy, m)
    closed = _balance_internal(internal, m)
    return all(a.size == b.size for a, b in zip(internal, closed))


def refine_cell(grid: QuadtreeGrid, cell: CellRef) -> QuadtreeGrid:
    """Replace leaf ``cell`` by its four children."""
    cell = CellRef(*cell)
    k = grid.index_of(cell)
    if cell.level >= grid.max_level:
        raise CapacityError(f"cannot refine {tuple(cell)} beyond level {grid.max_level}")
    keep = np.arange(grid.n_cells) != k
    kids = cell.children()
    return QuadtreeGrid(
        grid.root,
        grid.max_level,
        np.concatenate([grid.level[keep], [c.level for c in kids]]),
        np.concatenate([grid.ix[keep], [c.ix for c in kids]]),
        np.concatenate([grid.iy[keep], [c.iy for c in kids]]),
        np.concatenate([grid.active[keep], np.repeat(grid.active[k], 4)]),
    )


def coarsen_siblings(grid: QuadtreeGrid, parent: CellRef) -> QuadtreeGrid:
    """Replace the four leaf children of ``parent`` by ``parent``."""
    parent = CellRef(*parent)
    if parent.level < 1:
        raise InvalidArgument("the root is never a leaf")
    try:
        ks = [grid.index_of(c) for c in parent.children()]
    except InvalidArgument:
        raise InvalidArgument(f"children of {tuple(parent)} are not all leaves") from None
    keep = np.ones(grid.n_cells, dtype=bool)
    keep[ks] = False
    return QuadtreeGrid(
        grid.root,
        grid.max_level,
        np.concatenate([grid.level[keep], [parent.level]]),
        np.concatenate([grid.ix[keep], [parent.ix]]),
        np.concatenate([grid.iy[keep], [parent.iy]]),
        np.concatenate([grid.active[keep], [grid.active[ks].any()]]),
    )


def neighbors(grid: QuadtreeGrid, cell: CellRef, side) -> list[CellRef]:
    """Leaves sharing part of the given side of ``cell``, in increasing coordinate order."""
    k = grid.index_of(cell)
    side = Side(side)
    n = grid.lattice_size
    X0, Y0, s = int(grid.X0[k]), int(grid.Y0[k]), int(grid.span[k])
    run = np.arange(s)
    if side is Side.LEFT:
        if X0 == 0:
            return []
        owners = grid.owner[X0 - 1, Y0 + run]
    elif side is Side.RIGHT:
        if X0 + s == n:
            return []
        owners = grid.owner[X0 + s, Y0 + run]
    elif side is Side.BOTTOM:
        if Y0 == 0:
            return []
        owners = grid.owner[X0 + run, Y0 - 1]
    else:
        if Y0 + s == n:
            return []
        owners = grid.owner[X0 + run, Y0 + s]
    keep = np.concatenate([[True], owners[1:] != owners[:-1]])
    return [grid.cell(int(o)) for o in owners[keep]]


def seed_lattice_cells(grid: QuadtreeGrid, indices: Sequence[int], closed: bool = False):
    """Finest-lattice cells selected by seeding the centers of the given leaves.

    Exact lattice arithmetic; equivalent to ``lattice_cells_from_points`` on
    the leaf centers but free of coordinate roundoff.
    """
    idx = np.asarray(indices, dtype=np.int64)
    s = grid.span[idx]
    X = grid.X0[idx] + s // 2
    Y = grid.Y0[idx] + s // 2
    fine = s == 1
    X = np.where(fine, grid.X0[idx], X)
    Y = np.where(fine, grid.Y0[idx], Y)
    if not closed:
        return X, Y
    c = ~fine
    return (
        np.concatenate([X, X[c] - 1, X[c], X[c] - 1]),
        np.concatenate([Y, Y[c], Y[c] - 1, Y[c] - 1]),
    )
