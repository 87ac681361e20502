import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import brute_split, fixpoint_regularize, leaf_set, violators
from quadswe.errors import CapacityError, InvalidArgument, PreconditionViolation
from quadswe.faces import build_faces
from quadswe.grid import (
    CellRef, QuadtreeGrid, Rect, Side, coarsen_siblings, generate_from_seeds, is_balanced, morton_key, neighbors,
    refine_cell, regularize, uniform_grid,
)

UNIT = Rect(0.0, 0.0, 1.0, 1.0)

points = st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=0, max_size=6)


def test_all_centers_give_uniform_grid():
    n = 8
    c = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(c, c)
    g = generate_from_seeds(UNIT, np.column_stack([X.ravel(), Y.ravel()]), 3)
    assert g.n_cells == 64 and set(g.level.tolist()) == {3}


def test_no_seeds_gives_four_leaves():
    g = generate_from_seeds(UNIT, [], 5)
    assert leaf_set(g) == [(1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 1, 1)]


def test_corner_seed_matches_recursive_splitter():
    g = generate_from_seeds(UNIT, [(0.01, 0.01)], 3)
    assert g.n_cells == 10
    assert leaf_set(g) == brute_split(UNIT, [(0.01, 0.01)], 3)


@given(points, st.integers(1, 5))
def test_generation_matches_recursive_splitter(seeds, m):
    root = Rect(0.0, 0.0, 2.0, 1.0)
    pts = [(2 * x, y) for x, y in seeds]
    assert leaf_set(generate_from_seeds(root, pts, m)) == brute_split(root, pts, m)


def test_seeds_outside_are_ignored():
    g = generate_from_seeds(UNIT, [(1.5, 0.5), (-0.1, 0.2)], 4)
    assert g.n_cells == 4


@pytest.mark.parametrize("root,m", [((0, 0, 0, 1), 3), ((0, 0, 1, -1), 3), (UNIT, 0), (UNIT, -2)])
def test_invalid_generation_arguments(root, m):
    with pytest.raises(InvalidArgument):
        generate_from_seeds(root, [], m)


def test_leaves_are_morton_ordered_and_tile():
    g = regularize(generate_from_seeds(UNIT, [(0.3, 0.7), (0.9, 0.1)], 6))
    assert np.all(np.diff(g.key) > 0)
    assert np.isclose(g.area.sum(), 1.0, rtol=1e-12, atol=0)
    g.check_tiling()


def test_morton_key_interleaves_bits():
    assert morton_key(np.array([1]), np.array([0]))[0] == 1
    assert morton_key(np.array([0]), np.array([1]))[0] == 2
    assert morton_key(np.array([3]), np.array([3]))[0] == 15


def test_overlapping_leaves_are_rejected():
    g = QuadtreeGrid(UNIT, 2, [1, 2, 1, 1, 1], [0, 0, 0, 1, 1], [0, 0, 1, 0, 1])
    with pytest.raises(PreconditionViolation):
        g.check_tiling()


# ------------------------------------------------------------- regularization


def test_uniform_grid_is_balanced_and_unchanged():
    g = uniform_grid(UNIT, 3, 5)
    assert is_balanced(g)
    assert regularize(g) == g


def test_level1_leaf_next_to_level3_is_split():
    g = refine_cell(refine_cell(uniform_grid(UNIT, 1, 3), (1, 0, 0)), (2, 1, 1))
    assert not is_balanced(g)
    r = regularize(g)
    assert (1, 1, 0) not in leaf_set(r) or (1, 0, 1) not in leaf_set(r)
    assert is_balanced(r)


def test_deep_corner_refinement_matches_fixpoint_oracle():
    g = generate_from_seeds(UNIT, [(0.49, 0.49)], 6)
    r = regularize(g)
    assert leaf_set(r) == fixpoint_regularize(leaf_set(g), 6)
    assert not violators(leaf_set(r), 6)


@given(points, st.integers(2, 6))
def test_regularize_matches_fixpoint_oracle(seeds, m):
    g = generate_from_seeds(UNIT, seeds, m)
    r = regularize(g)
    assert leaf_set(r) == fixpoint_regularize(leaf_set(g), m)
    assert regularize(r) == r
    assert is_balanced(r)
    # only refinements: every new leaf lies inside an old leaf of no finer level
    own = g.owner[r.X0, r.Y0]
    assert np.all(r.level >= g.level[own])


@given(points, st.integers(3, 5))
def test_regularize_is_minimal(seeds, m):
    g = generate_from_seeds(UNIT, seeds, m)
    r = regularize(g)
    old = set(leaf_set(g))
    # undoing any split the closure performed re-breaks balance
    parents = {(l - 1, i >> 1, j >> 1) for l, i, j in leaf_set(r) if (l, i, j) not in old}
    for p in parents:
        kids = CellRef(*p).children()
        if all(r.is_leaf(k) for k in kids):
            assert not is_balanced(coarsen_siblings(r, p))


# -------------------------------------------------------------- neighbors


def _brute_neighbors(grid, cell, side):
    l, i, j = cell
    s = 1 << (grid.max_level - l)
    X0, Y0 = i * s, j * s
    out = []
    for k, c in enumerate(grid.cells()):
        t = int(grid.span[k])
        a0, b0 = int(grid.X0[k]), int(grid.Y0[k])
        if side == Side.LEFT:
            hit = a0 + t == X0 and b0 < Y0 + s and Y0 < b0 + t
        elif side == Side.RIGHT:
            hit = a0 == X0 + s and b0 < Y0 + s and Y0 < b0 + t
        elif side == Side.BOTTOM:
            hit = b0 + t == Y0 and a0 < X0 + s and X0 < a0 + t
        else:
            hit = b0 == Y0 + s and a0 < X0 + s and X0 < a0 + t
        if hit:
            out.append((c, a0 if side in (Side.BOTTOM, Side.TOP) else b0))
    return [c for c, _ in sorted(out, key=lambda r: r[1])]


@given(points, st.integers(1, 6))
def test_neighbors_match_geometric_overlap(seeds, m):
    g = regularize(generate_from_seeds(UNIT, seeds, m))
    for c in g.cells()[:: max(1, g.n_cells // 40)]:
        for side in Side:
            nb = neighbors(g, c, side)
            assert nb == _brute_neighbors(g, c, side)
            assert len(nb) <= 2


def test_neighbor_examples():
    g = uniform_grid(UNIT, 3)
    assert neighbors(g, (3, 4, 4), Side.LEFT) == [CellRef(3, 3, 4)]
    assert neighbors(g, (3, 0, 4), Side.LEFT) == []
    fine = regularize(refine_cell(uniform_grid(UNIT, 3, 4), (3, 3, 4)))
    assert neighbors(fine, (3, 4, 4), Side.LEFT) == [CellRef(4, 7, 8), CellRef(4, 7, 9)]
    with pytest.raises(InvalidArgument):
        neighbors(g, (2, 0, 0), Side.LEFT)


# ------------------------------------------------------------- refine/coarsen


def test_refine_and_coarsen_are_inverse():
    g = uniform_grid(UNIT, 1, 4)
    r = refine_cell(g, (1, 0, 1))
    assert r.n_cells == 7 and sum(r.level == 2) == 4
    assert coarsen_siblings(r, (1, 0, 1)) == g


def test_refine_beyond_max_level_raises():
    g = uniform_grid(UNIT, 2, 2)
    with pytest.raises(CapacityError):
        refine_cell(g, (2, 0, 0))


def test_coarsen_with_missing_sibling_raises():
    g = refine_cell(refine_cell(uniform_grid(UNIT, 1, 4), (1, 0, 0)), (2, 0, 0))
    with pytest.raises(InvalidArgument):
        coarsen_siblings(g, (1, 0, 0))


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 10 ** 6)), max_size=15))
def test_tiling_survives_refine_coarsen_sequences(ops):
    g = uniform_grid(Rect(-1.0, 2.0, 3.0, 0.5), 1, 5)
    for refine, pick in ops:
        cells = g.cells()
        if refine:
            c = cells[pick % len(cells)]
            if c.level < 5:
                g = refine_cell(g, c)
        else:
            parents = sorted({c.parent() for c in cells if c.level > 1 and all(g.is_leaf(k) for k in c.parent().children())})
            if parents:
                g = coarsen_siblings(g, parents[pick % len(parents)])
        assert np.isclose(g.area.sum(), 1.5, rtol=1e-12, atol=0)
        assert np.all(np.diff(g.key) > 0)
    g.check_tiling()


# ------------------------------------------------------------------ faces


def test_uniform_4x4_face_counts():
    f = build_faces(uniform_grid(UNIT, 2))
    assert f.n_interior == 24 and f.n_boundary == 16


def test_coarse_side_has_two_subfaces_with_quarter_offsets():
    g = regularize(refine_cell(uniform_grid(UNIT, 3, 4), (3, 3, 4)))
    f = build_faces(g)
    k = g.index_of((3, 4, 4))
    left = f.of_cell(k, Side.LEFT)
    yc = g.yc[k]
    dy = g.dy[k]
    assert [r["midpoint"][1] for r in left] == pytest.approx([yc - dy / 4, yc + dy / 4])
    assert [r["frac"] for r in left] == [0.5, 0.5]
    assert f.of_cell(g.index_of((4, 7, 8)), Side.RIGHT)[0]["frac"] == 1.0


@given(points, st.integers(1, 6))
def test_subface_fractions_sum_to_one(seeds, m):
    g = regularize(generate_from_seeds(UNIT, seeds, m))
    f = build_faces(g)
    for sf in (f.x, f.y):
        tot_lo = np.bincount(sf.lo[sf.lo >= 0], weights=sf.frac_lo[sf.lo >= 0], minlength=g.n_cells)
        tot_hi = np.bincount(sf.hi[sf.hi >= 0], weights=sf.frac_hi[sf.hi >= 0], minlength=g.n_cells)
        assert np.allclose(tot_lo, 1.0) and np.allclose(tot_hi, 1.0)
        pairs = set(zip(sf.lo.tolist(), sf.hi.tolist(), sf.xm.tolist(), sf.ym.tolist()))
        assert len(pairs) == sf.size


def test_unbalanced_grid_faces_raise():
    g = refine_cell(refine_cell(uniform_grid(UNIT, 1, 3), (1, 0, 0)), (2, 1, 1))
    with pytest.raises(PreconditionViolation):
        build_faces(g)


def test_masked_neighbor_gives_wall_face():
    g = uniform_grid(UNIT, 2)
    active = np.ones(g.n_cells, dtype=bool)
    active[g.index_of((2, 1, 1))] = False
    f = build_faces(g.with_active(active))
    k = g.index_of((2, 2, 1))
    rec = f.of_cell(k, Side.LEFT)
    assert len(rec) == 1 and rec[0]["boundary"] == 4
