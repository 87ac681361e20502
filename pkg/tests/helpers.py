"""Independent brute-force reference implementations used as test oracles."""
import numpy as np

from quadswe.grid import QuadtreeGrid, Rect


def brute_split(root: Rect, seeds, m):
    """Leaves of the recursive splitter: a cell splits iff it contains a seed (root always splits)."""
    seeds = [tuple(s) for s in seeds]
    out = []

    def inside(l, i, j, p):
        n = 1 << l
        x0 = root.x0 + i * root.width / n
        y0 = root.y0 + j * root.height / n
        x1 = root.x0 + (i + 1) * root.width / n
        y1 = root.y0 + (j + 1) * root.height / n
        # half-open except on the far domain edge
        okx = x0 <= p[0] < x1 or (i == n - 1 and p[0] == x1)
        oky = y0 <= p[1] < y1 or (j == n - 1 and p[1] == y1)
        return okx and oky

    def rec(l, i, j):
        if l >= 1 and (l == m or not any(inside(l, i, j, p) for p in seeds)):
            out.append((l, i, j))
            return
        for di in (0, 1):
            for dj in (0, 1):
                rec(l + 1, 2 * i + di, 2 * j + dj)

    rec(0, 0, 0)
    return sorted(out)


def finest_levels(level, ix, iy, m):
    """Level of the leaf owning each finest-lattice cell."""
    n = 1 << m
    L = np.zeros((n, n), dtype=int)
    for l, i, j in zip(level, ix, iy):
        s = 1 << (m - l)
        L[i * s:(i + 1) * s, j * s:(j + 1) * s] = l
    return L


def violators(leaves, m):
    """Leaves having an edge or diagonal neighbor more than one level finer."""
    leaves = list(leaves)
    level = np.array([c[0] for c in leaves])
    ix = np.array([c[1] for c in leaves])
    iy = np.array([c[2] for c in leaves])
    L = finest_levels(level, ix, iy, m)
    n = 1 << m
    bad = []
    for l, i, j in leaves:
        s = 1 << (m - l)
        X0, Y0 = i * s, j * s
        ring = L[max(X0 - 1, 0):min(X0 + s + 1, n), max(Y0 - 1, 0):min(Y0 + s + 1, n)]
        if ring.max() > l + 1:
            bad.append((l, i, j))
    return bad


def fixpoint_regularize(leaves, m):
    """Repeatedly split any violating leaf."""
    leaves = set(leaves)
    while True:
        bad = violators(leaves, m)
        if not bad:
            return sorted(leaves)
        for l, i, j in bad:
            leaves.discard((l, i, j))
            for di in (0, 1):
                for dj in (0, 1):
                    leaves.add((l + 1, 2 * i + di, 2 * j + dj))


def leaf_set(grid: QuadtreeGrid):
    return sorted(zip(grid.level.tolist(), grid.ix.tolist(), grid.iy.tolist()))


def ref_central_upwind(UL, UR, BL, g, axis):
    """Scalar central-upwind flux for wet states (w, hu, hv) with plain velocities."""
    hL, hR = UL[0] - BL, UR[0] - BL
    n = 1 + axis

    def F(U, h):
        if h <= 0:
            return np.zeros(3)
        u, v = U[1] / h, U[2] / h
        if axis == 0:
            return np.array([U[1], U[1] * u + 0.5 * g * h * h, U[1] * v])
        return np.array([U[2], U[2] * u, U[2] * v + 0.5 * g * h * h])

    unL = UL[n] / hL if hL > 0 else 0.0
    unR = UR[n] / hR if hR > 0 else 0.0
    ap = max(unR + np.sqrt(g * hR), unL + np.sqrt(g * hL), 0.0)
    am = min(unR - np.sqrt(g * hR), unL - np.sqrt(g * hL), 0.0)
    if ap - am == 0:
        return np.zeros(3)
    return (ap * F(UL, hL) - am * F(UR, hR)) / (ap - am) + ap * am / (ap - am) * (np.asarray(UR) - np.asarray(UL))
