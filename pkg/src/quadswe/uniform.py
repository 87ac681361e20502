"""Stand-alone central-upwind solver on a uniform Cartesian grid.

Written without the quadtree machinery, on padded ``(nx, ny)`` arrays, so it
can serve as an independent reference.  Surface corner corrections follow
the canonical one/two/three-corner rules, applied after rotating the cell
so that the violated corners come first.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# corner order in this module: NE, SE, NW, SW
_NE, _SE, _NW, _SW = 0, 1, 2, 3


def _mm(a, b):
    return np.where((a > 0) & (b > 0), np.minimum(a, b), np.where((a < 0) & (b < 0), np.maximum(a, b), 0.0))


@dataclass
class UniformProblem:
    """Uniform grid ``nx x ny`` over ``[x0, x0+W] x [y0, y0+H]``.

    ``Bv`` are the vertex values of the bottom, shape ``(nx+1, ny+1)``.
    ``bcs`` maps ``left/right/bottom/top`` to ``("wall",)``, ``("extrap",)``
    or ``("inflow", w, u, v)``.
    """

    x0: float
    y0: float
    W: float
    H: float
    nx: int
    ny: int
    Bv: np.ndarray
    bcs: dict
    g: float = 1.0
    source: str = "well-balanced"

    def __post_init__(self):
        self.dx = self.W / self.nx
        self.dy = self.H / self.ny
        Bv = self.Bv
        self.Bne = Bv[1:, 1:]
        self.Bse = Bv[1:, :-1]
        self.Bnw = Bv[:-1, 1:]
        self.Bsw = Bv[:-1, :-1]
        bw = 0.5 * (self.Bsw + self.Bnw)
        be = 0.5 * (self.Bse + self.Bne)
        bs = 0.5 * (self.Bsw + self.Bse)
        bn = 0.5 * (self.Bnw + self.Bne)
        self.Bc = (be + bw + bn + bs) / 4.0
        # bottom at x-face midpoints (nx+1, ny) and y-face midpoints (nx, ny+1)
        self.Bfx = 0.5 * (Bv[:, :-1] + Bv[:, 1:])
        self.Bfy = 0.5 * (Bv[:-1, :] + Bv[1:, :])
        self.eps = max(self.dx ** 4, self.dy ** 4)

    @property
    def xc(self):
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def yc(self):
        return self.y0 + (np.arange(self.ny) + 0.5) * self.dy

    # ------------------------------------------------------------ ghosts
    def _ghost(self, U, Bref, side):
        kind = self.bcs[side]
        G = U.copy()
        normal = 1 if side in ("left", "right") else 2
        if kind[0] == "wall":
            G[..., normal] = -U[..., normal]
        elif kind[0] == "inflow":
            _, w, u, v = kind
            h = np.maximum(w - Bref, 0.0)
            G[..., 0] = w
            G[..., 1] = h * u
            G[..., 2] = h * v
        return G

    def padded(self, U):
        P = np.zeros((self.nx + 2, self.ny + 2, 3))
        P[1:-1, 1:-1] = U
        P[0, 1:-1] = self._ghost(U[0], self.Bc[0], "left")
        P[-1, 1:-1] = self._ghost(U[-1], self.Bc[-1], "right")
        P[1:-1, 0] = self._ghost(U[:, 0], self.Bc[:, 0], "bottom")
        P[1:-1, -1] = self._ghost(U[:, -1], self.Bc[:, -1], "top")
        return P

    # --------------------------------------------------- reconstruction
    def slopes(self, U):
        P = self.padded(U)
        C = P[1:-1, 1:-1]
        sx = _mm((C - P[:-2, 1:-1]) / self.dx, (P[2:, 1:-1] - C) / self.dx)
        sy = _mm((C - P[1:-1, :-2]) / self.dy, (P[1:-1, 2:] - C) / self.dy)
        return sx, sy

    def corners(self, w, wx, wy):
        """Linear corners, then the corrected ones; returns (corners, corrected mask)."""
        hx, hy = 0.5 * self.dx * wx, 0.5 * self.dy * wy
        lin = np.stack([w + hx + hy, w + hx - hy, w - hx + hy, w - hx - hy], axis=-1)
        B = np.stack([self.Bne, self.Bse, self.Bnw, self.Bsw], axis=-1)
        bad = lin < B
        out = lin.copy()
        d = w - self.Bc
        fix = bad.any(axis=-1)
        for i, j in zip(*np.nonzero(fix)):
            out[i, j] = _correct_cell(bad[i, j], B[i, j], w[i, j], d[i, j])
        return out, fix

    # ---------------------------------------------------------- fluxes
    def _flux(self, qL, qR, Bf, axis):
        g = self.g
        hL = np.maximum(qL[..., 0] - Bf, 0.0)
        hR = np.maximum(qR[..., 0] - Bf, 0.0)

        def vel(h, q):
            den = np.sqrt(h ** 4 + np.maximum(h ** 4, self.eps))
            u = np.sqrt(2.0) * h * q[..., 1] / den
            v = np.sqrt(2.0) * h * q[..., 2] / den
            return u, v

        uL, vL = vel(hL, qL)
        uR, vR = vel(hR, qR)
        huL, hvL, huR, hvR = hL * uL, hL * vL, hR * uR, hR * vR
        nL, nR = (uL, uR) if axis == 0 else (vL, vR)
        cL, cR = np.sqrt(g * hL), np.sqrt(g * hR)
        ap = np.maximum(np.maximum(nR + cR, nL + cL), 0.0)
        am = np.minimum(np.minimum(nR - cR, nL - cL), 0.0)
        if axis == 0:
            FL = np.stack([huL, huL * uL + 0.5 * g * hL * hL, huL * vL], axis=-1)
            FR = np.stack([huR, huR * uR + 0.5 * g * hR * hR, huR * vR], axis=-1)
        else:
            FL = np.stack([hvL, hvL * uL, hvL * vL + 0.5 * g * hL * hL], axis=-1)
            FR = np.stack([hvR, hvR * uR, hvR * vR + 0.5 * g * hR * hR], axis=-1)
        QL = np.stack([qL[..., 0], huL, hvL], axis=-1)
        QR = np.stack([qR[..., 0], huR, hvR], axis=-1)
        A, M = ap[..., None], am[..., None]
        den = A - M
        degen = den < 1e-10 * np.maximum(1.0, np.maximum(A, -M))
        sd = np.where(degen, 1.0, den)
        Hf = (A * FL - M * FR) / sd + (A * M / sd) * (QR - QL)
        Hf = np.where(degen, 0.5 * (FL + FR), Hf)
        return Hf, np.maximum(ap, -am), hL, hR

    def rhs(self, U):
        """Right-hand side and the CFL bound ``min(dx/a, dy/b) / 4``."""
        nx, ny = self.nx, self.ny
        sx, sy = self.slopes(U)
        w = U[..., 0]
        cor, fixed = self.corners(w, sx[..., 0], sy[..., 0])
        # one-sided values: east/west/north/south of every cell
        E = U + 0.5 * self.dx * sx
        Wv = U - 0.5 * self.dx * sx
        N_ = U + 0.5 * self.dy * sy
        S_ = U - 0.5 * self.dy * sy
        E[..., 0] = np.where(fixed, 0.5 * (cor[..., _NE] + cor[..., _SE]), E[..., 0])
        Wv[..., 0] = np.where(fixed, 0.5 * (cor[..., _NW] + cor[..., _SW]), Wv[..., 0])
        N_[..., 0] = np.where(fixed, 0.5 * (cor[..., _NE] + cor[..., _NW]), N_[..., 0])
        S_[..., 0] = np.where(fixed, 0.5 * (cor[..., _SE] + cor[..., _SW]), S_[..., 0])

        qL = np.empty((nx + 1, ny, 3))
        qR = np.empty((nx + 1, ny, 3))
        qL[1:] = E
        qR[:-1] = Wv
        qL[0] = self._ghost(Wv[0], self.Bfx[0], "left")
        qR[-1] = self._ghost(E[-1], self.Bfx[-1], "right")
        Hx, ax, hLx, hRx = self._flux(qL, qR, self.Bfx, 0)

        qB = np.empty((nx, ny + 1, 3))
        qT = np.empty((nx, ny + 1, 3))
        qB[:, 1:] = N_
        qT[:, :-1] = S_
        qB[:, 0] = self._ghost(S_[:, 0], self.Bfy[:, 0], "bottom")
        qT[:, -1] = self._ghost(N_[:, -1], self.Bfy[:, -1], "top")
        Hy, ay, hBy, hTy = self._flux(qB, qT, self.Bfy, 1)

        R = -(Hx[1:] - Hx[:-1]) / self.dx
        R -= (Hy[:, 1:] - Hy[:, :-1]) / self.dy
        g = self.g
        depth = w - self.Bc
        if self.source == "well-balanced":
            # own-side depths: east face uses hLx[1:], west face hRx[:-1]
            S2 = g / (2.0 * self.dx) * (hLx[1:] ** 2 - hRx[:-1] ** 2) - g * sx[..., 0] * depth
            S3 = g / (2.0 * self.dy) * (hBy[:, 1:] ** 2 - hTy[:, :-1] ** 2) - g * sy[..., 0] * depth
        else:
            dBx = 0.5 * (self.Bne + self.Bse) - 0.5 * (self.Bnw + self.Bsw)
            dBy = 0.5 * (self.Bne + self.Bnw) - 0.5 * (self.Bse + self.Bsw)
            S2 = -g * depth / self.dx * dBx
            S3 = -g * depth / self.dx * dBx if self.source == "naive-as-printed" else -g * depth / self.dy * dBy
        R[..., 1] += S2
        R[..., 2] += S3
        amx = np.maximum(ax[1:], ax[:-1])
        amy = np.maximum(ay[:, 1:], ay[:, :-1])
        with np.errstate(divide="ignore"):
            t = np.minimum(np.where(amx > 1e-14, self.dx / amx, np.inf), np.where(amy > 1e-14, self.dy / amy, np.inf))
        return R, 0.25 * float(t.min())

    def rk3(self, U, dt):
        L0, _ = self.rhs(U)
        U1 = U + dt * L0
        L1, _ = self.rhs(U1)
        U2 = 0.75 * U + 0.25 * (U1 + dt * L1)
        L2, _ = self.rhs(U2)
        return U / 3.0 + (2.0 / 3.0) * (U2 + dt * L2)

    def run(self, U, t_end, sigma=0.9):
        """Advance to ``t_end`` with adaptive steps; returns ``(U, nsteps)``."""
        t, n = 0.0, 0
        while t < t_end * (1 - 1e-14):
            L0, bound = self.rhs(U)
            dt = min(sigma * bound, t_end - t)
            while True:
                U1 = U + dt * L0
                L1, b1 = self.rhs(U1)
                if dt > b1:
                    dt = sigma * b1
                    continue
                U2 = 0.75 * U + 0.25 * (U1 + dt * L1)
                L2, b2 = self.rhs(U2)
                if dt > b2:
                    dt = sigma * b2
                    continue
                U = U / 3.0 + (2.0 / 3.0) * (U2 + dt * L2)
                break
            t += dt
            n += 1
        return U, n


# rotations of the corner square (NE, SE, NW, SW) that move a corner set to
# the canonical position; each permutation maps canonical slot -> actual corner
_SYMS = []
for _perm in (
    (_NE, _SE, _NW, _SW),  # identity
    (_SE, _SW, _NE, _NW),  # rotate 90 cw
    (_SW, _NW, _SE, _NE),  # rotate 180
    (_NW, _NE, _SW, _SE),  # rotate 270
    (_NW, _SW, _NE, _SE),  # mirror x
    (_SE, _NE, _SW, _NW),  # mirror y
    (_SW, _SE, _NW, _NE),  # transpose-type mirrors
    (_NE, _NW, _SE, _SW),
):
    _SYMS.append(_perm)


def _correct_cell(bad, B, wbar, d):
    """Corner values after the one/two/three-violation rules in canonical form."""
    k = int(bad.sum())
    if k == 4:
        raise ArithmeticError("four violated corners")
    canonical = {1: (True, False, False, False), 2: (True, True, False, False), 3: (True, True, True, False)}[k]
    for perm in _SYMS:
        if tuple(bool(bad[perm[s]]) for s in range(4)) == canonical:
            ne, se, nw, sw = (B[perm[s]] for s in range(4))
            if k == 1:
                vals = (ne, se + 4.0 / 3.0 * d, nw + 4.0 / 3.0 * d, sw + 4.0 / 3.0 * d)
            elif k == 2:
                vals = (ne, se, nw + 2.0 * d, sw + 2.0 * d)
            else:
                # equals 4 wbar - ne - se - nw; this form keeps a dry corner exactly at the bottom
                vals = (ne, se, nw, sw + 4.0 * d)
            out = np.empty(4)
            for s in range(4):
                out[perm[s]] = vals[s]
            return out
    # two violations on a diagonal: violated corners to the bottom, the rest share the depth
    out = np.where(bad, B, B + 2.0 * d)
    return out


def from_problem(problem, nx: int, ny: int) -> UniformProblem:
    """Uniform-grid version of a quadtree :class:`~quadswe.simulation.Problem` (no masks)."""
    if problem.mask is not None:
        raise ValueError("masked problems have no uniform counterpart")
    r = problem.root
    X, Y = np.meshgrid(np.linspace(r.x0, r.x0 + r.width, nx + 1), np.linspace(r.y0, r.y0 + r.height, ny + 1),
                       indexing="ij")
    Bv = np.asarray(problem.bottom(X, Y), dtype=float)
    bc = problem.bc
    bcs = {}
    for side, b in (("left", bc.left), ("right", bc.right), ("bottom", bc.bottom), ("top", bc.top)):
        bcs[side] = ("inflow", b.w, b.u, b.v) if b.kind == "inflow" else (b.kind,)
    return UniformProblem(r.x0, r.y0, r.width, r.height, nx, ny, Bv, bcs, problem.g, problem.source_mode)


def initial_uniform_state(up: UniformProblem, problem) -> np.ndarray:
    XC, YC = np.meshgrid(up.xc, up.yc, indexing="ij")
    w, hu, hv = (np.broadcast_to(np.asarray(v, dtype=float), XC.shape) for v in problem.init(XC, YC, up.Bc))
    return np.stack([np.maximum(w, up.Bc), hu, hv], axis=-1)


def uniform_reference(problem, nx: int, ny: int, cache=None) -> np.ndarray:
    """Final ``(nx, ny, 3)`` state of ``problem`` on a uniform grid, cached as ``.npy`` when ``cache`` is a path."""
    if cache is not None:
        try:
            U = np.load(cache)
            if U.shape == (nx, ny, 3):
                return U
        except (OSError, ValueError):
            pass
    up = from_problem(problem, nx, ny)
    U, _ = up.run(initial_uniform_state(up, problem), problem.t_end, problem.sigma)
    if cache is not None:
        np.save(cache, U)
    return U
