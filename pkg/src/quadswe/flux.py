"""Physical fluxes, one-sided local speeds, central-upwind fluxes and source quadratures."""
from __future__ import annotations

import numpy as np

from .bathymetry import NE, NW, SE, SW
from .errors import NumericalError, PreconditionViolation
from .reconstruction import desingularize

DEGENERATE_SPEED = 1e-10

SOURCE_MODES = ("well-balanced", "naive-y-fixed", "naive-as-printed")


def physical_flux(h, hu, hv, u, v, g, axis):
    """F (axis 0) or G (axis 1) from depth, recomputed discharges and velocities."""
    h = np.asarray(h, dtype=float)
    p = 0.5 * g * h * h
    if axis == 0:
        return np.stack([hu, hu * u + p, hu * v], axis=-1)
    return np.stack([hv, hv * u, hv * v + p], axis=-1)


def local_speeds(un_lo, h_lo, un_hi, h_hi, g):
    """``(a_plus, a_minus)`` from normal velocities and depths on both sides."""
    h_lo = np.asarray(h_lo, dtype=float)
    h_hi = np.asarray(h_hi, dtype=float)
    if (h_lo < 0).any() or (h_hi < 0).any():
        raise PreconditionViolation("local speeds need nonnegative depths")
    c_lo = np.sqrt(g * h_lo)
    c_hi = np.sqrt(g * h_hi)
    ap = np.maximum(np.maximum(un_hi + c_hi, un_lo + c_lo), 0.0)
    am = np.minimum(np.minimum(un_hi - c_hi, un_lo - c_lo), 0.0)
    return ap, am


def central_upwind(U_lo, U_hi, F_lo, F_hi, ap, am):
    """Central-upwind numerical flux; the mean physical flux where speeds degenerate."""
    ap = np.asarray(ap, dtype=float)[..., None]
    am = np.asarray(am, dtype=float)[..., None]
    diff = ap - am
    degenerate = diff < DEGENERATE_SPEED * np.maximum(1.0, np.maximum(ap, -am))
    safe = np.where(degenerate, 1.0, diff)
    H = (ap * F_lo - am * F_hi) / safe + (ap * am / safe) * (U_hi - U_lo)
    return np.where(degenerate, 0.5 * (F_lo + F_hi), H)


def face_flux(V_lo, V_hi, B_pt, g, eps, axis, where="face"):
    """Numerical flux from conserved point values on both sides of quadrature nodes.

    ``V_lo``/``V_hi`` are ``(k, 3)`` arrays of ``(w, hu, hv)``; the depths must
    already be nonnegative.  Returns ``(H, ap, am, h_lo, h_hi)``.
    """
    h_lo = V_lo[:, 0] - B_pt
    h_hi = V_hi[:, 0] - B_pt
    h_lo = np.maximum(h_lo, 0.0)
    h_hi = np.maximum(h_hi, 0.0)
    u_l, v_l, hu_l, hv_l = desingularize(h_lo, V_lo[:, 1], V_lo[:, 2], eps)
    u_h, v_h, hu_h, hv_h = desingularize(h_hi, V_hi[:, 1], V_hi[:, 2], eps)
    if axis == 0:
        ap, am = local_speeds(u_l, h_lo, u_h, h_hi, g)
    else:
        ap, am = local_speeds(v_l, h_lo, v_h, h_hi, g)
    F_lo = physical_flux(h_lo, hu_l, hv_l, u_l, v_l, g, axis)
    F_hi = physical_flux(h_hi, hu_h, hv_h, u_h, v_h, g, axis)
    Q_lo = np.stack([V_lo[:, 0], hu_l, hv_l], axis=-1)
    Q_hi = np.stack([V_hi[:, 0], hu_h, hv_h], axis=-1)
    H = central_upwind(Q_lo, Q_hi, F_lo, F_hi, ap, am)
    if not np.isfinite(H).all():
        i = int(np.nonzero(~np.isfinite(H).all(axis=-1))[0][0])
        raise NumericalError(f"non-finite {'xy'[axis]}-flux at {where} {i}")
    return H, ap, am, h_lo, h_hi


def cu_flux(U_lo, U_hi, B_pt, g, axis, eps=1e-12):
    """Central-upwind flux for single states ``(w, hu, hv)`` on each side of one node."""
    V_lo = np.asarray(U_lo, dtype=float).reshape(1, 3)
    V_hi = np.asarray(U_hi, dtype=float).reshape(1, 3)
    H, *_ = face_flux(V_lo, V_hi, np.array([float(B_pt)]), g, eps, axis)
    return H[0]


def source_wb(hsq_hi_x, hsq_lo_x, hsq_hi_y, hsq_lo_y, wx, wy, depth, dx, dy, g):
    """Well-balanced source average ``(0, S2, S3)``.

    ``hsq_*`` are the cell's own squared depths at its edge quadrature nodes,
    summed per side with sub-face weights (fraction of the edge length), so
    a split side is treated with the composite midpoint rule.
    """
    S2 = g / (2.0 * dx) * (hsq_hi_x - hsq_lo_x) - g * wx * depth
    S3 = g / (2.0 * dy) * (hsq_hi_y - hsq_lo_y) - g * wy * depth
    return np.stack([np.zeros_like(S2), S2, S3], axis=-1)


def source_naive(B_corners, depth, dx, dy, g, as_printed=False):
    """Midpoint-rule source ``-g h dB/dx`` (and y) from corner values of B.

    ``as_printed=True`` reproduces a published variant whose third component
    repeats the x-difference; otherwise the y-analogue is used.
    """
    Bk = np.asarray(B_corners, dtype=float)
    dBx = 0.5 * (Bk[:, NE] + Bk[:, SE]) - 0.5 * (Bk[:, NW] + Bk[:, SW])
    dBy = 0.5 * (Bk[:, NE] + Bk[:, NW]) - 0.5 * (Bk[:, SE] + Bk[:, SW])
    S2 = -g * depth / dx * dBx
    S3 = -g * depth / dx * dBx if as_printed else -g * depth / dy * dBy
    return np.stack([np.zeros_like(S2), S2, S3], axis=-1)
