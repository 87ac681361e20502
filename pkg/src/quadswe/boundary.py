"""Boundary conditions realized through virtual ghost states."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .grid import MASK_WALL, Side

WALL, EXTRAP, INFLOW = "wall", "extrap", "inflow"


@dataclass(frozen=True)
class BC:
    kind: str = EXTRAP
    w: float = 0.0
    u: float = 0.0
    v: float = 0.0

    def __post_init__(self):
        if self.kind not in (WALL, EXTRAP, INFLOW):
            raise ConfigError(f"unknown boundary kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "BC":
        parts = text.split()
        if not parts:
            raise ConfigError("empty boundary condition")
        kind = {"zero-order": EXTRAP, "extrapolation": EXTRAP, "solid": WALL}.get(parts[0], parts[0])
        if kind == INFLOW:
            if len(parts) != 4:
                raise ConfigError("inflow boundary needs 'inflow w u v'")
            return cls(INFLOW, *map(float, parts[1:]))
        if len(parts) != 1:
            raise ConfigError(f"unexpected arguments in boundary {text!r}")
        return cls(kind)

    def __str__(self) -> str:
        if self.kind == INFLOW:
            return f"inflow {self.w:g} {self.u:g} {self.v:g}"
        return self.kind


@dataclass(frozen=True)
class BoundarySpec:
    """One rule per domain side; faces against masked cells are always walls."""

    left: BC = field(default_factory=BC)
    right: BC = field(default_factory=BC)
    bottom: BC = field(default_factory=BC)
    top: BC = field(default_factory=BC)

    @classmethod
    def uniform(cls, bc: BC) -> "BoundarySpec":
        return cls(bc, bc, bc, bc)

    def rule(self, tag: int) -> BC:
        if tag == MASK_WALL:
            return BC(WALL)
        return (self.left, self.right, self.bottom, self.top)[Side(tag)]

    @property
    def all_walls(self) -> bool:
        return all(b.kind == WALL for b in (self.left, self.right, self.bottom, self.top))


def _apply(U, tags, axis, spec: BoundarySpec, depth_ref):
    """Ghost conserved states for interior states ``U`` across faces tagged ``tags``."""
    G = U.copy()
    for tag in np.unique(tags):
        sel = tags == tag
        bc = spec.rule(int(tag))
        if bc.kind == WALL:
            G[sel, 1 + axis] = -U[sel, 1 + axis]
        elif bc.kind == INFLOW:
            h = np.maximum(bc.w - depth_ref[sel], 0.0)
            G[sel, 0] = bc.w
            G[sel, 1] = h * bc.u
            G[sel, 2] = h * bc.v
    return G


def ghost_average(U, Bc, tags, axis, spec: BoundarySpec):
    """Ghost cell averages (same level as the interior cell) used by the slope limiter."""
    return _apply(U, tags, axis, spec, Bc)


def ghost_point(U, B_pt, tags, axis, spec: BoundarySpec):
    """Ghost-side point values at a boundary quadrature node."""
    return _apply(U, tags, axis, spec, B_pt)
