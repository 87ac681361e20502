"""The six built-in benchmark problems."""
from __future__ import annotations

import numpy as np

from .bathymetry import BottomField, constant_bottom
from .boundary import BC, EXTRAP, INFLOW, WALL, BoundarySpec
from .errors import ConfigError
from .grid import Rect
from .simulation import Problem

BENCHMARKS = ("ex1", "ex2", "ex3", "ex4", "ex5", "ex6")

_EXTRAP = BC(EXTRAP)
_WALL = BC(WALL)
_CHANNEL = BoundarySpec(left=_EXTRAP, right=_EXTRAP, bottom=_WALL, top=_WALL)

# constants checked by the test suite
CONSTANTS = {
    "ex1": dict(domain=(0.0, 0.0, 2.0, 1.0), c_seed=0.0005, g=1.0, t_end=0.07, m=7),
    "ex2": dict(domain=(0.0, 0.0, 2.0, 2.0), c_seed=0.1, g=1.0, t_end=0.2, m=8),
    "ex3": dict(domain=(0.0, 0.0, 2.0, 1.0), c_seed=0.02, g=1.0, t_end=1.8, m=8, epsilon=0.01),
    "ex4": dict(domain=(0.0, 0.0, 1.0, 1.0), c_seed=0.0002, g=1.0, t_end=0.65, m=8, epsilon=1e-4),
    "ex5": dict(domain=(0.0, 0.0, 4.0, 4.0), c_seed=0.1, g=9.8, t_end=0.2, m=8, init_level=6),
    "ex6": dict(domain=(0.0, 0.0, 3.0, 1.0), c_seed=2.0, g=1.0, t_end=2.0, m=8),
}


def _ones_like(x):
    return np.ones(np.shape(x))


def example1(m=7, c_seed=None, **kw) -> Problem:
    c = CONSTANTS["ex1"]
    bottom = BottomField(lambda x, y: 0.5 * np.exp(-25 * (x - 1) ** 2 - 50 * (y - 0.5) ** 2), True, "gaussian")

    def init(x, y, B):
        w = _ones_like(x)
        return w, 0.3 * (w - B), 0.0 * w

    return Problem("ex1", Rect(*c["domain"]), m, bottom, init, BoundarySpec.uniform(_EXTRAP), c["t_end"],
                   c_seed or c["c_seed"], c["g"], **kw)


def example2(m=8, c_seed=None, **kw) -> Problem:
    c = CONSTANTS["ex2"]
    kw.setdefault("closed_seeding", True)

    def init(x, y, B):
        w = np.where((x - 1) ** 2 + (y - 1) ** 2 < 0.25, 1.0, 1e-16)
        return w, 0.0 * w, 0.0 * w

    return Problem("ex2", Rect(*c["domain"]), m, constant_bottom(0.0), init, BoundarySpec.uniform(_EXTRAP),
                   c["t_end"], c_seed or c["c_seed"], c["g"], **kw)


def ex3_bottom() -> BottomField:
    return BottomField(lambda x, y: 0.8 * np.exp(-5 * (x - 0.9) ** 2 - 50 * (y - 0.5) ** 2), True, "bump")


def example3(m=8, c_seed=None, epsilon=None, **kw) -> Problem:
    c = CONSTANTS["ex3"]
    eps = c["epsilon"] if epsilon is None else epsilon

    def init(x, y, B):
        w = np.where((x > 0.05) & (x < 0.15), 1.0 + eps, 1.0)
        return w, 0.0 * w, 0.0 * w

    return Problem("ex3", Rect(*c["domain"]), m, ex3_bottom(), init, _CHANNEL, c["t_end"],
                   c_seed or c["c_seed"], c["g"], info={"epsilon": eps}, **kw)


def ex4_bottom(eps=1e-4) -> BottomField:
    def f(x, y):
        r = np.sqrt((x - 0.5) ** 2 + (y - 0.5) ** 2)
        return np.where(r <= 0.1, 1 - 2 * eps, np.where(r <= 0.2, 10 * (1 - 2 * eps) * (0.2 - r), 0.0))

    return BottomField(f, True, "plateau")


def example4(m=8, c_seed=None, epsilon=None, **kw) -> Problem:
    c = CONSTANTS["ex4"]
    eps = c["epsilon"] if epsilon is None else epsilon

    def init(x, y, B):
        w = np.where((x >= 0.1) & (x <= 0.2), 1.0 + eps, 1.0)
        return w, 0.0 * w, 0.0 * w

    return Problem("ex4", Rect(*c["domain"]), m, ex4_bottom(eps), init, _CHANNEL, c["t_end"],
                   c_seed or c["c_seed"], c["g"], info={"epsilon": eps}, **kw)


def ex5_bottom() -> BottomField:
    return BottomField(lambda x, y: np.where((x - 2) ** 2 + (y - 2) ** 2 <= 1.0, -0.2, 0.0), False, "step")


def example5(m=8, c_seed=None, **kw) -> Problem:
    c = CONSTANTS["ex5"]
    kw.setdefault("init_level", c["init_level"])

    def init(x, y, B):
        h = np.where((x - 2) ** 2 + (y - 2) ** 2 <= 1.0, 1.0, 0.5)
        return h + B, 0.0 * h, 0.0 * h

    return Problem("ex5", Rect(*c["domain"]), m, ex5_bottom(), init, BoundarySpec.uniform(_EXTRAP), c["t_end"],
                   c_seed or c["c_seed"], c["g"], **kw)


def ex6_halfwidth(x):
    return np.where(np.asarray(x) <= 1.0, 0.5, 0.4)


def ex6_mask(x, y):
    return np.abs(np.asarray(y) - 0.5) <= ex6_halfwidth(x)


def ex6_bottom(humps=False) -> BottomField:
    if not humps:
        return constant_bottom(0.0)
    return BottomField(
        lambda x, y: 0.95 * (np.exp(-10 * (x - 1.9) ** 2 - 50 * (y - 0.7) ** 2)
                             + np.exp(-20 * (x - 2.2) ** 2 - 50 * (y - 0.3) ** 2)),
        True, "humps")


def example6(m=8, c_seed=None, humps=False, **kw) -> Problem:
    c = CONSTANTS["ex6"]
    bc = BoundarySpec(left=BC(INFLOW, 1.0, 2.0, 0.0), right=_EXTRAP, bottom=_WALL, top=_WALL)

    def init(x, y, B):
        w = _ones_like(x)
        return w, 2.0 * (w - B), 0.0 * w

    return Problem("ex6", Rect(*c["domain"]), m, ex6_bottom(humps), init, bc, c["t_end"], c_seed or c["c_seed"],
                   c["g"], mask=ex6_mask, info={"humps": humps}, **kw)


_FACTORIES = {"ex1": example1, "ex2": example2, "ex3": example3, "ex4": example4, "ex5": example5, "ex6": example6}


def benchmark(name: str, **kw) -> Problem:
    """Benchmark problem by id; keyword arguments override defaults."""
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ConfigError(f"unknown benchmark {name!r}; choose from {', '.join(BENCHMARKS)}") from None
    kw = {k: v for k, v in kw.items() if v is not None}
    kw.setdefault("m", CONSTANTS[name]["m"])
    return factory(**kw)
