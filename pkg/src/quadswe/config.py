"""Flat ``key = value`` run configurations."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bathymetry import BottomField, raster_bottom
from .benchmarks import BENCHMARKS, benchmark
from .boundary import BC, BoundarySpec
from .errors import ConfigError, QuadsweError
from .flux import SOURCE_MODES
from .grid import Rect
from .simulation import Problem

# expressions see x, y (and B for initial fields) plus these names only
_NAMESPACE = {
    "np": np, "pi": np.pi, "exp": np.exp, "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos, "tanh": np.tanh,
    "abs": np.abs, "where": np.where, "minimum": np.minimum, "maximum": np.maximum,
}

_INT = ("m", "init_level", "regrid_every", "output_every")
_FLOAT = ("c_seed", "g", "t_end", "sigma", "epsilon")
_BOOL = ("closed_seeding", "humps", "bottom_continuous")
_STR = ("benchmark", "source_mode", "out", "sample", "domain", "bottom", "bottom_raster", "w0", "u0", "v0",
        "bc", "bc_left", "bc_right", "bc_bottom", "bc_top")
KEYS = _INT + _FLOAT + _BOOL + _STR


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    source: str = "<config>"

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def out(self) -> Path | None:
        v = self.values.get("out")
        return Path(v) if v else None

    @property
    def sample(self) -> tuple[int, int] | None:
        v = self.values.get("sample")
        if not v:
            return None
        parts = v.split()
        try:
            nx, ny = (int(p) for p in parts)
        except ValueError:
            raise ConfigError(f"{self.source}: sample must be 'NX NY'") from None
        if nx < 1 or ny < 1:
            raise ConfigError(f"{self.source}: sample sizes must be positive")
        return nx, ny

    @property
    def output_every(self) -> int:
        return int(self.values.get("output_every", 0))

    def problem(self) -> Problem:
        try:
            return self._problem()
        except ConfigError:
            raise
        except (QuadsweError, ValueError, TypeError) as exc:
            raise ConfigError(f"{self.source}: {exc}") from exc

    def _problem(self) -> Problem:
        v = self.values
        common = {k: v[k] for k in ("m", "c_seed", "g", "t_end", "sigma", "source_mode", "regrid_every",
                                    "closed_seeding", "init_level") if k in v}
        name = v.get("benchmark")
        if name is not None:
            custom = [k for k in ("domain", "bottom", "bottom_raster", "w0", "u0", "v0", "bc", "bc_left",
                                  "bc_right", "bc_bottom", "bc_top") if k in v]
            if custom:
                raise ConfigError(f"{self.source}: keys {', '.join(custom)} only apply to custom problems")
            extra = {}
            if "epsilon" in v:
                if name not in ("ex3", "ex4"):
                    raise ConfigError(f"{self.source}: epsilon only applies to ex3 and ex4")
                extra["epsilon"] = v["epsilon"]
            if "humps" in v:
                if name != "ex6":
                    raise ConfigError(f"{self.source}: humps only applies to ex6")
                extra["humps"] = v["humps"]
            p = benchmark(name, m=common.pop("m", None), c_seed=common.pop("c_seed", None), **extra)
            return p.with_(**common) if common else p
        return self._custom(common)

    def _custom(self, common: dict) -> Problem:
        v = self.values
        for k in ("domain", "m", "c_seed", "t_end"):
            if k not in v:
                raise ConfigError(f"{self.source}: custom problems need '{k}'")
        try:
            x0, y0, W, H = (float(p) for p in v["domain"].split())
        except ValueError:
            raise ConfigError(f"{self.source}: domain must be 'x0 y0 width height'") from None
        if "bottom_raster" in v:
            bottom = raster_bottom(v["bottom_raster"], v.get("bottom_continuous", True))
        else:
            fb = _expr(v.get("bottom", "0"), "bottom", self.source)
            bottom = BottomField(lambda x, y: fb(x=x, y=y) + 0.0 * x, v.get("bottom_continuous", True), "config")
        fw = _expr(v.get("w0", "1"), "w0", self.source)
        fu = _expr(v.get("u0", "0"), "u0", self.source)
        fv = _expr(v.get("v0", "0"), "v0", self.source)

        def init(x, y, B):
            w = np.maximum(fw(x=x, y=y, B=B) + 0.0 * x, B)
            h = w - B
            return w, h * (fu(x=x, y=y, B=B) + 0.0 * x), h * (fv(x=x, y=y, B=B) + 0.0 * x)

        base = BC.parse(v.get("bc", "extrap"))
        sides = {s: BC.parse(v[f"bc_{s}"]) if f"bc_{s}" in v else base for s in ("left", "right", "bottom", "top")}
        common.pop("m")
        c_seed = common.pop("c_seed")
        t_end = common.pop("t_end")
        return Problem("custom", Rect(x0, y0, W, H), v["m"], bottom, init, BoundarySpec(**sides), t_end, c_seed,
                       **common)


def _expr(text: str, key: str, source: str):
    try:
        code = compile(text, f"<{key}>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"{source}: cannot parse {key} = {text!r}: {exc.msg}") from None

    def f(**names):
        try:
            return np.asarray(eval(code, {"__builtins__": {}, **_NAMESPACE}, names), dtype=float)
        except (NameError, TypeError, ValueError, ArithmeticError, AttributeError) as exc:
            raise ConfigError(f"{source}: cannot evaluate {key} = {text!r}: {exc}") from None

    return f


def _convert(key: str, raw: str, where: str):
    try:
        if key in _INT:
            return int(raw)
        if key in _FLOAT:
            val = float(raw)
            if not np.isfinite(val):
                raise ValueError
            return val
        if key in _BOOL:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return low in ("true", "1", "yes")
    except ValueError:
        raise ConfigError(f"{where}: bad value for {key}: {raw!r}") from None
    return raw


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment, unknown keys are errors."""
    values: dict = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{n}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        values[key] = _convert(key, raw, where)
    if "benchmark" in values and values["benchmark"] not in BENCHMARKS:
        raise ConfigError(f"{source}: unknown benchmark {values['benchmark']!r}")
    if "source_mode" in values and values["source_mode"] not in SOURCE_MODES:
        raise ConfigError(f"{source}: source_mode must be one of {', '.join(SOURCE_MODES)}")
    for k in ("m", "t_end", "c_seed", "g", "sigma", "epsilon"):
        if k in values and not values[k] > 0:
            raise ConfigError(f"{source}: {k} must be positive")
    for k in ("regrid_every", "output_every"):
        if k in values and values[k] < 0:
            raise ConfigError(f"{source}: {k} must be nonnegative")
    cfg = RunConfig(values, source)
    cfg.sample  # noqa: B018 - validates
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text, str(path))
