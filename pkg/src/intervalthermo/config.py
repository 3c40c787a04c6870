"""Run configuration read from INI-style files.

Example::

    [run]
    t_min = -3
    t_max = 2
    t_steps = 51
    depth = 12

    [map]
    name = chebyshev

A custom map lists its branches as ``left, right: expression`` lines::

    [map]
    name = custom
    kind = smooth-multimodal
    critical = 0.5:2
    branches =
        0, 0.5: 4*x*(1-x)
        0.5, 1: 4*x*(1-x)
"""

from dataclasses import dataclass, field, replace
import configparser
import math

from . import maps
from .errors import ConfigError

#: resource caps; cylinder depth is limited by ``2^depth`` cylinders for two-branch maps
MAX_DEPTH = 24
MAX_T_MAX = 200
MAX_R = 40
MAX_STEPS = 2001

_RUN_KEYS = {"t_min", "t_max", "t_steps", "depth", "T_max", "R", "orbit_period", "threads",
             "out_dir", "prefix", "emit_plot"}
_MAP_KEYS = {"name", "gamma", "rho", "branches", "critical", "kind"}
_TOLERANCE_KEYS = ("kink_factor", "agreement_floor", "acip_tol", "slope_tol")


@dataclass
class RunConfig:
    map_name: str = "tent"
    map_params: dict = field(default_factory=dict)
    branches: list = field(default_factory=list)
    critical: list = field(default_factory=list)
    kind: str = maps.SMOOTH
    t_min: float = -2.0
    t_max: float = 2.0
    t_steps: int = 41
    depth: int = 12
    T_max: int = 30
    R: int = 12
    orbit_period: int = 8
    threads: int = 1
    emit_plot: bool = True
    out_dir: str = "."
    prefix: str = ""
    tolerances: dict = field(default_factory=dict)

    def validate(self):
        if not (math.isfinite(self.t_min) and math.isfinite(self.t_max)):
            raise ConfigError("t_min and t_max must be finite")
        if self.t_min >= self.t_max:
            raise ConfigError(f"t_min ({self.t_min}) must be smaller than t_max ({self.t_max})")
        if not 2 <= self.t_steps <= MAX_STEPS:
            raise ConfigError(f"t_steps must lie in [2, {MAX_STEPS}]")
        if not 3 <= self.depth <= MAX_DEPTH:
            raise ConfigError(f"depth must lie in [3, {MAX_DEPTH}]")
        if not 1 <= self.T_max <= MAX_T_MAX:
            raise ConfigError(f"T_max must lie in [1, {MAX_T_MAX}]")
        if not 0 <= self.R <= MAX_R:
            raise ConfigError(f"R must lie in [0, {MAX_R}]")
        if self.orbit_period < 1:
            raise ConfigError("orbit_period must be positive")
        if self.threads < 0:
            raise ConfigError("threads must be >= 0 (0 = auto)")
        if self.map_name == "custom" and not self.branches:
            raise ConfigError("custom map needs a 'branches' entry")
        if self.map_name != "custom" and self.map_name not in maps.BUILTINS:
            raise ConfigError(f"unknown map {self.map_name!r}; built-ins: {sorted(maps.BUILTINS)}")
        for key, val in self.tolerances.items():
            if key not in _TOLERANCE_KEYS:
                raise ConfigError(f"unknown tolerance {key!r}")
            if not val >= 0:
                raise ConfigError(f"tolerance {key} must be non-negative")
        return self

    @property
    def label(self):
        return self.prefix or self.map_name

    def build_map(self):
        try:
            if self.map_name == "custom":
                return maps.from_expressions(self.branches, self.critical, self.kind, name="custom")
            return maps.builtin(self.map_name, **self.map_params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"cannot build map: {exc}") from exc

    def curve_config(self):
        from .pressure import CurveConfig

        cfg = CurveConfig(depth=self.depth, T_max=self.T_max, R=self.R,
                          orbit_period=self.orbit_period, threads=self.threads)
        return replace(cfg, **self.tolerances)

    def grid(self):
        import numpy as np

        return np.linspace(self.t_min, self.t_max, self.t_steps)


def _float(sec, key, default):
    try:
        return sec.getfloat(key, fallback=default)
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: {exc}") from exc


def _int(sec, key, default):
    try:
        return sec.getint(key, fallback=default)
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: {exc}") from exc


def _parse_branches(text):
    pieces = []
    for line in text.strip().splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            interval, expression = line.split(":", 1)
            left, right = (float(v) for v in interval.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad branch line {line!r}; expected 'left, right: expression'") from exc
        pieces.append((left, right, expression.strip()))
    return pieces


def _parse_critical(text):
    out = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        try:
            c, order = item.split(":") if ":" in item else (item, "2")
            out.append((float(c), float(order)))
        except ValueError as exc:
            raise ConfigError(f"bad critical point {item!r}; expected 'c:order'") from exc
    return out


def parse_config(text):
    """Parse configuration text into a validated :class:`RunConfig`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";",))
    cp.optionxform = str  # keep ``T_max`` distinct from ``t_max``
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if not cp.has_section("map"):
        raise ConfigError("missing [map] section")
    run = cp["run"] if cp.has_section("run") else cp["DEFAULT"]
    msec = cp["map"]
    for sec, known in ((run, _RUN_KEYS), (msec, _MAP_KEYS)):
        extra = set(sec) - known - set(cp.defaults())
        if extra:
            raise ConfigError(f"unknown keys in [{sec.name}]: {sorted(extra)}")
    d = RunConfig()
    cfg = RunConfig(
        map_name=msec.get("name", d.map_name).strip().lower(),
        t_min=_float(run, "t_min", d.t_min),
        t_max=_float(run, "t_max", d.t_max),
        t_steps=_int(run, "t_steps", d.t_steps),
        depth=_int(run, "depth", d.depth),
        T_max=_int(run, "T_max", d.T_max),
        R=_int(run, "R", d.R),
        orbit_period=_int(run, "orbit_period", d.orbit_period),
        threads=_int(run, "threads", d.threads),
        out_dir=run.get("out_dir", d.out_dir),
        prefix=run.get("prefix", d.prefix),
    )
    try:
        cfg.emit_plot = run.getboolean("emit_plot", fallback=True)
    except ValueError as exc:
        raise ConfigError(f"[run] emit_plot: {exc}") from exc
    for key in ("gamma", "rho"):
        if key in msec:
            cfg.map_params[key] = _float(msec, key, None)
    if "branches" in msec:
        cfg.branches = _parse_branches(msec["branches"])
    if "critical" in msec:
        cfg.critical = _parse_critical(msec["critical"])
    cfg.kind = msec.get("kind", maps.SMOOTH).strip()
    if cfg.kind not in (maps.SMOOTH, maps.CUSP):
        raise ConfigError(f"unknown map kind {cfg.kind!r}")
    if cp.has_section("tolerances"):
        for key in cp["tolerances"]:
            cfg.tolerances[key] = _float(cp["tolerances"], key, None)
    return cfg.validate()


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
