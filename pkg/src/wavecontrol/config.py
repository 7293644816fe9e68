"""
Run configuration: flat ``section.key = value`` text files.

Blank lines and ``#`` comments are ignored. Lists are comma separated.
Every parse or validation failure raises :class:`ConfigError` naming the
offending key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, WaveControlError
from .geometry import SliceGeometryConfig
from .ocp import CostConfig, PGOptions
from .physics import GRAVITY, RHO_WATER, RigidBody2D, WaveEnvironment

__all__ = ["RunConfig", "parse_config", "read_config", "load_config", "dispersion_settings", "preset_path", "PRESETS", "MODES"]

MODES = ("baseline", "pressure", "membrane", "plate")
PRESETS = ("sphere2d_pressure", "sphere2d_membrane", "sphere2d_plate", "no_obstacle",
           "dispersion")

KNOWN_KEYS = {
    "mode", "seed", "output.dir",
    "wave.period", "wave.depth", "wave.amplitude", "wave.direction", "wave.rho", "wave.g",
    "geometry.half_width", "geometry.control_extent", "geometry.mesh_size",
    "geometry.points_per_wavelength", "geometry.control_spacing", "geometry.with_body",
    "body.r", "body.density",
    "cost.C", "cost.H", "cost.alpha_u", "cost.beta_u", "cost.alpha_v", "cost.beta_v",
    "control.length", "control.u0", "control.v0",
    "optimizer.tol_rel", "optimizer.tol_abs", "optimizer.max_iter", "optimizer.c1",
    "optimizer.shrink", "optimizer.max_backtracks",
    "check.directions", "check.u", "check.v",
    "dispersion.omega", "dispersion.depths",
}


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a dict of raw strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key)
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key)
        out[key] = value
    return out


class _Reader:
    def __init__(self, raw):
        self.raw = raw

    def float(self, key, default=None, positive=False, required=False):
        if key not in self.raw:
            if required or default is None:
                raise ConfigError(f"missing required key {key!r}", key)
            return default
        try:
            v = float(self.raw[key])
        except ValueError:
            raise ConfigError(f"{key}: not a number: {self.raw[key]!r}", key) from None
        if not math.isfinite(v):
            raise ConfigError(f"{key}: must be finite", key)
        if positive and not v > 0:
            raise ConfigError(f"{key}: must be positive, got {v}", key)
        return v

    def opt_float(self, key, positive=False):
        return self.float(key, positive=positive) if key in self.raw else None

    def int(self, key, default, minimum=None):
        if key not in self.raw:
            return default
        try:
            v = int(self.raw[key])
        except ValueError:
            raise ConfigError(f"{key}: not an integer: {self.raw[key]!r}", key) from None
        if minimum is not None and v < minimum:
            raise ConfigError(f"{key}: must be >= {minimum}, got {v}", key)
        return v

    def bool(self, key, default):
        if key not in self.raw:
            return default
        v = self.raw[key].lower()
        if v in ("true", "yes", "1", "on"):
            return True
        if v in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {self.raw[key]!r}", key)

    def floats(self, key, default=None):
        if key not in self.raw:
            if default is None:
                raise ConfigError(f"missing required key {key!r}", key)
            return list(default)
        try:
            return [float(s) for s in self.raw[key].split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"{key}: expected comma-separated numbers", key) from None

    def str(self, key, default):
        return self.raw.get(key, default)


@dataclass
class RunConfig:
    """Validated run configuration."""

    mode: str
    env: WaveEnvironment
    geometry: SliceGeometryConfig
    body: RigidBody2D | None
    cost: CostConfig
    optimizer: PGOptions
    output_dir: Path
    seed: int = 0
    length: float | None = None
    u0: float = 1.0
    v0: float = 0.5
    check_directions: int = 5
    check_point: tuple[float, float] = (1.0, 0.5)
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, raw: dict) -> "RunConfig":
        r = _Reader(raw)
        mode = r.str("mode", "baseline")
        if mode not in MODES:
            raise ConfigError(f"mode: expected one of {MODES}, got {mode!r}", "mode")
        rho = r.float("wave.rho", RHO_WATER, positive=True)
        g = r.float("wave.g", GRAVITY, positive=True)
        depth = r.float("wave.depth", 2.5, positive=True)
        amplitude = r.float("wave.amplitude", 1.0)
        if amplitude < 0:
            raise ConfigError("wave.amplitude: must be non-negative", "wave.amplitude")
        direction = r.int("wave.direction", 1)
        if direction not in (1, -1):
            raise ConfigError("wave.direction: must be +1 or -1", "wave.direction")
        period = r.float("wave.period", positive=True, required=True)
        env = WaveEnvironment.from_period(period, depth=depth, amplitude=amplitude, rho=rho,
                                          g=g, direction=direction)

        with_body = r.bool("geometry.with_body", True)
        radius = r.float("body.r", positive=True, required=True) if with_body \
            else r.float("body.r", 0.5, positive=True)
        h = r.opt_float("geometry.mesh_size", positive=True)
        ppw = r.opt_float("geometry.points_per_wavelength", positive=True)
        if h is not None and ppw is not None:
            raise ConfigError("give either geometry.mesh_size or geometry.points_per_wavelength",
                              "geometry.mesh_size")
        if h is None:
            h = env.wavelength / ppw if ppw is not None else 0.1
        geometry = SliceGeometryConfig(
            depth=depth,
            half_width=r.float("geometry.half_width", 4.0, positive=True),
            body_radius=radius,
            control_extent=r.float("geometry.control_extent", 0.5, positive=True),
            mesh_size=h,
            with_body=with_body,
            control_spacing=r.opt_float("geometry.control_spacing", positive=True),
        )
        try:
            geometry.check()
        except WaveControlError as exc:
            raise ConfigError(f"geometry: {exc}", "geometry") from None

        body = None
        if with_body:
            density = r.float("body.density", rho / 2, positive=True)
            body = RigidBody2D(density, radius)

        diag = r.floats("cost.C", [1.0, 1.0, 1.0])
        if len(diag) != 3:
            raise ConfigError("cost.C: expected three diagonal entries", "cost.C")
        H = r.float("cost.H", 1.0, positive=True)
        try:
            cost = CostConfig(
                alpha_u=r.float("cost.alpha_u", 1e-10 if mode == "pressure" else 1e-4, positive=True),
                beta_u=r.float("cost.beta_u", 1e-10 if mode == "pressure" else 4e-2, positive=True),
                alpha_v=r.float("cost.alpha_v", 1e-4, positive=True),
                beta_v=r.float("cost.beta_v", 4e-2, positive=True),
                height=H,
                C=np.diag([diag[0], diag[1], diag[2] * H * H]),
            )
        except ValueError as exc:
            raise ConfigError(f"cost: {exc}", "cost.C") from None

        opt = PGOptions(
            tol_rel=r.float("optimizer.tol_rel", 1e-6, positive=True),
            tol_abs=r.float("optimizer.tol_abs", 1e-12),
            max_iter=r.int("optimizer.max_iter", 500, minimum=0),
            c1=r.float("optimizer.c1", 1e-4, positive=True),
            shrink=r.float("optimizer.shrink", 0.5, positive=True),
            max_backtracks=r.int("optimizer.max_backtracks", 40, minimum=1),
        )
        if not opt.shrink < 1:
            raise ConfigError("optimizer.shrink: must lie in (0, 1)", "optimizer.shrink")
        if not opt.c1 < 1:
            raise ConfigError("optimizer.c1: must lie in (0, 1)", "optimizer.c1")

        # relative to the working directory, not the config file
        out = Path(r.str("output.dir", "output"))

        u0 = r.float("control.u0", 1.0, positive=True)
        v0 = r.float("control.v0", 0.5, positive=True)
        if not v0 < 1:
            raise ConfigError("control.v0: must lie in (0, 1)", "control.v0")
        return cls(
            mode=mode, env=env, geometry=geometry, body=body, cost=cost, optimizer=opt,
            output_dir=out, seed=r.int("seed", 0), length=r.opt_float("control.length", True),
            u0=u0, v0=v0,
            check_directions=r.int("check.directions", 5, minimum=1),
            check_point=(r.float("check.u", 1.0, positive=True),
                         r.float("check.v", 0.5, positive=True)),
            raw=dict(raw),
        )


def read_config(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def load_config(path) -> RunConfig:
    return RunConfig.from_mapping(read_config(path))


def dispersion_settings(raw: dict):
    """``(omega array, depth list, g)`` for the dispersion table.

    ``wave.period``, when present, adds its frequency to the grid.
    """
    r = _Reader(raw)
    vals = r.floats("dispersion.omega")
    if len(vals) != 3 or vals[2] != int(vals[2]) or vals[2] < 1:
        raise ConfigError("dispersion.omega: expected 'start, stop, count'", "dispersion.omega")
    omega = np.linspace(vals[0], vals[1], int(vals[2]))
    if not np.all(omega > 0):
        raise ConfigError("dispersion.omega: frequencies must be positive", "dispersion.omega")
    if "wave.period" in raw:
        omega = np.union1d(omega, [2 * math.pi / r.float("wave.period", positive=True)])
    depths = r.floats("dispersion.depths", [r.float("wave.depth", 2.5, positive=True)])
    if not depths or not all(d > 0 for d in depths):
        raise ConfigError("dispersion.depths: depths must be positive", "dispersion.depths")
    return omega, depths, r.float("wave.g", GRAVITY, positive=True)


def preset_path(name: str) -> Path:
    """Filesystem path of a bundled preset (``name`` without extension)."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return Path(str(resources.files("wavecontrol") / "presets" / f"{name}.cfg"))
