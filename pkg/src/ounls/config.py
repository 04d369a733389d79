"""Configuration parsing: flat INI sections [model], [grid], [initial], [run].

Unknown keys are hard errors, defaults are filled for everything else, and
physically inadmissible requests (odd nonlinearity power, excluded
space-time exponent pairs) are rejected here with exit-code-1 semantics.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .models import DiscretizationSpec, ModelSpec

SCENARIOS = (
    "simulate",
    "conservation",
    "strichartz",
    "embeddings",
    "scattering",
    "blowup",
    "identity",
    "all",
)


class ConfigError(ValueError):
    """Malformed, unknown or inadmissible configuration input."""


@dataclass
class InitialData:
    kind: str = "gaussian"  # gaussian | random
    amplitude: float = 1.0
    x_width: float = 1.0
    alpha_width: float = math.sqrt(2.0)
    wavenumber: float = 0.0
    band: int = 8

    def validate(self):
        if self.kind not in ("gaussian", "random"):
            raise ConfigError(f"unknown initial data kind {self.kind!r}")
        for name in ("amplitude", "x_width", "alpha_width"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"initial.{name} must be positive")
        if self.band < 1:
            raise ConfigError("initial.band must be >= 1")


@dataclass
class ScenarioConfig:
    scenario: str = "simulate"
    model: ModelSpec = field(default_factory=lambda: ModelSpec("nondiv", 1, 4))
    disc: DiscretizationSpec = field(default_factory=DiscretizationSpec)
    initial: InitialData = field(default_factory=InitialData)
    horizon: float = 1.0
    dt: float = 1e-3
    n_samples: int = 101
    seed: int = 1234
    ensemble: int = 64
    threads: int = 1
    strichartz_q: float = 6.0
    strichartz_r: float = 6.0
    scattering_delta: float = 0.05
    scattering_ladder: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0)
    out_dir: str = "out"

    def sample_times(self):
        import numpy as np

        return np.linspace(0.0, self.horizon, self.n_samples)


def check_admissible_pair(q: float, r: float, dim: int):
    """Space-time exponent admissibility: 2/q + d/r = d/2, q,r >= 2,
    excluding (q, r, d) = (2, inf, 2)."""
    if q < 2 or r < 2:
        raise ConfigError(f"(q, r) = ({q}, {r}) rejected: exponents must be >= 2")
    lhs = 2.0 / q + (dim / r if not math.isinf(r) else 0.0)
    if abs(lhs - dim / 2.0) > 1e-12:
        raise ConfigError(
            f"(q, r) = ({q}, {r}) is not admissible in dimension {dim}: "
            f"2/q + d/r = {lhs:.6g} != d/2 = {dim / 2.0:.6g}"
        )
    if q == 2 and math.isinf(r) and dim == 2:
        raise ConfigError(
            "(q, r, d) = (2, inf, 2) is the excluded endpoint pair"
        )


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}

_SIGNS = {"defocusing": +1, "focusing": -1, "+1": +1, "-1": -1, "1": +1}


def _parse_float(section, key, raw):
    try:
        if raw in ("inf", "infinity"):
            return math.inf
        return float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key} must be a number, got {raw!r}") from None


def _parse_int(section, key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key} must be an integer, got {raw!r}") from None


# section -> key -> (target attribute path, parser)
_SCHEMA = {
    "model": {
        "model": ("model.model", str),
        "d": ("model.d", "int"),
        "p": ("model.p", "int"),
        "sign": ("model.sign", "sign"),
    },
    "grid": {
        "n_x": ("disc.n_x", "int"),
        "box_half_length": ("disc.box_half_length", "float"),
        "n_alpha": ("disc.n_alpha", "int"),
        "div_nodes": ("disc.div_nodes", "int"),
        "div_half_width": ("disc.div_half_width", "float"),
        "dealias": ("disc.dealias", "bool"),
    },
    "initial": {
        "kind": ("initial.kind", str),
        "amplitude": ("initial.amplitude", "float"),
        "x_width": ("initial.x_width", "float"),
        "alpha_width": ("initial.alpha_width", "float"),
        "wavenumber": ("initial.wavenumber", "float"),
        "band": ("initial.band", "int"),
    },
    "run": {
        "scenario": ("scenario", str),
        "t": ("horizon", "float"),
        "dt": ("dt", "float"),
        "samples": ("n_samples", "int"),
        "seed": ("seed", "int"),
        "ensemble": ("ensemble", "int"),
        "threads": ("threads", "int"),
        "q": ("strichartz_q", "float"),
        "r": ("strichartz_r", "float"),
        "delta": ("scattering_delta", "float"),
        "out": ("out_dir", str),
    },
}


def _coerce(section, key, raw, kind):
    if kind == "int":
        return _parse_int(section, key, raw)
    if kind == "float":
        return _parse_float(section, key, raw)
    if kind == "bool":
        if raw.lower() not in _BOOL:
            raise ConfigError(f"{section}.{key} must be a boolean, got {raw!r}")
        return _BOOL[raw.lower()]
    if kind == "sign":
        if raw.lower() not in _SIGNS:
            raise ConfigError(
                f"{section}.{key} must be 'defocusing' or 'focusing', got {raw!r}"
            )
        return _SIGNS[raw.lower()]
    return raw


def parse_config(path: str | None = None, overrides: list[str] | None = None) -> ScenarioConfig:
    """Resolve a ScenarioConfig from a file and/or ``section.key=value``
    override strings; unknown keys are hard errors."""
    staged: dict[str, dict[str, str]] = {}

    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                staged.setdefault(section, {})[key] = raw

    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        target, raw = item.split("=", 1)
        if "." not in target:
            raise ConfigError(f"override key {target!r} must be section.key")
        section, key = target.split(".", 1)
        staged.setdefault(section, {})[key] = raw

    # model fields must be built atomically (frozen dataclass with validation)
    model_kw = {"model": "nondiv", "d": 1, "p": 4, "sign": +1}
    disc_kw: dict = {}
    cfg = ScenarioConfig()

    for section, entries in staged.items():
        schema = _SCHEMA.get(section)
        if schema is None:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in entries.items():
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            target, kind = schema[key]
            value = _coerce(section, key, raw, kind)
            if target.startswith("model."):
                model_kw[target.split(".", 1)[1]] = value
            elif target.startswith("disc."):
                disc_kw[target.split(".", 1)[1]] = value
            elif target.startswith("initial."):
                setattr(cfg.initial, target.split(".", 1)[1], value)
            else:
                setattr(cfg, target, value)

    try:
        cfg.model = ModelSpec(
            model_kw["model"], model_kw["d"], model_kw["p"], model_kw["sign"]
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.disc = DiscretizationSpec(**disc_kw)
    cfg.initial.validate()

    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}; expected one of {SCENARIOS}")
    if cfg.horizon <= 0:
        raise ConfigError("run.t must be positive")
    if cfg.dt <= 0:
        raise ConfigError("run.dt must be positive")
    if cfg.n_samples < 2:
        raise ConfigError("run.samples must be >= 2")
    if cfg.ensemble < 1:
        raise ConfigError("run.ensemble must be >= 1")
    if cfg.threads < 1:
        raise ConfigError("run.threads must be >= 1")
    if cfg.scenario == "strichartz":
        check_admissible_pair(cfg.strichartz_q, cfg.strichartz_r, cfg.model.dim)
    return cfg
