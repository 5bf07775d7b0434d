"""Run configuration: physical defaults and a flat ``key = value`` file format."""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .flows import Integrator

DEFAULT_GRID = {1: 64, 2: 16}
DEFAULT_STEPS = 200


class ConfigError(ValueError):
    """Invalid configuration file or value."""


def _floats(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).replace(",", " ").split())


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one command run.

    ``grid_size`` defaults to 64 for n = 1 and 16 for n = 2.
    """

    n: int = 1
    grid_size: int | None = None
    steps: int = DEFAULT_STEPS
    closed_tol: float = 1e-6
    path_closed_tol: float = 1e-2
    endpoint_tol: float = 1e-3
    flux_tol: float = 1e-8
    check_tol: float = 1e-3
    inverse_tol: float = 1e-10
    seed: int = 0
    out: str = "out"
    interp: str = "auto"
    s_steps: int = 20
    amplitude: float = 0.005
    samples: int = 5
    # scenario parameters
    rotation: tuple = (0.3, 0.4)
    reparam: tuple = (1, 2, 10)
    nu: float = 0.25
    a1: float = 0.3
    energy_step: float = 0.05
    conj_amplitude: float = 0.05
    conj_widths: tuple = (0.08, 0.04, 0.02, 0.01)
    shift: float = 0.25
    plot: bool = False

    def __post_init__(self):
        if self.grid_size is None:
            object.__setattr__(self, "grid_size", DEFAULT_GRID.get(self.n, 8))
        for name in ("n", "grid_size", "steps", "s_steps", "samples"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.grid_size < 2 or self.steps < 2:
            raise ConfigError("grid_size and steps must be at least 2")
        for name in ("closed_tol", "path_closed_tol", "endpoint_tol", "flux_tol", "check_tol",
                     "inverse_tol", "amplitude", "energy_step"):
            v = float(getattr(self, name))
            if not (v > 0 and np.isfinite(v)):
                raise ConfigError(f"{name} must be positive, got {v}")
        if len(self.rotation) != 2 * self.n:
            raise ConfigError(f"rotation needs {2 * self.n} entries, got {len(self.rotation)}")
        if any(int(j) < 1 for j in self.reparam):
            raise ConfigError("reparam indices must be positive")

    @classmethod
    def fields(cls) -> dict:
        return {f.name: f for f in dataclasses.fields(cls)}

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        """Build from string or typed values; unknown keys are an error."""
        known = cls.fields()
        kwargs = {}
        for key, raw in values.items():
            name = key.strip().replace("-", "_")
            if name not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
            kwargs[name] = _convert(name, raw)
        n = int(kwargs.get("n", 1))
        if "rotation" not in kwargs and n != 1:
            kwargs["rotation"] = (0.3,) + (0.0,) * (2 * n - 2) + (0.4,)
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **changes) -> "RunConfig":
        merged = {k: getattr(self, k) for k in self.fields()}
        merged.update({k: v for k, v in changes.items() if v is not None})
        if changes.get("n") is not None and changes["n"] != self.n:
            for key in ("grid_size", "rotation"):
                if changes.get(key) is None:
                    merged.pop(key)
        return RunConfig.from_mapping(merged)

    def integrator(self) -> Integrator:
        return Integrator(interp=self.interp, inverse_tol=self.inverse_tol,
                          closed_tol=self.path_closed_tol)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def to_dict(self) -> dict:
        out = {}
        for k in self.fields():
            v = getattr(self, k)
            out[k] = list(v) if isinstance(v, tuple) else v
        return out


def _convert(name: str, raw):
    target = RunConfig.fields()[name]
    if not isinstance(raw, str):
        return tuple(raw) if isinstance(raw, list) else raw
    text = raw.strip()
    try:
        if name in ("rotation", "conj_widths"):
            return _floats(text)
        if name == "reparam":
            return tuple(int(x) for x in _floats(text))
        if name == "grid_size" and text.lower() in ("", "auto", "none"):
            return None
        if name == "plot":
            return text.lower() in ("1", "true", "yes", "on")
        if target.type in ("int", "int | None"):
            return int(text)
        if target.type == "float":
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return text


def load_config(path) -> RunConfig:
    """Read a flat ``key = value`` file (``#`` comments allowed).

    Raises
    ------
    ConfigError
        On unreadable files, section headers, unknown keys or bad values.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if parser.sections() != ["run"]:
        raise ConfigError(f"config {path} must be flat; found sections {parser.sections()[1:]}")
    return RunConfig.from_mapping(dict(parser["run"]))
