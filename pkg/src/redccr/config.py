"""Key-value experiment configuration (INI syntax, read with configparser).

Every experiment section may override the keys of ``[grid]`` and
``[profile]``; anything not set falls back to those sections and then to
the built-in defaults below.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .exceptions import ConfigError, GridSpecError, ProfileError
from .grid import PROFILE_TEMPLATES, GridSpec

DEFAULT_CONFIG = """\
[run]
seed = 20240611
output_dir = results

[grid]
k_min = 0.5
k_max = 2.0
n_radial = 2
n_polar = 1
n_azimuth = 2

[profile]
template = lognormal
eps = 1.0
sigma = 1.0
power = 1.0
scale = 1.0

[ccr]
n_radial = 2
n_azimuth = 1
N = 2
n_max = 2
trials = 20
tol = 1e-12

[theorem1]
n_radial = 3
n_azimuth = 1
m = 2
m_prime = 2
N_list = 4, 8, 16, 32, 64
slope_target = -1.0
slope_tol = 0.1
oracle_m = 1, 2, 3
oracle_N = 1, 2, 3, 4
oracle_n_max =
oracle_cap = 6000000
two_point_N = 2, 4, 8
tol = 1e-10

[displacement]
n_radial = 1
n_azimuth = 1
N = 2
n_max = 4
beta = 0.2
level = 2
conj_n_max = 8
conj_level = 2
conj_beta = 0.2
trials = 5
tol = 1e-8

[poisson]
N_list = 8, 16, 32
lam = 1.0
n_max = 14
tol = 0.01

[fields]
profiles = 10
points = 4
dense_N = 2
dense_n_max = 10
dense_alpha = 0.3
dense_tol = 1e-8
scan_t = 0.0, 0.5, 1.0, 1.5, 2.0
tol = 1e-12

[covariance]
k_min = 1.0
n_radial = 1
n_polar = 2
n_azimuth = 4
N = 2
n_max = 2
translations = 3
cocycle_pairs = 50
tol = 1e-10
cocycle_tol = 1e-9
tetrad_tol = 1e-12

[radiation]
k_min = 0.1
k_max = 10.0
halvings = 6
n_radial = 64
n_polar = 2
n_azimuth = 4
template = power_exp
angular = isotropic
strength = 1.0
r2_min = 0.999
cauchy_tol = 0.01
dense_N = 1, 2
dense_n_max = 6
conj_n_max = 3
identity_tol = 1e-12
dense_tol = 1e-8
"""

GRID_KEYS = ("k_min", "k_max", "n_radial", "n_polar", "n_azimuth")
PROFILE_PARAM_KEYS = ("eps", "sigma", "power", "scale")
EXPERIMENTS = ("ccr", "theorem1", "displacement", "poisson", "fields", "covariance", "radiation")


@dataclass(frozen=True)
class Section:
    """Typed read access to one experiment section."""

    name: str
    parser: configparser.ConfigParser

    def _raw(self, key: str) -> Optional[str]:
        for sec in (self.name, "grid", "profile"):
            if self.parser.has_option(sec, key):
                return self.parser.get(sec, key)
        return None

    def _require(self, key: str) -> str:
        raw = self._raw(key)
        if raw is None:
            raise ConfigError(f"[{self.name}] missing key {key!r}")
        return raw

    def _convert(self, key: str, raw: str, typ):
        try:
            return typ(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a valid {typ.__name__}") from None

    def has(self, key: str) -> bool:
        return self._raw(key) is not None

    def get_str(self, key: str) -> str:
        return self._require(key).strip()

    def get_int(self, key: str) -> int:
        return self._convert(key, self._require(key).strip(), int)

    def get_float(self, key: str) -> float:
        return self._convert(key, self._require(key).strip(), float)

    def get_optional_int(self, key: str) -> Optional[int]:
        raw = self._raw(key)
        if raw is None or not raw.strip():
            return None
        return self._convert(key, raw.strip(), int)

    def get_list(self, key: str, typ=float) -> list:
        raw = self._require(key)
        items = [s.strip() for s in raw.split(",") if s.strip()]
        return [self._convert(key, s, typ) for s in items]

    def grid_spec(self) -> GridSpec:
        vals = {k: self._require(k).strip() for k in GRID_KEYS}
        try:
            spec = GridSpec(float(vals["k_min"]), float(vals["k_max"]), int(vals["n_radial"]),
                            int(vals["n_polar"]), int(vals["n_azimuth"]))
        except ValueError as exc:
            raise ConfigError(f"[{self.name}] bad grid value: {exc}") from None
        if not 0 < spec.k_min < spec.k_max or min(spec.n_radial, spec.n_polar, spec.n_azimuth) < 1:
            raise ConfigError(f"[{self.name}] invalid grid {spec}")
        return spec

    def profile_args(self) -> tuple[str, dict]:
        template = self.get_str("template")
        if template not in PROFILE_TEMPLATES:
            raise ConfigError(f"[{self.name}] unknown profile template {template!r}")
        params = {k: self.get_float(k) for k in PROFILE_PARAM_KEYS if self._raw(k) is not None}
        return template, params

    def as_dict(self) -> dict:
        """Effective key-value view (section, then grid/profile fallbacks), for manifests."""
        keys = set(self.parser.options(self.name)) if self.parser.has_section(self.name) else set()
        keys |= set(GRID_KEYS) | {"template"} | set(PROFILE_PARAM_KEYS)
        return {k: self._raw(k).strip() for k in sorted(keys) if self._raw(k) is not None}


@dataclass(frozen=True)
class ExperimentConfig:
    parser: configparser.ConfigParser
    source: str = "<default>"

    @property
    def seed(self) -> int:
        return Section("run", self.parser).get_int("seed")

    @property
    def output_dir(self) -> Path:
        return Path(Section("run", self.parser).get_str("output_dir"))

    def section(self, name: str) -> Section:
        if name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment section {name!r}")
        return Section(name, self.parser)


def _new_parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(interpolation=None)
    p.optionxform = str  # keep N, N_list as written
    return p


def load_config(path=None, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Defaults, then the file at ``path``, then ``section.key=value`` overrides."""
    parser = _new_parser()
    parser.read_string(DEFAULT_CONFIG)
    source = "<default>"
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"config parse error in {path}: {exc}") from None
        source = str(path)
    for item in overrides:
        key, sep, value = item.partition("=")
        sec, dot, opt = key.strip().partition(".")
        if not sep or not dot or not opt:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        if not parser.has_section(sec):
            raise ConfigError(f"override names unknown section {sec!r}")
        parser.set(sec, opt, value.strip())
    cfg = ExperimentConfig(parser, source)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    """Fail early on values every experiment needs."""
    _ = cfg.seed, cfg.output_dir
    for name in EXPERIMENTS:
        sec = cfg.section(name)
        try:
            sec.grid_spec()
            sec.profile_args()
        except (GridSpecError, ProfileError) as exc:
            raise ConfigError(str(exc)) from None


def default_config_text() -> str:
    return DEFAULT_CONFIG
