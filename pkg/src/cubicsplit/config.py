"""Analysis configuration: presets, JSON/TOML loading and a stable hash."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from .errors import ConfigParseError, UnknownPreset
from .field import CubicField, parse_rational

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

FIELD_KEYS = ("r0", "r1", "r2", "a0", "a1", "a2")


@dataclass(frozen=True)
class AnalysisConfig:
    r0: Fraction
    r1: Fraction
    r2: Fraction
    a0: Fraction = Fraction(0)
    a1: Fraction = Fraction(0)
    a2: Fraction = Fraction(1)
    rho: float = 1.0
    precision_digits: int = 30
    gamma_cut: float | None = None
    kmax: int = 200
    zeta_min: float | None = None
    zeta_max: float | None = None
    zeta_step: float = 1e-3
    torus_res: int = 1024
    window: str = "ceil"
    delta_override: float | None = None
    eps_values: tuple[float, ...] = (1e-6,)
    mu: float | None = None
    out_dir: str = "out"
    preset: str | None = None

    def __post_init__(self):
        for key in FIELD_KEYS:
            try:
                object.__setattr__(self, key, parse_rational(getattr(self, key)))
            except (TypeError, ValueError) as exc:
                raise ConfigParseError(f"{key}: {exc}") from exc
        if not self.rho > 0:
            raise ConfigParseError("rho must be positive")
        if int(self.precision_digits) < 17:
            raise ConfigParseError("precision_digits must be at least 17")
        if self.kmax < 1 or self.torus_res < 2 or not self.zeta_step > 0:
            raise ConfigParseError("kmax, torus_res and zeta_step must be positive")
        if self.zeta_min is not None and self.zeta_max is not None and not self.zeta_max > self.zeta_min:
            raise ConfigParseError("zeta range is empty")
        if self.window not in ("ceil", "floor"):
            raise ConfigParseError("window must be 'ceil' or 'floor'")
        if any(not e > 0 for e in self.eps_values):
            raise ConfigParseError("eps values must be positive")

    def field(self) -> CubicField:
        return CubicField(self.r0, self.r1, self.r2, self.a0, self.a1, self.a2,
                          precision_digits=int(self.precision_digits))

    def replace(self, **changes) -> "AnalysisConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        for key in FIELD_KEYS:
            d[key] = str(d[key])
        d["eps_values"] = list(d["eps_values"])
        return d

    def digest(self) -> str:
        """sha256 of the canonical JSON form, ignoring where outputs go."""
        d = self.to_dict()
        d.pop("out_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


PRESETS: dict[str, dict[str, Any]] = {
    "cubic-golden": {"r0": 1, "r1": -1, "r2": 0, "a0": 0, "a1": 0, "a2": 1, "rho": 1.0},
    "cubic-golden-delta0": {"r0": 1, "r1": -1, "r2": 0, "a0": 0, "a1": 0, "a2": 1, "rho": 1.0,
                            "delta_override": 0.0},
}


def preset(name: str, **overrides) -> AnalysisConfig:
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}")
    data = dict(PRESETS[name])
    data.update(overrides)
    data["preset"] = name
    return from_mapping(data)


def from_mapping(data: dict[str, Any]) -> AnalysisConfig:
    names = {f.name for f in dataclasses.fields(AnalysisConfig)}
    unknown = set(data) - names
    if unknown:
        raise ConfigParseError(f"unknown config keys: {', '.join(sorted(unknown))}")
    missing = [k for k in ("r0", "r1", "r2") if k not in data]
    if missing:
        raise ConfigParseError(f"missing field coefficients: {', '.join(missing)}")
    data = dict(data)
    if "eps_values" in data:
        data["eps_values"] = tuple(float(e) for e in data["eps_values"])
    try:
        return AnalysisConfig(**data)
    except TypeError as exc:
        raise ConfigParseError(str(exc)) from exc


def load(path: str | Path) -> AnalysisConfig:
    """Read a JSON or TOML config (chosen by suffix, JSON otherwise)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(raw.decode())
        else:
            data = json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigParseError(f"{path}: top level must be a table")
    if "preset" in data and not any(k in data for k in FIELD_KEYS):
        name = data.pop("preset")
        return preset(name, **data)
    return from_mapping(data)
