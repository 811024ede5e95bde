"""Scenario configuration and its TOML representation.

Complex impedances are written as ``[re, im]`` pairs.  Optional fields that
are unset are omitted from the emitted document.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli
import tomli_w
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import ConfigError
from .optimizer import OptimizerConfig


@dataclass
class RisSpec:
    rows: int | None = 14
    cols: int | None = 14
    aperture_m: float | None = None
    spacing_wavelengths: float = 0.25


@dataclass
class ElementSpec:
    length_wavelengths: float = 1 / 32
    radius_wavelengths: float = 1 / 500
    length_equals_spacing: bool = False


@dataclass
class AntennaSpec:
    position_m: tuple[float, float, float] = (0.0, 0.0, 0.0)
    length_wavelengths: float = 1 / 32
    radius_wavelengths: float = 1 / 500


@dataclass
class SweepSpec:
    spacings_wavelengths: list[float] = field(default_factory=lambda: [0.5, 0.25, 0.125])


@dataclass
class BenchmarkSpec:
    """Settings of the approximate-model benchmark; recorded for provenance, unused."""

    m: int = 50
    delta: float = 0.0039


@dataclass
class ScenarioConfig:
    frequency_hz: float = 3.5e9
    ris: RisSpec = field(default_factory=RisSpec)
    element: ElementSpec = field(default_factory=ElementSpec)
    tx: AntennaSpec = field(default_factory=lambda: AntennaSpec((10.0, -1.0, 0.0)))
    rx: AntennaSpec = field(default_factory=lambda: AntennaSpec((10.0, 99.0, 0.0)))
    z_g: complex = 50 + 50j
    z_l: complex = 50 + 50j
    r0_ohm: float = 1e-3
    bounds_ohm: tuple[float, float] = (-1e4, 1e4)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    coupling_aware: bool = True
    include_direct_link: bool = False
    impedance_file: str | None = None
    sweep: SweepSpec = field(default_factory=SweepSpec)
    benchmark: BenchmarkSpec = field(default_factory=BenchmarkSpec)

    def __post_init__(self):
        self.z_g = complex(self.z_g)
        self.z_l = complex(self.z_l)
        self.bounds_ohm = tuple(float(b) for b in self.bounds_ohm)
        self.tx.position_m = tuple(float(v) for v in self.tx.position_m)
        self.rx.position_m = tuple(float(v) for v in self.rx.position_m)
        self.validate()

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz

    def validate(self) -> None:
        if not self.frequency_hz > 0:
            raise ConfigError("frequency_hz must be positive")
        positive = {
            "ris.spacing_wavelengths": self.ris.spacing_wavelengths,
            "element.length_wavelengths": self.element.length_wavelengths,
            "element.radius_wavelengths": self.element.radius_wavelengths,
            "tx.length_wavelengths": self.tx.length_wavelengths,
            "tx.radius_wavelengths": self.tx.radius_wavelengths,
            "rx.length_wavelengths": self.rx.length_wavelengths,
            "rx.radius_wavelengths": self.rx.radius_wavelengths,
        }
        if self.ris.aperture_m is not None:
            positive["ris.aperture_m"] = self.ris.aperture_m
        for name, v in positive.items():
            if not v > 0:
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if self.ris.aperture_m is None and not (self.ris.rows and self.ris.cols and self.ris.rows > 0
                                                and self.ris.cols > 0):
            raise ConfigError("ris needs rows and cols, or aperture_m")
        if any(not s > 0 for s in self.sweep.spacings_wavelengths):
            raise ConfigError("sweep spacings must be positive")
        lo, hi = self.bounds_ohm
        if not lo < hi:
            raise ConfigError("bounds_ohm must be [z_min, z_max] with z_min < z_max")
        if not self.r0_ohm >= 0:
            raise ConfigError("r0_ohm must be non-negative")

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)

    def geometry_key(self) -> str:
        """Content hash of everything the fixed impedances depend on."""
        doc = to_dict(self)
        geom = {k: doc.get(k) for k in ("frequency_hz", "ris", "element", "tx", "rx", "include_direct_link")}
        blob = json.dumps(geom, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:20]


def _plain(obj: Any) -> Any:
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if getattr(obj, f.name) is not None}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def to_dict(cfg: ScenarioConfig) -> dict:
    return _plain(cfg)


def _build(cls, data: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"[{where}]: {exc}") from None


def _complex(v, name: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(f"{name} must be [re, im], got {v!r}")


def from_dict(doc: dict) -> ScenarioConfig:
    doc = dict(doc)
    nested = {
        "ris": RisSpec, "element": ElementSpec, "tx": AntennaSpec, "rx": AntennaSpec,
        "optimizer": OptimizerConfig, "sweep": SweepSpec, "benchmark": BenchmarkSpec,
    }
    for key, cls in nested.items():
        if key in doc:
            if not isinstance(doc[key], dict):
                raise ConfigError(f"[{key}] must be a table")
            if key == "ris":
                doc[key] = {"rows": None, "cols": None, **doc[key]}
            doc[key] = _build(cls, doc[key], key)
    for key in ("z_g", "z_l"):
        if key in doc:
            doc[key] = _complex(doc[key], key)
    if "optimizer" in doc and "coupling_aware" not in doc:
        doc["coupling_aware"] = doc["optimizer"].coupling_aware
    cfg = _build(ScenarioConfig, doc, "top level")
    cfg.optimizer.coupling_aware = cfg.coupling_aware
    return cfg


def loads(text: str) -> ScenarioConfig:
    try:
        return from_dict(tomli.loads(text))
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None


def dumps(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = loads(text)
    if cfg.impedance_file is not None and not Path(cfg.impedance_file).is_absolute():
        cfg.impedance_file = str(path.parent / cfg.impedance_file)
    return cfg
