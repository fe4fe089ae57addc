"""Run configuration: a TOML (or JSON) file with unit-suffixed physical values.

Example:

    schema_version = 1

    [trap]
    axial = "70 kHz"
    radial = "350 kHz"

    [lattice]
    detuning = "0.76 THz"
    max_depth = "25 mK"

    [crystal]
    n_ions = 8
    seed = 1

Frequencies are written in Hz and stored as angular frequencies; depths are
written as temperatures (U0 / kB). Everything is converted to SI at parse time.
"""

import hashlib
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import constants
from .crystal import TrapConfig
from .ensemble import BeamProfile, ScatteringScenario
from .errors import ConfigError, DomainError
from .pendulum import IonSpecies, LatticeConfig, RampProfile
from .thermometry import ImagingConfig

SCHEMA_VERSION = 1

UNITS = {
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12},
    "temperature": {"K": 1.0, "mK": 1e-3, "uK": 1e-6},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "mass": {"kg": 1.0, "u": constants.ATOMIC_MASS},
    "intensity": {"W/m2": 1.0, "W/cm2": 1e4},
    "area": {"m2": 1.0, "cm2": 1e-4, "um2": 1e-12},
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S+)\s*$")

# (kind, default, rule); kind is a unit family, "number", "int", "bool" or "str".
# Rules: "positive", "nonzero", "nonnegative" or None.
SCHEMA = {
    "species": {
        "mass": ("mass", "39.962591 u", "positive"),
        "lattice_transition_wavelength": ("length", "866 nm", "positive"),
        "detection_wavelength": ("length", "397 nm", "positive"),
        "p_lifetime": ("time", "7.1 ns", "positive"),
        "branching_detection": ("number", constants.CA40_BRANCHING_S12, "positive"),
        "branching_leave": ("number", constants.CA40_BRANCHING_D32, "nonnegative"),
        "fine_structure_splitting": ("frequency", "6.7 THz", "positive"),
    },
    "trap": {
        "axial": ("frequency", None, "positive"),
        "radial": ("frequency", None, "positive"),
        "rf": ("frequency", "3.98 MHz", "positive"),
        "asymmetry": ("number", constants.DEFAULT_ASYMMETRY, "nonnegative"),
        "q_radial": ("number", None, "nonnegative"),
        "q_axial": ("number", 0.0, "nonnegative"),
    },
    "lattice": {
        "wavelength": ("length", "866 nm", "positive"),
        "detuning": ("frequency", "0.76 THz", "nonzero"),
        "max_depth": ("temperature", None, "nonnegative"),
        "max_nu_latt": ("frequency", None, "nonnegative"),
        "waist": ("length", "37 um", "positive"),
        "antinode_intensity": ("intensity", None, "positive"),
        "cross_section": ("area", None, "positive"),
        "p32_relative_strength": ("number", 0.0, "nonnegative"),
    },
    "ramp": {
        "ramp_duration": ("time", "2 us", "positive"),
        "hold_duration": ("time", "1 us", "nonnegative"),
        "shape": ("str", "linear", None),
    },
    "crystal": {
        "n_ions": ("int", None, "positive"),
        "seed": ("int", None, "nonnegative"),
        "n_starts": ("int", 8, "positive"),
    },
    "thermometry": {
        "T0": ("temperature", None, "nonnegative"),
        "sigma_res_axial": ("length", "2.23 um", "positive"),
        "sigma_res_radial": ("length", "2.09 um", "positive"),
        "pixel_pitch": ("length", "0.92 um", "positive"),
        "photon_budget": ("number", 1e4, "positive"),
        "background": ("number", 2.0, "nonnegative"),
        "include_radial": ("bool", False, None),
        "seed": ("int", None, "nonnegative"),
    },
    "scan": {
        "pumping_efficiency": ("number", 1.0, "positive"),
        "grid": ("str", None, None),
        "steps": ("int", 200, "positive"),
    },
    "output": {
        "directory": ("str", ".", None),
        "format": ("str", "csv", None),
    },
}

REQUIRED_SECTIONS = ("trap", "crystal")


def parse_quantity(text, kind, key):
    """'70 kHz' -> 70000.0 for kind 'frequency'. Bare numbers are rejected."""
    if not isinstance(text, str):
        raise ConfigError(f"expected a string with a {kind} unit, got {text!r}", key=key)
    match = _QUANTITY.match(text.replace("µ", "u").replace("μ", "u"))
    if match is None:
        raise ConfigError(f"cannot read {text!r} as a {kind} with unit", key=key)
    value, unit = match.groups()
    factors = UNITS[kind]
    if unit not in factors:
        raise ConfigError(
            f"unknown {kind} unit {unit!r}, use one of {', '.join(factors)}", key=key
        )
    return float(value) * factors[unit]


def _convert(raw, kind, key):
    if kind in UNITS:
        return parse_quantity(raw, kind, key)
    if kind == "bool":
        if not isinstance(raw, bool):
            raise ConfigError(f"expected true or false, got {raw!r}", key=key)
        return raw
    if kind == "int":
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"expected an integer, got {raw!r}", key=key)
        return raw
    if kind == "number":
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"expected a number, got {raw!r}", key=key)
        return float(raw)
    if not isinstance(raw, str):
        raise ConfigError(f"expected a string, got {raw!r}", key=key)
    return raw


def _check_rule(value, rule, key):
    if rule == "positive" and not value > 0:
        raise ConfigError(f"must be positive, got {value}", key=key)
    if rule == "nonnegative" and not value >= 0:
        raise ConfigError(f"must be non-negative, got {value}", key=key)
    if rule == "nonzero" and (value == 0 or not math.isfinite(value)):
        raise ConfigError(f"must be non-zero, got {value}", key=key)


def parse_grid(spec, key="--grid"):
    """'start:stop:count:lin' or '...:geom' -> numpy array."""
    parts = str(spec).split(":")
    if len(parts) != 4 or parts[3] not in ("lin", "geom"):
        raise ConfigError(f"grid must be start:stop:count:{{lin|geom}}, got {spec!r}", key=key)
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"grid bounds must be numbers and count an integer: {spec!r}", key=key)
    if count < 1:
        raise ConfigError(f"grid count must be at least 1, got {count}", key=key)
    if parts[3] == "geom":
        if not (start > 0 and stop > 0):
            raise ConfigError("geometric grid bounds must be positive", key=key)
        return np.geomspace(start, stop, count)
    return np.linspace(start, stop, count)


def parse_config(data):
    """Validates a raw nested dict and returns it with every value in SI."""
    if not isinstance(data, dict):
        raise ConfigError("top level must be a table", key="")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema version {version!r}, expected {SCHEMA_VERSION}",
            key="schema_version",
        )
    unknown = [k for k in data if k != "schema_version" and k not in SCHEMA]
    if unknown:
        raise ConfigError("unknown section", key=unknown[0])
    for section in REQUIRED_SECTIONS:
        if section not in data:
            raise ConfigError("missing required section", key=section)

    values = {"schema_version": SCHEMA_VERSION}
    for section, fields in SCHEMA.items():
        if section not in data:
            continue
        raw_section = data[section]
        if not isinstance(raw_section, dict):
            raise ConfigError("must be a table", key=section)
        extra = [k for k in raw_section if k not in fields]
        if extra:
            raise ConfigError("unknown key", key=f"{section}.{extra[0]}")
        parsed = {}
        for name, (kind, default, rule) in fields.items():
            key = f"{section}.{name}"
            raw = raw_section.get(name, default)
            if raw is None:
                parsed[name] = None
                continue
            value = _convert(raw, kind, key)
            if rule is not None:
                _check_rule(value, rule, key)
            parsed[name] = value
        values[section] = parsed

    for section in REQUIRED_SECTIONS:
        for name, (_, default, _) in SCHEMA[section].items():
            if default is None and values[section][name] is None and name not in (
                "q_radial",
            ):
                raise ConfigError("missing required key", key=f"{section}.{name}")

    lattice = values.get("lattice")
    if lattice is not None:
        given = [n for n in ("max_depth", "max_nu_latt") if lattice[n] is not None]
        if len(given) != 1:
            raise ConfigError(
                "give exactly one of max_depth and max_nu_latt", key="lattice.max_depth"
            )
        if (lattice["antinode_intensity"] is None) != (lattice["cross_section"] is None):
            raise ConfigError(
                "antinode_intensity and cross_section go together",
                key="lattice.cross_section",
            )
    ramp = values.get("ramp")
    if ramp is not None and ramp["shape"] not in ("linear", "cosine"):
        raise ConfigError(f"unknown ramp shape {ramp['shape']!r}", key="ramp.shape")
    output = values.get("output")
    if output is not None and output["format"] != "csv":
        raise ConfigError(f"unsupported output format {output['format']!r}", key="output.format")
    scan = values.get("scan")
    if scan is not None and scan["grid"] is not None:
        parse_grid(scan["grid"], key="scan.grid")
    return values


@dataclass(frozen=True, eq=False)
class RunConfig:
    values: dict
    source: str = None

    @classmethod
    def from_dict(cls, data, source=None):
        return cls(values=parse_config(data), source=source)

    @classmethod
    def from_file(cls, path):
        """Reads TOML, or JSON when the file ends in .json."""
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        try:
            if path.suffix.lower() == ".json":
                data = json.loads(text)
            else:
                data = tomllib.loads(text)
        except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(f"cannot parse {path.name}: {e}", key="")
        return cls.from_dict(data, source=str(path))

    def config_hash(self):
        canonical = json.dumps(self.values, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def section(self, name, required=False):
        values = self.values.get(name)
        if values is None:
            if required:
                raise ConfigError("missing required section", key=name)
            return {
                field: _default_value(name, field) for field in SCHEMA[name]
            }
        return values

    def require(self, section, name):
        value = self.section(section, required=True)[name]
        if value is None:
            raise ConfigError("missing required key", key=f"{section}.{name}")
        return value

    @property
    def n_ions(self):
        return self.values["crystal"]["n_ions"]

    @property
    def seed(self):
        return self.values["crystal"]["seed"]

    @property
    def n_starts(self):
        return self.values["crystal"]["n_starts"]

    @property
    def has_lattice(self):
        return self.values.get("lattice") is not None

    def species(self):
        s = self.section("species")
        lattice = self.section("lattice")
        return IonSpecies(
            mass=s["mass"],
            lattice_transition_wavelength=s["lattice_transition_wavelength"],
            detection_wavelength=s["detection_wavelength"],
            gamma_p_total=1.0 / s["p_lifetime"],
            gamma_397=s["branching_detection"] / s["p_lifetime"],
            branching_leave=s["branching_leave"],
            fine_structure_splitting=2 * math.pi * s["fine_structure_splitting"],
            p32_relative_strength=lattice["p32_relative_strength"],
        )

    def trap(self):
        t = self.section("trap", required=True)
        omega_r = 2 * math.pi * t["radial"]
        a = t["asymmetry"]
        try:
            return TrapConfig(
                omega_z=2 * math.pi * t["axial"],
                omega_x=omega_r * (1 + 0.5 * a),
                omega_y=omega_r * (1 - 0.5 * a),
                omega_rf=2 * math.pi * t["rf"],
                q_radial=t["q_radial"],
                q_axial=t["q_axial"],
            )
        except DomainError as e:
            raise ConfigError(str(e), key="trap")

    def lattice_max_depth(self):
        """Maximum lattice depth in J."""
        lat = self.section("lattice", required=True)
        if lat["max_depth"] is not None:
            return constants.BOLTZMANN * lat["max_depth"]
        species = self.species()
        k = 2 * math.pi / lat["wavelength"]
        return 0.5 * species.mass * (2 * math.pi * lat["max_nu_latt"] / k) ** 2

    def lattice(self, depth=None):
        """LatticeConfig at `depth` (J), or at the configured maximum."""
        lat = self.section("lattice", required=True)
        if depth is None:
            depth = self.lattice_max_depth()
        try:
            return LatticeConfig.from_wavelength(
                depth,
                lat["wavelength"],
                2 * math.pi * lat["detuning"],
                antinode_intensity=lat["antinode_intensity"],
                cross_section_397=lat["cross_section"],
            )
        except DomainError as e:
            raise ConfigError(str(e), key="lattice")

    def ramp(self):
        r = self.section("ramp")
        return RampProfile(
            ramp_duration=r["ramp_duration"], hold_duration=r["hold_duration"], shape=r["shape"]
        )

    def beam(self):
        return BeamProfile(waist_radius=self.section("lattice")["waist"])

    def imaging(self):
        th = self.section("thermometry")
        return ImagingConfig(
            sigma_res_axial=th["sigma_res_axial"],
            sigma_res_radial=th["sigma_res_radial"],
            pixel_pitch=th["pixel_pitch"],
        )

    def scenario(self, crystal):
        return ScatteringScenario(
            crystal=crystal,
            species=self.species(),
            lattice=self.lattice(),
            ramp=self.ramp(),
            T0=self.require("thermometry", "T0"),
            pumping_efficiency_per_ion=self.section("scan")["pumping_efficiency"],
        )


def _default_value(section, field):
    kind, default, _ = SCHEMA[section][field]
    if default is None:
        return None
    return _convert(default, kind, f"{section}.{field}")
