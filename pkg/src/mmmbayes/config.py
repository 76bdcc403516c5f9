"""Experiment descriptions in TOML.

A config file defines exactly one experiment: an ``[experiment]`` table
naming the kind and label, a ``[particle]`` table, and one table
matching the kind with the physical settings.  Dimensioned values are
strings with an explicit unit suffix ("266 nm", "2.08 s"); bare numbers
are only accepted for dimensionless fields.  Unknown keys anywhere are
rejected so a typo cannot silently fall back to a default.
"""
from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass

import tomli

from .constants import (
    ATOMIC_MASS_UNIT,
    CS133_MASS,
    PLANCK_H,
    RB87_MASS,
)
from .errors import ConfigError
from .likelihood import (
    BecMziConfig,
    NestedMziConfig,
    ParticleSpec,
    SingleAtomConfig,
    TalbotLauRun,
    VelocityBin,
)

__all__ = ["ExperimentConfig", "load_experiment", "parse_quantity", "config_hash"]

_LENGTH = {
    "m": 1.0,
    "cm": 1e-2,
    "mm": 1e-3,
    "um": 1e-6,
    "µm": 1e-6,
    "nm": 1e-9,
    "pm": 1e-12,
    "fm": 1e-15,
}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9}
_MASS = {"kg": 1.0, "g": 1e-3, "u": ATOMIC_MASS_UNIT, "Da": ATOMIC_MASS_UNIT}
_MOMENTUM = {"kg m/s": 1.0}
_ANGULAR_FREQUENCY = {"rad/s": 1.0}

_UNIT_TABLES = {
    "length": _LENGTH,
    "time": _TIME,
    "mass": _MASS,
    "momentum": _MOMENTUM,
    "angular frequency": _ANGULAR_FREQUENCY,
}

_SPECIES = {"Rb87": RB87_MASS, "Cs133": CS133_MASS}

_QUANTITY_RE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(.+?)\s*$")


def parse_quantity(value, dimension: str, where: str) -> float:
    """Convert a unit-suffixed string to SI.

    ``where`` names the config key for error messages.  Angular
    frequencies must be stated in rad/s; a value in Hz would be silently
    off by two pi, so that unit is rejected with a hint.
    """
    table = _UNIT_TABLES[dimension]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        raise ConfigError(
            f"{where}: dimensioned values need an explicit unit, e.g. "
            f'"{value} {next(iter(table))}"'
        )
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a unit-suffixed string")
    match = _QUANTITY_RE.match(value)
    if not match:
        raise ConfigError(f"{where}: cannot parse quantity {value!r}")
    number, unit = match.group(1), match.group(2)
    if unit not in table:
        hint = ""
        if dimension == "angular frequency" and unit in ("Hz", "hz"):
            hint = "; angular frequencies must be given in rad/s, not Hz"
        raise ConfigError(
            f"{where}: unknown {dimension} unit {unit!r} "
            f"(allowed: {', '.join(sorted(table))}){hint}"
        )
    scaled = float(number) * table[unit]
    if not math.isfinite(scaled):
        raise ConfigError(f"{where}: quantity is not finite")
    return scaled


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer")
    return value


def _string(value, where: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a string")
    return value


def _boolean(value, where: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{where}: expected true or false")
    return value


def _check_keys(table: dict, allowed, where: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {', '.join(unknown)}")


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return table[key]


@dataclass(frozen=True)
class ExperimentConfig:
    """One parsed experiment: its model design and file-level metadata."""

    kind: str
    label: str
    model: object
    scan_periods: int | None
    config_hash: str
    source: str


def config_hash(raw: dict) -> str:
    """Order-independent digest of the parsed TOML content."""
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def load_experiment(path: str) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    try:
        with open(path, "rb") as handle:
            raw = tomli.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path} is not valid TOML: {exc}") from exc

    _check_keys(
        raw,
        ("experiment", "particle", "talbot_lau", "bec_mzi", "nested_mzi", "single_atom"),
        path,
    )
    exp = _require(raw, "experiment", path)
    _check_keys(exp, ("kind", "label"), f"{path}:experiment")
    kind = _string(_require(exp, "kind", f"{path}:experiment"), f"{path}:experiment.kind")
    label = _string(exp.get("label", ""), f"{path}:experiment.label")

    builders = {
        "talbot_lau": _build_talbot_lau,
        "bec_mzi": _build_bec,
        "nested_mzi": _build_nested,
        "single_atom": _build_single_atom,
    }
    if kind not in builders:
        raise ConfigError(
            f"{path}: unknown experiment kind {kind!r} "
            f"(allowed: {', '.join(sorted(builders))})"
        )
    extra_tables = [k for k in builders if k in raw and k != kind]
    if extra_tables:
        raise ConfigError(
            f"{path}: table [{extra_tables[0]}] does not match kind {kind!r}"
        )
    if kind not in raw:
        raise ConfigError(f"{path}: missing [{kind}] table")

    particle = _build_particle(raw.get("particle"), f"{path}:particle")
    model, scan_periods = builders[kind](raw[kind], particle, label, f"{path}:{kind}")
    return ExperimentConfig(
        kind=kind,
        label=label,
        model=model,
        scan_periods=scan_periods,
        config_hash=config_hash(raw),
        source=path,
    )


def _build_particle(table, where: str) -> ParticleSpec:
    if table is None:
        raise ConfigError(f"{where}: missing [particle] table")
    _check_keys(table, ("mass", "species", "name"), where)
    name = _string(table.get("name", ""), f"{where}.name")
    if "species" in table:
        if "mass" in table:
            raise ConfigError(f"{where}: give species or mass, not both")
        species = _string(table["species"], f"{where}.species")
        if species not in _SPECIES:
            raise ConfigError(
                f"{where}.species: unknown species {species!r} "
                f"(known: {', '.join(sorted(_SPECIES))})"
            )
        return ParticleSpec(_SPECIES[species], name or species)
    mass = parse_quantity(_require(table, "mass", where), "mass", f"{where}.mass")
    if mass <= 0.0:
        raise ConfigError(f"{where}.mass: mass must be positive")
    return ParticleSpec(mass, name)


def _momentum_from(table: dict, prefix: str, where: str) -> float:
    """Momentum either directly in SI or as a photon-recoil count."""
    direct = f"{prefix}"
    recoils = f"{prefix}_recoils"
    if direct in table and recoils in table:
        raise ConfigError(f"{where}: give {direct} or {recoils}, not both")
    if direct in table:
        value = parse_quantity(table[direct], "momentum", f"{where}.{direct}")
    elif recoils in table:
        if "recoil_wavelength" not in table:
            raise ConfigError(
                f"{where}: {recoils} needs recoil_wavelength alongside it"
            )
        wavelength = parse_quantity(
            table["recoil_wavelength"], "length", f"{where}.recoil_wavelength"
        )
        if wavelength <= 0.0:
            raise ConfigError(f"{where}.recoil_wavelength must be positive")
        value = _number(table[recoils], f"{where}.{recoils}") * PLANCK_H / wavelength
    else:
        raise ConfigError(f"{where}: missing {direct} (or {recoils})")
    if value <= 0.0:
        raise ConfigError(f"{where}.{direct}: momentum must be positive")
    return value


def _build_talbot_lau(table, particle, label, where):
    _check_keys(
        table,
        (
            "grating_period",
            "f1",
            "f3",
            "delta_x_offset",
            "mode",
            "scan_periods",
            "velocity_bins",
        ),
        where,
    )
    period = parse_quantity(
        _require(table, "grating_period", where), "length", f"{where}.grating_period"
    )
    offset = (
        parse_quantity(table["delta_x_offset"], "length", f"{where}.delta_x_offset")
        if "delta_x_offset" in table
        else 0.0
    )
    mode = _string(table.get("mode", "stationary"), f"{where}.mode")
    scan_periods = (
        _integer(table["scan_periods"], f"{where}.scan_periods")
        if "scan_periods" in table
        else None
    )
    if scan_periods is not None and scan_periods <= 0:
        raise ConfigError(f"{where}.scan_periods must be positive")
    raw_bins = _require(table, "velocity_bins", where)
    if not isinstance(raw_bins, list) or not raw_bins:
        raise ConfigError(f"{where}.velocity_bins: need at least one entry")
    bins = []
    for i, entry in enumerate(raw_bins):
        sub = f"{where}.velocity_bins[{i}]"
        _check_keys(entry, ("weight", "time_of_flight", "base_visibility"), sub)
        bins.append(
            VelocityBin(
                weight=_number(_require(entry, "weight", sub), f"{sub}.weight"),
                time_of_flight=parse_quantity(
                    _require(entry, "time_of_flight", sub),
                    "time",
                    f"{sub}.time_of_flight",
                ),
                base_visibility=_number(
                    _require(entry, "base_visibility", sub), f"{sub}.base_visibility"
                ),
            )
        )
    try:
        run = TalbotLauRun(
            particle=particle,
            grating_period=period,
            f1=_number(_require(table, "f1", where), f"{where}.f1"),
            f3=_number(_require(table, "f3", where), f"{where}.f3"),
            delta_x_offset=offset,
            velocity_bins=tuple(bins),
            bins=(),
            mode=mode,
            label=label,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return run, scan_periods


def _build_bec(table, particle, label, where):
    _check_keys(
        table,
        (
            "n_atoms",
            "delta_p",
            "delta_p_recoils",
            "recoil_wavelength",
            "separation_time",
            "interference_time",
            "beam_waist_x",
            "beam_waist_y",
            "phi",
            "plateau_extension",
        ),
        where,
    )
    try:
        config = BecMziConfig(
            particle=particle,
            n_atoms=_integer(_require(table, "n_atoms", where), f"{where}.n_atoms"),
            delta_p=_momentum_from(table, "delta_p", where),
            separation_time=parse_quantity(
                _require(table, "separation_time", where),
                "time",
                f"{where}.separation_time",
            ),
            interference_time=parse_quantity(
                _require(table, "interference_time", where),
                "time",
                f"{where}.interference_time",
            ),
            w_x=parse_quantity(
                _require(table, "beam_waist_x", where), "length", f"{where}.beam_waist_x"
            ),
            w_y=parse_quantity(
                _require(table, "beam_waist_y", where), "length", f"{where}.beam_waist_y"
            ),
            phi=_number(table.get("phi", 0.0), f"{where}.phi"),
            plateau_extension=_boolean(
                table.get("plateau_extension", True), f"{where}.plateau_extension"
            ),
            label=label,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return config, None


def _build_nested(table, particle, label, where):
    _check_keys(
        table,
        (
            "n_atoms",
            "delta_p_inner",
            "delta_p_inner_recoils",
            "recoil_wavelength",
            "interference_time",
            "beam_waist_x",
            "beam_waist_y",
            "plateau_extension",
        ),
        where,
    )
    try:
        config = NestedMziConfig(
            particle=particle,
            n_atoms=_integer(_require(table, "n_atoms", where), f"{where}.n_atoms"),
            delta_p_inner=_momentum_from(table, "delta_p_inner", where),
            interference_time=parse_quantity(
                _require(table, "interference_time", where),
                "time",
                f"{where}.interference_time",
            ),
            w_x=parse_quantity(
                _require(table, "beam_waist_x", where), "length", f"{where}.beam_waist_x"
            ),
            w_y=parse_quantity(
                _require(table, "beam_waist_y", where), "length", f"{where}.beam_waist_y"
            ),
            plateau_extension=_boolean(
                table.get("plateau_extension", True), f"{where}.plateau_extension"
            ),
            label=label,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return config, None


def _build_single_atom(table, particle, label, where):
    _check_keys(
        table,
        (
            "omega",
            "t",
            "delta_t",
            "sigma_dark",
            "delta_x",
            "beam_waist_x",
            "beam_waist_y",
            "plateau_extension",
        ),
        where,
    )
    try:
        config = SingleAtomConfig(
            particle=particle,
            omega=parse_quantity(
                _require(table, "omega", where), "angular frequency", f"{where}.omega"
            ),
            t=parse_quantity(_require(table, "t", where), "time", f"{where}.t"),
            delta_t=parse_quantity(
                _require(table, "delta_t", where), "time", f"{where}.delta_t"
            ),
            sigma_dark=_number(table.get("sigma_dark", 0.0), f"{where}.sigma_dark"),
            delta_x=parse_quantity(
                _require(table, "delta_x", where), "length", f"{where}.delta_x"
            ),
            w_x=parse_quantity(
                _require(table, "beam_waist_x", where), "length", f"{where}.beam_waist_x"
            ),
            w_y=parse_quantity(
                _require(table, "beam_waist_y", where), "length", f"{where}.beam_waist_y"
            ),
            plateau_extension=_boolean(
                table.get("plateau_extension", True), f"{where}.plateau_extension"
            ),
            label=label,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return config, None
