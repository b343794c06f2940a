"""Deck, train and run configuration with SI unit handling.

All quantities are stored in SI internally.  Human-facing units (t/m, km/h,
kN, degrees) are converted when a configuration file is parsed.
"""

import math
import re
from dataclasses import dataclass, field, fields, replace

__all__ = [
    "ConfigError",
    "DeckProperties",
    "DerivedConstants",
    "RunSettings",
    "TrainSettings",
    "Config",
    "derive_constants",
    "parse_quantity",
    "parse_units",
    "parse_config",
    "load_config",
    "format_config",
    "KMH",
]

KMH = 1.0 / 3.6


class ConfigError(ValueError):
    """Invalid configuration value, unit or file layout."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _check_finite(name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class DeckProperties:
    """Geometry, stiffness and mass of a simply supported skew deck (SI).

    ``skew_angle`` is in radians.  ``gyration_radius`` is a direct input, it
    is not derived from the section.
    """

    span_length: float
    elastic_modulus: float
    poisson_ratio: float
    second_moment: float
    torsion_constant: float
    mass_per_length: float
    gyration_radius: float
    skew_angle: float
    damping_ratio: float
    torsional_damping_ratio: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            _check_finite(f.name, getattr(self, f.name))
        positive = ("span_length", "elastic_modulus", "second_moment",
                    "torsion_constant", "mass_per_length")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.gyration_radius < 0:
            raise ConfigError(f"gyration_radius must be >= 0, got {self.gyration_radius!r}")
        if not 0 <= self.poisson_ratio < 0.5:
            raise ConfigError(f"poisson_ratio must be in [0, 0.5), got {self.poisson_ratio!r}")
        if not 0 <= self.skew_angle <= math.radians(60.0):
            raise ConfigError(f"skew_angle must be in [0, 60] degrees, got "
                              f"{math.degrees(self.skew_angle)!r} deg")
        for name in ("damping_ratio", "torsional_damping_ratio"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must be in [0, 1), got {getattr(self, name)!r}")

    @property
    def shear_modulus(self):
        return self.elastic_modulus / (2.0 * (1.0 + self.poisson_ratio))

    @property
    def EI(self):
        return self.elastic_modulus * self.second_moment

    @property
    def GJ(self):
        return self.shear_modulus * self.torsion_constant

    @classmethod
    def from_stiffness(cls, span_length, EI, GJ, mass_per_length, gyration_radius,
                       skew_angle, damping_ratio, poisson_ratio=0.25, second_moment=1.0,
                       torsional_damping_ratio=0.0):
        """Build a deck from EI and GJ directly (as tabulated for span studies).

        The modulus and torsion constant are back-computed so that the derived
        EI and GJ equal the given values up to rounding.
        """
        E = EI / second_moment
        G = E / (2.0 * (1.0 + poisson_ratio))
        return cls(span_length=span_length, elastic_modulus=E, poisson_ratio=poisson_ratio,
                   second_moment=second_moment, torsion_constant=GJ / G,
                   mass_per_length=mass_per_length, gyration_radius=gyration_radius,
                   skew_angle=skew_angle, damping_ratio=damping_ratio,
                   torsional_damping_ratio=torsional_damping_ratio)

    def with_stiffness_ratio(self, gj_over_ei):
        """Copy of the deck with GJ set to ``gj_over_ei * EI``."""
        if not gj_over_ei > 0:
            raise ConfigError(f"GJ/EI ratio must be > 0, got {gj_over_ei!r}")
        return replace(self, torsion_constant=gj_over_ei * self.EI / self.shear_modulus)

    def with_skew_deg(self, degrees):
        return replace(self, skew_angle=math.radians(degrees))


@dataclass(frozen=True)
class DerivedConstants:
    G: float
    EI: float
    GJ: float
    K: float


def derive_constants(deck):
    """Shear modulus, flexural/torsional stiffness and K = EI/GJ of a deck."""
    G = deck.elastic_modulus / (2.0 * (1.0 + deck.poisson_ratio))
    EI = deck.elastic_modulus * deck.second_moment
    GJ = G * deck.torsion_constant
    return DerivedConstants(G=G, EI=EI, GJ=GJ, K=EI / GJ)


@dataclass(frozen=True)
class RunSettings:
    """Time-stepping and output settings.

    ``eval_position=None`` means mid-span, ``tail_time=None`` means five
    fundamental periods of free vibration after the last axle leaves.
    """

    n_modes: int = 5
    dt: float = 0.001
    eval_position: float | None = None
    lateral_offset: float = 0.0
    tail_time: float | None = None

    def __post_init__(self):
        if isinstance(self.n_modes, bool) or not isinstance(self.n_modes, int) or self.n_modes < 1:
            raise ConfigError(f"n_modes must be an integer >= 1, got {self.n_modes!r}")
        _check_finite("dt", self.dt)
        if self.dt <= 0:
            raise ConfigError(f"dt must be > 0, got {self.dt!r}")
        if self.eval_position is not None:
            _check_finite("x_eval", self.eval_position)
            if self.eval_position < 0:
                raise ConfigError(f"x_eval must be >= 0, got {self.eval_position!r}")
        _check_finite("y_eval", self.lateral_offset)
        if self.tail_time is not None:
            _check_finite("tail_time", self.tail_time)
            if self.tail_time < 0:
                raise ConfigError(f"tail_time must be >= 0, got {self.tail_time!r}")

    def x_eval(self, deck):
        x = 0.5 * deck.span_length if self.eval_position is None else self.eval_position
        if not 0 <= x <= deck.span_length:
            raise ConfigError(f"x_eval={x!r} outside [0, {deck.span_length!r}]")
        return x


@dataclass(frozen=True)
class TrainSettings:
    """The ``[train]`` section: either an axle file or a single load."""

    file: str | None = None
    load: float | None = None
    speed: float | None = None
    eccentricity: float = 0.0


@dataclass(frozen=True)
class Config:
    deck: DeckProperties
    run: RunSettings = field(default_factory=RunSettings)
    train: TrainSettings = field(default_factory=TrainSettings)


# key -> (section, internal field, unit kind)
_KEYS = {
    "L": ("deck", "span_length", "length"),
    "E": ("deck", "elastic_modulus", "pressure"),
    "nu": ("deck", "poisson_ratio", "none"),
    "I": ("deck", "second_moment", "area4"),
    "J": ("deck", "torsion_constant", "area4"),
    "m": ("deck", "mass_per_length", "mass_per_length"),
    "r": ("deck", "gyration_radius", "length"),
    "alpha_deg": ("deck", "skew_angle", "angle"),
    "xi": ("deck", "damping_ratio", "none"),
    "xi_t": ("deck", "torsional_damping_ratio", "none"),
    "n_modes": ("run", "n_modes", "count"),
    "dt": ("run", "dt", "time"),
    "x_eval": ("run", "eval_position", "length"),
    "y_eval": ("run", "lateral_offset", "length"),
    "tail_time": ("run", "tail_time", "time"),
    "file": ("train", "file", "path"),
    "P": ("train", "load", "force"),
    "v": ("train", "speed", "speed"),
    "e": ("train", "eccentricity", "length"),
}

# unit kind -> {suffix: factor}; the empty suffix is the default unit
_UNITS = {
    "none": {"": 1.0},
    "count": {"": 1},
    "length": {"": 1.0, "m": 1.0},
    "area4": {"": 1.0, "m4": 1.0, "m^4": 1.0},
    "pressure": {"": 1.0, "Pa": 1.0, "N/m2": 1.0, "N/m^2": 1.0, "kPa": 1e3, "MPa": 1e6,
                 "GPa": 1e9},
    "mass_per_length": {"": 1.0, "kg/m": 1.0, "t/m": 1000.0},
    "time": {"": 1.0, "s": 1.0},
    "speed": {"": 1.0, "m/s": 1.0, "km/h": KMH},
    "force": {"": 1.0, "N": 1.0, "kN": 1000.0},
    "angle": {"": math.pi / 180.0, "deg": math.pi / 180.0, "rad": 1.0},
}

_QUANTITY = re.compile(
    r"^\s*([-+]?(?:(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|inf|nan))\s*(\S*)\s*$",
    re.IGNORECASE)


def parse_quantity(text, kind, line=None):
    """Parse ``"<number> [unit]"`` and return the SI value.

    >>> parse_quantity("22.5 t/m", "mass_per_length")
    22500.0
    """
    if kind == "path":
        return text.strip()
    match = _QUANTITY.match(text)
    if match is None:
        raise ConfigError(f"cannot parse quantity {text!r}", line)
    number, unit = match.groups()
    factors = _UNITS[kind]
    if unit not in factors:
        allowed = ", ".join(repr(u) for u in factors if u) or "none"
        raise ConfigError(f"unknown unit {unit!r} (allowed: {allowed})", line)
    if kind == "count":
        try:
            return int(number)
        except ValueError:
            raise ConfigError(f"expected an integer, got {number!r}", line) from None
    try:
        value = float(number)
    except ValueError:
        raise ConfigError(f"cannot parse number {number!r}", line) from None
    factor = factors[unit]
    if kind == "angle" and unit in ("", "deg"):
        return math.radians(value)
    return value if factor == 1.0 else value * factor


def _parse_sections(text, overrides=()):
    values = {"deck": {}, "run": {}, "train": {}}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in values:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if section is None:
            raise ConfigError(f"key {key!r} outside of a section", lineno)
        _store(values, section, key, value, lineno)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"unknown override key {key!r}")
        _store(values, _KEYS[key][0], key, value, None)
    return values


def _store(values, section, key, value, lineno):
    if key not in _KEYS:
        raise ConfigError(f"unknown key {key!r}", lineno)
    expected, name, kind = _KEYS[key]
    if expected != section:
        raise ConfigError(f"key {key!r} belongs in [{expected}], not [{section}]", lineno)
    values[section][name] = parse_quantity(value, kind, lineno)


def parse_units(raw_config):
    """Parse configuration text and return the SI :class:`DeckProperties`."""
    return parse_config(raw_config).deck


def parse_config(text, overrides=()):
    """Parse a full configuration text; ``overrides`` are ``key=value`` strings."""
    values = _parse_sections(text, overrides)
    deck_values = values["deck"]
    required = [k for k, (s, name, _) in _KEYS.items()
                if s == "deck" and name not in deck_values and k != "xi_t"]
    if required:
        raise ConfigError(f"missing [deck] keys: {', '.join(required)}")
    deck = DeckProperties(**deck_values)
    return Config(deck=deck, run=RunSettings(**values["run"]),
                  train=TrainSettings(**values["train"]))


def load_config(path, overrides=()):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text, overrides)


def _format_angle(angle):
    # degrees only when the conversion reproduces the stored radians exactly
    deg = math.degrees(angle)
    for candidate in (deg, math.nextafter(deg, math.inf), math.nextafter(deg, -math.inf)):
        if math.radians(candidate) == angle:
            return repr(candidate)
    return f"{angle!r} rad"


def format_config(deck, run=None):
    """Render a deck (and optional run settings) as configuration text in SI."""
    lines = ["[deck]"]
    for key, (section, name, kind) in _KEYS.items():
        if section != "deck":
            continue
        value = getattr(deck, name)
        lines.append(f"{key} = {_format_angle(value) if kind == 'angle' else repr(value)}")
    if run is not None:
        lines.append("")
        lines.append("[run]")
        for key, (section, name, _) in _KEYS.items():
            if section == "run" and getattr(run, name) is not None:
                lines.append(f"{key} = {getattr(run, name)!r}")
    return "\n".join(lines) + "\n"
