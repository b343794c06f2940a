"""Parametric studies: skew angle, GJ/EI ratio and span length."""

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .core import KMH, ConfigError, DeckProperties, RunSettings
from .eigen import find_modes
from .response import daf, envelope

__all__ = [
    "SweepSpec",
    "StudyPoint",
    "SpanFixture",
    "SpanResult",
    "skew_frequency_table",
    "sweep_skew",
    "sweep_stiffness",
    "load_span_fixtures",
    "span_deck",
    "sweep_span",
    "critical_skew_angle",
    "relative_spread",
    "SKEW_GRID_DEG",
    "RATIO_GRID",
]

SKEW_GRID_DEG = tuple(range(0, 45, 5))
RATIO_GRID = (0.5, 0.75, 1.0, 1.25, 1.5)
PARAMETERS = ("skew_angle", "stiffness_ratio", "span_length")


@dataclass(frozen=True)
class SweepSpec:
    """One parametric study.

    ``values`` are degrees for ``skew_angle``, GJ/EI for ``stiffness_ratio``
    and metres for ``span_length``.  ``speed_range`` is ``(v_min, v_max,
    v_step)`` in m/s.
    """

    parameter: str
    values: tuple
    base_deck: DeckProperties
    train: object
    speed_range: tuple = (100 * KMH, 300 * KMH, 5 * KMH)
    settings: RunSettings = field(default_factory=RunSettings)
    model: str = "simplified"

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ConfigError(f"unknown study parameter {self.parameter!r}")
        values = tuple(self.values)
        if not values:
            raise ConfigError("study needs at least one parameter value")
        diffs = np.diff(values)
        if len(values) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ConfigError("study values must be strictly monotone")
        if self.parameter == "skew_angle" and not all(0 <= v <= 40 for v in values):
            raise ConfigError("skew angles must lie in [0, 40] degrees")
        if self.parameter == "stiffness_ratio" and not all(v > 0 for v in values):
            raise ConfigError("GJ/EI ratios must be > 0")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class StudyPoint:
    value: float
    f1_hz: float
    max_u: float
    max_a: float
    daf: float | None = None
    speed: float | None = None  # m/s where max_u occurs
    envelope: object = None


def _point(deck, spec, value, workers):
    modes = find_modes(deck, spec.model, spec.settings.n_modes)
    env = envelope(deck, spec.model, spec.train, *spec.speed_range, settings=spec.settings,
                   workers=workers, modes=modes)
    i = int(np.argmax(env.max_abs_u))
    return StudyPoint(value=value, f1_hz=modes[0].freq_hz, max_u=float(env.max_abs_u[i]),
                      max_a=float(np.max(env.max_abs_u_ddot)), speed=float(env.speeds[i]),
                      envelope=env)


def skew_frequency_table(deck, angles_deg=SKEW_GRID_DEG, model="simplified"):
    """First natural frequency [Hz] for each skew angle."""
    return [find_modes(deck.with_skew_deg(a), model, 1)[0].freq_hz for a in angles_deg]


def sweep_skew(spec, workers=None):
    """Envelope maxima and f1 for each skew angle of ``spec.values``."""
    if spec.parameter != "skew_angle":
        raise ConfigError("sweep_skew needs a skew_angle spec")
    return [_point(spec.base_deck.with_skew_deg(a), spec, a, workers) for a in spec.values]


def sweep_stiffness(spec, workers=None):
    """Envelope maxima with GJ set to ``ratio * EI`` at the base skew angle."""
    if spec.parameter != "stiffness_ratio":
        raise ConfigError("sweep_stiffness needs a stiffness_ratio spec")
    return [_point(spec.base_deck.with_stiffness_ratio(r), spec, r, workers)
            for r in spec.values]


@dataclass(frozen=True)
class SpanFixture:
    L: float
    h: float
    EI: float
    GJ: float
    m: float  # t/m, as tabulated


def load_span_fixtures():
    """The redesigned sections (h = L/14) shipped with the package."""
    text = resources.files("skewdyn.data").joinpath("span_fixtures.csv").read_text("utf-8")
    rows = [line for line in text.splitlines() if line and not line.startswith("#")]
    return [SpanFixture(float(r["L_m"]), float(r["h_m"]), float(r["EI_Nm2"]),
                        float(r["GJ_Nm2"]), float(r["m_t_per_m"]))
            for r in csv.DictReader(io.StringIO("\n".join(rows)))]


def span_deck(fixture, base_deck, skew_deg=None):
    """Deck for a span fixture; r, damping and Poisson ratio come from ``base_deck``."""
    alpha = base_deck.skew_angle if skew_deg is None else math.radians(skew_deg)
    return DeckProperties.from_stiffness(
        span_length=fixture.L, EI=fixture.EI, GJ=fixture.GJ,
        mass_per_length=fixture.m * 1000.0, gyration_radius=base_deck.gyration_radius,
        skew_angle=alpha, damping_ratio=base_deck.damping_ratio,
        poisson_ratio=base_deck.poisson_ratio)


@dataclass(frozen=True)
class SpanResult:
    """Per-span outcome; ``f1_by_skew`` maps degrees to Hz."""

    fixture: SpanFixture
    f1_by_skew: dict
    delta_f1: float
    second_resonance: StudyPoint


def _second_resonance(deck, spec, D, window, v_step, workers):
    modes = find_modes(deck, spec.model, spec.settings.n_modes)
    v2 = modes[0].freq_hz * D / 2.0
    env = envelope(deck, spec.model, spec.train, max(v2 - window, v_step), v2 + window, v_step,
                   settings=spec.settings, workers=workers, modes=modes)
    i = int(np.argmax(env.max_abs_u))
    speed = float(env.speeds[i])
    factor = daf(deck, spec.model, spec.train, speed, spec.settings, modes)
    return StudyPoint(value=deck.span_length, f1_hz=modes[0].freq_hz,
                      max_u=float(env.max_abs_u[i]), max_a=float(np.max(env.max_abs_u_ddot)),
                      daf=factor, speed=speed, envelope=env)


def sweep_span(spec, fixtures=None, angles_deg=SKEW_GRID_DEG, D=18.0, window=15 * KMH,
               v_step=1 * KMH, workers=None):
    """f1 surface, its 0-40 degree variation and the second-resonance peak per span.

    The peak is the largest displacement within ``window`` of ``f1 D / 2``,
    evaluated at the base deck's skew angle.
    """
    if spec.parameter != "span_length":
        raise ConfigError("sweep_span needs a span_length spec")
    fixtures = load_span_fixtures() if fixtures is None else fixtures
    by_span = {fx.L: fx for fx in fixtures}
    results = []
    for L in spec.values:
        if L not in by_span:
            raise ConfigError(f"no span fixture for L={L!r}")
        fx = by_span[L]
        deck = span_deck(fx, spec.base_deck)
        f1 = dict(zip(angles_deg, skew_frequency_table(deck, angles_deg, spec.model)))
        delta = f1[max(angles_deg)] - f1[min(angles_deg)]
        peak = _second_resonance(deck, spec, D, window, v_step, workers)
        results.append(SpanResult(fx, f1, delta, peak))
    return results


def relative_spread(values):
    """``(max - min) / max`` of a sequence of positive values."""
    values = np.asarray(values, dtype=float)
    return float((values.max() - values.min()) / values.max())


def critical_skew_angle(points):
    """Angle where the displacement-vs-skew curve bends downward the most.

    Uses the most negative second difference of ``max_u``; needs three or
    more equally spaced points.
    """
    if len(points) < 3:
        raise ValueError("need at least three sweep points")
    u = np.array([p.max_u for p in points])
    second = u[:-2] - 2.0 * u[1:-1] + u[2:]
    return points[int(np.argmin(second)) + 1].value
