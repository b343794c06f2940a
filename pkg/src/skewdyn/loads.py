"""Moving loads, convoys and the modal forces they induce."""

import math
from collections import Counter
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .core import ConfigError, derive_constants
from .eigen import eval_flex_shape, eval_tors_shape

__all__ = [
    "Axle",
    "Train",
    "Convoy",
    "axle_position_fraction",
    "skew_torque_factor",
    "axle_torque",
    "modal_flexural_force",
    "modal_torsional_force",
    "active_samples",
    "sample_modal_forces",
    "load_train_file",
    "parse_train",
    "hslm_a1",
    "train_summary",
]


@dataclass(frozen=True)
class Axle:
    offset: float  # m behind the first axle
    magnitude: float  # N


@dataclass(frozen=True)
class Train:
    """Axle layout without a speed."""

    axles: tuple

    def __post_init__(self):
        if not self.axles:
            raise ConfigError("train has no axles")
        if self.axles[0].offset != 0.0:
            raise ConfigError("first axle offset must be 0")
        for prev, cur in zip(self.axles, self.axles[1:]):
            if cur.offset <= prev.offset:
                raise ConfigError(f"axle offsets must increase: {prev.offset} then {cur.offset}")
        for axle in self.axles:
            if not axle.magnitude > 0:
                raise ConfigError(f"axle load must be > 0, got {axle.magnitude}")

    @classmethod
    def single(cls, load):
        return cls((Axle(0.0, float(load)),))

    @property
    def length(self):
        return self.axles[-1].offset

    def at_speed(self, speed, eccentricity=0.0):
        return Convoy(self.axles, speed, eccentricity)

    def scaled(self, factor):
        return Train(tuple(Axle(a.offset, a.magnitude * factor) for a in self.axles))


@dataclass(frozen=True)
class Convoy:
    """Axles travelling together at ``speed`` [m/s], ``eccentricity`` [m] off the centroid.

    Axle loads are only required to be non-negative here so that zero-load
    runs can be used as a linearity check.
    """

    axles: tuple
    speed: float
    eccentricity: float = 0.0

    def __post_init__(self):
        if not self.axles:
            raise ConfigError("convoy has no axles")
        if not (self.speed > 0 and math.isfinite(self.speed)):
            raise ConfigError(f"speed must be > 0, got {self.speed!r}")
        offsets = [a.offset for a in self.axles]
        if offsets[0] != 0.0 or any(b < a for a, b in zip(offsets, offsets[1:])):
            raise ConfigError("axle offsets must start at 0 and be nondecreasing")
        if any(a.magnitude < 0 for a in self.axles):
            raise ConfigError("axle loads must be >= 0")

    @classmethod
    def single(cls, load, speed, eccentricity=0.0):
        return cls((Axle(0.0, float(load)),), speed, eccentricity)

    @property
    def offsets(self):
        return np.array([a.offset for a in self.axles])

    @property
    def magnitudes(self):
        return np.array([a.magnitude for a in self.axles])

    def with_speed(self, speed):
        return replace(self, speed=speed)

    def scaled(self, factor):
        return replace(self, axles=tuple(Axle(a.offset, a.magnitude * factor) for a in self.axles))

    def exit_time(self, span_length):
        """Time at which the last axle leaves the span."""
        return (self.axles[-1].offset + span_length) / self.speed


def axle_position_fraction(convoy, k, t, span_length):
    """``(eps, active)`` for axle ``k`` (0-based) at time ``t``; ``eps = (v t - d_k) / L``."""
    eps = (convoy.speed * np.asarray(t, dtype=float) - convoy.axles[k].offset) / span_length
    # round-off at entry/exit (t = d/v, (d + L)/v) must not drop the axle
    tol = 8.0 * np.finfo(float).eps
    eps = np.where((eps < 0.0) & (eps > -tol), 0.0, np.where((eps > 1.0) & (eps < 1.0 + tol),
                                                             1.0, eps))
    return eps, (eps >= 0.0) & (eps <= 1.0)


def skew_torque_factor(eps, deck):
    """Torque per unit axle load from support skewness, ``L (eps - eps^2) cot a / (2 (1 + K cot^2 a))``."""
    eps = np.asarray(eps, dtype=float)
    if deck.skew_angle == 0.0:
        return np.zeros_like(eps)
    K = derive_constants(deck).K
    t = math.tan(deck.skew_angle)
    # numerator and denominator multiplied by tan^2 a
    return deck.span_length * (eps - eps * eps) * t / (2.0 * (t * t + K))


def axle_torque(load, eps, deck, eccentricity=0.0):
    """Twisting moment [N m] applied by one axle at position fraction ``eps``."""
    return load * (skew_torque_factor(eps, deck) + eccentricity)


def active_samples(convoy, times, span_length):
    """Time index, axle index and position of every axle on the span.

    ``times`` must be sorted.  Positions are clipped to ``[0, L]`` so that
    round-off at entry and exit never leaves the span.
    """
    times = np.asarray(times, dtype=float)
    v = convoy.speed
    t_idx, k_idx = [], []
    for k, axle in enumerate(convoy.axles):
        lo = np.searchsorted(times, axle.offset / v, side="left")
        hi = np.searchsorted(times, (axle.offset + span_length) / v, side="right")
        # an endpoint may fall on either side of the boundary after rounding
        idx = np.arange(max(lo - 1, 0), min(hi + 1, len(times)))
        pos = v * times[idx] - axle.offset
        keep = (pos >= 0.0) & (pos <= span_length)
        t_idx.append(idx[keep])
        k_idx.append(np.full(int(keep.sum()), k))
    t_idx = np.concatenate(t_idx) if t_idx else np.zeros(0, dtype=int)
    k_idx = np.concatenate(k_idx) if k_idx else np.zeros(0, dtype=int)
    positions = np.clip(v * times[t_idx] - convoy.offsets[k_idx], 0.0, span_length)
    return t_idx, k_idx, positions


def _flex_sum(mode, convoy, times, deck, samples=None):
    times = np.atleast_1d(np.asarray(times, dtype=float))
    t_idx, k_idx, pos = samples if samples is not None else active_samples(
        convoy, times, deck.span_length)
    if mode.modal_mass_flex <= 0.0 or len(t_idx) == 0:
        return np.zeros(len(times))
    weights = convoy.magnitudes[k_idx] * eval_flex_shape(mode, pos)
    return np.bincount(t_idx, weights=weights, minlength=len(times)) / mode.modal_mass_flex


def _tors_sum(mode, convoy, times, deck, samples=None):
    times = np.atleast_1d(np.asarray(times, dtype=float))
    t_idx, k_idx, pos = samples if samples is not None else active_samples(
        convoy, times, deck.span_length)
    if mode.tors_coeffs is None or mode.modal_mass_tors <= 0.0 or len(t_idx) == 0:
        return np.zeros(len(times))
    torque = axle_torque(convoy.magnitudes[k_idx], pos / deck.span_length, deck,
                         convoy.eccentricity)
    weights = torque * eval_tors_shape(mode, pos)
    return np.bincount(t_idx, weights=weights, minlength=len(times)) / mode.modal_mass_tors


def _evaluate(fn, mode, convoy, t, deck):
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    order = np.argsort(arr, kind="stable")
    out = np.empty(len(arr))
    out[order] = fn(mode, convoy, arr[order], deck)
    return float(out[0]) if np.ndim(t) == 0 else out


def modal_flexural_force(mode, convoy, t, deck):
    """Sum of ``P_k phi(v t - d_k) / M_f`` over axles on the span."""
    return _evaluate(_flex_sum, mode, convoy, t, deck)


def modal_torsional_force(mode, convoy, t, deck):
    """Sum of skew plus eccentric axle torques times ``psi(v t - d_k) / M_t``.

    Zero for modes without a torsional part (simplified model).
    """
    return _evaluate(_tors_sum, mode, convoy, t, deck)


def sample_modal_forces(modes, convoy, times, deck):
    """``(Q_flex, Q_tors)`` arrays of shape ``(len(modes), len(times))``."""
    samples = active_samples(convoy, times, deck.span_length)
    q_flex = np.stack([_flex_sum(md, convoy, times, deck, samples) for md in modes])
    q_tors = np.stack([_tors_sum(md, convoy, times, deck, samples) for md in modes])
    return q_flex, q_tors


def parse_train(text, source="<train>"):
    """Parse ``offset_m load_kN`` lines into a :class:`Train`."""
    axles = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"{source}: expected 'offset_m load_kN'", lineno)
        try:
            offset, load = float(parts[0]), float(parts[1])
        except ValueError:
            raise ConfigError(f"{source}: non-numeric value in {line!r}", lineno) from None
        if not (math.isfinite(offset) and math.isfinite(load)):
            raise ConfigError(f"{source}: non-finite value in {line!r}", lineno)
        if offset in seen:
            raise ConfigError(f"{source}: duplicate offset {offset}", lineno)
        if axles and offset < axles[-1].offset:
            raise ConfigError(f"{source}: offsets not monotone ({axles[-1].offset} then "
                              f"{offset})", lineno)
        if load <= 0:
            raise ConfigError(f"{source}: axle load must be > 0", lineno)
        seen.add(offset)
        axles.append(Axle(offset, load * 1000.0))
    if not axles:
        raise ConfigError(f"{source}: no axles")
    if axles[0].offset != 0.0:
        raise ConfigError(f"{source}: first axle offset must be 0")
    return Train(tuple(axles))


def load_train_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read train file {path}: {exc.strerror or exc}") from exc
    return parse_train(text, str(path))


def hslm_a1():
    """The bundled HSLM-A1 train (50 axles of 170 kN)."""
    text = resources.files("skewdyn.data").joinpath("hslm_a1.txt").read_text(encoding="utf-8")
    return parse_train(text, "hslm_a1.txt")


def train_summary(train, decimals=3):
    """Axle count, total load [N] and a histogram of consecutive axle spacings [m]."""
    offsets = [a.offset for a in train.axles]
    spacings = Counter(round(b - a, decimals) for a, b in zip(offsets, offsets[1:]))
    return {
        "axles": len(train.axles),
        "total_load": sum(a.magnitude for a in train.axles),
        "length": train.length,
        "spacings": dict(sorted(spacings.items())),
    }
