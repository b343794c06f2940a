"""Physical responses by modal superposition: histories, envelopes, DAF."""

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import KMH, RunSettings
from .eigen import eval_flex_shape, eval_tors_shape, find_modes
from .integrator import integrate
from .loads import Convoy, Train, sample_modal_forces

__all__ = [
    "ResponseHistory",
    "EnvelopeResult",
    "ResponseError",
    "time_history",
    "quasi_static_history",
    "envelope",
    "speed_grid",
    "resonance_speeds",
    "daf",
    "default_workers",
]

log = logging.getLogger(__name__)


class ResponseError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ResponseHistory:
    """Responses at ``(x_eval, y_eval)``; ``theta`` is ``None`` for the simplified model."""

    times: np.ndarray
    u: np.ndarray
    u_ddot: np.ndarray
    theta: np.ndarray | None = None
    q: np.ndarray | None = None
    p: np.ndarray | None = None

    @property
    def max_abs_u(self):
        return float(np.max(np.abs(self.u)))

    @property
    def max_abs_u_ddot(self):
        return float(np.max(np.abs(self.u_ddot)))


@dataclass(frozen=True)
class EnvelopeResult:
    speeds: np.ndarray  # m/s
    max_abs_u: np.ndarray
    max_abs_u_ddot: np.ndarray

    def __post_init__(self):
        if not len(self.speeds) == len(self.max_abs_u) == len(self.max_abs_u_ddot):
            raise ValueError("envelope arrays must have equal length")
        if np.any(np.diff(self.speeds) <= 0):
            raise ValueError("envelope speeds must be strictly increasing")

    @property
    def speeds_kmh(self):
        return self.speeds / KMH


def _as_convoy(load, speed=None, eccentricity=0.0):
    if isinstance(load, Convoy):
        return load if speed is None else load.with_speed(speed)
    if isinstance(load, Train):
        return load.at_speed(speed, eccentricity)
    raise TypeError(f"expected a Convoy or Train, got {type(load).__name__}")


def _time_grid(deck, convoy, modes, settings):
    tail = settings.tail_time
    if tail is None:
        tail = 5.0 / modes[0].freq_hz
    t_end = convoy.exit_time(deck.span_length) + tail
    n = int(math.ceil(t_end / settings.dt - 1e-9))
    return settings.dt * np.arange(n + 1)


def _check_step(modes, settings):
    f_max = max(md.freq_hz for md in modes)
    if settings.dt > 1.0 / (20.0 * f_max):
        log.warning("dt=%g s is coarser than 1/(20 f_max)=%.3g s for f_max=%.4g Hz; "
                    "the forcing is resolved with fewer than 20 samples per period",
                    settings.dt, 1.0 / (20.0 * f_max), f_max)


def time_history(deck, model, convoy, settings=None, modes=None, keep_modal=False,
                 check_step=True):
    """Passage of ``convoy`` plus free-vibration tail at the evaluation point.

    ``modes`` may be passed to reuse an eigen solution across runs.
    """
    settings = settings or RunSettings()
    if modes is None:
        modes = find_modes(deck, model, settings.n_modes)
    if check_step:
        _check_step(modes, settings)
    x = settings.x_eval(deck)
    y = settings.lateral_offset
    times = _time_grid(deck, convoy, modes, settings)
    q_flex, q_tors = sample_modal_forces(modes, convoy, times, deck)

    n = len(modes)
    q = np.zeros((n, len(times)))
    q_acc = np.zeros_like(q)
    p = np.zeros_like(q)
    p_acc = np.zeros_like(q)
    phi = np.array([float(eval_flex_shape(md, x)) for md in modes])
    psi = np.array([float(eval_tors_shape(md, x)) for md in modes])
    torsion = model == "analytical"
    for i, md in enumerate(modes):
        if md.modal_mass_flex > 0.0 and np.any(q_flex[i]):
            h = integrate(md.omega, q_flex[i], times[-1], settings.dt, deck.damping_ratio)
            q[i], q_acc[i] = h.w, h.w_ddot
        if torsion and md.modal_mass_tors > 0.0 and np.any(q_tors[i]):
            h = integrate(md.omega, q_tors[i], times[-1], settings.dt,
                          deck.torsional_damping_ratio)
            p[i], p_acc[i] = h.w, h.w_ddot

    u = phi @ q - y * (psi @ p)
    u_ddot = phi @ q_acc - y * (psi @ p_acc)
    theta = psi @ p if torsion else None
    if keep_modal:
        return ResponseHistory(times, u, u_ddot, theta, q, p if torsion else None)
    return ResponseHistory(times, u, u_ddot, theta)


def quasi_static_history(deck, model, convoy, settings=None, modes=None):
    """Displacement with inertia and damping dropped: ``sum Q_n / omega_n^2 phi_n(x)``."""
    settings = settings or RunSettings()
    if modes is None:
        modes = find_modes(deck, model, settings.n_modes)
    x = settings.x_eval(deck)
    times = _time_grid(deck, convoy, modes, settings)
    q_flex, _ = sample_modal_forces(modes, convoy, times, deck)
    weights = np.array([float(eval_flex_shape(md, x)) / md.omega ** 2 for md in modes])
    return times, weights @ q_flex


def speed_grid(v_min, v_max, v_step):
    """Speeds ``v_min, v_min + v_step, ...`` up to ``v_max`` inclusive."""
    if v_max < v_min:
        raise ValueError(f"v_max={v_max!r} < v_min={v_min!r}")
    if v_max == v_min:
        return np.array([float(v_min)])
    if not v_step > 0:
        raise ValueError(f"v_step must be > 0, got {v_step!r}")
    n = int(math.floor((v_max - v_min) / v_step + 1e-9))
    return v_min + v_step * np.arange(n + 1)


def default_workers():
    env = os.environ.get("SKEWDYN_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _envelope_point(args):
    deck, model, load, speed, eccentricity, settings, modes = args
    try:
        h = time_history(deck, model, _as_convoy(load, speed, eccentricity), settings, modes,
                         check_step=False)
    except Exception as exc:
        raise ResponseError(f"run at {speed / KMH:.6g} km/h failed: {exc}") from exc
    return h.max_abs_u, h.max_abs_u_ddot


def _map(fn, jobs, workers):
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


def envelope(deck, model, train, v_min, v_max, v_step, settings=None, workers=None,
             modes=None, eccentricity=0.0):
    """Maximum |u| and |u''| at the evaluation point for each speed [m/s]."""
    settings = settings or RunSettings()
    if modes is None:
        modes = find_modes(deck, model, settings.n_modes)
    _check_step(modes, settings)
    speeds = speed_grid(v_min, v_max, v_step)
    jobs = [(deck, model, train, float(v), eccentricity, settings, modes) for v in speeds]
    results = _map(_envelope_point, jobs, workers)
    return EnvelopeResult(speeds, np.array([r[0] for r in results]),
                          np.array([r[1] for r in results]))


def resonance_speeds(f0, D, i_max):
    """Speeds [m/s] ``f0 D / i`` at which axle groups spaced ``D`` excite ``f0``."""
    if not (f0 > 0 and D > 0):
        raise ValueError("f0 and D must be > 0")
    if i_max < 1:
        raise ValueError("i_max must be >= 1")
    return [f0 * D / i for i in range(1, i_max + 1)]


def daf(deck, model, train, speed, settings=None, modes=None, eccentricity=0.0):
    """Peak dynamic over peak quasi-static displacement at the evaluation point."""
    settings = settings or RunSettings()
    if modes is None:
        modes = find_modes(deck, model, settings.n_modes)
    convoy = _as_convoy(train, speed, eccentricity)
    dynamic = time_history(deck, model, convoy, settings, modes, check_step=False)
    _, static = quasi_static_history(deck, model, convoy, settings, modes)
    peak = float(np.max(np.abs(static)))
    if peak == 0.0:
        raise ResponseError("quasi-static displacement is zero; DAF undefined")
    return dynamic.max_abs_u / peak
