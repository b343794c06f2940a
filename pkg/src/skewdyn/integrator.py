"""Exact stepping of a damped SDOF under piecewise-linear forcing.

Solves ``w'' + 2 xi omega w' + omega^2 w = Q(t)`` where ``Q`` is linear
between samples.  The update is the closed-form solution over one step, so
the only approximation is the linear interpolation of the forcing.

The closed-form weights subtract nearly equal terms when ``omega dt`` is
small (five digits are lost at ``omega dt = 1e-4``), so below
``SMALL_STEP`` the same exact map is taken from the matrix exponential of
the system augmented with the forcing and its slope.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

__all__ = ["StepCoefficients", "ModalState", "ModalHistory", "coefficients", "step", "integrate"]


@dataclass(frozen=True)
class StepCoefficients:
    """Recurrence weights::

        w[i+1]  = A  w[i] + B  w'[i] + C  Q[i] + D  Q[i+1]
        w'[i+1] = A' w[i] + B' w'[i] + C' Q[i] + D' Q[i+1]
    """

    A: float
    B: float
    C: float
    D: float
    Ap: float
    Bp: float
    Cp: float
    Dp: float
    omega: float
    xi: float
    dt: float


@dataclass(frozen=True)
class ModalState:
    w: float
    w_dot: float
    w_ddot: float


@dataclass(frozen=True)
class ModalHistory:
    times: np.ndarray
    w: np.ndarray
    w_dot: np.ndarray
    w_ddot: np.ndarray

    def state(self, i):
        return ModalState(float(self.w[i]), float(self.w_dot[i]), float(self.w_ddot[i]))


SMALL_STEP = 0.1


def _coefficients_expm(omega, xi, dt):
    M = np.array([[0.0, 1.0, 0.0, 0.0],
                  [-omega * omega, -2.0 * xi * omega, 1.0, 0.0],
                  [0.0, 0.0, 0.0, 1.0],
                  [0.0, 0.0, 0.0, 0.0]])
    E = expm(M * dt)
    # Q(t) = Q_i + (Q_{i+1} - Q_i) t / dt
    return StepCoefficients(
        A=E[0, 0], B=E[0, 1], C=E[0, 2] - E[0, 3] / dt, D=E[0, 3] / dt,
        Ap=E[1, 0], Bp=E[1, 1], Cp=E[1, 2] - E[1, 3] / dt, Dp=E[1, 3] / dt,
        omega=omega, xi=xi, dt=dt)


def coefficients(omega, xi, dt):
    """Exact recurrence weights for natural frequency ``omega`` [rad/s]."""
    if not omega > 0:
        raise ValueError(f"omega must be > 0, got {omega!r}")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    if not 0 <= xi < 1:
        raise ValueError(f"damping ratio must be in [0, 1), got {xi!r} "
                         "(overdamped systems are not supported)")
    if omega * dt < SMALL_STEP:
        return _coefficients_expm(float(omega), float(xi), float(dt))
    k = omega * omega
    root = math.sqrt(1.0 - xi * xi)
    wd = omega * root
    decay = math.exp(-xi * omega * dt)
    s, c = math.sin(wd * dt), math.cos(wd * dt)
    r = xi / root
    two_xi = 2.0 * xi / (omega * dt)

    A = decay * (r * s + c)
    B = decay * s / wd
    C = (two_xi + decay * (((1.0 - 2.0 * xi * xi) / (wd * dt) - r) * s
                           - (1.0 + two_xi) * c)) / k
    D = (1.0 - two_xi + decay * ((2.0 * xi * xi - 1.0) / (wd * dt) * s + two_xi * c)) / k
    Ap = -decay * omega / root * s
    Bp = decay * (c - r * s)
    Cp = (-1.0 / dt + decay * ((omega / root + r / dt) * s + c / dt)) / k
    Dp = (1.0 - decay * (r * s + c)) / (k * dt)
    return StepCoefficients(A, B, C, D, Ap, Bp, Cp, Dp, omega, xi, dt)


def _accel(co, q, w, w_dot):
    return q - 2.0 * co.xi * co.omega * w_dot - co.omega * co.omega * w


def step(state, coeffs, q_i, q_next):
    """Advance one step; the acceleration is recovered from the equation of motion."""
    w = coeffs.A * state.w + coeffs.B * state.w_dot + coeffs.C * q_i + coeffs.D * q_next
    w_dot = coeffs.Ap * state.w + coeffs.Bp * state.w_dot + coeffs.Cp * q_i + coeffs.Dp * q_next
    return ModalState(w, w_dot, _accel(coeffs, q_next, w, w_dot))


def integrate(omega, forcing, t_end, dt, xi=0.0, initial=(0.0, 0.0)):
    """March from ``t = 0`` to ``t_end`` in steps of ``dt``.

    ``omega`` may also be a mode (its ``omega`` is used).  ``forcing`` is
    either an array of samples at ``t = i dt`` or a callable taking the
    array of sample times.  The system starts from ``initial = (w, w')``,
    at rest by default.
    """
    omega = getattr(omega, "omega", omega)
    if not t_end > 0:
        raise ValueError(f"t_end must be > 0, got {t_end!r}")
    n = int(math.ceil(t_end / dt - 1e-9))
    times = dt * np.arange(n + 1)
    q = np.asarray(forcing(times) if callable(forcing) else forcing, dtype=float)
    if q.shape != times.shape:
        raise ValueError(f"forcing has {q.size} samples, expected {times.size}")
    co = coefficients(omega, xi, dt)
    w_out, wd_out = _march(co, q.tolist(), initial)
    w = np.array(w_out)
    w_dot = np.array(wd_out)
    w_ddot = q - 2.0 * xi * omega * w_dot - omega * omega * w
    return ModalHistory(times, w, w_dot, w_ddot)


def _march(co, q, initial):
    A, B, C, D = co.A, co.B, co.C, co.D
    Ap, Bp, Cp, Dp = co.Ap, co.Bp, co.Cp, co.Dp
    w, wd = float(initial[0]), float(initial[1])
    w_out = [w]
    wd_out = [wd]
    q0 = q[0]
    for q1 in q[1:]:
        w, wd = A * w + B * wd + C * q0 + D * q1, Ap * w + Bp * wd + Cp * q0 + Dp * q1
        w_out.append(w)
        wd_out.append(wd)
        q0 = q1
    return w_out, wd_out
