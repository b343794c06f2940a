"""Exact SDOF stepping.

The reference is the matrix exponential of the augmented linear system
``z = (w, w', Q, dQ/dt)``, which is exact for linear forcing.
"""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from skewdyn.integrator import ModalState, coefficients, integrate, step


def expm_step(omega, xi, dt, w, wd, q0, q1):
    slope = (q1 - q0) / dt
    M = np.array([[0.0, 1.0, 0.0, 0.0],
                  [-omega ** 2, -2 * xi * omega, 1.0, 0.0],
                  [0.0, 0.0, 0.0, 1.0],
                  [0.0, 0.0, 0.0, 0.0]])
    z = expm(M * dt) @ np.array([w, wd, q0, slope])
    return z[0], z[1]


class TestCoefficients:
    def test_rejects_overdamped(self):
        with pytest.raises(ValueError, match="overdamped"):
            coefficients(10.0, 1.0, 0.01)

    @pytest.mark.parametrize("args", [(0.0, 0.0, 0.01), (-1.0, 0.0, 0.01), (10.0, 0.0, 0.0)])
    def test_rejects_bad_inputs(self, args):
        with pytest.raises(ValueError):
            coefficients(*args)

    def test_continuous_across_small_step_switch(self):
        from skewdyn.integrator import SMALL_STEP

        omega = 37.0
        below = coefficients(omega, 0.02, SMALL_STEP * (1 - 1e-9) / omega)
        above = coefficients(omega, 0.02, SMALL_STEP * (1 + 1e-9) / omega)
        for name in ("A", "B", "C", "D", "Ap", "Bp", "Cp", "Dp"):
            assert getattr(below, name) == pytest.approx(getattr(above, name), rel=1e-7)

    @given(st.floats(0.5, 2000.0), st.floats(0.0, 0.5), st.floats(1e-4, 0.05),
           st.floats(-1, 1), st.floats(-50, 50), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
    @settings(max_examples=200, deadline=None)
    def test_single_step_matches_matrix_exponential(self, omega, xi, dt, w, wd, q0, q1):
        assume(omega * dt < 3.0)
        co = coefficients(omega, xi, dt)
        got = step(ModalState(w, wd, 0.0), co, q0, q1)
        ref_w, ref_wd = expm_step(omega, xi, dt, w, wd, q0, q1)
        scale_w = abs(w) + abs(wd) * dt + (abs(q0) + abs(q1)) / omega ** 2 + 1e-300
        scale_wd = abs(w) * omega + abs(wd) + (abs(q0) + abs(q1)) / omega + 1e-300
        assert abs(got.w - ref_w) <= 1e-12 * scale_w
        assert abs(got.w_dot - ref_wd) <= 1e-12 * scale_wd


class TestClosedForms:
    omega, xi, dt = 2 * math.pi * 5.878, 0.02, 1e-3

    def test_step_response(self):
        Q = 3.0
        h = integrate(self.omega, np.full(2001, Q), 2.0, self.dt, self.xi)
        wd = self.omega * math.sqrt(1 - self.xi ** 2)
        t = h.times
        exact = Q / self.omega ** 2 * (1 - np.exp(-self.xi * self.omega * t) * (
            np.cos(wd * t) + self.xi / math.sqrt(1 - self.xi ** 2) * np.sin(wd * t)))
        np.testing.assert_allclose(h.w, exact, rtol=1e-10, atol=1e-10 * Q / self.omega ** 2)

    def test_ramp_response_undamped(self):
        rate = 7.0
        h = integrate(self.omega, lambda t: rate * t, 1.0, self.dt)
        t = h.times
        exact = rate / self.omega ** 2 * (t - np.sin(self.omega * t) / self.omega)
        np.testing.assert_allclose(h.w, exact, rtol=1e-10, atol=1e-12 * exact.max())

    def test_damped_free_vibration(self):
        w0, v0 = 0.01, -0.3
        h = integrate(self.omega, np.zeros(3001), 3.0, self.dt, self.xi, initial=(w0, v0))
        wd = self.omega * math.sqrt(1 - self.xi ** 2)
        t = h.times
        exact = np.exp(-self.xi * self.omega * t) * (
            w0 * np.cos(wd * t) + (v0 + self.xi * self.omega * w0) / wd * np.sin(wd * t))
        np.testing.assert_allclose(h.w, exact, rtol=1e-10, atol=1e-10 * w0)

    def test_energy_conserved_undamped(self):
        h = integrate(self.omega, np.zeros(10001), 10.0, self.dt, 0.0, initial=(1e-3, 0.2))
        energy = 0.5 * h.w_dot ** 2 + 0.5 * self.omega ** 2 * h.w ** 2
        assert np.max(np.abs(energy / energy[0] - 1)) < 1e-10

    def test_acceleration_from_equation_of_motion(self):
        q = np.sin(np.arange(501) * 0.01)
        h = integrate(self.omega, q, 0.5, self.dt, self.xi)
        np.testing.assert_allclose(
            h.w_ddot, q - 2 * self.xi * self.omega * h.w_dot - self.omega ** 2 * h.w, rtol=1e-14,
            atol=1e-14)

    def test_against_adaptive_ode_solver(self):
        forcing = lambda t: 100.0 * np.sin(9.0 * t) + 20.0
        dt = 1e-4
        h = integrate(self.omega, forcing, 1.0, dt, self.xi)
        sol = solve_ivp(lambda t, z: [z[1], forcing(t) - 2 * self.xi * self.omega * z[1]
                                      - self.omega ** 2 * z[0]],
                        (0, 1.0), [0.0, 0.0], t_eval=h.times[::100], rtol=1e-11, atol=1e-14)
        # linear interpolation of a smooth load: O(dt^2) error only
        np.testing.assert_allclose(h.w[::100], sol.y[0], atol=1e-6 * np.max(np.abs(sol.y[0])))


class TestRefinement:
    @given(st.floats(1.0, 500.0), st.floats(0.0, 0.3), st.floats(-10, 10), st.floats(-10, 10))
    @settings(max_examples=50, deadline=None)
    def test_linear_forcing_is_refinement_invariant(self, omega, xi, a, b):
        forcing = lambda t: a + b * t
        coarse = integrate(omega, forcing, 0.5, 1e-2, xi)
        fine = integrate(omega, forcing, 0.5, 2.5e-3, xi)
        scale = np.max(np.abs(fine.w)) + 1e-300
        assert np.max(np.abs(coarse.w - fine.w[::4])) <= 1e-12 * scale

    def test_refinement_invariance_tight(self):
        omega = 2 * math.pi * 5.878
        forcing = lambda t: 3.0 - 2.0 * t
        coarse = integrate(omega, forcing, 1.0, 1e-3, 0.02)
        fine = integrate(omega, forcing, 1.0, 5e-4, 0.02)
        scale = np.max(np.abs(fine.w))
        assert np.max(np.abs(coarse.w - fine.w[::2])) <= 1e-12 * scale


class TestLinearity:
    @given(st.floats(-5, 5), st.floats(-5, 5))
    @settings(max_examples=30, deadline=None)
    def test_superposition(self, a, b):
        omega = 40.0
        q1 = np.sin(np.linspace(0, 3, 301))
        q2 = np.cos(np.linspace(0, 7, 301)) ** 2
        h1 = integrate(omega, q1, 0.3, 1e-3, 0.05)
        h2 = integrate(omega, q2, 0.3, 1e-3, 0.05)
        h = integrate(omega, a * q1 + b * q2, 0.3, 1e-3, 0.05)
        np.testing.assert_allclose(h.w, a * h1.w + b * h2.w, atol=1e-13)

    def test_zero_forcing_at_rest(self):
        h = integrate(10.0, np.zeros(101), 0.1, 1e-3)
        assert not np.any(h.w) and not np.any(h.w_dot)

    def test_forcing_length_checked(self):
        with pytest.raises(ValueError, match="samples"):
            integrate(10.0, np.zeros(50), 0.1, 1e-3)

    def test_accepts_mode_like_object(self):
        class Fake:
            omega = 12.0

        a = integrate(Fake(), np.ones(11), 0.01, 1e-3)
        b = integrate(12.0, np.ones(11), 0.01, 1e-3)
        np.testing.assert_array_equal(a.w, b.w)
        assert a.state(3).w == b.w[3]
