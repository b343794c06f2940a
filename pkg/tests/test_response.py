"""Response tests.

The main oracle is the classical series solution for a constant force
crossing an undamped simply supported beam:

    u(x, t) = sum 2P / (m L) / (w_n^2 - W_n^2) (sin W_n t - W_n / w_n sin w_n t) sin(n pi x / L)

with ``W_n = n pi v / L``, valid while the load is on the span.
"""

import dataclasses
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skewdyn.core import KMH, RunSettings
from skewdyn.eigen import find_modes
from skewdyn.loads import Axle, Convoy, Train, hslm_a1
from skewdyn.response import (EnvelopeResult, ResponseError, daf, default_workers, envelope,
                              quasi_static_history, resonance_speeds, speed_grid, time_history)

from conftest import example1, example2


def series_solution(deck, P, v, x, t, n_modes):
    L, m = deck.span_length, deck.mass_per_length
    u = np.zeros_like(t)
    a = np.zeros_like(t)
    for n in range(1, n_modes + 1):
        w = (n * math.pi / L) ** 2 * math.sqrt(deck.EI / m)
        W = n * math.pi * v / L
        amp = 2 * P / (m * L) / (w ** 2 - W ** 2) * math.sin(n * math.pi * x / L)
        u += amp * (np.sin(W * t) - W / w * np.sin(w * t))
        a += amp * (-W ** 2 * np.sin(W * t) + W * w * np.sin(w * t))
    return u, a


class TestSeriesOracle:
    @pytest.mark.parametrize("speed_kmh", [80.0, 250.0])
    def test_undamped_simply_supported(self, speed_kmh):
        deck = dataclasses.replace(example1(0.0), damping_ratio=0.0)
        v = speed_kmh * KMH
        run = RunSettings(n_modes=5, dt=1e-4, tail_time=0.0)
        h = time_history(deck, "simplified", Convoy.single(170e3, v), run)
        on_span = h.times <= deck.span_length / v
        u_ref, a_ref = series_solution(deck, 170e3, v, 7.5, h.times[on_span], 5)
        np.testing.assert_allclose(h.u[on_span], u_ref, atol=1e-6 * np.abs(u_ref).max())
        np.testing.assert_allclose(h.u_ddot[on_span], a_ref, atol=1e-4 * np.abs(a_ref).max())

    def test_analytical_model_agrees_when_straight(self):
        deck = dataclasses.replace(example1(0.0), damping_ratio=0.0)
        v = 150 * KMH
        run = RunSettings(n_modes=8, dt=1e-4, tail_time=0.0)
        h = time_history(deck, "analytical", Convoy.single(170e3, v), run)
        on_span = h.times <= deck.span_length / v
        # the analytical list also holds torsion modes, which a centred load cannot excite
        n_bending = sum(1 for md in find_modes(deck, "analytical", 8) if md.is_flexural)
        u_ref, _ = series_solution(deck, 170e3, v, 7.5, h.times[on_span], n_bending)
        np.testing.assert_allclose(h.u[on_span], u_ref, atol=1e-6 * np.abs(u_ref).max())
        assert np.max(np.abs(h.theta)) == 0.0


class TestTimeHistory:
    def test_static_limit(self):
        deck = example1(0.0)
        h = time_history(deck, "analytical", Convoy.single(170e3, 0.5),
                         RunSettings(tail_time=0.0))
        static = 170e3 * deck.span_length ** 3 / (48 * deck.EI)
        assert h.max_abs_u == pytest.approx(static, rel=0.015)

    def test_simplified_has_no_rotation(self, ex1):
        h = time_history(ex1, "simplified", Convoy.single(170e3, 30.0))
        assert h.theta is None

    def test_starts_at_rest_and_covers_tail(self, ex2):
        convoy = hslm_a1().at_speed(60.0)
        run = RunSettings(tail_time=0.5)
        h = time_history(ex2, "analytical", convoy, run)
        assert h.u[0] == 0.0
        assert h.times[-1] >= convoy.exit_time(ex2.span_length) + 0.5 - 1e-12

    def test_default_tail_is_five_periods(self, ex1):
        convoy = Convoy.single(170e3, 30.0)
        h = time_history(ex1, "simplified", convoy)
        f1 = find_modes(ex1, "simplified", 1)[0].freq_hz
        assert h.times[-1] == pytest.approx(convoy.exit_time(15.0) + 5.0 / f1, abs=1e-3)

    def test_zero_load_zero_response(self, ex1):
        h = time_history(ex1, "analytical", Convoy.single(0.0, 30.0))
        assert not np.any(h.u) and not np.any(h.u_ddot) and not np.any(h.theta)

    @given(st.floats(0.1, 10.0))
    @settings(max_examples=5, deadline=None)
    def test_linear_in_load(self, factor):
        deck = example2()
        modes = find_modes(deck, "analytical", 5)
        convoy = Train((Axle(0.0, 170e3), Axle(3.0, 170e3))).at_speed(50.0, 0.5)
        base = time_history(deck, "analytical", convoy, modes=modes)
        scaled = time_history(deck, "analytical", convoy.scaled(factor), modes=modes)
        np.testing.assert_allclose(scaled.u, factor * base.u, rtol=1e-12,
                                   atol=1e-13 * np.abs(base.u).max() * factor)

    def test_lateral_offset_uses_rotation(self, ex2):
        convoy = Convoy.single(170e3, 40.0, eccentricity=1.0)
        centre = time_history(ex2, "analytical", convoy, keep_modal=True)
        edge = time_history(ex2, "analytical", convoy,
                            RunSettings(lateral_offset=2.0), keep_modal=True)
        np.testing.assert_allclose(edge.u, centre.u - 2.0 * centre.theta, rtol=1e-12,
                                   atol=1e-15)

    def test_keep_modal(self, ex1):
        h = time_history(ex1, "analytical", Convoy.single(170e3, 30.0), keep_modal=True)
        assert h.q.shape == (5, len(h.times)) and h.p.shape == (5, len(h.times))

    def test_coarse_step_warns(self, ex1, caplog):
        with caplog.at_level(logging.WARNING, logger="skewdyn.response"):
            time_history(ex1, "simplified", Convoy.single(170e3, 30.0))
        assert "coarser" in caplog.text

    def test_deterministic(self, ex2):
        convoy = hslm_a1().at_speed(52.0)
        a = time_history(ex2, "analytical", convoy)
        b = time_history(ex2, "analytical", convoy)
        assert np.array_equal(a.u, b.u) and np.array_equal(a.u_ddot, b.u_ddot)


class TestQuasiStatic:
    def test_matches_beam_formula(self):
        deck = example1(0.0)
        times, u = quasi_static_history(deck, "simplified", Convoy.single(170e3, 10.0),
                                        RunSettings(n_modes=9, tail_time=0.0))
        static = 170e3 * deck.span_length ** 3 / (48 * deck.EI)
        assert np.max(u) == pytest.approx(static, rel=2e-4)

    def test_daf_near_one_at_crawl(self, ex1):
        assert daf(ex1, "simplified", Train.single(170e3), 0.5) == pytest.approx(1.0, abs=0.01)

    def test_daf_amplified_at_resonance(self, ex2):
        assert daf(ex2, "simplified", hslm_a1(), 190 * KMH) > 1.2


class TestEnvelope:
    def test_speed_grid_inclusive(self):
        np.testing.assert_allclose(speed_grid(100, 300, 5), np.arange(100, 301, 5))
        assert list(speed_grid(50, 50, 1)) == [50.0]
        with pytest.raises(ValueError):
            speed_grid(10, 5, 1)
        with pytest.raises(ValueError):
            speed_grid(1, 5, 0)

    def test_matches_individual_runs(self, ex2):
        modes = find_modes(ex2, "simplified", 5)
        env = envelope(ex2, "simplified", hslm_a1(), 150 * KMH, 160 * KMH, 5 * KMH,
                       modes=modes, workers=1)
        for v, u, a in zip(env.speeds, env.max_abs_u, env.max_abs_u_ddot):
            h = time_history(ex2, "simplified", hslm_a1().at_speed(v), modes=modes)
            assert (u, a) == (h.max_abs_u, h.max_abs_u_ddot)

    def test_parallel_equals_serial(self, ex2):
        args = (ex2, "simplified", hslm_a1(), 180 * KMH, 195 * KMH, 5 * KMH)
        serial = envelope(*args, workers=1)
        parallel = envelope(*args, workers=2)
        assert np.array_equal(serial.max_abs_u, parallel.max_abs_u)
        assert np.array_equal(serial.max_abs_u_ddot, parallel.max_abs_u_ddot)

    def test_result_validation(self):
        with pytest.raises(ValueError):
            EnvelopeResult(np.array([1.0, 1.0]), np.zeros(2), np.zeros(2))
        with pytest.raises(ValueError):
            EnvelopeResult(np.array([1.0]), np.zeros(2), np.zeros(2))

    def test_threads_env(self, monkeypatch):
        monkeypatch.setenv("SKEWDYN_THREADS", "3")
        assert default_workers() == 3

    def test_failure_names_speed(self, ex1, monkeypatch):
        import skewdyn.response as response

        def boom(*args, **kwargs):
            raise FloatingPointError("overflow")

        monkeypatch.setattr(response, "time_history", boom)
        with pytest.raises(ResponseError, match="100 km/h"):
            envelope(ex1, "simplified", Train.single(1.0), 100 * KMH, 100 * KMH, 1.0, workers=1)


class TestResonance:
    def test_reference_speeds(self):
        kmh = [v / KMH for v in resonance_speeds(5.878, 18.0, 3)]
        np.testing.assert_allclose(kmh, [380.8944, 190.4472, 126.9648], rtol=1e-12)

    def test_invalid(self):
        with pytest.raises(ValueError):
            resonance_speeds(0.0, 18.0, 3)
        with pytest.raises(ValueError):
            resonance_speeds(5.0, 18.0, 0)
