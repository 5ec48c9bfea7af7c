"""Signal model: sample generation, energy statistic, moment formulas."""
import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

import distdetect as dd
from distdetect.model import Hypothesis


def _sensor(sigma2=1.0, h=1.0, zeta=0.1, signal=None, n=10, amp=0.2):
    if signal is None:
        signal = np.full(n, amp)
    return dd.SensorParams(sigma2, h, zeta, np.asarray(signal, dtype=float))


class TestSensorParams:
    def test_xi_is_derived_from_signal(self):
        s = _sensor(sigma2=1.0, n=10, amp=0.2)
        # sum(s^2) = 10 * 0.04 = 0.4 over N=10 samples of unit-variance noise
        assert_allclose(s.xi, 0.4 / (10 * 1.0), rtol=1e-12)

    def test_degenerate_variance_rejected(self):
        with pytest.raises(ValueError):
            _sensor(sigma2=0.0)

    def test_nonpositive_channel_rejected(self):
        with pytest.raises(ValueError):
            _sensor(h=0.0)
        with pytest.raises(ValueError):
            _sensor(zeta=-1.0)

    def test_empty_signal_rejected(self):
        with pytest.raises(ValueError):
            dd.SensorParams(1.0, 1.0, 0.1, np.array([]))

    def test_signal_is_immutable(self):
        s = _sensor()
        with pytest.raises((ValueError, RuntimeError)):
            s.signal[0] = 99.0


class TestGenerateObservations:
    def test_zero_signal_collapses_h1_to_h0(self):
        s = _sensor(signal=np.zeros(10))
        a = dd.generate_observations(s, 10, Hypothesis.H0, np.random.default_rng(7))
        b = dd.generate_observations(s, 10, Hypothesis.H1, np.random.default_rng(7))
        assert_allclose(a, b)

    def test_h1_adds_the_signal_deterministically(self):
        s = _sensor()
        noise = dd.generate_observations(s, 10, Hypothesis.H0, np.random.default_rng(3))
        x = dd.generate_observations(s, 10, Hypothesis.H1, np.random.default_rng(3))
        assert x.shape == (1, 10)
        assert_allclose((x - noise)[0], s.signal, atol=1e-15)

    def test_h1_sample_mean_matches_signal_level(self):
        s = _sensor(n=100, amp=0.2)
        rng = np.random.default_rng(11)
        x = dd.generate_observations(s, 100, Hypothesis.H1, rng, trials=10_000)
        assert abs(float(np.mean(x)) - 0.2) < 0.01


class TestEnergyStatistic:
    def test_zero_input(self):
        assert dd.energy_statistic(np.zeros(3)) == 0.0

    def test_hand_sum_of_squares(self):
        assert dd.energy_statistic(np.array([1.0, -1.0, 2.0])) == 6.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dd.energy_statistic(np.array([]))

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=30), st.randoms())
    def test_permutation_invariant(self, xs, pyrandom):
        x = np.array(xs)
        perm = list(range(len(xs)))
        pyrandom.shuffle(perm)
        assert_allclose(dd.energy_statistic(x), dd.energy_statistic(x[perm]), rtol=1e-12)

    def test_monte_carlo_mean_matches_model(self):
        s = _sensor(sigma2=1.0, n=10)
        rng = np.random.default_rng(5)
        x = dd.generate_observations(s, 10, Hypothesis.H0, rng, trials=100_000)
        t = dd.energy_statistic(x)
        assert abs(float(np.mean(t)) - 10.0) < 0.1


class TestStatisticMoments:
    def test_zero_snr_equalizes_hypotheses(self):
        m = dd.statistic_moments(_sensor(signal=np.zeros(10)), 10)
        assert (m.mean_h0, m.var_h0, m.mean_h1, m.var_h1) == (10.0, 20.0, 10.0, 20.0)

    def test_hand_evaluation_at_snr_04(self):
        s = _sensor(sigma2=1.0, n=10, amp=np.sqrt(0.4))  # sum(s^2)=4 -> xi=0.4
        m = dd.statistic_moments(s, 10)
        assert_allclose(m.mean_h1, 14.0, rtol=1e-12)
        assert_allclose(m.var_h1, 36.0, rtol=1e-12)

    def test_mean_gap_identity(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            sigma2 = float(rng.uniform(0.3, 3.0))
            n = int(rng.integers(2, 40))
            amp = float(rng.uniform(0.05, 1.0))
            s = _sensor(sigma2=sigma2, n=n, amp=amp)
            m = dd.statistic_moments(s, n)
            assert_allclose(m.mean_h1 - m.mean_h0, n * sigma2 * s.xi, rtol=1e-12)

    def test_variances_ordered(self):
        s = _sensor(sigma2=1.3, n=12, amp=0.4)
        m = dd.statistic_moments(s, 12)
        assert m.var_h1 >= m.var_h0 > 0

    def test_empirical_h1_variance(self):
        s = _sensor(sigma2=1.0, n=20, amp=0.3)
        rng = np.random.default_rng(9)
        x = dd.generate_observations(s, 20, Hypothesis.H1, rng, trials=100_000)
        t = dd.energy_statistic(x)
        m = dd.statistic_moments(s, 20)
        assert abs(float(np.var(t)) / m.var_h1 - 1.0) < 0.03


class TestCalibrateAverageSnr:
    def test_target_minus_4_db(self):
        sensors = [_sensor(sigma2=v, amp=0.2) for v in (0.5, 1.0, 2.0)]
        out = dd.calibrate_average_snr(sensors, -4.0)
        mean_xi = np.mean([s.xi for s in out])
        assert_allclose(mean_xi, 10 ** (-0.4), rtol=1e-9)

    def test_sensor_already_at_target_unchanged(self):
        s = _sensor(sigma2=1.0, n=10, amp=np.sqrt(10 ** (-0.4)))  # xi = 10^-0.4
        out = dd.calibrate_average_snr([s], -4.0)
        assert_allclose(out[0].signal, s.signal, rtol=1e-9)

    def test_ratios_preserved(self):
        a = _sensor(sigma2=1.0, amp=0.4)
        b = _sensor(sigma2=1.0, amp=0.4 / np.sqrt(2))
        out = dd.calibrate_average_snr([a, b], -2.0)
        assert_allclose(out[0].xi / out[1].xi, 2.0, rtol=1e-9)

    def test_all_zero_signals_rejected(self):
        with pytest.raises(ValueError):
            dd.calibrate_average_snr([_sensor(signal=np.zeros(10))], -4.0)


class TestBuildSensors:
    def test_sigma2_within_documented_range(self):
        sensors = dd.build_sensors(50, 10, seed=4)
        v = np.array([s.sigma2 for s in sensors])
        assert np.all(v >= 0.5) and np.all(v <= 2.0)

    def test_deterministic_given_seed(self):
        a = dd.build_sensors(8, 10, seed=12)
        b = dd.build_sensors(8, 10, seed=12)
        for x, y in zip(a, b):
            assert x.sigma2 == y.sigma2 and x.h == y.h
            assert_allclose(x.signal, y.signal)

    def test_deterministic_channel_flag(self):
        sensors = dd.build_sensors(5, 10, seed=1, deterministic_channel=True)
        assert all(s.h == 1.0 for s in sensors)

    def test_average_snr_hits_target(self):
        sensors = dd.build_sensors(20, 10, seed=6, xa_db=-1.0)
        assert_allclose(np.mean([s.xi for s in sensors]), 10 ** (-0.1), rtol=1e-9)


class TestScenario:
    def test_pfa_bounds_enforced(self):
        sensors = dd.build_sensors(3, 10, seed=0)
        with pytest.raises(ValueError):
            dd.Scenario(sensors=sensors, N=10, U=3.0, Pt=1.0, Pfa=1.5,
                        topology=dd.complete_graph(3), seed=0, solver=dd.SolverConfig())

    def test_topology_size_must_match(self):
        sensors = dd.build_sensors(3, 10, seed=0)
        with pytest.raises(ValueError):
            dd.Scenario(sensors=sensors, N=10, U=3.0, Pt=1.0, Pfa=0.1,
                        topology=dd.complete_graph(4), seed=0, solver=dd.SolverConfig())

    def test_make_scenario_wires_everything(self, fig1_scenario):
        assert fig1_scenario.M == 10
        assert fig1_scenario.topology.M == 10
        assert 0 < fig1_scenario.Pfa < 1


class TestStreams:
    def test_same_key_same_stream(self):
        a = dd.derive_stream(17, "mc", 0).standard_normal(4)
        b = dd.derive_stream(17, "mc", 0).standard_normal(4)
        assert_allclose(a, b)

    def test_distinct_keys_decorrelate(self):
        a = dd.derive_stream(17, "mc", 0).standard_normal(4)
        b = dd.derive_stream(17, "mc", 1).standard_normal(4)
        assert not np.allclose(a, b)


def test_halfrange_covers_h1_spread():
    sensors = dd.build_sensors(10, 10, seed=3)
    u = dd.suggest_statistic_halfrange(sensors, 10)
    for s in sensors:
        m = dd.statistic_moments(s, 10)
        assert 2 * u >= m.mean_h1 + 3 * np.sqrt(m.var_h1)
