import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neuroshape.fitness import (
    AnalysisSettings,
    DegenerateNetwork,
    Objective,
    ObjectiveParams,
    SimEnv,
    calibrate_c,
    compose,
    evaluate,
    k_sigma,
    objective_v1,
    objective_v2,
    pick_signal_frequency,
    rate_term,
    separation_bins,
    separation_measure,
    snr_term,
)
from neuroshape.netsim import ConfigError, InputSignal, NetworkConfig

PARAMS = ObjectiveParams()


def small_env(n=4, **net):
    return SimEnv(
        network=NetworkConfig(n_neurons=n, **net),
        signal=InputSignal(amplitude=0.0005, dc_offset=0.002),
        analysis=AnalysisSettings(n_steps=2**15, fft_size=2**14),
    )


class TestKSigma:
    @pytest.mark.parametrize(
        "ratio, expected",
        [(0.1, 0.0), (0.2, 0.0), (0.5, 0.6), (0.0, 0.0)],
    )
    def test_cases(self, ratio, expected):
        assert k_sigma(1000.0, ratio * 1000.0, 0.2) == pytest.approx(expected, abs=1e-9)

    def test_silent_network(self):
        with pytest.raises(DegenerateNetwork):
            k_sigma(0.0, 0.0)


class TestSeparation:
    def test_single_neuron_on_bin(self):
        assert separation_measure([500.0], [500.0], 200.0, 0.1) == pytest.approx(1.1, abs=1e-12)

    def test_far_rates(self):
        n, m = 4, 7
        got = separation_measure(np.full(n, 1e6), np.linspace(10, 1000, m), 200.0, 0.1)
        assert got == pytest.approx(m * 0.1**n, rel=1e-9)

    def test_two_by_two(self):
        rates, bins, fn, off = [100.0, 300.0], [100.0, 200.0], 100.0, 0.1
        b = lambda f, r: math.exp(-(((f - r) / fn) ** 2)) + off
        expected = b(100, 100) * b(100, 300) + b(200, 100) * b(200, 300)
        assert separation_measure(rates, bins, fn, off) == pytest.approx(expected, abs=1e-12)

    @settings(max_examples=30)
    @given(
        rates=st.lists(st.floats(0, 3000), min_size=1, max_size=6),
        bins=st.lists(st.floats(0, 3000), min_size=1, max_size=6),
        data=st.data(),
    )
    def test_permutation_symmetry(self, rates, bins, data):
        pr = data.draw(st.permutations(rates))
        pb = data.draw(st.permutations(bins))
        a = separation_measure(rates, bins, 200.0, 0.1)
        assert separation_measure(pr, pb, 200.0, 0.1) == pytest.approx(a, rel=1e-12)

    def test_moving_a_clustered_rate_away(self):
        bins = separation_bins(PARAMS)
        clustered = [500.0, 510.0, 490.0]
        moved = [500.0, 510.0, 1000.0 + 3 * 200.0 + 10.0]
        assert separation_measure(moved, bins, 200.0, 0.1) < separation_measure(clustered, bins, 200.0, 0.1)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            separation_measure([], [1.0], 200.0, 0.1)

    def test_bin_grid(self):
        bins = separation_bins(ObjectiveParams(n_freq_bins=4, baseband=(0.0, 800.0)))
        np.testing.assert_allclose(bins, [100.0, 300.0, 500.0, 700.0])
        wide = separation_bins(ObjectiveParams(n_freq_bins=2, separation_band=(0.0, 4000.0)))
        np.testing.assert_allclose(wide, [1000.0, 3000.0])


class TestAddends:
    def test_objective_one(self):
        assert compose(20.0, 2000.0, 100.0, PARAMS) == pytest.approx(1.0, abs=1e-9)

    def test_objective_one_and_a_half(self):
        assert compose(60.0, 4000.0, 0.0, PARAMS) == pytest.approx(1.5, abs=1e-9)

    @given(a=st.floats(-19.0, 200.0), b=st.floats(-19.0, 200.0))
    def test_snr_term_decreasing(self, a, b):
        if a < b - 1e-9:
            assert snr_term(a, PARAMS) > snr_term(b, PARAMS)

    @given(d=st.floats(0.0, 1e5))
    def test_rate_term_linear(self, d):
        assert rate_term(2000.0, PARAMS) == 0.0
        assert rate_term(2000.0 + d, PARAMS) == pytest.approx(d / 2000.0)
        assert rate_term(2000.0 - d, PARAMS) == pytest.approx(d / 2000.0)

    def test_signed_variant(self):
        p = ObjectiveParams(signed_rate_term=True)
        assert rate_term(1000.0, p) == pytest.approx(-0.5)

    @pytest.mark.parametrize(
        "kwargs",
        [{"f_norm": 0.0}, {"c_off": -0.1}, {"n_freq_bins": 0}, {"n_repeats": 0}],
    )
    def test_param_validation(self, kwargs):
        with pytest.raises(ConfigError):
            ObjectiveParams(**kwargs)


class TestPipeline:
    def test_signal_frequency_in_band_and_on_bin(self):
        env = small_env()
        rng = np.random.default_rng(0)
        width = 1e6 / env.analysis.fft_size
        for _ in range(50):
            f = pick_signal_frequency(rng, env, (10.0, 1000.0))
            assert 10.0 + 3 * width <= f <= 1000.0 - 3 * width
            assert f / width == pytest.approx(round(f / width))

    def test_golden_value(self):
        env = small_env()
        w = np.random.default_rng(42).uniform(-0.2, 0.0, (4, 4)) * 0.01
        assert objective_v1(w.ravel(), PARAMS, env, seed=7) == pytest.approx(GOLDEN_V1, rel=1e-9)
        assert objective_v2(w.ravel(), PARAMS, env, seed=7) == pytest.approx(GOLDEN_V2, rel=1e-9)

    def test_zero_c_drops_third_addend(self):
        env = small_env()
        g = np.zeros(16)
        v1, p1 = evaluate(g, PARAMS, env, 3, "v1")
        v2, p2 = evaluate(g, ObjectiveParams(c=0.0), env, 3, "v2")
        assert v2 == pytest.approx(v1 - p1[0].third_term, abs=1e-12)
        assert p2[0].third_term == 0.0

    def test_single_neuron_third_addend(self):
        env = small_env(n=1)
        params = ObjectiveParams(c=2.5)
        _, parts = evaluate(np.zeros(1), params, env, 1, "v2")
        b = parts[0]
        expected = 2.5 * separation_measure([b.mean_rate], separation_bins(params), 200.0, 0.1)
        assert b.third_term == pytest.approx(expected, abs=1e-12)

    def test_silent_network_gets_worst(self):
        env = SimEnv(NetworkConfig(n_neurons=2), InputSignal(kind="zero"), AnalysisSettings(n_steps=2**14, fft_size=2**14))
        assert objective_v1(np.zeros(4), PARAMS, env, seed=0) == 1000.0
        assert objective_v2(np.zeros(4), PARAMS, env, seed=0) == 1000.0

    def test_wrong_genome_length(self):
        with pytest.raises(ValueError):
            evaluate(np.zeros(5), PARAMS, small_env(), 0)

    def test_same_seed_same_value(self):
        env = small_env()
        g = np.full(16, -0.001)
        obj = Objective(PARAMS, env, "v2")
        assert obj(g, 11) == obj(g, 11)

    def test_repeats_reduce_variance(self):
        env = small_env()
        g = np.full(16, -0.001)
        obj = Objective(PARAMS, env, "v1")
        single = [obj(g, s, 1) for s in range(24)]
        averaged = [obj(g, 100 + s, 8) for s in range(24)]
        assert np.var(averaged) < np.var(single)

    def test_calibration_normalises_random_population(self):
        env = small_env()
        c = calibrate_c(PARAMS, env, n_samples=6, seed=1)
        assert c > 0
        params = ObjectiveParams(c=c)
        thirds = []
        for child in np.random.SeedSequence(1).spawn(6):
            rng = np.random.default_rng(child)
            w = rng.uniform(-0.2, 0.0, 16)
            thirds.append(evaluate(w, params, env, int(rng.integers(2**32)), "v2")[1][0].third_term)
        # different tones and starts than the calibration draws, so only roughly 1
        assert 0.2 < np.mean(thirds) < 5.0


GOLDEN_V1 = 0.9415817719941497
GOLDEN_V2 = 0.944781771995314
