import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neuroshape.netsim import ConfigError, SpikeRaster
from neuroshape.postproc import (
    AccumulatorConfig,
    accumulate_fixed,
    accumulate_variable,
    increment_lengths,
    to_bipolar,
)

from oracles import fixed_accumulator


def pulses(n_steps, starts_by_neuron, width=10):
    rows = np.zeros((len(starts_by_neuron), n_steps), dtype=np.uint8)
    for i, starts in enumerate(starts_by_neuron):
        for s in starts:
            rows[i, s : s + width] = 1
    return SpikeRaster(rows, 1e-6)


def random_raster(seed, n_neurons=4, n_steps=2000, p_start=0.01, width=10, tail=400):
    rng = np.random.default_rng(seed)
    starts = [np.flatnonzero(rng.random(n_steps - tail) < p_start) for _ in range(n_neurons)]
    return pulses(n_steps, starts, width)


class TestFixed:
    def test_zero(self):
        tr = accumulate_fixed(pulses(100, [[]]))
        assert not tr.a_out.any() and not tr.a.any()

    def test_isolated_pulse_keeps_width(self):
        tr = accumulate_fixed(pulses(100, [[20]]))
        assert int(tr.a_out.sum()) == 10
        assert tr.a_out[20:30].all()

    def test_overlapping_pulses_are_stretched(self):
        tr = accumulate_fixed(pulses(100, [[20], [20]]))
        assert int(tr.a_out.sum()) == 20
        assert tr.a_out[20:40].all()

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_oracle(self, seed):
        r = random_raster(seed, p_start=0.03)
        tr = accumulate_fixed(r)
        assert tr.a_out.tolist() == fixed_accumulator(r.summed.tolist())

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), p=st.floats(0.001, 0.05))
    def test_mass_conservation(self, seed, p):
        r = random_raster(seed, p_start=p, tail=2000, n_steps=4000)
        tr = accumulate_fixed(r)
        assert tr.a[-1] == 0
        assert int(tr.a_out.sum()) == int(r.summed.sum())

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_more_pulses_never_less_output(self, seed):
        base = random_raster(seed, p_start=0.01)
        extra = random_raster(seed + 1, p_start=0.01)
        merged = SpikeRaster(np.concatenate([base.per_neuron, extra.per_neuron]), base.dt)
        assert accumulate_fixed(merged).a_out.sum() >= accumulate_fixed(base).a_out.sum()

    def test_state_never_negative(self):
        tr = accumulate_fixed(random_raster(3, p_start=0.05))
        assert tr.a.min() >= 0
        assert set(np.unique(tr.a_out)) <= {0, 1}

    def test_overflow_is_recorded(self):
        rows = np.ones((5, 200), dtype=np.uint8)
        tr = accumulate_fixed(SpikeRaster(rows, 1e-6), AccumulatorConfig(overflow_limit=50))
        assert tr.overflow_steps > 0
        assert accumulate_fixed(SpikeRaster(rows, 1e-6)).overflow_steps == 0


class TestVariable:
    def test_single_pulse(self):
        tr = accumulate_variable(pulses(100, [[30]]), AccumulatorConfig(epsilon_norm=5))
        assert int(tr.a_out.sum()) == 5
        assert tr.a_out[30:35].all()

    def test_no_pulses(self):
        tr = accumulate_variable(pulses(100, [[], []]), AccumulatorConfig(epsilon_norm=5))
        assert not tr.a_out.any()
        assert tr.scheduled_steps == 0

    def test_three_active_pulses(self):
        # two pulses already high when the third starts: N_fp = 3
        r = pulses(200, [[10], [12], [15]])
        lengths = increment_lengths(r, AccumulatorConfig(epsilon_norm=4))
        assert lengths[15] == 12
        assert lengths[10] == 4 and lengths[12] == 8

    def test_edges_mode_counts_onsets_only(self):
        r = pulses(200, [[10], [15], [15]])
        lengths = increment_lengths(r, AccumulatorConfig(epsilon_norm=4, count_mode="edges"))
        assert lengths[15] == 8

    def test_minimum_length_is_one(self):
        tr = accumulate_variable(pulses(100, [[30]]), AccumulatorConfig(epsilon_norm=0.2))
        assert int(tr.a_out.sum()) == 1

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), eps=st.floats(0.5, 12.0))
    def test_mass_conservation(self, seed, eps):
        r = random_raster(seed, p_start=0.01, n_steps=6000, tail=3000)
        tr = accumulate_variable(r, AccumulatorConfig(epsilon_norm=eps))
        assert tr.a[-1] == 0
        assert int(tr.a_out.sum()) == tr.scheduled_steps

    def test_default_epsilon_from_pulse_width(self):
        assert AccumulatorConfig.for_pulse_width(10).epsilon_norm == pytest.approx(7.0)


class TestBipolar:
    def test_levels(self):
        tr = accumulate_fixed(pulses(40, [[0]]))
        y = to_bipolar(tr)
        assert set(np.unique(y)) == {-1.0, 1.0}

    def test_all_zero(self):
        assert np.all(to_bipolar(accumulate_fixed(pulses(10, [[]]))) == -1)

    def test_all_one(self):
        r = SpikeRaster(np.ones((1, 10), dtype=np.uint8), 1e-6)
        assert np.all(to_bipolar(accumulate_fixed(r)) == 1)

    def test_half_duty_zero_mean(self):
        r = pulses(1000, [list(range(0, 1000, 20))])
        assert to_bipolar(accumulate_fixed(r)).mean() == pytest.approx(0.0)


@pytest.mark.parametrize("kwargs", [{"decrement": 0}, {"output_threshold": -1}, {"epsilon_norm": 0}, {"count_mode": "x"}])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        AccumulatorConfig(**kwargs)


def test_trace_csv(tmp_path):
    tr = accumulate_fixed(pulses(30, [[5]]))
    path = tmp_path / "trace.csv"
    tr.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,a,a_out"
    assert len(lines) == 31
    assert lines[6].endswith(",1")
