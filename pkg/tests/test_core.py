import numpy as np
import pytest
from hypothesis import given, strategies as st

from abwlab.core import (
    ActionGrid,
    InvalidArgumentError,
    InvalidMeasurementError,
    ProbeTrainSpec,
    TrainMeasurement,
    gap_from_rate,
    make_rng,
    rate_from_gap,
    train_output_rate,
)

L = 12112


def test_rate_from_gap_examples():
    assert rate_from_gap(L, 121.12e-6) == pytest.approx(100.0, rel=1e-12)
    assert rate_from_gap(L, 242.24e-6) == pytest.approx(50.0, rel=1e-12)


@pytest.mark.parametrize("gap", [0.0, -1e-6])
def test_rate_from_gap_rejects_nonpositive(gap):
    with pytest.raises(InvalidArgumentError):
        rate_from_gap(L, gap)


@given(st.integers(64, 100_000), st.floats(1e-7, 1.0))
def test_doubling_gap_halves_rate(bits, gap):
    assert rate_from_gap(bits, 2 * gap) == pytest.approx(rate_from_gap(bits, gap) / 2, rel=1e-12)


@given(st.integers(64, 100_000), st.floats(1e-3, 1e5))
def test_gap_rate_roundtrip(bits, rate):
    assert rate_from_gap(bits, gap_from_rate(bits, rate)) == pytest.approx(rate, rel=1e-12)


def test_train_output_rate_examples():
    assert train_output_rate([0, 121.12e-6, 242.24e-6], L) == pytest.approx(100.0, rel=1e-12)
    assert train_output_rate([0, 100e-6, 300e-6], L) == pytest.approx(2 * L / 300e-6 / 1e6, rel=1e-12)
    assert train_output_rate([0, 100e-6, 300e-6], L) == pytest.approx(80.7467, abs=1e-4)


@pytest.mark.parametrize("n", [2, 3, 17, 1000])
def test_equal_gaps_give_l_over_g(n):
    g = 181.68e-6
    assert train_output_rate(g * np.arange(n), L) == pytest.approx(L / g / 1e6, rel=1e-12)


@pytest.mark.parametrize("times", [[0, 0], [0, 2e-6, 1e-6], [1.0]])
def test_train_output_rate_rejects_bad_timestamps(times):
    with pytest.raises(InvalidMeasurementError):
        train_output_rate(times, L)


@given(st.lists(st.floats(1e-7, 1e-2), min_size=1, max_size=200))
def test_output_rate_equals_size_over_mean_gap(gaps):
    t = np.concatenate([[0.0], np.cumsum(gaps)])
    expected = L / np.mean(gaps) / 1e6
    assert train_output_rate(t, L) == pytest.approx(expected, rel=1e-12)


def test_train_measurement_fields():
    spec = ProbeTrainSpec(50.0, L, 3)
    m = TrainMeasurement(spec, [1.0, 1.0 + 242.24e-6, 1.0 + 484.48e-6])
    assert m.output_rate == pytest.approx(50.0, rel=1e-9)
    np.testing.assert_allclose(m.output_gaps, 242.24e-6, rtol=1e-9)
    assert m.input_rate == 50.0
    with pytest.raises(ValueError):
        m.departure_times[0] = 0.0


def test_train_measurement_checks_count_and_order():
    spec = ProbeTrainSpec(50.0, L, 3)
    with pytest.raises(InvalidMeasurementError):
        TrainMeasurement(spec, [0.0, 1.0])
    with pytest.raises(InvalidMeasurementError):
        TrainMeasurement(spec, [0.0, 2.0, 1.0])


@pytest.mark.parametrize("kwargs", [dict(rate=0.0), dict(rate=10, packet_count=1),
                                    dict(rate=10, packet_size_bits=0)])
def test_probe_spec_validation(kwargs):
    with pytest.raises(InvalidArgumentError):
        ProbeTrainSpec(**kwargs)


def test_probe_spec_gap():
    assert ProbeTrainSpec(100.0, L).input_gap == pytest.approx(121.12e-6, rel=1e-12)


def test_action_grid():
    g = ActionGrid(5.0, 20)
    np.testing.assert_allclose(g.rates, np.arange(5, 101, 5))
    assert g.rate(0) == 5 and g.rate(19) == 100 == g.top
    assert np.all(np.diff(g.rates) > 0)
    with pytest.raises(InvalidArgumentError):
        ActionGrid(5.0, 1)
    with pytest.raises(InvalidArgumentError):
        ActionGrid(0.0, 5)


def test_rng_streams_reproducible_and_distinct():
    a = make_rng(7, 0, 1, 2).random(5)
    b = make_rng(7, 0, 1, 2).random(5)
    c = make_rng(7, 0, 1, 3).random(5)
    d = make_rng(8, 0, 1, 2).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    with pytest.raises(InvalidArgumentError):
        make_rng(-1)
