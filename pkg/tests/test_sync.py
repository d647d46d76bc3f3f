"""Windowed Pearson measures and decay-rate indicators."""

import numpy as np
import pytest

from liouvsync.model import ModelParams
from liouvsync.sync import (
    DegenerateWindowError,
    cmax,
    decay_ratio,
    pearson,
    sync_series,
)


@pytest.fixture
def grid():
    times = np.linspace(0.0, 10.0, 2001)
    return times, np.sin(20.0 * times)


def test_pearson_identical_and_antiphase(grid):
    times, a = grid
    assert pearson(times, a, a, 1.0, 2.0) == pytest.approx(1.0, abs=1e-12)
    assert pearson(times, a, -a, 1.0, 2.0) == pytest.approx(-1.0, abs=1e-12)


def test_pearson_quadrature_orthogonality():
    # oracle: the cross integral of sin and cos over one full period vanishes
    omega0 = 20.0
    period = 2 * np.pi / omega0
    times = np.linspace(0.0, 2 * period, 801)
    a, b = np.sin(omega0 * times), np.cos(omega0 * times)
    assert abs(pearson(times, a, b, 0.0, period)) <= 1e-3


def test_pearson_affine_invariance(grid):
    times, a = grid
    b = np.cos(20.0 * times) * np.exp(-0.2 * times)
    base = pearson(times, a, b, 2.0, 1.5)
    assert pearson(times, 3.0 * a + 0.7, 2.0 * b - 1.1, 2.0, 1.5) == pytest.approx(base, abs=1e-12)
    assert pearson(times, -3.0 * a + 0.7, b, 2.0, 1.5) == pytest.approx(-base, abs=1e-12)


def test_pearson_window_guards(grid):
    times, a = grid
    with pytest.raises(ValueError):
        pearson(times, a, a, 9.5, 2.0)  # extends past the last sample
    with pytest.raises(ValueError):
        pearson(times[:40], a[:40], a[:40], 0.0, 0.05)  # too few samples
    with pytest.raises(DegenerateWindowError):
        pearson(times, np.ones_like(a), a, 1.0, 2.0)


def test_cmax_pure_delay():
    dt = 0.01
    times = np.arange(0.0, 12.0 + dt / 2, dt)
    a = np.sin(3.0 * times) * np.exp(-0.05 * times)
    delay = 0.25  # exactly 25 samples
    b = np.interp(times - delay, times, a)
    # 51 steps over [0, 0.5] puts the true delay exactly on the search grid
    value, tau = cmax(times, a, b, 2.0, 3.0, 0.5, delay_steps=51)
    assert value == pytest.approx(1.0, abs=1e-9)
    assert tau == pytest.approx(delay, abs=1e-12)


def test_cmax_dominates_pearson(grid):
    times, a = grid
    b = np.sin(20.0 * times + 1.1)
    for t0 in (0.5, 2.0, 5.0):
        plain = pearson(times, a, b, t0, 1.2)
        best, _ = cmax(times, a, b, t0, 1.2, 0.35)
        assert best >= plain - 1e-12


def test_cmax_equal_frequency_damped_signals():
    times = np.linspace(0.0, 8.0, 4001)
    a = np.exp(-times) * np.sin(20.0 * times)
    b = np.exp(-times) * np.sin(20.0 * times + 1.3)
    # window below the decay time: near-perfect delayed correlation
    value, tau = cmax(times, a, b, 1.0, 0.3, 0.33)
    assert value > 0.999
    # the shifted signal leads by 1.3 rad, so the scan wraps a full cycle
    assert tau == pytest.approx((2 * np.pi - 1.3) / 20.0, abs=0.01)


def test_cmax_requires_delay_coverage(grid):
    times, a = grid
    with pytest.raises(ValueError):
        cmax(times, a, a, 9.0, 0.8, 0.5)


def test_sync_series_matches_point_evaluation(grid):
    times, a = grid
    b = np.cos(20.0 * times) * (1.0 + 0.1 * np.sin(0.7 * times))
    series = sync_series(times, a, b, 1.2, 0.35, delay_steps=64)
    for idx in (0, 100, 500):
        t0 = series.times[idx]
        assert series.pearson[idx] == pytest.approx(pearson(times, a, b, t0, 1.2), abs=1e-9)
        value, tau = cmax(times, a, b, t0, 1.2, 0.35, delay_steps=64)
        assert series.cmax[idx] == pytest.approx(value, abs=1e-9)
        assert series.optimal_delay[idx] == pytest.approx(tau, abs=1e-12)
    assert np.all(series.cmax >= series.pearson - 1e-12)


def test_sync_series_degenerate_tail_is_nan():
    times = np.linspace(0.0, 30.0, 3001)
    a = np.exp(-3.0 * times) * np.sin(20.0 * times)
    series = sync_series(times, a, a, 1.2, 0.35)
    assert np.isnan(series.pearson[-1])  # fully decayed window
    assert series.pearson[0] == pytest.approx(1.0, abs=1e-9)


def test_sync_series_requires_uniform_grid():
    times = np.array([0.0, 0.1, 0.25, 0.4])
    with pytest.raises(ValueError):
        sync_series(times, times, times, 0.2, 0.1)


def test_decay_ratio_fully_subradiant_limit():
    result = decay_ratio(ModelParams(omega0=20.0, s12=0.8))
    assert abs(result.value) <= 1e-12


def test_decay_ratio_pumping_closes_the_gap():
    weak = decay_ratio(ModelParams(omega0=20.0, delta=2.0, s12=1.0, w=0.1))
    strong = decay_ratio(ModelParams(omega0=20.0, delta=2.0, s12=1.0, w=0.75))
    assert weak.value == pytest.approx(0.30257481, abs=1e-6)
    assert strong.value == pytest.approx(0.89433582, abs=1e-6)
    assert strong.value > 2.5 * weak.value  # pumping pushes the ratio toward one
    assert not weak.shared_decay


def test_decay_ratio_flags_shared_slow_rate():
    # three frequencies, and the slowest rate is carried by two of them
    result = decay_ratio(ModelParams(omega0=20.0, delta=1.0, w=0.5))
    assert result.shared_decay


def test_decay_ratio_rescaling_invariance():
    p = ModelParams(omega0=20.0, delta=2.0, s12=1.0, w=0.3)
    v1 = decay_ratio(p).value
    c = 7.3
    scaled = ModelParams(omega0=20.0 * c, delta=2.0 * c, s12=1.0 * c, gamma=c, w=0.3 * c)
    assert decay_ratio(scaled).value == pytest.approx(v1, abs=1e-9)
