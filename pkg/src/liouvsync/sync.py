"""Windowed Pearson synchronization measures and spectral-gap indicators.

The Pearson factor correlates two observable trajectories over a sliding
window; its delay-maximized variant scans a relative shift so that locking at
an arbitrary phase difference still registers as +1 (the optimal shift then
encodes the locked phase). Windows are never truncated: a window that does
not fit inside the sampled series is rejected, because silently shortening it
changes the measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .eppoints import block_eigensystem, cluster_count
from .model import ModelParams

__all__ = [
    "DegenerateWindowError",
    "SyncResult",
    "DecayRatio",
    "pearson",
    "cmax",
    "sync_series",
    "decay_ratio",
]

VARIANCE_FLOOR = 1e-24


class DegenerateWindowError(ValueError):
    """A windowed signal is constant; the correlation is undefined, not zero."""


def _window_samples(times: np.ndarray, a: np.ndarray, t: float, window: float,
                    min_samples: int = 32):
    eps = 1e-9 * (times[-1] - times[0])
    if t < times[0] - eps or t + window > times[-1] + eps:
        raise ValueError(
            f"window [{t:g}, {t + window:g}] is not covered by the series "
            f"[{times[0]:g}, {times[-1]:g}]"
        )
    mask = (times >= t - eps) & (times <= t + window + eps)
    if int(mask.sum()) < min_samples:
        raise ValueError(f"window holds {int(mask.sum())} samples; need >= {min_samples}")
    return times[mask], a[mask]


def _pearson_on(tt: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    width = tt[-1] - tt[0]
    xm = np.trapezoid(x, tt) / width
    ym = np.trapezoid(y, tt) / width
    vx = np.trapezoid((x - xm) ** 2, tt) / width
    vy = np.trapezoid((y - ym) ** 2, tt) / width
    if vx < VARIANCE_FLOOR or vy < VARIANCE_FLOOR:
        raise DegenerateWindowError(
            f"windowed variance below {VARIANCE_FLOOR:g}; correlation undefined"
        )
    num = np.trapezoid((x - xm) * (y - ym), tt) / width
    return float(num / np.sqrt(vx * vy))


def pearson(times, a, b, t: float, window: float) -> float:
    """Windowed Pearson correlation of two series over [t, t + window].

    Trapezoidal integrals on the sample grid; exactly +-1 for proportional
    (anti-proportional) windows. Raises :class:`DegenerateWindowError` when
    either windowed signal is constant.
    """
    times = np.asarray(times, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    tt, x = _window_samples(times, a, t, window)
    _, y = _window_samples(times, b, t, window)
    return _pearson_on(tt, x, y)


def cmax(times, a, b, t: float, window: float, delay_range: float,
         delay_steps: int = 128) -> tuple[float, float]:
    """Delay-maximized Pearson correlation.

    Maximizes pearson(a(s), b(s + tau)) over a uniform grid of
    ``delay_steps`` delays in [0, delay_range]; the shifted series is linearly
    interpolated. Returns (max value, optimal delay); the locked phase is
    (oscillation frequency) * (optimal delay).
    """
    times = np.asarray(times, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    eps = 1e-9 * (times[-1] - times[0])
    if t + window + delay_range > times[-1] + eps:
        raise ValueError("series does not cover the window plus the delay range")
    tt, x = _window_samples(times, a, t, window)
    best_val, best_tau = -np.inf, 0.0
    for tau in np.linspace(0.0, delay_range, delay_steps):
        y = np.interp(tt + tau, times, b)
        val = _pearson_on(tt, x, y)
        if val > best_val:
            best_val, best_tau = val, float(tau)
    return float(best_val), best_tau


@dataclass
class SyncResult:
    """Pearson and delay-maximized Pearson series over sliding window starts."""

    times: np.ndarray
    pearson: np.ndarray
    cmax: np.ndarray
    optimal_delay: np.ndarray
    window: float
    delay_range: float


def sync_series(times, a, b, window: float, delay_range: float,
                delay_steps: int = 128) -> SyncResult:
    """Evaluate pearson and cmax at every window start that fits the series.

    Requires a uniform time grid. Window starts run over every sample time t
    with t + window + delay_range inside the series. Starts whose windowed
    variance has decayed below the degeneracy floor yield NaN entries rather
    than an error, so long series remain usable past the point where the
    signals die out.
    """
    times = np.asarray(times, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dt = times[1] - times[0]
    if np.abs(np.diff(times) - dt).max() > 1e-9 * dt:
        raise ValueError("sync_series requires a uniform time grid")
    length = int(round(window / dt)) + 1
    if length < 32:
        raise ValueError(f"window holds {length} samples; need >= 32")
    eps = 1e-9 * (times[-1] - times[0])
    n_starts = int(np.sum(times + window + delay_range <= times[-1] + eps))
    if n_starts < 1:
        raise ValueError("no window start fits the series")

    weights = np.full(length, dt)
    weights[0] = weights[-1] = dt / 2.0
    width = (length - 1) * dt

    def window_stats(series: np.ndarray):
        win = sliding_window_view(series, length)[:n_starts]
        mean = win @ weights / width
        centered = win - mean[:, None]
        var = (centered**2) @ weights / width
        return centered, var

    a_centered, a_var = window_stats(a)
    taus = np.linspace(0.0, delay_range, delay_steps)
    corr = np.empty((delay_steps, n_starts))
    for k, tau in enumerate(taus):
        shifted = np.interp(times + tau, times, b)
        b_centered, b_var = window_stats(shifted)
        num = (a_centered * b_centered) @ weights / width
        with np.errstate(invalid="ignore", divide="ignore"):
            corr[k] = np.where(
                (a_var >= VARIANCE_FLOOR) & (b_var >= VARIANCE_FLOOR),
                num / np.sqrt(a_var * b_var),
                np.nan,
            )
    best = np.argmax(corr, axis=0)  # first maximum on ties
    all_nan = np.all(np.isnan(corr), axis=0)
    cmax_vals = np.where(all_nan, np.nan, corr[best, np.arange(n_starts)])
    opt = np.where(all_nan, np.nan, taus[best])
    return SyncResult(times[:n_starts], corr[0], cmax_vals, opt, window, delay_range)


@dataclass(frozen=True)
class DecayRatio:
    """Ratio of the two smallest coherence-sector decay rates.

    A value much below one predicts synchronization by frequency selection. A
    set ``shared_decay`` flag marks the case where the slowest decay rate is
    shared by modes at two different frequencies, which rules that mechanism
    out even when the ratio is small.
    """

    value: float
    shared_decay: bool
    eigenvalues: np.ndarray


def decay_ratio(p: ModelParams, tol_freq: float | None = None) -> DecayRatio:
    if tol_freq is None:
        tol_freq = 1e-4 * p.gamma
    lam, _ = block_eigensystem(p, "b")
    ratio = float(lam[-1].real / lam[-2].real)
    slowest = np.abs(lam.real - lam[-1].real) <= tol_freq
    shared = slowest.sum() >= 2 and cluster_count(lam.imag[slowest], tol_freq) >= 2
    return DecayRatio(ratio, bool(shared), lam)
