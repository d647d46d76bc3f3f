"""Stationary states, two-time correlations, and the spectrum machinery."""

import numpy as np
import pytest
from scipy.linalg import expm

from liouvsync.model import ModelParams, analytic_eigs_b, pure_state_density
from liouvsync.spectra import (
    NonUniqueSteadyStateError,
    OutsideDomainError,
    SpectrumSeries,
    closed_form_terms,
    correlation_w0,
    default_omega_grid,
    fit_two_resonances,
    peak_half_width,
    spectrum_closed_form,
    spectrum_numeric,
    steady_state,
)

FIG5 = ModelParams(omega0=20.0, delta=0.5, s12=1.0)  # pump-free, coupled
FREE = ModelParams(omega0=20.0, delta=0.5)           # pump-free, uncoupled


def test_steady_state_ground_without_pumping():
    ss = steady_state(FIG5)
    expected = pure_state_density([0, 0, 0, 1])
    assert np.array_equal(ss.rho, expected)
    assert ss.residual <= 1e-12


def test_steady_state_degenerate_kernel_raises():
    with pytest.raises(NonUniqueSteadyStateError):
        steady_state(ModelParams(omega0=20.0, s12=1.0))


def test_steady_state_with_pumping_is_full_rank():
    ss = steady_state(ModelParams(omega0=20.0, delta=0.5, w=0.1))
    assert ss.residual <= 1e-10
    assert np.linalg.eigvalsh(ss.rho).min() > 1e-4


def _two_level_matrix(p):
    g, s, d, w0 = p.gamma, p.s12, p.delta, p.omega0
    return np.array(
        [[-g / 2 - 1j * (w0 + d / 2), -(g / 2 + 1j * s)],
         [-(g / 2 + 1j * s), -g / 2 - 1j * (w0 - d / 2)]],
        dtype=complex,
    )


@pytest.mark.parametrize("p", [FIG5, FREE, ModelParams(omega0=20.0, delta=1.0)])
def test_correlation_amplitudes_match_matrix_exponential(p):
    # oracle: dense matrix exponential of the two-amplitude system
    tau = np.linspace(0.0, 6.0, 31)
    init = (1 / np.sqrt(2.0), 1 / np.sqrt(2.0))
    egg, geg = correlation_w0(p, init, tau)
    m = _two_level_matrix(p)
    oracle = np.array([expm(m * t) @ np.asarray(init) for t in tau])
    assert np.abs(egg - oracle[:, 0]).max() <= 1e-12
    assert np.abs(geg - oracle[:, 1]).max() <= 1e-12


def test_correlation_initial_value_and_local_routes():
    tau = np.array([0.0, 0.5])
    egg, geg = correlation_w0(FIG5, (1.0, 0.0), tau)
    assert egg[0] == 1.0 and geg[0] == 0.0
    egg2, geg2 = correlation_w0(FIG5, (0.0, 1.0), tau)
    assert geg2[0] == 1.0 and egg2[0] == 0.0
    with pytest.raises(OutsideDomainError):
        correlation_w0(FIG5.replace(w=0.1), (1.0, 0.0), tau)


def test_correlation_at_coalescence_uses_secular_form():
    p = ModelParams(omega0=20.0, delta=1.0)  # the pair has merged
    root, _ = analytic_eigs_b(p)
    assert abs(root) < 1e-12
    tau = np.linspace(0.0, 5.0, 26)
    egg, geg = correlation_w0(p, (1.0, 0.0), tau)
    m = _two_level_matrix(p)
    oracle = np.array([expm(m * t) @ np.array([1.0, 0.0]) for t in tau])
    assert np.abs(egg - oracle[:, 0]).max() <= 1e-12
    assert np.abs(geg - oracle[:, 1]).max() <= 1e-12


def test_closed_form_nodes_are_exact():
    at_center = spectrum_closed_form(FREE, "collective_L", np.array([-20.0]))
    assert at_center.values[0] == 0.0
    at_shifted = spectrum_closed_form(FIG5, "collective_L", np.array([-19.0]))
    assert abs(at_shifted.values[0]) <= 1e-14
    num = spectrum_numeric(FIG5, "collective_L", np.array([-19.0]))
    assert abs(num.values[0]) <= 1e-10


def test_closed_form_domain_routing():
    omega = np.array([-21.0, -20.0])
    with pytest.raises(OutsideDomainError):
        spectrum_closed_form(FIG5, "sigma1", omega)  # coupled local: numeric only
    with pytest.raises(OutsideDomainError):
        spectrum_closed_form(FREE.replace(w=0.1), "collective_L", omega)
    spectrum_closed_form(FREE, "sigma2", omega)  # uncoupled local is printed


@pytest.mark.parametrize("p,tag", [
    (FREE, "collective_L"),
    (FIG5, "collective_L"),
    (FREE, "sigma1"),
    (FREE, "sigma2"),
])
def test_resolvent_matches_closed_form(p, tag):
    omega = default_omega_grid(p, 512)
    closed = spectrum_closed_form(p, tag, omega).values
    numeric = spectrum_numeric(p, tag, omega).values
    mask = np.abs(closed) > 1e-6 * np.abs(closed).max()
    rel = np.abs(numeric - closed)[mask] / np.abs(closed)[mask]
    assert rel.max() <= 1e-8


def test_spectra_effectively_nonnegative():
    for p, tag in ((FREE, "collective_L"), (FIG5, "collective_L"),
                   (FREE, "sigma1"), (FIG5.replace(w=0.1), "sigma1")):
        series = spectrum_numeric(p, tag, default_omega_grid(p, 600))
        assert series.values.min() >= -1e-10 * np.abs(series.values).max()


def test_two_term_interference_decomposition():
    omega = default_omega_grid(FREE, 400)
    for tag in ("collective_L", "sigma1", "sigma2"):
        t1, t2 = closed_form_terms(FREE, tag, omega)
        total = spectrum_closed_form(FREE, tag, omega).values
        assert np.abs(np.real(t1 - t2) - total).max() <= 1e-12
    t1, t2 = closed_form_terms(FIG5, "collective_L", omega)
    total = spectrum_closed_form(FIG5, "collective_L", omega).values
    assert np.abs(np.real(t1 - t2) - total).max() <= 1e-12


def test_grid_refinement_stability():
    coarse = np.linspace(-24.0, -16.0, 513)
    fine = np.linspace(-24.0, -16.0, 1025)  # contains every coarse point
    s_coarse = spectrum_numeric(FIG5, "collective_L", coarse).values
    s_fine = spectrum_numeric(FIG5, "collective_L", fine).values
    assert np.abs(s_fine[::2] - s_coarse).max() <= 1e-10


def test_fit_recovers_pole_parameters():
    # oracle: the two slow poles from the branch-root arithmetic
    root, lam = analytic_eigs_b(FIG5)
    omega = np.linspace(-24.0, -16.0, 8192)
    series = spectrum_closed_form(FIG5, "collective_L", omega)
    fits, meta = fit_two_resonances(series.omega, series.values)
    broad, narrow = fits
    assert broad.center == pytest.approx(lam[2].imag, abs=1e-6)
    assert narrow.center == pytest.approx(lam[3].imag, abs=1e-6)
    assert broad.half_width == pytest.approx(-lam[2].real, rel=1e-5)
    assert narrow.half_width == pytest.approx(-lam[3].real, rel=1e-4)
    # both width conventions recorded
    assert meta["full_widths"][0] == pytest.approx(2 * broad.half_width)
    # width disparity: the two fitted half-widths sit at (gamma +- Re root)/2
    assert broad.half_width == pytest.approx((1 + root.real) / 2, rel=0.05)
    assert narrow.half_width == pytest.approx((1 - root.real) / 2, rel=0.05)


def test_peak_half_width_metric():
    omega = np.linspace(-2.0, 2.0, 4001)
    lorentz = 1.0 / (omega**2 + 0.09)
    center, width, height = peak_half_width(omega, lorentz)
    assert center == pytest.approx(0.0, abs=1e-3)
    assert width == pytest.approx(0.3, rel=0.02)
    assert height == pytest.approx(1 / 0.09, rel=1e-3)


def test_spectrum_series_validation():
    with pytest.raises(ValueError):
        SpectrumSeries(np.array([0.0, 0.0, 1.0]), np.zeros(3), "sigma1", "resolvent")
    with pytest.raises(ValueError):
        SpectrumSeries(np.array([0.0, 1.0]), np.zeros(3), "sigma1", "resolvent")
