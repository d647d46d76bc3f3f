"""Both evolvers against each other, the physicality bounds, and phase logic."""

import numpy as np
import pytest

from liouvsync.dynamics import (
    AtExceptionalPointError,
    NotSFRError,
    OBSERVABLE_NAMES,
    StepSizeWarning,
    StepTooLargeError,
    Trajectory,
    block_solution,
    relative_phase,
    rk4_evolve,
    sfr_phase_prediction,
    spectral_evolve,
)
from liouvsync.linalg import eig
from liouvsync.model import (
    ModelParams,
    build_liouvillian,
    extract_block,
    hamiltonian,
    pure_state_density,
    validate_density_matrix,
)

UNIFORM = pure_state_density([0.5, 0.5, 0.5, 0.5])
ALTERNATING = pure_state_density([0.5, -0.5, 0.5, -0.5])
FIG_SFR = ModelParams(omega0=20.0, delta=0.3, w=0.1)          # one frequency
FIG_LOCK = ModelParams(omega0=20.0, delta=2.0, s12=1.0, w=0.1)  # slow-mode locking
EP_POINT = ModelParams(omega0=20.0, delta=1.0)


def test_stationary_state_stays_put():
    ground = pure_state_density([0, 0, 0, 1])
    traj = spectral_evolve(ground, ModelParams(omega0=20.0, delta=0.5),
                           np.linspace(0, 5, 200))
    for name in OBSERVABLE_NAMES:
        assert np.abs(traj[name] - traj[name][0]).max() <= 1e-10
    assert traj["sz1"][0] == pytest.approx(-1.0, abs=1e-12)


def test_single_frequency_oscillation_and_phase_slip():
    times = np.linspace(0.0, 8.0, 2000)
    traj = spectral_evolve(UNIFORM, FIG_SFR, times)
    # carrier at the central frequency: count sign changes of <sigma1^x>
    crossings = int(np.sum(np.diff(np.sign(traj["sx1"])) != 0))
    carrier = np.pi * crossings / (times[-1] - times[0])
    assert carrier == pytest.approx(FIG_SFR.omega0, rel=0.02)
    rel = relative_phase(traj)
    assert abs(rel[0]) < 0.05              # symmetric start: in phase
    at4 = rel[np.argmin(np.abs(times - 4.0))]
    assert abs(abs(at4) - np.pi) < 0.5     # slipped close to anti-phase


def test_spectral_vs_rk4_cross_validation():
    oracle = rk4_evolve(UNIFORM, FIG_LOCK, dt=1e-3, t_end=8.0, sample_stride=4)
    expansion = spectral_evolve(UNIFORM, FIG_LOCK, oracle.times)
    worst = max(np.abs(expansion[k] - oracle[k]).max() for k in OBSERVABLE_NAMES)
    assert worst <= 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_cross_validation_random_parameters(seed):
    rng = np.random.default_rng(200 + seed)
    while True:
        p = ModelParams(omega0=rng.uniform(10, 30), delta=rng.uniform(0, 2),
                        s12=rng.uniform(0, 2), w=rng.uniform(0.05, 1.0))
        liouv = build_liouvillian(p)
        pc = max(eig(extract_block(liouv, lbl)).pair_condition.max()
                 for lbl in ("a", "b", "c", "d", "e"))
        if pc < 1e4:
            break
    rho0 = pure_state_density(rng.normal(size=4) + 1j * rng.normal(size=4))
    oracle = rk4_evolve(rho0, p, dt=1e-3, t_end=6.0, sample_stride=5)
    expansion = spectral_evolve(rho0, p, oracle.times)
    worst = max(np.abs(expansion[k] - oracle[k]).max() for k in OBSERVABLE_NAMES)
    assert worst <= 1e-6


def test_rk4_trace_drift_over_long_run():
    traj = rk4_evolve(UNIFORM, FIG_LOCK, dt=1e-3, t_end=20.0, sample_stride=100,
                      store_states=True)
    traces = np.einsum("tii->t", traj.states)
    assert np.abs(traces - 1.0).max() <= 1e-9


def test_rk4_preserves_state_validity():
    traj = rk4_evolve(UNIFORM, FIG_LOCK, dt=1e-3, t_end=5.0, sample_stride=50,
                      store_states=True)
    for state in traj.states:
        validate_density_matrix(state, herm_tol=1e-12, trace_tol=1e-9)


def test_rk4_energy_conservation_in_closed_limit():
    p = ModelParams(omega0=20.0, delta=0.4, s12=0.7, gamma=1e-12)
    rho0 = pure_state_density([0.6, 0.5, 0.4, np.sqrt(1 - 0.77)])
    traj = rk4_evolve(rho0, p, dt=1e-3, t_end=8.0, sample_stride=40, store_states=True)
    h = hamiltonian(p)
    energies = np.real(np.einsum("ij,tji->t", h, traj.states))
    assert np.abs(energies - energies[0]).max() <= 1e-8


def test_rk4_step_size_guards():
    with pytest.warns(StepSizeWarning):
        with pytest.raises(StepTooLargeError):
            rk4_evolve(UNIFORM, FIG_LOCK, dt=0.2, t_end=8.0)


def test_spectral_evolver_refuses_coalescent_generator():
    with pytest.raises(AtExceptionalPointError):
        spectral_evolve(UNIFORM, EP_POINT, np.linspace(0, 4, 100))
    with pytest.raises(AtExceptionalPointError):
        block_solution(UNIFORM, EP_POINT)
    # the integrator does not care
    traj = rk4_evolve(UNIFORM, EP_POINT, dt=1e-3, t_end=4.0, sample_stride=10)
    assert np.isfinite(traj["sx1"]).all()


def test_secular_envelope_at_coalescence():
    # At the coalescence the slow amplitude is (p + q t) e^{-gamma t/2}; plain
    # exponentials at the two decay rates actually present cannot reproduce
    # the linear-in-t growth. Compare equal-parameter least-squares fits.
    traj = rk4_evolve(UNIFORM, EP_POINT, dt=1e-3, t_end=8.0, sample_stride=4)
    envelope = np.hypot(traj["sx1"], traj["sy1"])
    sel = (traj.times >= 2.0) & (traj.times <= 8.0)
    tt, env = traj.times[sel], envelope[sel]
    secular = np.column_stack([np.exp(-tt / 2), tt * np.exp(-tt / 2)])
    plain = np.column_stack([np.exp(-tt / 2), np.exp(-3 * tt / 2)])

    def residual(basis):
        coef, *_ = np.linalg.lstsq(basis, env, rcond=None)
        return np.linalg.norm(basis @ coef - env)

    assert residual(secular) * 2.0 < residual(plain)


def test_sfr_prediction_matches_quadrature_lock():
    sol = block_solution(UNIFORM, FIG_SFR)
    predicted = sfr_phase_prediction(sol)
    assert abs(predicted) > 2.4  # locks close to anti-phase
    amp_x = sol.amplitudes[:, 0, :]
    ratio = np.max(amp_x[-2] / amp_x[-1])
    gap = sol.eigenvalues[-1].real - sol.eigenvalues[-2].real
    t_locked = (np.log(ratio) + np.log(100.0)) / gap
    times = np.linspace(0.0, 12.0, 3001)
    traj = spectral_evolve(UNIFORM, FIG_SFR, times)
    err = np.abs(np.angle(np.exp(1j * (relative_phase(traj) - predicted))))
    assert err[times >= t_locked].max() <= 0.05


def test_sfr_prediction_alternating_state_starts_locked():
    sol = block_solution(ALTERNATING, FIG_SFR)
    predicted = sfr_phase_prediction(sol)
    times = np.linspace(0.0, 2.0, 600)
    traj = spectral_evolve(ALTERNATING, FIG_SFR, times)
    rel = relative_phase(traj)
    assert abs(rel[np.argmin(np.abs(times - 0.2))]) > 2.8
    early = rel[np.argmin(np.abs(times - 0.5))]
    assert abs(np.angle(np.exp(1j * (early - predicted)))) < 0.35


def test_sfr_prediction_symmetric_zero_detuning():
    sol = block_solution(UNIFORM, ModelParams(omega0=20.0, w=0.1))
    assert sfr_phase_prediction(sol) == pytest.approx(0.0, abs=1e-8)


def test_sfr_prediction_rejects_multifrequency():
    sol = block_solution(UNIFORM, FIG_LOCK)
    with pytest.raises(NotSFRError):
        sfr_phase_prediction(sol)


def test_multifrequency_locking_to_slow_mode_phase():
    sol = block_solution(UNIFORM, FIG_LOCK)
    locked = np.angle(np.exp(1j * (sol.phases[-1, 0, 0] - sol.phases[-1, 0, 1])))
    assert abs(abs(locked) - np.pi) < 0.35  # about anti-phase
    times = np.linspace(0.0, 8.0, 2001)
    traj = spectral_evolve(UNIFORM, FIG_LOCK, times)
    rel = relative_phase(traj)
    late = times >= 7.5
    assert np.abs(np.angle(np.exp(1j * (rel[late] - locked)))).max() < 0.08


def test_envelope_monotone_after_fast_modes_die():
    sol = block_solution(UNIFORM, FIG_LOCK)
    amp_x = sol.amplitudes[:, 0, 0]
    ratio = amp_x[-2] / amp_x[-1]
    gap = sol.eigenvalues[-1].real - sol.eigenvalues[-2].real
    t0 = (np.log(ratio) + np.log(100.0)) / gap  # slow mode alone carries 99%
    times = np.linspace(0.0, 12.0, 3000)
    traj = spectral_evolve(UNIFORM, FIG_LOCK, times)
    envelope = np.hypot(traj["sx1"], traj["sy1"])
    tail = envelope[times >= t0]
    assert np.all(np.diff(tail) <= 1e-9)


def test_trajectory_validation():
    obs = {name: np.zeros(3) for name in OBSERVABLE_NAMES}
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0, 1.0]), obs)
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0, 2.0]), {"sx1": np.zeros(3)})
