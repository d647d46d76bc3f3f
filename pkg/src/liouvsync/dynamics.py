"""Time evolution of the density matrix and local spin observables.

Two independent evolvers are provided. ``spectral_evolve`` expands the state
in the biorthogonal eigenbasis of the vectorized generator, block by block;
it is exact wherever the generator is diagonalizable and refuses to run close
to an eigenvector coalescence, where the expansion loses all accuracy.
``rk4_evolve`` is a fixed-step classical Runge-Kutta integrator that knows
nothing about the spectral structure — it serves as a cross-check and as the
only valid evolver exactly at an exceptional point, where the decay picks up
secular (polynomial-in-time) corrections.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .model import (
    BLOCK_INDICES,
    ModelParams,
    build_liouvillian,
    extract_block,
    pauli,
    validate_density_matrix,
    vectorize,
)

__all__ = [
    "AtExceptionalPointError",
    "StepTooLargeError",
    "StepSizeWarning",
    "NotSFRError",
    "OBSERVABLE_NAMES",
    "Trajectory",
    "SpectralSolution",
    "EP_CONDITION_THRESHOLD",
    "block_solution",
    "spectral_evolve",
    "rk4_evolve",
    "relative_phase",
    "sfr_phase_prediction",
]


class AtExceptionalPointError(RuntimeError):
    """The eigenmode expansion is invalid here; fall back to rk4_evolve."""


class StepTooLargeError(RuntimeError):
    """Trace drift exceeded the integrator's sanity bound."""


class StepSizeWarning(UserWarning):
    pass


class NotSFRError(ValueError):
    """The coherence sector carries more than one distinct frequency."""


# Eigenmode expansions lose roughly log10(pair_condition) digits; beyond this
# threshold the generator is treated as non-diagonalizable. Double precision
# caps pair_condition near 1/sqrt(eps) ~ 1e7-1e8 at an exact coalescence, so
# the cutoff must sit below that floor to fire there.
EP_CONDITION_THRESHOLD = 1e7

OBSERVABLE_NAMES = ("sx1", "sy1", "sz1", "sx2", "sy2", "sz2")

_OBSERVABLE_OPS = {
    "sx1": pauli("x", 1),
    "sy1": pauli("y", 1),
    "sz1": pauli("z", 1),
    "sx2": pauli("x", 2),
    "sy2": pauli("y", 2),
    "sz2": pauli("z", 2),
}
# Tr(A rho) as a row vector acting on vec(rho): vec(A^T) . vec(rho)
_OBSERVABLE_ROWS = np.stack([op.T.reshape(16) for op in _OBSERVABLE_OPS.values()])


@dataclass
class Trajectory:
    """Sampled observable series, optionally with the full states."""

    times: np.ndarray
    observables: dict[str, np.ndarray]
    states: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or self.times.size < 2:
            raise ValueError("times must be a 1-D grid with at least two samples")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        for name in OBSERVABLE_NAMES:
            if name not in self.observables:
                raise ValueError(f"missing observable series {name!r}")
            if len(self.observables[name]) != self.times.size:
                raise ValueError(f"series {name!r} length does not match times")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.observables[name]


@dataclass(frozen=True)
class SpectralSolution:
    """Coherence-sector mode data driving the <sigma^{x,y}> signals.

    Modes are in canonical order (ascending real part), so index 3 is the
    least damped. ``amplitudes[k, axis, j]`` is |p0_k <mode_k>_{axis,j}| for
    axis x(0)/y(1) and qubit j+1; the observable contribution of mode k is
    2 * amplitude * exp(Re(lambda_k) t) * cos(Im(lambda_k) t + phase).
    """

    params: ModelParams
    eigenvalues: np.ndarray
    weights: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    pair_condition: np.ndarray


def _block_modes(liouv: np.ndarray, label: str) -> tuple[np.ndarray, linalg.Eigensystem]:
    block = extract_block(liouv, label)
    return np.asarray(BLOCK_INDICES[label], dtype=int), linalg.eig(block)


def block_solution(rho0, p: ModelParams,
                   condition_threshold: float = EP_CONDITION_THRESHOLD) -> SpectralSolution:
    """Decompose an initial state over the coherence-sector eigenmodes."""
    rho0 = validate_density_matrix(rho0)
    liouv = build_liouvillian(p)
    idx, es = _block_modes(liouv, "b")
    if es.pair_condition.max() >= condition_threshold:
        raise AtExceptionalPointError(
            f"pair condition {es.pair_condition.max():.3e} >= {condition_threshold:.1e}"
        )
    rho_b = vectorize(rho0)[idx]
    inner = np.einsum("ik,ik->k", es.left_vectors.conj(), es.right_vectors)
    weights = (es.left_vectors.conj().T @ rho_b) / inner

    amplitudes = np.empty((4, 2, 2))
    phases = np.empty((4, 2, 2))
    for ax, axis in enumerate(("x", "y")):
        for j in (0, 1):
            row = pauli(axis, j + 1).T.reshape(16)[idx]
            ov = es.right_vectors.T @ row
            z = weights * ov
            amplitudes[:, ax, j] = np.abs(z)
            phases[:, ax, j] = np.angle(z)
    return SpectralSolution(p, es.eigenvalues, weights, amplitudes, phases,
                            es.pair_condition)


def spectral_evolve(rho0, p: ModelParams, times, *, store_states: bool = False,
                    condition_threshold: float = EP_CONDITION_THRESHOLD) -> Trajectory:
    """Evolve by the eigenmode expansion of all five sectors.

    Raises :class:`AtExceptionalPointError` when any sector's pair condition
    reaches ``condition_threshold``; the caller should fall back to
    :func:`rk4_evolve`, which remains valid there.
    """
    rho0 = validate_density_matrix(rho0)
    times = np.asarray(times, dtype=float)
    liouv = build_liouvillian(p)

    eigenvalues = np.empty(16, dtype=complex)
    modes = np.zeros((16, 16), dtype=complex)
    weights = np.empty(16, dtype=complex)
    rho0_vec = vectorize(rho0)
    pos = 0
    for label in ("a", "b", "c", "d", "e"):
        idx, es = _block_modes(liouv, label)
        if es.pair_condition.max() >= condition_threshold:
            raise AtExceptionalPointError(
                f"block {label}: pair condition {es.pair_condition.max():.3e} "
                f">= {condition_threshold:.1e}"
            )
        n = idx.size
        inner = np.einsum("ik,ik->k", es.left_vectors.conj(), es.right_vectors)
        weights[pos:pos + n] = (es.left_vectors.conj().T @ rho0_vec[idx]) / inner
        eigenvalues[pos:pos + n] = es.eigenvalues
        modes[idx, pos:pos + n] = es.right_vectors
        pos += n

    phases = np.exp(np.outer(times, eigenvalues))
    rhos = (phases * weights) @ modes.T  # (n_times, 16)
    observables = {
        name: np.real(rhos @ _OBSERVABLE_ROWS[i])
        for i, name in enumerate(OBSERVABLE_NAMES)
    }
    states = rhos.reshape(-1, 4, 4) if store_states else None
    return Trajectory(times, observables, states)


def rk4_evolve(rho0, p: ModelParams, dt: float | None = None, t_end: float = 8.0, *,
               sample_stride: int = 1, store_states: bool = False,
               trace_tol: float = 1e-6) -> Trajectory:
    """Fixed-step 4th-order Runge-Kutta integration of d(vec rho)/dt = L vec rho.

    Samples every ``sample_stride`` steps (always including t = 0 and the
    final step). Raises :class:`StepTooLargeError` when the sampled trace
    drifts from one by more than ``trace_tol``.
    """
    rho0 = validate_density_matrix(rho0)
    if dt is None:
        dt = 1e-3 / p.gamma
    fastest = max(abs(p.omega0), p.gamma, abs(p.delta), abs(p.s12), p.w, abs(p.sz))
    if dt > 0.1 / fastest:
        warnings.warn(
            f"dt = {dt:g} exceeds the recommended 0.1/max-rate = {0.1 / fastest:g}",
            StepSizeWarning,
            stacklevel=2,
        )
    nsteps = int(round(t_end / dt))
    if nsteps < 1:
        raise ValueError("t_end must cover at least one step")

    liouv = build_liouvillian(p)
    v = vectorize(rho0)
    trace_idx = np.array([0, 5, 10, 15])

    times = [0.0]
    samples = [v.copy()]
    for n in range(1, nsteps + 1):
        k1 = liouv @ v
        k2 = liouv @ (v + 0.5 * dt * k1)
        k3 = liouv @ (v + 0.5 * dt * k2)
        k4 = liouv @ (v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if n % sample_stride == 0 or n == nsteps:
            drift = abs(v[trace_idx].sum() - 1.0)
            # the trace is conserved even by an unstable step, so also guard
            # against blow-up of the traceless sectors
            norm = np.abs(v).max()
            if not (drift <= trace_tol) or not (norm <= 1e2):
                raise StepTooLargeError(
                    f"integration diverged at t = {n * dt:g} "
                    f"(trace drift {drift:.3e}, max amplitude {norm:.3e})"
                )
            times.append(n * dt)
            samples.append(v.copy())

    stacked = np.stack(samples)
    observables = {
        name: np.real(stacked @ _OBSERVABLE_ROWS[i])
        for i, name in enumerate(OBSERVABLE_NAMES)
    }
    states = stacked.reshape(-1, 4, 4) if store_states else None
    return Trajectory(np.asarray(times), observables, states)


def relative_phase(traj: Trajectory) -> np.ndarray:
    """Instantaneous phase difference of the two local coherences.

    Per qubit the phase is arg(<sigma^x> - i <sigma^y>), the phase of the
    lowering-operator expectation extracted by quadrature; returned is its
    qubit-1 minus qubit-2 difference wrapped to (-pi, pi].
    """
    z1 = traj["sx1"] - 1j * traj["sy1"]
    z2 = traj["sx2"] - 1j * traj["sy2"]
    return np.angle(z1 * z2.conj())


def _wrap_angle(x: float) -> float:
    return float(np.angle(np.exp(1j * x)))


def sfr_phase_prediction(sol: SpectralSolution, *, freq_tol: float | None = None,
                         weight_floor: float = 1e-9) -> float:
    """Asymptotic locked phase difference in the single-frequency regime.

    The least-damped mode that actually carries weight on both qubits sets
    the locked phase; modes the initial condition does not excite (relative
    x-amplitude below ``weight_floor``) are skipped. Raises
    :class:`NotSFRError` when the sector holds more than one distinct
    frequency at tolerance ``freq_tol`` (default 1e-4 * gamma).
    """
    if freq_tol is None:
        freq_tol = 1e-4 * sol.params.gamma
    freqs = np.sort(sol.eigenvalues.imag)
    if np.any(np.diff(freqs) > freq_tol):
        raise NotSFRError("multiple distinct frequencies; no single-frequency prediction")
    amp_x = sol.amplitudes[:, 0, :]
    floor = weight_floor * amp_x.max()
    eligible = np.where(np.min(amp_x, axis=1) > floor)[0]
    if eligible.size == 0:
        raise ValueError("no mode carries x-amplitude on both qubits")
    k = int(eligible[np.argmax(sol.eigenvalues.real[eligible])])
    return _wrap_angle(sol.phases[k, 0, 0] - sol.phases[k, 0, 1])
