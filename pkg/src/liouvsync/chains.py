"""One-excitation spectra of three many-qubit generalizations.

All three models close over the 2N single-lowering coherences: two detuned
atomic ensembles under one collective decay channel, a two-sublattice chain
with dissipative nearest-neighbour couplings, and a coherently coupled chain
with staggered local losses (open boundaries throughout). The chain models
block-diagonalize under a discrete sine transform with momenta
k_l = pi l / (N + 1/2); each momentum contributes a 2x2 block whose
eigenvalue pair carries a square-root branch point, i.e. an exceptional point
at a critical detuning (dissipative chain) or coupling (coherent chain).
``chain_matrix`` builds the direct 2N x 2N coefficient matrix as an
independent oracle for the closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AtomicCloudsSpec",
    "DissipativeChainSpec",
    "CoherentChainSpec",
    "ChainModes",
    "CloudsEigs",
    "MAX_CLOSED_FORM_CELLS",
    "MAX_MATRIX_CELLS",
    "mode_momenta",
    "mode_functions",
    "clouds_eigs",
    "dissipative_chain_eigs",
    "coherent_chain_eigs",
    "chain_matrix",
    "scaling_scan",
]

MAX_CLOSED_FORM_CELLS = 4096
MAX_MATRIX_CELLS = 512


def _check_cells(n: int, limit: int):
    if not 1 <= n <= limit:
        raise ValueError(f"cell count {n} outside [1, {limit}]")


@dataclass(frozen=True)
class AtomicCloudsSpec:
    """Two detuned ensembles of n_cells qubits each under collective decay.

    The analytic treatment covers the undriven case only; a pump would mix
    excitation sectors, so w != 0 is rejected.
    """

    n_cells: int
    omega0: float
    delta: float
    gamma_c: float
    w: float = 0.0

    kind = "atomic_clouds"

    def __post_init__(self):
        _check_cells(self.n_cells, MAX_CLOSED_FORM_CELLS)
        if self.gamma_c <= 0.0:
            raise ValueError("gamma_c must be positive")
        if self.w != 0.0:
            raise ValueError("driven ensembles are out of scope; w must be 0")


@dataclass(frozen=True)
class DissipativeChainSpec:
    """Chain of detuned two-qubit cells with dissipative couplings."""

    n_cells: int
    omega0: float
    delta: float
    gamma: float

    kind = "dissipative_chain"

    def __post_init__(self):
        _check_cells(self.n_cells, MAX_CLOSED_FORM_CELLS)
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class CoherentChainSpec:
    """Coherently coupled chain with staggered local losses."""

    n_cells: int
    omega0: float
    gamma_a: float
    gamma_b: float
    s_ab: float

    kind = "coherent_chain"

    def __post_init__(self):
        _check_cells(self.n_cells, MAX_CLOSED_FORM_CELLS)
        if self.gamma_a < 0.0 or self.gamma_b < 0.0:
            raise ValueError("loss rates must be non-negative")


@dataclass(frozen=True)
class ChainModes:
    """Per-momentum eigenvalue pairs and critical points of a chain."""

    k_values: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    critical_points: np.ndarray

    def all_eigenvalues(self) -> np.ndarray:
        return np.concatenate([self.lambda_plus, self.lambda_minus])


@dataclass(frozen=True)
class CloudsEigs:
    """Dark bands (multiplicity n_cells - 1 each) and the bright pair."""

    dark_plus: complex
    dark_minus: complex
    dark_multiplicity: int
    bright_plus: complex
    bright_minus: complex
    critical_detuning: float

    def all_eigenvalues(self) -> np.ndarray:
        dark = [self.dark_plus] * self.dark_multiplicity + [self.dark_minus] * self.dark_multiplicity
        return np.array(dark + [self.bright_plus, self.bright_minus], dtype=complex)

    def bright_gap(self) -> float:
        return float(abs(self.bright_plus - self.bright_minus))


def mode_momenta(n_cells: int) -> np.ndarray:
    """k_l = pi l / (N + 1/2), l = 1..N, strictly increasing in (0, pi)."""
    return np.pi * np.arange(1, n_cells + 1) / (n_cells + 0.5)


def mode_functions(n_cells: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal open-boundary sine modes for the two sublattices.

    Returns (S_A, S_B) with S_A[j-1, l-1] = c sin(k_l (j - 1/2)) and
    S_B[j-1, l-1] = c sin(k_l j), c = sqrt(2/(N + 1/2)). Both are orthogonal
    matrices; the transform and its inverse share the same coefficients.
    """
    k = mode_momenta(n_cells)
    j = np.arange(1, n_cells + 1, dtype=float)
    c = np.sqrt(2.0 / (n_cells + 0.5))
    s_a = c * np.sin(np.outer(j - 0.5, k))
    s_b = c * np.sin(np.outer(j, k))
    return s_a, s_b


def clouds_eigs(spec: AtomicCloudsSpec) -> CloudsEigs:
    """Coherence eigenvalues of the two-ensemble model.

    Two perfectly dark bands at the bare frequencies (purely imaginary, with
    multiplicity N - 1 each) plus a bright pair that coalesces at
    |delta| = N gamma_c. The surviving dark bands are why a single-frequency
    regime never purges the second frequency here: nothing damps them out.
    """
    n, w0, d, gc = spec.n_cells, spec.omega0, spec.delta, spec.gamma_c
    root = 0.5 * np.sqrt(complex((n * gc) ** 2 - d**2))
    base = -1j * w0 - n * gc / 2.0
    return CloudsEigs(
        dark_plus=complex(-1j * (w0 + d / 2.0)),
        dark_minus=complex(-1j * (w0 - d / 2.0)),
        dark_multiplicity=n - 1,
        bright_plus=complex(base + root),
        bright_minus=complex(base - root),
        critical_detuning=n * gc,
    )


def dissipative_chain_eigs(spec: DissipativeChainSpec) -> ChainModes:
    """lambda_{k,+-} = -i omega0 - gamma +- sqrt(gamma^2 cos^2(k/2) - delta^2/4).

    Each momentum has its exceptional point at delta_c = 2 gamma |cos(k/2)|;
    below the smallest critical detuning every mode shares the frequency
    omega0 while 2N distinct decay rates remain.
    """
    k = mode_momenta(spec.n_cells)
    root = np.sqrt((spec.gamma * np.cos(k / 2.0)) ** 2 - spec.delta**2 / 4.0 + 0j)
    base = -1j * spec.omega0 - spec.gamma
    critical = 2.0 * spec.gamma * np.abs(np.cos(k / 2.0))
    return ChainModes(k, base + root, base - root, critical)


def coherent_chain_eigs(spec: CoherentChainSpec) -> ChainModes:
    """lambda_{k,+-} = -i omega0 - gamma_+/2 +- sqrt(gamma_-^2/4 - 4 s^2 cos^2(k/2)).

    gamma_+- = (gamma_a +- gamma_b)/2. The critical couplings
    s_c = |gamma_- / (4 cos(k/2))| have a size-independent lower bound
    |gamma_-|/4, approached by the l = 1 mode as the chain grows.
    """
    k = mode_momenta(spec.n_cells)
    g_plus = (spec.gamma_a + spec.gamma_b) / 2.0
    g_minus = (spec.gamma_a - spec.gamma_b) / 2.0
    root = np.sqrt(g_minus**2 / 4.0 - 4.0 * spec.s_ab**2 * np.cos(k / 2.0) ** 2 + 0j)
    base = -1j * spec.omega0 - g_plus / 2.0
    with np.errstate(divide="ignore"):
        critical = np.abs(g_minus / (4.0 * np.cos(k / 2.0)))
    return ChainModes(k, base + root, base - root, critical)


def chain_matrix(spec) -> np.ndarray:
    """Direct 2N x 2N coefficient matrix of the coherence equations.

    Ordering (A_1..A_N, B_1..B_N). Serves as the independent oracle: its
    eigenvalue multiset must match the closed forms after the sine-mode
    transform, and the transform itself must reduce it to exact 2x2 blocks.
    """
    n = spec.n_cells
    _check_cells(n, MAX_MATRIX_CELLS)
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    if spec.kind == "atomic_clouds":
        w1 = spec.omega0 + spec.delta / 2.0
        w2 = spec.omega0 - spec.delta / 2.0
        m -= spec.gamma_c / 2.0
        m[np.arange(n), np.arange(n)] += -1j * w1
        m[np.arange(n, 2 * n), np.arange(n, 2 * n)] += -1j * w2
        return m
    if spec.kind == "dissipative_chain":
        w1 = spec.omega0 + spec.delta / 2.0
        w2 = spec.omega0 - spec.delta / 2.0
        diag_a, diag_b = -1j * w1 - spec.gamma, -1j * w2 - spec.gamma
        hop = -spec.gamma / 2.0
    elif spec.kind == "coherent_chain":
        diag_a = -1j * spec.omega0 - spec.gamma_a / 2.0
        diag_b = -1j * spec.omega0 - spec.gamma_b / 2.0
        hop = -1j * spec.s_ab
    else:
        raise ValueError(f"unknown chain kind {spec.kind!r}")
    for j in range(n):
        m[j, j] = diag_a
        m[n + j, n + j] = diag_b
        m[j, n + j] += hop          # A_j <- B_j
        if j >= 1:
            m[j, n + j - 1] += hop  # A_j <- B_{j-1}
        m[n + j, j] += hop          # B_j <- A_j
        if j <= n - 2:
            m[n + j, j + 1] += hop  # B_j <- A_{j+1}
    return m


def scaling_scan(kind: str, n_list) -> list[dict]:
    """Size scaling of the coalescence-synchronization region.

    For the dissipative chain the governing quantity is delta_cN / gamma
    (shrinks to zero as k_N -> pi); for the coherent chain it is
    s_c1 / |gamma_-| (saturates at 1/4). Both ratios depend only on N.
    """
    rows = []
    for n in n_list:
        _check_cells(int(n), MAX_CLOSED_FORM_CELLS)
        k = mode_momenta(int(n))
        if kind == "dissipative_chain":
            ratio = 2.0 * abs(np.cos(k[-1] / 2.0))
            l_index = int(n)
        elif kind == "coherent_chain":
            ratio = 1.0 / (4.0 * abs(np.cos(k[0] / 2.0)))
            l_index = 1
        else:
            raise ValueError(f"scaling scan covers the chain kinds, not {kind!r}")
        rows.append({"n_cells": int(n), "l": l_index, "critical_ratio": float(ratio)})
    return rows
