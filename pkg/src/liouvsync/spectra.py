"""Steady states and two-time correlation spectra.

Correlations of lowering-type operators taken in the stationary state evolve
inside the coherence sector, so their spectra are resolvent matrix elements
of the 4x4 block: S(omega) = 2 Re <<o | (i omega I - L)^(-1) | o^dag rho_ss>>.
That is evaluated pointwise by pivoted linear solves (exact in the frequency
domain, no windowing artifacts, valid arbitrarily close to a coalescence).
For zero pumping the stationary state is the two-qubit ground state, the
relevant dynamics closes over two amplitudes, and the spectra reduce to
closed-form rational functions that serve as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from . import linalg
from .model import (
    BLOCK_INDICES,
    ModelParams,
    analytic_eigs_b,
    build_liouvillian,
    collective_lowering,
    extract_block,
    sigma_minus,
    validate_density_matrix,
    vectorize,
)

__all__ = [
    "NonUniqueSteadyStateError",
    "OutsideDomainError",
    "OPERATOR_TAGS",
    "SteadyState",
    "SpectrumSeries",
    "ResonanceFit",
    "steady_state",
    "correlation_w0",
    "spectrum_closed_form",
    "closed_form_terms",
    "spectrum_numeric",
    "default_omega_grid",
    "fit_two_resonances",
    "peak_half_width",
]


class NonUniqueSteadyStateError(RuntimeError):
    """The generator kernel is degenerate (happens for w = 0, delta = 0);
    pick an initial condition explicitly or switch on pumping."""


class OutsideDomainError(ValueError):
    """The requested closed form is not available for these parameters."""


def _operator(tag: str) -> np.ndarray:
    if tag == "collective_L":
        return collective_lowering()
    if tag == "sigma1":
        return sigma_minus(1)
    if tag == "sigma2":
        return sigma_minus(2)
    raise ValueError(f"unknown operator tag {tag!r}")


OPERATOR_TAGS = ("collective_L", "sigma1", "sigma2")


@dataclass(frozen=True)
class SteadyState:
    rho: np.ndarray
    residual: float


def steady_state(p: ModelParams, tol: float = 1e-10) -> SteadyState:
    """Stationary density matrix from the population-sector kernel.

    Unique for w > 0. For w = 0 the state is the two-qubit ground state
    (returned exactly) unless delta = 0, where the kernel is two-dimensional
    and :class:`NonUniqueSteadyStateError` is raised.
    """
    liouv = build_liouvillian(p)
    block_a = extract_block(liouv, "a")
    kernel = linalg.null_space(block_a, tol)
    if len(kernel) == 0:
        raise RuntimeError("no stationary state found; kernel tolerance too tight")
    if len(kernel) > 1:
        raise NonUniqueSteadyStateError(
            f"kernel dimension {len(kernel)}; set w > 0 or fix the initial "
            "amplitudes explicitly"
        )
    if p.w == 0.0:
        rho = np.zeros((4, 4), dtype=complex)
        rho[3, 3] = 1.0
    else:
        v16 = np.zeros(16, dtype=complex)
        v16[list(BLOCK_INDICES["a"])] = kernel[0]
        rho = v16.reshape(4, 4)
        rho = rho / rho.trace()
        rho = (rho + rho.conj().T) / 2.0
    validate_density_matrix(rho)
    residual = float(np.linalg.norm(liouv @ vectorize(rho)) / np.linalg.norm(liouv))
    return SteadyState(rho, residual)


def correlation_w0(p: ModelParams, init: tuple[complex, complex], tau_grid):
    """One-excitation coherence amplitudes (rho_eggg, rho_gegg) over tau.

    Valid for w = 0, sz = 0 only. The two amplitudes close under a 2x2
    system whose eigenvalues are the slow coherence pair; the evolution is
    evaluated in closed form, switching to the confluent (linear-in-tau)
    expression when the pair has merged (|branch root| < 1e-8 gamma), where
    the plain eigenmode form degenerates into a double pole.

    Collective correlation <L(tau) L^dag(0)>_ss is (sum of both)/sqrt(2) for
    init (1/sqrt2, 1/sqrt2); the local ones use init (1, 0) and (0, 1).
    """
    if p.w != 0.0 or p.sz != 0.0:
        raise OutsideDomainError("closed-form correlations require w = 0 and sz = 0")
    tau = np.asarray(tau_grid, dtype=float)
    g, s, d = p.gamma, p.s12, p.delta
    root, _ = analytic_eigs_b(p)
    c0 = -g / 2.0 - 1j * p.omega0
    coupling = np.array(
        [[-1j * d / 2.0, -(g / 2.0 + 1j * s)],
         [-(g / 2.0 + 1j * s), 1j * d / 2.0]],
        dtype=complex,
    )
    v0 = np.asarray(init, dtype=complex)
    if v0.shape != (2,):
        raise ValueError("init must hold the two starting amplitudes")
    base = np.exp(c0 * tau)
    if abs(root) < 1e-8 * g:
        # confluent pair: exp((c0 I + A) tau) = exp(c0 tau) (I + A tau)
        out = base[:, None] * (v0[None, :] + np.outer(tau, coupling @ v0))
    else:
        h = root * tau / 2.0
        ch, sh = np.cosh(h), np.sinh(h)
        av = coupling @ v0
        out = base[:, None] * (ch[:, None] * v0[None, :] + (2.0 / root) * sh[:, None] * av[None, :])
    return out[:, 0], out[:, 1]


@dataclass
class SpectrumSeries:
    """Real correlation spectrum sampled on a strictly increasing grid."""

    omega: np.ndarray
    values: np.ndarray
    operator_tag: str
    method: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.omega.ndim != 1 or np.any(np.diff(self.omega) <= 0.0):
            raise ValueError("frequency grid must be strictly increasing")
        if self.values.shape != self.omega.shape:
            raise ValueError("values and grid lengths differ")


def _closed_form_complex(p: ModelParams, operator_tag: str, omega: np.ndarray):
    """The two interfering resonance terms; the spectrum is term1 - term2."""
    g, s, d = p.gamma, p.s12, p.delta
    root, _ = analytic_eigs_b(p)
    x = omega + p.omega0
    if operator_tag == "collective_L":
        if s == 0.0:
            pref = 2.0 / root
            t1 = pref * x**2 / (x**2 + 0.25 * (g - root) ** 2)
            t2 = pref * x**2 / (x**2 + 0.25 * (g + root) ** 2)
        else:
            vr, vi = root.real, root.imag
            pref = 2.0 * (x - s) / abs(root) ** 2
            t1 = pref * (g * vi / 2.0 + vr * (x - vi)) / ((x - vi / 2.0) ** 2 + 0.25 * (g - vr) ** 2)
            t2 = pref * (g * vi / 2.0 + vr * (x + vi)) / ((x + vi / 2.0) ** 2 + 0.25 * (g + vr) ** 2)
        return t1, t2
    if operator_tag in ("sigma1", "sigma2"):
        if s != 0.0:
            raise OutsideDomainError(
                "local-operator closed forms cover s12 = 0 only; use spectrum_numeric"
            )
        shift = -d / 2.0 if operator_tag == "sigma1" else d / 2.0
        pref = 2.0 / root
        t1 = pref * (x * (x + shift) + g * (g - root) / 4.0) / (x**2 + 0.25 * (g - root) ** 2)
        t2 = pref * (x * (x + shift) + g * (g + root) / 4.0) / (x**2 + 0.25 * (g + root) ** 2)
        return t1, t2
    raise ValueError(f"unknown operator tag {operator_tag!r}")


def closed_form_terms(p: ModelParams, operator_tag: str, omega_grid):
    """The two superposed resonance terms, total = term1 - term2.

    Complex-valued in general (each term is individually complex when the
    branch root is not real); the difference is real to rounding.
    """
    if p.w != 0.0 or p.sz != 0.0:
        raise OutsideDomainError("closed-form spectra require w = 0 and sz = 0")
    omega = np.asarray(omega_grid, dtype=float)
    return _closed_form_complex(p, operator_tag, omega)


def spectrum_closed_form(p: ModelParams, operator_tag: str, omega_grid) -> SpectrumSeries:
    """Closed-form spectrum for w = 0 (collective, or local at s12 = 0)."""
    t1, t2 = closed_form_terms(p, operator_tag, omega_grid)
    total = np.asarray(t1) - np.asarray(t2)
    scale = np.abs(total).max() or 1.0
    residue = float(np.abs(total.imag).max() / scale) if np.iscomplexobj(total) else 0.0
    if residue > 1e-10:
        raise RuntimeError(f"closed-form spectrum has imaginary residue {residue:.3e}")
    return SpectrumSeries(np.asarray(omega_grid, dtype=float), np.real(total),
                          operator_tag, "closed_form")


def spectrum_numeric(p: ModelParams, operator_tag: str, omega_grid) -> SpectrumSeries:
    """Resolvent spectrum by per-frequency linear solves in the coherence block.

    Exact for the Markovian model and valid at coalescences. A frequency
    sitting on an undamped pole propagates ``SingularMatrixError`` from the
    solver (cannot happen for w > 0, where every coherence mode is damped).
    """
    omega = np.asarray(omega_grid, dtype=float)
    op = _operator(operator_tag)
    ss = steady_state(p)
    liouv = build_liouvillian(p)
    block = extract_block(liouv, "b")
    idx = list(BLOCK_INDICES["b"])

    source16 = vectorize(op.conj().T @ ss.rho)
    probe16 = vectorize(op.conj().T)
    outside = np.delete(source16, idx)
    if np.abs(outside).max() > 1e-12:
        raise RuntimeError("correlation source leaks outside the coherence sector")
    source = source16[idx]
    probe = probe16[idx]

    eye = np.eye(4, dtype=complex)
    values = np.empty(omega.size)
    for i, om in enumerate(omega):
        x = linalg.solve(1j * om * eye - block, source)
        values[i] = 2.0 * np.real(np.vdot(probe, x))
    return SpectrumSeries(omega, values, operator_tag, "resolvent")


def default_omega_grid(p: ModelParams, n: int = 2048) -> np.ndarray:
    """Frequency window centered on the emission features near -omega0."""
    half = 4.0 * p.gamma + 2.0 * abs(p.s12)
    return np.linspace(-p.omega0 - half, -p.omega0 + half, n)


@dataclass(frozen=True)
class ResonanceFit:
    """One fitted resonance: pole at center - i half_width (half_width > 0)."""

    center: float
    half_width: float
    amplitude: complex

    @property
    def full_width(self) -> float:
        return 2.0 * self.half_width


def _half_max_estimate(omega: np.ndarray, values: np.ndarray, peak: int):
    half = values[peak] / 2.0
    left = peak
    while left > 0 and values[left - 1] > half:
        left -= 1
    right = peak
    while right < values.size - 1 and values[right + 1] > half:
        right += 1
    width = max((omega[right] - omega[left]) / 2.0, omega[1] - omega[0])
    return float(omega[peak]), float(width)


def peak_half_width(omega, values, center_hint: float | None = None):
    """(center, half-width at half maximum, height) of the dominant peak.

    Crossing-based measurement on the sampled curve; robust for trend
    comparisons, unlike a model fit it does not separate overlapping
    resonances.
    """
    omega = np.asarray(omega, dtype=float)
    values = np.asarray(values, dtype=float)
    if center_hint is None:
        peak = int(np.argmax(values))
    else:
        window = np.abs(omega - center_hint) <= 10 * (omega[1] - omega[0])
        peak = int(np.argmax(np.where(window, values, -np.inf)))
        peak = int(np.argmax(values)) if not window.any() else peak
    center, width = _half_max_estimate(omega, values, peak)
    return center, width, float(values[peak])


def fit_two_resonances(omega, values) -> tuple[list[ResonanceFit], dict]:
    """Least-squares fit of two complex poles to a sampled spectrum.

    Model: S(omega) = 2 Re[ r1/(i omega - p1) + r2/(i omega - p2) ], which is
    the exact form of a two-mode correlation spectrum. Initialized from the
    two tallest separated peaks and their half-max widths. Returns the fits
    sorted by center together with metadata recording both width conventions
    (half-width = |Re pole|, full-width = 2 |Re pole|) and the residual.
    """
    omega = np.asarray(omega, dtype=float)
    values = np.asarray(values, dtype=float)

    peak1 = int(np.argmax(values))
    c1, w1 = _half_max_estimate(omega, values, peak1)
    masked = values.copy()
    lo = np.searchsorted(omega, c1 - 8 * w1)
    hi = np.searchsorted(omega, c1 + 8 * w1)
    masked[lo:hi] = -np.inf
    peak2 = int(np.argmax(masked))
    c2, w2 = _half_max_estimate(omega, values, peak2)

    def model(params):
        re1, im1, a1, b1, re2, im2, a2, b2 = params
        p1 = (a1 + 1j * b1) / (1j * omega - (re1 + 1j * im1))
        p2 = (a2 + 1j * b2) / (1j * omega - (re2 + 1j * im2))
        return 2.0 * np.real(p1 + p2)

    x0 = [-w1, c1, values[peak1] * w1, 0.0, -w2, c2, values[peak2] * w2, 0.0]
    res = least_squares(lambda q: model(q) - values, x0, method="lm", max_nfev=20000)
    fits = []
    for k in (0, 4):
        re, im, a, b = res.x[k:k + 4]
        fits.append(ResonanceFit(float(im), float(abs(re)), complex(a, b)))
    fits.sort(key=lambda f: f.center)
    metadata = {
        "residual": float(np.linalg.norm(model(res.x) - values)),
        "half_widths": [f.half_width for f in fits],
        "full_widths": [f.full_width for f in fits],
    }
    return fits, metadata
