"""Two-qubit master-equation model in Liouville space.

The density matrix of two detuned qubits with collective decay (rate 2*gamma
through the symmetric lowering operator), local incoherent pumping (rate w)
and optional exchange (s12) or Ising-type dephasing (sz) coupling evolves as
``d rho/dt = L rho`` with a 16x16 matrix ``L`` acting on the row-major
vectorized density matrix. ``L`` is block diagonal over five sectors labeled
a, b, c, d, e of dimensions 6, 4, 4, 1, 1: populations live in ``a``, the
single-qubit coherences (and hence every <sigma^{x,y}> signal) in ``b`` and
its conjugate ``c``, and the double coherence in ``d``/``e``.

Besides the generic builder, this module carries the direct constructors of
the ``a`` and ``b`` blocks for sz = 0 and the closed-form eigenvalue branches
available when w = 0 or delta = 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .linalg import matched_eigenvalue_distance  # noqa: F401  (re-exported for callers)

__all__ = [
    "ModelParams",
    "HierarchyWarning",
    "UnsupportedVariantError",
    "OutsideAnalyticDomainError",
    "BlockLeakError",
    "BLOCK_INDICES",
    "BLOCK_DIMS",
    "BASIS_LABELS",
    "sigma_minus",
    "sigma_plus",
    "pauli",
    "collective_lowering",
    "hamiltonian",
    "build_liouvillian",
    "extract_block",
    "build_block_a",
    "build_block_b",
    "analytic_eigs_b",
    "analytic_eigs_a",
    "vectorize",
    "devectorize",
    "trace_vector",
    "pure_state_density",
    "validate_density_matrix",
]


class HierarchyWarning(UserWarning):
    """The central frequency is not well separated from the incoherent rates."""


class UnsupportedVariantError(ValueError):
    """Direct block constructors only cover the sz = 0 model."""


class OutsideAnalyticDomainError(ValueError):
    """Closed-form eigenvalues exist only for w = 0 or delta = 0."""


class BlockLeakError(ValueError):
    """An off-block entry of the Liouvillian is unexpectedly nonzero."""


@dataclass(frozen=True)
class ModelParams:
    """Physical rates of the two-qubit model.

    omega0 is the central frequency, delta the detuning omega1 - omega2
    (split symmetrically: omega_{1,2} = omega0 +- delta/2), s12 the coherent
    exchange rate, gamma half the collective decay rate, w the local
    incoherent pump rate, and sz an optional sigma^z sigma^z coupling.
    All values share one inverse-time unit.
    """

    omega0: float
    delta: float = 0.0
    s12: float = 0.0
    gamma: float = 1.0
    w: float = 0.0
    sz: float = 0.0

    def __post_init__(self):
        values = (self.omega0, self.delta, self.s12, self.gamma, self.w, self.sz)
        if not all(np.isfinite(v) for v in values):
            raise ValueError("model parameters must be finite")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        if self.w < 0.0:
            raise ValueError("pump rate w must be non-negative")
        fast = max(abs(self.delta), self.gamma, abs(self.s12), self.w)
        if self.omega0 < 5.0 * fast:
            warnings.warn(
                f"omega0 = {self.omega0:g} is not large against the incoherent "
                f"scales (max {fast:g}); the secular hierarchy is violated",
                HierarchyWarning,
                stacklevel=2,
            )

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


BASIS_LABELS = ("ee", "eg", "ge", "gg")

_SM = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
_SP = _SM.conj().T
_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}
_I2 = np.eye(2, dtype=complex)
_I4 = np.eye(4, dtype=complex)


def _embed(op: np.ndarray, qubit: int) -> np.ndarray:
    if qubit == 1:
        return np.kron(op, _I2)
    if qubit == 2:
        return np.kron(_I2, op)
    raise ValueError("qubit index must be 1 or 2")


def sigma_minus(qubit: int) -> np.ndarray:
    return _embed(_SM, qubit)


def sigma_plus(qubit: int) -> np.ndarray:
    return _embed(_SP, qubit)


def pauli(axis: str, qubit: int) -> np.ndarray:
    return _embed(_PAULI[axis], qubit)


def collective_lowering() -> np.ndarray:
    """Symmetric lowering operator (sigma1^- + sigma2^-)/sqrt(2)."""
    return (sigma_minus(1) + sigma_minus(2)) / np.sqrt(2.0)


# Row-major vectorization index sets of the five invariant sectors, over the
# product basis {ee, eg, ge, gg}: a holds populations plus the eg/ge
# coherences, b the one-lowering coherences, c = b^dagger, d/e the double
# coherences.
BLOCK_INDICES = {
    "a": (0, 5, 6, 9, 10, 15),
    "b": (1, 2, 7, 11),
    "c": (4, 8, 13, 14),
    "d": (3,),
    "e": (12,),
}
BLOCK_DIMS = {label: len(idx) for label, idx in BLOCK_INDICES.items()}


def vectorize(rho) -> np.ndarray:
    """Row-major (C-order) vectorization of a 4x4 operator."""
    a = np.asarray(rho, dtype=complex)
    if a.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got {a.shape}")
    return a.reshape(16)


def devectorize(v) -> np.ndarray:
    a = np.asarray(v, dtype=complex)
    if a.shape != (16,):
        raise ValueError(f"expected a length-16 vector, got {a.shape}")
    return a.reshape(4, 4)


def trace_vector() -> np.ndarray:
    """Row vector reading Tr(rho) off the vectorized density matrix."""
    return vectorize(_I4)


def hamiltonian(p: ModelParams) -> np.ndarray:
    w1 = p.omega0 + p.delta / 2.0
    w2 = p.omega0 - p.delta / 2.0
    h = 0.5 * w1 * pauli("z", 1) + 0.5 * w2 * pauli("z", 2)
    h = h + p.s12 * (sigma_minus(1) @ sigma_plus(2) + sigma_plus(1) @ sigma_minus(2))
    if p.sz != 0.0:
        h = h + p.sz * (pauli("z", 1) @ pauli("z", 2))
    return h


def _dissipator_matrix(op: np.ndarray) -> np.ndarray:
    # vec(o rho o^dag) = (o (x) o*) vec(rho) under row-major vectorization
    opdop = op.conj().T @ op
    return (
        np.kron(op, op.conj())
        - 0.5 * np.kron(opdop, _I4)
        - 0.5 * np.kron(_I4, opdop.T)
    )


def build_liouvillian(p: ModelParams) -> np.ndarray:
    """16x16 generator acting on the row-major vectorized density matrix."""
    h = hamiltonian(p)
    liouv = -1j * (np.kron(h, _I4) - np.kron(_I4, h.T))
    liouv += 2.0 * p.gamma * _dissipator_matrix(collective_lowering())
    if p.w != 0.0:
        liouv += p.w * (_dissipator_matrix(sigma_plus(1)) + _dissipator_matrix(sigma_plus(2)))
    return liouv


def extract_block(liouv, label: str, leak_tol: float = 1e-12) -> np.ndarray:
    """Submatrix of one invariant sector, verifying the sector decoupling.

    Raises :class:`BlockLeakError` when any entry coupling two different
    sectors exceeds ``leak_tol`` (relative to the largest entry, floored at
    one) — that always indicates a corrupted generator, never physics.
    """
    a = np.asarray(liouv, dtype=complex)
    if a.shape != (16, 16):
        raise ValueError(f"expected the 16x16 generator, got {a.shape}")
    if label not in BLOCK_INDICES:
        raise ValueError(f"unknown block label {label!r}")
    threshold = leak_tol * max(1.0, float(np.abs(a).max()))
    in_block = np.zeros((16, 16), dtype=bool)
    for idx in BLOCK_INDICES.values():
        in_block[np.ix_(idx, idx)] = True
    off = np.abs(np.where(in_block, 0.0, a))
    worst = off.max()
    if worst > threshold:
        i, j = np.unravel_index(int(off.argmax()), off.shape)
        raise BlockLeakError(
            f"off-block entry L[{i},{j}] = {a[i, j]:.3e} exceeds {threshold:.3e}"
        )
    idx = BLOCK_INDICES[label]
    return a[np.ix_(idx, idx)]


def _require_plain_variant(p: ModelParams):
    if p.sz != 0.0:
        raise UnsupportedVariantError(
            "direct block constructors cover sz = 0 only; build the full "
            "generator and use extract_block for the dephasing variant"
        )


def build_block_a(p: ModelParams) -> np.ndarray:
    """Population/cross-coherence sector over {eeee, egeg, egge, geeg, gege, gggg}."""
    _require_plain_variant(p)
    g, s, d, w = p.gamma, p.s12, p.delta, p.w
    cp = -g / 2.0 + 1j * s
    cm = -g / 2.0 - 1j * s
    return np.array(
        [
            [-2.0 * g, w, 0.0, 0.0, w, 0.0],
            [g, -(g + w), cp, cm, 0.0, w],
            [g, cp, -(g + w) - 1j * d, 0.0, cm, 0.0],
            [g, cm, 0.0, -(g + w) + 1j * d, cp, 0.0],
            [g, 0.0, cm, cp, -(g + w), w],
            [0.0, g, g, g, g, -2.0 * w],
        ],
        dtype=complex,
    )


def build_block_b(p: ModelParams) -> np.ndarray:
    """Coherence sector over {eeeg, eege, eggg, gegg}."""
    _require_plain_variant(p)
    g, s, d, w, w0 = p.gamma, p.s12, p.delta, p.w, p.omega0
    cp = -g / 2.0 + 1j * s
    cm = -g / 2.0 - 1j * s
    return np.array(
        [
            [-(3.0 * g + w) / 2.0 - 1j * (w0 - d / 2.0), cp, 0.0, w],
            [cp, -(3.0 * g + w) / 2.0 - 1j * (w0 + d / 2.0), w, 0.0],
            [g, g, -(g + 3.0 * w) / 2.0 - 1j * (w0 + d / 2.0), cm],
            [g, g, cm, -(g + 3.0 * w) / 2.0 - 1j * (w0 - d / 2.0)],
        ],
        dtype=complex,
    )


def analytic_eigs_b(p: ModelParams) -> tuple[complex, np.ndarray]:
    """Closed-form eigenvalues of the coherence sector.

    Two branches exist: for w = 0 the square-root term is
    V = sqrt((gamma + 2i s12)^2 - delta^2); for delta = 0 it is
    Vt = sqrt(w^2 + gamma^2 + 6 w gamma - 4 s12^2 + 4i s12 (w - gamma)).
    Returns (branch root, four eigenvalues in the printed labeling, which is
    not the canonical sorted order). Principal branch of the square root.
    """
    _require_plain_variant(p)
    g, s, w0 = p.gamma, p.s12, p.omega0
    if p.w == 0.0:
        v = complex(np.sqrt(complex((g + 2j * s) ** 2 - p.delta**2)))
        lam = np.array(
            [
                -(3.0 * g + v.conjugate()) / 2.0 - 1j * w0,
                -(3.0 * g - v.conjugate()) / 2.0 - 1j * w0,
                -(g + v) / 2.0 - 1j * w0,
                -(g - v) / 2.0 - 1j * w0,
            ]
        )
        return v, lam
    if p.delta == 0.0:
        w = p.w
        vt = complex(np.sqrt(complex(w**2 + g**2 + 6.0 * w * g - 4.0 * s**2 + 4j * s * (w - g))))
        lam = np.array(
            [
                -(3.0 * g + 2.0 * w + vt) / 2.0 - 1j * w0,
                -(3.0 * g + 2.0 * w - vt) / 2.0 - 1j * w0,
                -g - w / 2.0 - 1j * (w0 + s),
                -1.5 * w - 1j * (w0 - s),
            ]
        )
        return vt, lam
    raise OutsideAnalyticDomainError("closed forms require w = 0 or delta = 0")


def analytic_eigs_a(p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigenvalues of the population sector at delta = 0.

    Three eigenvalues are explicit: 0 and -(w + gamma) -+ 2i s12. The other
    three are the roots of a real cubic, obtained as eigenvalues of its
    companion matrix and returned sorted by (real, imaginary) part.
    """
    _require_plain_variant(p)
    if p.delta != 0.0:
        raise OutsideAnalyticDomainError("population-sector closed forms require delta = 0")
    g, s, w = p.gamma, p.s12, p.w
    closed = np.array([0.0, -(w + g) - 2j * s, -(w + g) + 2j * s], dtype=complex)
    coeffs = [
        1.0,
        4.0 * (w + g),
        5.0 * w**2 + 10.0 * w * g + 4.0 * g**2,
        2.0 * w**3 + 6.0 * w**2 * g + 8.0 * w * g**2,
    ]
    cubic = np.roots(coeffs).astype(complex)
    cubic = cubic[np.lexsort((cubic.imag, cubic.real))]
    return closed, cubic


def pure_state_density(amplitudes) -> np.ndarray:
    """Normalized |psi><psi| from four product-basis amplitudes."""
    psi = np.asarray(amplitudes, dtype=complex).ravel()
    if psi.shape != (4,):
        raise ValueError("expected four amplitudes over {ee, eg, ge, gg}")
    norm = np.linalg.norm(psi)
    if norm == 0.0:
        raise ValueError("state amplitudes are all zero")
    psi = psi / norm
    return np.outer(psi, psi.conj())


def validate_density_matrix(rho, herm_tol: float = 1e-12, trace_tol: float = 1e-12,
                            eig_floor: float = -1e-10) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity; returns rho unchanged."""
    a = np.asarray(rho, dtype=complex)
    if a.shape != (4, 4):
        raise ValueError(f"expected a 4x4 density matrix, got {a.shape}")
    herm = np.abs(a - a.conj().T).max()
    if herm > herm_tol:
        raise ValueError(f"not Hermitian: max asymmetry {herm:.3e}")
    tr = a.trace()
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr:.15g} deviates from 1 beyond {trace_tol:g}")
    lowest = float(np.linalg.eigvalsh((a + a.conj().T) / 2.0).min())
    if lowest < eig_floor:
        raise ValueError(f"negative eigenvalue {lowest:.3e} below floor {eig_floor:g}")
    return a
