"""Dense complex linear algebra for non-Hermitian spectral analysis.

Everything downstream (Liouvillian blocks, exceptional-point scans, resolvent
spectra) runs through the small set of operations here: a full
eigendecomposition with biorthogonal left/right vectors and per-mode condition
numbers, pivoted linear solves, SVD null spaces, and eigenvalue-set matching.
All functions are pure; inputs are never mutated.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import connected_components

MAX_DIM = 4096

__all__ = [
    "Eigensystem",
    "LinalgError",
    "NonSquareError",
    "ConvergenceFailure",
    "SingularMatrixError",
    "ZeroVectorError",
    "eig",
    "solve",
    "null_space",
    "overlap",
    "matched_eigenvalue_distance",
    "match_eigenvalues",
]


class LinalgError(Exception):
    """Base class for linear-algebra failures."""


class NonSquareError(LinalgError):
    pass


class ConvergenceFailure(LinalgError):
    """QR iteration failed or left/right spectra could not be reconciled."""


class SingularMatrixError(LinalgError):
    """A pivot fell below the singularity threshold during elimination."""


class ZeroVectorError(LinalgError):
    pass


@dataclass(frozen=True)
class Eigensystem:
    """Eigenvalues with biorthogonal unit-norm right/left eigenvectors.

    Eigenvalues are sorted by ascending real part, ties broken by ascending
    imaginary part. ``right_vectors[:, k]`` and ``left_vectors[:, k]`` belong
    to ``eigenvalues[k]``; ``pair_condition[k] = 1/|<left_k|right_k>|``
    diagnoses proximity to an eigenvector coalescence (it diverges at an
    exceptional point, where the expansion in eigenmodes breaks down).
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    pair_condition: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def _as_square_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquareError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"matrix dimension {a.shape[0]} exceeds supported maximum {MAX_DIM}")
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError("matrix entries must be finite")
    return a


def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    phases = pivots / np.abs(pivots)
    return vectors * phases.conj()


def _biorthogonalize_degenerate(lam, right, left, scale):
    """Dualize left vectors inside exactly degenerate eigenvalue clusters.

    When an eigenvalue repeats, the independently computed left and right
    eigenbases of its eigenspace are unrelated, and the per-mode inner
    product can vanish even though the matrix is diagonalizable (a trivial
    degeneracy). Within each cluster of numerically identical eigenvalues
    the left basis is replaced by the dual of the right basis, which keeps
    pair conditions finite exactly when the cluster is diagonalizable;
    defective clusters (their Gram matrix is singular) are left untouched
    and keep their diverging condition. Cluster width 1e-12 * ||m|| only, so
    the mixing never degrades left-eigenvector residuals.
    """
    n = lam.size
    if n < 2 or scale == 0.0:
        return
    tol = 1e-12 * scale
    adjacency = np.abs(lam[:, None] - lam[None, :]) <= tol
    n_groups, membership = connected_components(adjacency, directed=False)
    if n_groups == n:
        return
    for group in range(n_groups):
        members = np.nonzero(membership == group)[0]
        if members.size < 2:
            continue
        gram = left[:, members].conj().T @ right[:, members]
        svals = np.linalg.svd(gram, compute_uv=False)
        # columns are unit vectors, so a diagonalizable cluster has a Gram
        # matrix of order-one conditioning; near-vanishing singular values
        # mean a defective cluster and must keep their diverging condition
        if svals[-1] <= 1e-6 * max(1.0, svals[0]):
            continue
        left[:, members] = left[:, members] @ np.linalg.inv(gram).conj().T


def eig(m) -> Eigensystem:
    """Full non-Hermitian eigendecomposition with left vectors.

    Left eigenvectors come from an independent decomposition of the adjoint
    (so they stay meaningful near defective points) and are paired with the
    right eigenvalues by a minimum-cost assignment on complex distance. A
    reconciliation mismatch above ``1e-6 * ||m||`` raises
    :class:`ConvergenceFailure`. Degenerate and nearly defective input is not
    an error; it is reported through ``pair_condition``.
    """
    a = _as_square_matrix(m)
    scale = np.linalg.norm(a)
    try:
        lam, right = np.linalg.eig(a)
        mu, left = np.linalg.eig(a.conj().T)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigenvalue iteration did not converge: {exc}") from exc

    # adjoint eigenvalue mu pairs with right eigenvalue lambda when mu* ~ lambda
    cost = np.abs(mu.conj()[:, None] - lam[None, :])
    rows, cols = linear_sum_assignment(cost)
    mismatch = cost[rows, cols].max()
    if scale > 0 and mismatch > 1e-6 * scale:
        raise ConvergenceFailure(
            f"left/right spectra disagree by {mismatch:.3e} (threshold {1e-6 * scale:.3e})"
        )
    left_matched = np.empty_like(left)
    left_matched[:, cols] = left[:, rows]

    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    right = right[:, order]
    left_matched = left_matched[:, order]
    _biorthogonalize_degenerate(lam, right, left_matched, scale)

    right = _fix_phase(right / np.linalg.norm(right, axis=0))
    left_matched = _fix_phase(left_matched / np.linalg.norm(left_matched, axis=0))

    inner = np.abs(np.einsum("ik,ik->k", left_matched.conj(), right))
    with np.errstate(divide="ignore"):
        pair_condition = np.where(inner > 0.0, 1.0 / np.where(inner > 0.0, inner, 1.0), np.inf)

    return Eigensystem(lam, right, left_matched, pair_condition)


def solve(m, b) -> np.ndarray:
    """Solve ``m x = b`` by LU with partial pivoting.

    Raises :class:`SingularMatrixError` when any pivot falls below
    ``1e-14 * ||m||`` — for resolvent evaluation that means the frequency
    sits on a pole.
    """
    a = _as_square_matrix(m)
    rhs = np.asarray(b, dtype=complex)
    if rhs.shape[0] != a.shape[0]:
        raise ValueError(f"rhs length {rhs.shape[0]} does not match matrix dimension {a.shape[0]}")
    scale = np.linalg.norm(a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    min_pivot = np.abs(np.diag(lu)).min()
    if min_pivot <= 1e-14 * scale:
        raise SingularMatrixError(f"pivot {min_pivot:.3e} below threshold {1e-14 * scale:.3e}")
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def null_space(m, tol: float) -> list[np.ndarray]:
    """Orthonormal basis of the numerical kernel {x : ||m x|| <= tol ||m||}.

    ``||m||`` is the spectral norm (largest singular value). Returns an empty
    list when the kernel is trivial; the full standard basis for the zero
    matrix.
    """
    a = _as_square_matrix(m)
    n = a.shape[0]
    _, s, vh = np.linalg.svd(a)
    if s[0] == 0.0:
        return [np.eye(n, dtype=complex)[:, k] for k in range(n)]
    kernel = vh.conj().T[:, s <= tol * s[0]]
    return [kernel[:, k] for k in range(kernel.shape[1])]


def overlap(u, v) -> float:
    """|<u|v>| / (||u|| ||v||), clipped to [0, 1]; 1 iff linearly dependent."""
    uu = np.asarray(u, dtype=complex).ravel()
    vv = np.asarray(v, dtype=complex).ravel()
    nu, nv = np.linalg.norm(uu), np.linalg.norm(vv)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("overlap of a zero vector is undefined")
    return float(min(abs(np.vdot(uu, vv)) / (nu * nv), 1.0))


def match_eigenvalues(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-cost pairing of two equally sized eigenvalue sets.

    Returns (permutation, distances): ``b[permutation[k]]`` is matched to
    ``a[k]`` and ``distances[k]`` is the complex distance of that pair.
    """
    av = np.asarray(a, dtype=complex).ravel()
    bv = np.asarray(b, dtype=complex).ravel()
    if av.shape != bv.shape:
        raise ValueError("eigenvalue sets must have equal size")
    cost = np.abs(av[:, None] - bv[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty_like(cols)
    perm[rows] = cols
    return perm, cost[rows, cols]


def matched_eigenvalue_distance(a, b) -> float:
    """Largest pair distance under the optimal matching of two spectra."""
    _, dist = match_eigenvalues(a, b)
    return float(dist.max()) if dist.size else 0.0
