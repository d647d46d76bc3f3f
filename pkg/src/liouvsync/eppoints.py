"""Eigenvalue-coalescence detection, refinement and frequency-region maps.

An exceptional point is a parameter point where eigenvalues *and* their
eigenvectors merge, as opposed to a trivial degeneracy where only the values
cross. Candidates therefore carry both the eigenvalue gap and the eigenvector
overlap, and acceptance requires the conjunction of the two. Frequency-region
classification (single / three / four distinct frequencies in the coherence
sector) uses single-linkage clustering of the imaginary parts at an explicit
tolerance — near a coalescence curve the count is genuinely ambiguous at
machine precision, and the tolerance defines the drawn boundary width.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, build_block_b, build_liouvillian, extract_block

__all__ = [
    "EP_GAP_FACTOR",
    "EP_OVERLAP_TOL",
    "TRIVIAL_OVERLAP_CEILING",
    "NoMinimumInBracketError",
    "EPCandidate",
    "RegionMap",
    "classify",
    "cluster_count",
    "block_eigensystem",
    "detect_ep",
    "refine_ep_1d",
    "dephasing_ep_checks",
    "sweep_2d",
    "locate_ep_annihilation",
]

# acceptance: gap <= EP_GAP_FACTOR * gamma and overlap >= 1 - EP_OVERLAP_TOL;
# a small gap with overlap below the ceiling is a trivial degeneracy.
EP_GAP_FACTOR = 1e-6
EP_OVERLAP_TOL = 1e-6
TRIVIAL_OVERLAP_CEILING = 0.99

REGION_BY_FREQ_COUNT = {1: "SFR", 3: "TFR", 4: "FFR"}


class NoMinimumInBracketError(ValueError):
    """The coarse scan found no interior minimum of the gap function."""


@dataclass(frozen=True)
class EPCandidate:
    """A mode pair with its coalescence diagnostics at one parameter point."""

    params: ModelParams
    block: str
    mode_pair: tuple[int, int]
    eigenvalue_gap: float
    vector_overlap: float
    order: int = 2

    @property
    def accepted(self) -> bool:
        return (
            self.eigenvalue_gap <= EP_GAP_FACTOR * self.params.gamma
            and self.vector_overlap >= 1.0 - EP_OVERLAP_TOL
        )

    @property
    def trivial_degeneracy(self) -> bool:
        return (
            self.eigenvalue_gap <= EP_GAP_FACTOR * self.params.gamma
            and self.vector_overlap < TRIVIAL_OVERLAP_CEILING
        )


def cluster_count(values, tol: float) -> int:
    """Number of single-linkage clusters of real values at gap tolerance tol."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return 0
    return 1 + int(np.sum(np.diff(v) > tol))


def classify(eigenvalues, tol_freq: float) -> tuple[int, int, str]:
    """(distinct frequencies, distinct decay rates, region label).

    Frequencies are clustered imaginary parts, decay rates clustered real
    parts, both at ``tol_freq``. One frequency is the SFR, three the TFR,
    four the FFR; anything else reports OTHER.
    """
    lam = np.asarray(eigenvalues, dtype=complex)
    n_freq = cluster_count(lam.imag, tol_freq)
    n_decay = cluster_count(lam.real, tol_freq)
    return n_freq, n_decay, REGION_BY_FREQ_COUNT.get(n_freq, "OTHER")


def block_eigensystem(p: ModelParams, block: str) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (sorted ascending real, then imaginary) and unit right
    eigenvectors of one Liouvillian sector, via the full builder so the
    dephasing variant works for every block."""
    mat = extract_block(build_liouvillian(p), block)
    lam, vec = np.linalg.eig(mat)
    order = np.lexsort((lam.imag, lam.real))
    lam, vec = lam[order], vec[:, order]
    vec = vec / np.linalg.norm(vec, axis=0)
    return lam, vec


def _pair_diagnostics(lam: np.ndarray, vec: np.ndarray):
    out = []
    n = lam.size
    for i in range(n):
        for j in range(i + 1, n):
            gap = float(abs(lam[i] - lam[j]))
            ov = float(min(abs(np.vdot(vec[:, i], vec[:, j])), 1.0))
            out.append(((i, j), gap, ov))
    return out


def detect_ep(p: ModelParams, block: str = "b") -> list[EPCandidate]:
    """Diagnostics for every mode pair of one sector at a parameter point."""
    lam, vec = block_eigensystem(p, block)
    return [
        EPCandidate(p, block, pair, gap, ov)
        for pair, gap, ov in _pair_diagnostics(lam, vec)
    ]


def _min_gap_candidate(p: ModelParams, block: str) -> EPCandidate:
    lam, vec = block_eigensystem(p, block)
    pair, gap, ov = min(_pair_diagnostics(lam, vec), key=lambda t: t[1])
    return EPCandidate(p, block, pair, gap, ov)


def _golden_minimize(f, lo: float, hi: float, tol: float) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _refine_line(make_params, block: str, lo: float, hi: float,
                 coarse_points: int, tol: float) -> EPCandidate:
    """Locate the most coalescing gap minimum of p(x) for x in [lo, hi].

    The minimum-pair gap is generally multimodal (trivial crossings produce
    their own zeros), so every interior local minimum of a coarse scan is
    polished by golden section and the candidates are ranked: accepted
    coalescences first, then by overlap, then by gap.
    """
    xs = np.linspace(lo, hi, coarse_points)

    def gap_at(x: float) -> float:
        return _min_gap_candidate(make_params(x), block).eigenvalue_gap

    fs = np.array([gap_at(x) for x in xs])
    raw = [
        i for i in range(1, coarse_points - 1)
        if fs[i] <= fs[i - 1] and fs[i] <= fs[i + 1]
    ]
    # one representative per plateau run
    interior = [i for k, i in enumerate(raw) if k == 0 or i != raw[k - 1] + 1]
    candidates = []
    floor = min(fs[0], fs[-1])
    for i in interior:
        x_star = _golden_minimize(gap_at, xs[i - 1], xs[i + 1], tol)
        cand = _min_gap_candidate(make_params(x_star), block)
        # a sign-definite minimum dips below both bracket endpoints; flat
        # stretches of a constant inter-pair distance do not qualify
        if cand.eigenvalue_gap < floor:
            candidates.append(cand)
    if not candidates:
        raise NoMinimumInBracketError(
            f"gap has no interior minimum on [{lo:g}, {hi:g}] "
            f"(endpoint values {fs[0]:.3e}, {fs[-1]:.3e})"
        )
    candidates.sort(
        key=lambda c: (-int(c.accepted), -c.vector_overlap, c.eigenvalue_gap)
    )
    return candidates[0]


def refine_ep_1d(p0: ModelParams, vary: str, bracket: tuple[float, float],
                 block: str = "b", *, coarse_points: int = 65,
                 bracket_tol: float | None = None) -> EPCandidate:
    """Refine an eigenvalue-coalescence location along one parameter.

    Golden-section on the minimum pair gap, seeded by a coarse scan of the
    bracket; converges the bracket to ``bracket_tol`` (default 1e-13 * gamma,
    deep enough for the refined point to satisfy the acceptance thresholds
    when a genuine coalescence exists). The returned candidate sits at the
    minimizer; check ``accepted`` / ``trivial_degeneracy`` to tell an
    exceptional point from a plain crossing.
    """
    if vary not in ("omega0", "delta", "s12", "gamma", "w", "sz"):
        raise ValueError(f"unknown parameter {vary!r}")
    lo, hi = bracket
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    if bracket_tol is None:
        bracket_tol = 1e-13 * p0.gamma
    return _refine_line(
        lambda x: p0.replace(**{vary: float(x)}), block, lo, hi,
        coarse_points, bracket_tol,
    )


def dephasing_ep_checks(p: ModelParams, block: str = "b") -> list[EPCandidate]:
    """Mode-pair diagnostics for the Ising-dephasing variant (sz != 0)."""
    if p.sz == 0.0:
        raise ValueError("dephasing checks require sz != 0")
    return detect_ep(p, block)


@dataclass
class RegionMap:
    """Per-cell frequency-region classification over a 2-D parameter grid."""

    axis1: str
    values1: np.ndarray
    axis2: str
    values2: np.ndarray
    tol_freq: float
    n_freq: np.ndarray
    n_decay: np.ndarray
    region: np.ndarray
    min_gap: np.ndarray
    max_overlap: np.ndarray
    ep_flag: np.ndarray

    def labels_present(self) -> set[str]:
        return set(np.unique(self.region))

    def label_change_edges(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        """4-adjacent cell pairs whose region labels differ."""
        edges = []
        n1, n2 = self.region.shape
        for i in range(n1):
            for j in range(n2):
                if j + 1 < n2 and self.region[i, j] != self.region[i, j + 1]:
                    edges.append(((i, j), (i, j + 1)))
                if i + 1 < n1 and self.region[i, j] != self.region[i + 1, j]:
                    edges.append(((i, j), (i + 1, j)))
        return edges

    def region_connected(self, label: str) -> bool:
        """4-connectivity of all cells carrying one label (reported, not asserted)."""
        cells = {(i, j) for i, j in zip(*np.nonzero(self.region == label))}
        if not cells:
            return True
        stack = [next(iter(cells))]
        seen = set(stack)
        while stack:
            i, j = stack.pop()
            for ni, nj in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
                if (ni, nj) in cells and (ni, nj) not in seen:
                    seen.add((ni, nj))
                    stack.append((ni, nj))
        return len(seen) == len(cells)

    def iter_rows(self):
        """Row-major cell records matching the CSV schema."""
        for i, v1 in enumerate(self.values1):
            for j, v2 in enumerate(self.values2):
                yield {
                    self.axis1: float(v1),
                    self.axis2: float(v2),
                    "n_freq": int(self.n_freq[i, j]),
                    "n_decay": int(self.n_decay[i, j]),
                    "region": str(self.region[i, j]),
                    "min_gap": float(self.min_gap[i, j]),
                    "max_overlap": float(self.max_overlap[i, j]),
                }


_BLOCK_B_FIELDS = ("omega0", "delta", "s12", "gamma", "w")


def _block_b_stack(w0, d, s, g, w) -> np.ndarray:
    """Broadcast direct construction of the coherence block (sz = 0)."""
    shape = np.broadcast(w0, d, s, g, w).shape
    out = np.zeros(shape + (4, 4), dtype=complex)
    cp = -g / 2.0 + 1j * s
    cm = -g / 2.0 - 1j * s
    out[..., 0, 0] = -(3.0 * g + w) / 2.0 - 1j * (w0 - d / 2.0)
    out[..., 0, 1] = cp
    out[..., 0, 3] = w
    out[..., 1, 0] = cp
    out[..., 1, 1] = -(3.0 * g + w) / 2.0 - 1j * (w0 + d / 2.0)
    out[..., 1, 2] = w
    out[..., 2, 0] = g
    out[..., 2, 1] = g
    out[..., 2, 2] = -(g + 3.0 * w) / 2.0 - 1j * (w0 + d / 2.0)
    out[..., 2, 3] = cm
    out[..., 3, 0] = g
    out[..., 3, 1] = g
    out[..., 3, 2] = cm
    out[..., 3, 3] = -(g + 3.0 * w) / 2.0 - 1j * (w0 - d / 2.0)
    return out


def _cell_diagnostics(mats: np.ndarray, tol_freq: float):
    """Vectorized counts / min gap / max overlap for a stack of 4x4 blocks."""
    lam, vec = np.linalg.eig(mats)
    im = np.sort(lam.imag, axis=-1)
    re = np.sort(lam.real, axis=-1)
    n_freq = 1 + np.sum(np.diff(im, axis=-1) > tol_freq, axis=-1)
    n_decay = 1 + np.sum(np.diff(re, axis=-1) > tol_freq, axis=-1)
    diff = np.abs(lam[..., :, None] - lam[..., None, :])
    k = lam.shape[-1]
    diff[..., np.arange(k), np.arange(k)] = np.inf
    min_gap = diff.min(axis=(-2, -1))
    vec = vec / np.linalg.norm(vec, axis=-2, keepdims=True)
    ov = np.abs(np.einsum("...ij,...ik->...jk", vec.conj(), vec))
    ov[..., np.arange(k), np.arange(k)] = 0.0
    max_overlap = np.minimum(ov.max(axis=(-2, -1)), 1.0)
    return n_freq, n_decay, min_gap, max_overlap


def sweep_2d(base: ModelParams, axis1: str, values1, axis2: str, values2, *,
             tol_freq: float | None = None, workers: int = 1,
             refine_boundaries: bool = True) -> RegionMap:
    """Classify the coherence sector over a 2-D parameter grid.

    Cells are evaluated independently (optionally split across a thread
    pool; results are assembled in fixed row-major order, so the output is
    identical for any worker count). With ``refine_boundaries`` every
    4-adjacent label change is polished by a line refinement along the
    connecting edge, and both cells are flagged when the refined point is an
    accepted coalescence — the flags tie region-boundary structure to actual
    exceptional points.
    """
    values1 = np.asarray(values1, dtype=float)
    values2 = np.asarray(values2, dtype=float)
    if values1.size > 2048 or values2.size > 2048:
        raise ValueError("grid axes are limited to 2048 samples")
    if tol_freq is None:
        tol_freq = 1e-4 * base.gamma
    if axis1 == axis2:
        raise ValueError("sweep axes must differ")

    fields = {f: getattr(base, f) for f in _BLOCK_B_FIELDS}
    if base.sz != 0.0 or axis1 == "sz" or axis2 == "sz":
        raise ValueError("2-D sweeps cover the sz = 0 model")
    for ax in (axis1, axis2):
        if ax not in _BLOCK_B_FIELDS:
            raise ValueError(f"unknown sweep axis {ax!r}")

    grid1 = values1[:, None]
    grid2 = values2[None, :]

    def mats_for_rows(sel: slice) -> np.ndarray:
        f = dict(fields)
        f[axis1] = grid1[sel]
        f[axis2] = grid2
        return _block_b_stack(f["omega0"], f["delta"], f["s12"], f["gamma"], f["w"])

    n1 = values1.size
    if workers > 1:
        chunk = max(1, -(-n1 // workers))
        slices = [slice(k, min(k + chunk, n1)) for k in range(0, n1, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda sel: _cell_diagnostics(mats_for_rows(sel), tol_freq), slices
            ))
        n_freq, n_decay, min_gap, max_overlap = (
            np.concatenate([p[k] for p in parts], axis=0) for k in range(4)
        )
    else:
        n_freq, n_decay, min_gap, max_overlap = _cell_diagnostics(
            mats_for_rows(slice(None)), tol_freq
        )

    region = np.empty(n_freq.shape, dtype="<U5")
    region[:] = "OTHER"
    for count, label in REGION_BY_FREQ_COUNT.items():
        region[n_freq == count] = label

    ep_flag = (min_gap <= EP_GAP_FACTOR * base.gamma) & (max_overlap >= 1.0 - EP_OVERLAP_TOL)

    rmap = RegionMap(axis1, values1, axis2, values2, tol_freq,
                     n_freq, n_decay, region, min_gap, max_overlap, ep_flag)

    if refine_boundaries:
        for (i1, j1), (i2, j2) in rmap.label_change_edges():
            if rmap.ep_flag[i1, j1] or rmap.ep_flag[i2, j2]:
                continue
            if i1 == i2:  # edge along axis2
                fixed = {axis1: float(values1[i1])}
                lo, hi = float(values2[j1]), float(values2[j2])
                vary = axis2
            else:
                fixed = {axis2: float(values2[j1])}
                lo, hi = float(values1[i1]), float(values1[i2])
                vary = axis1
            # a coalescence can sit arbitrarily close to a cell center, i.e.
            # at the very end of the segment; pad the bracket by a quarter cell
            pad = 0.25 * (hi - lo)
            lo_ext = lo - pad
            if vary in ("w", "gamma"):
                lo_ext = max(lo_ext, 1e-12 if vary == "gamma" else 0.0)
            p_fixed = base.replace(**fixed)
            try:
                cand = _refine_line(
                    lambda x: p_fixed.replace(**{vary: float(x)}), "b",
                    lo_ext, hi + pad, 21, 1e-13 * base.gamma,
                )
            except NoMinimumInBracketError:
                continue
            if cand.accepted:
                rmap.ep_flag[i1, j1] = True
                rmap.ep_flag[i2, j2] = True
    return rmap


def locate_ep_annihilation(base: ModelParams, *, s12_bracket=(0.12, 0.30),
                           delta_range=(0.05, 0.60), coarse_points: int = 161,
                           s12_tol: float = 1e-4) -> tuple[float, float]:
    """Track the small-detuning coalescence pair until it disappears.

    For each coupling value the detuning axis is scanned for accepted
    coalescences; bisection on "any found" converges to the largest coupling
    still supporting one. Returns (delta, s12) of the merge point, in the
    units of ``base``. ``base`` fixes the remaining parameters (the
    interesting case is w = gamma).
    """
    d_lo, d_hi = delta_range

    def eps_along_delta(s12: float) -> list[float]:
        p_s = base.replace(s12=float(s12))
        xs = np.linspace(d_lo, d_hi, coarse_points)
        fs = np.array([
            _min_gap_candidate(p_s.replace(delta=float(x)), "b").eigenvalue_gap
            for x in xs
        ])
        found = []
        for i in range(1, coarse_points - 1):
            if fs[i] <= fs[i - 1] and fs[i] <= fs[i + 1]:
                x_star = _golden_minimize(
                    lambda x: _min_gap_candidate(
                        p_s.replace(delta=float(x)), "b").eigenvalue_gap,
                    xs[i - 1], xs[i + 1], 1e-12 * base.gamma,
                )
                cand = _min_gap_candidate(p_s.replace(delta=x_star), "b")
                if cand.accepted:
                    found.append(x_star)
        return found

    lo, hi = s12_bracket
    last_found = eps_along_delta(lo)
    if not last_found:
        raise ValueError("no coalescence found at the lower coupling bracket")
    if eps_along_delta(hi):
        raise ValueError("coalescences persist at the upper coupling bracket")
    while hi - lo > s12_tol * base.gamma:
        mid = 0.5 * (lo + hi)
        found = eps_along_delta(mid)
        if found:
            lo, last_found = mid, found
        else:
            hi = mid
    return float(np.mean(last_found)), 0.5 * (lo + hi)
