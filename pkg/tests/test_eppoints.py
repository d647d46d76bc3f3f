"""Coalescence detection, refinement, classification, and region sweeps."""

import numpy as np
import pytest

from liouvsync.eppoints import (
    NoMinimumInBracketError,
    block_eigensystem,
    classify,
    cluster_count,
    dephasing_ep_checks,
    detect_ep,
    locate_ep_annihilation,
    refine_ep_1d,
    sweep_2d,
)
from liouvsync.linalg import eig
from liouvsync.model import ModelParams, analytic_eigs_a, build_block_b

BASE = ModelParams(omega0=20.0)


def test_cluster_count():
    assert cluster_count([1.0, 1.0 + 1e-6, 2.0], 1e-4) == 2
    assert cluster_count([1.0, 2.0, 3.0], 10.0) == 1
    assert cluster_count([], 1.0) == 0


def test_classify_reference_points():
    lam_sfr, _ = block_eigensystem(ModelParams(omega0=20.0, delta=0.3, w=0.1), "b")
    assert classify(lam_sfr, 1e-4) == (1, 4, "SFR")

    # s12 = 0, delta = 0: the branch root is real, all frequencies collapse
    root, lam = np.sqrt(0.25 + 1 + 3), ModelParams(omega0=20.0, w=0.5)
    assert np.imag(np.sqrt(complex(0.5**2 + 1 + 6 * 0.5 - 0, 0))) == 0.0
    lam_b, _ = block_eigensystem(lam, "b")
    assert classify(lam_b, 1e-4) == (1, 4, "SFR")

    # beyond the pump-free coalescence the two frequencies are each doubled
    lam_two, _ = block_eigensystem(ModelParams(omega0=20.0, delta=2.0), "b")
    n_freq, _, region = classify(lam_two, 1e-4)
    assert n_freq == 2 and region == "OTHER"


def test_classify_invariant_under_rescaling():
    p = ModelParams(omega0=20.0, delta=1.2, w=0.4)
    lam, _ = block_eigensystem(p, "b")
    for c in (1e-3, 1.0, 1e3):
        scaled = ModelParams(omega0=20.0 * c, delta=1.2 * c, gamma=c, w=0.4 * c)
        lam_c, _ = block_eigensystem(scaled, "b")
        assert classify(lam_c, 1e-4 * c)[:2] == classify(lam, 1e-4)[:2]


def test_detect_ep_accepted_at_coupled_coalescence():
    cands = detect_ep(ModelParams(omega0=20.0, s12=np.sqrt(2.0), w=1.0), "b")
    accepted = [c for c in cands if c.accepted]
    assert len(accepted) == 1
    assert accepted[0].mode_pair == (0, 1)  # the two most damped modes merge
    assert accepted[0].vector_overlap >= 1 - 1e-6


def test_detect_ep_trivial_degeneracy():
    cands = detect_ep(ModelParams(omega0=20.0, w=2.0 / 3.0), "b")
    small = [c for c in cands if c.eigenvalue_gap <= 1e-6]
    assert small and all(c.trivial_degeneracy and not c.accepted for c in small)
    assert all(c.vector_overlap < 0.99 for c in small)


def test_detect_ep_no_coalescence_generic_coupling():
    for delta in (0.3, 0.8, 1.4, 1.9):
        cands = detect_ep(ModelParams(omega0=20.0, delta=delta, s12=1.5, w=1.0), "b")
        assert not any(c.accepted for c in cands)


@pytest.mark.parametrize(
    "vary,p0,bracket,expected",
    [
        ("delta", BASE, (0.5, 1.5), 1.0),
        ("w", BASE, (0.5, 1.5), 1.0),
        ("s12", BASE.replace(w=1.0), (1.2, 1.6), np.sqrt(2.0)),
    ],
)
def test_refine_recovers_known_loci(vary, p0, bracket, expected):
    cand = refine_ep_1d(p0, vary, bracket)
    assert getattr(cand.params, vary) == pytest.approx(expected, abs=1e-6)
    assert cand.accepted


def test_refine_prefers_coalescence_over_crossing():
    # the bracket holds both the plain crossing at w = 2/3 and the
    # coalescence at w = 1; the coalescence must win
    cand = refine_ep_1d(BASE, "w", (0.5, 1.5))
    assert cand.params.w == pytest.approx(1.0, abs=1e-6)


def test_refine_classifies_isolated_crossing_as_trivial():
    cand = refine_ep_1d(BASE, "w", (0.55, 0.78))
    assert cand.params.w == pytest.approx(2.0 / 3.0, abs=1e-6)
    assert cand.trivial_degeneracy and not cand.accepted


def test_refine_population_sector_branch_point():
    # two cubic-branch eigenvalues turn complex and their vectors align
    cand = refine_ep_1d(ModelParams(omega0=20.0, s12=1.0), "w", (0.05, 1.0), "a")
    assert cand.accepted
    w_star = cand.params.w
    assert w_star == pytest.approx(0.38320517, abs=1e-6)
    _, below = analytic_eigs_a(ModelParams(omega0=20.0, s12=1.0, w=w_star - 0.05))
    _, above = analytic_eigs_a(ModelParams(omega0=20.0, s12=1.0, w=w_star + 0.05))
    assert np.abs(below.imag).max() <= 1e-10
    assert np.abs(above.imag).max() > 1e-3


def test_refine_no_minimum_raises():
    with pytest.raises(NoMinimumInBracketError):
        refine_ep_1d(BASE, "delta", (1.2, 1.5))


def test_gap_function_continuity():
    def min_gap(delta):
        lam, _ = block_eigensystem(BASE.replace(delta=delta, w=0.25), "b")
        diff = np.abs(lam[:, None] - lam[None, :])[np.triu_indices(4, 1)]
        return diff.min()

    x = 0.7
    d6 = abs(min_gap(x + 1e-6) - min_gap(x))
    d7 = abs(min_gap(x + 1e-7) - min_gap(x))
    assert d7 < d6 < 1e-4


def test_pair_condition_profile_at_coalescences():
    # isolated coalescences: the merging pair's condition blows past 1e7
    # while the untouched modes stay tame
    for p in (ModelParams(omega0=20.0, w=1.0),
              ModelParams(omega0=20.0, s12=np.sqrt(2.0), w=1.0)):
        from liouvsync.model import build_liouvillian, extract_block
        pc = np.sort(eig(extract_block(build_liouvillian(p), "b")).pair_condition)
        assert pc[0] < 1e4 and pc[1] < 1e4
        assert pc[2] > 1e7 and pc[3] > 1e7
    # the double point carries two simultaneous second-order coalescences
    pc = np.sort(eig(build_block_b(ModelParams(omega0=20.0, delta=1.0))).pair_condition)
    assert pc[0] > 1e6


def test_dephasing_checks():
    with pytest.raises(ValueError):
        dephasing_ep_checks(BASE)
    # the pump-free coalescence persists under dephasing, split to two carriers
    for sz in (0.3, 0.7):
        p = ModelParams(omega0=20.0, delta=1.0, sz=sz)
        cands = dephasing_ep_checks(p)
        assert sum(c.accepted for c in cands) == 2
        lam, _ = block_eigensystem(p, "b")
        freqs = np.unique(np.round(lam.imag, 6))
        assert cluster_count(lam.imag, 1e-4) >= 2
        assert np.abs(np.sort(freqs) - np.array([-20.0 - 2 * sz, -20.0 + 2 * sz])).max() < 1e-6
    # pumped dephasing coalescence at sz = gamma/sqrt(2), absent at sz = 2 gamma
    assert any(c.accepted for c in dephasing_ep_checks(
        ModelParams(omega0=20.0, w=1.0, sz=1 / np.sqrt(2.0))))
    assert not any(c.accepted for c in dephasing_ep_checks(
        ModelParams(omega0=20.0, w=1.0, sz=2.0)))


def test_refined_dephasing_locus():
    cand = refine_ep_1d(ModelParams(omega0=20.0, w=1.0, sz=0.6), "sz", (0.5, 0.9))
    assert cand.params.sz == pytest.approx(1 / np.sqrt(2.0), abs=1e-6)
    assert cand.accepted


def test_sweep_labels_and_determinism():
    values = np.linspace(0.1, 1.8, 24)
    rmap1 = sweep_2d(BASE, "delta", values, "w", values, workers=1)
    rmap2 = sweep_2d(BASE, "delta", values, "w", values, workers=3)
    assert np.array_equal(rmap1.region, rmap2.region)
    assert np.array_equal(rmap1.min_gap, rmap2.min_gap)
    assert np.array_equal(rmap1.ep_flag, rmap2.ep_flag)
    assert rmap1.labels_present() <= {"SFR", "TFR", "FFR", "OTHER"}
    rows = list(rmap1.iter_rows())
    assert len(rows) == 24 * 24
    assert rows[1]["delta"] == rows[0]["delta"]  # row-major: axis2 varies fastest


def test_sweep_boundaries_are_flagged():
    values = np.linspace(0.2, 1.6, 16)
    rmap = sweep_2d(BASE, "delta", values, "w", values)
    edges = rmap.label_change_edges()
    assert edges, "expected at least one region boundary in this window"
    for a, b in edges:
        assert rmap.ep_flag[a] or rmap.ep_flag[b]


def test_sweep_no_coalescence_beyond_critical_coupling():
    values_d = np.linspace(0.05, 1.9, 12)
    values_w = np.linspace(0.9, 1.1, 5)
    rmap = sweep_2d(BASE.replace(s12=1.5), "delta", values_d, "w", values_w,
                    refine_boundaries=False)
    assert not rmap.ep_flag.any()


def test_sweep_rejects_bad_axes():
    with pytest.raises(ValueError):
        sweep_2d(BASE, "delta", [0.1, 0.2], "delta", [0.1, 0.2])
    with pytest.raises(ValueError):
        sweep_2d(BASE, "delta", np.zeros(3000), "w", [0.1, 0.2])


def test_annihilation_point():
    delta_star, s12_star = locate_ep_annihilation(ModelParams(omega0=20.0, w=1.0))
    assert delta_star == pytest.approx(0.2564, abs=0.005)
    assert s12_star == pytest.approx(0.2013, abs=0.005)
