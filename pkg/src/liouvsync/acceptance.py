"""Acceptance suite: every quantitative exit criterion as one callable.

Each criterion returns a :class:`CriterionResult` with a pass flag and
JSON-serializable details; tolerances are pinned here at their contract
values and only overridable for fault-injection tests. The whole suite is
seeded and free of wall-clock content, so two runs in one environment must
produce byte-identical reports (that is itself the final criterion).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import chains, eppoints, spectra, sync
from .dynamics import (
    AtExceptionalPointError,
    OBSERVABLE_NAMES,
    block_solution,
    relative_phase,
    rk4_evolve,
    sfr_phase_prediction,
    spectral_evolve,
)
from .linalg import eig, matched_eigenvalue_distance
from .model import (
    BLOCK_INDICES,
    ModelParams,
    analytic_eigs_a,
    analytic_eigs_b,
    build_block_a,
    build_block_b,
    build_liouvillian,
    extract_block,
    pure_state_density,
)

__all__ = ["CriterionResult", "evaluate_core", "run_acceptance", "report_json", "report_lines"]

SEED = 20260810

# |phi0> = (|ee> + |eg> + |ge> + |gg>)/2 and its sign-alternating partner
STATE_UNIFORM = pure_state_density([0.5, 0.5, 0.5, 0.5])
STATE_ALTERNATING = pure_state_density([0.5, -0.5, 0.5, -0.5])


@dataclass
class CriterionResult:
    cid: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} [{self.cid:2d}] {self.title}"


def _min_pair_gap(values: np.ndarray) -> float:
    diff = np.abs(values[:, None] - values[None, :])
    diff[np.diag_indices_from(diff)] = np.inf
    return float(diff.min())


def criterion_analytic_eigenvalues(n_sets: int = 200, tol_b: float = 1e-10,
                                   tol_a: float = 1e-9) -> CriterionResult:
    """Closed-form eigenvalue branches against the dense eigensolver."""
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    guard = 2e-4  # redraw when the analytic spectrum is nearly degenerate

    def draw(domain: str) -> ModelParams:
        while True:
            p = ModelParams(
                omega0=rng.uniform(16.0, 40.0),
                delta=0.0 if domain != "b_w0" else rng.uniform(0.0, 3.0),
                s12=rng.uniform(0.0, 3.0),
                gamma=1.0,
                w=0.0 if domain == "b_w0" else rng.uniform(0.05, 3.0),
            )
            if domain.startswith("b"):
                lam = analytic_eigs_b(p)[1]
            else:
                closed, cubic = analytic_eigs_a(p)
                lam = np.concatenate([closed, cubic])
            if _min_pair_gap(lam) >= guard:
                return p

    worst_b = 0.0
    for domain in ("b_w0", "b_delta0"):
        for _ in range(n_sets):
            p = draw(domain)
            numeric = np.linalg.eigvals(build_block_b(p))
            worst_b = max(worst_b, matched_eigenvalue_distance(analytic_eigs_b(p)[1], numeric))
    worst_a = 0.0
    for _ in range(n_sets):
        p = draw("a")
        closed, cubic = analytic_eigs_a(p)
        numeric = np.linalg.eigvals(build_block_a(p))
        worst_a = max(worst_a, matched_eigenvalue_distance(np.concatenate([closed, cubic]), numeric))
    runtime_ok = (time.perf_counter() - start) < 5.0
    return CriterionResult(
        1, "analytic vs numeric eigenvalues (coherence and population sectors)",
        worst_b <= tol_b and worst_a <= tol_a and runtime_ok,
        {"worst_b": worst_b, "worst_a": worst_a, "tol_b": tol_b, "tol_a": tol_a,
         "runtime_under_5s": runtime_ok},
    )


def criterion_ep_loci(tol: float = 1e-6) -> CriterionResult:
    """1-D refinement recovers the four coalescence loci; the 2/3 crossing is trivial."""
    base = ModelParams(omega0=20.0)
    targets = [
        ("delta", base, (0.5, 1.5), 1.0),
        ("w", base, (0.5, 1.5), 1.0),
        ("s12", base.replace(w=1.0), (1.2, 1.6), np.sqrt(2.0)),
        ("sz", base.replace(w=1.0), (0.5, 0.9), 1.0 / np.sqrt(2.0)),
    ]
    details: dict = {}
    ok = True
    for vary, p0, bracket, expected in targets:
        cand = eppoints.refine_ep_1d(p0, vary, bracket)
        found = getattr(cand.params, vary)
        err = abs(found - expected)
        details[vary] = {"located": found, "error": err, "accepted": cand.accepted,
                         "gap": cand.eigenvalue_gap, "overlap": cand.vector_overlap}
        ok = ok and err <= tol and cand.accepted

    trivial = eppoints.refine_ep_1d(base, "w", (0.55, 0.78))
    details["trivial_w"] = {
        "located": trivial.params.w,
        "overlap": trivial.vector_overlap,
        "classified_trivial": trivial.trivial_degeneracy,
    }
    ok = ok and trivial.trivial_degeneracy and not trivial.accepted
    ok = ok and abs(trivial.params.w - 2.0 / 3.0) <= tol
    return CriterionResult(2, "coalescence loci recovered by 1-D refinement", ok, details)


def criterion_ep_annihilation(tol: float = 0.02) -> CriterionResult:
    """Pair annihilation of the small-detuning coalescences at w = gamma."""
    base = ModelParams(omega0=20.0, w=1.0)
    delta_star, s12_star = eppoints.locate_ep_annihilation(base)
    ok = abs(delta_star - 0.26) <= tol and abs(s12_star - 0.21) <= tol
    return CriterionResult(
        3, "coalescence-pair annihilation point at w = gamma", ok,
        {"delta": delta_star, "s12": s12_star, "tol": tol},
    )


def criterion_region_map(grid_points: int = 128) -> CriterionResult:
    """Three-region topology with coalescences on every label boundary."""
    base = ModelParams(omega0=20.0)
    values = np.linspace(0.05, 2.0, grid_points)
    rmap = eppoints.sweep_2d(base, "delta", values, "w", values)
    labels = rmap.labels_present()
    edges = rmap.label_change_edges()
    unflagged = [
        (a, b) for a, b in edges if not (rmap.ep_flag[a] or rmap.ep_flag[b])
    ]
    ok = labels == {"SFR", "TFR", "FFR"} and not unflagged
    return CriterionResult(
        4, "region map holds exactly {SFR, TFR, FFR} with coalescences on boundaries", ok,
        {"labels": sorted(labels), "label_change_edges": len(edges),
         "unflagged_edges": len(unflagged),
         "sfr_connected": rmap.region_connected("SFR")},
    )


def criterion_spectrum_quantitative(center_tol: float = 0.005,
                                    broad_rel_tol: float = 0.02,
                                    narrow_rel_tol: float = 0.05,
                                    node_tol: float = 1e-10) -> CriterionResult:
    """Fitted resonance centers/widths and the exact interference nodes."""
    p = ModelParams(omega0=20.0, delta=0.5, s12=1.0)
    omega = np.linspace(-24.0, -16.0, 16384)
    series = spectra.spectrum_numeric(p, "collective_L", omega)
    fits, meta = spectra.fit_two_resonances(series.omega, series.values)
    broad, narrow = fits[0], fits[1]

    root, _ = analytic_eigs_b(p)
    narrow_derived = (p.gamma - root.real) / 2.0  # 0.0121626767... for these rates

    node_free = spectra.spectrum_numeric(
        p.replace(s12=0.0), "collective_L", np.array([-p.omega0])).values[0]
    node_coupled = spectra.spectrum_numeric(
        p, "collective_L", np.array([-p.omega0 + p.s12])).values[0]
    node_closed_free = spectra.spectrum_closed_form(
        p.replace(s12=0.0), "collective_L", np.array([-p.omega0])).values[0]
    node_closed_coupled = spectra.spectrum_closed_form(
        p, "collective_L", np.array([-p.omega0 + p.s12])).values[0]

    checks = {
        "broad_center": abs(broad.center - (-21.025)) <= center_tol,
        "narrow_center": abs(narrow.center - (-18.975)) <= center_tol,
        "broad_half_width": abs(broad.half_width - 0.988) <= broad_rel_tol * 0.988,
        "narrow_half_width_vs_quoted": abs(narrow.half_width - 0.01215) <= narrow_rel_tol * 0.01215,
        "narrow_half_width_vs_derived": abs(narrow.half_width - narrow_derived)
        <= narrow_rel_tol * narrow_derived,
        "node_s12_zero": abs(node_free) <= node_tol and abs(node_closed_free) <= node_tol,
        "node_s12_one": abs(node_coupled) <= node_tol and abs(node_closed_coupled) <= node_tol,
    }
    return CriterionResult(
        5, "resonance centers, widths and exact interference nodes", all(checks.values()),
        {"broad": {"center": broad.center, "half_width": broad.half_width},
         "narrow": {"center": narrow.center, "half_width": narrow.half_width},
         "narrow_derived_half_width": narrow_derived,
         "fit_residual": meta["residual"], "checks": checks},
    )


def _dip_metrics(p: ModelParams) -> tuple[float, float]:
    omega = np.linspace(-p.omega0 - 3.0, -p.omega0 + 3.0, 8193)
    series = spectra.spectrum_numeric(p, "collective_L", omega)
    center = int(np.argmin(np.abs(omega + p.omega0)))
    top = float(series.values.max())
    depth = (top - series.values[center]) / top
    half_level = (series.values[center] + top) / 2.0
    below = series.values < half_level
    left = center
    while left > 0 and below[left - 1]:
        left -= 1
    right = center
    while right < omega.size - 1 and below[right + 1]:
        right += 1
    return float(depth), float(omega[right] - omega[left])


def _subradiant_metrics(p: ModelParams) -> tuple[float, float]:
    coarse = np.linspace(-p.omega0 - 0.5, -p.omega0 + 3.0, 2048)
    series = spectra.spectrum_numeric(p, "sigma1", coarse)
    center, width, _ = spectra.peak_half_width(series.omega, series.values)
    fine = np.linspace(center - 12.0 * width, center + 12.0 * width, 4097)
    series = spectra.spectrum_numeric(p, "sigma1", fine)
    _, width, height = spectra.peak_half_width(series.omega, series.values)
    return float(width), float(height)


def criterion_cross_method_spectra(rel_tol: float = 1e-8) -> CriterionResult:
    """Resolvent vs closed-form spectra, plus the pumping trends."""
    p = ModelParams(omega0=20.0, delta=0.5)
    cases = [
        (p, "collective_L"),
        (p.replace(s12=1.0), "collective_L"),
        (p, "sigma1"),
        (p, "sigma2"),
    ]
    worst = 0.0
    for params, tag in cases:
        omega = spectra.default_omega_grid(params, 1024)
        closed = spectra.spectrum_closed_form(params, tag, omega).values
        numeric = spectra.spectrum_numeric(params, tag, omega).values
        mask = np.abs(closed) > 1e-6 * np.abs(closed).max()
        worst = max(worst, float(np.max(np.abs(numeric - closed)[mask] / np.abs(closed)[mask])))

    pump_values = (0.0, 0.05, 0.10)
    depths, widths = zip(*(_dip_metrics(p.replace(w=wv)) for wv in pump_values))
    sub_widths, sub_heights = zip(
        *(_subradiant_metrics(p.replace(s12=1.0, w=wv)) for wv in pump_values)
    )
    trends = {
        "dip_depth_decreasing": depths[0] > depths[1] > depths[2],
        "dip_width_increasing": widths[0] < widths[1] < widths[2],
        "subradiant_width_increasing": sub_widths[0] < sub_widths[1] < sub_widths[2],
        "subradiant_height_decreasing": sub_heights[0] > sub_heights[1] > sub_heights[2],
    }
    ok = worst <= rel_tol and all(trends.values())
    return CriterionResult(
        6, "resolvent matches closed forms; pumping trends monotone", ok,
        {"worst_relative_deviation": worst, "dip_depths": list(depths),
         "dip_widths": list(widths), "subradiant_widths": list(sub_widths),
         "subradiant_heights": list(sub_heights), "trends": trends},
    )


def criterion_synchronization(phase_tol: float = 0.05, cmax_floor: float = 0.95,
                              std_floor: float = 0.3) -> CriterionResult:
    """Phase locking, delay-maximized correlation, and the non-locking case."""
    window, delay_range, delay_steps = 1.2, 0.35, 128

    # single-frequency regime: phase converges to the mode prediction
    p_a = ModelParams(omega0=20.0, delta=0.3, w=0.1)
    sol = block_solution(STATE_UNIFORM, p_a)
    predicted = sfr_phase_prediction(sol)
    amp_x = sol.amplitudes[:, 0, :]
    weight_ratio = float(np.max(amp_x[-2] / amp_x[-1]))
    rate_gap = float(sol.eigenvalues[-1].real - sol.eigenvalues[-2].real)
    t_locked = (np.log(weight_ratio) + np.log(100.0)) / rate_gap
    times = np.linspace(0.0, 12.0, 3001)
    traj = spectral_evolve(STATE_UNIFORM, p_a, times)
    err = np.abs(np.angle(np.exp(1j * (relative_phase(traj) - predicted))))
    max_err = float(err[times >= t_locked].max())

    # multi-frequency locking through the slow mode
    times_b = np.linspace(0.0, 10.0, 2501)
    p_b = ModelParams(omega0=20.0, delta=2.0, s12=1.0, w=0.1)
    traj_b = spectral_evolve(STATE_UNIFORM, p_b, times_b)
    ss_b = sync.sync_series(times_b, traj_b["sx1"], traj_b["sx2"],
                            window, delay_range, delay_steps)
    sel_b = (ss_b.times >= 5.0) & (ss_b.times <= 8.0)
    cmax_min = float(np.min(ss_b.cmax[sel_b]))

    # stronger pumping prevents locking
    p_c = p_b.replace(w=0.75)
    traj_c = spectral_evolve(STATE_UNIFORM, p_c, times_b)
    ss_c = sync.sync_series(times_b, traj_c["sx1"], traj_c["sx2"],
                            window, delay_range, delay_steps)
    sel_c = (ss_c.times >= 4.0) & (ss_c.times <= 8.0)
    pearson_std = float(np.std(ss_c.pearson[sel_c]))

    ok = max_err <= phase_tol and cmax_min > cmax_floor and pearson_std > std_floor
    return CriterionResult(
        7, "synchronization dynamics in the three reference configurations", ok,
        {"predicted_phase": float(predicted), "locking_time": float(t_locked),
         "max_phase_error": max_err, "cmax_min_5_8": cmax_min,
         "pearson_std_4_8": pearson_std},
    )


def criterion_dynamics_cross_validation(tol: float = 1e-6, n_sets: int = 20) -> CriterionResult:
    """Eigenmode expansion against the Runge-Kutta oracle; coalescence fallback."""
    rng = np.random.default_rng(SEED + 8)

    def draw() -> tuple[ModelParams, np.ndarray]:
        while True:
            p = ModelParams(
                omega0=rng.uniform(10.0, 30.0),
                delta=rng.uniform(0.0, 2.0),
                s12=rng.uniform(0.0, 2.0),
                gamma=1.0,
                w=rng.uniform(0.05, 1.0),
            )
            liouv = build_liouvillian(p)
            conditions = [
                eig(extract_block(liouv, lbl)).pair_condition.max()
                for lbl in ("a", "b", "c", "d", "e")
            ]
            if max(conditions) < 1e4:
                amps = rng.normal(size=4) + 1j * rng.normal(size=4)
                return p, pure_state_density(amps)

    worst = 0.0
    for _ in range(n_sets):
        p, rho0 = draw()
        oracle = rk4_evolve(rho0, p, dt=1e-3, t_end=8.0, sample_stride=4)
        expansion = spectral_evolve(rho0, p, oracle.times)
        worst = max(
            worst,
            max(float(np.abs(expansion[k] - oracle[k]).max()) for k in OBSERVABLE_NAMES),
        )

    p_ep = ModelParams(omega0=20.0, delta=1.0)
    try:
        spectral_evolve(STATE_UNIFORM, p_ep, np.linspace(0.0, 4.0, 500))
        raised = False
    except AtExceptionalPointError:
        raised = True
    integrator = rk4_evolve(STATE_UNIFORM, p_ep, dt=1e-3, t_end=4.0, sample_stride=10)
    integrator_ok = bool(np.isfinite(integrator["sx1"]).all())

    ok = worst <= tol and raised and integrator_ok
    return CriterionResult(
        8, "eigenmode expansion vs Runge-Kutta; coalescence raises and integrator survives",
        ok,
        {"worst_observable_deviation": worst, "tol": tol,
         "raises_at_coalescence": raised, "integrator_runs_at_coalescence": integrator_ok},
    )


def criterion_chains(match_tol_factor: float = 1e-10,
                     locator_tol: float = 1e-8) -> CriterionResult:
    """Closed chain dispersions vs the direct matrices; critical-point scalings."""
    sizes = (1, 2, 4, 8, 16, 32, 64)
    omega0 = 20.0
    worst = 0.0
    for n in sizes:
        spec_d = chains.DissipativeChainSpec(n, omega0, delta=0.7, gamma=1.0)
        spec_c = chains.CoherentChainSpec(n, omega0, gamma_a=2.0, gamma_b=1.0, s_ab=0.8)
        spec_k = chains.AtomicCloudsSpec(n, omega0, delta=0.7, gamma_c=1.0)
        for spec, modes in (
            (spec_d, chains.dissipative_chain_eigs(spec_d).all_eigenvalues()),
            (spec_c, chains.coherent_chain_eigs(spec_c).all_eigenvalues()),
            (spec_k, chains.clouds_eigs(spec_k).all_eigenvalues()),
        ):
            numeric = np.linalg.eigvals(chains.chain_matrix(spec))
            worst = max(worst, matched_eigenvalue_distance(modes, numeric))
    scale = max(omega0, 2.0)
    match_ok = worst <= match_tol_factor * scale

    diss = [r["critical_ratio"] for r in chains.scaling_scan("dissipative_chain", sizes)]
    coh = [r["critical_ratio"] for r in chains.scaling_scan("coherent_chain", sizes)]
    diss_ok = all(a > b for a, b in zip(diss, diss[1:])) and diss[-1] < 0.05
    coh_ok = (
        all(a > b for a, b in zip(coh, coh[1:]))
        and all(r >= 0.25 for r in coh)
        and abs(coh[-1] - 0.25) < 0.01
    )

    clouds_details = {}
    clouds_ok = True
    for n in (1, 10, 100):
        gc = 1.0
        critical = n * gc

        def bright_gap(delta: float) -> float:
            return chains.clouds_eigs(
                chains.AtomicCloudsSpec(n, omega0, delta=float(delta), gamma_c=gc)
            ).bright_gap()

        located = eppoints._golden_minimize(
            bright_gap, 0.9 * critical, 1.1 * critical, 1e-10 * critical)
        gap_at_critical = bright_gap(critical)
        rel_err = abs(located / critical - 1.0)
        clouds_details[f"n{n}"] = {"relative_location_error": rel_err,
                                   "gap_at_critical": gap_at_critical}
        clouds_ok = clouds_ok and rel_err <= locator_tol and gap_at_critical <= 1e-8

    ok = match_ok and diss_ok and coh_ok and clouds_ok
    return CriterionResult(
        9, "chain closed forms vs direct matrices; critical-point scaling", ok,
        {"worst_match": worst, "dissipative_ratios": diss, "coherent_ratios": coh,
         "clouds": clouds_details},
    )


def criterion_physicality(n_runs: int = 50) -> CriterionResult:
    """State validity along integration; spectral positivity; sector integrity."""
    rng = np.random.default_rng(SEED + 10)
    worst_trace = worst_herm = 0.0
    lowest_eig = 0.0
    for _ in range(n_runs):
        p = ModelParams(
            omega0=rng.uniform(10.0, 30.0),
            delta=rng.uniform(0.0, 2.0),
            s12=rng.uniform(0.0, 2.0),
            gamma=1.0,
            w=rng.uniform(0.0, 1.5),
            sz=rng.uniform(-0.5, 0.5) if rng.random() < 0.3 else 0.0,
        )
        rho0 = pure_state_density(rng.normal(size=4) + 1j * rng.normal(size=4))
        traj = rk4_evolve(rho0, p, dt=1e-3, t_end=3.0, sample_stride=25, store_states=True)
        states = traj.states
        traces = np.einsum("tii->t", states)
        worst_trace = max(worst_trace, float(np.abs(traces - 1.0).max()))
        worst_herm = max(
            worst_herm,
            float(np.abs(states - states.conj().transpose(0, 2, 1)).max()),
        )
        herm = (states + states.conj().transpose(0, 2, 1)) / 2.0
        lowest_eig = min(lowest_eig, float(np.linalg.eigvalsh(herm).min()))

    zero_count_ok = True
    max_real = -np.inf
    for _ in range(20):
        p = ModelParams(
            omega0=rng.uniform(10.0, 30.0),
            delta=rng.uniform(0.0, 2.0),
            s12=rng.uniform(0.0, 2.0),
            gamma=1.0,
            w=rng.uniform(0.05, 2.0),
        )
        lam = np.linalg.eigvals(build_liouvillian(p))
        zero_count_ok = zero_count_ok and int(np.sum(np.abs(lam) <= 1e-10)) == 1
        max_real = max(max_real, float(lam.real.max()))

    leak_free = True
    for _ in range(20):
        p = ModelParams(
            omega0=rng.uniform(10.0, 30.0),
            delta=rng.uniform(0.0, 2.0),
            s12=rng.uniform(0.0, 2.0),
            gamma=1.0,
            w=rng.uniform(0.0, 2.0),
            sz=rng.uniform(-1.0, 1.0),
        )
        liouv = build_liouvillian(p)
        try:
            for label in BLOCK_INDICES:
                extract_block(liouv, label)
        except Exception:
            leak_free = False

    ok = (
        worst_trace <= 1e-9
        and worst_herm <= 1e-12
        and lowest_eig >= -1e-10
        and zero_count_ok
        and max_real <= 1e-10
        and leak_free
    )
    return CriterionResult(
        10, "physicality: state validity, spectral positivity, sector integrity", ok,
        {"worst_trace_drift": worst_trace, "worst_hermiticity": worst_herm,
         "lowest_state_eigenvalue": lowest_eig, "unique_zero_mode": zero_count_ok,
         "max_real_part": max_real, "blocks_leak_free": leak_free},
    )


def evaluate_core() -> list[CriterionResult]:
    """Criteria 1-10 in order (everything except the determinism check)."""
    return [
        criterion_analytic_eigenvalues(),
        criterion_ep_loci(),
        criterion_ep_annihilation(),
        criterion_region_map(),
        criterion_spectrum_quantitative(),
        criterion_cross_method_spectra(),
        criterion_synchronization(),
        criterion_dynamics_cross_validation(),
        criterion_chains(),
        criterion_physicality(),
    ]


def report_json(results: list[CriterionResult]) -> str:
    payload = {
        "suite": "liouvsync-acceptance",
        "passed": all(r.passed for r in results),
        "criteria": [
            {"id": r.cid, "title": r.title, "passed": r.passed, "details": r.details}
            for r in results
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def report_lines(results: list[CriterionResult]) -> list[str]:
    return [r.line() for r in results]


def _region_map_worker_check() -> bool:
    # worker-count independence of the rendered CSV bytes
    from .cli import render_region_map_csv

    base = ModelParams(omega0=20.0, s12=0.3)
    values = np.linspace(0.1, 1.5, 24)
    outputs = [
        render_region_map_csv(base, "delta", values, "w", values, workers=workers)
        for workers in (1, 3)
    ]
    return outputs[0] == outputs[1]


def run_acceptance() -> tuple[list[CriterionResult], str]:
    """Evaluate everything, including determinism, and render the report."""
    first = evaluate_core()
    second = evaluate_core()
    reports_identical = report_json(first) == report_json(second)
    workers_identical = _region_map_worker_check()
    determinism = CriterionResult(
        11, "byte-identical reports and worker-count-independent sweeps",
        reports_identical and workers_identical,
        {"repeat_run_identical": reports_identical,
         "region_map_worker_independent": workers_identical},
    )
    results = first + [determinism]
    return results, report_json(results)
