"""Command-line front end: sweeps, trajectories, spectra, chains, verify.

Configuration comes from an optional flat key=value file plus repeatable
``--set KEY=VALUE`` overrides (flags win). All tabular output is CSV with a
header row and 17-significant-digit floats, rendered with fixed line
terminators so identical runs produce identical bytes; ``--format json``
emits the same records as JSON. Exit codes: 0 success, 1 configuration
error, 2 numerical failure, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance, chains, eppoints, spectra, sync
from .config import ConfigError, Field, parse_config_text, resolve
from .dynamics import (
    AtExceptionalPointError,
    OBSERVABLE_NAMES,
    StepTooLargeError,
    rk4_evolve,
    spectral_evolve,
)
from .eppoints import NoMinimumInBracketError
from .linalg import ConvergenceFailure, SingularMatrixError
from .model import ModelParams, pure_state_density
from .spectra import NonUniqueSteadyStateError
from .sync import DegenerateWindowError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_ACCEPTANCE = 3

NUMERICAL_ERRORS = (
    AtExceptionalPointError,
    StepTooLargeError,
    SingularMatrixError,
    ConvergenceFailure,
    NonUniqueSteadyStateError,
    NoMinimumInBracketError,
    DegenerateWindowError,
    np.linalg.LinAlgError,
)

MODEL_FIELDS = [
    Field("omega0", default=20.0, rate=True),
    Field("delta", default=0.0, rate=True),
    Field("s12", default=0.0, rate=True),
    Field("gamma", default=1.0),
    Field("w", default=0.0, rate=True),
    Field("sz", default=0.0, rate=True),
]

INITIAL_STATES = {
    "uniform_superposition": [0.5, 0.5, 0.5, 0.5],
    "alternating_superposition": [0.5, -0.5, 0.5, -0.5],
    "ground": [0.0, 0.0, 0.0, 1.0],
}


def _params_from(cfg: dict) -> ModelParams:
    return ModelParams(
        omega0=cfg["omega0"], delta=cfg["delta"], s12=cfg["s12"],
        gamma=cfg["gamma"], w=cfg["w"], sz=cfg["sz"],
    )


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return str(value)


def render_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    return buf.getvalue()


def render_json(header: list[str], rows: list[list]) -> str:
    records = [
        {key: (None if value is None else value) for key, value in zip(header, row)}
        for row in rows
    ]
    def default(v):
        if isinstance(v, (np.floating, np.integer)):
            return v.item()
        raise TypeError(f"not serializable: {type(v)}")
    return json.dumps(records, indent=2, sort_keys=True, default=default) + "\n"


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="")


def _load_config(args) -> dict[str, str]:
    raw: dict[str, str] = {}
    if args.config:
        raw.update(parse_config_text(Path(args.config).read_text(encoding="utf-8")))
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


# ---------------------------------------------------------------- region-map

REGION_FIELDS = MODEL_FIELDS + [
    Field("axis1_name", kind="str", required=True),
    Field("axis1_lo", rate=True, required=True),
    Field("axis1_hi", rate=True, required=True),
    Field("axis1_steps", kind="int", required=True),
    Field("axis2_name", kind="str", required=True),
    Field("axis2_lo", rate=True, required=True),
    Field("axis2_hi", rate=True, required=True),
    Field("axis2_steps", kind="int", required=True),
    Field("tol_freq", rate=True, default=None),
    Field("refine_boundaries", kind="bool", default=True),
]

REGION_HEADER = ["axis1", "axis2", "n_freq", "n_decay", "region", "min_gap", "max_overlap"]


def render_region_map_csv(base: ModelParams, axis1: str, values1, axis2: str,
                          values2, *, workers: int = 1, tol_freq=None,
                          refine_boundaries: bool = True) -> str:
    rmap = eppoints.sweep_2d(base, axis1, values1, axis2, values2,
                             tol_freq=tol_freq, workers=workers,
                             refine_boundaries=refine_boundaries)
    rows = [
        [row[axis1], row[axis2], row["n_freq"], row["n_decay"], row["region"],
         row["min_gap"], row["max_overlap"]]
        for row in rmap.iter_rows()
    ]
    return render_csv(REGION_HEADER, rows)


def _axis(cfg: dict, which: str) -> tuple[str, np.ndarray]:
    steps = cfg[f"{which}_steps"]
    if steps < 2:
        raise ConfigError(f"{which}_steps must be >= 2")
    return cfg[f"{which}_name"], np.linspace(cfg[f"{which}_lo"], cfg[f"{which}_hi"], steps)


def cmd_region_map(raw: dict[str, str], args) -> int:
    cfg = resolve(raw, REGION_FIELDS)
    base = _params_from(cfg)
    axis1, values1 = _axis(cfg, "axis1")
    axis2, values2 = _axis(cfg, "axis2")
    rmap = eppoints.sweep_2d(base, axis1, values1, axis2, values2,
                             tol_freq=cfg["tol_freq"], workers=args.workers,
                             refine_boundaries=cfg["refine_boundaries"])
    rows = [
        [row[axis1], row[axis2], row["n_freq"], row["n_decay"], row["region"],
         row["min_gap"], row["max_overlap"]]
        for row in rmap.iter_rows()
    ]
    render = render_json if args.format == "json" else render_csv
    _emit(render(REGION_HEADER, rows), args.out)
    return EXIT_OK


# ----------------------------------------------------------------- ep-locate

EP_FIELDS = MODEL_FIELDS + [
    Field("vary", kind="str", required=True),
    Field("lo", rate=True, required=True),
    Field("hi", rate=True, required=True),
    Field("block", kind="str", default="b"),
]

EP_HEADER = ["vary", "located", "eigenvalue_gap", "vector_overlap",
             "accepted", "trivial_degeneracy", "mode_i", "mode_j"]


def cmd_ep_locate(raw: dict[str, str], args) -> int:
    cfg = resolve(raw, EP_FIELDS)
    base = _params_from(cfg)
    cand = eppoints.refine_ep_1d(base, cfg["vary"], (cfg["lo"], cfg["hi"]), cfg["block"])
    rows = [[
        cfg["vary"], float(getattr(cand.params, cfg["vary"])), cand.eigenvalue_gap,
        cand.vector_overlap, cand.accepted, cand.trivial_degeneracy,
        cand.mode_pair[0], cand.mode_pair[1],
    ]]
    render = render_json if args.format == "json" else render_csv
    _emit(render(EP_HEADER, rows), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- trajectory

TRAJ_FIELDS = MODEL_FIELDS + [
    Field("t_end", default=8.0),
    Field("n_samples", kind="int", default=2000),
    Field("initial_state", kind="str", default="uniform_superposition"),
    Field("window", default=None),
    Field("delay_range", default=None),
    Field("delay_steps", kind="int", default=128),
    Field("method", kind="str", default="auto"),
    Field("rk4_dt", default=None),
]

TRAJ_HEADER = ["t", "sx1", "sy1", "sz1", "sx2", "sy2", "sz2", "pearson", "cmax"]


def _initial_state(cfg: dict) -> np.ndarray:
    name = cfg["initial_state"]
    if name not in INITIAL_STATES:
        raise ConfigError(
            f"unknown initial_state {name!r}; choose from {sorted(INITIAL_STATES)}"
        )
    return pure_state_density(INITIAL_STATES[name])


def _evolve(cfg: dict, args) -> tuple:
    """Trajectory on the configured grid; (trajectory, fallback notice or None)."""
    p = _params_from(cfg)
    rho0 = _initial_state(cfg)
    times = np.linspace(0.0, cfg["t_end"], cfg["n_samples"])
    method = cfg["method"]
    if method not in ("auto", "spectral", "rk4"):
        raise ConfigError("method must be auto, spectral or rk4")
    notice = None
    if method in ("auto", "spectral"):
        try:
            return spectral_evolve(rho0, p, times), notice
        except AtExceptionalPointError as exc:
            if method == "spectral":
                raise
            notice = str(exc)
    spacing = times[1] - times[0]
    dt_target = cfg["rk4_dt"] if cfg["rk4_dt"] else 1e-3 / p.gamma
    stride = max(1, int(np.ceil(spacing / dt_target)))
    traj = rk4_evolve(rho0, p, dt=spacing / stride, t_end=cfg["t_end"],
                      sample_stride=stride)
    return traj, notice


def _sync_columns(cfg: dict, traj) -> tuple[np.ndarray, np.ndarray]:
    gamma = cfg["gamma"]
    window = cfg["window"] if cfg["window"] else 1.2 / gamma
    delay = cfg["delay_range"] if cfg["delay_range"] else 0.35 / gamma
    n = traj.times.size
    pearson_col = np.full(n, np.nan)
    cmax_col = np.full(n, np.nan)
    try:
        series = sync.sync_series(traj.times, traj["sx1"], traj["sx2"],
                                  window, delay, cfg["delay_steps"])
    except ValueError:
        return pearson_col, cmax_col  # no window fits this grid
    k = series.times.size
    pearson_col[:k] = series.pearson
    cmax_col[:k] = series.cmax
    return pearson_col, cmax_col


def cmd_trajectory(raw: dict[str, str], args) -> int:
    cfg = resolve(raw, TRAJ_FIELDS)
    traj, notice = _evolve(cfg, args)
    pearson_col, cmax_col = _sync_columns(cfg, traj)
    rows = []
    for i, t in enumerate(traj.times):
        row = [float(t)] + [float(traj[name][i]) for name in OBSERVABLE_NAMES]
        row.append(None if np.isnan(pearson_col[i]) else float(pearson_col[i]))
        row.append(None if np.isnan(cmax_col[i]) else float(cmax_col[i]))
        rows.append(row)
    render = render_json if args.format == "json" else render_csv
    _emit(render(TRAJ_HEADER, rows), args.out)
    if notice is not None:
        payload = json.dumps(
            {"evolver": "rk4", "fallback": True, "reason": notice},
            indent=2, sort_keys=True) + "\n"
        if args.out is not None:
            Path(str(args.out) + ".meta.json").write_text(payload, encoding="utf-8")
        else:
            sys.stderr.write(payload)
    return EXIT_OK


# ----------------------------------------------------------------------- sync

SYNC_HEADER = ["t", "pearson", "cmax", "optimal_delay"]


def cmd_sync(raw: dict[str, str], args) -> int:
    cfg = resolve(raw, TRAJ_FIELDS)
    traj, _ = _evolve(cfg, args)
    gamma = cfg["gamma"]
    window = cfg["window"] if cfg["window"] else 1.2 / gamma
    delay = cfg["delay_range"] if cfg["delay_range"] else 0.35 / gamma
    series = sync.sync_series(traj.times, traj["sx1"], traj["sx2"],
                              window, delay, cfg["delay_steps"])
    rows = [
        [float(series.times[i]),
         None if np.isnan(series.pearson[i]) else float(series.pearson[i]),
         None if np.isnan(series.cmax[i]) else float(series.cmax[i]),
         None if np.isnan(series.optimal_delay[i]) else float(series.optimal_delay[i])]
        for i in range(series.times.size)
    ]
    render = render_json if args.format == "json" else render_csv
    _emit(render(SYNC_HEADER, rows), args.out)
    return EXIT_OK


# -------------------------------------------------------------------- spectrum

SPECTRUM_FIELDS = MODEL_FIELDS + [
    Field("operator", kind="str", default="collective_L"),
    Field("omega_lo", rate=True, default=None),
    Field("omega_hi", rate=True, default=None),
    Field("n_omega", kind="int", default=2048),
    Field("method", kind="str", default="auto"),
]

SPECTRUM_HEADER = ["omega", "S", "operator_tag", "method"]


def cmd_spectrum(raw: dict[str, str], args) -> int:
    cfg = resolve(raw, SPECTRUM_FIELDS)
    p = _params_from(cfg)
    tag = cfg["operator"]
    if tag not in spectra.OPERATOR_TAGS:
        raise ConfigError(f"operator must be one of {spectra.OPERATOR_TAGS}")
    if cfg["omega_lo"] is None or cfg["omega_hi"] is None:
        omega = spectra.default_omega_grid(p, cfg["n_omega"])
    else:
        omega = np.linspace(cfg["omega_lo"], cfg["omega_hi"], cfg["n_omega"])
    method = cfg["method"]
    if method not in ("auto", "closed_form", "resolvent"):
        raise ConfigError("method must be auto, closed_form or resolvent")

    closed_available = (
        p.w == 0.0 and p.sz == 0.0 and (tag == "collective_L" or p.s12 == 0.0)
    )
    series_list = []
    if method in ("auto", "closed_form"):
        if closed_available:
            series_list.append(spectra.spectrum_closed_form(p, tag, omega))
        elif method == "closed_form":
            raise ConfigError("no closed form for these parameters; use resolvent")
    if method in ("auto", "resolvent"):
        series_list.append(spectra.spectrum_numeric(p, tag, omega))

    rows = [
        [float(om), float(val), series.operator_tag, series.method]
        for series in series_list
        for om, val in zip(series.omega, series.values)
    ]
    render = render_json if args.format == "json" else render_csv
    _emit(render(SPECTRUM_HEADER, rows), args.out)
    return EXIT_OK


# ----------------------------------------------------------------------- chain

CHAIN_FIELDS = [
    Field("kind", kind="str", required=True),
    Field("mode", kind="str", default="dispersion"),
    Field("n_cells", kind="int", default=8),
    Field("n_list", kind="str", default="1,2,4,8,16,32,64"),
    Field("omega0", default=20.0),
    Field("delta", default=0.5),
    Field("gamma", default=1.0),
    Field("gamma_c", default=1.0),
    Field("gamma_a", default=2.0),
    Field("gamma_b", default=1.0),
    Field("s_ab", default=0.5),
]

CHAIN_HEADER = ["n_cells", "l", "k", "re_lambda_plus", "im_lambda_plus",
                "re_lambda_minus", "im_lambda_minus", "critical_point",
                "oracle_residual"]


def _chain_spec(cfg: dict, n: int):
    kind = cfg["kind"]
    if kind == "atomic_clouds":
        return chains.AtomicCloudsSpec(n, cfg["omega0"], cfg["delta"], cfg["gamma_c"])
    if kind == "dissipative_chain":
        return chains.DissipativeChainSpec(n, cfg["omega0"], cfg["delta"], cfg["gamma"])
    if kind == "coherent_chain":
        return chains.CoherentChainSpec(n, cfg["omega0"], cfg["gamma_a"],
                                        cfg["gamma_b"], cfg["s_ab"])
    raise ConfigError(f"unknown chain kind {kind!r}")


def _chain_rows(cfg: dict, n: int) -> list[list]:
    from .linalg import matched_eigenvalue_distance

    spec = _chain_spec(cfg, n)
    residual = None
    if n <= chains.MAX_MATRIX_CELLS:
        numeric = np.linalg.eigvals(chains.chain_matrix(spec))
    if spec.kind == "atomic_clouds":
        eigs = chains.clouds_eigs(spec)
        if n <= chains.MAX_MATRIX_CELLS:
            residual = matched_eigenvalue_distance(eigs.all_eigenvalues(), numeric)
        return [[n, 0, 0.0, eigs.bright_plus.real, eigs.bright_plus.imag,
                 eigs.bright_minus.real, eigs.bright_minus.imag,
                 eigs.critical_detuning, residual]]
    modes = (chains.dissipative_chain_eigs(spec) if spec.kind == "dissipative_chain"
             else chains.coherent_chain_eigs(spec))
    if n <= chains.MAX_MATRIX_CELLS:
        residual = matched_eigenvalue_distance(modes.all_eigenvalues(), numeric)
    return [
        [n, l + 1, float(modes.k_values[l]),
         float(modes.lambda_plus[l].real), float(modes.lambda_plus[l].imag),
         float(modes.lambda_minus[l].real), float(modes.lambda_minus[l].imag),
         float(modes.critical_points[l]), residual]
        for l in range(n)
    ]


def cmd_chain(raw: dict[str, str], args) -> int:
    cfg = resolve(raw, CHAIN_FIELDS)
    if cfg["mode"] == "dispersion":
        rows = _chain_rows(cfg, cfg["n_cells"])
    elif cfg["mode"] == "scaling":
        try:
            sizes = [int(tok) for tok in cfg["n_list"].split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"n_list: {exc}") from exc
        rows = []
        for n in sizes:
            all_rows = _chain_rows(cfg, n)
            if cfg["kind"] == "dissipative_chain":
                rows.append(all_rows[-1])  # the l = N mode bounds the region
            else:
                rows.append(all_rows[0])   # l = 1 carries the size-independent bound
    else:
        raise ConfigError("mode must be dispersion or scaling")
    render = render_json if args.format == "json" else render_csv
    _emit(render(CHAIN_HEADER, rows), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------- verify

def cmd_verify(raw: dict[str, str], args) -> int:
    if raw:
        raise ConfigError(f"verify takes no configuration keys, got: {', '.join(sorted(raw))}")
    results, report = acceptance.run_acceptance()
    for line in acceptance.report_lines(results):
        print(line)
    if args.out is not None:
        Path(args.out).write_text(report + "\n", encoding="utf-8", newline="")
    else:
        print(report)
    return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE


COMMANDS = {
    "region-map": cmd_region_map,
    "ep-locate": cmd_ep_locate,
    "trajectory": cmd_trajectory,
    "sync": cmd_sync,
    "spectrum": cmd_spectrum,
    "chain": cmd_chain,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liouvsync",
        description="Spectral analysis of a collectively damped two-qubit system "
                    "and its chain generalizations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="flat key=value configuration file")
        cmd.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="override one configuration key (repeatable)")
        cmd.add_argument("--out", help="output path (default: stdout)")
        cmd.add_argument("--workers", type=int, default=1,
                         help="worker threads for grid sweeps")
        cmd.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = _load_config(args)
        return COMMANDS[args.command](raw, args)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
