"""Spectral analysis of a collectively damped, incoherently pumped two-qubit
system, and its many-qubit chain generalizations.

The package splits along the problem structure: :mod:`liouvsync.linalg` holds
the dense non-Hermitian machinery, :mod:`liouvsync.model` the vectorized
generator and its invariant sectors, :mod:`liouvsync.dynamics` the two
independent evolvers, :mod:`liouvsync.eppoints` coalescence detection and the
frequency-region maps, :mod:`liouvsync.sync` the windowed Pearson measures,
:mod:`liouvsync.spectra` stationary states and two-time correlation spectra,
:mod:`liouvsync.chains` the one-excitation chain models, and
:mod:`liouvsync.cli` the command-line harness with the acceptance runner in
:mod:`liouvsync.acceptance`.
"""

from .linalg import (
    ConvergenceFailure,
    Eigensystem,
    NonSquareError,
    SingularMatrixError,
    ZeroVectorError,
    eig,
    matched_eigenvalue_distance,
    null_space,
    overlap,
    solve,
)
from .model import (
    BlockLeakError,
    ModelParams,
    OutsideAnalyticDomainError,
    UnsupportedVariantError,
    analytic_eigs_a,
    analytic_eigs_b,
    build_block_a,
    build_block_b,
    build_liouvillian,
    extract_block,
    pure_state_density,
)
from .dynamics import (
    AtExceptionalPointError,
    NotSFRError,
    SpectralSolution,
    StepTooLargeError,
    Trajectory,
    block_solution,
    relative_phase,
    rk4_evolve,
    sfr_phase_prediction,
    spectral_evolve,
)
from .eppoints import (
    EPCandidate,
    NoMinimumInBracketError,
    RegionMap,
    classify,
    dephasing_ep_checks,
    detect_ep,
    locate_ep_annihilation,
    refine_ep_1d,
    sweep_2d,
)
from .sync import DecayRatio, DegenerateWindowError, SyncResult, cmax, decay_ratio, pearson, sync_series
from .spectra import (
    NonUniqueSteadyStateError,
    OutsideDomainError,
    SpectrumSeries,
    SteadyState,
    correlation_w0,
    spectrum_closed_form,
    spectrum_numeric,
    steady_state,
)
from .chains import (
    AtomicCloudsSpec,
    ChainModes,
    CoherentChainSpec,
    DissipativeChainSpec,
    chain_matrix,
    clouds_eigs,
    coherent_chain_eigs,
    dissipative_chain_eigs,
    mode_functions,
    scaling_scan,
)

__version__ = "0.1.0"
