"""Over-the-air diagnosis of stuck elements on an intelligent reflecting surface.

Two estimators localize a rectangular cluster of stuck elements from noisy
pilot measurements: sorted posterior matching (lie-tolerant questioning) and
three-phase bisection (answer-trusting halving). A Monte Carlo harness scores
accuracy and measurement cost over transmit-power and antenna sweeps.
"""

from .airlink import (
    InitEstimates,
    Measurement,
    received_signal,
    run_initialization,
    true_defective_cascade,
    true_normal_cascade,
)
from .bisection import (
    BisectionState,
    Phase,
    ThreePhaseResult,
    bisection_step,
    drive_three_phase,
    next_cut,
    run_three_phase,
)
from .channel import (
    ChannelSet,
    DegenerateGeometryError,
    Geometry,
    default_geometry,
    synthesize_channels,
)
from .detect import (
    BoundaryQuery,
    CaseVerdict,
    RegionQuery,
    answer_yk,
    classify_boundary,
    classify_region,
    init_noise_inflation,
    loglik_region_normal,
    region_residual_energy,
    residual_threshold,
    truth_verdict,
)
from .grid import (
    DefectRect,
    FailureScene,
    GridDims,
    NoDefectError,
    PhaseAssignment,
    bounding_rectangle,
    defective_set,
    normal_set,
    realized_coefficient,
    realized_coefficients,
)
from .harness import (
    ExperimentConfig,
    TrialResult,
    calibrate_noise,
    diagnose_bisection,
    diagnose_sortpm,
    load_config,
    repro_examples,
    run_trial,
    sample_scene,
    sweep,
    write_sweep_csv,
)
from .sortpm import (
    BoundaryEstimate,
    PosteriorState,
    QuerySet,
    SortPMResult,
    design_query,
    estimate_boundary_sortpm,
    posterior_update,
    run_sortpm_generic,
    sorted_view,
)

__version__ = "0.1.0"
