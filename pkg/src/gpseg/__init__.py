"""gpseg: desk-scale laboratory for strongly competing Gross-Pitaevskii pairs.

Solves the coupled cubic system for a sweep of competition strengths and
verifies the quantities that control its segregation limit: Holder seminorms
and blow-up rescalings, Alt-Caffarelli-Friedman and Almgren monotonicity
curves, the gamma spectral inequality, the segregation mass, and the
exponential-decay comparison bound.
"""

from .grid import (
    BallQuadrature,
    Field,
    Grid,
    GridError,
    OutsideExtentError,
    ball_integral,
    ball_integral_gradsq,
    dirichlet_energy,
    gradient_sq,
    integrate_nodes,
    interpolate,
    laplacian,
    read_field,
    sphere_integral,
    write_field,
)
from .monotonicity import (
    AcfCurve,
    AlmgrenCurve,
    MonotoneVerdict,
    acf_J,
    almgren_EH,
    almgren_curve,
    arc_first_eigenvalue,
    estimate_C_const,
    gamma_fn,
    gamma_inequality_check,
    logH_identity_check,
    monotone_verdict,
    segregation_functional,
)
from .regularity import (
    BlowupFrame,
    HolderReport,
    blowup_rescale,
    holder_seminorm,
    holder_seminorm_brute,
    lipschitz_seminorm,
    rescaled_residual,
)
from .solver import (
    EnergyBreakdown,
    KComponentParams,
    ModelParams,
    SolutionPair,
    SolverError,
    energy,
    flow_step,
    flow_step_k,
    gaussian_bump_init,
    solve_helmholtz,
    solve_pair,
    verify_exponential_decay,
)
from .sweep import (
    ConfigError,
    SweepConfig,
    SweepReport,
    auto_centers,
    emit_report,
    parse_config,
    recompute_row,
    run_sweep,
)

__version__ = "0.1.0"
