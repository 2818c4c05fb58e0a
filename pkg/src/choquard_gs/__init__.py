"""Ground states of a semirelativistic Choquard equation with a local nonlinear
term, computed by Nehari-manifold minimization on a periodized box."""

from .energy import (
    EnergyContext,
    EnergyReport,
    brezis_lieb_check,
    build_context,
    d_value,
    energy,
    energy_per,
    energy_value,
    grad_energy,
    q_boundary,
)
from .extension import (
    ExtendedField,
    WallGrid,
    build_wall,
    check_norm_equivalence,
    check_trace_inequalities,
    dtn_apply,
    harmonic_extend,
    q_form_volume,
)
from .grid import (
    Field,
    Grid,
    SpectralField,
    forward,
    gaussian_field,
    inverse,
    l2_inner,
    l2_norm,
    l2_norm2,
    load_field,
    random_smooth_field,
    save_field,
    shift,
)
from .nehari import (
    FiberScan,
    NehariProjectionError,
    check_J_conditions,
    fiber_scan,
    ground_level,
    project_to_nehari,
)
from .operators import (
    RieszKernel,
    SqrtOp,
    apply_sqrt,
    apply_sqrt_minus_m,
    build_riesz,
    build_sqrt_op,
    phi_u,
    riesz_convolve,
    singular_cell_average,
)
from .problem import (
    ConfigError,
    Descriptor,
    PotentialSpec,
    ProblemParams,
    ValidationReport,
    load_problem_config,
    sample_potentials,
    validate,
)
from .solver import (
    EscapeReport,
    SolveFailure,
    SolverConfig,
    SolverResult,
    escape_diagnostic,
    multistart,
    solve,
)

__version__ = "0.1.0"
