"""Helmholtz solvers, series iteration, scene sampling and inverse scattering."""

from .fields import (
    ComplexField,
    DegenerateReferenceError,
    FieldDataError,
    FieldShapeError,
    Grid2D,
    RealField,
    boundary_trace,
    five_point_laplacian,
    l2_norm,
    pde_residual,
    prolong,
    relative_l2_error,
    restrict,
    rotate90,
)
from .fdm import (
    Factorization,
    FactorizationError,
    HelmholtzProblem,
    SystemMatrix,
    assemble,
    factorize,
    solve,
    solve_direct,
)
from .neumann import (
    NeumannConfig,
    NeumannResult,
    SeriesConfigError,
    apply_G,
    estimate_contraction,
    neumann_solve,
)
from .scenes import (
    ScattererSpec,
    SourceSpec,
    disk,
    sample_f,
    sample_f_gaussian,
    sample_f_grf,
    sample_f_waves,
    sample_q,
    sample_q_circles,
    sample_q_tshape,
)
from .inversion import (
    IncidentSet,
    InverseConfig,
    InversionReport,
    Measurement,
    forward_map,
    lbfgs_invert,
    misfit_and_gradient,
    plane_wave,
    synthesize_data,
)
from .datasets import (
    DatasetManifest,
    DatasetRecord,
    generate_dataset,
    read_dataset,
    read_manifest,
    read_record,
    write_dataset,
)

__version__ = "0.1.0"
