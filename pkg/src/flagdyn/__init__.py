"""Orbit-resolved dynamics of finite-dimensional Lindblad systems.

The state of an open n-level system factors into a spectrum (a point on the
probability simplex, fixed by the dissipators once a moving eigenframe is
chosen) and a flag (the eigenframe itself, steerable by a Hamiltonian).
This package computes the induced spectrum flow, reconstructs the
Hamiltonian that realizes a prescribed flag motion, and maps out where on
the simplex the spectrum is locally controllable by switching between
finitely many flags.

Entry points:

- :func:`make_system` / :class:`LindbladSystem` — operators and validation
- :func:`compute_w`, :func:`integrate_lambda` — spectrum transfer rates and flow
- :func:`reconstruct_hamiltonian`, :func:`integrate_controlled`,
  :func:`bookend_transport` — control synthesis
- :func:`iota_flag_set`, :func:`slc_membership`, :func:`rasterize_region` —
  controllability regions
- ``flagdyn`` console script — see :mod:`flagdyn.cli`
"""

from .controllability import (
    BOUNDARY,
    EXTERIOR,
    INTERIOR,
    BoundaryPatch,
    FlagFieldSet,
    IotaFlagSet,
    MembershipResult,
    SLCRegion,
    boundary_candidates,
    build_field_set,
    b_map,
    classify_points,
    compute_a_iota,
    iota_flag_set,
    rasterize_region,
    slc_membership,
    tangent_set_at_iota,
)
from .core import (
    DensityMatrix,
    LindbladSystem,
    SpectralDecomposition,
    apply_dissipator,
    apply_lindblad,
    decompose_hermitian,
    group_spectrum,
    hermitize,
    make_system,
    spectral_decompose,
    trace_distance,
    validate_density,
)
from .errors import (
    FlagdynError,
    NumericalError,
    ParseError,
    ValidationError,
)
from .flagpath import (
    ConstantFlagPath,
    GeodesicFlagPath,
    SampledFlagPath,
    as_flag_path,
    principal_log_unitary,
)
from .hamiltonian import (
    BookendResult,
    ControlBasis,
    ControlledTrajectory,
    DensityTrajectory,
    RoundtripReport,
    TransportPlan,
    assemble_control,
    bookend_transport,
    control_basis,
    decompose_control,
    integrate_controlled,
    reconstruct_hamiltonian,
    roundtrip_report,
    simulate_full,
)
from .orbit import (
    AffineField,
    Flag,
    LambdaTrajectory,
    OmegaMatrix,
    admissible_flag_at_crossing,
    compute_w,
    crossing_block,
    default_step,
    identity_flag,
    integrate_lambda,
    project_field,
    projector_derivative,
    w_derivative,
)
from .randsys import SeededStream, random_dense_operators
from .simplex import (
    ProjectionMap,
    barycentric_lattice,
    build_projection,
    chamber_faces,
    weyl_chamber,
)

__version__ = "0.1.0"

__all__ = [
    "AffineField",
    "BOUNDARY",
    "BookendResult",
    "BoundaryPatch",
    "ConstantFlagPath",
    "ControlBasis",
    "ControlledTrajectory",
    "DensityMatrix",
    "DensityTrajectory",
    "EXTERIOR",
    "Flag",
    "FlagFieldSet",
    "FlagdynError",
    "GeodesicFlagPath",
    "INTERIOR",
    "IotaFlagSet",
    "LambdaTrajectory",
    "LindbladSystem",
    "MembershipResult",
    "NumericalError",
    "OmegaMatrix",
    "ParseError",
    "ProjectionMap",
    "RoundtripReport",
    "SLCRegion",
    "SampledFlagPath",
    "SeededStream",
    "SpectralDecomposition",
    "TransportPlan",
    "ValidationError",
    "admissible_flag_at_crossing",
    "apply_dissipator",
    "apply_lindblad",
    "as_flag_path",
    "assemble_control",
    "b_map",
    "barycentric_lattice",
    "bookend_transport",
    "boundary_candidates",
    "build_field_set",
    "build_projection",
    "chamber_faces",
    "classify_points",
    "compute_a_iota",
    "compute_w",
    "control_basis",
    "crossing_block",
    "decompose_control",
    "decompose_hermitian",
    "default_step",
    "group_spectrum",
    "hermitize",
    "identity_flag",
    "integrate_controlled",
    "integrate_lambda",
    "iota_flag_set",
    "make_system",
    "principal_log_unitary",
    "project_field",
    "projector_derivative",
    "random_dense_operators",
    "rasterize_region",
    "reconstruct_hamiltonian",
    "roundtrip_report",
    "simulate_full",
    "slc_membership",
    "spectral_decompose",
    "tangent_set_at_iota",
    "trace_distance",
    "validate_density",
    "w_derivative",
    "weyl_chamber",
]
