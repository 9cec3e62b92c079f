"""Krein-Feller operators for singular measures on [0, 1]."""

from .calculus import (
    MonomialTable,
    OperatorSample,
    SeriesEval,
    apply_krein_feller,
    hyperbolic,
    monomial_table,
    trig,
    truncation_order,
)
from .errors import (
    BoundaryError,
    ConfigError,
    ConvergenceError,
    DomainError,
    InsufficientEigenpairsError,
    InvariantViolation,
    KreinFellerError,
    MissedRootError,
    NumericalError,
    SupportInclusionError,
)
from .experiments import (
    ExperimentReport,
    MeasureFamily,
    build_family,
    composed_search,
    embed,
    graph_norm_convergence,
    parse_rhs,
    resolvent_convergence,
    semigroup_convergence,
)
from .grid import GridFunction, merge_grids, uniform_grid
from .measure import (
    Cantor,
    CantorApprox,
    CdfMeasure,
    Lebesgue,
    Mixture,
    Tabulated,
    cantor,
    cantor_approx,
    cdf,
    cdf_distance,
    from_spec,
    integrate,
    lebesgue,
    mixture,
    quantile,
    support_gaps,
    tabulated,
)
from .resolvent import (
    ResolventDensity,
    apply_resolvent,
    resolvent_density,
    resolvent_error_bound,
    verify_resolvent,
)
from .semigroup import HeatKernel, HeatSolution, apply_semigroup, heat_kernel, solve_heat
from .spectral import SpectralDecomposition, eigen_matrix_oracle, eigen_shooting, orthonormality_defect

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
