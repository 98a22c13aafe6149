"""Numerical toolkit for ring moduli of path families in extended n-space.

Subpackages cover chordal geometry, sphere/annulus quadrature, admissibility
criteria (divergence, FMO, log growth), exact and discrete ring moduli with
weighted lower bounds, and the explicit radial map families together with
their collapse and lightness experiments.
"""

from .criteria import (
    DivergenceVerdict,
    PsiConstruction,
    alpha_ratio,
    construct_psi,
    divergence_test,
    fmo_estimate,
    inverted_field,
    log_growth_test,
    psi_formula,
)
from .errors import (
    ContractViolationError,
    DegenerateProfileError,
    DomainError,
    InputError,
    IntegralDivergenceError,
    PreconditionError,
    SolverStallError,
)
from .geometry import (
    Annulus,
    Continuum,
    ExtendedPoint,
    chordal_diameter,
    chordal_distance,
    euclidean_diameter,
    euclidean_distance,
    infinity,
    point,
    unit_ball_volume,
    unit_sphere_area,
)
from .gridsolver import (
    DiscreteSolution,
    GridPathProblem,
    SolverConfig,
    discrete_modulus,
    shortest_path_between,
    solve_modulus,
)
from .maps import (
    PowerLawProfile,
    ProfileGrid,
    RadialMapFamily,
    RadialProfile,
    Theorem3Report,
    build_profile,
    equicontinuity_modulus,
    eval_map,
    map_points,
    pushforward,
    theorem3_scenario,
)
from .modulus import (
    RingModulusResult,
    caraman_lower_bound,
    eta0_weighted_bound,
    loewner_lower_bound,
    minorization_bound,
    minorization_bound_ring,
    radial_coverage,
    ring_modulus_exact,
    weighted_ring_identity,
)
from .quadrature import (
    QuadratureConfig,
    WeightField,
    annulus_integral_mc,
    annulus_weighted_integral,
    radial_integral,
    sphere_average,
)

__version__ = "0.1.0"
