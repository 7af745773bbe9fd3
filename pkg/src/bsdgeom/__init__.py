"""Numerical Kahler geometry of bounded symmetric domains.

Domains, Kahler-Einstein potentials, metric-level quantities (gradient length,
Christoffel symbols, Ricci form, curvature of embedded discs) and check suites
that turn the resulting identities into pass/fail reports.
"""

from .calculus import (
    DEFAULT_FD,
    FdConfig,
    HermitianForm,
    PotentialFn,
    hermitian_inverse,
    holomorphic_derivative,
    mixed_hessian,
    mixed_hessian_array,
    richardson,
    wirtinger_derivatives,
    wirtinger_grad,
)
from .domains import (
    Ball,
    Disc,
    DomainSpec,
    IrreducibleFactor,
    Polydisc,
    TypeI,
    contains,
    describe,
    generic_norm,
    khl_length_sq,
    log_kernel_potential,
    parse_domain,
    register_factor,
    sample_interior,
)
from .embeddings import (
    DiscEmbedding,
    FlowResult,
    Mobius,
    PolydiscEmbedding,
    diagonal_disc,
    disc_rank_measured,
    flow_gradient,
    geodesic_disc_through,
    maximal_polydisc_typeI,
    pullback_curvature,
    pullback_metric_1d,
    schwarz_pick_residual,
)
from .errors import (
    ConfigError,
    ContractError,
    DegenerateMetricError,
    DomainBoundaryError,
    GeometryError,
    InconsistentEmbeddingError,
    SamplingError,
)
from .geometry import (
    MetricField,
    TangentVector,
    bochner_terms,
    christoffel,
    constant_length_residual,
    covariant_hessian,
    dc_length_sq,
    gauss_curvature_1d,
    gradient_covariant_derivative,
    gradient_length_sq,
    gradient_vector,
    laplace_beltrami,
    metric_at,
    ricci_at,
)
from .potentials import (
    KoParams,
    ko_potential,
    ko_potential_ball,
    ko_potential_polydisc,
    parse_perturbation,
    perturb_pluriharmonic,
    product_potential,
    standard_potential,
)
from .verify import (
    CheckReport,
    SuiteConfig,
    check_bochner,
    check_dc_relation,
    check_disc_curvature,
    check_flow_foliation,
    check_gradient_identities,
    check_kahler_einstein,
    check_lower_bound,
    check_rigidity,
    check_schwarz_pick,
    run_suite,
    write_reports,
)

__version__ = "0.1.0"
