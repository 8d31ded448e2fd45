"""Kobayashi metric of the non-convex complex ellipsoids {|z1|^2 + |z2|^(2m) < 1}, m < 1/2."""

from .errors import (
    CertificationError,
    DomainError,
    InfeasibleError,
    InternalError,
    VerificationError,
)
from .scalar import (
    EllipsoidParam,
    V0Threshold,
    bisect_newton,
    gauge,
    solve_x1,
    solve_x2,
    t_of_v,
    v0_threshold,
    v_of_t,
)
from .metric import (
    MetricValue,
    NormalizedQuery,
    Point,
    TangentVector,
    kappa,
    kappa1,
    kappa2,
    kappa_reduced,
    normalize,
)
from .geodesic import (
    BoundaryReport,
    GeodesicDisc,
    boundary_report,
    construct_flat,
    construct_zero_free,
    construct_blaschke,
    eval_disc,
)
from .oracle import (
    KinkReport,
    SearchReport,
    bound_from_candidate,
    root_order_scan,
    kink_report,
    random_search,
)

__version__ = "0.1.0"
