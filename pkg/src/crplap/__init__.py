"""Adaptive Crouzeix-Raviart finite elements for the first Dirichlet
eigenpair of the p-Laplacian, with a guaranteed lower bound.

Typical use::

    from crplap import AdaptiveConfig, adaptive_loop
    trace = adaptive_loop(AdaptiveConfig(p=1.5, domain="lshape", K=8))
    trace.final.mu
"""

__version__ = "0.1.0"

from .adapt import (
    AdaptiveConfig,
    AdaptiveTrace,
    EstimatorReport,
    LevelRecord,
    adaptive_loop,
    dorfler_mark,
    e_mu,
    estimate,
    lower_bound,
)
from .assembly import (
    CRSystem,
    LinearSolveConfig,
    assemble_cr_stiffness,
    assemble_rhs,
    solve_spd,
)
from .crspace import (
    ConformingP1Function,
    CRFunction,
    broken_gradient,
    broken_seminorm_p,
    connect_to_conforming,
    eval_on_element,
    interpolate_cr,
    jump_lp_norm_p,
    linf_norm,
    lp_norm_p,
)
from .eigen import DiscreteEigenpair, IISSConfig, iiss, rayleigh_quotient
from .errors import (
    CRPlapError,
    DegenerateElementError,
    InvalidArgumentError,
    MeshFormatError,
    NonConvergenceError,
    NotSPDError,
    SolverFailure,
    StaleFunctionError,
)
from .kernels import BACKEND
from .mesh import (
    TriangleMesh,
    bisect,
    make_lshape_mesh,
    make_unit_square_mesh,
    read_mesh,
    refine_uniform,
    write_mesh,
)
from .plap import DCConfig, DCState, resolvent_vector, solve_plaplacian, torsion
from .quadrature import QuadratureRule, triangle_rule
