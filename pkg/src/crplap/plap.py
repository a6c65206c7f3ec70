"""Decomposition-coordination solver for -div(|grad u|^(p-2) grad u) = f.

The iteration alternates a linear CR Poisson solve, a pointwise vector
resolvent and a multiplier update:

    -lap u_n = div(xi_n - nu_{n-1}) + f
    |nu_n|^(p-2) nu_n + nu_n = xi_n + grad u_n
    xi_{n+1} = xi_n + grad u_n - nu_n

xi and nu are piecewise constant, matching broken CR gradients.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .assembly import CRSystem, LinearSolveConfig
from .crspace import CRFunction, _check_p
from .errors import InvalidArgumentError, NonConvergenceError

log = logging.getLogger(__name__)


@dataclass
class DCConfig:
    tol: float = 1e-5  # relative L2 change of u
    max_iter: int = 2000
    seed: int = 0
    linear: LinearSolveConfig = field(default_factory=LinearSolveConfig)

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidArgumentError("splitting tolerance must be positive")
        if self.max_iter < 2:
            raise InvalidArgumentError("the splitting needs at least two iterations")


@dataclass
class DCState:
    """Iterate of the splitting; also used as a warm start."""

    xi: np.ndarray
    nu: np.ndarray
    u: CRFunction
    iterations: int = 0
    rel_change: float = float("inf")
    residual: float = float("nan")  # max_T |grad u - nu| at return

    def __post_init__(self):
        m = self.u.mesh.n_elements
        if self.xi.shape != (m, 2) or self.nu.shape != (m, 2):
            raise InvalidArgumentError("xi and nu need one 2-vector per element")


def resolvent_vector(w, p):
    """Solve |nu|^(p-2) nu + nu = w for a single 2-vector ``w``."""
    p = _check_p(p)
    w = np.asarray(w, dtype=float).reshape(1, 2)
    return kernels.resolvent_field(w, p)[0]


def random_start(mesh, seed):
    """xi_1 and nu_0 with components i.i.d. U(0, 0.5)."""
    rng = np.random.default_rng(seed)
    xi = rng.uniform(0.0, 0.5, size=(mesh.n_elements, 2))
    nu = rng.uniform(0.0, 0.5, size=(mesh.n_elements, 2))
    return xi, nu


def decomposition_coordination(system, f, p, cfg=None, start=None, callback=None):
    """Run the splitting on ``system.mesh`` and return the final :class:`DCState`.

    Parameters
    ----------
    system : CRSystem
        Prepared operators of the mesh.
    f : float, callable or (M, nq) array
        Right-hand side, see :func:`crplap.assembly.quadrature_values`.
    start : DCState, optional
        Warm start; only its ``xi`` and ``nu`` are used.  Without it the
        fields are drawn from ``cfg.seed``, except for a zero load, where
        the zero fields (the exact fixed point) are used.
    callback : callable, optional
        Called as ``callback(n, u_interior, rel_change)`` after every step.
    """
    p = _check_p(p)
    cfg = cfg or DCConfig()
    mesh = system.mesh
    load = system.load(f)
    if start is not None:
        xi, nu = start.xi.copy(), start.nu.copy()
    elif np.any(load):
        xi, nu = random_start(mesh, cfg.seed)
    else:
        xi = np.zeros((mesh.n_elements, 2))
        nu = np.zeros((mesh.n_elements, 2))
    u_prev = None
    rel = float("inf")
    for n in range(1, cfg.max_iter + 1):
        u = system.solve(load + system.divergence_load(xi - nu))
        xi, nu, resid = kernels.dc_update(xi, system.gradient(u), p)
        if u_prev is not None:
            prev_norm = system.l2_norm(u_prev)
            diff = system.l2_norm(u - u_prev)
            rel = diff / prev_norm if prev_norm > 0.0 else system.l2_norm(u)
        log.debug("dc_iter %d %.3e", n, rel)
        if callback is not None:
            callback(n, u, rel)
        if n >= 2 and rel <= cfg.tol:
            return DCState(xi, nu, CRFunction.from_interior(mesh, u), n, rel, resid)
        u_prev = u
    raise NonConvergenceError(
        f"splitting did not reach {cfg.tol:g} in {cfg.max_iter} iterations "
        f"(last relative change {rel:.3e})",
        rel,
        cfg.max_iter,
    )


def solve_plaplacian(mesh, f, p, cfg=None, system=None):
    """CR solution of the homogeneous Dirichlet p-Laplace problem with load f."""
    cfg = cfg or DCConfig()
    system = system or CRSystem(mesh, cfg.linear)
    return decomposition_coordination(system, f, p, cfg).u


def torsion(mesh, p, cfg=None, system=None):
    """Torsion function: the p-Laplace solution with f = 1."""
    return solve_plaplacian(mesh, 1.0, p, cfg, system)


def energy(u, f_values, p, system):
    """int |grad u|^p / p - int f u for an interior dof vector ``u``."""
    g = system.gradient(u)
    mesh = system.mesh
    grad_term = (mesh.areas * np.hypot(g[:, 0], g[:, 1]) ** p).sum() / p
    return float(grad_term - system.load(f_values) @ u)
