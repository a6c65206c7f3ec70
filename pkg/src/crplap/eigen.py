"""First discrete eigenpair by normalized inverse iteration of sublinear
supersolutions (IISS).

Starting from the torsion function, each step solves
``-lap_p u_m = (u_{m-1} / ||u_{m-1}||_inf)^(p-1)`` with the splitting solver
and tracks ``lambda_m = ||u_m||_inf^(1-p)``.  The reported eigenvalue is the
broken Rayleigh quotient of the final iterate, which is then normalized in
L^p.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .assembly import CRSystem
from .crspace import (
    CRFunction,
    _check_p,
    broken_seminorm_p,
    edge_mass_weights,
    linf_norm,
    lp_norm_p,
    transfer,
)
from .errors import InvalidArgumentError, NonConvergenceError, SolverFailure
from .plap import DCConfig, DCState, decomposition_coordination

log = logging.getLogger(__name__)


@dataclass
class IISSConfig:
    tol: float = 1e-5  # relative change of lambda_m
    max_iter: int = 200
    dc: DCConfig = field(default_factory=DCConfig)

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidArgumentError("IISS tolerance must be positive")
        if self.max_iter < 1:
            raise InvalidArgumentError("max_iter must be at least 1")


@dataclass
class DiscreteEigenpair:
    mu: float
    u: CRFunction  # ||u||_{L^p} = 1, nonnegative representative
    generation: int
    iterations: int
    lam: float  # IISS statistic ||u_m||_inf^(1-p) at exit
    state: DCState = field(repr=False)  # raw last iterate, reusable as warm start
    dc_iterations: int = 0


def rayleigh_quotient(v, p):
    """Broken energy quotient sum_T int |grad v|^p / int |v|^p."""
    p = _check_p(p)
    den = lp_norm_p(v, p)
    if not den > 0.0:
        raise InvalidArgumentError("Rayleigh quotient of the zero function")
    return broken_seminorm_p(v, p) / den


def power_rhs(u, p, rule):
    """Signed power (u / ||u||_inf)^(p-1) at the quadrature points."""
    z = u.values_at(rule.points) / linf_norm(u)
    return np.sign(z) * np.abs(z) ** (p - 1.0)


def iiss(mesh, p, cfg=None, start=None, system=None):
    """First eigenpair on ``mesh``.

    ``start`` is an optional :class:`DCState` on ``mesh`` (for instance the
    transferred iterate of a coarser level); when given, the torsion solve
    is skipped and its ``u`` seeds the inverse iteration.
    """
    p = _check_p(p)
    cfg = cfg or IISSConfig()
    system = system or CRSystem(mesh, cfg.dc.linear)
    rule = system.rule
    dc_total = 0
    try:
        if start is None:
            state = decomposition_coordination(system, 1.0, p, cfg.dc)
            dc_total += state.iterations
        else:
            start.u.check_mesh(mesh)
            state = start
        u = state.u
        lam = linf_norm(u) ** (1.0 - p)
        for m in range(1, cfg.max_iter + 1):
            rhs = power_rhs(u, p, rule)
            state = decomposition_coordination(system, rhs, p, cfg.dc, start=state)
            dc_total += state.iterations
            u = state.u
            lam_new = linf_norm(u) ** (1.0 - p)
            rel = abs(lam_new - lam) / abs(lam)
            lam = lam_new
            log.debug("iiss_iter %d %.9g %.3e", m, lam, rel)
            if rel < cfg.tol:
                break
        else:
            raise NonConvergenceError(
                f"IISS did not reach {cfg.tol:g} in {cfg.max_iter} iterations "
                f"(last relative change {rel:.3e})",
                rel,
                cfg.max_iter,
            )
    except SolverFailure as exc:
        exc.args = (f"eigensolve on generation {mesh.generation}: {exc.args[0]}",)
        raise
    mu = rayleigh_quotient(u, p)
    scale = lp_norm_p(u, p) ** (-1.0 / p)
    if u.dof @ edge_mass_weights(mesh) < 0.0:
        scale = -scale
    return DiscreteEigenpair(mu, u * scale, mesh.generation, m, lam, state, dc_total)


def transfer_state(state, fine):
    """Carry a splitting iterate to a refinement ``fine`` of its mesh.

    ``fine.parent`` must map every fine element to its ancestor on the
    iterate's mesh.
    """
    par = fine.parent
    return DCState(state.xi[par].copy(), state.nu[par].copy(), transfer(state.u, fine))


def eigen_residual(pair, v, p, rule=None):
    """sum_T int |grad u|^(p-2) grad u . grad v - mu int |u|^(p-2) u v."""
    from .quadrature import triangle_rule

    rule = rule or triangle_rule(4)
    u = pair.u
    v.check_mesh(u.mesh)
    mesh = u.mesh
    gu, gv = u.gradients(), v.gradients()
    norm = np.hypot(gu[:, 0], gu[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        flux = np.where(norm[:, None] > 0, norm[:, None] ** (p - 2.0) * gu, 0.0)
    stiff = (mesh.areas * (flux * gv).sum(axis=1)).sum()
    uq, vq = u.values_at(rule.points), v.values_at(rule.points)
    mass = (mesh.areas * ((np.abs(uq) ** (p - 2.0) * uq * vq) @ rule.weights)).sum()
    return float(stiff - pair.mu * mass)
