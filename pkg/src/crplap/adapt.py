"""Error indicators, Dörfler marking, the eigenvalue lower bound and the
SOLVE -> ESTIMATE -> MARK -> REFINE loop."""

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import CRSystem
from .crspace import _check_p, jump_lp_norms_p, lp_norm_p_elementwise
from .eigen import IISSConfig, iiss, transfer_state
from .errors import InvalidArgumentError, SolverFailure
from .mesh import bisect, make_lshape_mesh, make_unit_square_mesh, read_mesh

log = logging.getLogger(__name__)

DEFAULT_RESOLUTION = {"square": 12, "lshape": 6}


@dataclass
class EstimatorReport:
    eta1: np.ndarray  # mu^q h_T^q ||u||_{L^p(T)}^p per element
    eta2: np.ndarray  # jump contributions per element
    face_terms: np.ndarray = field(repr=False)  # h_F ||[u]||_{L^p(F)}^p per edge

    @property
    def eta1_total(self):
        return float(self.eta1.sum())

    @property
    def eta2_total(self):
        return float(self.eta2.sum())


def estimate(mesh, mu, u, p):
    """Local indicators eta1 (element residual) and eta2 (discontinuity).

    Interior-face terms are split evenly between the two neighbours;
    boundary-face terms go to their single element.
    """
    p = _check_p(p)
    if not mu > 0:
        raise InvalidArgumentError("eigenvalue must be positive")
    u.check_mesh(mesh)
    q = p / (p - 1.0)
    eta1 = mu**q * mesh.element_sizes**q * lp_norm_p_elementwise(u, p)
    faces = mesh.edge_lengths * jump_lp_norms_p(u, p)
    weight = np.where(mesh.boundary_edges, 1.0, 0.5)
    eta2 = (faces * weight)[mesh.elem_edges].sum(axis=1)
    return EstimatorReport(eta1, eta2, faces)


def dorfler_mark(values, theta):
    """Smallest greedy set whose indicator sum reaches ``theta`` of the total.

    Values are visited in decreasing order, ties by ascending index, so the
    first (and always selected) element attains the maximum.
    """
    if not 0.0 < theta <= 1.0:
        raise InvalidArgumentError("theta must lie in (0, 1]")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return np.array([], dtype=np.int64)
    if np.any(values < 0):
        raise InvalidArgumentError("indicators must be nonnegative")
    order = np.lexsort((np.arange(values.size), -values))
    csum = np.cumsum(values[order])
    total = csum[-1]
    if not total > 0:
        return np.array([values.size - 1], dtype=np.int64)
    k = int(np.searchsorted(csum, theta * total, side="left")) + 1
    return np.sort(order[: min(k, values.size)])


def glb_guard(mu, max_diam, p, dim=2):
    """(1 + d/2) M mu^(1/p), which must stay below one."""
    return (1.0 + dim / 2.0) * max_diam * mu ** (1.0 / p)


def lower_bound(mu, mesh, p, dim=2):
    """Guaranteed lower bound for the first eigenvalue, or None.

    ``mesh`` may also be the maximal element diameter itself.  The guard uses
    ``mu`` in place of the unknown exact eigenvalue; None is returned when it
    fails.
    """
    if not mu > 0:
        raise InvalidArgumentError("eigenvalue must be positive")
    max_diam = float(mesh) if np.isscalar(mesh) else mesh.max_diameter
    guard = glb_guard(mu, max_diam, p, dim)
    if guard >= 1.0:
        return None
    return (mu ** (1.0 / p) / (1.0 + guard)) ** p


def e_mu(lambda_ref, mu, max_diam, p):
    """lambda_ref^(1/p) - mu^(1/p) / (1 + 2 M mu^(1/p)); positive when the
    bound holds against the reference value."""
    r = mu ** (1.0 / p)
    return lambda_ref ** (1.0 / p) - r / (1.0 + 2.0 * max_diam * r)


@dataclass
class AdaptiveConfig:
    p: float = 2.0
    theta: float = 0.6
    eps_k: float = 1e-4
    K: int = 9
    domain: str = "square"  # square | lshape | file:<path>
    n: int | None = None
    seed: int = 0
    sweeps: int = 2  # bisections applied to each marked element
    iiss: IISSConfig = field(default_factory=IISSConfig)

    def __post_init__(self):
        _check_p(self.p)
        if not 0.0 < self.theta <= 1.0:
            raise InvalidArgumentError("theta must lie in (0, 1]")
        if not self.eps_k > 0:
            raise InvalidArgumentError("eps_k must be positive")
        if self.K < 0:
            raise InvalidArgumentError("K must be nonnegative")
        if self.sweeps < 1:
            raise InvalidArgumentError("sweeps must be at least 1")
        self.iiss.dc.seed = self.seed

    def initial_mesh(self):
        if self.domain.startswith("file:"):
            return read_mesh(self.domain[5:])
        if self.domain not in DEFAULT_RESOLUTION:
            raise InvalidArgumentError(f"unknown domain {self.domain!r}")
        n = self.n or DEFAULT_RESOLUTION[self.domain]
        make = make_unit_square_mesh if self.domain == "square" else make_lshape_mesh
        return make(n)


@dataclass
class LevelRecord:
    k: int
    dof: int
    mu: float
    eta1: float
    eta2: float
    glb: float | None
    glb_guard_ok: bool
    rel_change: float | None
    seconds: float
    max_diam: float = 0.0
    eta1_max: float = 0.0
    eta2_max: float = 0.0
    marked_eta1_max: float | None = None
    marked_eta2_max: float | None = None
    n_marked: int = 0
    iiss_iterations: int = 0
    dc_iterations: int = 0


TRACE_COLUMNS = ["k", "dof", "mu", "eta1", "eta2", "glb", "glb_guard_ok", "rel_change", "seconds"]


def _fmt(x, digits=9):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.{digits}g}"


@dataclass
class AdaptiveTrace:
    records: list = field(default_factory=list)
    mesh: object = None  # final mesh
    eigenpair: object = None  # final DiscreteEigenpair
    error: str | None = None

    @property
    def final(self):
        return self.records[-1]

    def e_mu(self, lambda_ref):
        r = self.final
        return e_mu(lambda_ref, r.mu, r.max_diam, self._p)

    def write_csv(self, path, lambda_ref=None, include_time=True):
        """Trace CSV; with ``lambda_ref`` a footer row ``# e_mu,<value>``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for r in self.records:
                w.writerow(
                    [
                        _fmt(r.k), _fmt(r.dof), _fmt(r.mu), _fmt(r.eta1), _fmt(r.eta2),
                        _fmt(r.glb), _fmt(r.glb_guard_ok), _fmt(r.rel_change),
                        _fmt(r.seconds if include_time else 0.0, 4),
                    ]
                )
            if lambda_ref is not None and self.records:
                fh.write(f"# e_mu,{_fmt(self.e_mu(lambda_ref))}\n")


def adaptive_loop(cfg, on_level=None, mesh=None):
    """Adaptive CR eigenvalue computation.

    Stops once the relative change of mu drops below ``cfg.eps_k`` or after
    level ``cfg.K``.  ``on_level(record, mesh, eigenpair)`` is called after
    each level is estimated.  A solver failure is re-raised with the level
    attached; the partial trace is available as ``exc.trace``.
    """
    mesh = mesh or cfg.initial_mesh()
    p = cfg.p
    trace = AdaptiveTrace()
    trace._p = p
    start = None
    mu_prev = None
    for k in range(cfg.K + 1):
        t0 = time.perf_counter()
        try:
            system = CRSystem(mesh, cfg.iiss.dc.linear)
            pair = iiss(mesh, p, cfg.iiss, start=start, system=system)
        except SolverFailure as exc:
            exc.args = (f"level {k}: {exc.args[0]}",)
            trace.error = str(exc)
            exc.trace = trace
            raise
        report = estimate(mesh, pair.mu, pair.u, p)
        rel = None if mu_prev is None else abs(mu_prev - pair.mu) / mu_prev
        max_diam = mesh.max_diameter
        glb = lower_bound(pair.mu, max_diam, p)
        rec = LevelRecord(
            k=k, dof=mesh.n_dof, mu=pair.mu,
            eta1=report.eta1_total, eta2=report.eta2_total,
            glb=glb, glb_guard_ok=glb is not None, rel_change=rel, seconds=0.0,
            max_diam=max_diam, eta1_max=float(report.eta1.max()),
            eta2_max=float(report.eta2.max()),
            iiss_iterations=pair.iterations, dc_iterations=pair.dc_iterations,
        )
        trace.records.append(rec)
        trace.mesh, trace.eigenpair = mesh, pair
        done = (rel is not None and rel < cfg.eps_k) or k == cfg.K
        if not done:
            m1 = dorfler_mark(report.eta1, cfg.theta)
            m2 = dorfler_mark(report.eta2, cfg.theta)
            marked = np.union1d(m1, m2)
            rec.marked_eta1_max = float(report.eta1[m1].max())
            rec.marked_eta2_max = float(report.eta2[m2].max())
            rec.n_marked = len(marked)
            fine = bisect(mesh, marked, cfg.sweeps)
            start = transfer_state(pair.state, fine)
        rec.seconds = time.perf_counter() - t0
        log.info(
            "level %d dof %d mu %.9g eta1 %.3e eta2 %.3e rel %s",
            k, rec.dof, rec.mu, rec.eta1, rec.eta2, "-" if rel is None else f"{rel:.2e}",
        )
        if on_level is not None:
            on_level(rec, mesh, pair)
        if done:
            break
        mesh = fine
        mu_prev = pair.mu
    return trace
