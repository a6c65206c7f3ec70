"""CR stiffness and load assembly, and the SPD solvers used by the splitting."""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidArgumentError, NotSPDError, SolverFailure
from .crspace import edge_mass_weights
from .quadrature import triangle_rule

log = logging.getLogger(__name__)


@dataclass
class LinearSolveConfig:
    """Settings for the SPD solves.

    ``method`` is ``"direct"`` (sparse LU factorized once per mesh and reused)
    or ``"cg"`` (Jacobi-preconditioned conjugate gradients).
    """

    tol: float = 1e-10
    max_iter: int | None = None  # None means 10 * dim
    method: str = "direct"

    def __post_init__(self):
        if not 0.0 < self.tol < 1.0:
            raise InvalidArgumentError("linear solver tolerance must lie in (0, 1)")
        if self.max_iter is not None and self.max_iter < 1:
            raise InvalidArgumentError("max_iter must be at least 1")
        if self.method not in ("direct", "cg"):
            raise InvalidArgumentError(f"unknown linear solver {self.method!r}")


def free_index(mesh):
    """Map edge -> row of the free system, -1 on boundary edges."""
    idx = np.full(mesh.n_edges, -1, dtype=np.int64)
    idx[mesh.interior_edges] = np.arange(mesh.n_dof)
    return idx


def local_stiffness(mesh):
    """(M, 3, 3) element matrices 4 |T| grad(lam_i) . grad(lam_j)."""
    g = mesh.barycentric_gradients
    return 4.0 * mesh.areas[:, None, None] * np.einsum("mid,mjd->mij", g, g)


def assemble_cr_stiffness(mesh):
    """Stiffness matrix over interior edges as a symmetric CSR matrix."""
    K = local_stiffness(mesh)
    fi = free_index(mesh)[mesh.elem_edges]
    rows = np.repeat(fi, 3, axis=1).ravel()
    cols = np.tile(fi, (1, 3)).ravel()
    vals = K.ravel()
    keep = (rows >= 0) & (cols >= 0)
    n = mesh.n_dof
    A = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    A.sum_duplicates()
    return A


def basis_gradients(mesh):
    """(M, 3, 2) gradients of the local CR basis functions."""
    return -2.0 * mesh.barycentric_gradients


def quadrature_values(f, mesh, rule):
    """Values of ``f`` at the quadrature points of every element, (M, nq).

    ``f`` may be a number, a callable ``f(x, y)`` or an (M, nq) array.
    """
    if f is None:
        return None
    if callable(f):
        xy = mesh.points(rule.points)
        return np.broadcast_to(np.asarray(f(xy[..., 0], xy[..., 1]), dtype=float), xy.shape[:2])
    f = np.asarray(f, dtype=float)
    if f.ndim == 0:
        return np.full((mesh.n_elements, rule.npoints), float(f))
    if f.shape != (mesh.n_elements, rule.npoints):
        raise InvalidArgumentError(
            f"load values must have shape {(mesh.n_elements, rule.npoints)}, got {f.shape}"
        )
    return f


def assemble_rhs(mesh, f=None, g_field=None, rule=None):
    """Load vector over interior edges.

    b_i = sum_T ( -g_T . grad(phi_i) |T| + int_T f phi_i ).
    The divergence term is integrated by parts element by element; face
    terms are dropped.
    """
    rule = rule or triangle_rule(4)
    local = np.zeros((mesh.n_elements, 3))
    fq = quadrature_values(f, mesh, rule)
    if fq is not None:
        phi = 1.0 - 2.0 * rule.points  # (nq, 3)
        local += mesh.areas[:, None] * ((fq * rule.weights) @ phi)
    if g_field is not None:
        g_field = np.asarray(g_field, dtype=float)
        if g_field.shape != (mesh.n_elements, 2):
            raise InvalidArgumentError("g_field needs one 2-vector per element")
        local -= mesh.areas[:, None] * np.einsum("md,mid->mi", g_field, basis_gradients(mesh))
    b = np.bincount(mesh.elem_edges.ravel(), weights=local.ravel(), minlength=mesh.n_edges)
    return b[mesh.interior_edges]


def solve_spd(A, b, cfg=None, x0=None):
    """Jacobi-preconditioned conjugate gradients.

    Stops when ||b - A x|| <= tol ||b||.  Raises :class:`NotSPDError` on a
    direction of non-positive curvature and :class:`SolverFailure` if the
    iteration budget is exhausted.
    """
    cfg = cfg or LinearSolveConfig(method="cg")
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise InvalidArgumentError("dimension mismatch between matrix and right-hand side")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise NotSPDError("matrix has a non-positive diagonal entry")
    inv_diag = 1.0 / diag
    max_iter = cfg.max_iter or 10 * n
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = inv_diag * r
    d = z.copy()
    rz = r @ z
    res = np.linalg.norm(r) / bnorm
    for it in range(max_iter):
        if res <= cfg.tol:
            return x
        Ad = A @ d
        curv = d @ Ad
        if curv <= 0.0:
            raise NotSPDError("non-positive curvature in conjugate gradients", res, it)
        alpha = rz / curv
        x += alpha * d
        r -= alpha * Ad
        res = np.linalg.norm(r) / bnorm
        z = inv_diag * r
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    if res <= cfg.tol:
        return x
    raise SolverFailure(
        f"conjugate gradients reached {res:.3e} after {max_iter} iterations", res, max_iter
    )


class CRSystem:
    """Operators of one mesh reused across many solves.

    Holds the stiffness matrix over interior edges, the sparse broken
    gradient (interior dofs -> one 2-vector per element) and, for the direct
    method, the sparse LU factorization.
    """

    def __init__(self, mesh, cfg=None, rule=None):
        self.mesh = mesh
        self.cfg = cfg or LinearSolveConfig()
        self.rule = rule or triangle_rule(4)
        n, m = mesh.n_dof, mesh.n_elements
        fi = free_index(mesh)[mesh.elem_edges]
        bg = basis_gradients(mesh)
        keep = fi.ravel() >= 0
        rows = np.repeat(np.arange(m), 3)[keep]
        cols = fi.ravel()[keep]
        self.Gx = sp.csr_matrix((bg[..., 0].ravel()[keep], (rows, cols)), shape=(m, n))
        self.Gy = sp.csr_matrix((bg[..., 1].ravel()[keep], (rows, cols)), shape=(m, n))
        self._GxT = self.Gx.T.tocsr()
        self._GyT = self.Gy.T.tocsr()
        self.A = assemble_cr_stiffness(mesh)
        self.mass = edge_mass_weights(mesh)[mesh.interior_edges]
        self._lu = None
        self._last = None
        if self.cfg.method == "direct":
            self._lu = spla.splu(self.A.tocsc(), permc_spec="COLAMD")

    @property
    def n(self):
        return self.mesh.n_dof

    def solve(self, b):
        if not np.any(b):
            return np.zeros_like(b)
        if self._lu is not None:
            return self._lu.solve(b)
        x = solve_spd(self.A, b, self.cfg, x0=self._last)
        self._last = x
        return x

    def gradient(self, x):
        """(M, 2) broken gradient of the interior dof vector ``x``."""
        return np.column_stack([self.Gx @ x, self.Gy @ x])

    def divergence_load(self, g):
        """-sum_T |T| g_T . grad(phi_i) for a per-element field ``g``."""
        a = self.mesh.areas
        return -(self._GxT @ (a * g[:, 0]) + self._GyT @ (a * g[:, 1]))

    def load(self, f):
        return assemble_rhs(self.mesh, f, rule=self.rule)

    def l2_norm(self, x):
        return float(np.sqrt(x**2 @ self.mass))
