"""Crouzeix-Raviart functions: evaluation, norms, jumps and transfer operators.

A CR function is piecewise linear with one degree of freedom per edge, the
value at the edge midpoint.  On an element with barycentric coordinates
``lam`` the local basis is ``phi_i = 1 - 2*lam_i``, where edge ``i`` is
opposite vertex ``i``.
"""

import csv

import numpy as np

from .errors import (
    DegenerateElementError,
    InvalidArgumentError,
    StaleFunctionError,
)
from .quadrature import gauss_legendre, triangle_rule


def _check_p(p):
    if not p > 1.0 or not np.isfinite(p):
        raise InvalidArgumentError(f"exponent p must lie in (1, inf), got {p}")
    return float(p)


class CRFunction:
    """Edge-midpoint values of a Crouzeix-Raviart function on ``mesh``.

    With ``dirichlet=True`` (the default) boundary values are required to be
    zero, which is the homogeneous Dirichlet space used by the solvers.
    """

    __slots__ = ("mesh", "dof", "generation", "dirichlet")

    def __init__(self, mesh, dof, dirichlet=True):
        dof = np.array(dof, dtype=float)
        if dof.shape != (mesh.n_edges,):
            raise InvalidArgumentError(
                f"expected {mesh.n_edges} edge values, got shape {dof.shape}"
            )
        if dirichlet and np.any(dof[mesh.boundary_edges] != 0.0):
            raise InvalidArgumentError("boundary degrees of freedom must vanish")
        self.mesh = mesh
        self.dof = dof
        self.generation = mesh.generation
        self.dirichlet = dirichlet

    @classmethod
    def from_interior(cls, mesh, values):
        dof = np.zeros(mesh.n_edges)
        dof[mesh.interior_edges] = values
        return cls(mesh, dof)

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros(mesh.n_edges))

    @property
    def interior(self):
        return self.dof[self.mesh.interior_edges]

    def check_mesh(self, mesh):
        if mesh is not self.mesh and (
            mesh.generation != self.generation or mesh.n_edges != len(self.dof)
        ):
            raise StaleFunctionError(
                f"function lives on generation {self.generation}, "
                f"mesh is generation {mesh.generation}"
            )

    def with_dof(self, dof):
        return CRFunction(self.mesh, dof, dirichlet=self.dirichlet)

    def __neg__(self):
        return self.with_dof(-self.dof)

    def __mul__(self, c):
        return self.with_dof(c * self.dof)

    __rmul__ = __mul__

    def __sub__(self, other):
        other.check_mesh(self.mesh)
        return CRFunction(self.mesh, self.dof - other.dof, self.dirichlet and other.dirichlet)

    def __add__(self, other):
        other.check_mesh(self.mesh)
        return CRFunction(self.mesh, self.dof + other.dof, self.dirichlet and other.dirichlet)

    def __repr__(self):
        return f"CRFunction(n_edges={len(self.dof)}, generation={self.generation})"

    # -- elementwise data --------------------------------------------------
    def local_dofs(self):
        """(M, 3) dof of local edges."""
        return self.dof[self.mesh.elem_edges]

    def values_at(self, bary):
        """Values at barycentric points ``bary`` (nq, 3) on every element."""
        bary = np.atleast_2d(bary)
        return self.local_dofs() @ (1.0 - 2.0 * bary).T

    def vertex_values(self):
        """(M, 3) value of v|_T at each vertex of T: -d_i + d_j + d_k."""
        d = self.local_dofs()
        return d.sum(axis=1, keepdims=True) - 2.0 * d

    def gradients(self):
        """(M, 2) constant broken gradient on each element."""
        return -2.0 * np.einsum("mi,mid->md", self.local_dofs(), self.mesh.barycentric_gradients)


class ConformingP1Function:
    """Continuous piecewise-linear function given by vertex values."""

    __slots__ = ("mesh", "dof", "generation")

    def __init__(self, mesh, dof):
        dof = np.array(dof, dtype=float)
        if dof.shape != (mesh.n_vertices,):
            raise InvalidArgumentError("expected one value per vertex")
        self.mesh = mesh
        self.dof = dof
        self.generation = mesh.generation

    def values_at(self, bary):
        bary = np.atleast_2d(bary)
        return self.dof[self.mesh.elements] @ bary.T

    def gradients(self):
        return np.einsum("mi,mid->md", self.dof[self.mesh.elements], self.mesh.barycentric_gradients)


# -- pointwise evaluation ------------------------------------------------------
def eval_on_element(v, t, bary, mesh=None):
    """Value of v on element ``t`` at barycentric point ``bary``."""
    if mesh is not None:
        v.check_mesh(mesh)
    bary = np.asarray(bary, dtype=float)
    if bary.shape != (3,) or abs(bary.sum() - 1.0) > 1e-12:
        raise InvalidArgumentError("barycentric coordinates must be three numbers summing to 1")
    d = v.dof[v.mesh.elem_edges[int(t)]]
    return float(d @ (1.0 - 2.0 * bary))


def broken_gradient(v, t):
    area = v.mesh.areas[int(t)]
    if not area > 0.0:
        raise DegenerateElementError(f"element {t} has zero area")
    return v.gradients()[int(t)]


# -- norms ---------------------------------------------------------------------
def _region_sum(per_element, region):
    if region is None:
        return float(per_element.sum())
    return float(per_element[np.asarray(region, dtype=np.int64)].sum())


def lp_integrand(values, mesh, p, rule):
    """Per-element quadrature of |values|^p, values shaped (M, nq)."""
    return mesh.areas * (np.abs(values) ** p @ rule.weights)


def lp_norm_p(v, p, region=None, rule=None):
    """Integral of |v|^p over the whole mesh or over element subset ``region``.

    Uses the degree-4 triangle rule; exact for integer p <= 4 only.
    """
    p = _check_p(p)
    rule = rule or triangle_rule(4)
    return _region_sum(lp_integrand(v.values_at(rule.points), v.mesh, p, rule), region)


def lp_norm_p_elementwise(v, p, rule=None):
    p = _check_p(p)
    rule = rule or triangle_rule(4)
    return lp_integrand(v.values_at(rule.points), v.mesh, p, rule)


def lp_distance_p(v, w, p, rule=None):
    """Integral of |v - w|^p for any two functions on the same mesh."""
    p = _check_p(p)
    rule = rule or triangle_rule(4)
    diff = v.values_at(rule.points) - w.values_at(rule.points)
    return float(lp_integrand(diff, v.mesh, p, rule).sum())


def broken_seminorm_p(v, p):
    """Sum over elements of the integral of |grad v|^p (exact)."""
    p = _check_p(p)
    g = v.gradients()
    return float((v.mesh.areas * np.hypot(g[:, 0], g[:, 1]) ** p).sum())


def l2_norm(v):
    """Exact L2 norm of a CR function (the CR mass matrix is diagonal)."""
    return float(np.sqrt(v.dof**2 @ edge_mass_weights(v.mesh)))


def edge_mass_weights(mesh):
    """Diagonal of the CR mass matrix: sum of |T|/3 over elements at each edge."""
    return np.bincount(
        mesh.elem_edges.ravel(), weights=np.repeat(mesh.areas / 3.0, 3), minlength=mesh.n_edges
    )


def linf_norm(v):
    """Max |v|; linear pieces attain their extrema at vertices."""
    return float(np.abs(v.vertex_values()).max())


# -- jumps ---------------------------------------------------------------------
def edge_jumps(v):
    """(E, 2) jump of v at the two canonical endpoints of every edge.

    Interior edges: v|_T1 - v|_T2.  Boundary edges: the trace v|_T.
    """
    mesh = v.mesh
    vv = v.vertex_values()
    ee = mesh.edge_elements
    loc = mesh.edge_vertex_local
    t1 = ee[:, 0]
    jump = vv[t1[:, None], loc[:, 0, :]]
    inner = ee[:, 1] >= 0
    t2 = ee[inner, 1]
    jump[inner] -= vv[t2[:, None], loc[inner, 1, :]]
    return jump


def segment_lp_p(a, b, length, p):
    """Integral of |linear|^p over a segment with endpoint values a, b.

    Evaluated as length * (|b|^p b - |a|^p a) / ((p+1)(b-a)) after scaling
    both values by max(|a|, |b|), which keeps tiny jumps from underflowing.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(a), np.abs(b))
    unit = np.where(scale > 0.0, scale, 1.0)
    a, b = a / unit, b / unit
    diff = b - a
    close = np.abs(diff) <= 1e-8
    safe = np.where(close, 1.0, diff)
    out = np.where(
        close,
        np.abs(0.5 * (a + b)) ** p,
        (np.abs(b) ** p * b - np.abs(a) ** p * a) / ((p + 1.0) * safe),
    )
    return length * scale**p * out


def jump_lp_norms_p(v, p):
    """Integral of |[v]|^p over every edge, shape (E,)."""
    p = _check_p(p)
    j = edge_jumps(v)
    return segment_lp_p(j[:, 0], j[:, 1], v.mesh.edge_lengths, p)


def jump_lp_norm_p(v, f, p):
    """Integral of |[v]|^p over edge ``f``.

    The jump is linear along the edge and vanishes at its midpoint, so this
    equals |a|^p h_F / (p + 1) with ``a`` the endpoint jump.
    """
    p = _check_p(p)
    f = int(f)
    if not 0 <= f < v.mesh.n_edges:
        raise InvalidArgumentError(f"edge {f} out of range")
    j = edge_jumps(v)[f]
    return float(segment_lp_p(j[0], j[1], v.mesh.edge_lengths[f], p))


# -- operators -----------------------------------------------------------------
def interpolate_cr(f, mesh, dirichlet=True, npoints=3):
    """Edge-mean interpolant: dof on F is (1/|F|) times the integral of f over F.

    ``f`` is called with coordinate arrays ``f(x, y)``.  With ``dirichlet``
    the boundary dofs are set to zero.
    """
    s, w = gauss_legendre(npoints)
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    vals = np.broadcast_to(np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float), pts.shape[:2])
    dof = vals @ w
    if dirichlet:
        dof[mesh.boundary_edges] = 0.0
    return CRFunction(mesh, dof, dirichlet=dirichlet)


def connect_to_conforming(v):
    """Vertex averaging into the conforming P1 space, zero on the boundary."""
    mesh = v.mesh
    vv = v.vertex_values()
    el = mesh.elements.ravel()
    total = np.bincount(el, weights=vv.ravel(), minlength=mesh.n_vertices)
    count = np.bincount(el, minlength=mesh.n_vertices)
    dof = total / count
    dof[mesh.boundary_vertices] = 0.0
    return ConformingP1Function(mesh, dof)


def barycentric_coordinates(mesh, elements, xy):
    """Barycentric coordinates of points ``xy`` (K, 2) in ``elements`` (K,)."""
    p = mesh.vertices[mesh.elements[elements]]
    g = mesh.barycentric_gradients[elements]
    lam = np.einsum("kid,kd->ki", g, xy - p[:, 0, :])
    lam[:, 0] = 1.0 - lam[:, 1] - lam[:, 2]
    return lam


def transfer(v, fine):
    """Evaluate ``v`` at the edge midpoints of a one-step refinement ``fine``.

    Each fine element is evaluated through its parent; values at midpoints
    lying on coarse edges are averaged over the two sides.
    """
    if fine.parent is None or fine.generation != v.generation + 1:
        raise StaleFunctionError("target mesh is not a direct refinement of the function's mesh")
    coarse = v.mesh
    mids = fine.edge_midpoints[fine.elem_edges]  # (M, 3, 2)
    par = np.repeat(fine.parent, 3)
    lam = barycentric_coordinates(coarse, par, mids.reshape(-1, 2))
    d = v.dof[coarse.elem_edges[par]]
    vals = np.einsum("ki,ki->k", d, 1.0 - 2.0 * lam)
    idx = fine.elem_edges.ravel()
    total = np.bincount(idx, weights=vals, minlength=fine.n_edges)
    count = np.bincount(idx, minlength=fine.n_edges)
    dof = total / count
    if v.dirichlet:
        dof[fine.boundary_edges] = 0.0
    return CRFunction(fine, dof, dirichlet=v.dirichlet)


def write_solution_csv(v, path, digits=9):
    """CSV with columns ``edge_id, mx, my, dof``."""
    mid = v.mesh.edge_midpoints
    fmt = f"{{:.{digits}g}}"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_id", "mx", "my", "dof"])
        for e in range(v.mesh.n_edges):
            w.writerow([e, fmt.format(mid[e, 0]), fmt.format(mid[e, 1]), fmt.format(v.dof[e])])
