"""Conforming triangle meshes with newest-vertex bisection.

Elements are stored as counter-clockwise vertex triples whose first vertex is
the *newest vertex*: local edge ``i`` is the edge opposite local vertex ``i``
and edge 0 is the refinement edge.  Meshes are immutable; :func:`bisect`
returns a new mesh whose vertex array extends the parent's (nestedness).

Example
-------
>>> m = make_unit_square_mesh(2)
>>> m.n_elements, m.n_edges
(8, 16)
>>> bisect(m, [0]).n_elements
10
"""

from functools import cached_property

import numpy as np

from .errors import InvalidArgumentError, MeshFormatError

# local edge i joins the two vertices other than i
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class TriangleMesh:
    """Triangulation of a polygon with edge adjacency.

    Parameters
    ----------
    vertices : (N, 2) array_like
    elements : (M, 3) array_like of int
        Counter-clockwise vertex triples.
    refedge : (M,) array_like of int, optional
        Local index of each element's refinement edge.  Elements are rotated
        so that it becomes local edge 0.  Defaults to all zeros.
    generation : int
        Number of refinement rounds applied since the initial mesh.
    parent : (M,) array_like of int, optional
        Index of the element of the previous generation containing each
        element.
    """

    def __init__(self, vertices, elements, refedge=None, generation=0, parent=None):
        vertices = np.asarray(vertices, dtype=float)
        elements = np.asarray(elements, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshFormatError("vertices must have shape (N, 2)")
        if elements.ndim != 2 or elements.shape[1] != 3:
            raise MeshFormatError("elements must have shape (M, 3)")
        if len(elements) == 0:
            raise MeshFormatError("mesh has no elements")
        if elements.min() < 0 or elements.max() >= len(vertices):
            raise MeshFormatError("element references a missing vertex")
        if refedge is not None:
            refedge = np.asarray(refedge, dtype=np.int64)
            if refedge.shape != (len(elements),) or np.any((refedge < 0) | (refedge > 2)):
                raise MeshFormatError("refinement-edge index must be 0, 1 or 2")
            rot = (np.arange(3)[None, :] + refedge[:, None]) % 3
            elements = np.take_along_axis(elements, rot, axis=1)
        self.vertices = _readonly(vertices)
        self.elements = _readonly(elements)
        self.generation = int(generation)
        self.parent = None if parent is None else _readonly(np.asarray(parent, np.int64))
        if np.any(self.signed_areas <= 0.0):
            bad = int(np.argmin(self.signed_areas))
            raise MeshFormatError(f"element {bad} is degenerate or clockwise")
        if np.any(self._edge_count > 2):
            raise MeshFormatError("an edge is shared by more than two elements")

    def __repr__(self):
        return (
            f"TriangleMesh(vertices={self.n_vertices}, elements={self.n_elements}, "
            f"edges={self.n_edges}, generation={self.generation})"
        )

    # -- sizes -----------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def refedge(self):
        """Local refinement-edge index per element (always 0 after storage)."""
        return np.zeros(self.n_elements, dtype=np.int64)

    # -- topology ----------------------------------------------------------
    @cached_property
    def _edge_table(self):
        el = self.elements
        pairs = el[:, LOCAL_EDGES].reshape(-1, 2)
        lo = pairs.min(axis=1)
        hi = pairs.max(axis=1)
        key = lo * self.n_vertices + hi
        ukey, inverse, counts = np.unique(key, return_inverse=True, return_counts=True)
        edges = np.column_stack([ukey // self.n_vertices, ukey % self.n_vertices])
        elem_edges = inverse.reshape(-1, 3)
        return edges, elem_edges, counts, ukey

    @property
    def _edge_count(self):
        return self._edge_table[2]

    @cached_property
    def edges(self):
        """(E, 2) canonical vertex pairs, smaller index first."""
        return _readonly(self._edge_table[0])

    @cached_property
    def elem_edges(self):
        """(M, 3) global edge index of each local edge."""
        return _readonly(self._edge_table[1])

    @cached_property
    def edge_elements(self):
        """(E, 2) incident elements of each edge; -1 pads boundary edges."""
        ee = np.full((self.n_edges, 2), -1, dtype=np.int64)
        flat = self.elem_edges.ravel()
        owner = np.repeat(np.arange(self.n_elements), 3)
        order = np.argsort(flat, kind="stable")
        fs, os_ = flat[order], owner[order]
        first = np.ones(len(fs), dtype=bool)
        first[1:] = fs[1:] != fs[:-1]
        ee[fs[first], 0] = os_[first]
        ee[fs[~first], 1] = os_[~first]
        return _readonly(ee)

    @cached_property
    def edge_local_index(self):
        """(E, 2) local index of the edge inside each incident element (-1 pad)."""
        li = np.full((self.n_edges, 2), -1, dtype=np.int64)
        ee = self.edge_elements
        for side in (0, 1):
            ok = ee[:, side] >= 0
            rows = self.elem_edges[ee[ok, side]]
            li[ok, side] = np.argmax(rows == np.nonzero(ok)[0][:, None], axis=1)
        return _readonly(li)

    @cached_property
    def edge_vertex_local(self):
        """(E, 2, 2) local indices, inside each incident element, of the edge's
        two canonical endpoints (-1 pad for boundary edges)."""
        out = np.full((self.n_edges, 2, 2), -1, dtype=np.int64)
        ee = self.edge_elements
        for side in (0, 1):
            ok = np.nonzero(ee[:, side] >= 0)[0]
            el = self.elements[ee[ok, side]]
            for end in (0, 1):
                out[ok, side, end] = np.argmax(el == self.edges[ok, end][:, None], axis=1)
        return _readonly(out)

    @cached_property
    def boundary_edges(self):
        """Boolean mask of edges with a single incident element."""
        return _readonly(self._edge_count == 1)

    @cached_property
    def interior_edges(self):
        """Indices of interior edges, i.e. the free CR unknowns."""
        return _readonly(np.nonzero(~self.boundary_edges)[0])

    @cached_property
    def boundary_vertices(self):
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.edges[self.boundary_edges].ravel()] = True
        return _readonly(mask)

    @property
    def n_dof(self):
        """Number of interior edges."""
        return len(self.interior_edges)

    # -- geometry ----------------------------------------------------------
    @cached_property
    def signed_areas(self):
        p = self.vertices[self.elements]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return _readonly(0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]))

    @property
    def areas(self):
        return self.signed_areas

    @cached_property
    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return _readonly(np.hypot(d[:, 0], d[:, 1]))

    @cached_property
    def edge_midpoints(self):
        return _readonly(0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]]))

    @cached_property
    def element_sizes(self):
        """h_T = |T|^(1/2)."""
        return _readonly(np.sqrt(self.areas))

    @cached_property
    def element_diameters(self):
        """Longest edge of each element."""
        return _readonly(self.edge_lengths[self.elem_edges].max(axis=1))

    @cached_property
    def barycentric_gradients(self):
        """(M, 3, 2) constant gradients of the barycentric coordinates."""
        p = self.vertices[self.elements]
        # grad lambda_i is the rotated opposite edge over twice the area
        e = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]
        g = np.stack([-e[..., 1], e[..., 0]], axis=-1)
        return _readonly(g / (2.0 * self.areas[:, None, None]))

    def element_size(self, t):
        return float(self.element_sizes[self._check_index(t, self.n_elements)])

    def face_size(self, f):
        return float(self.edge_lengths[self._check_index(f, self.n_edges)])

    def element_diam(self, t):
        return float(self.element_diameters[self._check_index(t, self.n_elements)])

    @staticmethod
    def _check_index(i, n):
        i = int(i)
        if not 0 <= i < n:
            raise InvalidArgumentError(f"index {i} out of range [0, {n})")
        return i

    @property
    def max_diameter(self):
        return float(self.element_diameters.max())

    @property
    def total_area(self):
        return float(self.areas.sum())

    def points(self, bary):
        """Physical coordinates of barycentric points, shape (M, nq, 2)."""
        bary = np.atleast_2d(bary)
        return np.einsum("qi,mid->mqd", bary, self.vertices[self.elements])

    # -- validation ----------------------------------------------------------
    def hanging_vertices(self):
        """Vertices lying inside a boundary-flagged edge.

        In a conforming mesh every edge with a single neighbour lies on the
        domain boundary, so no vertex can sit strictly inside one.
        """
        bidx = np.nonzero(self.boundary_edges)[0]
        a = self.vertices[self.edges[bidx, 0]]
        b = self.vertices[self.edges[bidx, 1]]
        cand = np.nonzero(self.boundary_vertices)[0]
        z = self.vertices[cand]
        found = []
        scale = self.edge_lengths[bidx]
        for start in range(0, len(bidx), 256):
            sl = slice(start, start + 256)
            ab = b[sl] - a[sl]
            az = z[None, :, :] - a[sl][:, None, :]
            cross = ab[:, None, 0] * az[..., 1] - ab[:, None, 1] * az[..., 0]
            t = (ab[:, None, 0] * az[..., 0] + ab[:, None, 1] * az[..., 1]) / scale[sl, None] ** 2
            tol = 1e-12 * scale[sl, None] ** 2
            hit = (np.abs(cross) <= tol) & (t > 1e-12) & (t < 1 - 1e-12)
            found.extend(cand[np.nonzero(hit)[1]].tolist())
        return sorted(set(found))

    def validate(self):
        """Raise :class:`MeshFormatError` unless every mesh invariant holds."""
        if np.any(self.signed_areas <= 0):
            raise MeshFormatError("non-positive element area")
        if np.any(self._edge_count > 2) or np.any(self._edge_count < 1):
            raise MeshFormatError("edge incidence must be 1 or 2")
        hv = self.hanging_vertices()
        if hv:
            raise MeshFormatError(f"non-conforming mesh: hanging vertices {hv[:5]}")
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.elements.ravel()] = True
        if not used.all():
            raise MeshFormatError("mesh contains unused vertices")
        return self


# -- constructors --------------------------------------------------------------
def _structured(nx, ny, x0, y0, h, keep=None):
    """Right-triangle grid; every cell is cut along the same diagonal."""
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    i, j = i.ravel(), j.ravel()
    if keep is not None:
        sel = keep(i, j)
        i, j = i[sel], j[sel]
    vid = lambda a, b: a * (ny + 1) + b  # noqa: E731
    a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
    # right-angle vertex first so the hypotenuse is the refinement edge
    elements = np.concatenate([np.column_stack([b, c, a]), np.column_stack([d, a, c])])
    gx, gy = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="ij")
    verts = np.column_stack([x0 + h * gx.ravel(), y0 + h * gy.ravel()])
    used = np.unique(elements)
    remap = np.full(len(verts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriangleMesh(verts[used], remap[elements])


def make_unit_square_mesh(n):
    """Uniform mesh of (0,1)^2 with n x n cells and 2n^2 right triangles."""
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"grid resolution must be a positive integer, got {n}")
    n = int(n)
    return _structured(n, n, 0.0, 0.0, 1.0 / n)


def make_lshape_mesh(n):
    """Uniform mesh of the L-shape (0,2)^2 minus [1,2)^2.

    ``n`` is the number of cells per side of each of the three unit blocks,
    so the reentrant corner (1, 1) is always a vertex.
    """
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"grid resolution must be a positive integer, got {n}")
    n = int(n)
    return _structured(2 * n, 2 * n, 0.0, 0.0, 1.0 / n, keep=lambda i, j: (i < n) | (j < n))


# -- refinement --------------------------------------------------------------
def bisect(mesh, marked, sweeps=1):
    """Newest-vertex bisection of the marked elements plus closure.

    Every marked element is bisected at least once.  The refinement edge of
    any element touching a bisected edge is bisected as well, which yields a
    conforming mesh.  With ``sweeps=2`` every child of a marked element is
    bisected once more (quadrisection of the marked set).
    """
    if isinstance(marked, (set, frozenset)):
        marked = sorted(marked)
    marked = np.unique(np.asarray(marked, dtype=np.int64).ravel())
    if marked.size and (marked[0] < 0 or marked[-1] >= mesh.n_elements):
        raise InvalidArgumentError("marked element index out of range")
    if sweeps < 1:
        raise InvalidArgumentError("sweeps must be at least 1")
    if marked.size == 0:
        return mesh
    if sweeps > 1:
        fine = bisect(mesh, marked)
        finer = bisect(fine, np.nonzero(np.isin(fine.parent, marked))[0], sweeps - 1)
        # parents are reported with respect to ``mesh``
        return TriangleMesh(
            finer.vertices, finer.elements,
            generation=mesh.generation + 1, parent=fine.parent[finer.parent],
        )

    ee = mesh.elem_edges
    emark = np.zeros(mesh.n_edges, dtype=bool)
    emark[ee[marked, 0]] = True
    while True:
        touched = emark[ee].any(axis=1) & ~emark[ee[:, 0]]
        if not touched.any():
            break
        emark[ee[touched, 0]] = True

    nv = mesh.n_vertices
    medges = np.nonzero(emark)[0]
    mid_id = np.full(mesh.n_edges, -1, dtype=np.int64)
    mid_id[medges] = nv + np.arange(len(medges))
    verts = np.concatenate([mesh.vertices, mesh.edge_midpoints[medges]])
    mkeys = mesh._edge_table[3][medges]  # sorted, since unique keys are sorted

    def midpoint_of(v1, v2):
        key = np.minimum(v1, v2) * nv + np.maximum(v1, v2)
        pos = np.searchsorted(mkeys, key)
        pos = np.minimum(pos, len(mkeys) - 1)
        hit = (v1 < nv) & (v2 < nv) & (mkeys[pos] == key)
        return np.where(hit, nv + pos, -1)

    elems = mesh.elements.copy()
    parent = np.arange(mesh.n_elements)
    while True:
        mid = midpoint_of(elems[:, 1], elems[:, 2])
        split = mid >= 0
        if not split.any():
            break
        e, m = elems[split], mid[split]
        c1 = np.column_stack([m, e[:, 0], e[:, 1]])
        c2 = np.column_stack([m, e[:, 2], e[:, 0]])
        elems = np.concatenate([elems[~split], c1, c2])
        parent = np.concatenate([parent[~split], parent[split], parent[split]])
    order = np.argsort(parent, kind="stable")
    return TriangleMesh(
        verts, elems[order], generation=mesh.generation + 1, parent=parent[order]
    )


def refine_uniform(mesh, rounds=1):
    for _ in range(rounds):
        mesh = bisect(mesh, np.arange(mesh.n_elements))
    return mesh


# -- file format ---------------------------------------------------------------
MESH_MAGIC = "plapmesh 1"


def write_mesh(mesh, path):
    """Write the ASCII ``plapmesh 1`` format."""
    with open(path, "w") as fh:
        fh.write(f"{MESH_MAGIC}\n{mesh.n_vertices} {mesh.n_elements}\n")
        np.savetxt(fh, mesh.vertices, fmt="%.17g")
        np.savetxt(fh, np.column_stack([mesh.elements, mesh.refedge]), fmt="%d")


def read_mesh(path):
    """Read a ``plapmesh 1`` file and validate all mesh invariants."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != MESH_MAGIC:
        raise MeshFormatError(f"{path}: missing '{MESH_MAGIC}' header")
    try:
        nv, ne = (int(t) for t in lines[1].split())
        vert = np.array([[float(t) for t in ln.split()] for ln in lines[2 : 2 + nv]])
        el = np.array([[int(t) for t in ln.split()] for ln in lines[2 + nv : 2 + nv + ne]])
    except (ValueError, IndexError) as exc:
        raise MeshFormatError(f"{path}: {exc}") from None
    if vert.shape != (nv, 2) or el.shape != (ne, 4) or len(lines) != 2 + nv + ne:
        raise MeshFormatError(f"{path}: counts do not match the header")
    return TriangleMesh(vert, el[:, :3], refedge=el[:, 3]).validate()
