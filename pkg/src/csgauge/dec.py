"""Discrete exterior calculus on axis-aligned quadrilateral cell complexes.

Cochains of degree 0, 1 and 2 live on vertices, edges and faces. The
coboundary is the signed incidence matrix, the Hodge star is diagonal
(circumcentric dual, clipped at the mesh boundary) and multivalued phases
are carried as 1-cochains of increments so that holonomy around holes
survives discretization.

Conventions
-----------
* Horizontal edges point in +x, vertical edges in +y.
* Faces and loops are positively oriented counterclockwise, so the face
  boundary is (bottom, right, top, left) with signs (+1, +1, -1, -1).
* ``hodge_star(hodge_star(c)) == (-1)**(k*(2-k)) * c`` for a primal
  degree-k cochain: +1 on 0- and 2-cochains, -1 on 1-cochains.
* ``codifferential = -star . d . star``, which makes it the exact adjoint of
  ``exterior_derivative`` under the Hodge inner product.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    InvalidLoopError,
    InvalidRegionError,
    MeshError,
    ShapeError,
    UnsupportedDegreeError,
)

__all__ = [
    "GridInfo",
    "Loop",
    "Mesh2D",
    "Cochain",
    "rectangular_grid",
    "exterior_derivative",
    "hodge_star",
    "codifferential",
    "inner",
    "loop_sum",
    "stokes_check",
    "region_boundary",
    "loop_from_vertices",
    "outer_boundary_loop",
    "angular_increments",
    "save_mesh",
    "load_mesh",
    "dumps_mesh",
    "loads_mesh",
]

MESH_FORMAT_TAG = "csgauge-mesh 1"


@dataclass(frozen=True)
class GridInfo:
    """Structured-grid metadata kept alongside a mesh built by ``rectangular_grid``."""

    nx: int
    ny: int
    hx: float
    hy: float
    origin: tuple[float, float] = (0.0, 0.0)
    holes: tuple[tuple[int, int, int, int], ...] = ()


@dataclass(frozen=True, eq=False)
class Loop:
    """Closed edge path given as edge indices and traversal signs."""

    edges: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).ravel()
        signs = np.asarray(self.signs, dtype=np.int64).ravel()
        if edges.shape != signs.shape:
            raise InvalidLoopError("loop edges and signs differ in length")
        if not np.all(np.abs(signs) == 1):
            raise InvalidLoopError("loop signs must be +1 or -1")
        edges.flags.writeable = False
        signs.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "signs", signs)

    def __len__(self) -> int:
        return len(self.edges)


def _frozen(a, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """A 2D cell complex of axis-aligned quadrilaterals.

    Attributes:
        vertices: (V, 2) coordinates.
        edges: (E, 2) vertex indices, oriented tail -> head.
        face_edges: (F, 4) edge indices of each face boundary.
        face_signs: (F, 4) orientation of each face-boundary edge.
        hole_loops: closed edge loops around excluded regions.
        grid: structured-grid metadata, if the mesh came from a grid.
    """

    vertices: np.ndarray
    edges: np.ndarray
    face_edges: np.ndarray
    face_signs: np.ndarray
    hole_loops: tuple[Loop, ...] = ()
    grid: GridInfo | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, np.float64).reshape(-1, 2))
        object.__setattr__(self, "edges", _frozen(self.edges, np.int64).reshape(-1, 2))
        object.__setattr__(self, "face_edges", _frozen(self.face_edges, np.int64).reshape(-1, 4))
        object.__setattr__(self, "face_signs", _frozen(self.face_signs, np.int64).reshape(-1, 4))
        object.__setattr__(self, "hole_loops", tuple(self.hole_loops))
        self._validate()

    # -- sizes -----------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.face_edges)

    def n_cells(self, dim: int) -> int:
        return (self.n_vertices, self.n_edges, self.n_faces)[dim]

    # -- incidence -------------------------------------------------------
    @cached_property
    def d0(self) -> sp.csr_matrix:
        """Edge-vertex incidence (E x V), integer valued."""
        E = self.n_edges
        rows = np.repeat(np.arange(E), 2)
        cols = self.edges.ravel()
        vals = np.tile(np.array([-1, 1], dtype=np.int64), E)
        return sp.csr_matrix((vals, (rows, cols)), shape=(E, self.n_vertices))

    @cached_property
    def d1(self) -> sp.csr_matrix:
        """Face-edge incidence (F x E), integer valued."""
        F = self.n_faces
        rows = np.repeat(np.arange(F), 4)
        return sp.csr_matrix(
            (self.face_signs.ravel(), (rows, self.face_edges.ravel())),
            shape=(F, self.n_edges),
        )

    @cached_property
    def edge_face_count(self) -> np.ndarray:
        return np.bincount(self.face_edges.ravel(), minlength=self.n_edges)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        """Boolean mask of edges with exactly one adjacent face."""
        mask = self.edge_face_count == 1
        mask.flags.writeable = False
        return mask

    @cached_property
    def boundary_faces(self) -> np.ndarray:
        """Boolean mask of faces touching at least one boundary edge."""
        mask = self.boundary_edges[self.face_edges].any(axis=1)
        mask.flags.writeable = False
        return mask

    # -- geometry --------------------------------------------------------
    @cached_property
    def edge_vectors(self) -> np.ndarray:
        return self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        return np.hypot(self.edge_vectors[:, 0], self.edge_vectors[:, 1])

    @cached_property
    def is_horizontal(self) -> np.ndarray:
        v = self.edge_vectors
        return np.abs(v[:, 0]) > np.abs(v[:, 1])

    @cached_property
    def face_vertices(self) -> np.ndarray:
        """(F, 4) vertex indices in counterclockwise order, starting at the tail of edge 0."""
        starts = np.where(self.face_signs > 0, self.edges[self.face_edges, 0], self.edges[self.face_edges, 1])
        return starts

    @cached_property
    def face_extents(self) -> np.ndarray:
        """(F, 2) width and height of each face."""
        xy = self.vertices[self.face_vertices]
        return np.stack([np.ptp(xy[..., 0], axis=1), np.ptp(xy[..., 1], axis=1)], axis=1)

    @cached_property
    def face_areas(self) -> np.ndarray:
        return self.face_extents[:, 0] * self.face_extents[:, 1]

    @cached_property
    def vertex_centers(self) -> np.ndarray:
        return self.vertices

    @cached_property
    def edge_centers(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    @cached_property
    def face_centers(self) -> np.ndarray:
        return self.vertices[self.face_vertices].mean(axis=1)

    def centers(self, dim: int) -> np.ndarray:
        return (self.vertex_centers, self.edge_centers, self.face_centers)[dim]

    @cached_property
    def primal_volumes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (np.ones(self.n_vertices), self.edge_lengths, self.face_areas)

    @cached_property
    def dual_volumes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Measures of the dual cells: (vertex areas, edge lengths, face ones)."""
        w, h = self.face_extents[:, 0], self.face_extents[:, 1]
        quarter = np.repeat(0.25 * w * h, 4)
        vert = np.bincount(self.face_vertices.ravel(), weights=quarter, minlength=self.n_vertices)
        # dual edge runs between face centres, perpendicular to the primal edge
        horiz = self.is_horizontal[self.face_edges]
        half = np.where(horiz, 0.5 * h[:, None], 0.5 * w[:, None])
        edge = np.bincount(self.face_edges.ravel(), weights=half.ravel(), minlength=self.n_edges)
        return (vert, edge, np.ones(self.n_faces))

    @cached_property
    def star_ratios(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Diagonal Hodge star entries dual_volume / primal_volume per degree."""
        return tuple(d / p for d, p in zip(self.dual_volumes, self.primal_volumes))

    # -- validation ------------------------------------------------------
    def _validate(self):
        V, E = self.n_vertices, self.n_edges
        if E and (self.edges.min() < 0 or self.edges.max() >= V):
            raise MeshError("edge references a missing vertex")
        if np.any(self.edges[:, 0] == self.edges[:, 1]):
            raise MeshError("degenerate edge")
        if self.n_faces and (self.face_edges.min() < 0 or self.face_edges.max() >= E):
            raise MeshError("face references a missing edge")
        if not np.all(np.abs(self.face_signs) == 1):
            raise MeshError("face orientation signs must be +1 or -1")
        tails = np.where(self.face_signs > 0, self.edges[self.face_edges, 0], self.edges[self.face_edges, 1])
        heads = np.where(self.face_signs > 0, self.edges[self.face_edges, 1], self.edges[self.face_edges, 0])
        if not np.array_equal(heads, np.roll(tails, -1, axis=1)):
            raise MeshError("face edge loop is not closed")
        if self.n_faces:
            xy = self.vertices[tails]
            # shoelace: counterclockwise faces have positive signed area
            signed = 0.5 * np.sum(xy[:, :, 0] * np.roll(xy[:, :, 1], -1, axis=1)
                                  - np.roll(xy[:, :, 0], -1, axis=1) * xy[:, :, 1], axis=1)
            if np.any(signed <= 0):
                raise MeshError("face is not counterclockwise oriented")
        if self.edge_face_count.max(initial=0) > 2:
            raise MeshError("edge shared by more than two faces")
        if np.any(self.edge_face_count == 0):
            raise MeshError("edge not attached to any face")
        for dv in self.dual_volumes:
            if np.any(dv <= 0):
                raise MeshError("non-positive dual volume")
        seen: set[int] = set()
        for loop in self.hole_loops:
            verts = _walk_loop(self, loop)
            if not np.all(self.boundary_edges[loop.edges]):
                raise MeshError("hole loop must run along boundary edges")
            if seen.intersection(verts):
                raise MeshError("hole loops must be disjoint")
            seen.update(verts)


def _walk_loop(mesh: Mesh2D, loop: Loop) -> list[int]:
    """Check that a signed edge sequence is a closed, connected path; return its vertices."""
    if len(loop) == 0:
        raise InvalidLoopError("empty loop")
    if loop.edges.min() < 0 or loop.edges.max() >= mesh.n_edges:
        raise InvalidLoopError("loop references a missing edge")
    e = mesh.edges[loop.edges]
    tails = np.where(loop.signs > 0, e[:, 0], e[:, 1])
    heads = np.where(loop.signs > 0, e[:, 1], e[:, 0])
    if not np.array_equal(heads, np.roll(tails, -1)):
        raise InvalidLoopError("edge path is not closed and connected")
    return tails.tolist()


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def rectangular_grid(
    nx: int,
    ny: int,
    hx: float = 1.0,
    hy: float | None = None,
    origin: tuple[float, float] = (0.0, 0.0),
    holes: Iterable[tuple[int, int, int, int]] = (),
) -> Mesh2D:
    """Build an ``nx`` by ``ny`` grid of rectangles, optionally with rectangular holes.

    Each hole is given in face indices as ``(i0, i1, j0, j1)``, half-open, and
    removes faces ``i0 <= i < i1``, ``j0 <= j < j1``. Holes must lie strictly
    inside the grid and must not touch each other, so that each one is
    encircled by its own loop of boundary edges.
    """
    hy = hx if hy is None else hy
    if nx < 1 or ny < 1:
        raise MeshError(f"grid needs at least one face per direction, got {nx}x{ny}")
    if hx <= 0 or hy <= 0:
        raise MeshError("grid spacing must be positive")
    holes = tuple(tuple(int(v) for v in h) for h in holes)
    keep = np.ones((ny, nx), dtype=bool)
    for i0, i1, j0, j1 in holes:
        if not (0 < i0 < i1 < nx and 0 < j0 < j1 < ny):
            raise MeshError(f"hole {(i0, i1, j0, j1)} must lie strictly inside the {nx}x{ny} grid")
        if not keep[j0 - 1:j1 + 1, i0 - 1:i1 + 1].all():
            raise MeshError("holes must be separated by at least one face")
        keep[j0:j1, i0:i1] = False

    vused = np.zeros((ny + 1, nx + 1), dtype=bool)
    for dj in (0, 1):
        for di in (0, 1):
            vused[dj:ny + dj, di:nx + di] |= keep
    vid = np.full(vused.shape, -1, dtype=np.int64)
    vid[vused] = np.arange(vused.sum())
    jj, ii = np.nonzero(vused)
    verts = np.stack([origin[0] + ii * hx, origin[1] + jj * hy], axis=1)

    hused = np.zeros((ny + 1, nx), dtype=bool)
    hused[:-1] |= keep
    hused[1:] |= keep
    vedge_used = np.zeros((ny, nx + 1), dtype=bool)
    vedge_used[:, :-1] |= keep
    vedge_used[:, 1:] |= keep
    hid = np.full(hused.shape, -1, dtype=np.int64)
    hid[hused] = np.arange(hused.sum())
    nh = int(hused.sum())
    veid = np.full(vedge_used.shape, -1, dtype=np.int64)
    veid[vedge_used] = nh + np.arange(vedge_used.sum())

    hj, hi = np.nonzero(hused)
    vj, vi = np.nonzero(vedge_used)
    edges = np.concatenate([
        np.stack([vid[hj, hi], vid[hj, hi + 1]], axis=1),
        np.stack([vid[vj, vi], vid[vj + 1, vi]], axis=1),
    ])

    fj, fi = np.nonzero(keep)
    face_edges = np.stack([hid[fj, fi], veid[fj, fi + 1], hid[fj + 1, fi], veid[fj, fi]], axis=1)
    face_signs = np.tile(np.array([1, 1, -1, -1]), (len(fj), 1))

    loops = []
    for i0, i1, j0, j1 in holes:
        e = ([hid[j0, i] for i in range(i0, i1)]
             + [veid[j, i1] for j in range(j0, j1)]
             + [hid[j1, i] for i in range(i1 - 1, i0 - 1, -1)]
             + [veid[j, i0] for j in range(j1 - 1, j0 - 1, -1)])
        s = [1] * (i1 - i0) + [1] * (j1 - j0) + [-1] * (i1 - i0) + [-1] * (j1 - j0)
        loops.append(Loop(np.array(e), np.array(s)))

    info = GridInfo(nx, ny, float(hx), float(hy), (float(origin[0]), float(origin[1])), holes)
    mesh = Mesh2D(verts, edges, face_edges, face_signs, tuple(loops), info)
    object.__setattr__(mesh, "_face_ij", _frozen(np.stack([fi, fj], axis=1), np.int64))
    return mesh


def face_ij(mesh: Mesh2D) -> np.ndarray:
    """(F, 2) structured (i, j) index of each face; grid meshes only."""
    if mesh.grid is None:
        raise MeshError("mesh carries no grid metadata")
    cached = getattr(mesh, "_face_ij", None)
    if cached is None:
        g = mesh.grid
        rel = (mesh.face_centers - np.asarray(g.origin)) / np.array([g.hx, g.hy]) - 0.5
        cached = _frozen(np.rint(rel), np.int64)
        object.__setattr__(mesh, "_face_ij", cached)
    return cached


def loop_from_vertices(mesh: Mesh2D, path: Sequence[int]) -> Loop:
    """Turn a closed vertex sequence (first vertex not repeated) into a Loop."""
    lookup = {(int(a), int(b)): k for k, (a, b) in enumerate(mesh.edges)}
    edges, signs = [], []
    n = len(path)
    if n < 3:
        raise InvalidLoopError("a loop needs at least three vertices")
    for a, b in zip(path, list(path[1:]) + [path[0]]):
        if (a, b) in lookup:
            edges.append(lookup[(a, b)])
            signs.append(1)
        elif (b, a) in lookup:
            edges.append(lookup[(b, a)])
            signs.append(-1)
        else:
            raise InvalidLoopError(f"vertices {a} and {b} are not joined by an edge")
    return Loop(np.array(edges), np.array(signs))


def outer_boundary_loop(mesh: Mesh2D) -> Loop:
    """Counterclockwise loop around the outside of a grid mesh."""
    if mesh.grid is None:
        raise MeshError("outer boundary loop requires a grid mesh")
    g = mesh.grid
    ox, oy = g.origin
    idx = {}
    for k, (x, y) in enumerate(mesh.vertices):
        idx[(int(round((x - ox) / g.hx)), int(round((y - oy) / g.hy)))] = k
    path = ([idx[(i, 0)] for i in range(g.nx)]
            + [idx[(g.nx, j)] for j in range(g.ny)]
            + [idx[(i, g.ny)] for i in range(g.nx, 0, -1)]
            + [idx[(0, j)] for j in range(g.ny, 0, -1)])
    return loop_from_vertices(mesh, path)


# ---------------------------------------------------------------------------
# Cochains and operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Cochain:
    """Discrete k-form: one (real or complex) value per cell.

    A primal degree-k cochain lives on k-cells. A dual degree-p cochain lives
    on the dual p-cells, which are indexed by the primal (2 - p)-cells.
    """

    mesh: Mesh2D
    degree: int
    values: np.ndarray
    dual: bool = False

    def __post_init__(self):
        if self.degree not in (0, 1, 2):
            raise UnsupportedDegreeError(f"degree must be 0, 1 or 2, got {self.degree}")
        vals = np.array(self.values)
        if not np.iscomplexobj(vals):
            vals = vals.astype(np.float64)
        vals = vals.ravel()
        expected = self.mesh.n_cells(self.cell_dim)
        if vals.shape[0] != expected:
            raise ShapeError(f"degree-{self.degree} cochain needs {expected} values, got {vals.shape[0]}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def cell_dim(self) -> int:
        """Dimension of the primal cells indexing the values."""
        return 2 - self.degree if self.dual else self.degree

    @classmethod
    def zeros(cls, mesh: Mesh2D, degree: int, dual: bool = False, dtype=np.float64) -> "Cochain":
        dim = 2 - degree if dual else degree
        return cls(mesh, degree, np.zeros(mesh.n_cells(dim), dtype=dtype), dual)

    def _like(self, values) -> "Cochain":
        return Cochain(self.mesh, self.degree, values, self.dual)

    def _check(self, other: "Cochain"):
        if other.mesh is not self.mesh:
            raise ShapeError("cochains live on different meshes")
        if (other.degree, other.dual) != (self.degree, self.dual):
            raise ShapeError("cochains differ in degree or primal/dual kind")

    def __add__(self, other):
        if isinstance(other, Cochain):
            self._check(other)
            return self._like(self.values + other.values)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Cochain):
            self._check(other)
            return self._like(self.values - other.values)
        return NotImplemented

    def __mul__(self, k):
        if isinstance(k, Cochain):
            return NotImplemented
        return self._like(self.values * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self._like(self.values / k)

    def __neg__(self):
        return self._like(-self.values)

    def __repr__(self):
        kind = "dual" if self.dual else "primal"
        return f"Cochain({kind}, degree={self.degree}, n={self.values.size})"


def exterior_derivative(c: Cochain) -> Cochain:
    """Coboundary of a degree-0 or degree-1 cochain.

    On dual cochains the dual coboundary ``(-1)**p * d_{1-p}.T`` is used.
    """
    m = c.mesh
    if c.degree == 2:
        raise UnsupportedDegreeError("exterior derivative of a 2-cochain is not defined in 2D")
    if not c.dual:
        op = m.d0 if c.degree == 0 else m.d1
        return Cochain(m, c.degree + 1, op @ c.values)
    if c.degree == 0:
        return Cochain(m, 1, m.d1.T @ c.values, dual=True)
    return Cochain(m, 2, -(m.d0.T @ c.values), dual=True)


def hodge_star(c: Cochain) -> Cochain:
    """Diagonal Hodge star, primal k <-> dual (2 - k)."""
    m = c.mesh
    if not c.dual:
        k = c.degree
        return Cochain(m, 2 - k, c.values * m.star_ratios[k], dual=True)
    k = 2 - c.degree
    sign = -1.0 if k == 1 else 1.0
    return Cochain(m, k, sign * c.values / m.star_ratios[k])


def codifferential(c: Cochain) -> Cochain:
    """Adjoint of the exterior derivative: degree k -> k - 1 on primal cochains."""
    if c.dual:
        raise UnsupportedDegreeError("codifferential is defined on primal cochains only")
    if c.degree == 0:
        raise UnsupportedDegreeError("codifferential of a 0-cochain is not defined")
    return -hodge_star(exterior_derivative(hodge_star(c)))


def inner(a: Cochain, b: Cochain) -> complex | float:
    """Hodge inner product sum(conj(a) * b * star) of two primal cochains."""
    a._check(b)
    if a.dual:
        raise UnsupportedDegreeError("inner product is defined on primal cochains")
    w = a.mesh.star_ratios[a.degree]
    out = np.sum(np.conj(a.values) * b.values * w)
    return complex(out) if np.iscomplexobj(out) else float(out)


def loop_sum(c: Cochain, loop: Loop):
    """Orientation-signed sum of a 1-cochain along a closed edge path (holonomy)."""
    if c.degree != 1 or c.dual:
        raise UnsupportedDegreeError("loop_sum takes a primal 1-cochain")
    _walk_loop(c.mesh, loop)
    terms = loop.signs * c.values[loop.edges]
    if np.iscomplexobj(terms):
        return complex(math.fsum(terms.real), math.fsum(terms.imag))
    return math.fsum(terms)


def _region_faces(mesh: Mesh2D, faces) -> np.ndarray:
    f = np.unique(np.asarray(list(faces) if not isinstance(faces, np.ndarray) else faces, dtype=np.int64))
    if f.size == 0:
        raise InvalidRegionError("empty face region")
    if f.min() < 0 or f.max() >= mesh.n_faces:
        raise InvalidRegionError("region references a missing face")
    return f


def _check_simply_connected(mesh: Mesh2D, faces: np.ndarray):
    members = set(faces.tolist())
    owners: dict[int, list[int]] = {}
    for f in faces:
        for e in mesh.face_edges[f]:
            owners.setdefault(int(e), []).append(int(f))
    start = int(faces[0])
    seen = {start}
    queue = deque([start])
    while queue:
        f = queue.popleft()
        for e in mesh.face_edges[f]:
            for g in owners[int(e)]:
                if g not in seen:
                    seen.add(g)
                    queue.append(g)
    if seen != members:
        raise InvalidRegionError("face region is not connected")
    verts = set(mesh.edges[list(owners)].ravel().tolist())
    euler = len(verts) - len(owners) + len(members)
    if euler != 1:
        raise InvalidRegionError(f"face region is not simply connected (Euler characteristic {euler})")


def region_boundary(mesh: Mesh2D, faces) -> Loop:
    """Counterclockwise boundary loop of a simply connected face region."""
    f = _region_faces(mesh, faces)
    _check_simply_connected(mesh, f)
    chain = np.asarray(mesh.d1[f].sum(axis=0)).ravel()
    edges = np.nonzero(chain)[0]
    signs = chain[edges].astype(np.int64)
    e = mesh.edges[edges]
    tails = np.where(signs > 0, e[:, 0], e[:, 1])
    heads = np.where(signs > 0, e[:, 1], e[:, 0])
    by_tail = {int(t): k for k, t in enumerate(tails)}
    if len(by_tail) != len(tails):
        raise InvalidRegionError("region boundary touches itself at a vertex")
    order = [0]
    while len(order) < len(edges):
        nxt = by_tail[int(heads[order[-1]])]
        if nxt == 0:
            raise InvalidRegionError("region boundary splits into several loops")
        order.append(nxt)
    return Loop(edges[order], signs[order])


def stokes_check(c: Cochain, face_region) -> tuple:
    """Return (boundary loop sum, summed exterior derivative over the region).

    Both sides are accumulated with exact (fsum) summation of the same signed
    edge values, so they agree to the last bit.
    """
    if c.degree != 1 or c.dual:
        raise UnsupportedDegreeError("stokes_check takes a primal 1-cochain")
    m = c.mesh
    f = _region_faces(m, face_region)
    lhs = loop_sum(c, region_boundary(m, f))
    terms = (m.face_signs[f] * c.values[m.face_edges[f]]).ravel()
    if np.iscomplexobj(terms):
        rhs = complex(math.fsum(terms.real), math.fsum(terms.imag))
    else:
        rhs = math.fsum(terms)
    return lhs, rhs


def angular_increments(mesh: Mesh2D, winding: int = 1, center: tuple[float, float] | None = None) -> Cochain:
    """1-cochain of phase increments of ``winding * atan2(y - yc, x - xc)``.

    Every increment is taken on the principal branch, so the loop sum around
    any loop enclosing ``center`` once is ``2*pi*winding``. By default the
    centre is that of the mesh's first hole.
    """
    if center is None:
        if not mesh.hole_loops:
            raise MeshError("no centre given and the mesh has no hole")
        verts = mesh.edges[mesh.hole_loops[0].edges].ravel()
        center = tuple(mesh.vertices[np.unique(verts)].mean(axis=0))
    rel = mesh.vertices - np.asarray(center, dtype=float)
    theta = np.arctan2(rel[:, 1], rel[:, 0])
    dtheta = theta[mesh.edges[:, 1]] - theta[mesh.edges[:, 0]]
    dtheta = (dtheta + np.pi) % (2 * np.pi) - np.pi
    return Cochain(mesh, 1, winding * dtheta)


# ---------------------------------------------------------------------------
# Plain-text serialization
# ---------------------------------------------------------------------------

def dumps_mesh(mesh: Mesh2D) -> str:
    """Serialize a mesh; floats use the shortest round-trip representation."""
    out = [MESH_FORMAT_TAG]
    if mesh.grid is not None:
        g = mesh.grid
        out.append(f"grid {g.nx} {g.ny} {g.hx!r} {g.hy!r} {g.origin[0]!r} {g.origin[1]!r}")
        out.extend(f"gridhole {i0} {i1} {j0} {j1}" for i0, i1, j0, j1 in g.holes)
    out.extend(f"v {k} {float(x)!r} {float(y)!r}" for k, (x, y) in enumerate(mesh.vertices))
    out.extend(f"e {k} {a} {b}" for k, (a, b) in enumerate(mesh.edges))
    for k, (es, ss) in enumerate(zip(mesh.face_edges, mesh.face_signs)):
        out.append(f"f {k} " + " ".join(f"{e} {s}" for e, s in zip(es, ss)))
    for k, loop in enumerate(mesh.hole_loops):
        out.append(f"h {k} " + " ".join(f"{e} {s}" for e, s in zip(loop.edges, loop.signs)))
    return "\n".join(out) + "\n"


def loads_mesh(text: str) -> Mesh2D:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != MESH_FORMAT_TAG:
        raise MeshError(f"missing '{MESH_FORMAT_TAG}' header")
    grid = None
    holes = []
    records: dict[str, list] = {"v": [], "e": [], "f": [], "h": []}
    for lineno, ln in enumerate(lines[1:], start=2):
        tag, *rest = ln.split()
        try:
            if tag == "grid":
                nx, ny = int(rest[0]), int(rest[1])
                grid = (nx, ny, float(rest[2]), float(rest[3]), (float(rest[4]), float(rest[5])))
            elif tag == "gridhole":
                holes.append(tuple(int(v) for v in rest))
            elif tag in records:
                idx = int(rest[0])
                if idx != len(records[tag]):
                    raise MeshError(f"line {lineno}: {tag} records out of order")
                records[tag].append(rest[1:])
            else:
                raise MeshError(f"line {lineno}: unknown record '{tag}'")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, MeshError):
                raise
            raise MeshError(f"line {lineno}: malformed record: {exc}") from exc
    verts = np.array([[float(x), float(y)] for x, y in records["v"]]).reshape(-1, 2)
    edges = np.array([[int(a), int(b)] for a, b in records["e"]], dtype=np.int64).reshape(-1, 2)
    fe, fs = [], []
    for r in records["f"]:
        if len(r) != 8:
            raise MeshError("faces must list four (edge, sign) pairs")
        fe.append([int(v) for v in r[0::2]])
        fs.append([int(v) for v in r[1::2]])
    loops = tuple(Loop(np.array([int(v) for v in r[0::2]]), np.array([int(v) for v in r[1::2]]))
                  for r in records["h"])
    info = None
    if grid is not None:
        info = GridInfo(grid[0], grid[1], grid[2], grid[3], grid[4], tuple(holes))
    return Mesh2D(verts, edges, np.array(fe).reshape(-1, 4), np.array(fs).reshape(-1, 4), loops, info)


def save_mesh(mesh: Mesh2D, path) -> None:
    Path(path).write_text(dumps_mesh(mesh), encoding="utf-8")


def load_mesh(path) -> Mesh2D:
    return loads_mesh(Path(path).read_text(encoding="utf-8"))
