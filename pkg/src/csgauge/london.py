"""Static London/Meissner screening on a 2D mesh.

The unknown is the magnetic field density b = B / area on superconducting
faces. It satisfies the screened equation

    lam^2 * laplacian(b) = b

discretized with the DEC face Laplacian ``d1 W d1^T`` (W = inverse 1-form
Hodge star), which on a uniform grid is the 5-point stencil. The applied
field enters as a Dirichlet value on boundary edges (ghost-cell style, so
the boundary sits exactly on the mesh edge) and on non-superconducting
neighbour faces.

The screening current is ``j_e = -lam * codifferential(B)``; with this
choice ``d j_e = B / lam`` holds on every solved face to solver tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._io import write_csv, write_jsonl
from .dec import Cochain, Mesh2D
from .errors import InvalidMaterialError, MeshError, ShapeError, SolverError
from .fields import Constants

__all__ = [
    "Material",
    "MeissnerSolution",
    "solve_meissner",
    "surface_current",
    "evolve_current",
    "coulomb_potential",
    "write_solution",
]

BOUNDARY_MODES = ("all", "x", "y")


@dataclass(frozen=True, eq=False)
class Material:
    """Superconducting material: carrier density, London depth and face region.

    ``region`` is a boolean face mask; None means every face.
    """

    n: float
    lam: float
    region: np.ndarray | None = None
    constants: Constants = field(default_factory=Constants)

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise InvalidMaterialError(f"penetration depth must be positive, got {self.lam}")
        if not (self.n > 0 and math.isfinite(self.n)):
            raise InvalidMaterialError(f"carrier density must be positive, got {self.n}")
        expected = self.constants.penetration_depth(self.n)
        if not math.isclose(self.lam, expected, rel_tol=1e-12):
            raise InvalidMaterialError(f"lam={self.lam} is inconsistent with M_e/(n e^2)={expected}")
        if self.region is not None:
            r = np.asarray(self.region, dtype=bool).copy()
            r.flags.writeable = False
            object.__setattr__(self, "region", r)

    @classmethod
    def from_depth(cls, lam: float, region=None, constants: Constants = Constants()) -> "Material":
        if not lam > 0:
            raise InvalidMaterialError(f"penetration depth must be positive, got {lam}")
        return cls(constants.density_for_depth(lam), lam, region, constants)

    @classmethod
    def from_density(cls, n: float, region=None, constants: Constants = Constants()) -> "Material":
        if not n > 0:
            raise InvalidMaterialError(f"carrier density must be positive, got {n}")
        return cls(n, constants.penetration_depth(n), region, constants)

    def region_mask(self, mesh: Mesh2D) -> np.ndarray:
        if self.region is None:
            return np.ones(mesh.n_faces, dtype=bool)
        if self.region.shape != (mesh.n_faces,):
            raise ShapeError("material region mask does not match the mesh")
        return self.region


@dataclass(frozen=True, eq=False)
class MeissnerSolution:
    B: Cochain
    j_e: Cochain
    residual_norm: float
    iterations: int
    residual_history: tuple[float, ...]
    B_ext: float
    region: np.ndarray
    edge_weights: np.ndarray
    lam: float

    @property
    def mesh(self) -> Mesh2D:
        return self.B.mesh

    @property
    def b(self) -> np.ndarray:
        """Field density per face (flux / area)."""
        return self.B.values / self.mesh.face_areas


def _edge_weights(mesh: Mesh2D, boundary: str) -> np.ndarray:
    """Inverse 1-form star; zero on Neumann (translation-invariant) boundary edges."""
    if boundary not in BOUNDARY_MODES:
        raise ValueError(f"boundary must be one of {BOUNDARY_MODES}, got {boundary!r}")
    w = 1.0 / mesh.star_ratios[1]
    if boundary != "all":
        outer = mesh.boundary_edges.copy()
        for loop in mesh.hole_loops:
            outer[loop.edges] = False
        # 'x' strips keep Dirichlet data on the vertical (x = const) sides only
        neumann = outer & (mesh.is_horizontal if boundary == "x" else ~mesh.is_horizontal)
        w = np.where(neumann, 0.0, w)
    return w


def _check_thickness(mesh: Mesh2D, boundary: str):
    g = mesh.grid
    if g is None:
        return
    if boundary in ("all", "x") and g.nx < 2:
        raise MeshError("domain is thinner than 2 cells across x")
    if boundary in ("all", "y") and g.ny < 2:
        raise MeshError("domain is thinner than 2 cells across y")


def _screening_current(mesh: Mesh2D, b: np.ndarray, B_ext: float, lam: float, w: np.ndarray) -> np.ndarray:
    # d1^T b, with the applied field as ghost value across boundary edges
    grad = mesh.d1.T @ b
    bnd = mesh.boundary_edges
    owner = np.full(mesh.n_edges, -1)
    sign = np.zeros(mesh.n_edges)
    owner[mesh.face_edges.ravel()] = np.repeat(np.arange(mesh.n_faces), 4)
    sign[mesh.face_edges.ravel()] = mesh.face_signs.ravel()
    grad = np.where(bnd, sign * (b[np.maximum(owner, 0)] - B_ext), grad)
    return -lam * w * grad


def solve_meissner(
    mesh: Mesh2D,
    material: Material,
    B_ext: float,
    *,
    boundary: str = "all",
    tol: float = 1e-10,
    maxiter: int | None = None,
) -> MeissnerSolution:
    """Solve the screened field equation with applied field ``B_ext`` on the boundary.

    Args:
        boundary: ``"all"`` applies the field on every boundary edge;
            ``"x"`` (``"y"``) only on the sides normal to x (y), the other
            pair being treated as translation-invariant (zero normal
            derivative). Use ``"x"`` for 1D strips.
        tol: relative residual target of the conjugate-gradient solve.
        maxiter: iteration cap, default ``50 * sqrt(unknowns)``.

    Raises:
        SolverError: tolerance not reached within the cap; carries the
            residual history.
    """
    if not math.isfinite(B_ext):
        raise InvalidMaterialError("applied field must be finite")
    sc = material.region_mask(mesh)
    if not sc.any():
        raise InvalidMaterialError("material region is empty")
    _check_thickness(mesh, boundary)
    lam = material.lam
    w = _edge_weights(mesh, boundary)
    L = (mesh.d1 @ sp.diags(w) @ mesh.d1.T).tocsr()
    unknown = np.nonzero(sc)[0]
    fixed = np.nonzero(~sc)[0]
    area = mesh.face_areas

    S = (L[unknown][:, unknown] + sp.diags(area[unknown] / lam ** 2)).tocsr()
    dirichlet_edge = mesh.boundary_edges & (w > 0)
    edge_src = np.where(dirichlet_edge, w * B_ext, 0.0)
    rhs = np.abs(mesh.d1).astype(float) @ edge_src
    rhs = rhs[unknown]
    if fixed.size:
        rhs -= L[unknown][:, fixed] @ np.full(fixed.size, B_ext)

    n_unknown = unknown.size
    cap = maxiter if maxiter is not None else int(math.ceil(50 * math.sqrt(n_unknown)))
    bnorm = float(np.linalg.norm(rhs))
    history: list[float] = []
    if bnorm == 0.0:
        x = np.zeros(n_unknown)
        iterations = 0
        res = 0.0
        history.append(0.0)
    else:
        x0 = np.full(n_unknown, float(B_ext))
        history.append(float(np.linalg.norm(rhs - S @ x0)) / bnorm)
        counter = [0]

        def record(xk):
            counter[0] += 1
            history.append(float(np.linalg.norm(rhs - S @ xk)) / bnorm)

        x, info = spla.cg(S, rhs, x0=x0, rtol=tol, atol=0.0, maxiter=cap, callback=record)
        iterations = counter[0]
        res = float(np.linalg.norm(rhs - S @ x)) / bnorm
        if res > tol:
            raise SolverError(
                f"conjugate gradient stopped at relative residual {res:.3e} after {iterations} iterations "
                f"(target {tol:.1e}, cap {cap})",
                history,
            )

    b = np.full(mesh.n_faces, float(B_ext))
    b[unknown] = x
    j = _screening_current(mesh, b, float(B_ext), lam, w)
    return MeissnerSolution(
        B=Cochain(mesh, 2, b * area),
        j_e=Cochain(mesh, 1, j),
        residual_norm=res,
        iterations=iterations,
        residual_history=tuple(history),
        B_ext=float(B_ext),
        region=sc,
        edge_weights=w,
        lam=lam,
    )


def surface_current(solution: MeissnerSolution, material: Material) -> Cochain:
    """Screening current recomputed from the field via the curl constraint."""
    mesh = solution.mesh
    return Cochain(mesh, 1, _screening_current(mesh, solution.b, solution.B_ext, material.lam,
                                               solution.edge_weights))


def evolve_current(j0: Cochain, A_path: Sequence[Cochain], lam: float) -> Cochain:
    """Exact time integral of d j/dt = (1/lam) dA/dt along a potential history.

    Only the end points of ``A_path`` matter. A one-entry path leaves j0
    unchanged.
    """
    if not lam > 0:
        raise InvalidMaterialError("penetration depth must be positive")
    if len(A_path) < 1:
        raise ShapeError("potential path needs at least one entry")
    for A in A_path:
        if A.mesh is not j0.mesh or A.degree != j0.degree or A.dual != j0.dual:
            raise ShapeError("potential path and current live on different meshes or degrees")
    return j0 + (A_path[-1] - A_path[0]) / lam


def coulomb_potential(B: Cochain) -> Cochain:
    """A 1-cochain A with dA = B exactly and zero codifferential (Coulomb gauge).

    Built as A = W d1^T u with (d1 W d1^T) u = B; the boundary edges make the
    face Laplacian nonsingular.
    """
    if B.degree != 2 or B.dual:
        raise ShapeError("coulomb_potential takes a primal 2-cochain")
    mesh = B.mesh
    w = 1.0 / mesh.star_ratios[1]
    L = (mesh.d1 @ sp.diags(w) @ mesh.d1.T).tocsc()
    u = spla.spsolve(L, np.asarray(B.values, dtype=float))
    return Cochain(mesh, 1, w * (mesh.d1.T @ u))


def write_solution(solution: MeissnerSolution, directory, prefix: str = "meissner",
                   formats=("csv", "json")) -> list:
    """Write face field and edge current (csv) and convergence log (json); return the paths."""
    from pathlib import Path

    d = Path(directory)
    mesh = solution.mesh
    b = solution.b
    out = []
    if "csv" in formats:
        out.append(write_csv(
            d / f"{prefix}_faces.csv",
            ("face", "x", "y", "B", "flux", "superconducting"),
            ((k, x, y, b[k], solution.B.values[k], bool(solution.region[k]))
             for k, (x, y) in enumerate(mesh.face_centers)),
        ))
        out.append(write_csv(
            d / f"{prefix}_edges.csv",
            ("edge", "x", "y", "j"),
            ((k, x, y, solution.j_e.values[k]) for k, (x, y) in enumerate(mesh.edge_centers)),
        ))
    if "json" in formats:
        out.append(write_jsonl(
            d / f"{prefix}_convergence.jsonl",
            ({"iteration": i, "residual": r} for i, r in enumerate(solution.residual_history)),
        ))
    return out
