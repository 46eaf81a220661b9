"""Wavefunction currents and the Chern-Simons layer.

Natural units throughout: hbar = mu0 = 1, so the flux quantum h/e is 2*pi/e.
All 1-cochains are edge-integrated quantities (value = line integral along
the oriented edge); face 2-cochains are face-integrated fluxes.

The Chern-Simons vector is ``C = lam * j_e - sigma_H * A``. Its spatial part
is a 1-cochain, its time component a 0-cochain built from the scalar
potential ``A0`` and charge density ``j0`` (both zero in static set-ups).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._io import write_csv
from .dec import Cochain, Mesh2D, exterior_derivative, hodge_star
from .errors import InsufficientStackError, MeshError, ShapeError, DomainError

__all__ = [
    "Constants",
    "FieldState",
    "SpacetimeStack",
    "CSVector",
    "CSResidual",
    "OhmRelation",
    "electric_current",
    "em_current",
    "pure_gauge_potential",
    "wavefunction_from_increments",
    "phase_increments",
    "cs_vector",
    "cs_action",
    "cs_residual",
    "ohm_relation",
    "write_state_csv",
]


@dataclass(frozen=True)
class Constants:
    """Physical constants in natural units (hbar = mu0 = 1).

    ``flux_quantum`` defaults to h/e = 2*pi/e. It can be overridden, e.g. to
    the Cooper-pair value pi/e, without touching any other relation.
    """

    e: float = 1.0
    M_e: float = 1.0
    flux_quantum_override: float | None = None

    def __post_init__(self):
        if not (self.e > 0 and math.isfinite(self.e)):
            raise DomainError(f"charge e must be positive, got {self.e}")
        if not (self.M_e > 0 and math.isfinite(self.M_e)):
            raise DomainError(f"mass M_e must be positive, got {self.M_e}")
        if self.flux_quantum_override is not None and not self.flux_quantum_override > 0:
            raise DomainError("flux quantum override must be positive")

    @property
    def hbar(self) -> float:
        return 1.0

    @property
    def mu0(self) -> float:
        return 1.0

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.hbar

    @property
    def flux_quantum(self) -> float:
        if self.flux_quantum_override is not None:
            return float(self.flux_quantum_override)
        return self.h / self.e

    def penetration_depth(self, n: float) -> float:
        """London depth M_e / (n e^2)."""
        if not n > 0:
            raise DomainError(f"carrier density must be positive, got {n}")
        return self.M_e / (n * self.e ** 2)

    def density_for_depth(self, lam: float) -> float:
        if not lam > 0:
            raise DomainError(f"penetration depth must be positive, got {lam}")
        return self.M_e / (lam * self.e ** 2)


# ---------------------------------------------------------------------------
# Currents
# ---------------------------------------------------------------------------

def _require(c: Cochain, degree: int, name: str):
    if c.dual or c.degree != degree:
        raise ShapeError(f"{name} must be a primal {degree}-cochain")


def _edge_density(psi: Cochain) -> np.ndarray:
    rho2 = np.abs(psi.values) ** 2
    e = psi.mesh.edges
    return 0.5 * (rho2[e[:, 0]] + rho2[e[:, 1]])


def phase_increments(psi: Cochain) -> Cochain:
    """Principal-branch phase difference arg(conj(psi_tail) * psi_head) per edge."""
    _require(psi, 0, "psi")
    e = psi.mesh.edges
    v = np.asarray(psi.values, dtype=complex)
    return Cochain(psi.mesh, 1, np.angle(np.conj(v[e[:, 0]]) * v[e[:, 1]]))


def electric_current(psi: Cochain, constants: Constants = Constants()) -> Cochain:
    """Edge-integrated electric current (e/M_e) Im(psi* d psi).

    Discretized as the midpoint density times the principal-branch phase
    increment, so psi = exp(i k x) on a unit-spacing line gives exactly
    (e/M_e) * k per edge as long as |k| < pi.
    """
    _require(psi, 0, "psi")
    inc = phase_increments(psi).values
    return Cochain(psi.mesh, 1, (constants.e / constants.M_e) * _edge_density(psi) * inc)


def em_current(psi: Cochain, A: Cochain, constants: Constants = Constants()) -> Cochain:
    """Electromagnetic current j_e - (e^2/M_e) |psi|^2 A, density averaged onto edges."""
    _require(A, 1, "A")
    if A.mesh is not psi.mesh:
        raise ShapeError("psi and A live on different meshes")
    j = electric_current(psi, constants)
    coupling = (constants.e ** 2 / constants.M_e) * _edge_density(psi)
    return Cochain(psi.mesh, 1, j.values - coupling * A.values)


def pure_gauge_potential(phase_increments: Cochain, constants: Constants = Constants()) -> Cochain:
    """A = (phase increments) / e. Loop sums around holes are 2*pi*winding/e."""
    _require(phase_increments, 1, "phase increments")
    return Cochain(phase_increments.mesh, 1, np.asarray(phase_increments.values, dtype=float) / constants.e)


def wavefunction_from_increments(rho, increments: Cochain, root: int = 0, phase0: float = 0.0,
                                 closure_tol: float = 1e-9) -> Cochain:
    """Integrate phase increments along a spanning tree into psi = rho * exp(i phi).

    The increments must be closed modulo 2*pi on every face, otherwise no
    single-valued wavefunction exists and MeshError is raised. Winding around
    holes is allowed; it is absorbed by the periodicity of exp.
    """
    _require(increments, 1, "increments")
    mesh = increments.mesh
    inc = np.asarray(increments.values, dtype=float)
    curl = mesh.d1 @ inc
    wrapped = curl - 2 * np.pi * np.rint(curl / (2 * np.pi))
    if np.any(np.abs(wrapped) > closure_tol):
        raise MeshError("phase increments are not closed mod 2*pi on every face")
    adj: list[list[tuple[int, int, float]]] = [[] for _ in range(mesh.n_vertices)]
    for k, (a, b) in enumerate(mesh.edges):
        adj[a].append((b, k, inc[k]))
        adj[b].append((a, k, -inc[k]))
    phi = np.full(mesh.n_vertices, np.nan)
    phi[root] = phase0
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w, _, d in adj[v]:
            if math.isnan(phi[w]):
                phi[w] = phi[v] + d
                queue.append(w)
    if np.isnan(phi).any():
        raise MeshError("mesh is not connected")
    rho = np.broadcast_to(np.asarray(rho, dtype=float), phi.shape)
    return Cochain(mesh, 0, rho * np.exp(1j * phi))


# ---------------------------------------------------------------------------
# Field states
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FieldState:
    """Fields on one time slice.

    ``psi`` may be None for states produced by the London solver, where the
    current is known directly; the condensate density is then M_e/(lam e^2)
    and ``J_em = j_e - A / lam``.
    """

    A: Cochain
    j_e: Cochain
    J_em: Cochain
    sigma_H: float
    lam: float
    constants: Constants = field(default_factory=Constants)
    psi: Cochain | None = None
    A0: Cochain | None = None
    j0: Cochain | None = None

    def __post_init__(self):
        for name in ("A", "j_e", "J_em"):
            _require(getattr(self, name), 1, name)
        mesh = self.A.mesh
        if self.j_e.mesh is not mesh or self.J_em.mesh is not mesh:
            raise ShapeError("state fields live on different meshes")
        if self.sigma_H < 0:
            raise DomainError("sigma_H must be non-negative")
        if not self.lam > 0:
            raise DomainError("penetration depth must be positive")
        for name in ("A0", "j0"):
            c = getattr(self, name)
            if c is None:
                object.__setattr__(self, name, Cochain.zeros(mesh, 0))
            else:
                _require(c, 0, name)
        if self.psi is not None:
            _require(self.psi, 0, "psi")

    @property
    def mesh(self) -> Mesh2D:
        return self.A.mesh

    @classmethod
    def from_wavefunction(cls, psi: Cochain, A: Cochain, sigma_H: float, lam: float,
                          constants: Constants = Constants(), A0=None, j0=None) -> "FieldState":
        return cls(A, electric_current(psi, constants), em_current(psi, A, constants),
                   sigma_H, lam, constants, psi, A0, j0)

    @classmethod
    def from_currents(cls, j_e: Cochain, A: Cochain, sigma_H: float, lam: float,
                      constants: Constants = Constants(), A0=None, j0=None) -> "FieldState":
        return cls(A, j_e, j_e - A / lam, sigma_H, lam, constants, None, A0, j0)

    def derived_error(self) -> float:
        """Max deviation of stored j_e, J_em from values recomputed from psi and A."""
        if self.psi is None:
            ref_j = self.j_e
            ref_J = self.j_e - self.A / self.lam
        else:
            ref_j = electric_current(self.psi, self.constants)
            ref_J = em_current(self.psi, self.A, self.constants)
        return float(max(np.max(np.abs(ref_j.values - self.j_e.values), initial=0.0),
                         np.max(np.abs(ref_J.values - self.J_em.values), initial=0.0)))


@dataclass(frozen=True, eq=False)
class SpacetimeStack:
    slices: tuple[FieldState, ...]
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))
        if not self.dt > 0:
            raise DomainError("time step must be positive")
        if self.slices:
            mesh = self.slices[0].mesh
            if any(s.mesh is not mesh for s in self.slices):
                raise ShapeError("all slices must share one mesh")

    @property
    def mesh(self) -> Mesh2D:
        return self.slices[0].mesh

    def _need_pairs(self):
        if len(self.slices) < 2:
            raise InsufficientStackError(f"need at least 2 slices, got {len(self.slices)}")


@dataclass(frozen=True, eq=False)
class CSVector:
    spatial: Cochain
    temporal: Cochain


def cs_vector(state: FieldState) -> CSVector:
    lam, s = state.lam, state.sigma_H
    return CSVector(lam * state.j_e - s * state.A, lam * state.j0 - s * state.A0)


# ---------------------------------------------------------------------------
# Chern-Simons action and equations of motion
# ---------------------------------------------------------------------------

def _require_grid_faces(mesh: Mesh2D):
    if not np.array_equal(mesh.face_signs, np.tile([1, 1, -1, -1], (mesh.n_faces, 1))) \
            or not np.all(mesh.is_horizontal[mesh.face_edges[:, [0, 2]]]):
        raise MeshError("face-centred evaluation needs faces ordered (bottom, right, top, left)")


def _face_components(mesh: Mesh2D, C: CSVector):
    """Face-centred C_x, C_y, C_t and the spatial derivatives needed by the action."""
    fe = mesh.face_edges
    w, h = mesh.face_extents[:, 0], mesh.face_extents[:, 1]
    cs = C.spatial.values
    ct = C.temporal.values
    cx = (cs[fe[:, 0]] + cs[fe[:, 2]]) / (2 * w)
    cy = (cs[fe[:, 1]] + cs[fe[:, 3]]) / (2 * h)
    curl = (mesh.d1 @ cs) / (w * h)
    ctf = ct[mesh.face_vertices].mean(axis=1)
    dct = mesh.d0 @ ct
    dx_ct = (dct[fe[:, 0]] + dct[fe[:, 2]]) / (2 * w)
    dy_ct = (dct[fe[:, 1]] + dct[fe[:, 3]]) / (2 * h)
    return cx, cy, ctf, curl, dx_ct, dy_ct


def cs_action(stack: SpacetimeStack) -> float:
    """Discrete integral of eps^{abc} C_a d_b C_c over the spacetime slab.

    Midpoint rule in time between consecutive slices, face-centred in space.
    Overall normalization is 1.
    """
    stack._need_pairs()
    mesh = stack.mesh
    _require_grid_faces(mesh)
    area = mesh.face_areas
    total = []
    comps = [_face_components(mesh, cs_vector(s)) for s in stack.slices]
    for a, b in zip(comps[:-1], comps[1:]):
        cx, cy, ct, curl, dx_ct, dy_ct = (0.5 * (u + v) for u, v in zip(a, b))
        dt_cx = (b[0] - a[0]) / stack.dt
        dt_cy = (b[1] - a[1]) / stack.dt
        dens = cx * (dy_ct - dt_cy) + cy * (dt_cx - dx_ct) + ct * curl
        total.append(stack.dt * np.sum(area * dens))
    return float(math.fsum(total))


@dataclass(frozen=True, eq=False)
class CSResidual:
    """Discrete curl of C.

    ``spatial[n]`` is the face 2-cochain of eps_mn d_m C_n on slice n (the
    constraint). ``mixed[n]`` is the edge 1-cochain d_t C_m - d_m C_t between
    slices n and n+1 (the equation of motion for C_m).
    """

    spatial: tuple[Cochain, ...]
    mixed: tuple[Cochain, ...]

    def constraint_max(self, faces=None) -> float:
        vals = [np.abs(c.values if faces is None else c.values[faces]) for c in self.spatial]
        return float(max(np.max(v, initial=0.0) for v in vals))

    def motion_max(self) -> float:
        return float(max(np.max(np.abs(c.values), initial=0.0) for c in self.mixed))

    def max_abs(self) -> float:
        return max(self.constraint_max(), self.motion_max())


def cs_residual(stack: SpacetimeStack) -> CSResidual:
    stack._need_pairs()
    vecs = [cs_vector(s) for s in stack.slices]
    spatial = tuple(exterior_derivative(v.spatial) for v in vecs)
    mixed = []
    for a, b in zip(vecs[:-1], vecs[1:]):
        ct_mid = 0.5 * (a.temporal + b.temporal)
        mixed.append((b.spatial - a.spatial) / stack.dt - exterior_derivative(ct_mid))
    return CSResidual(spatial, tuple(mixed))


@dataclass(frozen=True, eq=False)
class OhmRelation:
    """Both sides of the static Hall-Ohm relation as face densities.

    In a static configuration the spatial components of the relation vanish
    identically; what remains is the time component
    lam * curl(j_e) = sigma_H * curl(A), evaluated per face.
    """

    lhs: Cochain
    rhs: Cochain

    def max_abs_diff(self, faces=None) -> float:
        d = self.lhs.values - self.rhs.values
        if faces is not None:
            d = d[faces]
        return float(np.max(np.abs(d), initial=0.0))


def ohm_relation(state: FieldState, B: Cochain | None = None) -> OhmRelation:
    """Return (lam * star d j_e, sigma_H * star B) with B = dA unless given."""
    if B is None:
        B = exterior_derivative(state.A)
    else:
        _require(B, 2, "B")
        if B.mesh is not state.mesh:
            raise ShapeError("B lives on a different mesh")
    lhs = hodge_star(state.lam * exterior_derivative(state.j_e))
    rhs = hodge_star(state.sigma_H * B)
    return OhmRelation(lhs, rhs)


# ---------------------------------------------------------------------------
# Snapshot export
# ---------------------------------------------------------------------------

STATE_CSV_COLUMNS = ("cell_kind", "index", "x", "y", "psi_re", "psi_im", "A0", "j0", "C_t",
                     "A", "j_e", "J_em", "C", "B", "curl_j_e")


def write_state_csv(state: FieldState, path):
    """One row per vertex, edge and face; columns in STATE_CSV_COLUMNS order.

    Vertex rows carry psi and the time components, edge rows the 1-cochains,
    face rows the fluxes dA and d j_e. Cells without a value are left empty.
    """
    mesh = state.mesh
    C = cs_vector(state)
    B = exterior_derivative(state.A).values
    dj = exterior_derivative(state.j_e).values
    psi = state.psi.values if state.psi is not None else None

    def rows():
        for k, (x, y) in enumerate(mesh.vertices):
            pr = pi = None
            if psi is not None:
                pr, pi = complex(psi[k]).real, complex(psi[k]).imag
            yield ("vertex", k, x, y, pr, pi, state.A0.values[k], state.j0.values[k], C.temporal.values[k],
                   None, None, None, None, None, None)
        for k, (x, y) in enumerate(mesh.edge_centers):
            yield ("edge", k, x, y, None, None, None, None, None,
                   state.A.values[k], state.j_e.values[k], state.J_em.values[k], C.spatial.values[k], None, None)
        for k, (x, y) in enumerate(mesh.face_centers):
            yield ("face", k, x, y, None, None, None, None, None, None, None, None, None, B[k], dj[k])

    return write_csv(path, STATE_CSV_COLUMNS, rows())
