"""Ring geometries: flux quantization, the SQUID staircase and the Corbino bridge.

Fluxes are measured in units where the flux quantum is ``constants.flux_quantum``
(h/e unless overridden). The SQUID model works in reduced units of the flux
quantum throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._io import write_csv, write_json
from .dec import Cochain, loop_sum
from .errors import DegenerateFluxError, DomainError, TopologyError
from .fields import Constants

__all__ = [
    "RingGeometry",
    "FluxQuantization",
    "SquidCurve",
    "CorbinoReport",
    "round_half_away",
    "flux_quantize",
    "fluxoid_energy",
    "squid_staircase",
    "corbino_bridge",
    "magnetic_length",
    "write_squid_curve",
    "write_corbino_report",
]

AMBIGUOUS_DEVIATION = 0.25


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def magnetic_length(B: float, constants: Constants = Constants()) -> float:
    """sqrt(hbar / (e B))."""
    if not B > 0:
        raise DomainError(f"B must be positive, got {B}")
    return math.sqrt(constants.hbar / (constants.e * B))


@dataclass(frozen=True)
class RingGeometry:
    """Ring of radius R whose carriers occupy an edge strip of width l_B."""

    R: float
    l_B: float

    def __post_init__(self):
        if not (self.R > 0 and self.l_B > 0):
            raise DomainError("R and l_B must be positive")
        if not self.l_B < self.R:
            raise DomainError(f"edge strip width l_B={self.l_B} must be smaller than R={self.R}")

    @classmethod
    def from_field(cls, R: float, B: float, constants: Constants = Constants()) -> "RingGeometry":
        return cls(R, magnetic_length(B, constants))

    @property
    def S(self) -> float:
        return math.pi * self.R ** 2

    @property
    def S_prime(self) -> float:
        return 2.0 * math.pi * self.R * self.l_B


# ---------------------------------------------------------------------------
# Flux quantization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FluxQuantization:
    flux: float
    Z: int
    deviation: float

    @property
    def ambiguous(self) -> bool:
        return self.deviation > AMBIGUOUS_DEVIATION


def flux_quantize(A: Cochain, constants: Constants = Constants()) -> FluxQuantization:
    """Holonomy of A around the single hole, in flux quanta."""
    loops = A.mesh.hole_loops
    if len(loops) != 1:
        raise TopologyError(f"flux quantization needs exactly one hole, mesh has {len(loops)}")
    flux = loop_sum(A, loops[0])
    phi0 = constants.flux_quantum
    Z = round_half_away(flux / phi0)
    return FluxQuantization(flux, Z, abs(flux - Z * phi0) / phi0)


# ---------------------------------------------------------------------------
# SQUID staircase
# ---------------------------------------------------------------------------

def fluxoid_energy(phi, phi_ext, beta: float):
    """E(u; u_ext) = (u - u_ext)^2 / 2 + beta (1 - cos 2 pi u) / (2 pi)^2, in flux-quantum units."""
    phi = np.asarray(phi, dtype=float)
    return 0.5 * (phi - phi_ext) ** 2 + beta * (1.0 - np.cos(2 * np.pi * phi)) / (4 * np.pi ** 2)


def _denergy(u, ue, beta):
    return (u - ue) + beta * np.sin(2 * np.pi * u) / (2 * np.pi)


def _global_minimum(ue: float, beta: float, samples_per_quantum: int = 256) -> float:
    if beta == 0.0:
        return ue
    # E(u_ext) <= beta / (2 pi^2) bounds the minimiser to |u - u_ext| <= sqrt(beta) / pi
    half = math.sqrt(beta) / math.pi + 1.0 / samples_per_quantum
    n = int(math.ceil(2 * half * samples_per_quantum)) + 1
    grid = np.linspace(ue - half, ue + half, n)
    g = _denergy(grid, ue, beta)
    candidates = [float(u) for u, v in zip(grid, g) if v == 0.0]
    for k in np.nonzero((g[:-1] < 0) & (g[1:] > 0))[0]:
        candidates.append(brentq(_denergy, grid[k], grid[k + 1], args=(ue, beta), xtol=1e-15, rtol=1e-15))
    if not candidates:
        return float(grid[np.argmin(fluxoid_energy(grid, ue, beta))])
    candidates.sort()
    energies = fluxoid_energy(np.array(candidates), ue, beta)
    best = energies.min()
    scale = max(1.0, abs(best))
    for u, en in zip(candidates, energies):
        if en <= best + 1e-13 * scale:
            return u
    return candidates[int(np.argmin(energies))]


@dataclass(frozen=True, eq=False)
class SquidCurve:
    phi_ext: np.ndarray
    phi_int: np.ndarray
    screening: float
    phi0: float = 1.0

    @property
    def plateau_index(self) -> np.ndarray:
        return np.array([round_half_away(v / self.phi0) for v in self.phi_int], dtype=np.int64)


def squid_staircase(phi_ext, beta: float, phi0: float = 1.0) -> SquidCurve:
    """Internal flux minimizing the fluxoid energy for each external flux.

    ``phi_ext`` is in the same units as ``phi0``. Ties between degenerate
    minima go to the smaller internal flux.
    """
    if not (beta >= 0 and math.isfinite(beta)):
        raise DomainError(f"screening parameter must be >= 0, got {beta}")
    if not phi0 > 0:
        raise DomainError("flux quantum must be positive")
    ext = np.asarray(phi_ext, dtype=float).ravel()
    if ext.size and np.any(np.diff(ext) < 0):
        raise DomainError("external flux grid must be sorted ascending")
    if not np.all(np.isfinite(ext)):
        raise DomainError("external flux grid must be finite")
    internal = np.array([_global_minimum(u, float(beta)) for u in ext / phi0]) * phi0
    return SquidCurve(ext, internal, float(beta), float(phi0))


def write_squid_curve(curve: SquidCurve, path):
    return write_csv(path, ("phi_ext", "phi_int", "plateau"),
              zip(curve.phi_ext, curve.phi_int, curve.plateau_index))


# ---------------------------------------------------------------------------
# Corbino bridge
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorbinoReport:
    R: float
    l_B: float
    B_squid: float
    N: int
    S: float
    S_prime: float
    ratio: float
    B_qhe: float
    Z: int
    flux_deviation: float
    nu: float
    density: float
    nu_quantum_limit: float
    residual: float
    flux_quantum: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def corbino_bridge(geometry: RingGeometry, B_squid: float, N: int,
                   constants: Constants = Constants()) -> CorbinoReport:
    """Relate ring flux quantization at B_squid to Hall quantization in the edge strip.

    The carriers N sit in the strip of area S' = 2 pi R l_B; equal fluxes
    B_qhe S' = B_squid S give B_qhe = B_squid R / (2 l_B) and nu = N / Z.
    The same nu is recomputed as n h / (e B_qhe) with n = N / S'.
    """
    if not B_squid > 0:
        raise DomainError(f"B_squid must be positive, got {B_squid}")
    if int(N) != N or N < 1:
        raise DomainError(f"carrier number must be a positive integer, got {N}")
    N = int(N)
    S, Sp = geometry.S, geometry.S_prime
    ratio = geometry.R / (2.0 * geometry.l_B)
    B_qhe = B_squid * ratio
    phi0 = constants.flux_quantum
    q = B_squid * S / phi0
    Z = round_half_away(q)
    if Z == 0:
        raise DegenerateFluxError(f"ring flux {q:.3g} flux quanta rounds to Z = 0")
    nu = N / Z
    density = N / Sp
    nu_ql = density * constants.h / (constants.e * B_qhe)
    return CorbinoReport(
        R=geometry.R, l_B=geometry.l_B, B_squid=float(B_squid), N=N, S=S, S_prime=Sp,
        ratio=ratio, B_qhe=B_qhe, Z=Z, flux_deviation=abs(q - Z), nu=nu, density=density,
        nu_quantum_limit=nu_ql, residual=abs(nu - nu_ql), flux_quantum=phi0,
    )


def write_corbino_report(report: CorbinoReport, path):
    return write_json(path, report.to_dict())
