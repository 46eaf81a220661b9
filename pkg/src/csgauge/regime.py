"""Drude/Hall conductivity algebra and regime classification.

The Drude Hall conductivity is sigma_H = sigma_0 x / (1 + x^2) with
x = omega_c tau, omega_c = e B / M_e. In the quantum limit sigma_H = n e / B
and sigma_H = nu e^2 / h, i.e. nu = n h / (e B).
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

from ._io import write_csv, write_json
from .errors import ConfigError, DomainError
from .fields import Constants

__all__ = [
    "LABELS",
    "Thresholds",
    "RegimePoint",
    "PhaseDiagram",
    "SweepSpec",
    "UnitHall",
    "hall_conductivity",
    "sigma0_for_unit_hall",
    "quantum_limit_sigmaH",
    "density_for_filling",
    "omega_c_tau",
    "nearest_fraction",
    "uncertainty_energy",
    "regime_point",
    "classify",
    "sweep",
    "write_phase_diagram",
]

LABELS = ("classical-Hall", "crossover", "IQHE", "FQHE", "superconducting")


def _check_nonneg(name: str, value: float):
    if not (value >= 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be a finite non-negative number, got {value}")


def hall_conductivity(sigma_0: float, omega_c_tau: float) -> float:
    _check_nonneg("sigma_0", sigma_0)
    _check_nonneg("omega_c_tau", omega_c_tau)
    x = float(omega_c_tau)
    return float(sigma_0) * x / (1.0 + x * x)


class UnitHall(NamedTuple):
    sigma_0: float
    asymptote: float
    regime: str


def sigma0_for_unit_hall(omega_c_tau: float) -> UnitHall:
    """Electric conductivity giving sigma_H = 1 at this omega_c tau.

    The exact inversion is (1 + x^2) / x, evaluated as x + 1/x. ``asymptote``
    is x on the quantum side (x > 1) and 1/x on the classical side (x < 1).
    """
    x = float(omega_c_tau)
    if not (x > 0 and math.isfinite(x)):
        raise DomainError(f"omega_c_tau must be positive, got {omega_c_tau}")
    sigma_0 = x + 1.0 / x
    if x > 1:
        return UnitHall(sigma_0, x, "quantum")
    if x < 1:
        return UnitHall(sigma_0, 1.0 / x, "classical")
    return UnitHall(sigma_0, 1.0, "symmetric")


def quantum_limit_sigmaH(n: float, B: float, constants: Constants = Constants()) -> tuple[float, float]:
    """Return (sigma_H = n e / B, filling factor nu = n h / (e B))."""
    if not B > 0:
        raise DomainError(f"B must be positive, got {B}")
    _check_nonneg("n", n)
    sigma_H = n * constants.e / B
    nu = n * constants.h / (constants.e * B)
    return sigma_H, nu


def density_for_filling(nu: float, B: float, constants: Constants = Constants()) -> float:
    if not B > 0:
        raise DomainError(f"B must be positive, got {B}")
    return nu * constants.e * B / constants.h


def omega_c_tau(B: float, tau: float, constants: Constants = Constants()) -> float:
    return constants.e * B * tau / constants.M_e


def uncertainty_energy(B: float, constants: Constants = Constants()) -> float:
    """Landau-scale energy uncertainty e hbar B / (2 M_e)."""
    _check_nonneg("B", B)
    return constants.e * constants.hbar * B / (2.0 * constants.M_e)


def nearest_fraction(x: float, q_max: int) -> Fraction:
    """Closest rational with denominator <= q_max (continued-fraction convergents)."""
    return Fraction(x).limit_denominator(q_max)


@dataclass(frozen=True)
class Thresholds:
    """Cutoffs used by the classifier.

    ``low``/``high`` bound omega_c tau for the classical and quantum sides,
    ``nu_tol`` is the absolute tolerance for matching nu to a rational,
    ``q_max`` the largest denominator accepted as a fractional plateau,
    ``sigma_tol`` the relative tolerance on sigma_H = 1, and ``B_c`` an
    optional field separating superconducting from QHE preparation.
    """

    low: float = 0.1
    high: float = 10.0
    nu_tol: float = 1e-3
    q_max: int = 9
    sigma_tol: float = 1e-6
    B_c: float | None = None

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not (self.low > 0 and math.isfinite(self.low)):
            out.append("low must be positive")
        if not (self.high >= self.low and math.isfinite(self.high)):
            out.append("high must be >= low")
        if not 0 < self.nu_tol < 0.5:
            out.append("nu_tol must lie in (0, 0.5)")
        if int(self.q_max) != self.q_max or self.q_max < 2:
            out.append("q_max must be an integer >= 2")
        if not 0 < self.sigma_tol < 1:
            out.append("sigma_tol must lie in (0, 1)")
        if self.B_c is not None and not self.B_c > 0:
            out.append("B_c must be positive")
        return out


@dataclass(frozen=True)
class RegimePoint:
    B: float
    n: float
    tau: float
    omega_c_tau: float
    sigma_0: float
    sigma_H: float
    nu: float
    label: str
    nu_fraction: str = ""
    preparation: str = ""

    FIELDS = ("B", "n", "tau", "omega_c_tau", "sigma_0", "sigma_H", "nu", "nu_fraction", "label", "preparation")

    def row(self) -> tuple:
        return tuple(getattr(self, f) for f in self.FIELDS)


def _label(x: float, sigma_H: float, nu: float, th: Thresholds) -> tuple[str, str]:
    if x < th.low:
        return "classical-Hall", ""
    if x <= th.high:
        return "crossover", ""
    k = round(nu)
    frac = nearest_fraction(nu, th.q_max)
    if k >= 1 and abs(nu - k) <= th.nu_tol:
        base, tag = "IQHE", str(k)
    elif frac > 0 and frac.denominator > 1 and abs(nu - float(frac)) <= th.nu_tol:
        base, tag = "FQHE", f"{frac.numerator}/{frac.denominator}"
    else:
        return "crossover", ""
    if abs(sigma_H - 1.0) <= th.sigma_tol:
        return "superconducting", tag
    return base, tag


def regime_point(B: float, n: float, tau: float, sigma_0: float,
                 thresholds: Thresholds = Thresholds(), constants: Constants = Constants(),
                 x: float | None = None) -> RegimePoint:
    """Evaluate the conductivity algebra and label one (B, n, tau, sigma_0) sample.

    ``x`` may pass omega_c tau directly when it was the swept quantity, to
    avoid a round trip through B.
    """
    if not B > 0:
        raise DomainError(f"B must be positive, got {B}")
    _check_nonneg("tau", tau)
    if x is None:
        x = omega_c_tau(B, tau, constants)
    sigma_H = hall_conductivity(sigma_0, x)
    _, nu = quantum_limit_sigmaH(n, B, constants)
    label, tag = _label(x, sigma_H, nu, thresholds)
    prep = ""
    if thresholds.B_c is not None:
        prep = "superconducting" if B < thresholds.B_c else "qhe"
    return RegimePoint(float(B), float(n), float(tau), float(x), float(sigma_0), sigma_H, nu, label, tag, prep)


def classify(B: float, n: float, tau: float, sigma_0: float,
             thresholds: Thresholds = Thresholds(), constants: Constants = Constants()) -> str:
    return regime_point(B, n, tau, sigma_0, thresholds, constants).label


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

SWEEP_NAMES = ("B", "omega_c_tau", "n", "nu", "tau", "sigma_0", "sigma_H")
_EXCLUSIVE = (("B", "omega_c_tau"), ("n", "nu"), ("sigma_0", "sigma_H"))


@dataclass(frozen=True)
class SweepSpec:
    """Grid axes plus fixed values.

    Each point needs B (or omega_c_tau), n (or nu), tau and sigma_0 (or
    sigma_H). Missing ones default to tau = 1, n = 1, sigma_0 = 1; B or
    omega_c_tau must be given.
    """

    axes: tuple[tuple[str, tuple[float, ...]], ...]
    fixed: dict = field(default_factory=dict)
    thresholds: Thresholds = field(default_factory=Thresholds)
    constants: Constants = field(default_factory=Constants)

    def __post_init__(self):
        axes = tuple((str(k), tuple(float(v) for v in vals)) for k, vals in self.axes)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "fixed", {str(k): float(v) for k, v in dict(self.fixed).items()})
        problems = self.problems()
        if problems:
            raise ConfigError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not self.axes:
            out.append("sweep needs at least one axis")
        names = [k for k, _ in self.axes] + list(self.fixed)
        for k in names:
            if k not in SWEEP_NAMES:
                out.append(f"unknown sweep quantity {k!r}; accepted: {', '.join(SWEEP_NAMES)}")
        dup = [k for k, c in Counter(names).items() if c > 1]
        if dup:
            out.append(f"quantities given more than once: {', '.join(sorted(dup))}")
        for a, b in _EXCLUSIVE:
            if a in names and b in names:
                out.append(f"give either {a} or {b}, not both")
        if "B" not in names and "omega_c_tau" not in names:
            out.append("one of B or omega_c_tau is required")
        for k, vals in self.axes:
            if not vals:
                out.append(f"axis {k!r} is empty")
            if any(not math.isfinite(v) for v in vals):
                out.append(f"axis {k!r} has non-finite values")
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(v) for _, v in self.axes)


@dataclass(frozen=True)
class PhaseDiagram:
    axes: tuple[tuple[str, tuple[float, ...]], ...]
    points: tuple[RegimePoint, ...]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(v) for _, v in self.axes)

    def __post_init__(self):
        if math.prod(self.shape) != len(self.points):
            raise ConfigError("point count does not match the axes")

    def at(self, *index: int) -> RegimePoint:
        flat = 0
        for i, n in zip(index, self.shape):
            flat = flat * n + i
        return self.points[flat]

    def label_histogram(self) -> dict[str, int]:
        counts = Counter(p.label for p in self.points)
        return {k: counts.get(k, 0) for k in LABELS}


def _resolve(values: dict, constants: Constants, thresholds: Thresholds) -> RegimePoint:
    tau = values.get("tau", 1.0)
    if "omega_c_tau" in values:
        x = values["omega_c_tau"]
        if not tau > 0:
            raise DomainError("tau must be positive when sweeping omega_c_tau")
        B = x * constants.M_e / (constants.e * tau)
    else:
        B = values["B"]
        x = omega_c_tau(B, tau, constants)
    if "nu" in values:
        n = density_for_filling(values["nu"], B, constants)
    else:
        n = values.get("n", 1.0)
    if "sigma_H" in values:
        if not x > 0:
            raise DomainError("sigma_H given but omega_c_tau is zero")
        sigma_0 = values["sigma_H"] * (x + 1.0 / x)
    else:
        sigma_0 = values.get("sigma_0", 1.0)
    return regime_point(B, n, tau, sigma_0, thresholds, constants, x=x)


def sweep(spec: SweepSpec) -> PhaseDiagram:
    """Evaluate every grid point, row-major (last axis fastest)."""
    names = [k for k, _ in spec.axes]
    points = []
    for combo in itertools.product(*(v for _, v in spec.axes)):
        values = dict(spec.fixed)
        values.update(zip(names, combo))
        points.append(_resolve(values, spec.constants, spec.thresholds))
    return PhaseDiagram(spec.axes, tuple(points))


def write_phase_diagram(diagram: PhaseDiagram, directory, prefix: str = "regime",
                        formats=("csv", "json")) -> list:
    from pathlib import Path

    d = Path(directory)
    out = []
    if "csv" in formats:
        out.append(write_csv(d / f"{prefix}_points.csv", RegimePoint.FIELDS, (p.row() for p in diagram.points)))
    if "json" in formats:
        summary = {
            "axes": [{"name": k, "values": list(v)} for k, v in diagram.axes],
            "shape": list(diagram.shape),
            "label_histogram": diagram.label_histogram(),
            "points": len(diagram.points),
        }
        out.append(write_json(d / f"{prefix}_summary.json", summary))
    return out
