"""Scenario files: a YAML document validated in full before any computation.

Top-level keys (unknown keys are rejected)::

    kind: meissner | cs-check | regime-sweep | squid | corbino | pure-gauge-demo
    name: optional label
    geometry:                 # grid kinds
      grid: {nx, ny, hx, hy, origin, holes: [[i0, i1, j0, j1], ...]}
    geometry:                 # corbino
      ring: {R, l_B} or {R, B}
    constants: {e, M_e, flux_quantum}
    parameters: {...kind specific, see the *Params models...}
    outputs: {directory, format: csv|json|both, plot: true}

Validation errors are collected across all sections and reported with
dotted field paths, e.g. ``parameters.lambda: Input should be greater than 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal, Optional, Union

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    field_validator,
    model_validator,
)

from .errors import CSGaugeError

__all__ = ["KINDS", "Scenario", "ScenarioError", "parse_scenario", "load_scenario_text"]

KINDS = ("meissner", "cs-check", "regime-sweep", "squid", "corbino", "pure-gauge-demo")

GRID_KINDS = {"meissner", "cs-check", "pure-gauge-demo"}
RING_KINDS = {"corbino"}


class ScenarioError(CSGaugeError, ValueError):
    """Invalid scenario; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)


# -- geometry ---------------------------------------------------------------

class GridSpec(_Strict):
    nx: PositiveInt
    ny: PositiveInt
    hx: PositiveFloat = 1.0
    hy: Optional[PositiveFloat] = None
    origin: tuple[float, float] = (0.0, 0.0)
    holes: list[tuple[int, int, int, int]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _holes_inside(self):
        taken: list[tuple[int, int, int, int]] = []
        for k, (i0, i1, j0, j1) in enumerate(self.holes):
            if not (0 < i0 < i1 < self.nx and 0 < j0 < j1 < self.ny):
                raise ValueError(f"hole {k} must lie strictly inside the {self.nx}x{self.ny} grid")
            for a0, a1, b0, b1 in taken:
                if i0 <= a1 and a0 <= i1 and j0 <= b1 and b0 <= j1:
                    raise ValueError(f"hole {k} touches another hole")
            taken.append((i0, i1, j0, j1))
        return self


class RingSpec(_Strict):
    R: PositiveFloat
    l_B: Optional[PositiveFloat] = None
    B: Optional[PositiveFloat] = None

    @model_validator(mode="after")
    def _one_width(self):
        if (self.l_B is None) == (self.B is None):
            raise ValueError("give exactly one of l_B or B (l_B = sqrt(hbar/(e B)))")
        return self


class GeometrySpec(_Strict):
    grid: Optional[GridSpec] = None
    ring: Optional[RingSpec] = None


class ConstantsSpec(_Strict):
    e: PositiveFloat = 1.0
    M_e: PositiveFloat = 1.0
    flux_quantum: Optional[PositiveFloat] = None


class OutputsSpec(_Strict):
    directory: Optional[str] = None
    format: Literal["csv", "json", "both"] = "both"
    plot: bool = True


# -- parameters -------------------------------------------------------------

def _finite(v):
    if v is not None and not math.isfinite(v):
        raise ValueError("must be finite")
    return v


class _Depth(_Strict):
    lam: Optional[PositiveFloat] = Field(default=None, alias="lambda")
    n: Optional[PositiveFloat] = None

    @model_validator(mode="after")
    def _one_of(self):
        if (self.lam is None) == (self.n is None):
            raise ValueError("give exactly one of lambda or n (lambda = M_e/(n e^2))")
        return self


Boundary = Literal["auto", "all", "x", "y"]


class MeissnerParams(_Depth):
    B_ext: float
    boundary: Boundary = "auto"
    tol: PositiveFloat = 1e-10

    _fin = field_validator("B_ext")(_finite)


class CSCheckParams(_Depth):
    B_ext: float = 1.0
    sigma_H: NonNegativeFloat = 1.0
    boundary: Boundary = "auto"
    tol: PositiveFloat = 1e-8
    solver_tol: PositiveFloat = 1e-10
    dt: PositiveFloat = 1.0
    slices: int = Field(default=2, ge=2)

    _fin = field_validator("B_ext")(_finite)


class Spaced(_Strict):
    linspace: Optional[tuple[float, float, PositiveInt]] = None
    logspace: Optional[tuple[float, float, PositiveInt]] = None

    @model_validator(mode="after")
    def _one(self):
        if (self.linspace is None) == (self.logspace is None):
            raise ValueError("give exactly one of linspace or logspace")
        return self

    def values(self) -> list[float]:
        import numpy as np

        if self.linspace is not None:
            a, b, n = self.linspace
            return [float(v) for v in np.linspace(a, b, n)]
        a, b, n = self.logspace
        return [float(v) for v in np.logspace(a, b, n)]


Axis = Union[list[float], Spaced]


def axis_values(axis: Axis) -> list[float]:
    return axis.values() if isinstance(axis, Spaced) else [float(v) for v in axis]


class ThresholdsSpec(_Strict):
    low: PositiveFloat = 0.1
    high: PositiveFloat = 10.0
    nu_tol: PositiveFloat = 1e-3
    q_max: int = Field(default=9, ge=2)
    sigma_tol: PositiveFloat = 1e-6
    B_c: Optional[PositiveFloat] = None

    @model_validator(mode="after")
    def _ordered(self):
        if self.high < self.low:
            raise ValueError("high must be >= low")
        if self.nu_tol >= 0.5:
            raise ValueError("nu_tol must be < 0.5")
        return self


class RegimeSweepParams(_Strict):
    axes: dict[str, Axis]
    fixed: dict[str, float] = Field(default_factory=dict)
    thresholds: ThresholdsSpec = Field(default_factory=ThresholdsSpec)

    @model_validator(mode="after")
    def _sweep_ok(self):
        from .errors import ConfigError
        from .regime import SweepSpec

        try:
            SweepSpec(tuple((k, tuple(axis_values(v))) for k, v in self.axes.items()), dict(self.fixed))
        except ConfigError as exc:
            raise ValueError(str(exc)) from None
        return self


class SquidParams(_Strict):
    beta: NonNegativeFloat
    phi_ext: Axis

    @field_validator("phi_ext")
    @classmethod
    def _sorted(cls, axis):
        vals = axis_values(axis)
        if not vals:
            raise ValueError("phi_ext grid is empty")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ValueError("phi_ext grid must be sorted ascending")
        if any(not math.isfinite(v) for v in vals):
            raise ValueError("phi_ext grid must be finite")
        return axis


class CorbinoParams(_Strict):
    B_squid: PositiveFloat
    N: PositiveInt


class PureGaugeParams(_Strict):
    winding: int
    rho_min: PositiveFloat = 0.5
    rho_max: PositiveFloat = 1.5
    phase_noise: NonNegativeFloat = 0.2
    seed: int = 0
    tol: PositiveFloat = 1e-12

    @model_validator(mode="after")
    def _range(self):
        if self.rho_max < self.rho_min:
            raise ValueError("rho_max must be >= rho_min")
        return self


PARAMS = {
    "meissner": MeissnerParams,
    "cs-check": CSCheckParams,
    "regime-sweep": RegimeSweepParams,
    "squid": SquidParams,
    "corbino": CorbinoParams,
    "pure-gauge-demo": PureGaugeParams,
}


class _TopLevel(_Strict):
    kind: str
    name: Optional[str] = None
    geometry: Optional[dict[str, Any]] = None
    constants: Optional[dict[str, Any]] = None
    parameters: dict[str, Any] = Field(default_factory=dict)
    outputs: Optional[dict[str, Any]] = None


@dataclass(frozen=True)
class Scenario:
    kind: str
    name: str
    geometry: GeometrySpec
    constants: ConstantsSpec
    parameters: BaseModel
    outputs: OutputsSpec
    source: Optional[Path] = None

    def echo(self) -> dict:
        """Normalized, JSON-ready view of the validated scenario."""
        return {
            "kind": self.kind,
            "name": self.name,
            "geometry": self.geometry.model_dump(mode="json", exclude_none=True),
            "constants": self.constants.model_dump(mode="json", exclude_none=True),
            "parameters": self.parameters.model_dump(mode="json", by_alias=True, exclude_none=True),
            "outputs": self.outputs.model_dump(mode="json", exclude_none=True),
        }

    def physical_constants(self):
        from .fields import Constants

        c = self.constants
        return Constants(e=c.e, M_e=c.M_e, flux_quantum_override=c.flux_quantum)


def _format_errors(prefix: str, exc: ValidationError) -> list[str]:
    out = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in (prefix, *err["loc"]) if p != "")
        msg = err["msg"]
        if msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
        out.append(f"{loc}: {msg}" if loc else msg)
    return out


def _validate(model, prefix: str, data, errors: list[str]):
    try:
        return model.model_validate(data if data is not None else {})
    except ValidationError as exc:
        errors.extend(_format_errors(prefix, exc))
        return None


def load_scenario_text(text: str, source: Optional[Path] = None) -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError([f"not valid YAML: {exc}"]) from exc
    if not isinstance(data, dict):
        raise ScenarioError(["scenario must be a mapping at the top level"])

    errors: list[str] = []
    top = _validate(_TopLevel, "", data, errors)
    if top is None:
        raise ScenarioError(errors)

    kind_ok = top.kind in KINDS
    if not kind_ok:
        errors.append(f"kind: unknown kind {top.kind!r}; accepted kinds: {', '.join(KINDS)}")

    geometry = _validate(GeometrySpec, "geometry", top.geometry, errors)
    constants = _validate(ConstantsSpec, "constants", top.constants, errors)
    outputs = _validate(OutputsSpec, "outputs", top.outputs, errors)
    params = _validate(PARAMS[top.kind], "parameters", top.parameters, errors) if kind_ok else None

    if kind_ok and geometry is not None:
        if top.kind in GRID_KINDS and geometry.grid is None:
            errors.append(f"geometry.grid: required for kind {top.kind!r}")
        if top.kind in RING_KINDS and geometry.ring is None:
            errors.append(f"geometry.ring: required for kind {top.kind!r}")
        if top.kind not in GRID_KINDS and geometry.grid is not None:
            errors.append(f"geometry.grid: not used by kind {top.kind!r}")
        if top.kind not in RING_KINDS and geometry.ring is not None:
            errors.append(f"geometry.ring: not used by kind {top.kind!r}")
        grid = geometry.grid
        if grid is not None and params is not None:
            boundary = getattr(params, "boundary", None)
            if boundary == "auto":
                # single-row (column) grids are strips, invariant along the thin direction
                boundary = "x" if grid.ny == 1 else "y" if grid.nx == 1 else "all"
                params = params.model_copy(update={"boundary": boundary})
            if boundary in ("all", "x") and grid.nx < 2:
                errors.append("geometry.grid.nx: domain must be at least 2 cells across x")
            if boundary in ("all", "y") and grid.ny < 2:
                errors.append("geometry.grid.ny: domain must be at least 2 cells across y")
            if top.kind == "pure-gauge-demo" and len(grid.holes) != 1:
                errors.append("geometry.grid.holes: pure-gauge-demo needs exactly one hole")
        ring = geometry.ring
        if ring is not None and ring.l_B is not None and not ring.l_B < ring.R:
            errors.append("geometry.ring.l_B: must be smaller than R")

    if errors:
        raise ScenarioError(errors)
    name = top.name or (source.stem if source is not None else top.kind)
    return Scenario(top.kind, name, geometry, constants, params, outputs, source)


def parse_scenario(path) -> Scenario:
    """Read and fully validate a scenario file; raise ScenarioError listing all problems."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError([f"cannot read {path}: {exc.strerror or exc}"]) from exc
    return load_scenario_text(text, path)
