"""Run a validated scenario: dispatch to the numerical modules and write outputs."""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import plotting
from ._io import write_csv, write_json
from .dec import Cochain, angular_increments, exterior_derivative, rectangular_grid
from .errors import CSGaugeError
from .fields import (
    FieldState,
    SpacetimeStack,
    cs_action,
    cs_residual,
    em_current,
    ohm_relation,
    phase_increments,
    pure_gauge_potential,
    wavefunction_from_increments,
    write_state_csv,
)
from .london import Material, coulomb_potential, solve_meissner, write_solution
from .regime import SweepSpec, Thresholds, hall_conductivity, sweep, write_phase_diagram
from .rings import (
    RingGeometry,
    corbino_bridge,
    flux_quantize,
    squid_staircase,
    write_corbino_report,
    write_squid_curve,
)
from .scenario import Scenario, axis_values

__all__ = ["RunReport", "run", "resolve_output_dir", "EXIT_OK", "EXIT_CONTRACT", "EXIT_INPUT"]

EXIT_OK, EXIT_CONTRACT, EXIT_INPUT = 0, 1, 2
OUT_DIR_ENV = "CSGAUGE_OUT_DIR"
REPORT_NAME = "report.json"


@dataclass
class RunReport:
    scenario: dict
    out_dir: Path
    files: list[str] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    contracts: dict[str, bool] = field(default_factory=dict)
    error: str | None = None
    wall_time: float = 0.0

    @property
    def status(self) -> str:
        if self.error is not None:
            return "error"
        return "ok" if all(self.contracts.values()) else "contract-failure"

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.status == "ok" else EXIT_CONTRACT

    def to_dict(self) -> dict:
        """File payload; wall time and absolute paths are left out so reruns match byte for byte."""
        return {
            "scenario": self.scenario,
            "files": list(self.files),
            "metrics": self.metrics,
            "contracts": self.contracts,
            "status": self.status,
            "error": self.error,
        }


def resolve_output_dir(scenario: Scenario, override=None) -> Path:
    if override is not None:
        return Path(override)
    if scenario.outputs.directory is not None:
        return Path(scenario.outputs.directory)
    base = os.environ.get(OUT_DIR_ENV) or "csgauge-out"
    return Path(base) / scenario.name


def _formats(fmt: str) -> tuple[str, ...]:
    return ("csv", "json") if fmt == "both" else (fmt,)


def _material(scenario: Scenario) -> Material:
    p = scenario.parameters
    c = scenario.physical_constants()
    return Material.from_depth(p.lam, constants=c) if p.lam is not None else Material.from_density(p.n, constants=c)


def _grid(scenario: Scenario):
    g = scenario.geometry.grid
    return rectangular_grid(g.nx, g.ny, g.hx, g.hy, tuple(g.origin), [tuple(h) for h in g.holes])


def _centre_value(mesh, b: np.ndarray) -> float:
    """Field density at the domain centre, linearly interpolated between the nearest face centres."""
    c = mesh.face_centers
    mid = 0.5 * (c.min(axis=0) + c.max(axis=0))
    d = np.linalg.norm(c - mid, axis=1)
    near = np.flatnonzero(np.isclose(d, d.min(), rtol=1e-9, atol=1e-12))
    return float(np.mean(b[near]))


# -- kinds ------------------------------------------------------------------

def _run_meissner(sc: Scenario, out: Path, formats, report: RunReport):
    p = sc.parameters
    mesh = _grid(sc)
    mat = _material(sc)
    sol = solve_meissner(mesh, mat, p.B_ext, boundary=p.boundary, tol=p.tol)
    curl = mat.lam * exterior_derivative(sol.j_e).values - sol.B.values
    faces = sol.region
    report.metrics.update(
        lam=mat.lam,
        n=mat.n,
        residual=sol.residual_norm,
        iterations=sol.iterations,
        B_center=_centre_value(mesh, sol.b),
        B_min=float(sol.b.min()),
        B_max=float(sol.b.max()),
        curl_constraint_max=float(np.max(np.abs(curl[faces]))),
    )
    report.contracts["solver_residual"] = sol.residual_norm <= p.tol
    return write_solution(sol, out, "meissner", formats)


def _run_cs_check(sc: Scenario, out: Path, formats, report: RunReport):
    p = sc.parameters
    mesh = _grid(sc)
    mat = _material(sc)
    c = sc.physical_constants()
    sol = solve_meissner(mesh, mat, p.B_ext, boundary=p.boundary, tol=p.solver_tol)
    A = coulomb_potential(sol.B)
    state = FieldState.from_currents(sol.j_e, A, p.sigma_H, mat.lam, c)
    stack = SpacetimeStack([state] * p.slices, p.dt)
    res = cs_residual(stack)
    ohm = ohm_relation(state)
    region = sol.region
    report.metrics.update(
        lam=mat.lam,
        sigma_H=p.sigma_H,
        solver_residual=sol.residual_norm,
        cs_constraint_max=res.constraint_max(region),
        cs_motion_max=res.motion_max(),
        ohm_max_diff=ohm.max_abs_diff(region),
        gauge_B_mismatch=float(np.max(np.abs(exterior_derivative(A).values - sol.B.values))),
        action=cs_action(stack),
    )
    report.contracts["solver_residual"] = sol.residual_norm <= p.solver_tol
    if p.sigma_H == 1.0:
        report.contracts["cs_constraint"] = report.metrics["cs_constraint_max"] <= p.tol
        report.contracts["ohm_relation"] = report.metrics["ohm_max_diff"] <= p.tol
    files = []
    if "csv" in formats:
        files.append(write_state_csv(state, out / "cs_state.csv"))
        files.append(write_csv(
            out / "cs_ohm.csv",
            ("face", "x", "y", "lhs", "rhs", "superconducting"),
            ((k, x, y, ohm.lhs.values[k], ohm.rhs.values[k], bool(region[k]))
             for k, (x, y) in enumerate(mesh.face_centers)),
        ))
    return files


def _run_regime(sc: Scenario, out: Path, formats, report: RunReport):
    p = sc.parameters
    th = Thresholds(**p.thresholds.model_dump())
    spec = SweepSpec(
        tuple((k, tuple(axis_values(v))) for k, v in p.axes.items()),
        dict(p.fixed),
        th,
        sc.physical_constants(),
    )
    diagram = sweep(spec)
    drude = max(abs(hall_conductivity(pt.sigma_0, pt.omega_c_tau) - pt.sigma_H) for pt in diagram.points)
    report.metrics.update(
        points=len(diagram.points),
        shape=list(diagram.shape),
        label_histogram=diagram.label_histogram(),
        drude_identity_max=drude,
    )
    report.contracts["drude_identity"] = drude <= 1e-12
    return write_phase_diagram(diagram, out, "regime", formats)


def _run_squid(sc: Scenario, out: Path, formats, report: RunReport):
    p = sc.parameters
    curve = squid_staircase(axis_values(p.phi_ext), p.beta)
    steps = np.diff(curve.phi_int)
    plateaus = sorted({int(v) for v in curve.plateau_index})
    report.metrics.update(
        beta=p.beta,
        points=int(curve.phi_ext.size),
        plateaus=plateaus,
        min_step=float(steps.min()) if steps.size else 0.0,
        max_deviation_from_plateau=float(np.max(np.abs(curve.phi_int - curve.plateau_index))),
    )
    report.contracts["monotone"] = bool(np.all(steps >= 0))
    return [write_squid_curve(curve, out / "squid_curve.csv")] if "csv" in formats else []


def _run_corbino(sc: Scenario, out: Path, formats, report: RunReport):
    p = sc.parameters
    r = sc.geometry.ring
    c = sc.physical_constants()
    geom = RingGeometry(r.R, r.l_B) if r.l_B is not None else RingGeometry.from_field(r.R, r.B, c)
    rep = corbino_bridge(geom, p.B_squid, p.N, c)
    report.metrics.update(
        ratio=rep.ratio, Z=rep.Z, nu=rep.nu, nu_quantum_limit=rep.nu_quantum_limit,
        residual=rep.residual, flux_deviation=rep.flux_deviation,
    )
    report.contracts["nu_agreement"] = rep.residual <= 1e-10
    files = []
    if "json" in formats:
        files.append(write_corbino_report(rep, out / "corbino.json"))
    if "csv" in formats:
        d = rep.to_dict()
        files.append(write_csv(out / "corbino.csv", tuple(d), [tuple(d.values())]))
    return files


def _run_pure_gauge(sc: Scenario, out: Path, formats, report: RunReport):
    p = sc.parameters
    c = sc.physical_constants()
    mesh = _grid(sc)
    rng = np.random.default_rng(p.seed)
    rho = rng.uniform(p.rho_min, p.rho_max, mesh.n_vertices)
    f = rng.uniform(-p.phase_noise, p.phase_noise, mesh.n_vertices)
    inc = angular_increments(mesh, p.winding) + Cochain(mesh, 1, mesh.d0 @ f)
    if np.max(np.abs(inc.values)) >= math.pi:
        raise CSGaugeError("phase increments reach pi on some edge; refine the grid or lower winding/phase_noise")
    psi = wavefunction_from_increments(rho, inc)
    A = pure_gauge_potential(phase_increments(psi), c)
    J = em_current(psi, A, c)
    fq = flux_quantize(A, c)
    report.metrics.update(
        winding=p.winding,
        J_em_max=float(np.max(np.abs(J.values))),
        curl_A_max=float(np.max(np.abs(exterior_derivative(A).values))),
        flux=fq.flux,
        Z=fq.Z,
        flux_deviation=fq.deviation,
    )
    report.contracts["em_current_vanishes"] = report.metrics["J_em_max"] <= p.tol
    report.contracts["flux_quantized"] = fq.deviation <= p.tol and fq.Z == p.winding
    files = []
    if "csv" in formats:
        files.append(write_csv(
            out / "pure_gauge_edges.csv",
            ("edge", "x", "y", "increment", "A", "J_em"),
            ((k, x, y, inc.values[k], A.values[k], J.values[k])
             for k, (x, y) in enumerate(mesh.edge_centers)),
        ))
        files.append(write_csv(
            out / "pure_gauge_vertices.csv",
            ("vertex", "x", "y", "rho", "psi_re", "psi_im"),
            ((k, x, y, rho[k], psi.values[k].real, psi.values[k].imag)
             for k, (x, y) in enumerate(mesh.vertices)),
        ))
    return files


RUNNERS: dict[str, Callable] = {
    "meissner": _run_meissner,
    "cs-check": _run_cs_check,
    "regime-sweep": _run_regime,
    "squid": _run_squid,
    "corbino": _run_corbino,
    "pure-gauge-demo": _run_pure_gauge,
}


def run(scenario: Scenario, out_dir=None, fmt: str | None = None) -> RunReport:
    """Execute a scenario and write its outputs.

    Module errors do not propagate; they are recorded in the report, whose
    exit code is then nonzero. Outputs are deterministic: reruns of the same
    scenario give byte-identical files.
    """
    out = resolve_output_dir(scenario, out_dir)
    formats = _formats(fmt or scenario.outputs.format)
    report = RunReport(scenario.echo(), out)
    start = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        produced = [Path(f) for f in RUNNERS[scenario.kind](scenario, out, formats, report)]
        csvs = [f.name for f in produced if f.suffix == ".csv"]
        if scenario.outputs.plot and csvs:
            produced.append(plotting.write_plot_script(scenario.kind, csvs, out / "plot.py"))
        report.files = [f.name for f in produced]
    except CSGaugeError as exc:
        report.error = f"{type(exc).__name__}: {exc}"
    except OSError as exc:
        report.error = f"cannot write outputs: {exc}"
    if "json" in formats and out.is_dir():
        report.files.append(REPORT_NAME)
        write_json(out / REPORT_NAME, report.to_dict())
    report.wall_time = time.perf_counter() - start
    return report
