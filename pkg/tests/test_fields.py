import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csgauge.dec import Cochain, angular_increments, exterior_derivative, loop_sum, rectangular_grid
from csgauge.errors import DomainError, InsufficientStackError, MeshError, ShapeError
from csgauge.fields import (
    STATE_CSV_COLUMNS,
    Constants,
    FieldState,
    SpacetimeStack,
    cs_action,
    cs_residual,
    cs_vector,
    electric_current,
    em_current,
    ohm_relation,
    phase_increments,
    pure_gauge_potential,
    wavefunction_from_increments,
    write_state_csv,
)


@pytest.fixture
def grid():
    return rectangular_grid(8, 6, 0.5)


@pytest.fixture
def annulus():
    return rectangular_grid(16, 16, 0.25, holes=[(5, 11, 5, 11)])


def random_psi(mesh, rng, noise=0.3):
    f = rng.uniform(-noise, noise, mesh.n_vertices)
    inc = Cochain(mesh, 1, mesh.d0 @ f)
    rho = rng.uniform(0.5, 2.0, mesh.n_vertices)
    return wavefunction_from_increments(rho, inc), inc


class TestConstants:
    def test_defaults(self):
        c = Constants()
        assert (c.hbar, c.mu0, c.h) == (1.0, 1.0, 2 * math.pi)
        assert c.flux_quantum == 2 * math.pi

    def test_override_and_charge(self):
        assert Constants(e=2.0).flux_quantum == math.pi
        assert Constants(flux_quantum_override=math.pi).flux_quantum == math.pi

    def test_penetration_depth_round_trip(self):
        c = Constants(e=2.0, M_e=3.0)
        assert c.penetration_depth(5.0) == 3.0 / 20.0
        assert c.density_for_depth(c.penetration_depth(5.0)) == pytest.approx(5.0, rel=1e-15)

    @pytest.mark.parametrize("kw", [{"e": 0}, {"M_e": -1}, {"flux_quantum_override": 0}])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            Constants(**kw)


class TestElectricCurrent:
    def test_constant_real_psi(self, grid):
        psi = Cochain(grid, 0, np.full(grid.n_vertices, 2.5 + 0j))
        assert not np.any(electric_current(psi).values)

    @pytest.mark.parametrize("k", [0.01, 0.1, 0.3, 1.0])
    def test_plane_wave(self, k):
        line = rectangular_grid(20, 1, 1.0)
        x = line.vertices[:, 0]
        psi = Cochain(line, 0, np.exp(1j * k * x))
        j = electric_current(psi).values
        horiz = line.is_horizontal
        # lattice current is exactly k per unit edge; continuum oracle sin(k) within k^2
        np.testing.assert_allclose(j[horiz], k, rtol=1e-12)
        assert np.all(np.abs(j[horiz] - math.sin(k)) / math.sin(k) <= k * k)
        assert np.max(np.abs(j[~horiz])) <= 1e-15

    def test_global_phase_invariance(self, grid):
        psi, _ = random_psi(grid, np.random.default_rng(0))
        rotated = Cochain(grid, 0, psi.values * np.exp(1.234j))
        np.testing.assert_allclose(electric_current(rotated).values, electric_current(psi).values,
                                   rtol=0, atol=1e-14)

    def test_charge_and_mass_scaling(self, grid):
        psi, _ = random_psi(grid, np.random.default_rng(1))
        base = electric_current(psi).values
        np.testing.assert_allclose(electric_current(psi, Constants(e=3.0, M_e=2.0)).values, 1.5 * base,
                                   rtol=1e-15)


class TestEmCurrent:
    def test_zero_potential(self, grid):
        psi, _ = random_psi(grid, np.random.default_rng(2))
        assert np.array_equal(em_current(psi, Cochain.zeros(grid, 1)).values, electric_current(psi).values)

    def test_zero_psi(self, grid):
        psi = Cochain.zeros(grid, 0, dtype=complex)
        A = Cochain(grid, 1, np.ones(grid.n_edges))
        assert not np.any(em_current(psi, A).values)

    @pytest.mark.parametrize("e", [1.0, 2.0, 0.5])
    def test_pure_gauge_cancels(self, annulus, e):
        c = Constants(e=e)
        rng = np.random.default_rng(3)
        inc = angular_increments(annulus, 2) + Cochain(annulus, 1, annulus.d0 @ rng.uniform(-0.3, 0.3, annulus.n_vertices))
        psi = wavefunction_from_increments(rng.uniform(0.2, 3, annulus.n_vertices), inc)
        A = pure_gauge_potential(inc, c)
        assert np.max(np.abs(em_current(psi, A, c).values)) <= 1e-12

    def test_gauge_covariance(self, grid):
        rng = np.random.default_rng(4)
        c = Constants(e=1.5)
        psi, _ = random_psi(grid, rng)
        A = Cochain(grid, 1, rng.normal(0, 0.2, grid.n_edges))
        chi = rng.uniform(-0.4, 0.4, grid.n_vertices)
        psi2 = Cochain(grid, 0, psi.values * np.exp(1j * c.e * chi))
        A2 = A + Cochain(grid, 1, grid.d0 @ chi)
        np.testing.assert_allclose(em_current(psi2, A2, c).values, em_current(psi, A, c).values,
                                   rtol=0, atol=1e-10)

    def test_mesh_mismatch(self, grid):
        other = rectangular_grid(8, 6, 0.5)
        with pytest.raises(ShapeError):
            em_current(Cochain.zeros(grid, 0), Cochain.zeros(other, 1))


class TestPureGauge:
    def test_zero(self, grid):
        assert not np.any(pure_gauge_potential(Cochain.zeros(grid, 1)).values)

    def test_winding_one_flux_quantum(self, annulus):
        A = pure_gauge_potential(angular_increments(annulus, 1))
        assert loop_sum(A, annulus.hole_loops[0]) == pytest.approx(Constants().flux_quantum, abs=1e-12)

    def test_winding_three_charge_two(self, annulus):
        A = pure_gauge_potential(angular_increments(annulus, 3), Constants(e=2.0))
        assert loop_sum(A, annulus.hole_loops[0]) == pytest.approx(3 * math.pi, abs=1e-12)

    def test_curl_free(self, annulus):
        A = pure_gauge_potential(angular_increments(annulus, 4))
        assert np.max(np.abs(exterior_derivative(A).values)) <= 1e-12


class TestWavefunction:
    def test_recovers_increments(self, annulus):
        inc = angular_increments(annulus, 1)
        psi = wavefunction_from_increments(1.0, inc)
        np.testing.assert_allclose(phase_increments(psi).values, inc.values, atol=1e-13)

    def test_non_closed_rejected(self, grid):
        inc = Cochain(grid, 1, np.random.default_rng(5).uniform(-1, 1, grid.n_edges))
        with pytest.raises(MeshError):
            wavefunction_from_increments(1.0, inc)


def cs_state(mesh, C_spatial, C_t=None):
    """State with sigma_H = 0 and lam = 1 whose Chern-Simons vector is (C_spatial, C_t)."""
    C = Cochain(mesh, 1, C_spatial)
    j0 = None if C_t is None else Cochain(mesh, 0, C_t)
    return FieldState(Cochain.zeros(mesh, 1), C, C, 0.0, 1.0, j0=j0)


def fourier_mode(n, L=2 * math.pi, a=0.7, b=1.3):
    h = L / n
    mesh = rectangular_grid(n, n, h)
    k = 2 * math.pi / L
    xe = mesh.edge_centers[:, 0]
    Cs = np.where(mesh.is_horizontal, 0.0, a * np.sin(k * xe) * h)
    Ct = b * np.cos(k * mesh.vertices[:, 0])
    return mesh, Cs, Ct, k, h


class TestCSVector:
    def test_sigma_zero(self, grid):
        rng = np.random.default_rng(6)
        j = Cochain(grid, 1, rng.standard_normal(grid.n_edges))
        s = FieldState(Cochain(grid, 1, rng.standard_normal(grid.n_edges)), j, j, 0.0, 1.0)
        assert np.array_equal(cs_vector(s).spatial.values, j.values)

    def test_no_current(self, grid):
        A = Cochain(grid, 1, np.random.default_rng(7).standard_normal(grid.n_edges))
        s = FieldState(A, Cochain.zeros(grid, 1), -A, 1.0, 1.0)
        assert np.array_equal(cs_vector(s).spatial.values, -A.values)

    def test_componentwise(self, grid):
        rng = np.random.default_rng(8)
        j = Cochain(grid, 1, rng.standard_normal(grid.n_edges))
        A = Cochain(grid, 1, rng.standard_normal(grid.n_edges))
        s = FieldState.from_currents(j, A, 1.0, 2.0)
        np.testing.assert_allclose(cs_vector(s).spatial.values, 2 * j.values - A.values, rtol=0, atol=1e-14)


class TestCSAction:
    def test_zero(self, grid):
        s = cs_state(grid, np.zeros(grid.n_edges))
        assert cs_action(SpacetimeStack([s, s, s], 0.1)) == 0.0

    def test_constant_field(self, grid):
        vals = np.where(grid.is_horizontal, 0.3, -0.2) * grid.edge_lengths
        s = cs_state(grid, vals, np.full(grid.n_vertices, 0.9))
        assert abs(cs_action(SpacetimeStack([s, s], 0.5))) <= 1e-14

    def test_static_gauge_trivial(self, grid):
        chi = np.random.default_rng(9).standard_normal(grid.n_vertices)
        s = cs_state(grid, grid.d0 @ chi)
        assert abs(cs_action(SpacetimeStack([s, s], 1.0))) <= 1e-10

    def test_time_dependent_gauge_trivial(self, grid):
        chi = np.random.default_rng(10).standard_normal(grid.n_vertices)
        slices = [cs_state(grid, g * (grid.d0 @ chi)) for g in (0.5, 1.0, 2.5, 1.5)]
        assert abs(cs_action(SpacetimeStack(slices, 0.2))) <= 1e-10

    @pytest.mark.parametrize("n", [8, 16, 32])
    def test_fourier_mode_closed_form(self, n):
        mesh, Cs, Ct, k, h = fourier_mode(n)
        s = cs_state(mesh, Cs, Ct)
        T, area = 2 * 0.25, (2 * math.pi) ** 2
        # discrete density is a*b*sin(k h)/h on every face
        exact = 0.7 * 1.3 * math.sin(k * h) / h * area * T
        assert cs_action(SpacetimeStack([s, s, s], 0.25)) == pytest.approx(exact, rel=1e-12)

    def test_fourier_mode_second_order(self):
        errs = []
        for n in (8, 16, 32):
            mesh, Cs, Ct, k, h = fourier_mode(n)
            s = cs_state(mesh, Cs, Ct)
            continuum = 0.7 * 1.3 * k * (2 * math.pi) ** 2 * 1.0
            errs.append(abs(cs_action(SpacetimeStack([s, s], 1.0)) - continuum))
        for coarse, fine in zip(errs, errs[1:]):
            assert 3.9 <= coarse / fine <= 4.1

    def test_needs_two_slices(self, grid):
        s = cs_state(grid, np.zeros(grid.n_edges))
        with pytest.raises(InsufficientStackError):
            cs_action(SpacetimeStack([s], 1.0))


class TestCSResidual:
    def test_zero(self, grid):
        s = cs_state(grid, np.zeros(grid.n_edges))
        assert cs_residual(SpacetimeStack([s, s], 1.0)).max_abs() == 0.0

    def test_london_construction(self, grid):
        lam = 0.7
        A = Cochain(grid, 1, np.random.default_rng(11).standard_normal(grid.n_edges))
        s = FieldState.from_currents(A / lam, A, 1.0, lam)
        assert cs_residual(SpacetimeStack([s, s, s], 0.3)).max_abs() <= 1e-12

    def test_time_varying_current(self, grid):
        rng = np.random.default_rng(12)
        lam, dt = 2.0, 0.1
        A = Cochain(grid, 1, rng.standard_normal(grid.n_edges))
        j0 = Cochain(grid, 1, rng.standard_normal(grid.n_edges))
        j1 = Cochain(grid, 1, rng.standard_normal(grid.n_edges))
        s0 = FieldState.from_currents(j0, A, 1.0, lam)
        s1 = FieldState.from_currents(j1, A, 1.0, lam)
        res = cs_residual(SpacetimeStack([s0, s1], dt))
        np.testing.assert_allclose(res.mixed[0].values, lam * (j1.values - j0.values) / dt, rtol=1e-13, atol=1e-13)

    def test_violation_detected(self, grid):
        lam = 1.0
        rng = np.random.default_rng(13)
        A = Cochain(grid, 1, rng.standard_normal(grid.n_edges))
        bump = np.zeros(grid.n_edges)
        bump[grid.face_edges[10, 1]] = 0.01
        s = FieldState.from_currents(A / lam + Cochain(grid, 1, bump), A, 1.0, lam)
        assert cs_residual(SpacetimeStack([s, s], 1.0)).constraint_max() >= 1e-3

    def test_time_component(self, grid):
        # C_t varying in space but static: mixed residual is -d(C_t)
        ct = np.random.default_rng(14).standard_normal(grid.n_vertices)
        s = cs_state(grid, np.zeros(grid.n_edges), ct)
        res = cs_residual(SpacetimeStack([s, s], 1.0))
        np.testing.assert_allclose(res.mixed[0].values, -(grid.d0 @ ct), atol=1e-15)


class TestOhmRelation:
    def test_zero(self, grid):
        z = Cochain.zeros(grid, 1)
        r = ohm_relation(FieldState(z, z, z, 1.0, 1.0))
        assert not np.any(r.lhs.values) and not np.any(r.rhs.values)

    def test_decoupled(self, grid):
        A = Cochain(grid, 1, np.random.default_rng(15).standard_normal(grid.n_edges))
        z = Cochain.zeros(grid, 1)
        r = ohm_relation(FieldState(A, z, z, 0.0, 1.0))
        assert not np.any(r.rhs.values) and r.max_abs_diff() == 0.0

    def test_london_state_agrees(self, grid):
        A = Cochain(grid, 1, np.random.default_rng(16).standard_normal(grid.n_edges))
        s = FieldState.from_currents(A / 0.4, A, 1.0, 0.4)
        assert ohm_relation(s).max_abs_diff() <= 1e-12


class TestFieldState:
    def test_derived_fields(self, grid):
        psi, _ = random_psi(grid, np.random.default_rng(17))
        A = Cochain(grid, 1, np.random.default_rng(18).normal(0, 0.1, grid.n_edges))
        s = FieldState.from_wavefunction(psi, A, 1.0, 1.0)
        assert s.derived_error() <= 1e-12

    def test_negative_sigma(self, grid):
        z = Cochain.zeros(grid, 1)
        with pytest.raises(DomainError):
            FieldState(z, z, z, -1.0, 1.0)

    def test_stack_needs_positive_dt(self, grid):
        z = Cochain.zeros(grid, 1)
        with pytest.raises(DomainError):
            SpacetimeStack([FieldState(z, z, z, 1.0, 1.0)] * 2, 0.0)

    def test_state_csv(self, grid, tmp_path):
        psi, _ = random_psi(grid, np.random.default_rng(19))
        s = FieldState.from_wavefunction(psi, Cochain.zeros(grid, 1), 1.0, 1.0)
        path = tmp_path / "state.csv"
        write_state_csv(s, path)
        with path.open() as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == STATE_CSV_COLUMNS
        assert len(rows) == 1 + grid.n_vertices + grid.n_edges + grid.n_faces
        assert [r[0] for r in rows[1:]].count("edge") == grid.n_edges


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), winding=st.integers(-3, 3), e=st.sampled_from([0.5, 1.0, 2.0, 3.0]))
def test_property_pure_gauge_annihilation(seed, winding, e):
    mesh = rectangular_grid(14, 14, 0.3, holes=[(5, 9, 5, 9)])
    rng = np.random.default_rng(seed)
    c = Constants(e=e)
    inc = angular_increments(mesh, winding) + Cochain(mesh, 1, mesh.d0 @ rng.uniform(-0.2, 0.2, mesh.n_vertices))
    psi = wavefunction_from_increments(rng.uniform(0.1, 5.0, mesh.n_vertices), inc)
    A = pure_gauge_potential(phase_increments(psi), c)
    assert np.max(np.abs(em_current(psi, A, c).values)) <= 1e-12
    holonomy = loop_sum(A, mesh.hole_loops[0])
    assert holonomy == pytest.approx(2 * math.pi * winding / e, abs=1e-12)
