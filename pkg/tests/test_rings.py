import json
import math

import numpy as np
import pytest

from csgauge.dec import Cochain, angular_increments, rectangular_grid
from csgauge.errors import DegenerateFluxError, DomainError, TopologyError
from csgauge.fields import Constants, pure_gauge_potential
from csgauge.rings import (
    RingGeometry,
    corbino_bridge,
    flux_quantize,
    fluxoid_energy,
    magnetic_length,
    round_half_away,
    squid_staircase,
    write_corbino_report,
    write_squid_curve,
)


def dense_minimum(ue, beta, half_width=3.0, step=2e-5):
    """Brute-force global minimizer of the fluxoid energy on a fine grid."""
    u = np.arange(ue - half_width, ue + half_width, step)
    return u[np.argmin(fluxoid_energy(u, ue, beta))]


def off_tie_grid(lo, hi, n, gap=0.02):
    """Sorted grid avoiding half-integers, where two minima are degenerate."""
    g = np.linspace(lo, hi, n)
    frac = np.abs(g - np.floor(g) - 0.5)
    return g[frac > gap]


@pytest.fixture
def annulus():
    return rectangular_grid(12, 12, 1.0, holes=[(4, 8, 4, 8)])


class TestRoundHalfAway:
    @pytest.mark.parametrize("x,expected", [(0.5, 1), (-0.5, -1), (1.49, 1), (2.5, 3), (-2.5, -3), (0.0, 0)])
    def test_values(self, x, expected):
        assert round_half_away(x) == expected


class TestFluxQuantize:
    def test_zero(self, annulus):
        fq = flux_quantize(Cochain.zeros(annulus, 1))
        assert (fq.flux, fq.Z, fq.deviation) == (0.0, 0, 0.0)

    def test_winding_two(self, annulus):
        fq = flux_quantize(pure_gauge_potential(angular_increments(annulus, 2)))
        assert fq.flux == pytest.approx(4 * math.pi, abs=1e-12)
        assert fq.Z == 2 and fq.deviation <= 1e-12

    def test_perturbation(self, annulus):
        phi0 = Constants().flux_quantum
        A = pure_gauge_potential(angular_increments(annulus, 1))
        loop = annulus.hole_loops[0]
        bump = np.zeros(annulus.n_edges)
        bump[loop.edges[0]] = loop.signs[0] * 0.1 * phi0
        fq = flux_quantize(A + Cochain(annulus, 1, bump))
        assert fq.Z == 1
        assert fq.deviation == pytest.approx(0.1, abs=1e-12)
        assert not fq.ambiguous

    def test_ambiguous(self, annulus):
        phi0 = Constants().flux_quantum
        loop = annulus.hole_loops[0]
        bump = np.zeros(annulus.n_edges)
        bump[loop.edges[0]] = loop.signs[0] * 0.4 * phi0
        assert flux_quantize(Cochain(annulus, 1, bump)).ambiguous

    def test_no_hole(self):
        m = rectangular_grid(4, 4)
        with pytest.raises(TopologyError):
            flux_quantize(Cochain.zeros(m, 1))

    @pytest.mark.parametrize("e", [0.5, 1.0, 2.0, 3.0])
    def test_all_windings(self, annulus, e):
        c = Constants(e=e)
        for w in range(-10, 11):
            fq = flux_quantize(pure_gauge_potential(angular_increments(annulus, w), c), c)
            assert fq.Z == w and fq.deviation <= 1e-12


class TestMagneticLength:
    @pytest.mark.parametrize("B,e,expected", [(1.0, 1.0, 1.0), (4.0, 1.0, 0.5), (2.0, 2.0, 0.5)])
    def test_values(self, B, e, expected):
        assert magnetic_length(B, Constants(e=e)) == expected

    def test_nonpositive(self):
        with pytest.raises(DomainError):
            magnetic_length(0.0)


class TestRingGeometry:
    def test_areas(self):
        g = RingGeometry(1.0, 0.05)
        assert g.S == math.pi and g.S_prime == 2 * math.pi * 0.05
        assert g.S_prime == pytest.approx(0.1 * math.pi, rel=1e-15)

    def test_from_field(self):
        assert RingGeometry.from_field(2.0, 4.0).l_B == 0.5

    @pytest.mark.parametrize("R,l", [(1.0, 1.0), (1.0, 2.0), (0.0, 0.1), (1.0, -0.1)])
    def test_invalid(self, R, l):
        with pytest.raises(DomainError):
            RingGeometry(R, l)


class TestSquidStaircase:
    def test_identity_without_screening(self):
        c = squid_staircase([-1.0, 0.3, 1.4], 0.0)
        assert np.array_equal(c.phi_int, c.phi_ext)

    def test_plateau_point(self):
        c = squid_staircase([1.4], 50.0)
        assert abs(c.phi_int[0] - 1.0) <= 0.05
        # frozen minimizer at 1.4 flux quanta
        assert c.phi_int[0] == pytest.approx(dense_minimum(1.4, 50.0), abs=2e-5)

    def test_symmetric_minimum(self):
        assert squid_staircase([0.0], 50.0).phi_int[0] == 0.0

    @pytest.mark.parametrize("beta", [0.5, 3.0, 50.0])
    def test_matches_dense_oracle(self, beta):
        ext = off_tie_grid(-2.3, 2.3, 47)
        c = squid_staircase(ext, beta)
        oracle = np.array([dense_minimum(u, beta) for u in ext])
        assert np.max(np.abs(c.phi_int - oracle)) <= 2e-5

    def test_global_not_local(self):
        # at 0.45 flux quanta both wells exist for beta = 50; the n = 0 well is lower
        c = squid_staircase([0.45, 0.55], 50.0)
        assert abs(c.phi_int[0]) < 0.05 and abs(c.phi_int[1] - 1.0) < 0.05

    def test_tie_goes_to_smaller(self):
        c = squid_staircase([0.5], 50.0)
        assert c.phi_int[0] < 0.5

    def test_monotone(self):
        for beta in (0.0, 0.5, 5.0, 50.0):
            c = squid_staircase(np.linspace(-2.5, 2.5, 301), beta)
            assert np.all(np.diff(c.phi_int) >= 0)

    def test_odd_and_periodic(self):
        ext = off_tie_grid(-1.4, 1.4, 57)
        c = squid_staircase(ext, 50.0)
        neg = squid_staircase(-ext[::-1], 50.0).phi_int[::-1]
        shifted = squid_staircase(ext + 1.0, 50.0).phi_int
        assert np.max(np.abs(neg + c.phi_int)) <= 1e-8
        assert np.max(np.abs(shifted - (c.phi_int + 1.0))) <= 1e-8

    def test_flatness_grows_with_beta(self):
        slopes = []
        for beta in (0.5, 2.0, 10.0, 50.0):
            c = squid_staircase([-0.01, 0.01], beta)
            slope = (c.phi_int[1] - c.phi_int[0]) / 0.02
            assert slope == pytest.approx(1 / (1 + beta), rel=1e-3)
            slopes.append(slope)
        assert all(a > b for a, b in zip(slopes, slopes[1:]))

    def test_physical_flux_units(self):
        c = squid_staircase([1.4 * 2 * math.pi], 50.0, phi0=2 * math.pi)
        assert c.phi_int[0] / (2 * math.pi) == pytest.approx(squid_staircase([1.4], 50.0).phi_int[0], rel=1e-12)
        assert c.plateau_index.tolist() == [1]

    @pytest.mark.parametrize("ext,beta", [([1.0, 0.0], 1.0), ([0.0], -1.0), ([math.nan], 1.0)])
    def test_invalid(self, ext, beta):
        with pytest.raises(DomainError):
            squid_staircase(ext, beta)

    def test_csv(self, tmp_path):
        path = write_squid_curve(squid_staircase([0.0, 1.4], 0.0), tmp_path / "s.csv")
        assert path.read_text() == "phi_ext,phi_int,plateau\n0.0,0.0,0\n1.4,1.4,1\n"


class TestCorbino:
    def test_reference_case(self):
        phi0 = Constants().flux_quantum
        B = 2 * phi0 / math.pi
        g = RingGeometry(1.0, 0.05)
        r = corbino_bridge(g, B, 6)
        assert r.ratio == 10.0
        assert r.Z == 2 and r.nu == 3.0
        assert r.B_qhe == pytest.approx(10 * B, rel=1e-15)
        assert r.residual <= 1e-10
        assert r.B_qhe * r.S_prime == pytest.approx(B * r.S, rel=1e-15)

    def test_flux_conservation_exact(self):
        r = corbino_bridge(RingGeometry(1.0, 0.05), 4.0, 6)
        assert r.B_qhe * r.S_prime == r.B_squid * r.S

    @pytest.mark.parametrize("R,l,Z,N", [(2.0, 0.1, 3, 5), (1.5, 0.3, 1, 7), (3.0, 0.01, 4, 12), (1.0, 0.05, 2, 6)])
    def test_two_nu_computations_agree(self, R, l, Z, N):
        B = Z * Constants().flux_quantum / (math.pi * R * R)
        r = corbino_bridge(RingGeometry(R, l), B, N)
        assert r.Z == Z and r.nu == N / Z
        assert r.residual <= 1e-10
        assert r.B_qhe * r.S_prime == pytest.approx(r.B_squid * r.S, rel=1e-15)

    def test_unquantized_flux_shows_residual(self):
        # 2.3 flux quanta: Z = 2, and n h/(e B_qhe) = N/2.3
        B = 2.3 * Constants().flux_quantum / math.pi
        r = corbino_bridge(RingGeometry(1.0, 0.05), B, 6)
        assert r.Z == 2 and r.flux_deviation == pytest.approx(0.3, abs=1e-12)
        assert r.nu_quantum_limit == pytest.approx(6 / 2.3, rel=1e-12)
        assert r.residual == pytest.approx(3 - 6 / 2.3, rel=1e-12)

    def test_zero_quanta(self):
        with pytest.raises(DegenerateFluxError):
            corbino_bridge(RingGeometry(1.0, 0.05), 0.1, 6)

    @pytest.mark.parametrize("B,N", [(0.0, 6), (4.0, 0), (4.0, 2.5)])
    def test_invalid(self, B, N):
        with pytest.raises(DomainError):
            corbino_bridge(RingGeometry(1.0, 0.05), B, N)

    def test_report_json(self, tmp_path):
        r = corbino_bridge(RingGeometry(1.0, 0.05), 4.0, 6)
        data = json.loads(write_corbino_report(r, tmp_path / "c.json").read_text())
        assert data["ratio"] == 10.0 and data["Z"] == 2 and data["nu"] == 3.0
        assert {"R", "l_B", "B_squid", "N", "residual"} <= set(data)
