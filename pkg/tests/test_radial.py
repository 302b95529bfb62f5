"""Channel engine tests: regular solutions, Jost solutions, decompositions,
and the S-matrix ratio identities."""

import math

import numpy as np
import pytest

from hyperres import radial as rad
from hyperres import specfun as sf
from hyperres.errors import NearSingularWronskianError
from hyperres.potentials import HyperbolicDim, RadialPotential

DIM2 = HyperbolicDim(2)
DIM1 = HyperbolicDim(1)
V0 = RadialPotential("zero")
VBUMP = RadialPotential("bump", 1.0, 1.0)


class TestSector:
    def test_mu_and_multiplicity(self):
        s = rad.Sector(DIM2, 3)
        assert s.mu == 3.5
        assert s.multiplicity == 7
        assert rad.Sector(DIM1, 2).mu == 2.0


class TestIntegrateRegular:
    @pytest.mark.parametrize("n,l,s", [(2, 0, 1 + 3j), (2, 2, 0.5 - 1.2j),
                                       (1, 1, 0.3 + 0.7j), (3, 1, 1.2 + 0.4j)])
    def test_free_solution_matches_legendre_P(self, n, l, s):
        dim = HyperbolicDim(n)
        sec = rad.Sector(dim, l)
        sol = rad.integrate_regular(sec, s, V0, 1.5)
        nu = s - (n + 1) / 2
        ref = np.sinh(sol.grid) ** (-(n - 1) / 2) \
            * sf.legendre_P_negmu(nu, sec.mu, np.cosh(sol.grid))
        ratio = sol.u * math.exp(sol.log_scale) / ref
        assert np.max(np.abs(ratio / ratio[-1] - 1)) < 1e-8
        # Frobenius normalization fixes the constant to 2^mu Gamma(1+mu)
        norm = 2 ** sec.mu * math.gamma(1 + sec.mu)
        assert abs(ratio[-1] - norm) / norm < 1e-9

    def test_wronskian_with_jost_constant(self):
        # Abel's identity: sinh^n r (u psi' - u' psi) constant along the grid
        sec = rad.Sector(DIM2, 0)
        s = 1 + 3j
        sol = rad.integrate_regular(sec, s, V0, 2.0, num_points=40)
        keep = sol.grid >= 0.3  # Jost series budget near the cone point
        r = sol.grid[keep]
        psi, dpsi = rad.jost_solution(sec, s, r)
        w = np.sinh(r) ** 2 * (sol.u[keep] * dpsi - sol.du[keep] * psi)
        assert np.max(np.abs(w / w[-1] - 1)) < 1e-8

    def test_conjugation_symmetry(self):
        sec = rad.Sector(DIM2, 1)
        s = 0.8 + 1.4j
        a = rad.integrate_regular(sec, s, VBUMP, 1.5)
        b = rad.integrate_regular(sec, np.conj(s), VBUMP, 1.5)
        assert np.max(np.abs(np.conj(b.u) - a.u)) < 1e-9 * np.max(np.abs(a.u))


class TestJostSolution:
    def test_decay_exponent(self):
        # log |psi(s; r+1)/psi(s; r)| -> -Re s at r = 8, 12
        sec = rad.Sector(DIM2, 1)
        s = 1.3 + 0.8j
        for r in (8.0, 12.0):
            p1, _ = rad.jost_solution(sec, s, r)
            p2, _ = rad.jost_solution(sec, s, r + 1.0)
            assert abs(math.log(abs(p2 / p1)) + s.real) < 1e-3

    def test_h3_l0_closed_form(self):
        # psi(s;r) proportional to e^{-(s-1)r}/sinh r
        sec = rad.Sector(DIM2, 0)
        s = 1.7 - 2.2j
        rs = np.linspace(1.0, 4.0, 7)
        psi, _ = rad.jost_solution(sec, s, rs)
        ratio = psi / (np.exp(-(s - 1) * rs) / np.sinh(rs))
        assert np.max(np.abs(ratio / ratio[0] - 1)) < 1e-10

    def test_linear_independence_off_critical(self):
        # modified Wronskian of psi(n-s), psi(s) equals -sin(pi(s - n/2))
        for dim, s in ((DIM2, 0.7 + 1.2j), (DIM1, 0.2 - 0.8j)):
            sec = rad.Sector(dim, 1)
            r = 1.4
            h = 1e-6
            pa, da = rad.jost_solution(sec, dim.n - s, r)
            pb, db = rad.jost_solution(sec, s, r)
            w = math.sinh(r) ** dim.n * (pa * db - da * pb)
            assert abs(w - complex(rad.free_wronskian(dim, s))) < 1e-9
            assert abs(w) > 0.1


class TestDecompose:
    def test_free_ratio_matches_connection_formula(self):
        sec = rad.Sector(DIM2, 1)
        s = 1.3 + 0.4j
        sol = rad.integrate_regular(sec, s, V0, 1.5)
        dec = rad.decompose_at_match(sol, sec, s, 1.5)
        A0, B0 = rad.free_coefficients(sec, s)
        assert abs(dec.A_grow / A0 - 1) < 1e-9
        assert abs(dec.B_decay / B0 - 1) < 1e-9
        assert dec.residual < 1e-8

    def test_eigenvalue_situation(self):
        # at the bound state of the deep well, |A| tiny while |B| = O(1)
        well = RadialPotential("well", amplitude=7.0, radius=1.0)
        zeta = 1.8049818680937357  # cross-checked against the matrix oracle
        sec = rad.Sector(DIM2, 0)
        sol = rad.integrate_regular(sec, zeta, well, 1.5)
        dec = rad.decompose_at_match(sol, sec, zeta, 1.5)
        assert abs(dec.A_grow) < 1e-8 * abs(dec.B_decay)
        assert abs(dec.B_decay) > 0.01

    def test_r_match_independence(self):
        sec = rad.Sector(DIM2, 1)
        s = 0.9 + 0.6j
        d1 = rad.decompose_at_match(rad.integrate_regular(sec, s, VBUMP, 1.5),
                                    sec, s, 1.5)
        d2 = rad.decompose_at_match(rad.integrate_regular(sec, s, VBUMP, 2.5),
                                    sec, s, 2.5)
        assert abs(d1.A_grow / d2.A_grow - 1) < 1e-8
        assert abs(d1.B_decay / d2.B_decay - 1) < 1e-8

    def test_exceptional_set_error(self):
        sec = rad.Sector(DIM2, 0)
        sol = rad.integrate_regular(sec, 2.0 + 1e-13j, V0, 1.5)
        with pytest.raises(NearSingularWronskianError):
            rad.decompose_at_match(sol, sec, 2.0 + 1e-13j, 1.5)


class TestJostFunction:
    def test_free_values(self):
        svals = np.array([0.7 + 1.1j, -2.3 + 0.5j, 1.5 - 2j])
        d3 = rad.jost_batch(rad.Sector(DIM2, 0), svals, V0)
        assert np.max(np.abs(d3 - 1.0)) < 1e-6
        from scipy.special import rgamma
        d2 = rad.jost_batch(rad.Sector(DIM1, 1), svals, V0)
        assert np.max(np.abs(d2 - rgamma(svals + 1))) < 1e-8

    def test_real_on_real_axis(self):
        sec = rad.Sector(DIM2, 0)
        for s in (0.35, 1.6, -1.45):
            d = rad.jost_function(sec, s, VBUMP)
            assert abs(d.imag) < 1e-10 * abs(d)

    def test_conjugate_symmetry(self):
        sec = rad.Sector(DIM2, 1)
        s = -0.7 + 1.9j
        d1 = rad.jost_function(sec, s, VBUMP)
        d2 = rad.jost_function(sec, np.conj(s), VBUMP)
        assert abs(np.conj(d2) - d1) < 1e-9 * abs(d1)

    def test_r_match_independence(self):
        sec = rad.Sector(DIM2, 0)
        s = -0.5 + 1.0j
        d1 = rad.jost_function(sec, s, VBUMP, r_match=1.5)
        d2 = rad.jost_function(sec, s, VBUMP, r_match=2.5)
        assert abs(d1 / d2 - 1) < 1e-8

    def test_no_zero_on_critical_line_scan(self):
        # |D_l| on Re s = n/2 stays away from 0 (away from s = n/2 itself)
        xi = np.linspace(0.1, 6.0, 60)
        for l in range(3):
            d = rad.jost_batch(rad.Sector(DIM2, l), 1.0 + 1j * xi, VBUMP)
            assert np.min(np.abs(d)) > 1e-3 * np.median(np.abs(d))


class TestChannelRatio:
    def test_free_is_one(self):
        assert abs(rad.channel_smatrix_ratio(rad.Sector(DIM2, 2), 1 + 2.5j, V0) - 1) < 1e-9

    def test_unitarity_on_critical_line(self):
        for xi in (0.5, 2.0, 7.0):
            r = rad.channel_smatrix_ratio(rad.Sector(DIM2, 0), 1 + 1j * xi, VBUMP)
            assert abs(abs(r) - 1.0) < 1e-8

    def test_inversion_identity(self):
        s = 0.6 + 0.9j
        sec = rad.Sector(DIM2, 1)
        r1 = rad.channel_smatrix_ratio(sec, s, VBUMP)
        r2 = rad.channel_smatrix_ratio(sec, 2 - s, VBUMP)
        assert abs(r1 * r2 - 1.0) < 1e-8

    def test_channel_phase_free_is_zero(self):
        xi = np.linspace(0.0, 3.0, 31)
        theta, max_step = rad.channel_phase(rad.Sector(DIM2, 0), xi, V0)
        assert np.max(np.abs(theta)) < 1e-8
        assert max_step < 1e-8
