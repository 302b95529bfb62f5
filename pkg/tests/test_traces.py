"""Wave invariants, test functions, heat trace, pairings, eigenvalue oracle."""

import math

import numpy as np
import pytest

from hyperres import scattering as sc
from hyperres import traces as tr
from hyperres.errors import (CapSensitivityError, NumericalBudgetError,
                             ValidationError)
from hyperres.potentials import HyperbolicDim, RadialPotential

DIM2 = HyperbolicDim(2)
DIM1 = HyperbolicDim(1)
V0 = RadialPotential("zero")
VBUMP = RadialPotential("bump", 1.0, 1.0)
WELL = RadialPotential("well", amplitude=7.0, radius=1.0)


@pytest.fixture(scope="module")
def grid20():
    # moderate grid shared by the end-to-end heat tests in this module
    return sc.scattering_phase(VBUMP, DIM2, sc.default_xi_grid(20.0))


@pytest.fixture(scope="module")
def grid20_double():
    return sc.scattering_phase(VBUMP.scaled(2.0), DIM2, sc.default_xi_grid(20.0))


class TestWaveInvariants:
    def test_zero_potential(self):
        wi = tr.wave_invariants(V0, DIM2)
        assert wi.a[1] == 0.0 and wi.a[2] == 0.0

    def test_h3_a2_reduces_to_intV2(self):
        # (2n - n^2)/6 vanishes at n = 2: a_2 = intV2/(32 pi)
        wi = tr.wave_invariants(VBUMP, DIM2)
        assert wi.a[2] == pytest.approx(wi.intV2 / (32 * math.pi), rel=1e-12)

    def test_sign_of_a1(self):
        assert tr.wave_invariants(VBUMP, DIM2).a[1] < 0
        assert tr.wave_invariants(VBUMP.scaled(-1.0), DIM2).a[1] > 0

    def test_definitional_relations(self):
        for dim in (DIM1, DIM2):
            wi = tr.wave_invariants(VBUMP, dim)
            n = dim.n
            pref = math.pi ** (-n / 2)
            assert wi.a[1] == pytest.approx(-0.25 * pref * wi.intV, rel=1e-12)
            assert wi.a[2] == pytest.approx(
                pref / 32 * ((2 * n - n * n) / 6 * wi.intV + wi.intV2), rel=1e-12)


class TestTestFunction:
    def test_support_and_evenness(self):
        psi = tr.cosine_window(1.0, 3.0, power=3)
        assert psi.psi(np.array([0.5, 1.0, 3.0, 4.0])) == pytest.approx(0.0)
        t = np.array([1.3, 2.2, 2.9])
        assert psi.psi(-t) == pytest.approx(psi.psi(t))

    def test_transform_residual(self):
        # closed-form transform vs dense numerical Fourier integral
        psi = tr.cosine_window(1.0, 3.0, power=3)
        t = np.linspace(1.0, 3.0, 20001)
        vals = psi.psi(t)
        for xi in (0.0, 0.9, 2.7, 7.3):
            num = 2.0 * np.trapezoid(vals * np.cos(xi * t), t)
            assert abs(float(psi.psi_hat(np.array([xi]))[0]) - num) < 1e-8

    def test_pair_exp_closed_form(self):
        psi = tr.cosine_window(1.0, 3.0, power=2)
        t = np.linspace(1.0, 3.0, 40001)
        vals = psi.psi(t)
        for kap in (0.805, -1.5 + 2.0j):
            num = 2.0 * np.trapezoid(vals * np.exp(kap * t), t)
            assert abs(psi.pair_exp(kap) - num) < 1e-9 * max(1.0, abs(num))

    def test_pair_cos_eigenvalue_identity(self):
        # the eigenvalue term equals the cosh pairing for lambda < n^2/4
        psi = tr.cosine_window(1.0, 3.0, power=3)
        lam = 0.352
        c = math.sqrt(DIM2.n ** 2 / 4 - lam)
        t = np.linspace(1.0, 3.0, 40001)
        num = 2.0 * np.trapezoid(psi.psi(t) * np.cosh(c * t), t)
        assert psi.pair_cos(lam, DIM2) == pytest.approx(num, rel=1e-10)

    def test_gaussian_window(self):
        g = tr.gaussian_window(0.4)
        assert not g.proper
        assert g.psi_hat(np.array([2.0]))[0] == pytest.approx(math.exp(-1.6))
        assert g.pair_cos(1.25, DIM2) == pytest.approx(math.exp(-0.4 * (1.25 - 1.0)))


class TestEigenvalueOracle:
    def test_free_and_shallow_empty(self):
        assert tr.eigenvalue_oracle(V0, DIM2, 0) == []
        assert tr.eigenvalue_oracle(VBUMP, DIM2, 0) == []

    def test_deep_well_single_state(self):
        vals = tr.eigenvalue_oracle(WELL, DIM2, 0)
        assert len(vals) == 1
        assert 0.0 < vals[0] < 1.0
        assert tr.eigenvalue_oracle(WELL, DIM2, 1) == []

    def test_validation(self):
        with pytest.raises(ValidationError):
            tr.eigenvalue_oracle(WELL, DIM2, 0, r_cap=5.0)
        with pytest.raises(ValidationError):
            tr.eigenvalue_oracle(WELL, DIM2, 0, mesh=100)

    def test_cap_sensitivity_guard(self):
        # a barely-bound state near threshold moves with the cap
        shallow = RadialPotential("well", amplitude=5.05, radius=1.0)
        try:
            vals = tr.eigenvalue_oracle(shallow, DIM2, 0, r_cap=12.0, mesh=2000)
            assert vals == [] or vals[0] < 1.0
        except CapSensitivityError:
            pass  # acceptable outcome for a threshold state


class TestHeatTrace:
    def test_zero_potential_heat_is_zero(self):
        pg = sc.scattering_phase(V0, DIM2, sc.default_xi_grid(3.0), L_max=3)
        curve = tr.heat_trace(pg, DIM2, [], 0, np.geomspace(0.5, 5.0, 10))
        assert np.max(np.abs(curve.value)) < 1e-7

    def test_assembly_identity(self, grid20):
        tv = np.geomspace(0.1, 1.0, 12)
        curve = tr.heat_trace(grid20, DIM2, [0.35], 2, tv)
        recon = curve.phase_integral + curve.eigencontrib + 0.5 * curve.m_half
        assert np.allclose(curve.value, recon, rtol=0, atol=0)

    def test_tail_budget_error(self, grid20):
        with pytest.raises(NumericalBudgetError):
            tr.heat_trace(grid20, DIM2, [], 0, np.array([1e-5]))

    def test_smallt_leading_coefficient(self, grid20):
        # value * (4t)^{(n+1)/2 - 1} -> pi^{-1/2} a_1 at small t
        wi = tr.wave_invariants(VBUMP, DIM2)
        fit = sc.phase_asymptotics_fit(grid20, DIM2, K=2)
        t = np.array([0.08])
        curve = tr.heat_trace(grid20, DIM2, [], 0, t,
                              poly_coefficients=fit.coefficients)
        lead = curve.value[0] * (4 * t[0]) ** 0.5
        assert abs(lead / (wi.a[1] / math.sqrt(math.pi)) - 1) < 0.02

    def test_linearity_of_a1(self, grid20, grid20_double):
        # doubling V doubles the fitted k=1 coefficient to < 1%
        tv = np.geomspace(0.05, 1.6, 40)
        f1 = tr.heat_smallt_fit(tr.heat_trace(grid20, DIM2, [], 0, tv), DIM2, K=3)
        f2 = tr.heat_smallt_fit(tr.heat_trace(grid20_double, DIM2, [], 0, tv), DIM2, K=3)
        assert abs(f2.coefficients[0] / f1.coefficients[0] - 2.0) < 0.02

    def test_linear_response_scaling(self):
        # value(t; eps V)/eps converges as eps -> 0 (first-order Born regime)
        tv = np.array([0.5])
        vals = []
        for eps in (0.2, 0.1):
            pg = sc.scattering_phase(VBUMP.scaled(eps), DIM2, sc.default_xi_grid(8.0))
            vals.append(tr.heat_trace(pg, DIM2, [], 0, tv).value[0] / eps)
        assert abs(vals[1] / vals[0] - 1.0) < 0.03

    def test_csv(self, grid20, tmp_path):
        curve = tr.heat_trace(grid20, DIM2, [], 0, np.geomspace(0.1, 1.0, 5))
        path = tmp_path / "heat.csv"
        curve.to_csv(path)
        assert path.read_text().splitlines()[0] == "t,value,phase_integral,eigencontrib"

    def test_fit_needs_decades(self, grid20):
        curve = tr.heat_trace(grid20, DIM2, [], 0, np.geomspace(0.1, 0.3, 6))
        with pytest.raises(ValidationError):
            tr.heat_smallt_fit(curve, DIM2, K=2)


class TestThetaAndPairings:
    def test_theta_zero_for_free(self):
        pg = sc.scattering_phase(V0, DIM2, sc.default_xi_grid(3.0), L_max=3)
        psi = tr.cosine_window(1.0, 3.0)
        assert abs(tr.theta_reconstruction(pg, [], 0, psi, DIM2)) < 1e-8

    def test_heat_theta_gaussian_consistency(self, grid20):
        # heat trace equals (1/sqrt(4 pi t)) (Theta_V, gaussian) pairing
        fit = sc.phase_asymptotics_fit(grid20, DIM2, K=2)
        for t in (0.4, 1.0):
            th = tr.theta_reconstruction(grid20, [0.35], 1, tr.gaussian_window(t), DIM2)
            hv = tr.heat_trace(grid20, DIM2, [0.35], 1, np.array([t])).value[0]
            assert abs(th / hv - 1.0) < 1e-6

    def test_u0_pairing_and_free_sum(self):
        # Guillarmou-Naud resummation: (1/2) sum m_0(-k) e^{-(k+n/2)|t|} = u_0
        psi = tr.cosine_window(1.0, 3.0, power=3)
        total, bound = tr.free_resonance_pairing(DIM1, psi)
        ref = tr.u0_pairing(DIM1, psi)
        assert abs(total - ref) <= max(bound, 1e-12)
        assert tr.u0_pairing(DIM2, psi) == 0.0

    def test_levinson_heat_crosscheck(self, grid20):
        # t->0 limit of the phase integral minus its fitted singular part
        # tends to -(d + m/2); for the bump d = m = 0
        fit = sc.phase_asymptotics_fit(grid20, DIM2, K=2)
        t = np.array([0.05])
        curve = tr.heat_trace(grid20, DIM2, [], 0, t,
                              poly_coefficients=fit.coefficients)
        c1 = fit.coefficients[0]
        singular = c1 * math.sqrt(math.pi / t[0]) / 2.0
        assert abs(curve.phase_integral[0] - singular) < 0.01

    def test_poisson_requires_proper_testfunction(self, grid20):
        from hyperres.resonances import ResonanceList
        with pytest.raises(ValidationError):
            tr.poisson_pairing(DIM2, grid20, [], 0,
                               ResonanceList(dim=DIM2, entries=[]),
                               tr.gaussian_window(0.5))
