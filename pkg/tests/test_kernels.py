"""Free resolvent and spectral-measure kernel tests."""

import math

import numpy as np
import pytest

from hyperres.errors import PoleError
from hyperres.kernels import (KernelQuery, free_resolvent,
                              free_spectral_kernel, kernel_table,
                              spectral_weight)
from hyperres.potentials import HyperbolicDim

DIM2 = HyperbolicDim(2)
DIM1 = HyperbolicDim(1)


def descending_series_resolvent(n, s, r, K=200):
    """Independent implementation of the large-argument expansion:
    pi^{-n/2} 2^{-s-1} Gamma(s)/Gamma(s-n/2+1) sum_k a_k(s) cosh(d)^{-s-2k},
    a_0 = 1, via the regularized hypergeometric coefficients."""
    from scipy.special import loggamma, rgamma
    a = (s - (n + 1) / 2 + (n - 1) / 2) / 2 + 1
    b = (s - (n + 1) / 2 + (n - 1) / 2 + 1) / 2
    c = s - n / 2 + 1
    x = math.cosh(r)
    coeff = 1.0 + 0.0j
    total = 0.0
    for k in range(K):
        a_k = coeff  # (a)_k (b)_k / ((c)_k k!)
        total += a_k * x ** (-s - 2 * k)
        coeff = coeff * (a + k) * (b + k) / ((c + k) * (k + 1))
    pref = math.pi ** (-n / 2) * 2.0 ** (-s - 1) \
        * np.exp(loggamma(s)) * rgamma(s - n / 2 + 1)
    return pref * total


class TestFreeResolvent:
    def test_h3_closed_form_grid(self):
        for s in (1 + 3j, 0.4 - 1.1j, 2.5):
            for r in (0.1, 0.8, 2.5):
                mine = free_resolvent(KernelQuery(DIM2, r=r, s=s))
                ref = np.exp(-(s - 1) * r) / (4 * math.pi * math.sinh(r))
                assert abs(mine - ref) / abs(ref) < 1e-10

    def test_euclidean_short_distance_scale(self):
        # 1/(4 pi r) singularity scale at the small end of the envelope
        r = 0.05
        mine = free_resolvent(KernelQuery(DIM2, r=r, s=1.5 + 0.5j))
        assert abs(mine * 4 * math.pi * r - 1.0) < 0.05

    def test_descending_series_agreement(self):
        # Eq-pattern check for cosh r >= 3, independent series implementation
        for n in (1, 2, 3):
            dim = HyperbolicDim(n)
            for s, r in ((1.2 + 0.9j, 2.0), (0.8 - 1.5j, 3.0)):  # cosh r >= 3
                mine = free_resolvent(KernelQuery(dim, r=r, s=s))
                ref = descending_series_resolvent(n, s, r)
                assert abs(mine - ref) / abs(ref) < 1e-10

    def test_pole_error_even_dimension(self):
        with pytest.raises(PoleError):
            free_resolvent(KernelQuery(DIM1, r=1.0, s=-2.0))

    def test_pole_cancels_odd_dimension(self):
        # H^3: Gamma poles cancel against zeros of Qn
        val = free_resolvent(KernelQuery(DIM2, r=1.0, s=-2.0))
        ref = np.exp(3.0) / (4 * math.pi * math.sinh(1.0))
        assert abs(val - ref) / abs(ref) < 1e-9

    def test_radial_equation_residual(self):
        # l = 0 radial operator annihilates the kernel off the diagonal
        s, r, h = 1.3 + 0.7j, 1.1, 1e-4
        f = lambda rr: free_resolvent(KernelQuery(DIM2, r=rr, s=s))
        y0, yp, ym = f(r), f(r + h), f(r - h)
        d1 = (yp - ym) / (2 * h)
        d2 = (yp - 2 * y0 + ym) / h ** 2
        resid = d2 + 2 / math.tanh(r) * d1 + s * (2 - s) * y0
        assert abs(resid) / abs(y0) < 1e-6


class TestFreeSpectralKernel:
    def test_matches_resolvent_difference(self):
        for xi in (0.3, 1.7, 6.0):
            for r in (0.05, 1.0, 2.5):
                k0 = free_spectral_kernel(KernelQuery(DIM2, r=r, xi=xi))
                rm = free_resolvent(KernelQuery(DIM2, r=r, s=1 - 1j * xi))
                rp = free_resolvent(KernelQuery(DIM2, r=r, s=1 + 1j * xi))
                ref = (xi / (2j * math.pi)) * (rm - rp)
                assert abs(k0 - ref.real) < 1e-9 * max(abs(ref), 1.0)
                assert abs(ref.imag) < 1e-12 * max(abs(ref), 1.0)

    def test_diagonal_limit(self):
        # finite Plancherel density; matches r = 1e-3, 1e-4 to 4 digits
        for dim in (DIM1, DIM2):
            xi = 1.3
            diag = free_spectral_kernel(KernelQuery(dim, r=0.0, xi=xi))
            for r in (1e-3, 1e-4):
                assert abs(free_spectral_kernel(KernelQuery(dim, r=r, xi=xi))
                           / diag - 1) < 1e-4
        # H^3 closed form xi^2/(4 pi^2)
        got = free_spectral_kernel(KernelQuery(DIM2, r=0.0, xi=2.0))
        assert got == pytest.approx(4.0 / (4 * math.pi ** 2), rel=1e-12)

    def test_evenness_in_xi(self):
        for r in (0.4, 1.7):
            a = free_spectral_kernel(KernelQuery(DIM2, r=r, xi=1.1))
            b = free_spectral_kernel(KernelQuery(DIM2, r=r, xi=-1.1))
            assert a == pytest.approx(b, rel=1e-12)

    def test_h2_real(self):
        val = free_spectral_kernel(KernelQuery(DIM1, r=0.7, xi=0.9))
        assert isinstance(val, float)
        assert spectral_weight(DIM1, 0.0) == 0.0


class TestKernelTable:
    def test_shapes_and_validation(self):
        r, vals = kernel_table(DIM2, np.linspace(0.1, 2.0, 5), s=1.2 + 1j)
        assert vals.shape == (5,)
        with pytest.raises(ValueError):
            KernelQuery(DIM2, r=1.0)
        with pytest.raises(ValueError):
            KernelQuery(DIM2, r=1.0, s=1.0, xi=1.0)
        with pytest.raises(ValueError):
            free_resolvent(KernelQuery(DIM2, r=0.0, s=1.5))
