"""Point evaluations of the free resolvent and free spectral-measure kernels.

The free resolvent kernel on H^{n+1} at geodesic distance r is

    R_0(s; r) = (2 pi)^{-(n+1)/2} Gamma(s) (sinh r)^{-mu} Qn_nu^mu(cosh r),

mu = (n-1)/2, nu = s - (n+1)/2.  In H^3 this collapses to
e^{-(s-1) r} / (4 pi sinh r), the test oracle for this module.

The free spectral-measure kernel (restriction of the resolvent jump to the
critical line) is

    K_0(xi; r) = c_n(xi) (sinh r)^{-mu} P_{-1/2+i xi}^{-mu}(cosh r),
    c_n(xi) = (2 pi)^{-(n+3)/2} xi sinh(pi xi) |Gamma(n/2 + i xi)|^2 .

The constant follows from K_0 = (xi / 2 pi i)[R_0(n/2 - i xi) - R_0(n/2 + i xi)]
and the Legendre connection formula, and reproduces the Plancherel density
xi^2/(4 pi^2) on the H^3 diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma

from .errors import PoleError
from .potentials import HyperbolicDim
from .specfun import (DEFAULT_TOL, _circle_average, legendre_P_negmu,
                      legendre_Q_norm, reciprocal_gamma)

_DIAG_SWITCH = 1e-6


@dataclass(frozen=True)
class KernelQuery:
    """Evaluation point: spectral parameter (s or xi) at geodesic distance r."""
    dim: HyperbolicDim
    r: float
    s: complex = None
    xi: float = None

    def __post_init__(self):
        if (self.s is None) == (self.xi is None):
            raise ValueError("KernelQuery needs exactly one of s, xi")
        if self.r < 0:
            raise ValueError("KernelQuery requires r >= 0")


def _resolvent_core(dim: HyperbolicDim, s, r, tol):
    n = dim.n
    mu = dim.mu0
    s = np.asarray(s, dtype=complex)
    nu = s - (n + 1) / 2.0
    q = legendre_Q_norm(nu, mu, np.cosh(r), tol=tol)
    pref = (2.0 * math.pi) ** (-(n + 1) / 2.0) * np.sinh(r) ** (-mu)
    return pref * np.exp(loggamma(s)) * q


def free_resolvent(q: KernelQuery, tol: float = DEFAULT_TOL) -> complex:
    """Free resolvent kernel R_0(s; r) for r > 0.

    Gamma(s) poles at nonpositive integers are genuine only for n+1 even; in
    odd dimensions they cancel against zeros of Qn and the removable value is
    returned via a circle average.
    """
    if q.r <= 0:
        raise ValueError("free_resolvent requires r > 0 (diagonal is singular)")
    s = complex(q.s)
    n = q.dim.n
    near_pole = abs(s.imag) < 1e-8 and s.real <= 1e-8 and \
        abs(s.real - round(s.real)) < 1e-8
    if near_pole:
        if n % 2 == 1:
            k = int(round(s.real))
            residue = (-1) ** (-k) / math.factorial(-k)
            raise PoleError(
                f"free_resolvent: s={s} is a resonance pole for n+1 even "
                f"(Gamma residue {residue:+.3e})")
        return complex(_circle_average(
            lambda d: _resolvent_core(q.dim, s + d, q.r, tol), 0.02))
    out = _resolvent_core(q.dim, s, q.r, tol)
    return complex(out)


def spectral_weight(dim: HyperbolicDim, xi):
    """c_n(xi) including the corrected (2 pi)^{-(n+3)/2} constant."""
    n = dim.n
    xi = np.asarray(xi, dtype=float)
    g2 = np.exp(2.0 * np.real(loggamma(n / 2.0 + 1j * xi)))
    return (2.0 * math.pi) ** (-(n + 3) / 2.0) * xi * np.sinh(math.pi * xi) * g2


def free_spectral_kernel(q: KernelQuery, tol: float = 1e-10) -> float:
    """Free spectral-resolution kernel K_0(xi; r); real, smooth at r = 0.

    Default tolerance 1e-10: the conical Legendre evaluation loses a couple
    of digits to oscillatory cancellation at large |xi|, which is ample for
    the 1e-9 contract of this kernel.
    """
    xi = float(q.xi)
    mu = q.dim.mu0
    cn = float(spectral_weight(q.dim, xi))
    if q.r < _DIAG_SWITCH:
        # removable 0/0 at the diagonal: near-1 expansion limit
        return cn * 2.0 ** (-mu) * float(np.real(reciprocal_gamma(1.0 + mu)))
    p = legendre_P_negmu(-0.5 + 1j * xi, mu, math.cosh(q.r), tol=tol)
    return cn * math.sinh(q.r) ** (-mu) * float(np.real(p))


def kernel_table(dim: HyperbolicDim, r_values, s=None, xi=None,
                 tol: float = DEFAULT_TOL):
    """(r, value) table for CSV dumps; value complex for the resolvent,
    real for the spectral kernel."""
    r_values = np.asarray(r_values, dtype=float)
    if s is not None:
        vals = np.array([free_resolvent(KernelQuery(dim, r=float(r), s=s), tol)
                         for r in r_values])
    else:
        vals = np.array([free_spectral_kernel(KernelQuery(dim, r=float(r), xi=xi),
                                              max(tol, 1e-10))
                         for r in r_values], dtype=complex)
    return r_values, vals
