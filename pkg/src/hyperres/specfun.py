"""Complex special functions for the hyperbolic resolvent kernels.

Conventions
-----------
All Legendre functions are taken on the real ray x > 1 ("type 3").  The
normalized Legendre function of the second kind is

    Qn_nu^mu(x) = e^{-i pi mu} Q_nu^mu(x) / Gamma(mu + nu + 1),

entire in both indices, evaluated through the descending hypergeometric
representation

    Qn_nu^mu(x) = sqrt(pi) 2^{-nu-1} (x^2-1)^{mu/2} x^{-nu-mu-1}
                  * sum_k (a)_k (b)_k / (Gamma(c+k) k!) x^{-2k},

with a = (nu+mu)/2 + 1, b = (nu+mu+1)/2, c = nu + 3/2.  The series converges
for every x > 1; accuracy near x = 1 with large mu is limited by term
cancellation, which is estimated and enforced against the requested
tolerance.

P_nu^{-mu}(x) uses the Pfaff-transformed ascending series

    P_nu^{-mu}(x) = z^{mu/2} ((1+x)/2)^{-(nu+1)}
                    * sum_k (nu+1)_k (mu+nu+1)_k / (Gamma(mu+1+k) k!) z^k,

z = (x-1)/(x+1) in [0,1), which also converges for every x > 1; for large x
a connection-formula route through two Q evaluations is used instead, with a
removable-singularity average near the zeros of cos(pi nu).

The load-bearing identity (Legendre connection formula)

    Qn_{-nu-1}^mu(x)/Gamma(mu+nu+1) - Qn_nu^mu(x)/Gamma(mu-nu)
        = cos(pi nu) P_nu^{-mu}(x)

is exercised by the test suite at 1e-10.

All functions broadcast over numpy arrays in nu / x and are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma as _loggamma
from scipy.special import rgamma as _rgamma

from .errors import NonConvergenceError, PoleError

DEFAULT_TOL = 1e-12
SERIES_MAX_TERMS = 30000
# switch point between the near-argument and descending representations of P
P_LARGE_X = 9.0
# below this |cos(pi nu)| the connection-formula division is replaced by a
# removable-singularity average in nu
_COS_GUARD = 0.05
_AVG_STEP = 0.03


def log_gamma(z):
    """Principal-branch log Gamma for complex z (vectorized).

    Raises PoleError at nonpositive integers.
    """
    z = np.asarray(z, dtype=complex)
    on_pole = (np.abs(z.imag) == 0.0) & (z.real <= 0.0) & (z.real == np.round(z.real))
    if np.any(on_pole):
        raise PoleError(f"log_gamma pole at z={z[on_pole].ravel()[0]}")
    out = _loggamma(z)
    return out if out.ndim else complex(out)


def reciprocal_gamma(z):
    """1/Gamma(z), entire; zero at nonpositive integers (vectorized)."""
    out = _rgamma(np.asarray(z, dtype=complex))
    return out if out.ndim else complex(out)


def _circle_average(f, h):
    """Average f over +-h, +-ih and Richardson-combine two radii.

    For f analytic this removes the removable singularity at 0 with O(h^8)
    error (the circle average is f(0) + c4 h^4 + c8 h^8 + ...).
    """
    def avg(r):
        return sum(f(d) for d in (r, -r, 1j * r, -1j * r)) / 4.0
    return (16.0 * avg(h / 2.0) - avg(h)) / 15.0


def _restart_coefficient(a, b, k):
    # (a)_{k+1} (b)_{k+1} / (k+1)!  as a direct product; used to restart the
    # regularized series after an exact nonpositive-integer hit of c + k
    p = 1.0 + 0.0j
    for j in range(k + 1):
        p = p * (a + j) * (b + j) / (j + 1.0)
    return p


def _reg_2f1_series(a, b, c, w, tol, max_terms=SERIES_MAX_TERMS):
    """Regularized Gauss series  sum_k (a)_k (b)_k w^k / (Gamma(c+k) k!).

    Broadcasts over arrays.  Returns (value, lost) where lost is the
    max-term/|sum| cancellation ratio, used by callers to police accuracy.
    """
    a, b, c, w = np.broadcast_arrays(
        np.asarray(a, dtype=complex), np.asarray(b, dtype=complex),
        np.asarray(c, dtype=complex), np.asarray(w, dtype=complex))
    shape = a.shape
    a, b, c, w = (np.ravel(v).copy() for v in (a, b, c, w))
    term = _rgamma(c).astype(complex)
    total = np.zeros_like(term)
    peak = np.zeros(term.shape, dtype=float)
    active = np.ones(term.shape, dtype=bool)
    prev_mag = np.full(term.shape, np.inf)
    for k in range(max_terms):
        total[active] += term[active]
        mag = np.abs(term)
        np.maximum(peak, mag, out=peak)
        small = mag <= 0.05 * tol * np.maximum(np.abs(total), 1e-300)
        active &= ~(small & (mag <= prev_mag) & (k > 2))
        if not active.any():
            break
        prev_mag = mag.copy()
        denom = (c + k) * (k + 1.0)
        hit = active & (denom == 0.0)
        ok = active & ~hit
        term[ok] = term[ok] * (a[ok] + k) * (b[ok] + k) * w[ok] / denom[ok]
        if hit.any():
            for i in np.nonzero(hit)[0]:
                term[i] = _restart_coefficient(a[i], b[i], k) * w[i] ** (k + 1)
    else:
        raise NonConvergenceError(
            f"regularized 2F1 series: {int(active.sum())} points not converged "
            f"after {max_terms} terms (|w| up to {np.abs(w[active]).max():.3g})")
    lost = peak / np.maximum(np.abs(total), 1e-300)
    return total.reshape(shape), lost.reshape(shape)


def _series_2f1(a, b, c, x, tol, max_terms=SERIES_MAX_TERMS):
    # plain Gauss series at scalar complex parameters, real x in [0, 1)
    if _is_nonpositive_integer(c):
        raise PoleError(f"gauss_2f1: c={c} is a nonpositive integer")
    term = 1.0 + 0.0j
    total = 0.0 + 0.0j
    for k in range(max_terms):
        total += term
        if abs(term) <= 0.05 * tol * max(abs(total), 1e-300) and k > 2:
            return total
        term = term * (a + k) * (b + k) * x / ((c + k) * (k + 1.0))
    raise NonConvergenceError(f"gauss_2f1 series did not converge at x={x}")


def _is_nonpositive_integer(z, tol=1e-13):
    z = complex(z)
    return abs(z.imag) <= tol and z.real <= tol and abs(z.real - round(z.real)) <= tol


def gauss_2f1(a, b, c, x, tol=DEFAULT_TOL):
    """Gauss hypergeometric 2F1(a, b; c; x) for complex parameters, real
    x in [0, 1).

    Uses the defining series for x <= 0.75 and the 1-x connection formula
    near 1, with a small complex-circle average in c when c - a - b is
    within 1e-6 of an integer (the degenerate case of the connection
    formula).
    """
    a, b, c = complex(a), complex(b), complex(c)
    x = float(x)
    if not 0.0 <= x < 1.0:
        raise ValueError(f"gauss_2f1 requires real x in [0,1), got {x}")
    if _is_nonpositive_integer(c):
        raise PoleError(f"gauss_2f1: c={c} is a nonpositive integer")
    if x <= 0.75:
        return _series_2f1(a, b, c, x, tol)
    cab = c - a - b
    if abs(cab.imag) < 1e-6 and abs(cab.real - round(cab.real)) < 1e-6:
        # removable degeneracy of the 1-x formula: circle average in c
        return complex(_circle_average(lambda d: gauss_2f1(a, b, c + d, x, tol),
                                       _AVG_STEP))
    u = 1.0 - x
    g = np.exp
    f1 = _series_2f1(a, b, a + b - c + 1.0, u, tol)
    f2 = _series_2f1(c - a, c - b, c - a - b + 1.0, u, tol)
    pref1 = g(_loggamma(c) + _loggamma(cab) - _loggamma(c - a) - _loggamma(c - b))
    pref2 = g(_loggamma(c) + _loggamma(-cab) - _loggamma(a) - _loggamma(b))
    return complex(pref1 * f1 + pref2 * u ** cab * f2)


@dataclass(frozen=True)
class LegendreArgs:
    """Argument bundle for the Legendre evaluations.

    nu is the complex degree (nu = s - (n+1)/2), mu >= 0 the real order with
    2*mu a nonnegative integer (mu = l + (n-1)/2), and x = cosh r > 1.
    """
    nu: complex
    mu: float
    x: float

    def __post_init__(self):
        if not self.x > 1.0:
            raise ValueError(f"LegendreArgs requires x > 1, got x={self.x}")
        two_mu = 2.0 * self.mu
        if self.mu < 0 or abs(two_mu - round(two_mu)) > 1e-12:
            raise ValueError(f"LegendreArgs requires mu >= 0 with 2*mu integer, got mu={self.mu}")


def _check_lost(lost, tol, what):
    # peak-term/|sum| is a conservative bound on roundoff amplification;
    # individual rounding errors do not align, so allow a 10x margin
    worst = float(np.max(lost))
    if worst * 2.3e-16 > 10.0 * tol:
        raise NonConvergenceError(
            f"{what}: cancellation leaves ~{worst * 2.3e-16:.2e} relative error, "
            f"above tol={tol:.2e} (descending and near-argument representations "
            f"both exhausted)")


def legendre_Q_norm(nu, mu, x, tol=DEFAULT_TOL, derivative=False):
    """Normalized Legendre function Qn_nu^mu(x) for x > 1 (vectorized).

    Entire in nu (no poles); decays like x^{-nu-1} as x -> infinity.  With
    derivative=True returns (Q, dQ/dx).
    """
    nu = np.asarray(nu, dtype=complex)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 1.0):
        raise ValueError("legendre_Q_norm requires x > 1")
    a = (nu + mu) / 2.0 + 1.0
    b = (nu + mu + 1.0) / 2.0
    c = nu + 1.5
    w = x ** -2.0
    s, lost = _reg_2f1_series(a, b, c, w, tol)
    _check_lost(lost, tol, "legendre_Q_norm")
    pref = np.sqrt(np.pi) * np.exp(-(nu + 1.0) * np.log(2.0)
                                   + (-nu - mu - 1.0) * np.log(x)) * (x * x - 1.0) ** (mu / 2.0)
    q = pref * s
    if not derivative:
        return q if q.ndim else complex(q)
    sp, lost_p = _reg_2f1_series(a + 1.0, b + 1.0, c + 1.0, w,
                                 tol)  # d/dw of regularized series
    sp = sp * a * b
    _check_lost(lost_p, tol, "legendre_Q_norm derivative")
    # d/dx [pref * S(x^-2)]:  S' in w times dw/dx = -2 x^-3, plus prefactor terms
    dlog_pref = mu * x / (x * x - 1.0) + (-nu - mu - 1.0) / x
    dq = pref * (dlog_pref * s + sp * (-2.0) * x ** -3.0)
    if q.ndim:
        return q, dq
    return complex(q), complex(dq)


def _P_near(nu, mu, x, tol, derivative):
    z = (x - 1.0) / (x + 1.0)
    y = (1.0 + x) / 2.0
    a = nu + 1.0
    b = mu + nu + 1.0
    c = mu + 1.0
    t, lost = _reg_2f1_series(a, b, c, z, tol)
    _check_lost(lost, tol, "legendre_P_negmu")
    pref = z ** (mu / 2.0) * y ** (-(nu + 1.0))
    p = pref * t
    if not derivative:
        return p, None
    tp, lost_p = _reg_2f1_series(a + 1.0, b + 1.0, c + 1.0, z, tol)
    tp = tp * a * b
    _check_lost(lost_p, tol, "legendre_P_negmu derivative")
    dz = 2.0 / (x + 1.0) ** 2
    dlog_pref = (mu / 2.0) / z * dz - (nu + 1.0) / y * 0.5  # z > 0 since x > 1
    dp = pref * (dlog_pref * t + tp * dz)
    return p, dp


def _P_far(nu, mu, x, tol, derivative):
    # descending route: P = [Qn_{-nu-1}/Gamma(mu+nu+1) - Qn_nu/Gamma(mu-nu)] / cos(pi nu)
    cospnu = np.cos(np.pi * nu)
    qa = legendre_Q_norm(-nu - 1.0, mu, x, tol, derivative)
    qb = legendre_Q_norm(nu, mu, x, tol, derivative)
    if derivative:
        qa, dqa = qa
        qb, dqb = qb
    ra = _rgamma(mu + nu + 1.0)
    rb = _rgamma(mu - nu)
    p = (qa * ra - qb * rb) / cospnu
    dp = (dqa * ra - dqb * rb) / cospnu if derivative else None
    return p, dp


def legendre_P_negmu(nu, mu, x, tol=DEFAULT_TOL, derivative=False):
    """Associated Legendre P_nu^{-mu}(x) for x > 1 (vectorized).

    Near-argument series for x < P_LARGE_X, connection-formula route above;
    near the removable zeros of cos(pi nu) the latter is replaced by a
    4-point average in nu (series-in-deviation, O(h^4)).  With
    derivative=True returns (P, dP/dx).  Raises on overflow with the scale.
    """
    nu = np.asarray(nu, dtype=complex)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 1.0):
        raise ValueError("legendre_P_negmu requires x > 1")
    nu_b, x_b = np.broadcast_arrays(nu, x)
    p = np.empty(nu_b.shape, dtype=complex)
    dp = np.empty(nu_b.shape, dtype=complex) if derivative else None
    near = x_b < P_LARGE_X
    if near.any():
        pn, dpn = _P_near(nu_b[near], mu, x_b[near], tol, derivative)
        p[near] = pn
        if derivative:
            dp[near] = dpn
    far = ~near
    if far.any():
        nuf, xf = nu_b[far], x_b[far]
        safe = np.abs(np.cos(np.pi * nuf)) >= _COS_GUARD
        pf = np.empty(nuf.shape, dtype=complex)
        dpf = np.empty(nuf.shape, dtype=complex) if derivative else None
        if safe.any():
            v, dv = _P_far(nuf[safe], mu, xf[safe], tol, derivative)
            pf[safe] = v
            if derivative:
                dpf[safe] = dv
        if (~safe).any():
            pf[~safe] = _circle_average(
                lambda d: _P_far(nuf[~safe] + d, mu, xf[~safe], tol, False)[0],
                _AVG_STEP)
            if derivative:
                dpf[~safe] = _circle_average(
                    lambda d: _P_far(nuf[~safe] + d, mu, xf[~safe], tol, True)[1],
                    _AVG_STEP)
        p[far] = pf
        if derivative:
            dp[far] = dpf
    if not np.all(np.isfinite(p)):
        bad = ~np.isfinite(p)
        scale = mu / 2.0 * np.log(np.max(x_b[bad]) ** 2 - 1.0)
        raise OverflowError(
            f"legendre_P_negmu overflow at x={x_b[bad].ravel()[0]:.3g} "
            f"(log-scale ~ {scale:.1f})")
    if derivative:
        if p.ndim:
            return p, dp
        return complex(p), complex(dp)
    return p if p.ndim else complex(p)


def legendre_P_negmu_args(args: LegendreArgs, tol=DEFAULT_TOL):
    """LegendreArgs wrapper for legendre_P_negmu."""
    return legendre_P_negmu(args.nu, args.mu, args.x, tol)


def legendre_Q_norm_args(args: LegendreArgs, tol=DEFAULT_TOL):
    """LegendreArgs wrapper for legendre_Q_norm."""
    return legendre_Q_norm(args.nu, args.mu, args.x, tol)


def connection_residual(nu, mu, x, tol=DEFAULT_TOL):
    """Residual of the Legendre connection formula at (nu, mu, x).

    Qn_{-nu-1}^mu/Gamma(mu+nu+1) - Qn_nu^mu/Gamma(mu-nu) - cos(pi nu) P_nu^{-mu},
    normalized by the largest magnitude among the three terms.
    """
    nu = np.asarray(nu, dtype=complex)
    t1 = legendre_Q_norm(-nu - 1.0, mu, x, tol) * _rgamma(mu + nu + 1.0)
    t2 = legendre_Q_norm(nu, mu, x, tol) * _rgamma(mu - nu)
    t3 = np.cos(np.pi * nu) * legendre_P_negmu(nu, mu, x, tol)
    scale = np.maximum(np.maximum(np.abs(t1), np.abs(t2)), np.maximum(np.abs(t3), 1e-300))
    res = np.abs(t1 - t2 - t3) / scale
    return res if res.ndim else float(res)
