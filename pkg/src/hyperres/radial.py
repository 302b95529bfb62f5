"""Per-channel radial engine on H^{n+1}.

Separating off the degree-l spherical harmonics reduces Delta + V - s(n-s)
to the channel ODE

    u'' + n coth(r) u' + (s(n-s) - V(r) - l(l+n-1)/sinh^2 r) u = 0 ,

whose regular solution is launched with Frobenius data u ~ r^l (1 + c2 r^2)
and integrated outward.  Beyond the support of V the solution decomposes as

    u = A psi(n-s; r) + B psi(s; r),
    psi(s; r) = (sinh r)^{-(n-1)/2} Qn_{s-(n+1)/2}^{mu}(cosh r),
    mu = l + (n-1)/2,

with the exact free cross-Wronskian  sinh^n r W[psi(n-s), psi(s)] =
-sin(pi (s - n/2)).  Closed forms used throughout (Frobenius-normalized
regular solution, V = 0):

    A_0(s) =  2^mu Gamma(1+mu) / (cos(pi nu) Gamma(s+l)),
    B_0(s) = -2^mu Gamma(1+mu) / (cos(pi nu) Gamma(l+n-s)),
    sinh^n r W[u_0, psi(s)] = -2^mu Gamma(1+mu) / Gamma(s+l).

The channel Jost function D_l is the modified Wronskian of the integrated
regular solution with psi(s), normalized so that the free function is
identically 1 in odd dimensions (n even) and 1/Gamma(s+l) in even dimensions
(n odd, where the free resonances at -l, -l-1, ... must survive).  Zeros of
D_l in Re s > n/2 are channel eigenvalue parameters; other zeros are channel
resonances.

Everything is pure in (sector, s, V); the batched entry points integrate
many spectral parameters in one vectorized ODE solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import loggamma

from .errors import NearSingularWronskianError, StiffnessError
from .potentials import HyperbolicDim, RadialPotential
from .specfun import DEFAULT_TOL, legendre_Q_norm

ODE_RTOL = 1e-10
ODE_ATOL = 1e-14
# per-chunk cap on ln growth of the integrated solution before renormalizing
_CHUNK_LOG_BUDGET = 150.0
_MATCH_DELTA = 0.25
_WRONSKIAN_FLOOR = 1e-10


@dataclass(frozen=True)
class Sector:
    """Angular-momentum channel: degree l on S^n with order mu = l + (n-1)/2."""
    dim: HyperbolicDim
    l: int

    def __post_init__(self):
        if self.l < 0:
            raise ValueError("Sector requires l >= 0")

    @property
    def mu(self) -> float:
        return self.l + (self.dim.n - 1) / 2.0

    @property
    def multiplicity(self) -> int:
        return self.dim.multiplicity(self.l)

    @property
    def centrifugal(self) -> float:
        return self.l * (self.l + self.dim.n - 1)


@dataclass
class RadialSolution:
    """Integrated channel trajectory; stored values carry exp(log_scale)."""
    grid: np.ndarray
    u: np.ndarray
    du: np.ndarray
    s: complex
    sector: Sector
    log_scale: float = 0.0

    def at_end(self):
        return self.u[-1], self.du[-1]


@dataclass
class ChannelDecomposition:
    """Coefficients of the growing/decaying branches past the support."""
    s: complex
    A_grow: complex
    B_decay: complex
    r_match: float
    residual: float = 0.0


def launch_radius(sector: Sector, lam_scale: float) -> float:
    """Frobenius launch radius: small enough that the truncated series error
    (~ (lam r0^2 / 8)^2) stays below 1e-12, per the coth/sinh singularities."""
    r0 = 1e-3 * min(1.0, 1.0 / (sector.l + 1))
    return min(r0, 2.5e-3 / math.sqrt(1.0 + lam_scale))


def _frobenius_c2(sector: Sector, lam, v0: float):
    n, l = sector.dim.n, sector.l
    return -(lam - v0 + l * (l + 2 * n - 1) / 3.0) / (2.0 * (2 * l + n + 1))


def _chunk_points(r0: float, r1: float, l: int, kappa: float):
    pts = [r0]
    r = r0
    dlnr = _CHUNK_LOG_BUDGET / max(l, 1)
    dr = _CHUNK_LOG_BUDGET / max(kappa, 1.0)
    while r < r1:
        r = min(r1, min(r * math.exp(dlnr), r + dr))
        pts.append(r)
    return pts


def _integrate_endpoints(sector: Sector, lam, V: RadialPotential, r_match: float,
                         real: bool = False, rtol: float = ODE_RTOL,
                         t_eval_grid=None):
    """Integrate the regular solution for a batch of spectral values.

    lam = s(n-s) array.  Returns (u, du, log_scale) at r_match, each shaped
    like lam; log_scale holds per-column renormalization plus l*ln(r0).
    With t_eval_grid (single lam only) also returns the dense trajectory.
    """
    n, l = sector.dim.n, sector.l
    lam = np.asarray(lam, dtype=float if real else complex)
    shape = lam.shape
    lam = np.ravel(lam)
    m = lam.size
    cent = sector.centrifugal
    lam_scale = float(np.max(np.abs(lam)))
    r0 = launch_radius(sector, lam_scale)
    v0 = float(V(0.0))
    c2 = _frobenius_c2(sector, lam, v0)
    dtype = float if real else complex
    u = (1.0 + c2 * r0 * r0).astype(dtype)
    du = (l / r0 + (l + 2) * c2 * r0).astype(dtype)
    log_scale = np.full(m, l * math.log(r0))

    def rhs(r, y):
        uu = y[:m]
        vv = y[m:]
        pot = lam - V(r) - cent / math.sinh(r) ** 2
        return np.concatenate([vv, -n / math.tanh(r) * vv - pot * uu])

    kappa = math.sqrt(lam_scale + V.max_abs() + cent + 1.0)
    traj = ([], [], []) if t_eval_grid is not None else None
    for ra, rb in zip(*(lambda p: (p[:-1], p[1:]))(_chunk_points(r0, r_match, l, kappa))):
        y0 = np.concatenate([u, du])
        t_eval = None
        if t_eval_grid is not None:
            t_eval = [t for t in t_eval_grid if ra < t < rb]
            t_eval = np.concatenate([[ra], t_eval, [rb]])
        sol = solve_ivp(rhs, (ra, rb), y0, method="DOP853", rtol=rtol,
                        atol=ODE_ATOL, t_eval=t_eval, dense_output=False)
        if not sol.success:
            raise StiffnessError(
                f"channel ODE failed on [{ra:.3g},{rb:.3g}] (l={l}): {sol.message}")
        if traj is not None:
            traj[0].extend(sol.t[:-1])
            traj[1].extend(sol.y[0, :-1])
            traj[2].extend(sol.y[1, :-1])
        u = sol.y[:m, -1]
        du = sol.y[m:, -1]
        mag = np.maximum(np.abs(u), np.abs(du))
        mag = np.where(mag > 0, mag, 1.0)
        big = mag > 1e50
        if big.any():
            u = np.where(big, u / mag, u)
            du = np.where(big, du / mag, du)
            log_scale = log_scale + np.where(big, np.log(mag), 0.0)
    if traj is not None:
        traj[0].append(r_match)
        traj[1].append(u[0])
        traj[2].append(du[0])
        return (np.asarray(traj[0]), np.asarray(traj[1]), np.asarray(traj[2]),
                float(log_scale[0]))
    return u.reshape(shape), du.reshape(shape), log_scale.reshape(shape)


def integrate_regular(sector: Sector, s: complex, V: RadialPotential,
                      r_match: float, num_points: int = 80) -> RadialSolution:
    """Regular channel solution on a dense grid up to r_match.

    Frobenius-normalized (u ~ r^l near 0, up to the reported log_scale).
    """
    n = sector.dim.n
    lam = complex(s) * (n - complex(s))
    r0 = launch_radius(sector, abs(lam))
    grid = np.geomspace(r0 * 1.0001, r_match * 0.9999, num_points)
    r, u, du, ls = _integrate_endpoints(sector, np.array([lam]), V, r_match,
                                        t_eval_grid=grid)
    return RadialSolution(grid=r, u=u, du=du, s=complex(s), sector=sector,
                          log_scale=ls)


def jost_solution(sector: Sector, s: complex, r, tol: float = DEFAULT_TOL):
    """Free Jost-type solution psi(s; r) and its r-derivative.

    psi(s; r) = (sinh r)^{-(n-1)/2} Qn_{s-(n+1)/2}^{mu}(cosh r); entire in s,
    decays like e^{-s r} up to an r-independent factor.
    """
    n = sector.dim.n
    mu = sector.mu
    nu = np.asarray(s, dtype=complex) - (n + 1) / 2.0
    r = np.asarray(r, dtype=float)
    q, dq = legendre_Q_norm(nu, mu, np.cosh(r), tol=tol, derivative=True)
    pref = np.sinh(r) ** (-(n - 1) / 2.0)
    psi = pref * q
    dpsi = pref * (-(n - 1) / 2.0 / np.tanh(r) * q + np.sinh(r) * dq)
    if np.ndim(psi):
        return psi, dpsi
    return complex(psi), complex(dpsi)


def free_wronskian(dim: HyperbolicDim, s):
    """Exact modified Wronskian sinh^n r W[psi(n-s), psi(s)] = -sin(pi(s - n/2))."""
    return -np.sin(np.pi * (np.asarray(s, dtype=complex) - dim.n / 2.0))


def _log_norm_const(sector: Sector) -> float:
    # 2^mu Gamma(1+mu), the Frobenius/Legendre normalization mismatch
    return sector.mu * math.log(2.0) + math.lgamma(1.0 + sector.mu)


def free_coefficients(sector: Sector, s):
    """Closed-form (A_0, B_0) of the free Frobenius-normalized solution."""
    n, l = sector.dim.n, sector.l
    s = np.asarray(s, dtype=complex)
    nu = s - (n + 1) / 2.0
    cn = np.cos(np.pi * nu)
    norm = np.exp(_log_norm_const(sector))
    a0 = norm / (cn * np.exp(loggamma(s + l)))
    b0 = -norm / (cn * np.exp(loggamma(l + n - s)))
    return a0, b0


def _wronskian_with_jost(sector, s_arr, V, r_match, tol, real_lambda=False,
                         xi=None):
    """sinh^n(r_match) W[u, psi(s)] for a batch, with per-point log scale.

    With real_lambda=True, s_arr is ignored and the solution is integrated in
    real arithmetic at lam = n^2/4 + xi^2 while psi is evaluated at
    s = n/2 + i xi (the critical-line fast path; u is then exactly real).
    """
    n = sector.dim.n
    if real_lambda:
        xi = np.asarray(xi, dtype=float)
        lam = n * n / 4.0 + xi * xi
        s_arr = n / 2.0 + 1j * xi
        u, du, ls = _integrate_endpoints(sector, lam, V, r_match, real=True)
    else:
        s_arr = np.asarray(s_arr, dtype=complex)
        lam = s_arr * (n - s_arr)
        u, du, ls = _integrate_endpoints(sector, lam, V, r_match)
    psi, dpsi = jost_solution(sector, s_arr, r_match, tol)
    w = math.sinh(r_match) ** n * (u * dpsi - du * psi)
    return w, ls, s_arr


def default_r_match(V: RadialPotential) -> float:
    return V.radius + 0.5


def jost_batch(sector: Sector, s_values, V: RadialPotential,
               r_match: float = None, tol: float = DEFAULT_TOL):
    """Normalized channel Jost function D_l at an array of s values.

    Free function is 1 (n even) or 1/Gamma(s+l) (n odd).  Individual exact
    hits of the removable integer degeneracies are nudged off by 1e-9.
    """
    if r_match is None:
        r_match = default_r_match(V)
    n, l = sector.dim.n, sector.l
    s_arr = np.asarray(s_values, dtype=complex)
    shape = s_arr.shape
    s_arr = np.atleast_1d(s_arr).copy()
    if n % 2 == 0:
        # odd spatial dimension: Gamma(s+l) regularizes; exact integer s would
        # give 0 * inf, so shift those points by a removable amount
        bad = (np.abs(s_arr.imag) < 1e-12) & (
            np.abs(s_arr.real - np.round(s_arr.real)) < 1e-12)
        s_arr[bad] += 1e-9 * (1.0 + np.abs(s_arr[bad])) * (1.0 + 1.0j) / math.sqrt(2.0)
    w, ls, _ = _wronskian_with_jost(sector, s_arr, V, r_match, tol)
    log_norm = _log_norm_const(sector)
    if n % 2 == 0:
        d = -w * np.exp(loggamma(s_arr + l) - log_norm + ls)
    else:
        d = -w * np.exp(ls - log_norm)
    if not np.all(np.isfinite(d)):
        raise OverflowError(
            f"jost_batch: non-representable normalization at l={l} "
            f"(log-scale up to {float(np.max(ls)):.1f})")
    d = d.reshape(shape)
    return d if d.ndim else complex(d)


def jost_function(sector: Sector, s: complex, V: RadialPotential,
                  r_match: float = None, tol: float = DEFAULT_TOL) -> complex:
    """Channel Jost function D_l(s); zeros in Re s > n/2 are channel
    eigenvalue parameters, zeros elsewhere channel resonances."""
    return jost_batch(sector, complex(s), V, r_match, tol)


def decompose_at_match(u: RadialSolution, sector: Sector, s: complex,
                       r_match: float, tol: float = DEFAULT_TOL) -> ChannelDecomposition:
    """Match (u, u') at r_match to A psi(n-s) + B psi(s).

    The reconstruction is verified at r_match + 0.25 against a continued
    integration of u; the residual is stored on the result.
    """
    n = sector.dim.n
    s = complex(s)
    wf = complex(free_wronskian(sector.dim, s))
    if abs(wf) < _WRONSKIAN_FLOOR:
        # -sin(pi(s - n/2)) does not depend on r_match: the exceptional set is
        # intrinsic, so report the distance instead of retrying radii
        raise NearSingularWronskianError(
            f"free Wronskian {abs(wf):.2e} below floor at s={s}; distance to "
            f"the exceptional set ~ {abs(wf) / math.pi:.2e}",
            distance=abs(wf) / math.pi)
    if not math.isclose(u.grid[-1], r_match, rel_tol=1e-6, abs_tol=1e-6):
        raise ValueError(
            f"decompose_at_match: solution ends at {u.grid[-1]:.6g}, not r_match={r_match:.6g}")
    uv, duv = u.at_end()
    scale = math.exp(u.log_scale) if abs(u.log_scale) < 650 else None
    psi_s, dpsi_s = jost_solution(sector, s, r_match, tol)
    psi_g, dpsi_g = jost_solution(sector, n - s, r_match, tol)
    shn = math.sinh(r_match) ** n
    A = shn * (uv * dpsi_s - duv * psi_s) / wf
    B = -shn * (uv * dpsi_g - duv * psi_g) / wf
    if scale is not None:
        A, B = A * scale, B * scale
    else:
        raise OverflowError("decompose_at_match: solution scale not representable")
    # verification point: continue u through the (free) region to r_match+delta
    r2 = r_match + _MATCH_DELTA
    sol2 = solve_ivp(
        lambda r, y: [y[1], -n / math.tanh(r) * y[1]
                      - (s * (n - s) - sector.centrifugal / math.sinh(r) ** 2) * y[0]],
        (r_match, r2), [uv * scale, duv * scale], method="DOP853",
        rtol=ODE_RTOL, atol=ODE_ATOL)
    recon = (A * jost_solution(sector, n - s, r2, tol)[0]
             + B * jost_solution(sector, s, r2, tol)[0])
    target = sol2.y[0, -1]
    residual = abs(recon - target) / max(abs(target), 1e-300)
    return ChannelDecomposition(s=s, A_grow=complex(A), B_decay=complex(B),
                                r_match=r_match, residual=float(residual))


def smatrix_ratio_batch(sector: Sector, s_values, V: RadialPotential,
                        r_match: float = None, tol: float = DEFAULT_TOL):
    """Eigenvalue of S_V(s) S_0(s)^{-1} on degree-l harmonics, batched.

    ratio = (B_V/A_V)(A_0/B_0) with the Wronskian form
    B_V/A_V = -W[u, psi(n-s)]/W[u, psi(s)] and the closed-form free ratio
    A_0/B_0 = -Gamma(l+n-s)/Gamma(s+l); identically 1 for V = 0.
    """
    if r_match is None:
        r_match = default_r_match(V)
    n, l = sector.dim.n, sector.l
    s_arr = np.atleast_1d(np.asarray(s_values, dtype=complex))
    shape = np.asarray(s_values, dtype=complex).shape
    lam = s_arr * (n - s_arr)
    u, du, _ = _integrate_endpoints(sector, lam, V, r_match)
    psi_s, dpsi_s = jost_solution(sector, s_arr, r_match, tol)
    psi_g, dpsi_g = jost_solution(sector, n - s_arr, r_match, tol)
    w_s = u * dpsi_s - du * psi_s
    w_g = u * dpsi_g - du * psi_g
    ratio = (w_g / w_s) * np.exp(loggamma(l + n - s_arr) - loggamma(s_arr + l))
    ratio = ratio.reshape(shape)
    return ratio if ratio.ndim else complex(ratio)


def channel_smatrix_ratio(sector: Sector, s: complex, V: RadialPotential,
                          r_match: float = None, tol: float = DEFAULT_TOL) -> complex:
    """Single-point S_V S_0^{-1} channel eigenvalue."""
    return smatrix_ratio_batch(sector, complex(s), V, r_match, tol)


def channel_phase(sector: Sector, xi, V: RadialPotential,
                  r_match: float = None, tol: float = DEFAULT_TOL):
    """Unwrapped channel phase theta_l on an increasing xi >= 0 grid.

    On the critical line s = n/2 + i xi the energy s(n-s) is real, the
    regular solution is real, and the channel ratio is exactly unimodular:

        ratio_l = exp(-2i [arg W[u, psi(s)] + arg Gamma(s+l)]),

    so the phase comes from one real ODE sweep.  theta_l(0) = 0 by the
    anchoring of the continuous branch.  Returns (theta, max_raw_step), the
    largest wrapped step being the unwrap-ambiguity diagnostic.
    """
    if r_match is None:
        r_match = default_r_match(V)
    l = sector.l
    xi = np.asarray(xi, dtype=float)
    w, _, s_arr = _wronskian_with_jost(sector, None, V, r_match, tol,
                                       real_lambda=True, xi=xi)
    phi = np.angle(w) + np.imag(loggamma(s_arr + l))
    phi = np.unwrap(phi)
    theta = -2.0 * phi
    theta = theta - 2.0 * math.pi * np.round(theta[0] / (2.0 * math.pi))
    steps = np.abs(np.diff(theta))
    max_step = float(steps.max()) if steps.size else 0.0
    return theta, max_step
