"""Trace-formula layer: wave invariants, relative heat trace, Poisson pairing.

Wave invariants (radial reduction of the t = 0 wave-trace singularities):

    a_1 = -1/4 pi^{-n/2} int V dg,
    a_2 = 1/32 pi^{-n/2} int [ (2n - n^2)/6 V + V^2 ] dg.

The relative heat trace is assembled through the Birman-Krein identity

    tr[e^{-tP_V} - e^{-tP_0}] = int_0^inf sigma'(xi) e^{-xi^2 t} dxi
                                + sum_j e^{t(n^2/4 - lambda_j)} + m/2,

with the phase integral's xi > xi_max tail either zero-padded or extended by
the fitted asymptotic polynomial of sigma' (both variants are reported).

The distributional wave-trace pairing (Theta_V, psi) uses even test
functions whose transform is known in closed form; the Poisson check
compares it against the resonance sum (1/2) sum m(zeta) int e^{(zeta-n/2)|t|}
psi(t) dt, minus the free-space term cosh(t/2)/(2 sinh(t/2))^{n+1} in even
dimensions.

The eigenvalue oracle is an independent route: symmetric second-order finite
differences for the Liouville-transformed channel operator

    -w'' + [ (n^2/4) coth^2 r - (n/2)/sinh^2 r + l(l+n-1)/sinh^2 r + V ] w,

Dirichlet walls exactly at r = 0 and r = r_cap (interior nodes only; an
endpoint-node discretization shifts the wall by O(h) and poisons the
eigenvalue at first order), Richardson-extrapolated in the mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import eigh_tridiagonal
from scipy.special import erfc, exp1, gammaincc

from .errors import CapSensitivityError, NumericalBudgetError, ValidationError
from .potentials import HyperbolicDim, RadialPotential, volume_integral
from .scattering import PhaseGrid

EIGEN_MARGIN = 1e-6
_CAP_CHECK_SHIFT = 5.0


# ---------------------------------------------------------------------------
# wave invariants

@dataclass(frozen=True)
class WaveInvariants:
    a: dict
    intV: float
    intV2: float


def wave_invariants(V: RadialPotential, dim: HyperbolicDim) -> WaveInvariants:
    """First two wave invariants from the closed forms (the Laplacian term
    integrates to zero for compactly supported V)."""
    n = dim.n
    iv = volume_integral(V, dim, 1)
    iv2 = volume_integral(V, dim, 2)
    pref = math.pi ** (-n / 2.0)
    a1 = -0.25 * pref * iv
    a2 = pref / 32.0 * ((2 * n - n * n) / 6.0 * iv + iv2)
    return WaveInvariants(a={1: a1, 2: a2}, intV=iv, intV2=iv2)


# ---------------------------------------------------------------------------
# test functions

def _gauss_legendre_panels(f, a, b, panels=4, order=64):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        t = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        total = total + 0.5 * (hi - lo) * np.sum(w * f(t), axis=-1)
    return total


@dataclass
class TestFunction:
    """Even test function with closed-form transform and pairing integrals.

    psi is supported (effectively) in |t| in [t0, t1]; psi_hat(xi) =
    int psi(t) e^{-i xi t} dt is real and even.  Cosine-window presets are
    exact finite cosine sums; the Gaussian preset (improper, t0 = 0) exists
    for the heat-trace consistency identity only.
    """
    name: str
    t0: float
    t1: float
    proper: bool = True
    _betas: np.ndarray = field(default=None, repr=False)
    _theat: float = field(default=None, repr=False)

    # -- evaluation ---------------------------------------------------------
    def psi(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        if self._theat is not None:
            return np.exp(-t * t / (4.0 * self._theat)) / math.sqrt(4.0 * math.pi * self._theat)
        w = self.t1 - self.t0
        c = 0.5 * (self.t0 + self.t1)
        out = np.zeros_like(t)
        inside = (t >= self.t0) & (t <= self.t1)
        tau = t[inside] - c
        acc = np.zeros_like(tau)
        for j, beta in enumerate(self._betas):
            acc += beta * np.cos(2.0 * math.pi * j * tau / w)
        out[inside] = acc
        return out

    def psi_hat(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self._theat is not None:
            return np.exp(-self._theat * xi * xi)
        w = self.t1 - self.t0
        c = 0.5 * (self.t0 + self.t1)
        total = np.zeros_like(xi)
        for j, beta in enumerate(self._betas):
            a = 2.0 * math.pi * j / w
            total += beta * (_sinc_term(a - xi, w) + _sinc_term(a + xi, w))
        return 2.0 * np.cos(xi * c) * total

    def pair_exp(self, kappa):
        """int e^{kappa |t|} psi(t) dt (complex kappa allowed)."""
        kappa = complex(kappa)
        if self._theat is not None:
            a = self._theat
            return complex(np.exp(a * kappa * kappa) * erfc(-kappa * math.sqrt(a)))
        w = self.t1 - self.t0
        c = 0.5 * (self.t0 + self.t1)
        total = 0.0 + 0.0j
        for j, beta in enumerate(self._betas):
            a = 2.0 * math.pi * j / w
            if abs(kappa * kappa + a * a) < 1e-8:
                total += beta * _gauss_legendre_panels(
                    lambda t: np.exp(kappa * t) * np.cos(a * (t - c)), self.t0, self.t1)
                continue

            def anti(t):
                return np.exp(kappa * t) * (kappa * math.cos(a * (t - c))
                                            + a * math.sin(a * (t - c))) / (kappa * kappa + a * a)
            total += beta * (anti(self.t1) - anti(self.t0))
        return complex(2.0 * total)

    def pair_cos(self, lam, dim: HyperbolicDim):
        """f(lambda) = int cos(t sqrt(lambda - n^2/4)) psi(t) dt; for an
        eigenvalue (lambda < n^2/4) this is the cosh pairing."""
        b2 = lam - dim.n * dim.n / 4.0
        c = complex(math.sqrt(abs(b2)))
        if b2 > 0:
            c = 1j * c
        return complex(0.5 * (self.pair_exp(c) + self.pair_exp(-c))).real

    @property
    def l1_norm(self) -> float:
        # cosine windows are nonnegative: only the j = 0 term integrates
        if self._theat is not None:
            return 1.0
        return float(2.0 * self._betas[0] * (self.t1 - self.t0))


def _sinc_term(d, w):
    d = np.asarray(d, dtype=float)
    small = np.abs(d) < 1e-8
    out = np.empty_like(d)
    out[~small] = np.sin(d[~small] * w / 2.0) / d[~small]
    out[small] = w / 2.0 * np.cos(d[small] * w / 2.0)
    return out


def cosine_window(t0: float = 1.0, t1: float = 3.0, power: int = 3,
                  name: str = None) -> TestFunction:
    """Even cos^{2p} window supported in |t| in [t0, t1]; psi_hat is an
    exact finite sum of shifted sinc kernels decaying like xi^{-2p}."""
    if not 0 < t0 < t1:
        raise ValidationError("cosine_window requires 0 < t0 < t1")
    p = int(power)
    # cos^{2p}(theta) = sum_j beta_j cos(2j theta), theta = pi (t-c)/w
    betas = np.zeros(p + 1)
    betas[0] = math.comb(2 * p, p) / 4.0 ** p
    for j in range(1, p + 1):
        betas[j] = 2.0 * math.comb(2 * p, p - j) / 4.0 ** p
    return TestFunction(name=name or f"coswin{p}[{t0},{t1}]", t0=t0, t1=t1,
                        proper=True, _betas=betas)


def gaussian_window(t_heat: float) -> TestFunction:
    """Improper Gaussian test function e^{-t^2/4 t_heat}/sqrt(4 pi t_heat);
    psi_hat = e^{-t_heat xi^2}.  Admitted only for the heat consistency test."""
    return TestFunction(name=f"gauss[{t_heat}]", t0=0.0, t1=math.inf,
                        proper=False, _theat=float(t_heat))


# ---------------------------------------------------------------------------
# heat trace

@dataclass
class HeatCurve:
    t: np.ndarray
    value: np.ndarray
    phase_integral: np.ndarray
    eigencontrib: np.ndarray
    m_half: int
    value_zeropad: np.ndarray = None

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("t,value,phase_integral,eigencontrib\n")
            for row in zip(self.t, self.value, self.phase_integral, self.eigencontrib):
                fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


def _gauss_tail(p: int, X: float, t: float) -> float:
    """int_X^inf xi^p e^{-t xi^2} dxi for the exponents used by n <= 3."""
    if p == 0:
        return 0.5 * math.sqrt(math.pi / t) * float(erfc(X * math.sqrt(t)))
    if p == 1:
        return math.exp(-t * X * X) / (2.0 * t)
    if p == -1:
        return 0.5 * float(exp1(t * X * X))
    if p == -2:
        return math.exp(-t * X * X) / X - math.sqrt(math.pi * t) * float(erfc(X * math.sqrt(t)))
    if p == -3:
        return 0.5 * (math.exp(-t * X * X) / (X * X) - t * float(exp1(t * X * X)))
    raise ValidationError(f"unsupported tail exponent {p}")


def heat_trace(grid: PhaseGrid, dim: HyperbolicDim, eigenvalues, m_half: int,
               t_values, poly_coefficients=None, tail_tol: float = 1e-9) -> HeatCurve:
    """Relative heat trace on t_values from the Birman-Krein assembly.

    poly_coefficients (c_k, k = 1..K) extend sigma' past xi_max in the
    asymptotic basis; the zero-padded variant is kept on value_zeropad.
    Raises when the neglected Gaussian tail at the smallest t exceeds
    tail_tol even with the extension (reports the smallest admissible t).
    """
    n = dim.n
    t_values = np.asarray(t_values, dtype=float)
    if np.any(t_values <= 0):
        raise ValidationError("heat_trace requires t > 0")
    xi = grid.xi
    ximax = float(xi[-1])
    # tempered-growth bound |sigma'| <= C (1+xi)^{n-1} fitted from the grid
    C = float(np.max(np.abs(grid.dsigma) / (1.0 + xi) ** (n - 1)))
    tmin = float(np.min(t_values))
    resid_bound = C * (1.0 + ximax) ** (n - 1) * math.exp(-tmin * ximax * ximax) \
        / (2.0 * tmin * ximax)
    if poly_coefficients is not None:
        # only the remainder beyond the fitted polynomial is neglected
        win = xi >= ximax / 2.0
        poly = np.zeros(int(win.sum()))
        for k, ck in enumerate(poly_coefficients, start=1):
            poly += ck * xi[win] ** (n - 2 * k)
        resid = float(np.max(np.abs(grid.dsigma[win] - poly)))
        resid_bound = resid * math.exp(-tmin * ximax * ximax) / (2.0 * tmin * ximax)
    if resid_bound > tail_tol:
        t_ok = 32.0 / (ximax * ximax)
        raise NumericalBudgetError(
            f"heat_trace: xi-tail bound {resid_bound:.2e} above {tail_tol:.2e} "
            f"at t={tmin:.3g}; smallest admissible t ~ {t_ok:.3g}")
    lam = np.asarray(list(eigenvalues), dtype=float)
    phase = np.empty_like(t_values)
    phase_pad = np.empty_like(t_values)
    for i, t in enumerate(t_values):
        integrand = grid.dsigma * np.exp(-xi * xi * t)
        base = float(simpson(integrand, x=xi))
        phase_pad[i] = base
        if poly_coefficients is not None:
            base += sum(ck * _gauss_tail(n - 2 * k, ximax, t)
                        for k, ck in enumerate(poly_coefficients, start=1))
        phase[i] = base
    eig = np.array([np.sum(np.exp(t * (n * n / 4.0 - lam))) for t in t_values]) \
        if lam.size else np.zeros_like(t_values)
    value = phase + eig + 0.5 * m_half
    value_pad = phase_pad + eig + 0.5 * m_half
    return HeatCurve(t=t_values, value=value, phase_integral=phase,
                     eigencontrib=eig, m_half=m_half, value_zeropad=value_pad)


@dataclass
class HeatFit:
    coefficients: np.ndarray
    errors: np.ndarray
    basis_powers: np.ndarray


def heat_smallt_fit(curve: HeatCurve, dim: HyperbolicDim, K: int) -> HeatFit:
    """LSQ fit of the heat curve in the basis {(4t)^{-(n+1)/2+k}}_{k=1..K}.

    Requires the curve's t range to span >= 1.5 decades.
    """
    n = dim.n
    t = curve.t
    if math.log10(t.max() / t.min()) < 1.5:
        raise ValidationError("heat_smallt_fit needs >= 1.5 decades of t")
    powers = np.array([-(n + 1) / 2.0 + k for k in range(1, K + 1)])
    basis = np.stack([(4.0 * t) ** p for p in powers], axis=1)
    coeff, res, *_ = np.linalg.lstsq(basis, curve.value, rcond=None)
    dof = max(t.size - K, 1)
    s2 = (float(res[0]) if res.size else
          float(np.sum((curve.value - basis @ coeff) ** 2))) / dof
    cov = s2 * np.linalg.inv(basis.T @ basis)
    return HeatFit(coefficients=coeff, errors=np.sqrt(np.diag(cov)),
                   basis_powers=powers)


def heat_largetime_exponent(curve: HeatCurve) -> float:
    """Log-log slope of |value| over the curve (for the t^{-1/2} decay check)."""
    y = np.abs(curve.value)
    if np.any(y <= 0):
        raise ValidationError("heat curve crosses zero; choose a different window")
    slope = np.polyfit(np.log(curve.t), np.log(y), 1)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# independent eigenvalue oracle

def eigenvalue_oracle(V: RadialPotential, dim: HyperbolicDim, l: int,
                      r_cap: float = 20.0, mesh: int = 3000,
                      cap_check: bool = True):
    """Channel eigenvalues below n^2/4 from a symmetric finite-difference
    discretization with the sinh^n volume weight (Liouville form), Dirichlet
    cap, Richardson-checked against mesh x2."""
    if r_cap < V.radius + 10.0:
        raise ValidationError("eigenvalue_oracle requires r_cap >= R + 10")
    if mesh < 2000:
        raise ValidationError("eigenvalue_oracle requires mesh >= 2000")
    n = dim.n

    def solve(rc, m):
        h = rc / (m + 1)
        r = h * np.arange(1, m + 1)
        W = (n * n / 4.0) / np.tanh(r) ** 2 - (n / 2.0) / np.sinh(r) ** 2 \
            + l * (l + n - 1) / np.sinh(r) ** 2 + V(r)
        vals = eigh_tridiagonal(2.0 / h ** 2 + W, -np.ones(m - 1) / h ** 2,
                                select="v",
                                select_range=(-1e9, n * n / 4.0 - EIGEN_MARGIN))[0]
        return vals

    def richardson(rc, m):
        lo = solve(rc, m)
        hi = solve(rc, 2 * m)
        out = [(4.0 * hi[i] - lo[i]) / 3.0 for i in range(min(len(lo), len(hi)))]
        return [v for v in out if v < n * n / 4.0 - EIGEN_MARGIN]

    vals = richardson(r_cap, mesh)
    if cap_check and vals:
        rc2 = r_cap + _CAP_CHECK_SHIFT
        shifted = richardson(rc2, int(mesh * rc2 / r_cap))
        for i, v in enumerate(vals):
            if i >= len(shifted) or abs(shifted[i] - v) > 1e-6:
                raise CapSensitivityError(
                    f"eigenvalue {v:.8f} moved by "
                    f"{abs(shifted[i] - v) if i < len(shifted) else math.inf:.2e} "
                    f"under r_cap -> r_cap + {_CAP_CHECK_SHIFT}")
    return vals


# ---------------------------------------------------------------------------
# wave-trace pairings

def _phase_pairing(grid: PhaseGrid, psi: TestFunction) -> float:
    # (1/2) int_R sigma' psi_hat = int_0^ximax sigma'(xi) psi_hat(xi) dxi
    integrand = grid.dsigma * psi.psi_hat(grid.xi)
    return float(simpson(integrand, x=grid.xi))


def theta_reconstruction(grid: PhaseGrid, eigenvalues, m_half: int,
                         psi: TestFunction, dim: HyperbolicDim) -> float:
    """Pairing (Theta_V, psi) assembled from the Birman-Krein summands."""
    total = _phase_pairing(grid, psi)
    for lam in eigenvalues:
        total += psi.pair_cos(float(lam), dim)
    total += 0.5 * m_half * float(psi.psi_hat(np.array([0.0]))[0])
    return total


def u0_pairing(dim: HyperbolicDim, psi: TestFunction) -> float:
    """(u_0, psi) with u_0 = cosh(t/2)/(2 sinh(t/2))^{n+1} (n+1 even only)."""
    if dim.n % 2 == 0:
        return 0.0
    n = dim.n

    def f(t):
        return np.cosh(t / 2.0) / (2.0 * np.sinh(t / 2.0)) ** (n + 1) * psi.psi(t)

    return float(2.0 * _gauss_legendre_panels(f, psi.t0, psi.t1, panels=6))


def free_resonance_pairing(dim: HyperbolicDim, psi: TestFunction,
                           k_max: int = 60):
    """(1/2) sum_k m_0(-k) int e^{-(k+n/2)|t|} psi dt for the free field in
    even dimensions, with the truncation bound of the dropped terms."""
    total = 0.0
    for k in range(k_max + 1):
        total += 0.5 * dim.free_multiplicity(k) * psi.pair_exp(-(k + dim.n / 2.0)).real
    bound = 0.0
    l1 = psi.l1_norm
    k = k_max + 1
    while True:
        term = dim.free_multiplicity(k) * l1 * math.exp(-(k + dim.n / 2.0) * psi.t0)
        bound += 0.5 * term
        if term < 1e-18 * max(abs(total), 1.0):
            break
        k += 1
    return total, bound


@dataclass
class PoissonReport:
    lhs: float
    rhs: float
    tail_bound: float
    psi_preset: str
    r_max: float
    counting_constant: float
    decay_cone: float

    def to_json_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "tail_bound": self.tail_bound,
                "psi_preset": self.psi_preset, "r_max": self.r_max,
                "counting_constant": self.counting_constant,
                "decay_cone": self.decay_cone}


def poisson_pairing(dim: HyperbolicDim, grid: PhaseGrid, eigenvalues,
                    m_half: int, resonances, psi: TestFunction,
                    r_max: float = None) -> PoissonReport:
    """Poisson-formula check: Birman-Krein lhs vs resonance-sum rhs.

    rhs = (1/2) sum_{|zeta - n/2| <= r_max} m(zeta) int e^{(zeta-n/2)|t|} psi
          - (u_0, psi)   [the free term enters for n+1 even only].

    The tail bound combines N_V(r) <= C r^{n+1} (C fitted over the searched
    disk) with |int e^{(zeta-n/2)|t|} psi| <= ||psi||_1 e^{-Re(n/2-zeta) t0},
    assuming Re(n/2 - zeta) >= beta |zeta - n/2| outside the disk with beta
    read off conservatively from the outermost found resonances.
    """
    if not psi.proper:
        raise ValidationError("poisson_pairing needs a proper (compact) test function")
    from .resonances import counting_bound_constant
    n = dim.n
    c = n / 2.0
    lhs = theta_reconstruction(grid, eigenvalues, m_half, psi, dim)
    if r_max is None:
        r_max = max(abs(e.zeta - c) for e in resonances.entries) if resonances.entries else 1.0
    rhs = 0.0
    for e in resonances.entries:
        if abs(e.zeta - c) <= r_max:
            rhs += 0.5 * e.multiplicity * psi.pair_exp(e.zeta - c).real
    rhs -= u0_pairing(dim, psi)
    if dim.n % 2 == 1:
        # the free background set continues beyond the searched disk
        kmax_in = int(math.floor(r_max - n / 2.0))
        extra = 0.0
        k = kmax_in + 1
        while True:
            term = 0.5 * dim.free_multiplicity(k) * psi.pair_exp(-(k + n / 2.0)).real
            extra += term
            if abs(term) < 1e-16 * max(abs(rhs), 1.0):
                break
            k += 1
        rhs += extra
    # decay cone from the outermost found resonances
    outer = [e for e in resonances.entries if abs(e.zeta - c) >= 0.6 * r_max
             and abs(e.zeta.imag) > 1e-6]
    if outer:
        beta = min((c - e.zeta.real) / abs(e.zeta - c) for e in outer)
        beta = max(beta, 0.05)
    else:
        beta = 0.5
    C = counting_bound_constant(resonances, dim)
    b = beta * psi.t0
    tail = psi.l1_norm * C * (n + 1) * math.gamma(n + 1) \
        * float(gammaincc(n + 1, b * r_max)) / b ** (n + 1) * 0.5
    return PoissonReport(lhs=lhs, rhs=rhs, tail_bound=tail, psi_preset=psi.name,
                         r_max=r_max, counting_constant=C, decay_cone=beta)
