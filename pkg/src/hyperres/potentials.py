"""Radial potential models on H^{n+1} and their volume integrals.

A potential is a real, smooth profile V(r) supported in [0, R].  Presets are
constructed to vanish to all orders at r = R:

    bump:  amplitude * exp(-1 / (1 - (r/R)^2))            (V(0) = amplitude/e)
    well:  -amplitude * S(r/R), S a smooth partition that equals 1 on
           [0, R/2] and decays to 0 at R (flat-bottomed, attractive for
           amplitude > 0)

Custom tabulated profiles are interpolated with a clamped cubic spline and
forced to 0 beyond R.  Volume integrals use the S^n sphere volume and the
sinh^n r radial weight:

    integral V^p dg = omega_n * int_0^R V(r)^p sinh(r)^n dr.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import QuadratureError, ValidationError

QUAD_ABS_TOL = 1e-11

_PRESETS = ("bump", "well", "zero", "table")


@dataclass(frozen=True)
class HyperbolicDim:
    """Dimension data for H^{n+1}; n >= 1 is the sphere dimension."""
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"HyperbolicDim requires n >= 1, got {self.n}")

    @property
    def mu0(self) -> float:
        return (self.n - 1) / 2.0

    @property
    def sphere_volume(self) -> float:
        """Vol(S^n) = 2 pi^((n+1)/2) / Gamma((n+1)/2)."""
        return 2.0 * math.pi ** ((self.n + 1) / 2.0) / math.gamma((self.n + 1) / 2.0)

    def multiplicity(self, l: int) -> int:
        """Dimension of the degree-l spherical harmonics on S^n.

        m_0 = 1; for n = 1 this is 2 for every l >= 1; for n = 2 it is
        2l + 1.  Partial sums reproduce the free resonance multiplicity
        (2k+n)(k+1)...(n+k-1)/n! at s = -k.
        """
        if l < 0:
            raise ValidationError("multiplicity requires l >= 0")
        if l == 0:
            return 1
        if self.n == 1:
            return 2
        return (2 * l + self.n - 1) * math.comb(l + self.n - 2, l) // (self.n - 1)

    def free_multiplicity(self, k: int) -> int:
        """Multiplicity of the free resonance at s = -k for n+1 even,
        (2k+n)(k+1)...(n+k-1)/n!; equals sum_{l<=k} multiplicity(l)."""
        return (2 * k + self.n) * math.comb(k + self.n - 1, k) // self.n


def _bump_profile(rho):
    # exp(-1/(1-rho^2)) on [0,1), 0 outside; all derivatives vanish at 1
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    inside = np.abs(rho) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - rho[inside] ** 2))
    return out


def _smooth_step(t):
    # C^inf transition: 1 at t<=0, 0 at t>=1
    t = np.asarray(t, dtype=float)
    f = lambda x: np.where(x > 0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
    a = f(1.0 - t)
    b = f(t)
    return a / (a + b)


@dataclass(frozen=True)
class RadialPotential:
    """Real radial potential with compact support [0, R].

    Immutable after construction; shareable across workers.
    """
    kind: str
    amplitude: float = 1.0
    radius: float = 1.0
    samples: tuple = None
    _spline: CubicSpline = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in _PRESETS:
            raise ValidationError(f"unknown potential kind {self.kind!r}; choose from {_PRESETS}")
        if not self.radius > 0:
            raise ValidationError("potential radius must be > 0")
        if self.kind == "table":
            if not self.samples:
                raise ValidationError("table potential requires samples")
            r, v = np.asarray([p[0] for p in self.samples]), np.asarray([p[1] for p in self.samples])
            if np.any(np.diff(r) <= 0):
                raise ValidationError("table sample radii must be strictly increasing")
            # clamped ends keep C^1 continuity for the ODE right-hand sides
            spl = CubicSpline(r, v, bc_type="clamped")
            object.__setattr__(self, "_spline", spl)

    def __call__(self, r):
        """V(r); exactly 0 for r >= R.  Vectorized."""
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = np.zeros_like(r)
        inside = (r >= 0) & (r < self.radius)
        if self.kind == "bump":
            out[inside] = self.amplitude * _bump_profile(r[inside] / self.radius)
        elif self.kind == "well":
            out[inside] = -self.amplitude * _smooth_step(2.0 * r[inside] / self.radius - 1.0)
        elif self.kind == "table":
            lo, hi = self._spline.x[0], self._spline.x[-1]
            rr = np.clip(r[inside], lo, min(hi, self.radius))
            out[inside] = self._spline(rr)
        return float(out[0]) if scalar else out

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.amplitude == 0.0

    def max_abs(self, probes: int = 512) -> float:
        """Upper estimate of sup |V| from a dense probe grid."""
        r = np.linspace(0.0, self.radius, probes)
        return float(np.max(np.abs(self(r))))

    def scaled(self, factor: float) -> "RadialPotential":
        return RadialPotential(self.kind, self.amplitude * factor, self.radius,
                               self.samples if self.kind == "table" else None)


def evaluate(V: RadialPotential, r) -> float:
    """Point evaluation V(r) with the support clamp."""
    if np.any(np.asarray(r) < 0):
        raise ValidationError("evaluate requires r >= 0")
    return V(r)


def volume_integral(V: RadialPotential, dim: HyperbolicDim, power: int = 1,
                    abs_tol: float = QUAD_ABS_TOL) -> float:
    """omega_n * int_0^R V(r)^power sinh(r)^n dr by adaptive quadrature.

    power must be 1 or 2.
    """
    if power not in (1, 2):
        raise ValidationError("volume_integral supports power in {1, 2}")
    if V.is_zero:
        return 0.0

    def integrand(r):
        return V(r) ** power * np.sinh(r) ** dim.n

    val, err = quad(integrand, 0.0, V.radius, epsabs=abs_tol, epsrel=abs_tol, limit=200)
    if err > 100 * abs_tol * max(1.0, abs(val)):
        raise QuadratureError(
            f"volume_integral error estimate {err:.2e} above tolerance {abs_tol:.2e}")
    return dim.sphere_volume * val
