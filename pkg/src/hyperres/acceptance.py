"""The acceptance suite: ten quantitative criteria with stated tolerances.

Each criterion is a function of a shared AcceptanceContext (which caches the
expensive phase grids and resonance lists between criteria), returns a
CriterionResult with named sub-checks, and is wired both into the CLI
(`hyperres verify`) and the pytest suite (tests/test_acceptance.py).  A
criterion passes when every sub-check passes within its stated tolerance
and the runtime stays under the stated budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelQuery, free_resolvent, free_spectral_kernel
from .potentials import HyperbolicDim, RadialPotential
from .radial import Sector
from .resonances import (Disk, SearchRegion, count_zeros,
                         counting_bound_constant, counting_function,
                         find_resonances)
from .scattering import (default_xi_grid, levinson_constant,
                         phase_asymptotics_fit, phase_coefficient_target,
                         relative_determinant, scattering_phase)
from .specfun import connection_residual, log_gamma
from .traces import (cosine_window, eigenvalue_oracle, free_resonance_pairing,
                     heat_largetime_exponent, heat_smallt_fit, heat_trace,
                     poisson_pairing, u0_pairing, wave_invariants)

BUMP = RadialPotential("bump", amplitude=1.0, radius=1.0)
WELL_D1 = RadialPotential("well", amplitude=7.0, radius=1.0)
XI_MAX = 40.0
HEAT_T = np.geomspace(0.015, 0.5, 50)
DECAY_T = np.geomspace(50.0, 500.0, 25)


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    checks: dict
    elapsed: float
    budget: float

    def to_json_dict(self):
        def clean(v):
            if isinstance(v, (np.floating, float)):
                return float(v)
            if isinstance(v, (np.integer, int)):
                return int(v)
            if isinstance(v, (np.bool_, bool)):
                return bool(v)
            return v
        return {"index": self.index, "name": self.name, "passed": self.passed,
                "elapsed_s": round(self.elapsed, 2), "budget_s": self.budget,
                "checks": {k: clean(v) for k, v in self.checks.items()}}

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"criterion {self.index:2d} [{self.name}] {status} "
                f"({self.elapsed:.1f}s / budget {self.budget:.0f}s)")


class AcceptanceContext:
    """Lazy cache of the expensive shared artifacts."""

    def __init__(self, threads: int = 1):
        self.threads = threads
        self.h3 = HyperbolicDim(2)
        self.h2 = HyperbolicDim(1)
        self._cache = {}

    def _get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    def grid_bump3(self):
        return self._get("grid_bump3", lambda: scattering_phase(
            BUMP, self.h3, default_xi_grid(XI_MAX), threads=self.threads))

    def grid_well3(self):
        return self._get("grid_well3", lambda: scattering_phase(
            WELL_D1, self.h3, default_xi_grid(XI_MAX), threads=self.threads))

    def grid_bump2(self):
        return self._get("grid_bump2", lambda: scattering_phase(
            BUMP, self.h2, default_xi_grid(XI_MAX), threads=self.threads))

    def well_eigenvalues(self):
        def build():
            out = []
            for l in range(3):
                out.extend(eigenvalue_oracle(WELL_D1, self.h3, l))
            return out
        return self._get("well_eigs", build)

    def well_resonances(self):
        return self._get("well_res", lambda: find_resonances(
            self.h3, WELL_D1,
            SearchRegion((-5.0, 7.0), (-6.0, 6.0), [Disk(1.0 + 0j, 1e-2)]),
            seed=0))

    def free_h2_resonances(self):
        return self._get("free_h2", lambda: find_resonances(
            self.h2, RadialPotential("zero"),
            SearchRegion((-3.6, 0.6), (-1.0, 1.0)), L_max=3, seed=0))


def _result(index, name, budget, t0, checks):
    passed = all(bool(v) for k, v in checks.items() if k.endswith("_ok"))
    elapsed = time.time() - t0
    checks["runtime_ok"] = elapsed < budget
    return CriterionResult(index, name, passed and checks["runtime_ok"],
                           checks, elapsed, budget)


def criterion_1(ctx: AcceptanceContext) -> CriterionResult:
    """Special-function identities: connection formula, Gamma recurrence and
    reflection, residuals < 1e-10 on 200 samples.  Budget 10 s."""
    t0 = time.time()
    rng = np.random.default_rng(11)
    worst_conn = 0.0
    for _ in range(200):
        nu = complex(rng.uniform(-3, 3), rng.uniform(-4, 4))
        mu = rng.integers(0, 8) / 2.0
        x = float(rng.uniform(1.05, 12.0))
        worst_conn = max(worst_conn, float(connection_residual(nu, mu, x)))
    z = (rng.uniform(-45, 45, 120) + 1j * rng.uniform(-45, 45, 120))
    z = z[np.abs(z.imag) + np.abs(z.real - np.round(z.real)) > 1e-2]
    lg = log_gamma(z)
    rec = np.abs(np.exp(log_gamma(z + 1.0) - lg) - z) / np.abs(z)
    refl = np.abs(np.exp(lg + log_gamma(1.0 - z)) * np.sin(np.pi * z) - np.pi) / np.pi
    checks = {
        "connection_residual": worst_conn,
        "connection_ok": worst_conn < 1e-10,
        "gamma_recurrence": float(rec.max()),
        "gamma_recurrence_ok": float(rec.max()) < 1e-10,
        "gamma_reflection": float(refl.max()),
        "gamma_reflection_ok": float(refl.max()) < 1e-10,
    }
    return _result(1, "special-function identities", 10.0, t0, checks)


def criterion_2(ctx: AcceptanceContext) -> CriterionResult:
    """H^3 free kernels: resolvent vs e^{-(s-1)r}/(4 pi sinh r) to 1e-10 on a
    50x50 grid; spectral kernel vs the resolvent difference to 1e-9.
    Budget 30 s."""
    t0 = time.time()
    dim = ctx.h3
    r_vals = np.linspace(0.05, 2.8, 50)
    re_vals = np.linspace(-1.7, 2.9, 50)
    im_vals = np.linspace(-4.7, 4.7, 50)
    worst_res = 0.0
    for re, im in zip(re_vals, np.roll(im_vals, 17)):  # 50 s-values x 50 radii
        s = complex(re, im)
        for r in r_vals:
            mine = free_resolvent(KernelQuery(dim, r=float(r), s=s))
            ref = np.exp(-(s - 1.0) * r) / (4.0 * math.pi * math.sinh(r))
            worst_res = max(worst_res, abs(mine - ref) / abs(ref))
    worst_spec = 0.0
    for xi in np.linspace(0.25, 6.0, 12):
        for r in np.linspace(0.05, 2.8, 12):
            k0 = free_spectral_kernel(KernelQuery(dim, r=float(r), xi=float(xi)))
            rm = free_resolvent(KernelQuery(dim, r=float(r), s=1.0 - 1j * xi))
            rp = free_resolvent(KernelQuery(dim, r=float(r), s=1.0 + 1j * xi))
            ref = (xi / (2j * math.pi)) * (rm - rp)
            worst_spec = max(worst_spec, abs(k0 - ref.real) / max(abs(ref), 1e-300))
    checks = {
        "resolvent_rel": worst_res, "resolvent_ok": worst_res < 1e-10,
        "spectral_rel": worst_spec, "spectral_ok": worst_spec < 1e-9,
    }
    return _result(2, "free-kernel oracle (H3)", 30.0, t0, checks)


def criterion_3(ctx: AcceptanceContext) -> CriterionResult:
    """Free resonance sets: H^3 search finds 0 zeros; H^2 aggregated
    multiplicities at s = -k equal 2k+1 for k = 0..3.  Budget 5 min."""
    t0 = time.time()
    V0 = RadialPotential("zero")
    reg = SearchRegion((-4.0, 1.0), (-4.0, 4.0), [Disk(1.0 + 0j, 1e-2)])
    counts = [count_zeros(Sector(ctx.h3, l), reg, V0) for l in range(4)]
    rl = ctx.free_h2_resonances()
    mults = {}
    for k in range(4):
        mults[k] = rl.total_multiplicity(complex(-k, 0.0), tol=1e-4)
    h2_ok = all(mults[k] == 2 * k + 1 for k in range(4))
    checks = {
        "h3_counts": str(counts), "h3_ok": all(c == 0 for c in counts),
        "h2_multiplicities": str([mults[k] for k in range(4)]),
        "h2_ok": h2_ok,
    }
    return _result(3, "free resonance sets", 300.0, t0, checks)


def criterion_4(ctx: AcceptanceContext) -> CriterionResult:
    """Unitarity on the critical line (1e-8) and tau(s)tau(n-s) = 1 (1e-8)
    at 20 off-line points.  Budget 2 min."""
    t0 = time.time()
    dim = ctx.h3
    worst_uni = 0.0
    for xi in np.concatenate([np.linspace(0.2, 4.0, 12), np.linspace(6.0, 40.0, 13)]):
        tau, _ = relative_determinant(1.0 + 1j * float(xi), BUMP, dim)
        worst_uni = max(worst_uni, abs(abs(tau) - 1.0))
    rng = np.random.default_rng(5)
    worst_refl = 0.0
    for _ in range(20):
        s = complex(rng.uniform(0.2, 1.8), rng.uniform(0.15, 3.0))
        t1, _ = relative_determinant(s, BUMP, dim)
        t2, _ = relative_determinant(2.0 - s, BUMP, dim)
        worst_refl = max(worst_refl, abs(t1 * t2 - 1.0))
    checks = {
        "unitarity_dev": worst_uni, "unitarity_ok": worst_uni < 1e-8,
        "reflection_dev": worst_refl, "reflection_ok": worst_refl < 1e-8,
    }
    return _result(4, "determinant unitarity + inversion", 120.0, t0, checks)


def criterion_5(ctx: AcceptanceContext) -> CriterionResult:
    """sigma' growth bound holds with finite fitted C; fitted c_1 matches
    a_1/pi within 2% at xi_max = 40 for the H^3 bump.  Budget 10 min."""
    t0 = time.time()
    grid = ctx.grid_bump3()
    dim = ctx.h3
    C = float(np.max(np.abs(grid.dsigma) / (1.0 + grid.xi) ** (dim.n - 1)))
    wi = wave_invariants(BUMP, dim)
    target = phase_coefficient_target(dim, 1, wi.a[1])
    fit = phase_asymptotics_fit(grid, dim, K=2)
    rel = abs(fit.coefficients[0] / target - 1.0)
    lead_consistent = abs(fit.leading_coeff) < 5.0 * max(fit.leading_err, 1e-9) \
        or abs(fit.leading_coeff) < 1e-4 * abs(target)
    checks = {
        "temper_C": C, "temper_ok": math.isfinite(C),
        "c1_fitted": float(fit.coefficients[0]), "c1_target": target,
        "c1_rel": rel, "c1_ok": rel < 0.02,
        "leading_coeff": fit.leading_coeff, "leading_err": fit.leading_err,
        "leading_ok": bool(lead_consistent),
    }
    return _result(5, "phase growth + leading asymptotics", 600.0, t0, checks)


def criterion_6(ctx: AcceptanceContext) -> CriterionResult:
    """Heat-trace expansion: small-t fits reproduce pi^{-1/2} a_1 within 3%
    and a_2 within 10% for the H^2 and H^3 bumps; large-t decay exponent is
    -1/2 +- 0.05 for eigenvalue-free presets.  Budget 10 min."""
    t0 = time.time()
    checks = {}
    for dim, grid, tag in ((ctx.h3, ctx.grid_bump3(), "h3"),
                           (ctx.h2, ctx.grid_bump2(), "h2")):
        wi = wave_invariants(BUMP, dim)
        poly = None
        if dim.n >= 2:
            poly = phase_asymptotics_fit(grid, dim, K=2).coefficients
        curve = heat_trace(grid, dim, [], 0, HEAT_T, poly_coefficients=poly)
        fit = heat_smallt_fit(curve, dim, K=4)
        tgt1 = wi.a[1] / math.sqrt(math.pi)
        tgt2 = wi.a[2] / math.sqrt(math.pi)
        rel1 = abs(fit.coefficients[0] / tgt1 - 1.0)
        rel2 = abs(fit.coefficients[1] / tgt2 - 1.0)
        decay_curve = heat_trace(grid, dim, [], 0, DECAY_T, poly_coefficients=poly)
        slope = heat_largetime_exponent(decay_curve)
        checks.update({
            f"{tag}_a1_rel": rel1, f"{tag}_a1_ok": rel1 < 0.03,
            f"{tag}_a2_rel": rel2, f"{tag}_a2_ok": rel2 < 0.10,
            f"{tag}_decay_slope": slope,
            f"{tag}_decay_ok": abs(slope + 0.5) < 0.05,
        })
    return _result(6, "heat-trace expansion", 600.0, t0, checks)


def criterion_7(ctx: AcceptanceContext) -> CriterionResult:
    """Deep-well H^3 bound state: Jost root zeta in (1,2) has zeta(2-zeta)
    within 1e-6 of the matrix-discretization eigenvalue.  Budget 2 min."""
    t0 = time.time()
    eigs = ctx.well_eigenvalues()
    reg = SearchRegion((1.05, 1.99), (-0.2, 0.2))
    rl = find_resonances(ctx.h3, WELL_D1, reg, L_max=2, seed=3)
    roots = [e for e in rl.entries if e.eigenvalue_parameter(ctx.h3) is not None]
    ok = len(eigs) == 1 and len(roots) == 1
    diff = math.inf
    if ok:
        lam_jost = roots[0].eigenvalue_parameter(ctx.h3)
        diff = abs(lam_jost - eigs[0])
        ok = diff < 1e-6
    checks = {
        "oracle_count": len(eigs), "jost_count": len(roots),
        "lambda_oracle": eigs[0] if eigs else None,
        "lambda_diff": diff, "match_ok": ok,
    }
    return _result(7, "eigenvalue cross-validation", 120.0, t0, checks)


def criterion_8(ctx: AcceptanceContext) -> CriterionResult:
    """Levinson-type constant: sigma minus its polynomial part yields
    d + m/2 within 0.05 for the d=0 and d=1 presets.  Budget 5 min."""
    t0 = time.time()
    dim = ctx.h3
    wi_b = wave_invariants(BUMP, dim)
    lev0 = levinson_constant(ctx.grid_bump3(), dim,
                             [phase_coefficient_target(dim, 1, wi_b.a[1])])
    wi_w = wave_invariants(WELL_D1, dim)
    lev1 = levinson_constant(ctx.grid_well3(), dim,
                             [phase_coefficient_target(dim, 1, wi_w.a[1])])
    checks = {
        "d0_value": lev0.value, "d0_ok": abs(lev0.value - 0.0) < 0.05,
        "d0_drift": lev0.drift,
        "d1_value": lev1.value, "d1_ok": abs(lev1.value - 1.0) < 0.05,
        "d1_drift": lev1.drift,
    }
    return _result(8, "Levinson-type constant", 300.0, t0, checks)


def criterion_9(ctx: AcceptanceContext) -> CriterionResult:
    """Poisson pairing: H^3 d=1 preset lhs vs resonance-sum rhs within
    tail_bound + 5e-3 |lhs|; H^2 free field reproduces the
    cosh(t/2)/(2 sinh(t/2))^2 pairing.  Budget 30 min."""
    t0 = time.time()
    psi = cosine_window(1.0, 3.0, power=3)
    rep = poisson_pairing(ctx.h3, ctx.grid_well3(), ctx.well_eigenvalues(), 0,
                          ctx.well_resonances(), psi, r_max=6.0)
    diff = abs(rep.lhs - rep.rhs)
    allowed = rep.tail_bound + 5e-3 * abs(rep.lhs)
    sharp = diff / max(abs(rep.lhs), 1e-300)
    free_sum, bound = free_resonance_pairing(ctx.h2, psi)
    u0 = u0_pairing(ctx.h2, psi)
    checks = {
        "lhs": rep.lhs, "rhs": rep.rhs, "diff": diff,
        "tail_bound": rep.tail_bound, "allowed": allowed,
        "sharp_rel_diff": sharp,
        "h3_ok": diff <= allowed,
        "h3_sharp_ok": diff <= 5e-3 * abs(rep.lhs),
        "h2_free_sum": free_sum, "h2_u0_pairing": u0,
        "h2_diff": abs(free_sum - u0), "h2_trunc_bound": bound,
        "h2_ok": abs(free_sum - u0) <= max(bound, 1e-10),
    }
    return _result(9, "Poisson pairing (capstone)", 1800.0, t0, checks)


def criterion_10(ctx: AcceptanceContext) -> CriterionResult:
    """Counting-function sanity on the criterion 3/9 resonance lists:
    monotone, conjugate-symmetric, N(r) <= C r^{n+1} with reported C.
    Budget folded into criteria 3/9."""
    t0 = time.time()
    rl = ctx.well_resonances()
    radii = np.linspace(0.5, 6.0, 23)
    counts = [counting_function(rl, ctx.h3, float(r)) for r in radii]
    mono = all(a <= b for a, b in zip(counts, counts[1:]))
    conj = rl.check_conjugate_pairs()
    C3 = counting_bound_constant(rl, ctx.h3)
    rl2 = ctx.free_h2_resonances()
    C2 = counting_bound_constant(rl2, ctx.h2)
    bound_holds = all(counting_function(rl, ctx.h3, float(r)) <= C3 * r ** 3 + 1e-9
                      for r in radii)
    checks = {
        "monotone_ok": mono, "conjugate_ok": conj,
        "well_counting_constant": C3, "free_h2_counting_constant": C2,
        "bound_ok": bound_holds,
    }
    return _result(10, "counting-function sanity", 300.0, t0, checks)


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8,
            9: criterion_9, 10: criterion_10}


def run_all(criteria=None, threads: int = 1, verbose: bool = True):
    """Run the requested criteria (all by default) and print one pass/fail
    line per criterion."""
    ctx = AcceptanceContext(threads=threads)
    wanted = sorted(criteria) if criteria else sorted(CRITERIA)
    results = []
    for idx in wanted:
        res = CRITERIA[idx](ctx)
        results.append(res)
        if verbose:
            print(res.line(), flush=True)
    return results
