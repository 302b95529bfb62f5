"""Locating channel Jost-function zeros by the argument principle.

Each channel's D_l is analytic on the search domain, so the winding number
of D_l around a contour counts enclosed zeros with multiplicity.  Rectangles
are subdivided until each leaf holds at most one zero, the zero is polished
by Newton iteration (central-difference derivative; D_l is analytic), and
every root is verified by a winding recount on a small circle, which also
yields its order.  Reported roots must additionally be stable under an
r_match perturbation of +0.25, which filters normalization artifacts.

All multiplicity bookkeeping is multiplicity-weighted by m_l, the dimension
of the degree-l harmonics; aggregated over channels this reproduces the free
resonance multiplicities (2k+n)(k+1)...(n+k-1)/n! at s = -k in even
dimensions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InternalConsistencyError, NumericalBudgetError
from .potentials import HyperbolicDim, RadialPotential
from .radial import Sector, default_r_match, jost_batch
from .scattering import channel_region_bound

_STANDOFF_FRACTION = 1e-3
_JITTER_RETRIES = 5
_MAX_BOUNDARY_POINTS = 40000
_MIN_CELL = 1e-7
_NEWTON_MAX_ITER = 60
_STABILITY_TOL = 1e-6


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float


@dataclass
class SearchRegion:
    """Axis-aligned rectangle in the s plane with optional exclusion disks."""
    re_range: tuple
    im_range: tuple
    exclusions: list = field(default_factory=list)

    def __post_init__(self):
        if not (self.re_range[0] < self.re_range[1] and self.im_range[0] < self.im_range[1]):
            raise ValueError("SearchRegion requires re_range[0] < re_range[1], same for im")

    @property
    def diameter(self) -> float:
        return math.hypot(self.re_range[1] - self.re_range[0],
                          self.im_range[1] - self.im_range[0])

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_range[0] + self.re_range[1]),
                       0.5 * (self.im_range[0] + self.im_range[1]))

    def contains(self, s: complex) -> bool:
        return (self.re_range[0] <= s.real <= self.re_range[1]
                and self.im_range[0] <= s.imag <= self.im_range[1])

    def excluded(self, s: complex) -> bool:
        return any(abs(s - d.center) <= d.radius for d in self.exclusions)

    def shifted(self, dz: complex) -> "SearchRegion":
        return SearchRegion((self.re_range[0] + dz.real, self.re_range[1] + dz.real),
                            (self.im_range[0] + dz.imag, self.im_range[1] + dz.imag),
                            self.exclusions)


@dataclass(frozen=True)
class Resonance:
    zeta: complex
    order: int
    l: int
    m_l: int

    @property
    def multiplicity(self) -> int:
        return self.order * self.m_l

    def eigenvalue_parameter(self, dim: HyperbolicDim):
        """lambda = zeta(n - zeta) when the entry is eigenvalue-type
        (real zeta in (n/2, n)), else None."""
        n = dim.n
        z = self.zeta
        if abs(z.imag) < 1e-8 and n / 2.0 < z.real < n:
            return float((z * (n - z)).real)
        return None


@dataclass
class ResonanceList:
    dim: HyperbolicDim
    entries: list
    region: SearchRegion = None
    complete: bool = True
    rejected: list = field(default_factory=list)

    def total_multiplicity(self, zeta: complex, tol: float = 1e-5) -> int:
        return sum(e.multiplicity for e in self.entries if abs(e.zeta - zeta) <= tol)

    def clustered(self, tol: float = 1e-5):
        """[(zeta, total multiplicity)] with channel entries merged."""
        out = []
        for e in sorted(self.entries, key=lambda e: (e.zeta.real, e.zeta.imag)):
            for i, (z, m) in enumerate(out):
                if abs(z - e.zeta) <= tol:
                    out[i] = (z, m + e.multiplicity)
                    break
            else:
                out.append((e.zeta, e.multiplicity))
        return out

    def covers(self, r: float) -> bool:
        """True when the searched rectangle contains the disk |s - n/2| <= r."""
        if self.region is None:
            return False
        c = self.dim.n / 2.0
        return (self.region.re_range[0] <= c - r and self.region.re_range[1] >= c + r
                and self.region.im_range[0] <= -r and self.region.im_range[1] >= r)

    def check_conjugate_pairs(self, tol: float = 1e-5) -> bool:
        for e in self.entries:
            if abs(e.zeta.imag) > tol:
                mirror = [o for o in self.entries
                          if o.l == e.l and abs(o.zeta - e.zeta.conjugate()) <= tol]
                if sum(o.order for o in mirror) != e.order:
                    return False
        return True

    def to_json(self, path=None):
        data = [{"re": e.zeta.real, "im": e.zeta.imag, "order": e.order,
                 "l": e.l, "m_l": e.m_l} for e in self.entries]
        if path is None:
            return json.dumps(data, indent=1)
        with open(path, "w") as fh:
            json.dump(data, fh, indent=1)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("re,im,order,l,m_l\n")
            for e in self.entries:
                fh.write(f"{e.zeta.real:.12g},{e.zeta.imag:.12g},{e.order},{e.l},{e.m_l}\n")


def counting_function(rlist: ResonanceList, dim: HyperbolicDim, r: float) -> int:
    """Multiplicity-weighted #{zeta : |zeta - n/2| <= r}.

    The caller is responsible for completeness of the list in the disk
    (rlist.covers(r) and rlist.complete); otherwise the count is a lower
    bound only.
    """
    c = dim.n / 2.0
    return sum(e.multiplicity for e in rlist.entries if abs(e.zeta - c) <= r)


def counting_bound_constant(rlist: ResonanceList, dim: HyperbolicDim,
                            r_min: float = 0.5) -> float:
    """Smallest C with N_V(r) <= C r^{n+1} over the searched radii."""
    c = dim.n / 2.0
    radii = sorted(abs(e.zeta - c) for e in rlist.entries)
    best = 0.0
    for rr in radii:
        if rr >= r_min:
            best = max(best, counting_function(rlist, dim, rr) / rr ** (dim.n + 1))
    return best


class _ChannelEvaluator:
    """Batched D_l evaluations with a winding helper."""

    def __init__(self, sector, V, r_match, tol=1e-12):
        self.sector = sector
        self.V = V
        self.r_match = r_match
        self.tol = tol
        self.evals = 0

    def __call__(self, s_values):
        s_values = np.atleast_1d(np.asarray(s_values, dtype=complex))
        self.evals += s_values.size
        if self.evals > _MAX_BOUNDARY_POINTS * 20:
            raise NumericalBudgetError(
                f"channel l={self.sector.l}: evaluation budget exceeded")
        return np.atleast_1d(jost_batch(self.sector, s_values, self.V,
                                        self.r_match, self.tol))

    def winding_loop(self, points):
        """Winding number along a closed polyline of sample points; refines
        until adjacent phase steps are < pi/2.  Returns (winding, min|D|,
        median|D|)."""
        pts = np.asarray(points, dtype=complex)
        vals = self(pts)
        for _ in range(24):
            ang = np.angle(vals)
            steps = np.angle(np.exp(1j * np.diff(np.concatenate([ang, ang[:1]]))))
            bad = np.abs(steps) >= math.pi / 2.0
            if not bad.any():
                total = float(np.sum(steps))
                return (int(round(total / (2.0 * math.pi))),
                        float(np.min(np.abs(vals))), float(np.median(np.abs(vals))))
            if pts.size > _MAX_BOUNDARY_POINTS:
                raise NumericalBudgetError(
                    f"winding refinement budget exceeded (l={self.sector.l}, "
                    f"{pts.size} boundary points)")
            nxt = np.roll(pts, -1)
            mids = 0.5 * (pts[bad] + nxt[bad])
            mvals = self(mids)
            order = np.argsort(np.concatenate(
                [np.arange(pts.size, dtype=float),
                 np.nonzero(bad)[0] + 0.5]), kind="stable")
            pts = np.concatenate([pts, mids])[order]
            vals = np.concatenate([vals, mvals])[order]
        raise NumericalBudgetError("winding refinement did not stabilize")


def _rectangle_loop(region: SearchRegion, per_side: int = 24):
    a, b = region.re_range
    c, d = region.im_range
    t = np.linspace(0.0, 1.0, per_side, endpoint=False)
    bottom = a + (b - a) * t + 1j * c
    right = b + 1j * (c + (d - c) * t)
    top = b - (b - a) * t + 1j * d
    left = a + 1j * (d - (d - c) * t)
    return np.concatenate([bottom, right, top, left])


def _circle_loop(center: complex, radius: float, n: int = 32):
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return center + radius * np.exp(1j * th)


def _rect_count(ev: _ChannelEvaluator, region: SearchRegion, rng,
                return_region: bool = False):
    """Winding count with boundary-standoff protection.

    Jitter shifts grow per retry so a zero hugging the boundary is escaped;
    the (possibly shifted) rectangle actually counted is returned on request
    so subdivision can recurse on exactly the region that was counted.
    """
    standoff = _STANDOFF_FRACTION * region.diameter
    reg = region
    for attempt in range(_JITTER_RETRIES + 1):
        w, dmin, dmed = ev.winding_loop(_rectangle_loop(reg))
        if dmin > 3.0e-3 * dmed:
            return (w, reg) if return_region else w
        scale = standoff * 3.0 ** attempt
        shift = scale * complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        reg = region.shifted(shift)
    raise NumericalBudgetError(
        f"boundary-zero proximity persists after {_JITTER_RETRIES} jitter retries "
        f"near {region.center}")


def count_zeros(sector: Sector, region: SearchRegion, V: RadialPotential,
                r_match: float = None, seed: int = 0) -> int:
    """Winding number of D_l around the region boundary (exact integer),
    with exclusion-disk windings subtracted."""
    if r_match is None:
        r_match = default_r_match(V)
    ev = _ChannelEvaluator(sector, V, r_match)
    rng = np.random.default_rng(seed + 977 * sector.l)
    total = _rect_count(ev, region, rng)
    for d in region.exclusions:
        if region.contains(d.center):
            w, _, _ = ev.winding_loop(_circle_loop(d.center, d.radius))
            total -= w
    return total


def _newton_polish(ev: _ChannelEvaluator, s0: complex, cell_diam: float,
                   local_scale: float):
    """Newton iteration on D_l from s0; returns (root, position_uncertainty)
    or None.

    Primary acceptance is the spec rule (|step| < 1e-10(1+|s|) and
    |D| < 1e-9 local scale).  Deep in the continued region the evaluation
    noise floor exceeds that, so a stagnating iteration is also accepted at
    its best iterate provided |D| is small against the local scale; the
    backward-error bound |D|/|D'| is reported as the position uncertainty.
    """
    s = complex(s0)
    best = None
    prev_step = math.inf
    stagnant = 0
    for _ in range(_NEWTON_MAX_ITER):
        h = 1e-6 * (1.0 + abs(s))
        d0, dp, dm = ev(np.array([s, s + h, s - h]))
        der = (dp - dm) / (2.0 * h)
        if der == 0:
            return None
        uncert = abs(d0) / abs(der)
        if best is None or abs(d0) < best[1]:
            best = (s, abs(d0), uncert)
        step = -d0 / der
        if abs(step) > 2.0 * cell_diam:
            return None
        s = s + step
        if abs(s - s0) > 3.0 * cell_diam:
            return None
        if abs(step) < 1e-10 * (1.0 + abs(s)):
            val = ev(np.array([s]))[0]
            if abs(val) < 1e-9 * max(local_scale, 1e-300):
                return s, abs(val) / abs(der)
            return None
        if abs(step) < 1e-5 * (1.0 + abs(s)) and abs(step) > 0.3 * prev_step:
            stagnant += 1
            if stagnant >= 3:
                root, dval, uncert = best
                if dval < 1e-6 * max(local_scale, 1e-300):
                    return root, uncert
                return None
        else:
            stagnant = 0
        prev_step = abs(step)
    return None


def _order_at(ev, root, radius):
    w, dmin, _ = ev.winding_loop(_circle_loop(root, radius, n=24))
    return w


def _hunt_cell(ev, region, count, rng, out, depth=0):
    if count == 0:
        return
    diam = region.diameter
    if diam < _MIN_CELL:
        raise NumericalBudgetError(
            f"cell at {region.center} shrank below {_MIN_CELL} with count={count}")
    if count == 1 or diam < 1e-4:
        _, _, dmed = ev.winding_loop(_rectangle_loop(region, per_side=8))
        polished = _newton_polish(ev, region.center, diam, dmed)
        if polished is not None and region.contains(polished[0]):
            root = polished[0]
            order = _order_at(ev, root, max(1e-5, min(1e-3, 0.05 * diam)))
            if order == count:
                out.append((root, order, polished[1]))
                return
    # split along the longer axis, the cut jittered so zeros do not sit on
    # it; children are recursed on the rectangles that were actually counted
    # (jitter may shift them), soundness guaranteed by the sum check
    a, b = region.re_range
    c, d = region.im_range
    jit = 0.02 * (rng.uniform() - 0.5)
    for attempt in range(6):
        if (b - a) >= (d - c):
            m = 0.5 * (a + b) + jit * (b - a)
            kids = [SearchRegion((a, m), (c, d)), SearchRegion((m, b), (c, d))]
        else:
            m = 0.5 * (c + d) + jit * (d - c)
            kids = [SearchRegion((a, b), (c, m)), SearchRegion((a, b), (m, d))]
        try:
            counted = [_rect_count(ev, k, rng, return_region=True) for k in kids]
        except NumericalBudgetError:
            jit = (0.08 + 0.05 * attempt) * (rng.uniform() - 0.5)
            continue
        counts = [cc[0] for cc in counted]
        kids = [cc[1] for cc in counted]
        if sum(counts) == count:
            break
        jit = (0.08 + 0.05 * attempt) * (rng.uniform() - 0.5)
    else:
        raise InternalConsistencyError(
            f"split counts do not add to parent count {count} near {region.center}")
    for k, cnt in zip(kids, counts):
        _hunt_cell(ev, k, cnt, rng, out, depth + 1)


def find_resonances(dim: HyperbolicDim, V: RadialPotential, region: SearchRegion,
                    L_max="auto", r_match: float = None, seed: int = 0,
                    stability_filter: bool = True) -> ResonanceList:
    """Locate all channel Jost zeros in the region, with multiplicities.

    Channels run up to L_max (centrifugal criterion by default).  Roots are
    polished by Newton, verified by a winding recount, and kept only when
    stable under r_match -> r_match + 0.25 (others are recorded on
    .rejected).  Zeros falling in exclusion disks are dropped from entries.
    """
    if r_match is None:
        r_match = default_r_match(V)
    if L_max == "auto":
        corners = _rectangle_loop(region, per_side=16)
        lam_max = float(np.max(np.abs(corners * (dim.n - corners))))
        L_max = channel_region_bound(dim, V, lam_max)
    rng = np.random.default_rng(seed)
    entries = []
    rejected = []
    for l in range(L_max + 1):
        sector = Sector(dim, l)
        ev = _ChannelEvaluator(sector, V, r_match)
        total = _rect_count(ev, region, rng)
        if total == 0:
            continue
        roots = []
        _hunt_cell(ev, region, total, rng, roots)
        if sum(o for _, o, _ in roots) != total:
            raise InternalConsistencyError(
                f"l={l}: polished orders {roots} do not sum to the "
                f"argument-principle count {total}")
        for root, order, uncert in roots:
            if region.excluded(root):
                rejected.append(Resonance(root, order, l, sector.multiplicity))
                continue
            if stability_filter:
                # a normalization artifact does not persist under an r_match
                # change; a genuine zero stays within the position-uncertainty
                # circle, verified by an exact winding recount at the new
                # radius (robust where Newton hits the conditioning floor)
                ev2 = _ChannelEvaluator(sector, V, r_match + 0.25)
                rho = max(_STABILITY_TOL, 200.0 * uncert, 1e-4)
                persists = False
                for attempt in range(3):
                    try:
                        w2, _, _ = ev2.winding_loop(_circle_loop(root, rho))
                    except NumericalBudgetError:
                        rho *= 3.0
                        continue
                    persists = w2 >= order
                    break
                if not persists:
                    rejected.append(Resonance(root, order, l, sector.multiplicity))
                    continue
            entries.append(Resonance(root, order, l, sector.multiplicity))
    return ResonanceList(dim=dim, entries=entries, region=region,
                         complete=True, rejected=rejected)


def probe_critical_multiplicity(dim: HyperbolicDim, V: RadialPotential,
                                radius: float = 1e-2, L_max: int = 4,
                                r_match: float = None) -> int:
    """Winding count of the channel Jost functions on |s - n/2| = radius,
    multiplicity-weighted: the 'probe value' for m_V(n/2)."""
    if r_match is None:
        r_match = default_r_match(V)
    total = 0
    for l in range(L_max + 1):
        ev = _ChannelEvaluator(Sector(dim, l), V, r_match)
        w, _, _ = ev.winding_loop(_circle_loop(dim.n / 2.0, radius))
        total += w * dim.multiplicity(l)
    return total
