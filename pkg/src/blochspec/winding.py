"""Argument-principle root counting and localization for analytic functions.

All phase bookkeeping works on (log-magnitude, phase) pairs, so functions
whose magnitude overflows or underflows never corrupt a count.  Functions may
be plain complex-valued, return (log_mag, phase) tuples, or return
EvansValue-like objects; batched (ndarray-in, ndarray-out) callables are
exploited when available, which matters when each evaluation is an ODE solve.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.optimize

from .errors import (
    BoundaryZeroError,
    ContourThroughZeroError,
    RefinementBudgetError,
)

__all__ = [
    "Contour",
    "WindingReport",
    "MatchReport",
    "RootEstimate",
    "winding_number",
    "localize_roots",
    "match_spectra",
]

ZERO_LOG_THRESHOLD = -20.0
MAX_CONTOUR_SAMPLES = 1 << 16
PHASE_STEP_LIMIT = math.pi / 2.0


@dataclass(frozen=True)
class Contour:
    """Circle about a center or an axis-aligned rectangle between two corners."""

    kind: str
    center: complex = 0j
    radius: float = 0.0
    lo: complex = 0j
    hi: complex = 0j
    samples: int = 16

    @staticmethod
    def circle(center: complex, radius: float, samples: int = 16) -> "Contour":
        if radius <= 0:
            raise ValueError("radius must be positive")
        return Contour("circle", center=complex(center), radius=float(radius),
                       samples=max(16, samples))

    @staticmethod
    def rectangle(corner_a: complex, corner_b: complex, samples: int = 16) -> "Contour":
        lo = complex(min(corner_a.real, corner_b.real), min(corner_a.imag, corner_b.imag))
        hi = complex(max(corner_a.real, corner_b.real), max(corner_a.imag, corner_b.imag))
        if lo.real == hi.real or lo.imag == hi.imag:
            raise ValueError("rectangle is degenerate")
        return Contour("rectangle", lo=lo, hi=hi, samples=max(16, samples))

    def point(self, t) -> np.ndarray:
        """Map parameter t in [0,1) to the contour, counterclockwise."""
        t = np.asarray(t, dtype=float)
        if self.kind == "circle":
            return self.center + self.radius * np.exp(2j * math.pi * t)
        w, h = self.hi.real - self.lo.real, self.hi.imag - self.lo.imag
        per = 2.0 * (w + h)
        d = (t % 1.0) * per
        z = np.empty(t.shape, dtype=complex)
        flat_d, flat_z = np.ravel(d), np.ravel(z)
        for i, dd in enumerate(flat_d):
            if dd < w:
                flat_z[i] = self.lo + dd
            elif dd < w + h:
                flat_z[i] = complex(self.hi.real, self.lo.imag + (dd - w))
            elif dd < 2 * w + h:
                flat_z[i] = complex(self.hi.real - (dd - w - h), self.hi.imag)
            else:
                flat_z[i] = complex(self.lo.real, self.hi.imag - (dd - 2 * w - h))
        return z.reshape(t.shape)


@dataclass(frozen=True)
class WindingReport:
    winding: int
    min_modulus_on_contour: float
    refinements: int
    samples_used: int


@dataclass(frozen=True)
class RootEstimate:
    root: complex
    multiplicity: int
    box_size: float

    def __iter__(self):  # allows `for root, mult in ...` style unpacking
        yield self.root
        yield self.multiplicity


@dataclass(frozen=True)
class MatchReport:
    max_distance: float
    mean_distance: float
    hausdorff: float
    matched: int
    unmatched_a: int
    unmatched_b: int


def _normalize_output(res, count: int):
    """Coerce an f() result into (log_mag, phase) float arrays of length count."""
    if hasattr(res, "log_mag"):
        return (np.full(count, float(res.log_mag)), np.full(count, float(res.phase)))
    if isinstance(res, tuple) and len(res) == 2:
        lm = np.broadcast_to(np.asarray(res[0], dtype=float), (count,)).copy()
        ph = np.broadcast_to(np.asarray(res[1], dtype=float), (count,)).copy()
        return lm, ph
    w = np.broadcast_to(np.asarray(res, dtype=complex), (count,))
    with np.errstate(divide="ignore"):
        return np.log(np.abs(w)), np.angle(w)


class _BatchEvaluator:
    """Wraps f with batching (when supported) and a per-point memo."""

    def __init__(self, f: Callable):
        self.f = f
        self.memo: dict = {}
        self.calls = 0
        self.scalar_only = False

    def __call__(self, lams: np.ndarray):
        lams = np.asarray(lams, dtype=complex)
        missing = [z for z in lams if z not in self.memo]
        if missing:
            arr = np.array(missing, dtype=complex)
            self.calls += len(missing)
            if not self.scalar_only:
                try:
                    lm, ph = _normalize_output(self.f(arr), len(missing))
                except (TypeError, ValueError, AttributeError):
                    self.scalar_only = True
            if self.scalar_only:
                lm = np.empty(len(missing))
                ph = np.empty(len(missing))
                for i, z in enumerate(arr):
                    a, b = _normalize_output(self.f(complex(z)), 1)
                    lm[i], ph[i] = a[0], b[0]
            for z, a, b in zip(missing, lm, ph):
                self.memo[z] = (float(a), float(b))
        out_lm = np.array([self.memo[z][0] for z in lams])
        out_ph = np.array([self.memo[z][1] for z in lams])
        return out_lm, out_ph


def _wrap(delta: np.ndarray) -> np.ndarray:
    return (delta + math.pi) % (2.0 * math.pi) - math.pi


class _ContourTracker:
    """Adaptive phase sampling along one contour.

    Holds sorted parameters t in [0,1); an increment between neighbors (with
    wraparound) violating |delta| >= pi/2 requests the midpoint.  The caller
    evaluates requested points in bulk and feeds values back.
    """

    def __init__(self, contour: Contour, zero_log=ZERO_LOG_THRESHOLD):
        self.contour = contour
        self.zero_log = zero_log
        n = 1 << max(4, int(math.ceil(math.log2(max(contour.samples, 16)))))
        self.ts = list(np.arange(n) / n)
        self.known: dict = {}
        self.refinements = 0
        self.zero_hit: Optional[complex] = None
        self._verified_total: Optional[float] = None

    def pending(self):
        return [t for t in self.ts if t not in self.known]

    def feed(self, ts, lms, phs):
        for t, lm, ph in zip(ts, lms, phs):
            self.known[t] = (lm, ph)
            if lm < self.zero_log and self.zero_hit is None:
                self.zero_hit = complex(self.contour.point(t))

    def step(self):
        """Insert midpoints where increments are too large; True when settled."""
        if self.zero_hit is not None or self.pending():
            return False
        phases = np.array([self.known[t][1] for t in self.ts])
        deltas = _wrap(np.diff(np.append(phases, phases[0])))
        # a full 2*pi phase loop between neighbors wraps to a small increment;
        # large magnitude swings flag those aliased stretches for refinement
        mags = np.array([self.known[t][0] for t in self.ts])
        dmags = np.abs(np.diff(np.append(mags, mags[0])))
        bad = np.nonzero((np.abs(deltas) >= PHASE_STEP_LIMIT) | (dmags >= 1.0))[0]
        if len(bad) == 0:
            # increments can alias: a smooth factor rotating by ~2*pi between
            # neighbors wraps to a small step that passes both tests.  Bisect
            # every interval once and accept only if the total is unchanged.
            total = float(np.sum(deltas))
            if (self._verified_total is not None
                    and abs(total - self._verified_total) < 1e-9):
                return True
            self._verified_total = total
            bad = np.arange(len(self.ts))
        else:
            self._verified_total = None
        if len(self.ts) + len(bad) > MAX_CONTOUR_SAMPLES:
            raise RefinementBudgetError(
                f"contour needed more than {MAX_CONTOUR_SAMPLES} samples"
            )
        new = []
        for i in bad:
            t0 = self.ts[i]
            t1 = self.ts[i + 1] if i + 1 < len(self.ts) else 1.0
            new.append(0.5 * (t0 + t1))
        self.ts = sorted(self.ts + new)
        self.refinements += 1
        return False

    def result(self) -> WindingReport:
        phases = np.array([self.known[t][1] for t in self.ts])
        mags = np.array([self.known[t][0] for t in self.ts])
        total = float(np.sum(_wrap(np.diff(np.append(phases, phases[0])))))
        winding = int(round(total / (2.0 * math.pi)))
        residual = abs(total / (2.0 * math.pi) - winding)
        if residual >= 0.05:
            raise RefinementBudgetError(
                f"winding residual {residual:.3f} after {self.refinements} refinements"
            )
        return WindingReport(winding, float(math.exp(max(np.min(mags), -745.0))),
                             self.refinements, len(self.ts))


def winding_number(f: Callable, contour: Contour, zero_log=ZERO_LOG_THRESHOLD) -> WindingReport:
    """Winding number of f around the contour via adaptive phase accumulation.

    Raises ContourThroughZeroError when |f| dips below exp(zero_log) on the
    contour (with a suggested relative perturbation of the contour scale),
    RefinementBudgetError when 2^16 samples do not settle the count.
    """
    ev = f if isinstance(f, _BatchEvaluator) else _BatchEvaluator(f)
    tracker = _ContourTracker(contour, zero_log)
    while True:
        pend = tracker.pending()
        if pend:
            lms, phs = ev(tracker.contour.point(np.array(pend)))
            tracker.feed(pend, lms, phs)
        if tracker.zero_hit is not None:
            scale = contour.radius if contour.kind == "circle" else abs(contour.hi - contour.lo)
            raise ContourThroughZeroError(
                f"contour passes within exp({zero_log}) of a zero near {tracker.zero_hit}",
                suggested_perturbation=1e-3 * scale,
            )
        if tracker.step():
            return tracker.result()


def _quadrisect(lo: complex, hi: complex, fx: float, fy: float):
    mid = complex(lo.real + fx * (hi.real - lo.real), lo.imag + fy * (hi.imag - lo.imag))
    return [
        (lo, mid),
        (complex(mid.real, lo.imag), complex(hi.real, mid.imag)),
        (complex(lo.real, mid.imag), complex(mid.real, hi.imag)),
        (mid, hi),
    ]

# split-fraction retry schedule when a subdivision line hits a zero
# deliberately off-center so grid lines stay clear of the real/imaginary axes
# (where eigenvalues of self-adjoint problems live) even in symmetric regions
_SPLIT_RETRIES = [(0.5078125, 0.4921875), (0.52, 0.48), (0.49, 0.51),
                  (0.53, 0.47), (0.47, 0.53)]


class _Box:
    __slots__ = ("lo", "hi", "tracker", "group")

    def __init__(self, lo, hi, group=None, samples=16):
        self.lo, self.hi = lo, hi
        self.tracker = _ContourTracker(Contour.rectangle(lo, hi, samples))
        self.group = group  # (parent_lo, parent_hi, retry_index) or None for the top box


def localize_roots(f: Callable, corner_a: complex, corner_b: complex,
                   min_box: float = 1e-4, refine: bool = True,
                   zero_log=ZERO_LOG_THRESHOLD):
    """Roots with multiplicities inside a rectangle, by recursive quadrisection.

    Boxes with winding 0 are dropped; boxes below min_box report their
    winding as the multiplicity, with the root estimate polished by
    multiplicity-aware Newton steps on the reconstructed complex values.
    Boundary zeros trigger asymmetric re-splits (up to 5 per subdivision);
    if every retry still hits a zero, the box is treated as terminal with
    the winding recorded at split time (typical for tight root clusters).
    Returns (list of RootEstimate, region WindingReport).
    """
    ev = _BatchEvaluator(f)
    top = Contour.rectangle(corner_a, corner_b)
    region_report = None
    for retry in range(6):
        pad = retry * 1e-3 * abs(top.hi - top.lo)
        outer = Contour.rectangle(top.lo - pad * (1 + 1j), top.hi + pad * (1 + 1j))
        try:
            region_report = winding_number(ev, outer)
            break
        except ContourThroughZeroError:
            if retry == 5:
                raise BoundaryZeroError(f"region boundary {outer.lo}..{outer.hi} keeps hitting zeros")
    active = [_Box(outer.lo, outer.hi)]
    found = []
    split_winding: dict = {}
    while active:
        # evaluate all pending contour points of all active boxes in one batch
        pend = [(box, box.tracker.pending()) for box in active]
        all_ts = []
        for box, ts in pend:
            all_ts.extend(box.tracker.contour.point(np.array(ts)) if ts else [])
        if all_ts:
            ev(np.array(all_ts, dtype=complex))  # warm the memo in one call
        next_active = []
        regroup: dict = {}
        for box, ts in pend:
            if ts:
                lms, phs = ev(box.tracker.contour.point(np.array(ts)))
                box.tracker.feed(ts, lms, phs)
            if box.tracker.zero_hit is not None:
                if box.group is None:
                    raise BoundaryZeroError(
                        f"box {box.lo}..{box.hi}: zero on boundary near {box.tracker.zero_hit}"
                    )
                regroup[box.group] = True
                continue
            if not box.tracker.step():
                next_active.append(box)
                continue
            report = box.tracker.result()
            if report.winding == 0:
                continue
            size = max(box.hi.real - box.lo.real, box.hi.imag - box.lo.imag)
            if size <= min_box:
                center = 0.5 * (box.lo + box.hi)
                found.append((center, report.winding, size))
            else:
                gid = (box.lo, box.hi, 0)
                split_winding[(box.lo, box.hi)] = report.winding
                fx, fy = _SPLIT_RETRIES[0]
                for lo, hi in _quadrisect(box.lo, box.hi, fx, fy):
                    next_active.append(_Box(lo, hi, group=gid))
        # re-split groups whose subdivision line hit a zero
        for (plo, phi, idx), _ in regroup.items():
            next_active = [b for b in next_active if b.group != (plo, phi, idx)]
            if idx + 1 >= len(_SPLIT_RETRIES):
                # every perturbed split line falls inside the zero's dip —
                # happens for multiple roots near min_box, where the basin of
                # log|f| < zero_log is wider than the split jitter.  The box
                # winding is already known; accept it as terminal and let the
                # Newton polish sharpen the estimate.
                size = max(phi.real - plo.real, phi.imag - plo.imag)
                found.append((0.5 * (plo + phi), split_winding[(plo, phi)], size))
                continue
            fx, fy = _SPLIT_RETRIES[idx + 1]
            for lo, hi in _quadrisect(plo, phi, fx, fy):
                next_active.append(_Box(lo, hi, group=(plo, phi, idx + 1)))
        active = next_active

    roots = []
    for center, mult, size in found:
        root = _newton_polish(ev, center, mult, size) if refine else center
        roots.append(RootEstimate(complex(root), mult, float(size)))
    roots.sort(key=lambda r: (r.root.real, r.root.imag))
    return roots, region_report


def _newton_polish(ev: _BatchEvaluator, z0: complex, mult: int, box_size: float) -> complex:
    """Multiplicity-aware Newton iteration on the reconstructed complex value."""
    z = z0
    h = max(1e-7, 1e-6 * box_size)
    for _ in range(40):
        lms, phs = ev(np.array([z, z + h, z - h, z + 1j * h, z - 1j * h]))
        scale = np.max(lms)
        w = np.exp(lms - scale + 1j * phs)
        dwdx = (w[1] - w[2]) / (2 * h)
        dwdy = (w[3] - w[4]) / (2 * h)
        dw = 0.5 * (dwdx - 1j * dwdy)  # complex derivative from CR structure
        if dw == 0:
            break
        step = mult * w[0] / dw
        if not cmath.isfinite(step):
            break
        z_new = z - step
        if abs(z_new - z0) > 4 * box_size:
            break
        z = z_new
        if abs(step) < 1e-13 * max(1.0, abs(z)):
            break
    return z


def match_spectra(a: Sequence[complex], b: Sequence[complex], radius: float) -> MatchReport:
    """Minimal-cost pairing of two eigenvalue multisets inside |z| <= radius.

    Uses the Hungarian assignment on the distance matrix (exact optimal
    pairing); points left over from the larger set are reported, not raised.
    """
    pa = np.array([z for z in np.asarray(a, dtype=complex) if abs(z) <= radius])
    pb = np.array([z for z in np.asarray(b, dtype=complex) if abs(z) <= radius])
    if len(pa) == 0 or len(pb) == 0:
        return MatchReport(0.0, 0.0, math.inf if len(pa) != len(pb) else 0.0,
                           0, len(pa), len(pb))
    cost = np.abs(pa[:, np.newaxis] - pb[np.newaxis, :])
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    dists = cost[rows, cols]
    haus = max(float(np.max(np.min(cost, axis=1))), float(np.max(np.min(cost, axis=0))))
    return MatchReport(
        max_distance=float(np.max(dists)),
        mean_distance=float(np.mean(dists)),
        hausdorff=haus,
        matched=len(rows),
        unmatched_a=len(pa) - len(rows),
        unmatched_b=len(pb) - len(cols),
    )
