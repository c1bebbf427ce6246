"""Independent spectral oracle: monodromy matrices and the classical
determinant-form periodic Evans function.

The operator eigenproblem (L - lam) u = 0 is reduced to a first-order system
W' = B(x, lam) W; the period map M(lam) (monodromy) is computed with an
embedded Dormand-Prince 4(5) pair under PI step control, with coefficient
values taken directly from the Fourier tables (spectrally accurate).  Zeros
of det(M(lam) - exp(i*sigma*X) I) in lam are the sigma-fiber eigenvalues,
giving a validation path fully independent of the Galerkin machinery.

B is affine in lam, so a whole batch of lam values integrates in one pass
with a shared adaptive step (the step sequence is deterministic and batch
results equal scalar runs to integrator tolerance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ReductionError, StiffnessError
from .fourier import derivative_series, series_add, series_scale
from .operators import OperatorSpec, brillouin_reduce

__all__ = [
    "CompanionSystem",
    "MonodromyResult",
    "companion_system",
    "monodromy",
    "monodromy_batch",
    "evans_gardner",
    "evans_gardner_batch",
    "liouville_residual",
]

_ROW_VANISH_TOL = 1e-13


def _nondivergence_coeffs(spec: OperatorSpec):
    """Series b_i with sum_k d^k (a_k u) = sum_i b_i u^(i) (Leibniz expansion)."""
    if spec.form == "nondivergence":
        return list(spec.coeffs)
    out = [None] * (spec.order + 1)
    for k in range(spec.order + 1):
        d = spec.coeffs[k]
        for i in range(k, -1, -1):
            term = series_scale(d, math.comb(k, i))
            out[i] = term if out[i] is None else series_add(out[i], term)
            if i > 0:
                d = derivative_series(d)
    return out


@dataclass
class CompanionSystem:
    """First-order system W' = (B0(x) + lam*B1(x)) W equivalent to (L-lam)u=0."""

    spec: OperatorSpec
    size: int
    row_orders: tuple
    offsets: tuple
    b_series: list = field(repr=False)

    def matrices(self, x: float):
        """(B0(x), B1(x)), each size x size complex."""
        n = self.spec.dim
        orders = self.row_orders
        bvals = [s.evaluate(x) for s in self.b_series]  # each (n, n)
        B0 = np.zeros((self.size, self.size), dtype=complex)
        B1 = np.zeros((self.size, self.size), dtype=complex)
        for i in range(n):
            off, mi = self.offsets[i], orders[i]
            for d in range(mi - 1):
                B0[off + d, off + d + 1] = 1.0
            top = off + mi - 1
            pi = bvals[mi][i, i]
            if abs(pi) < 1e-12:
                raise ReductionError(f"principal coefficient row {i} vanishes at x={x}")
            inv = 1.0 / pi
            B1[top, self.offsets[i]] = inv
            for l in range(n):
                for k in range(min(self.spec.order, len(bvals) - 1) + 1):
                    if l == i and k == mi:
                        continue
                    c = bvals[k][i, l]
                    if c == 0:
                        continue
                    if k > orders[l] - 1:
                        if abs(c) < _ROW_VANISH_TOL:
                            continue
                        raise ReductionError(
                            f"row {i} couples to derivative {k} of variable {l} "
                            f"(only {orders[l] - 1} available)"
                        )
                    B0[top, self.offsets[l] + k] -= inv * c
        return B0, B1


def companion_system(spec: OperatorSpec, grid_check: int = 64) -> CompanionSystem:
    """Reduce (L - lam)u = 0 to first order; dimension n*m (sum m_i if composite).

    The principal coefficient must be invertible pointwise; a sample-grid scan
    reports the first offending location.
    """
    orders = spec.row_orders()
    offsets = []
    off = 0
    for mi in orders:
        offsets.append(off)
        off += mi
    b = _nondivergence_coeffs(spec)
    xs = np.arange(grid_check) * (spec.period / grid_check)
    if spec.composite_orders is None:
        vals = b[spec.order].evaluate(xs)
        dets = np.abs(np.linalg.det(vals))
        if np.min(dets) < 1e-12:
            x_bad = xs[int(np.argmin(dets))]
            raise ReductionError(f"principal coefficient singular near x={x_bad:.6g}")
    else:
        for i, mi in enumerate(orders):
            vals = b[mi].evaluate(xs)[:, i, i]
            if np.min(np.abs(vals)) < 1e-12:
                x_bad = xs[int(np.argmin(np.abs(vals)))]
                raise ReductionError(f"row {i} principal coefficient vanishes near x={x_bad:.6g}")
    return CompanionSystem(spec, off, orders, tuple(offsets), b)


@dataclass
class MonodromyResult:
    M: np.ndarray = field(repr=False)
    lam: complex
    steps: int
    rejected: int
    max_error_estimate: float


# Dormand-Prince 4(5) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


def _integrate_fundamental(system: CompanionSystem, lams: np.ndarray, tol: float):
    """Fundamental solutions over [0, X] for every lam in the batch."""
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError("tol must lie in [1e-12, 1e-4]")
    X = system.spec.period
    N = system.size
    nb = len(lams)
    lam_col = lams[:, np.newaxis, np.newaxis]
    Y = np.broadcast_to(np.eye(N, dtype=complex), (nb, N, N)).copy()

    def rhs(x, y):
        B0, B1 = system.matrices(x)
        return np.matmul(B0[np.newaxis] + lam_col * B1[np.newaxis], y)

    x, h = 0.0, X / 100.0
    steps = rejected = 0
    max_err = 0.0
    err_prev = 1.0
    while x < X:
        h = min(h, X - x)
        if h < 1e-14 * X:
            raise StiffnessError(
                f"step size underflow at x={x:.6g}; raise tol or reduce |lambda|"
            )
        ks = [rhs(x, Y)]
        for i in range(1, 7):
            yi = Y + h * sum(a * k for a, k in zip(_DP_A[i], ks))
            ks.append(rhs(x + _DP_C[i] * h, yi))
        y5 = Y + h * sum(b * k for b, k in zip(_DP_B5, ks) if b != 0.0)
        y4 = Y + h * sum(b * k for b, k in zip(_DP_B4, ks) if b != 0.0)
        scale = tol + tol * np.maximum(np.abs(Y), np.abs(y5))
        err = float(np.max(np.sqrt(np.mean((np.abs(y5 - y4) / scale) ** 2, axis=(1, 2)))))
        if err <= 1.0:
            x += h
            Y = y5
            steps += 1
            max_err = max(max_err, err * tol)
            # PI controller (beta = 0.4/5)
            factor = 0.9 * (err + 1e-16) ** (-0.7 / 5) * err_prev ** (0.4 / 5)
            err_prev = err + 1e-16
            h *= min(5.0, max(0.2, factor))
        else:
            rejected += 1
            h *= max(0.2, 0.9 * err ** (-1 / 5))
    return Y, steps, rejected, max_err


def monodromy(spec: OperatorSpec, lam: complex, tol: float = 1e-10) -> MonodromyResult:
    """Period map of W' = B(x, lam) W, integrated from the identity."""
    system = companion_system(spec)
    Y, steps, rejected, max_err = _integrate_fundamental(
        system, np.array([complex(lam)]), tol
    )
    return MonodromyResult(Y[0], complex(lam), steps, rejected, max_err)


def monodromy_batch(spec: OperatorSpec, lams, tol: float = 1e-10) -> np.ndarray:
    """Monodromy matrices for a batch of lam values, shape (len(lams), N, N)."""
    system = companion_system(spec)
    Y, _, _, _ = _integrate_fundamental(system, np.asarray(lams, dtype=complex), tol)
    return Y


def evans_gardner(spec: OperatorSpec, lam: complex, sigma: float, tol: float = 1e-10) -> complex:
    """Classical periodic Evans function det(M(lam) - exp(i*sigma*X) I)."""
    return complex(evans_gardner_batch(spec, [lam], sigma, tol)[0])


def evans_gardner_batch(spec: OperatorSpec, lams, sigma: float, tol: float = 1e-10) -> np.ndarray:
    sigma = brillouin_reduce(sigma, spec.period)
    M = monodromy_batch(spec, lams, tol)
    mult = np.exp(1j * sigma * spec.period)
    eye = np.eye(M.shape[1], dtype=complex)
    return np.linalg.det(M - mult * eye[np.newaxis])


def liouville_residual(spec: OperatorSpec, lam: complex, M: np.ndarray, quad_points: int = 512) -> float:
    """Relative defect |det M - exp(integral of tr B)| / |exp(integral of tr B)|."""
    system = companion_system(spec)
    xs = np.arange(quad_points) * (spec.period / quad_points)
    tr = 0j
    for x in xs:
        B0, B1 = system.matrices(float(x))
        tr += np.trace(B0 + lam * B1)
    integral = tr * (spec.period / quad_points)
    expected = np.exp(integral)
    return float(abs(np.linalg.det(M) - expected) / abs(expected))
