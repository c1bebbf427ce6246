"""Divergence-form periodic operator definitions and well-posedness checks.

An operator is L = sum_{k=0}^{m} d^k/dx^k (a_k(x) u) in divergence form, or
L = sum_k a_k(x) d^k u/dx^k in nondivergence form.  The Floquet parameter
sigma lives in the Brillouin interval [0, 2*pi/X); sigma enters assembly by
shifting the diagonal symbol, never by rewriting coefficients (the order-2
coefficient rewrite is kept as an independent cross-check path).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import fourier
from .errors import UnsupportedFormError
from .fourier import FourierSeries, constant_series, derivative_series, series_add, series_scale

__all__ = [
    "OperatorSpec",
    "BlochParams",
    "ValidationReport",
    "brillouin_reduce",
    "validate",
    "to_divergence_form",
    "to_nondivergence_form",
    "bloch_rewrite_order2",
]

SPD_SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class OperatorSpec:
    """Periodic-coefficient differential operator of order `order`.

    coeffs[k] is the series of a_k, k = 0..order.  composite_orders, when
    given, lists the derivative order of each scalar row of the system;
    row i of a_k must then vanish for k > composite_orders[i].
    """

    order: int
    dim: int
    coeffs: tuple
    form: str = "divergence"
    composite_orders: Optional[tuple] = None

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.form not in ("divergence", "nondivergence"):
            raise ValueError(f"unknown form {self.form!r}")
        coeffs = tuple(self.coeffs)
        if len(coeffs) != self.order + 1:
            raise ValueError(f"need {self.order + 1} coefficient series, got {len(coeffs)}")
        period = coeffs[0].period
        for s in coeffs:
            if s.period != period or s.dim != self.dim:
                raise ValueError("all coefficients must share period and dimension")
        object.__setattr__(self, "coeffs", coeffs)
        if self.composite_orders is not None:
            orders = tuple(int(v) for v in self.composite_orders)
            if len(orders) != self.dim:
                raise ValueError("composite_orders must list one order per row")
            if any(v < 1 for v in orders):
                raise ValueError("composite row orders must be >= 1")
            if max(orders) != self.order:
                raise ValueError("order must equal max(composite_orders)")
            object.__setattr__(self, "composite_orders", orders)

    @property
    def period(self) -> float:
        return self.coeffs[0].period

    @property
    def max_cutoff(self) -> int:
        return max(s.cutoff for s in self.coeffs)

    def row_orders(self) -> tuple:
        """Derivative order of each scalar row (uniform unless composite)."""
        if self.composite_orders is not None:
            return self.composite_orders
        return (self.order,) * self.dim

    def principal(self) -> FourierSeries:
        return self.coeffs[self.order]

    def has_identity_principal(self, tol: float = 1e-13) -> bool:
        p = self.principal()
        dev = p.coeffs.copy()
        dev[p.cutoff] -= np.eye(p.dim)
        return bool(np.max(np.abs(dev)) < tol) and self.composite_orders is None

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.order},{self.dim},{self.form},{self.composite_orders}".encode())
        for s in self.coeffs:
            h.update(f"{s.period!r},{s.cutoff}".encode())
            h.update(np.ascontiguousarray(s.coeffs).tobytes())
        return h.hexdigest()[:16]


def brillouin_reduce(sigma: float, period: float) -> float:
    """Reduce sigma into [0, 2*pi/period)."""
    width = 2.0 * math.pi / period
    return float(sigma % width)


@dataclass(frozen=True)
class BlochParams:
    """Floquet exponent reduced to the fundamental interval [0, 2*pi/X)."""

    sigma: float
    period: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", brillouin_reduce(self.sigma, self.period))


@dataclass(frozen=True)
class ValidationReport:
    spd: bool
    lower_bound: float          # min over x of the smallest eigenvalue of the symmetric part
    symmetry_defect: float      # sup-norm of a_m - a_m^T over the grid
    grid_points: int
    warning: Optional[str] = None


def validate(spec: OperatorSpec, grid_N: int = 256) -> ValidationReport:
    """Sample the principal coefficient and test symmetric positive definiteness.

    Non-SPD principal parts get a warning, not a rejection: the convergence
    theory needs SPD, but computing outside that class is still permitted.
    """
    if grid_N < 2 * spec.max_cutoff + 1:
        raise ValueError(f"grid_N must be >= {2 * spec.max_cutoff + 1} to resolve the coefficients")
    xs = np.arange(grid_N) * (spec.period / grid_N)

    if spec.composite_orders is not None:
        return _validate_composite(spec, xs, grid_N)

    values = spec.principal().evaluate(xs)  # (N, n, n)
    defect = float(np.max(np.abs(values - np.transpose(values, (0, 2, 1)))))
    sym = 0.5 * (values + np.conj(np.transpose(values, (0, 2, 1))))
    eigs = np.linalg.eigvalsh(sym)
    lower = float(np.min(eigs))
    spd = defect < SPD_SYMMETRY_TOL and lower > 0.0
    warning = None if spd else (
        "principal coefficient is not symmetric positive definite: "
        "outside the proven convergence class (computation still permitted)"
    )
    return ValidationReport(spd, lower, defect, grid_N, warning)


def _validate_composite(spec: OperatorSpec, xs, grid_N: int) -> ValidationReport:
    # Row-principal check: diagonal entry of a_{m_i} in row i must be real
    # and positive; off-row entries of higher-order coefficients must vanish.
    lower = math.inf
    defect = 0.0
    for i, mi in enumerate(spec.composite_orders):
        vals = spec.coeffs[mi].evaluate(xs)[:, i, i]
        defect = max(defect, float(np.max(np.abs(vals.imag))))
        lower = min(lower, float(np.min(vals.real)))
        for k in range(mi + 1, spec.order + 1):
            row = spec.coeffs[k].evaluate(xs)[:, i, :]
            if np.max(np.abs(row)) > 1e-13:
                raise ValueError(f"row {i} has order {mi} but a_{k} row {i} is nonzero")
    spd = defect < SPD_SYMMETRY_TOL and lower > 0.0
    warning = None if spd else (
        "a row-principal coefficient is not positive: outside the proven convergence class"
    )
    return ValidationReport(spd, lower, defect, grid_N, warning)


def _binomial(k: int, i: int) -> int:
    return math.comb(k, i)


def to_divergence_form(spec: OperatorSpec) -> OperatorSpec:
    """Rewrite a_k(x) d^k as divergence-form blocks via the Leibniz rule.

    a d^k = sum_{i<=k} (-1)^(k-i) C(k,i) d^i (a^{(k-i)} .), exact on Hill
    truncations because the frequency symbol is diagonal.
    """
    if spec.form == "divergence":
        return spec
    new = _leibniz_transport(spec, sign=-1)
    return OperatorSpec(spec.order, spec.dim, new, "divergence", spec.composite_orders)


def to_nondivergence_form(spec: OperatorSpec) -> OperatorSpec:
    """Inverse rewrite: d^k (a_k .) = sum_{i<=k} C(k,i) a_k^{(k-i)} d^i."""
    if spec.form == "nondivergence":
        return spec
    new = _leibniz_transport(spec, sign=+1)
    return OperatorSpec(spec.order, spec.dim, new, "nondivergence", spec.composite_orders)


def _leibniz_transport(spec: OperatorSpec, sign: int):
    zero = series_scale(constant_series(0.0, spec.period, spec.dim), 0.0)
    out = [zero] * (spec.order + 1)
    for k in range(spec.order + 1):
        d = spec.coeffs[k]
        for i in range(k, -1, -1):
            factor = _binomial(k, i) * (1 if sign > 0 else (-1) ** (k - i))
            out[i] = series_add(out[i], series_scale(d, factor))
            if i > 0:
                d = derivative_series(d)
    return tuple(out)


def bloch_rewrite_order2(spec: OperatorSpec, sigma: float):
    """Absorb sigma into the coefficients of an order-2, identity-principal operator.

    Returns (A_1, A_0) with A_1 = a_1 + 2*i*sigma, A_0 = a_0 - sigma^2 + i*sigma*a_1.
    Cross-check path only; assembly itself shifts the diagonal symbol.
    """
    if spec.order != 2 or not spec.has_identity_principal():
        raise UnsupportedFormError("rewrite requires order 2 with identity principal part")
    sigma = brillouin_reduce(sigma, spec.period)
    a1, a0 = spec.coeffs[1], spec.coeffs[0]
    A1 = series_add(a1, constant_series(2j * sigma, spec.period, spec.dim))
    A0 = series_add(
        series_add(a0, constant_series(-sigma * sigma, spec.period, spec.dim)),
        series_scale(a1, 1j * sigma),
    )
    return A1, A0
