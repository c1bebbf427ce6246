"""Carleman-regularized determinants and the truncated Evans functions.

det2(I - A) := det(I - A) * exp(tr A), evaluated in log form (log-magnitude,
phase) so large truncations never overflow.  The Evans function is det2 of
(I + K_J) where K_J is the preconditioned Galerkin truncation of the
Birman-Schwinger operator; its zeros are exactly the eigenvalues of the Hill
matrix at the same truncation level.

Sign conventions, fixed once:
  * the eigenvalue problem reads (I + K)U = 0, so the Evans value is
    det2 applied with A = -K_J;
  * symbols are evaluated exactly: the row-j weight of the order-m
    preconditioner is 1/((i*(xi_j+sigma))^m - 1), which for order 2 is
    -1/((xi_j+sigma)^2 + 1).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import Det2Error, PrincipalSingularError, UnsupportedFormError
from .fourier import toeplitz_block
from .hill import symbol_diagonal
from .operators import OperatorSpec, brillouin_reduce, validate

__all__ = ["EvansValue", "KMatrix", "det2_finite", "assemble_K", "evans",
           "evans_batch", "evans_principal"]


def _wrap_phase(phi: float) -> float:
    """Wrap to (-pi, pi]."""
    out = math.remainder(phi, 2.0 * math.pi)
    if out <= -math.pi:
        out += 2.0 * math.pi
    return out


@dataclass(frozen=True)
class EvansValue:
    """A determinant value stored as (log|.|, arg); log_mag may be -inf."""

    log_mag: float
    phase: float
    J: int = -1
    lam: complex = 0j
    sigma: float = 0.0
    warning: str | None = None

    @property
    def value(self) -> complex:
        """Complex reconstruction; overflows to inf cleanly for log_mag > ~709."""
        if self.log_mag == -math.inf:
            return 0j
        try:
            return cmath.exp(complex(self.log_mag, self.phase))
        except OverflowError:
            return complex(math.inf, math.inf)


@dataclass(frozen=True)
class KMatrix:
    data: np.ndarray = field(repr=False)
    J: int
    sigma: float
    lam: complex
    norm_k1: float
    norm_k0: float


def _log_det2_from_eigs(alphas: np.ndarray):
    logm = 0.0
    phase = 0.0
    for a in alphas:
        w = 1.0 - a
        if w == 0:
            return -math.inf, 0.0
        logm += math.log(abs(w)) + a.real
        phase += cmath.phase(w) + a.imag
    return logm, _wrap_phase(phase)


def _log_det2_from_lu(A: np.ndarray):
    n = A.shape[0]
    lu, piv = scipy.linalg.lu_factor(np.eye(n) - A)
    diag = np.diag(lu)
    if np.any(diag == 0):
        return -math.inf, 0.0
    swaps = int(np.sum(piv != np.arange(n)))
    tr = np.trace(A)
    logm = float(np.sum(np.log(np.abs(diag)))) + tr.real
    phase = float(np.sum(np.angle(diag))) + tr.imag + math.pi * (swaps % 2)
    return logm, _wrap_phase(phase)


def det2_finite(A: np.ndarray, **tags) -> EvansValue:
    """det2(I - A) in log form.

    Primary path: eigenvalues alpha_k of A, summing log(1 - alpha_k) + alpha_k
    (the finite product form).  Falls back to a pivoted LU of (I - A) plus the
    explicit trace factor when the eigensolver fails; both paths agree to
    rounding and the suite checks that.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if not np.all(np.isfinite(A)):
        raise ValueError("A has nonfinite entries")
    try:
        logm, phase = _log_det2_from_eigs(np.linalg.eigvals(A))
    except np.linalg.LinAlgError:
        try:
            logm, phase = _log_det2_from_lu(A)
        except Exception as exc:  # pragma: no cover - double failure is pathological
            raise Det2Error(f"both det2 evaluation paths failed: {exc}") from exc
    return EvansValue(logm, phase, **tags)


def det2_finite_lu(A: np.ndarray, **tags) -> EvansValue:
    """Secondary evaluation path, exposed for cross-checking."""
    A = np.asarray(A, dtype=complex)
    logm, phase = _log_det2_from_lu(A)
    return EvansValue(logm, phase, **tags)


def _preconditioner_diag(spec: OperatorSpec, sigma: float, J: int) -> np.ndarray:
    """Row weights 1/(s_j^m - 1) with the per-row order m (composite aware)."""
    s_pow = symbol_diagonal(spec, sigma, J, power_per_row=spec.row_orders())
    denom = s_pow - 1.0
    bad = np.abs(denom) < 1e-12
    if np.any(bad):
        raise UnsupportedFormError(
            "preconditioner symbol (i(xi+sigma))^m - 1 vanishes at some frequency; "
            "perturb sigma slightly"
        )
    return 1.0 / denom


def assemble_K(spec: OperatorSpec, sigma: float, lam: complex, J: int) -> KMatrix:
    """Truncated Birman-Schwinger matrix K_J.

    With P = diag(1/(s^m - 1)) and Toeplitz blocks A_k:
        K1 = P * sum_{1<=k<m} S^k A_k            (derivative terms)
        K0 = P * (A_0 + A_m - lam*I)             (completion + spectral shift)
    so that I + K_J = P (L_{sigma,J} - lam*I): zeros of det2(I+K_J) are
    exactly the Hill eigenvalues, and K_J = 0 for the free operator at lam=1.
    """
    if not (np.isfinite(lam.real) and np.isfinite(lam.imag)):
        raise ValueError("lambda must be finite")
    if spec.form != "divergence":
        raise UnsupportedFormError("assemble_K requires divergence form")
    sigma = brillouin_reduce(sigma, spec.period)
    size = spec.dim * (2 * J + 1)
    p = _preconditioner_diag(spec, sigma, J)
    s = symbol_diagonal(spec, sigma, J)

    K1 = np.zeros((size, size), dtype=complex)
    for k in range(1, spec.order):
        K1 += (s ** k)[:, np.newaxis] * toeplitz_block(spec.coeffs[k], J)
    K1 *= p[:, np.newaxis]

    K0 = toeplitz_block(spec.coeffs[0], J) + toeplitz_block(spec.coeffs[spec.order], J)
    K0[np.diag_indices(size)] -= lam
    K0 *= p[:, np.newaxis]

    return KMatrix(K1 + K0, J, sigma, complex(lam),
                   float(np.linalg.norm(K1)), float(np.linalg.norm(K0)))


def evans(spec: OperatorSpec, sigma: float, lam: complex, J: int) -> EvansValue:
    """Truncated generalized Evans function D_{sigma,J}(lam) = det2(I + K_J).

    Delegates to :func:`evans_principal` when the principal coefficient is
    not the constant identity, so callers get the zero-set contract either way.
    """
    if not spec.has_identity_principal():
        return evans_principal(spec, sigma, lam, J)
    K = assemble_K(spec, sigma, lam, J)
    return det2_finite(-K.data, J=J, lam=complex(lam),
                       sigma=brillouin_reduce(sigma, spec.period))


def evans_batch(spec: OperatorSpec, sigma: float, lams, J: int):
    """Vectorized Evans values over a lambda array: (log_mag, phase) arrays.

    K_J is affine in lambda with a diagonal lambda-coefficient, so the stack
    is one base assembly plus a diagonal update per point, and the
    eigenvalue-path det2 runs through one stacked solver call.
    """
    lams = np.asarray(lams, dtype=complex)
    base = assemble_K(spec, sigma, 0.0, J)
    p = _preconditioner_diag(spec, brillouin_reduce(sigma, spec.period), J)
    Ks = np.broadcast_to(-base.data, (len(lams),) + base.data.shape).copy()
    idx = np.arange(base.data.shape[0])
    Ks[:, idx, idx] += lams[:, None] * p[None, :]
    if not spec.has_identity_principal():
        A = toeplitz_block(spec.principal(), J)
        lu, piv = scipy.linalg.lu_factor(A)
        if np.min(np.abs(np.diag(lu))) < 1e-14 * max(1.0, float(np.max(np.abs(A)))):
            raise PrincipalSingularError(
                f"A_{{m,J}} is numerically singular at J={J} (open non-SPD regime)"
            )
        Ks = np.stack([scipy.linalg.lu_solve((lu, piv), Ks[i]) for i in range(len(lams))])
    alphas = np.linalg.eigvals(Ks)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.log(1.0 - alphas) + alphas
    sums = terms.sum(axis=1)
    log_mag = sums.real
    phase = np.remainder(sums.imag + np.pi, 2 * np.pi) - np.pi
    return log_mag, phase


def evans_principal(spec: OperatorSpec, sigma: float, lam: complex, J: int,
                    validation=None) -> EvansValue:
    """Principal-coefficient Evans variant det2(I + A_{m,J}^{-1} K_J).

    Solves A_{m,J} Y = K_J by pivoted LU (the inverse is never formed).
    Zeros match the eigenvalues of the principal-coefficient Hill matrix.
    A non-SPD validation outcome is attached as a warning, not an error.
    """
    K = assemble_K(spec, sigma, lam, J)
    A = toeplitz_block(spec.principal(), J)
    try:
        lu, piv = scipy.linalg.lu_factor(A)
    except scipy.linalg.LinAlgError as exc:
        raise PrincipalSingularError(f"A_{{m,J}} is singular at J={J}: {exc}") from exc
    if np.min(np.abs(np.diag(lu))) < 1e-14 * max(1.0, float(np.max(np.abs(A)))):
        raise PrincipalSingularError(
            f"A_{{m,J}} is numerically singular at J={J} (open non-SPD regime)"
        )
    Y = scipy.linalg.lu_solve((lu, piv), K.data)
    if validation is None:
        validation = validate(spec, max(64, 2 * spec.max_cutoff + 1))
    return det2_finite(-Y, J=J, lam=complex(lam),
                       sigma=brillouin_reduce(sigma, spec.period),
                       warning=validation.warning)
