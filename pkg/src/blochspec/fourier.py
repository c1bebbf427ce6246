"""Finite Fourier representations of periodic matrix-valued coefficients.

A coefficient A(x) with period X is stored through its Fourier table
A(x) = sum_k Ahat(k) exp(i xi_k x), xi_k = 2*pi*k/X, kept for |k| <= cutoff.
Everything downstream (Hill matrices, Birman-Schwinger blocks, the monodromy
integrator) consumes these tables, so the frequency convention is fixed here
once: xi_k = 2*pi*k/X, block row/column order k = -J..J.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError, FrequencyResolutionError

__all__ = [
    "FourierSeries",
    "from_samples",
    "constant_series",
    "toeplitz_block",
    "sobolev_tail",
    "h1_norm",
    "derivative_series",
    "series_add",
    "series_scale",
    "save_series_table",
    "load_series_table",
]

_REAL_TOL = 1e-12


@dataclass(frozen=True)
class FourierSeries:
    """Finitely supported Fourier coefficient table of an n x n periodic function.

    ``coeffs[k + cutoff]`` is the n x n matrix Ahat(k); queries outside
    |k| <= cutoff are zero.  Immutable: all operations return new instances.
    """

    period: float
    dim: int
    cutoff: int
    coeffs: np.ndarray = field(repr=False)  # shape (2*cutoff+1, dim, dim)

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (2 * self.cutoff + 1, self.dim, self.dim):
            raise ValueError(
                f"coeffs shape {c.shape} incompatible with cutoff {self.cutoff}, dim {self.dim}"
            )
        object.__setattr__(self, "coeffs", c)
        self.coeffs.setflags(write=False)

    def coeff(self, k: int) -> np.ndarray:
        """Ahat(k), the zero matrix for |k| > cutoff."""
        if abs(k) > self.cutoff:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.coeffs[k + self.cutoff]

    def xi(self, k) -> np.ndarray:
        """Angular frequency 2*pi*k/period."""
        return 2.0 * math.pi * np.asarray(k) / self.period

    @property
    def is_real(self) -> bool:
        """True when Ahat(-k) == conj(Ahat(k)) for all k, i.e. A(x) is real-valued."""
        flipped = np.conj(self.coeffs[::-1])
        return bool(np.max(np.abs(self.coeffs - flipped)) < _REAL_TOL)

    def evaluate(self, x) -> np.ndarray:
        """Evaluate the series at points x; returns shape x.shape + (dim, dim)."""
        x = np.asarray(x, dtype=float)
        ks = np.arange(-self.cutoff, self.cutoff + 1)
        phases = np.exp(1j * np.multiply.outer(x, self.xi(ks)))  # x.shape + (2M+1,)
        return np.tensordot(phases, self.coeffs, axes=([-1], [0]))

    def trim(self, rel_tol: float = 1e-14) -> "FourierSeries":
        """Drop trailing coefficients below rel_tol relative to the largest."""
        mags = np.abs(self.coeffs).reshape(2 * self.cutoff + 1, -1).max(axis=1)
        scale = mags.max()
        if scale == 0.0:
            return FourierSeries(self.period, self.dim, 0, self.coeffs[self.cutoff : self.cutoff + 1].copy())
        keep = np.nonzero(mags > rel_tol * scale)[0]
        m = max(abs(int(i) - self.cutoff) for i in keep)
        lo, hi = self.cutoff - m, self.cutoff + m + 1
        return FourierSeries(self.period, self.dim, m, self.coeffs[lo:hi].copy())


def constant_series(value, period: float, dim: int | None = None) -> FourierSeries:
    """Series of the constant function x -> value (scalar or n x n matrix)."""
    value = np.asarray(value, dtype=complex)
    if value.ndim == 0:
        dim = dim or 1
        value = value * np.eye(dim)
    elif value.ndim == 2:
        dim = value.shape[0]
    else:
        raise ValueError("value must be a scalar or a square matrix")
    return FourierSeries(period, dim, 0, value[np.newaxis])


def from_samples(samples, period: float, cutoff: int) -> FourierSeries:
    """Build a series from N equispaced samples over one period.

    Coefficients are the length-N DFT normalized so constant samples c give
    Ahat(0) = c; frequencies beyond the cutoff are discarded.  Requires
    N >= 2*cutoff + 1 so the kept frequencies are alias-free.
    """
    samples = np.asarray(samples, dtype=complex)
    if samples.size == 0:
        raise EmptyInputError("no samples given")
    if samples.ndim == 1:
        samples = samples[:, np.newaxis, np.newaxis]
    if samples.ndim != 3 or samples.shape[1] != samples.shape[2]:
        raise ValueError("samples must have shape (N,) or (N, n, n)")
    N = samples.shape[0]
    if N < 2 * cutoff + 1:
        raise FrequencyResolutionError(
            f"{N} samples cannot resolve cutoff {cutoff}; need at least {2 * cutoff + 1}"
        )
    spectrum = np.fft.fft(samples, axis=0) / N
    n = samples.shape[1]
    coeffs = np.zeros((2 * cutoff + 1, n, n), dtype=complex)
    for k in range(-cutoff, cutoff + 1):
        coeffs[k + cutoff] = spectrum[k % N]
    return FourierSeries(period, n, cutoff, coeffs)


def toeplitz_block(series: FourierSeries, J: int) -> np.ndarray:
    """Dense n(2J+1) matrix with block (j,k) = Ahat(j-k), j,k = -J..J."""
    if J < 0:
        raise ValueError("J must be >= 0")
    n, M = series.dim, series.cutoff
    size = 2 * J + 1
    out = np.zeros((size * n, size * n), dtype=complex)
    for d in range(-min(2 * J, M), min(2 * J, M) + 1):
        block = series.coeff(d)
        for j in range(max(-J, -J + d), min(J, J + d) + 1):
            r, c = (j + J) * n, (j - d + J) * n
            out[r : r + n, c : c + n] = block
    return out


def sobolev_tail(series: FourierSeries, J: int) -> float:
    """Squared Frobenius tail sum_{|j| >= J} |Ahat(j)|_F^2."""
    if J < 1:
        raise ValueError("J must be >= 1")
    total = 0.0
    for k in range(J, series.cutoff + 1):
        total += np.sum(np.abs(series.coeff(k)) ** 2)
        total += np.sum(np.abs(series.coeff(-k)) ** 2)
    return float(total)


def h1_norm(series: FourierSeries) -> float:
    """Squared H^1 norm sum_j (1 + xi_j^2) |Ahat(j)|_F^2."""
    ks = np.arange(-series.cutoff, series.cutoff + 1)
    weights = 1.0 + series.xi(ks) ** 2
    mags = np.sum(np.abs(series.coeffs) ** 2, axis=(1, 2))
    return float(np.sum(weights * mags))


def derivative_series(series: FourierSeries) -> FourierSeries:
    """Term-by-term derivative: Ahat(k) -> i*xi_k*Ahat(k), same cutoff."""
    ks = np.arange(-series.cutoff, series.cutoff + 1)
    factors = 1j * series.xi(ks)
    return FourierSeries(series.period, series.dim, series.cutoff,
                         series.coeffs * factors[:, np.newaxis, np.newaxis])


def series_add(a: FourierSeries, b: FourierSeries) -> FourierSeries:
    """Coefficient-wise sum; cutoff is the larger of the two."""
    if a.period != b.period or a.dim != b.dim:
        raise ValueError("series must share period and dimension")
    m = max(a.cutoff, b.cutoff)
    coeffs = np.zeros((2 * m + 1, a.dim, a.dim), dtype=complex)
    coeffs[m - a.cutoff : m + a.cutoff + 1] += a.coeffs
    coeffs[m - b.cutoff : m + b.cutoff + 1] += b.coeffs
    return FourierSeries(a.period, a.dim, m, coeffs)


def series_scale(series: FourierSeries, factor: complex) -> FourierSeries:
    return FourierSeries(series.period, series.dim, series.cutoff, series.coeffs * factor)


def save_series_table(series: FourierSeries, path) -> None:
    """Write the flat text table: one line `k p q re im` per matrix entry,
    rows ordered by k then block row p then block column q."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# period {series.period!r} dim {series.dim} cutoff {series.cutoff}\n")
        for k in range(-series.cutoff, series.cutoff + 1):
            block = series.coeff(k)
            for p in range(series.dim):
                for q in range(series.dim):
                    z = block[p, q]
                    fh.write(f"{k} {p} {q} {float(z.real)!r} {float(z.imag)!r}\n")


def load_series_table(path) -> FourierSeries:
    """Inverse of :func:`save_series_table`."""
    period = dim = cutoff = None
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                header = dict(zip(parts[0::2], parts[1::2]))
                period = float(header["period"])
                dim = int(header["dim"])
                cutoff = int(header["cutoff"])
                continue
            k, p, q, re, im = line.split()
            entries.append((int(k), int(p), int(q), float(re), float(im)))
    if period is None:
        raise EmptyInputError(f"{path}: missing header line")
    coeffs = np.zeros((2 * cutoff + 1, dim, dim), dtype=complex)
    for k, p, q, re, im in entries:
        coeffs[k + cutoff, p, q] = complex(re, im)
    return FourierSeries(period, dim, cutoff, coeffs)
