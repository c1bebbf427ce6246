"""blochspec: spectra of periodic-coefficient ODE operators.

Fourier-Galerkin (Hill) truncations of Bloch operators, regularized-
determinant Evans functions with argument-principle root counting, an
independent monodromy oracle, and convergence measurement, behind a small
config-driven CLI.
"""

from .fourier import (
    FourierSeries,
    constant_series,
    derivative_series,
    from_samples,
    h1_norm,
    sobolev_tail,
    toeplitz_block,
)
from .operators import (
    BlochParams,
    OperatorSpec,
    ValidationReport,
    bloch_rewrite_order2,
    brillouin_reduce,
    to_divergence_form,
    to_nondivergence_form,
    validate,
)
from .hill import HillMatrix, SpectrumResult, assemble, eigenvalues, sweep
from .fredholm import (EvansValue, KMatrix, assemble_K, det2_finite, evans,
                       evans_batch, evans_principal)
from .winding import Contour, MatchReport, WindingReport, localize_roots, match_spectra, winding_number
from .floquet import MonodromyResult, companion_system, evans_gardner, monodromy
from .convergence import ConvergenceReport, evans_convergence, probe_points, spectral_convergence

__version__ = "0.1.0"
