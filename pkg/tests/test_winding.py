import cmath

import numpy as np
import pytest

from blochspec import (
    Contour,
    assemble,
    eigenvalues,
    evans,
    localize_roots,
    match_spectra,
    winding_number,
)
from blochspec.errors import ContourThroughZeroError


def poly_evaluator(roots):
    """(log_mag, phase) evaluator for the monic polynomial with given roots."""
    roots = np.asarray(roots, dtype=complex)

    def f(lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        vals = np.prod(lam[:, None] - roots[None, :], axis=1)
        with np.errstate(divide="ignore"):
            lm = np.log(np.abs(vals))
        return lm, np.angle(vals)

    return f


class TestWindingNumber:
    def test_simple_zero(self):
        rep = winding_number(poly_evaluator([0.3 + 0.1j]),
                             Contour.circle(0.3 + 0.1j, 1.0))
        assert rep.winding == 1

    def test_double_zero(self):
        rep = winding_number(poly_evaluator([-2.0, -2.0]),
                             Contour.circle(-2.0, 1.0))
        assert rep.winding == 2

    def test_no_zero(self):
        rep = winding_number(poly_evaluator([5.0]), Contour.circle(0.0, 1.0))
        assert rep.winding == 0

    def test_evans_double_eigenvalue(self, free_operator):
        # lam = -1 picks up frequencies +-1 of the free operator
        f = lambda lam: evans(free_operator, 0.0, lam, 4)
        rep = winding_number(f, Contour.circle(-1.0, 0.3))
        assert rep.winding == 2

    def test_contour_through_zero(self):
        with pytest.raises(ContourThroughZeroError):
            winding_number(poly_evaluator([1.0]), Contour.circle(0.0, 1.0))

    def test_scale_invariance(self):
        f = poly_evaluator([0.2 - 0.4j, -0.7j])
        c = 3.7e5 * cmath.exp(1j * 1.234)

        def scaled(lam):
            lm, ph = f(lam)
            return lm + np.log(abs(c)), ph + cmath.phase(c)

        contour = Contour.circle(0.0, 1.5)
        assert winding_number(f, contour).winding == winding_number(scaled, contour).winding

    def test_additivity_over_quadrants(self):
        f = poly_evaluator([0.3 + 0.4j, -0.6 - 0.2j, 0.1 - 0.7j])
        lo, hi = -1 - 1j, 1 + 1j
        whole = winding_number(f, Contour.rectangle(lo, hi)).winding
        mid = 0.0 + 0.0j
        quads = [Contour.rectangle(lo, mid),
                 Contour.rectangle(mid, hi),
                 Contour.rectangle(complex(lo.real, 0), complex(0, hi.imag)),
                 Contour.rectangle(complex(0, lo.imag), complex(hi.real, 0))]
        assert whole == sum(winding_number(f, q).winding for q in quads)


class TestLocalizeRoots:
    def test_quadratic(self):
        roots, rep = localize_roots(poly_evaluator([-1.0, 1.0]),
                                    -2 - 1j, 2 + 1j, min_box=1e-4)
        assert rep.winding == 2
        got = sorted(((r.root, r.multiplicity) for r in roots),
                     key=lambda t: t[0].real)
        assert abs(got[0][0] + 1.0) < 1e-4 and got[0][1] == 1
        assert abs(got[1][0] - 1.0) < 1e-4 and got[1][1] == 1

    def test_empty_region(self):
        roots, rep = localize_roots(poly_evaluator([10.0]), -1 - 1j, 1 + 1j)
        assert roots == [] and rep.winding == 0

    def test_evans_roots_match_hill(self, mathieu_operator):
        f = lambda lam: evans(mathieu_operator, 0.0, lam, 8)
        roots, _ = localize_roots(f, -3 - 3j, 3 + 3j, min_box=0.01)
        found = [r.root for r in roots for _ in range(r.multiplicity)]
        lams = eigenvalues(assemble(mathieu_operator, 0.0, 8))
        want = [complex(l) for l in lams if abs(l) <= 3 and -3 <= l.real <= 3
                and -3 <= l.imag <= 3]
        rep = match_spectra(found, want, radius=3.0)
        assert rep.unmatched_a == 0 and rep.unmatched_b == 0
        assert rep.max_distance < 1e-6

    def test_multiplicity_conservation(self):
        f = poly_evaluator([0.5, 0.5, -0.25 + 0.5j])
        roots, rep = localize_roots(f, -1 - 1j, 1 + 1j, min_box=1e-3)
        assert sum(r.multiplicity for r in roots) == rep.winding == 3

    def test_random_polynomials(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            deg = int(rng.integers(1, 7))
            roots = rng.uniform(-0.8, 0.8, size=deg) + 1j * rng.uniform(-0.8, 0.8, size=deg)
            # occasionally force a repeated root
            if deg >= 2 and rng.random() < 0.3:
                roots[1] = roots[0]
            found, rep = localize_roots(poly_evaluator(roots), -1 - 1j, 1 + 1j,
                                        min_box=1e-4)
            assert rep.winding == deg
            flat = [r.root for r in found for _ in range(r.multiplicity)]
            m = match_spectra(flat, list(roots), radius=2.0)
            assert m.unmatched_a == 0 and m.unmatched_b == 0
            assert m.max_distance < 1e-3


class TestMatchSpectra:
    def test_identical(self):
        rep = match_spectra([0, -1, -1], [0, -1, -1], radius=2.0)
        assert rep.max_distance == 0.0
        assert rep.unmatched_a == rep.unmatched_b == 0

    def test_perturbation_pairing(self):
        a = [0, -1, -1]
        b = [1e-8, -1 + 1e-8j, -1]
        rep = match_spectra(a, b, radius=2.0)
        assert rep.unmatched_a == rep.unmatched_b == 0
        assert rep.max_distance == pytest.approx(1e-8, rel=1e-6)

    def test_unmatched_counts(self):
        rep = match_spectra([0.0, 5.0], [0.0], radius=1.0)
        # 5.0 falls outside the disk and is excluded, not unmatched
        assert rep.unmatched_a == 0 and rep.unmatched_b == 0
        rep2 = match_spectra([0.0, 0.5], [0.0], radius=1.0)
        assert rep2.unmatched_a == 1

    def test_hill_refinement(self, mathieu_operator):
        a = eigenvalues(assemble(mathieu_operator, 0.0, 16))
        b = eigenvalues(assemble(mathieu_operator, 0.0, 32))
        rep = match_spectra(a, b, radius=5.0)
        assert rep.unmatched_a == 0
        assert rep.max_distance < 1e-10
