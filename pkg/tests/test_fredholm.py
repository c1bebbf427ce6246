import numpy as np
import pytest

from blochspec import (
    assemble,
    assemble_K,
    det2_finite,
    eigenvalues,
    evans,
    evans_principal,
    toeplitz_block,
    validate,
)
from blochspec.errors import PrincipalSingularError
from blochspec.fredholm import det2_finite_lu

from conftest import scalar_order2, scalar_series


class TestDet2Finite:
    def test_zero_matrix(self):
        v = det2_finite(np.zeros((3, 3), dtype=complex))
        assert v.log_mag == pytest.approx(0.0, abs=1e-14)
        assert v.phase == pytest.approx(0.0, abs=1e-14)

    def test_one_by_one(self):
        v = det2_finite(np.array([[0.5]], dtype=complex))
        assert np.exp(v.log_mag) == pytest.approx(0.5 * np.exp(0.5), rel=1e-12)

    def test_nilpotent(self):
        v = det2_finite(np.array([[0, 1], [0, 0]], dtype=complex))
        assert v.log_mag == pytest.approx(0.0, abs=1e-12)

    def test_two_paths_agree(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = rng.integers(2, 15)
            A = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(n)
            a = det2_finite(A)
            b = det2_finite_lu(A)
            assert abs(a.log_mag - b.log_mag) <= 1e-8 * max(1.0, abs(a.log_mag))
            dphi = (a.phase - b.phase + np.pi) % (2 * np.pi) - np.pi
            assert abs(dphi) < 1e-8

    def test_invertibility_correspondence(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            A = rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10))
            A /= np.sqrt(10)
            one_is_eig = np.min(np.abs(np.linalg.eigvals(A) - 1.0)) < 1e-10
            is_zero = det2_finite(A).log_mag < -25
            assert one_is_eig == is_zero

    def test_magnitude_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            A = rng.uniform(-1, 1, size=(20, 20)) / np.sqrt(20)
            v = det2_finite(A)
            assert v.log_mag <= 0.5 * np.linalg.norm(A) ** 2 + 1


class TestAssembleK:
    def test_k1_symbol_entry(self):
        # A1 = e^{ix}: K1 entry (j, j-1) is i*xi_j/((i*xi_j)^2 - 1); at j=1
        # the exact symbol gives -i/2
        spec = scalar_order2(a1=scalar_series({1: 1.0}))
        K = assemble_K(spec, 0.0, 1.0, 2).data
        # index of frequency j=1 is J + 1 = 3, j=0 is 2
        assert K[3, 2] == pytest.approx(-0.5j, abs=1e-14)

    def test_free_operator_vanishes_at_one(self, free_operator):
        K = assemble_K(free_operator, 0.0, 1.0, 4).data
        assert np.allclose(K, 0.0, atol=1e-15)

    def test_lambda_affinity(self, mathieu_operator):
        sigma, J = 0.3, 3
        K1 = assemble_K(mathieu_operator, sigma, 0.5 + 0.25j, J).data
        K2 = assemble_K(mathieu_operator, sigma, -1.0 - 1.0j, J).data
        # preconditioner is ((i xi)^2 - 1)^-1 = -(xi^2+1)^-1, so the
        # difference carries (lam2 - lam1), not (lam1 - lam2)
        xi = np.arange(-J, J + 1) + sigma
        want = ((-1.0 - 1.0j) - (0.5 + 0.25j)) * np.diag(1.0 / (xi ** 2 + 1.0))
        assert np.allclose(K2 - K1, want, atol=1e-13)


class TestEvans:
    def test_resolvent_point(self, free_operator):
        v = evans(free_operator, 0.0, 0.5, 2)
        assert v.log_mag > -10

    def test_zero_at_truncation_eigenvalue(self, free_operator):
        v = evans(free_operator, 0.0, -1.0, 2)
        assert v.log_mag < -25

    def test_eigensolver_oracle_zero_set(self, mathieu_operator):
        lams = eigenvalues(assemble(mathieu_operator, 0.0, 8))
        for lam in lams:
            if abs(lam) <= 4:
                assert evans(mathieu_operator, 0.0, complex(lam), 8).log_mag < -20

    def test_nonzero_off_spectrum(self, mathieu_operator):
        lams = eigenvalues(assemble(mathieu_operator, 0.0, 8))
        probe = 0.9 + 0.9j
        assert np.min(np.abs(lams - probe)) > 0.5
        assert evans(mathieu_operator, 0.0, probe, 8).log_mag > -10


class TestEvansPrincipal:
    def test_identity_principal_reduces(self, mathieu_operator):
        a = evans(mathieu_operator, 0.1, 0.7 + 0.3j, 5)
        b = evans_principal(mathieu_operator, 0.1, 0.7 + 0.3j, 5)
        assert a.log_mag == pytest.approx(b.log_mag, abs=1e-12)
        assert a.phase == pytest.approx(b.phase, abs=1e-12)

    def test_eigensolver_oracle(self):
        spec = scalar_order2(a2=scalar_series({0: 2.0, 1: 0.5, -1: 0.5}))
        lams = eigenvalues(assemble(spec, 0.0, 8))
        inside = [lam for lam in lams if abs(lam) <= 3]
        assert inside
        for lam in inside:
            assert evans_principal(spec, 0.0, complex(lam), 8).log_mag < -20

    def test_principal_minor_positive_definite(self):
        spec = scalar_order2(a2=scalar_series({0: 2.0, 1: 0.5, -1: 0.5}))
        rep = validate(spec, grid_N=512)
        A2J = toeplitz_block(spec.coeffs[2], 6)
        herm = 0.5 * (A2J + A2J.conj().T)
        assert np.min(np.linalg.eigvalsh(herm)) >= rep.lower_bound - 1e-10

    def test_lipschitz_pairs(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            n = int(rng.integers(2, 12))
            A = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / n
            B = A + rng.normal(scale=1e-3, size=(n, n)) / n
            va, vb = det2_finite(A), det2_finite(B)
            lhs = abs(np.exp(va.log_mag + 1j * va.phase)
                      - np.exp(vb.log_mag + 1j * vb.phase))
            na, nb = np.linalg.norm(A), np.linalg.norm(B)
            assert lhs <= np.linalg.norm(A - B) * np.exp((na + nb + 1) ** 2) + 1e-14
