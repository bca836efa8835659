import math

import numpy as np
import pytest

from conftest import random_matrix
from tdpf.errors import InvalidInputError
from tdpf.linalg import (PAULI, commutator, dagger, embed_pauli_string,
                         matrix_exp, spectral_norm)

X, Y, Z, I2 = PAULI["X"], PAULI["Y"], PAULI["Z"], PAULI["I"]


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(np.eye(2)) == pytest.approx(1.0, abs=1e-12)

    def test_scaled_diagonal(self):
        assert spectral_norm(2j * Z) == pytest.approx(2.0, abs=1e-12)

    def test_pauli_commutator(self):
        # direct 2x2 multiplication: [X, Y] = 2iZ
        assert spectral_norm(X @ Y - Y @ X) == pytest.approx(2.0, abs=1e-10)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            spectral_norm(np.array([[np.nan, 0], [0, 1]]))
        with pytest.raises(InvalidInputError):
            spectral_norm(np.ones((2, 3)))

    def test_triangle_and_submultiplicative(self, rng):
        for _ in range(20):
            a = random_matrix(rng, 6)
            b = random_matrix(rng, 6)
            assert spectral_norm(a + b) <= spectral_norm(a) + spectral_norm(b) + 1e-9
            assert spectral_norm(a @ b) <= spectral_norm(a) * spectral_norm(b) + 1e-9

    def test_unitary_invariance(self, rng):
        a = random_matrix(rng, 8)
        h = random_matrix(rng, 8, hermitian=True)
        u = matrix_exp(-1j * h)
        assert spectral_norm(u @ a @ dagger(u)) == pytest.approx(
            spectral_norm(a), abs=1e-9)


class TestMatrixExp:
    def test_zero(self):
        assert np.allclose(matrix_exp(np.zeros((3, 3))), np.eye(3), atol=1e-14)

    def test_pauli_rotation(self):
        # closed form: exp(-i (pi/2) X) = cos(pi/2) I - i sin(pi/2) X = -i X
        got = matrix_exp(-1j * (math.pi / 2) * X)
        assert np.allclose(got, -1j * X, atol=1e-12)

    def test_skew_hermitian_matches_taylor(self, rng):
        a = random_matrix(rng, 4, skew=True)
        series = np.eye(4, dtype=complex)
        term = np.eye(4, dtype=complex)
        for k in range(1, 31):
            term = term @ a / k
            series += term
        assert spectral_norm(matrix_exp(a) - series) < 1e-10

    def test_general_matrix_matches_taylor(self, rng):
        a = 0.5 * random_matrix(rng, 4)
        series = np.eye(4, dtype=complex)
        term = np.eye(4, dtype=complex)
        for k in range(1, 31):
            term = term @ a / k
            series += term
        assert spectral_norm(matrix_exp(a) - series) < 1e-10

    @pytest.mark.parametrize("dim", [2, 16, 128, 256])
    def test_unitarity_for_hermitian_generator(self, rng, dim):
        h = random_matrix(rng, dim, hermitian=True)
        u = matrix_exp(-1j * 0.7 * h)
        assert spectral_norm(dagger(u) @ u - np.eye(dim)) <= 1e-10


class TestCommutator:
    def test_self_commutator_vanishes(self, rng):
        a = random_matrix(rng, 5)
        assert spectral_norm(commutator(a, a)) < 1e-12

    def test_xz(self):
        # 2x2 multiplication: XZ - ZX = -2iY
        assert np.allclose(commutator(X, Z), -2j * Y, atol=1e-12)

    def test_identity_commutes(self, rng):
        b = random_matrix(rng, 4)
        assert spectral_norm(commutator(np.eye(4), b)) < 1e-13

    def test_dim_mismatch(self):
        with pytest.raises(InvalidInputError):
            commutator(np.eye(2), np.eye(3))


class TestEmbedPauliString:
    def test_empty_is_identity(self):
        assert np.allclose(embed_pauli_string([], 1), I2)

    def test_single_site(self):
        assert np.allclose(embed_pauli_string([(0, "Z")], 2), np.kron(Z, I2))

    def test_two_site(self):
        m = embed_pauli_string([(0, "X"), (1, "X")], 2)
        assert np.allclose(m, np.kron(X, X))
        assert spectral_norm(m) == pytest.approx(1.0, abs=1e-12)

    def test_duplicate_site_rejected(self):
        with pytest.raises(InvalidInputError):
            embed_pauli_string([(0, "X"), (0, "Z")], 2)

    def test_cap_enforced(self):
        with pytest.raises(InvalidInputError):
            embed_pauli_string([(0, "X")], 13)
        embed_pauli_string([(0, "X")], 13, cap=13)  # raised cap is allowed

    def test_adjoint_involution(self, rng):
        a = random_matrix(rng, 6)
        assert np.array_equal(dagger(dagger(a)), a)

    def test_hermitian_eigenvalues_real(self, rng):
        h = random_matrix(rng, 8, hermitian=True)
        evals = np.linalg.eigvals(h)
        assert np.max(np.abs(evals.imag)) < 1e-10
