import numpy as np
import pytest

from obsim.operators import (Operator, PAULI_X, PAULI_Y, PAULI_Z, QuantumState,
                             basis_state, commutator, commutator_norm,
                             identity, maximally_mixed, partial_trace,
                             psd_sqrt, pure_state, tensor_product)


def random_hermitian(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return Operator((a + a.conj().T) / 2)


def random_psd(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return Operator(a @ a.conj().T)


def random_density(rng, d):
    m = random_psd(rng, d).matrix
    return QuantumState(m / np.trace(m).real)


class TestOperator:
    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            Operator(np.zeros((2, 3)))

    def test_immutable(self):
        op = identity(2)
        with pytest.raises(AttributeError):
            op.matrix = np.zeros((2, 2))
        with pytest.raises(ValueError):
            op.matrix[0, 0] = 5.0  # numpy read-only flag

    def test_hermitian_psd_predicates(self):
        assert PAULI_X.is_hermitian()
        assert not PAULI_X.is_psd()  # eigenvalues +-1
        assert identity(3).is_psd()
        assert not Operator([[0, 1], [0, 0]]).is_hermitian()


class TestQuantumState:
    def test_validation(self):
        with pytest.raises(ValueError):
            QuantumState(np.eye(2))  # trace 2
        with pytest.raises(ValueError):
            QuantumState([[0.5, 0.6], [0.6, 0.5]])  # not PSD
        with pytest.raises(ValueError):
            QuantumState([[0.5, 1j], [1j, 0.5]])  # not Hermitian

    def test_pure_state_normalizes(self):
        s = pure_state([1, 1])
        assert np.isclose(s.rho[0, 0], 0.5)


class TestCommutator:
    def test_self_commutator_is_zero(self):
        rng = np.random.default_rng(1)
        a = random_hermitian(rng, 4)
        assert np.allclose(commutator(a, a).matrix, 0)

    def test_pauli_x_z(self):
        # hand multiplication: XZ - ZX = [[0,-2],[2,0]] = -2iY
        c = commutator(PAULI_X, PAULI_Z)
        assert np.allclose(c.matrix, [[0, -2], [2, 0]])
        assert np.allclose(c.matrix, -2j * PAULI_Y.matrix)

    def test_identity_commutes(self):
        rng = np.random.default_rng(2)
        b = random_hermitian(rng, 3)
        assert np.allclose(commutator(identity(3), b).matrix, 0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            commutator(identity(2), identity(3))

    def test_antisymmetry_and_jacobi(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b, c = (random_hermitian(rng, 4) for _ in range(3))
            assert np.allclose(commutator(a, b).matrix,
                               -commutator(b, a).matrix, atol=1e-10)
            jac = (commutator(a, commutator(b, c)).matrix
                   + commutator(b, commutator(c, a)).matrix
                   + commutator(c, commutator(a, b)).matrix)
            assert np.linalg.norm(jac) <= 1e-10


class TestCommutatorNorm:
    def test_zero_for_self(self):
        assert commutator_norm(PAULI_Z, PAULI_Z) == 0.0

    def test_pauli_value(self):
        # Frobenius norm of [[0,-2],[2,0]] is sqrt(8)
        assert np.isclose(commutator_norm(PAULI_X, PAULI_Z), 2 * np.sqrt(2),
                          atol=1e-12)

    def test_diagonal_commute(self):
        assert commutator_norm(Operator(np.diag([1.0, 2.0])),
                               Operator(np.diag([3.0, 4.0]))) == 0.0


class TestTensorProduct:
    def test_identity(self):
        assert np.allclose(tensor_product(identity(2), identity(2)).matrix,
                           np.eye(4))

    def test_shape(self):
        t = tensor_product(identity(2), identity(3))
        assert t.dim == 6

    def test_bit_flip_both_qubits(self):
        xx = tensor_product(PAULI_X, PAULI_X)
        rho = basis_state(4, 0).rho  # |00><00|
        out = xx.matrix @ rho @ xx.matrix.conj().T
        expected = basis_state(4, 3).rho  # |11><11|
        assert np.allclose(out, expected, atol=1e-14)


class TestPartialTrace:
    def test_product_state_recovery(self):
        rng = np.random.default_rng(4)
        rho_a = random_density(rng, 2)
        rho_b = random_density(rng, 3)
        joint = QuantumState(np.kron(rho_a.rho, rho_b.rho))
        assert np.allclose(partial_trace(joint, 0, (2, 3)).rho, rho_a.rho,
                           atol=1e-12)
        assert np.allclose(partial_trace(joint, 1, (2, 3)).rho, rho_b.rho,
                           atol=1e-12)

    def test_singlet_reduces_to_mixed(self):
        singlet = pure_state([0, 1, -1, 0])
        red = partial_trace(singlet, 0, (2, 2))
        assert np.allclose(red.rho, np.eye(2) / 2, atol=1e-14)

    def test_trace_preserved(self):
        rng = np.random.default_rng(5)
        st = random_density(rng, 6)
        red = partial_trace(st, 1, (2, 3))
        assert np.isclose(np.trace(red.rho).real, 1.0)

    def test_bad_dims(self):
        with pytest.raises(ValueError):
            partial_trace(maximally_mixed(4), 0, (3, 2))


class TestPsdSqrt:
    def test_identity(self):
        assert np.allclose(psd_sqrt(identity(3)).matrix, np.eye(3))

    def test_diagonal(self):
        s = psd_sqrt(Operator(np.diag([4.0, 9.0])))
        assert np.allclose(s.matrix, np.diag([2.0, 3.0]))

    def test_roundtrip_random(self):
        rng = np.random.default_rng(6)
        for d in (2, 4, 8, 16):
            e = random_psd(rng, d)
            s = psd_sqrt(e)
            assert s.is_psd()
            err = np.linalg.norm(s.matrix @ s.matrix - e.matrix)
            assert err <= 1e-10 * np.linalg.norm(e.matrix)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            psd_sqrt(PAULI_Z)

    def test_clamps_tiny_negative(self):
        e = Operator(np.diag([1.0, -1e-12]))
        s = psd_sqrt(e)
        assert np.allclose(s.matrix, np.diag([1.0, 0.0]))
