"""Dense complex-matrix algebra for operators and density matrices.

Everything here is exact dense linear algebra on small Hilbert spaces
(dimension up to ~64).  Operators and states are immutable after
construction; all functions are pure, so concurrent use needs no locking.
"""

from __future__ import annotations

import numpy as np

# Default absolute tolerances, overridable per call.
TOL_HERM = 1e-9
TOL_PSD = 1e-9
TOL_TRACE = 1e-9
TOL_NUM = 1e-9


class Operator:
    """Immutable d x d complex matrix."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        arr = np.array(matrix, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"operator must be a square matrix, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("operator dimension must be >= 1")
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Operator is immutable")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_hermitian(self, tol: float = TOL_HERM) -> bool:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) <= tol

    def is_psd(self, tol: float = TOL_PSD) -> bool:
        if not self.is_hermitian(tol):
            return False
        return float(np.min(np.linalg.eigvalsh(self.matrix))) >= -tol

    def is_unitary(self, tol: float = TOL_NUM) -> bool:
        d = self.dim
        return bool(np.allclose(self.matrix @ self.matrix.conj().T, np.eye(d), atol=tol))

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T)

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_dim(self, other)
        return Operator(self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_dim(self, other)
        return Operator(self.matrix - other.matrix)

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_dim(self, other)
        return Operator(self.matrix @ other.matrix)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.matrix * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Operator(dim={self.dim})"


class QuantumState:
    """Immutable density matrix: Hermitian, PSD, unit trace."""

    __slots__ = ("rho",)

    def __init__(self, rho, tol_trace: float = TOL_TRACE, tol_herm: float = TOL_HERM,
                 tol_psd: float = TOL_PSD):
        arr = np.array(rho, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {arr.shape}")
        if abs(np.trace(arr) - 1.0) > tol_trace:
            raise ValueError(f"density matrix trace {np.trace(arr)} != 1")
        if float(np.max(np.abs(arr - arr.conj().T))) > tol_herm:
            raise ValueError("density matrix is not Hermitian")
        if float(np.min(np.linalg.eigvalsh((arr + arr.conj().T) / 2))) < -tol_psd:
            raise ValueError("density matrix is not positive semidefinite")
        arr.setflags(write=False)
        object.__setattr__(self, "rho", arr)

    def __setattr__(self, name, value):
        raise AttributeError("QuantumState is immutable")

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def __repr__(self):
        return f"QuantumState(dim={self.dim})"


def _check_same_dim(a: Operator, b: Operator) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


# Handy fixed operators / states.

def identity(d: int) -> Operator:
    return Operator(np.eye(d))


PAULI_X = Operator([[0, 1], [1, 0]])
PAULI_Y = Operator([[0, -1j], [1j, 0]])
PAULI_Z = Operator([[1, 0], [0, -1]])


def basis_state(d: int, k: int) -> QuantumState:
    """Density matrix |k><k| in dimension d."""
    rho = np.zeros((d, d), dtype=complex)
    rho[k, k] = 1.0
    return QuantumState(rho)


def maximally_mixed(d: int) -> QuantumState:
    return QuantumState(np.eye(d) / d)


def pure_state(vec) -> QuantumState:
    """Density matrix |psi><psi| from a (not necessarily normalized) vector."""
    v = np.array(vec, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return QuantumState(np.outer(v, v.conj()))


def commutator(a: Operator, b: Operator) -> Operator:
    """[A, B] = AB - BA."""
    _check_same_dim(a, b)
    return Operator(a.matrix @ b.matrix - b.matrix @ a.matrix)


def commutator_norm(a: Operator, b: Operator) -> float:
    """Frobenius norm of [A, B]; zero iff A and B commute exactly."""
    return float(np.linalg.norm(commutator(a, b).matrix))


def tensor_product(a: Operator, b: Operator) -> Operator:
    """Kronecker product: block (i, j) of the result is A[i,j] * B."""
    return Operator(np.kron(a.matrix, b.matrix))


def partial_trace(state: QuantumState, keep: int, dims: tuple[int, int]) -> QuantumState:
    """Reduced density matrix of subsystem ``keep`` (0 or 1) of a bipartite state."""
    da, db = dims
    if da * db != state.dim:
        raise ValueError(f"dims {dims} inconsistent with state dimension {state.dim}")
    if keep not in (0, 1):
        raise ValueError("keep must be 0 (first factor) or 1 (second factor)")
    t = state.rho.reshape(da, db, da, db)
    if keep == 0:
        reduced = np.einsum("ijkj->ik", t)
    else:
        reduced = np.einsum("ijil->jl", t)
    return QuantumState(reduced)


def psd_sqrt(e: Operator, tol_psd: float = TOL_PSD) -> Operator:
    """Hermitian PSD square root S of a PSD operator E, S @ S = E.

    Eigenvalues in [-tol_psd, 0) are clamped to 0; anything more negative is
    an error.
    """
    if not e.is_hermitian(tol_psd):
        raise ValueError("operator is not Hermitian")
    w, v = np.linalg.eigh(e.matrix)
    if float(w.min()) < -tol_psd:
        raise ValueError(f"operator is not PSD (min eigenvalue {w.min():g})")
    w = np.clip(w, 0.0, None)
    s = (v * np.sqrt(w)) @ v.conj().T
    return Operator((s + s.conj().T) / 2)
