"""Quantum states used by the protocol: Bell/Werner states, tetrahedral inputs, Pauli expansions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import HERMITIAN_ATOL, LinalgError, allclose, as_square, eigvalsh, is_hermitian, kron

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z)

TETRAHEDRON = np.array(
    [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]],
    dtype=float,
) / np.sqrt(3.0)

WERNER_Z_MIN = -1.0 / 3.0
WERNER_Z_MAX = 1.0
SEPARABLE_Z = 1.0 / 3.0


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace operator."""

    matrix: np.ndarray
    atol: float = field(default=HERMITIAN_ATOL, repr=False)

    def __post_init__(self):
        try:
            m = np.array(as_square(self.matrix), dtype=complex)
        except LinalgError as exc:
            raise InvalidStateError(str(exc)) from None
        if not is_hermitian(m, self.atol):
            raise InvalidStateError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > self.atol:
            raise InvalidStateError(f"density matrix has trace {tr!r}")
        lam = eigvalsh(m)[0]
        if lam < -self.atol:
            raise InvalidStateError(f"density matrix has negative eigenvalue {lam!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def expectation(self, op) -> float:
        return float(np.real(np.trace(np.asarray(op) @ self.matrix)))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return eigvalsh(self.matrix)

    def allclose(self, other, atol: float = HERMITIAN_ATOL) -> bool:
        return allclose(self.matrix, np.asarray(other), atol)


def as_density(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(np.asarray(rho))


def bloch_state(v: Sequence[float]) -> np.ndarray:
    x, y, z = v
    return (SIGMA_0 + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z) / 2


def hs_gram(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Real Hilbert-Schmidt Gram matrix Re Tr(A_i A_j) for Hermitian operators."""
    flat = np.array([np.asarray(o).reshape(-1) for o in ops])
    # Tr(A B) = sum_ij A_ij B_ji = vec(A) . vec(B^T)
    flat_t = np.array([np.asarray(o).T.reshape(-1) for o in ops])
    return np.real(flat @ flat_t.T)


@dataclass(frozen=True, eq=False)
class InputEnsemble:
    """Four single-qubit input states, each given by a unit Bloch vector."""

    bloch_vectors: np.ndarray
    states: tuple = field(init=False)

    def __post_init__(self):
        v = np.array(self.bloch_vectors, dtype=float)
        if v.shape != (4, 3):
            raise InvalidStateError(f"expected 4 Bloch vectors of length 3, got shape {v.shape}")
        if not np.allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-12, rtol=0):
            raise InvalidStateError("Bloch vectors must have unit length")
        v.setflags(write=False)
        object.__setattr__(self, "bloch_vectors", v)
        object.__setattr__(self, "states", tuple(DensityMatrix(bloch_state(x)) for x in v))

    def __len__(self):
        return len(self.states)

    def __getitem__(self, k) -> DensityMatrix:
        return self.states[k]

    def gram(self) -> np.ndarray:
        return hs_gram([s.matrix for s in self.states])

    def gram_determinant(self) -> float:
        return float(np.linalg.det(self.gram()))

    def is_complete(self, atol: float = 1e-9) -> bool:
        return self.gram_determinant() > atol

    def permuted(self, order: Sequence[int]) -> "InputEnsemble":
        return InputEnsemble(self.bloch_vectors[list(order)])


def tetrahedral_ensemble() -> InputEnsemble:
    return InputEnsemble(TETRAHEDRON)


def max_entangled_vector(d: int) -> np.ndarray:
    if d < 2:
        raise InvalidStateError(f"maximally entangled state needs d >= 2, got {d}")
    psi = np.zeros(d * d, dtype=complex)
    psi[[i * d + i for i in range(d)]] = 1 / np.sqrt(d)
    return psi


def max_entangled(d: int) -> DensityMatrix:
    psi = max_entangled_vector(d)
    return DensityMatrix(np.outer(psi, psi.conj()))


def bell_state() -> DensityMatrix:
    return max_entangled(2)


def werner(z: float) -> DensityMatrix:
    """Isotropic two-qubit state (1 - z) I / 4 + z |Phi+><Phi+|."""
    z = float(z)
    if not WERNER_Z_MIN - 1e-15 <= z <= WERNER_Z_MAX + 1e-15:
        raise InvalidStateError(f"Werner parameter z={z} outside [-1/3, 1]")
    return DensityMatrix((1 - z) / 4 * np.eye(4) + z * bell_state().matrix)


def product_state(rho_a, rho_b) -> DensityMatrix:
    return DensityMatrix(kron(np.asarray(rho_a), np.asarray(rho_b)))


@dataclass(frozen=True, eq=False)
class PauliCoefficients:
    """Coefficients c[i, j] of sigma_i (x) sigma_j in a two-qubit operator."""

    c: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return sum(self.c[i, j] * kron(PAULIS[i], PAULIS[j]) for i in range(4) for j in range(4))


def pauli_coefficients(rho) -> PauliCoefficients:
    m = np.asarray(rho)
    if m.shape != (4, 4):
        raise InvalidStateError(f"Pauli expansion needs a 4x4 operator, got {m.shape}")
    c = np.array(
        [[np.real(np.trace(m @ kron(PAULIS[i], PAULIS[j]))) / 4 for j in range(4)] for i in range(4)]
    )
    return PauliCoefficients(c)


def coefficient_sum(c: PauliCoefficients) -> float:
    """Sum of every Pauli coefficient except the identity one."""
    return float(np.sum(c.c) - c.c[0, 0])


def coefficient_sum_within_claimed_range(rho, atol: float = 1e-12) -> bool:
    """Whether the non-identity coefficients sum into [-1/4, 1/4].

    This range is often quoted for all two-qubit states but does not hold in
    general; |00><00| sums to 3/4. Kept as a diagnostic, not a validator.
    """
    s = coefficient_sum(pauli_coefficients(rho))
    return -0.25 - atol <= s <= 0.25 + atol


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    return DensityMatrix(m / np.trace(m).real)


def random_pure_qubit(rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=2) + 1j * rng.normal(size=2)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())
