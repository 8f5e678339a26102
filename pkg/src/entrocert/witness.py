"""Entanglement witnesses, their expansion over product input states, and Bell-like values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import LinalgError, SingularMatrixError, allclose, as_square, is_hermitian, kron, solve_real_linear
from .protocol import CorrelationTable
from .states import InputEnsemble, bell_state, hs_gram, random_pure_qubit, tetrahedral_ensemble


class IncompleteEnsembleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Witness:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(as_square(self.matrix), dtype=complex)
        if not is_hermitian(m):
            raise LinalgError("a witness must be Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def expectation(self, rho) -> float:
        return float(np.real(np.trace(self.matrix @ np.asarray(rho))))

    def min_on_random_products(self, n_samples: int = 10_000, seed: int = 0) -> float:
        """Smallest Tr(W rho_A (x) rho_B) over random pure product states."""
        rng = np.random.default_rng(seed)
        worst = np.inf
        for _ in range(n_samples):
            prod = kron(random_pure_qubit(rng), random_pure_qubit(rng))
            worst = min(worst, self.expectation(prod))
        return float(worst)

    def min_on_product_grid(self, step: float = np.pi / 24) -> float:
        """Smallest expectation over pure product states on a (theta, phi) x (theta, phi) grid."""
        theta = np.arange(0.0, np.pi + step / 2, step)
        phi = np.arange(0.0, 2 * np.pi, step)
        th, ph = np.meshgrid(theta, phi, indexing="ij")
        kets = np.stack([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)], axis=-1).reshape(-1, 2)
        pair = np.einsum("ai,bj->abij", kets, kets).reshape(len(kets), len(kets), 4)
        vals = np.real(np.einsum("abi,ij,abj->ab", pair.conj(), self.matrix, pair))
        return float(vals.min())


def werner_witness() -> Witness:
    """W = I/2 - |Phi+><Phi+|."""
    return Witness(np.eye(4) / 2 - bell_state().matrix)


@dataclass(frozen=True, eq=False)
class WitnessDecomposition:
    beta: np.ndarray  # beta[s, t], real
    residual: float

    def reconstruct(self, alice: InputEnsemble, bob: InputEnsemble) -> np.ndarray:
        return sum(
            self.beta[s, t] * kron(alice[s].matrix.T, bob[t].matrix.T)
            for s in range(4)
            for t in range(4)
        )


def product_basis(alice: InputEnsemble, bob: InputEnsemble) -> list[np.ndarray]:
    """tau_s^T (x) omega_t^T, flattened in (s, t) order; transpose in the computational basis."""
    return [kron(alice[s].matrix.T, bob[t].matrix.T) for s in range(4) for t in range(4)]


def decompose_witness(w, alice: InputEnsemble | None = None, bob: InputEnsemble | None = None) -> WitnessDecomposition:
    """Coefficients beta[s, t] with W = sum beta[s, t] tau_s^T (x) omega_t^T.

    Solves the Hilbert-Schmidt normal equations over the 16 product operators.
    """
    alice = alice or tetrahedral_ensemble()
    bob = bob or tetrahedral_ensemble()
    w = np.asarray(w)
    if w.shape != (4, 4) or not is_hermitian(w):
        raise LinalgError("decompose_witness expects a Hermitian 4x4 operator")
    basis = product_basis(alice, bob)
    gram = hs_gram(basis)
    rhs = np.array([np.real(np.trace(b @ w)) for b in basis])
    try:
        beta = solve_real_linear(gram, rhs)
    except SingularMatrixError as exc:
        raise IncompleteEnsembleError(
            f"incomplete ensemble: product basis is linearly dependent ({exc})"
        ) from None
    recon = sum(x * b for x, b in zip(beta, basis))
    residual = float(np.max(np.abs(recon - w)))
    return WitnessDecomposition(beta.reshape(4, 4), residual)


def bell_like_value_direct(w, rho, dA: int = 2, dB: int = 2) -> float:
    """Tr(W rho) / (dA dB)."""
    w = np.asarray(w)
    rho = np.asarray(rho)
    if w.shape != rho.shape or w.shape[0] != dA * dB:
        raise LinalgError(f"dimension mismatch: W {w.shape}, rho {rho.shape}, dA*dB={dA * dB}")
    return float(np.real(np.trace(w @ rho))) / (dA * dB)


def bell_like_value_from_correlations(beta: WitnessDecomposition, table: CorrelationTable) -> float:
    """sum_{s,t} beta[s, t] P(1, 1 | s, t)."""
    p11 = np.asarray(table.p)[1, 1]
    if np.isnan(p11).any():
        raise ValueError("correlation table is missing P(1, 1 | s, t) entries")
    return float(np.sum(beta.beta * p11))


def witness_is_consistent(w: Witness, beta: WitnessDecomposition, alice: InputEnsemble, bob: InputEnsemble,
                          atol: float = 1e-9) -> bool:
    return allclose(beta.reconstruct(alice, bob), w.matrix, atol)
