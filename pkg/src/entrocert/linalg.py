"""Small dense complex linear algebra.

Matrices are plain square ``numpy.ndarray`` objects. Everything here is
sized for operators of at most a few qubits (dimension <= 16, linear systems
up to 256 unknowns), so clarity wins over speed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITIAN_ATOL = 1e-10
PIVOT_ATOL = 1e-12
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class LinalgError(ValueError):
    pass


class NotHermitianError(LinalgError):
    pass


class ConvergenceError(ArithmeticError):
    pass


class SingularMatrixError(LinalgError):
    def __init__(self, pivot_index: int, pivot: float):
        super().__init__(f"singular matrix: pivot {pivot_index} has magnitude {abs(pivot):.3e}")
        self.pivot_index = pivot_index
        self.pivot = pivot


def as_square(m, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise LinalgError(f"{name} must be square, got shape {m.shape}")
    return m


def allclose(a, b, atol: float) -> bool:
    """Max-entry comparison with an explicit absolute tolerance."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and bool(np.max(np.abs(a - b), initial=0.0) <= atol)


def dagger(m) -> np.ndarray:
    return np.conj(np.asarray(m)).T


def is_hermitian(m, atol: float = HERMITIAN_ATOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and allclose(m, dagger(m), atol)


def kron(a, b) -> np.ndarray:
    """Kronecker product: entry (i*db + k, j*db + l) is a[i, j] * b[k, l]."""
    a = as_square(a, "a")
    b = as_square(b, "b")
    da, db = a.shape[0], b.shape[0]
    out = a[:, None, :, None] * b[None, :, None, :]
    return out.reshape(da * db, da * db)


def kron_all(*ms) -> np.ndarray:
    out = np.ones((1, 1))
    for m in ms:
        out = kron(out, m)
    return out


def permute_subsystems(m, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator.

    Subsystem ``k`` of the result is subsystem ``perm[k]`` of the input, so
    ``permute_subsystems(kron(a, b), [2, 2], [1, 0])`` equals ``kron(b, a)``.
    """
    m = as_square(m)
    dims = [int(d) for d in dims]
    perm = [int(p) for p in perm]
    n = len(dims)
    if int(np.prod(dims)) != m.shape[0]:
        raise LinalgError(f"subsystem dims {dims} do not multiply to {m.shape[0]}")
    if sorted(perm) != list(range(n)):
        raise LinalgError(f"{perm} is not a permutation of {n} subsystems")
    t = m.reshape(dims + dims)
    t = t.transpose(perm + [n + p for p in perm])
    return t.reshape(m.shape)


def inverse_permutation(perm: Sequence[int]) -> list[int]:
    inv = [0] * len(perm)
    for k, p in enumerate(perm):
        inv[p] = k
    return inv


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    m = as_square(m)
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    t = m.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    # trace highest axes first so lower axis numbers stay valid
    for k in sorted(traced, reverse=True):
        nk = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + nk)
    d = int(np.prod([dims[k] for k in keep]))
    return t.reshape(d, d)


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(np.abs(off) ** 2)))


def hermitian_eig(m, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each rotation first removes the phase of the pivot element and then applies
    the real symmetric Jacobi rotation that zeroes it.
    """
    m = as_square(m)
    if not is_hermitian(m):
        raise NotHermitianError("hermitian_eig requires a Hermitian matrix")
    a = (np.array(m, dtype=complex) + dagger(m)) / 2
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(a)))
    threshold = tol * scale
    negligible = 1e-18 * scale

    for _ in range(max_sweeps + 1):
        if _off_norm(a) < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag < negligible:
                    a[p, q] = a[q, p] = 0.0
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # columns p, q of the unitary: [c, -s e^{-i phi}] and [s, c e^{-i phi}]
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = dagger(g) @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
    else:
        raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(eigenvalues=w[order], eigenvectors=v[:, order])


def eigvalsh(m) -> np.ndarray:
    return hermitian_eig(m).eigenvalues


def solve_real_linear(a, b, pivot_atol: float = PIVOT_ATOL) -> np.ndarray:
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting."""
    a = np.array(as_square(a), dtype=float)
    b = np.array(b, dtype=float).reshape(-1)
    n = a.shape[0]
    if b.shape[0] != n:
        raise LinalgError(f"right-hand side has length {b.shape[0]}, expected {n}")
    if n > 256:
        raise LinalgError("solve_real_linear supports n <= 256")

    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[piv, k]) < pivot_atol:
            raise SingularMatrixError(k, a[piv, k])
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            b[[k, piv]] = b[[piv, k]]
        factors = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= np.outer(factors, a[k, k:])
        b[k + 1 :] -= factors * b[k]

    x = np.zeros(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    return x
