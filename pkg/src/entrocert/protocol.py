"""Joint measurements on inputs plus shared state, and the resulting correlation tables.

Joint four-qubit space is ordered A', A, B, B' (Alice's input, Alice's half of
the shared state, Bob's half, Bob's input). Bob's effect is defined on (B', B)
and is moved into that order with :func:`~entrocert.linalg.permute_subsystems`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _ascent
from .linalg import LinalgError, allclose, kron, kron_all, partial_trace, permute_subsystems
from .states import (
    PAULIS,
    DensityMatrix,
    InputEnsemble,
    as_density,
    max_entangled,
    tetrahedral_ensemble,
    werner,
)

NEGATIVE_PROB_ATOL = 1e-12
OUTCOMES = ((0, 0), (0, 1), (1, 0), (1, 1))

# canonical (A', A, B', B) -> (A', A, B, B')
_TO_CANONICAL = (0, 1, 3, 2)


class NegativeProbabilityError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class JointPovm:
    effects_alice: tuple  # (P_0, P_1) on A'A
    effects_bob: tuple  # (Q_0, Q_1) on B'B
    dA: int = 2
    dB: int = 2

    def check(self, atol: float = 1e-10) -> bool:
        for effects, d in ((self.effects_alice, self.dA), (self.effects_bob, self.dB)):
            if not allclose(effects[0] + effects[1], np.eye(d * d), atol):
                return False
            for e in effects:
                if np.linalg.eigvalsh(e)[0] < -atol:
                    return False
        return True


def build_povms(dA: int = 2, dB: int = 2) -> JointPovm:
    """Projector onto the maximally entangled state and its complement, for each party."""
    p1 = max_entangled(dA).matrix
    q1 = max_entangled(dB).matrix
    p0 = np.eye(dA * dA) - p1
    q0 = np.eye(dB * dB) - q1
    return JointPovm((p0, p1), (q0, q1), dA, dB)


def joint_effect(povm: JointPovm, a: int, b: int) -> np.ndarray:
    """P_a (x) Q_b in the canonical A', A, B, B' order."""
    if (povm.dA, povm.dB) != (2, 2):
        raise LinalgError("correlations are implemented for qubit inputs and qubit-pair states")
    raw = kron(povm.effects_alice[a], povm.effects_bob[b])
    return permute_subsystems(raw, [2, 2, 2, 2], _TO_CANONICAL)


def _clamp_probability(p: float) -> float:
    if p < -NEGATIVE_PROB_ATOL or p > 1 + NEGATIVE_PROB_ATOL:
        raise NegativeProbabilityError(f"probability {p!r} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def correlation(rho, tau, omega, povm: JointPovm, a: int, b: int) -> float:
    """P(a, b | tau, omega) = Tr[(P_a (x) Q_b)(tau (x) rho (x) omega)]."""
    rho, tau, omega = (np.asarray(x) for x in (rho, tau, omega))
    if rho.shape != (4, 4) or tau.shape != (2, 2) or omega.shape != (2, 2):
        raise LinalgError(
            f"dimension mismatch: rho {rho.shape}, tau {tau.shape}, omega {omega.shape}"
        )
    joint = kron_all(tau, rho, omega)
    p = float(np.real(np.trace(joint_effect(povm, a, b) @ joint)))
    return _clamp_probability(p)


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    """Probabilities ``p[a, b, s, t]`` of outcomes (a, b) given input labels (s, t)."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.shape != (2, 2, 4, 4):
            raise ValueError(f"correlation table must have shape (2, 2, 4, 4), got {p.shape}")
        if np.isnan(p).any():
            raise ValueError("correlation table has missing entries")
        if p.min() < -NEGATIVE_PROB_ATOL:
            raise NegativeProbabilityError(f"negative table entry {p.min()!r}")
        if not np.allclose(p.sum(axis=(0, 1)), 1.0, atol=1e-9, rtol=0):
            raise ValueError("each (s, t) column of the table must sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def column(self, s: int, t: int) -> np.ndarray:
        """Outcome distribution for inputs (s, t), ordered as :data:`OUTCOMES`."""
        return self.p[:, :, s, t].reshape(4)

    def max_entry(self) -> float:
        return float(self.p.max())

    def argmax(self) -> tuple[int, int, int, int]:
        return tuple(int(i) for i in np.unravel_index(np.argmax(self.p), self.p.shape))

    def best_guess(self) -> np.ndarray:
        """Most likely (a, b) per (s, t), as an index into :data:`OUTCOMES` (shape 4x4)."""
        return np.argmax(self.p.reshape(4, 4, 4), axis=0)

    def average_guess_probability(self) -> float:
        """Max over outcomes, averaged over uniformly drawn input pairs."""
        return float(self.p.max(axis=(0, 1)).mean())


def correlation_table(rho, alice: InputEnsemble | None = None, bob: InputEnsemble | None = None,
                      povm: JointPovm | None = None) -> CorrelationTable:
    alice = alice or tetrahedral_ensemble()
    bob = bob or tetrahedral_ensemble()
    povm = povm or build_povms()
    rho = as_density(rho)
    p = np.empty((2, 2, 4, 4))
    for a, b in OUTCOMES:
        for s in range(4):
            for t in range(4):
                p[a, b, s, t] = correlation(rho, alice[s], bob[t], povm, a, b)
    return CorrelationTable(p)


def effective_operators(alice: InputEnsemble | None = None, bob: InputEnsemble | None = None,
                        povm: JointPovm | None = None) -> np.ndarray:
    """Operators E[a, b, s, t] on AB with P(a, b | s, t) = Tr(E[a, b, s, t] rho).

    Obtained by tracing the inputs out of the joint effect, so tables for many
    states can be evaluated with one contraction.
    """
    if alice is None and bob is None and povm is None:
        return default_effective_operators()
    alice = alice or tetrahedral_ensemble()
    bob = bob or tetrahedral_ensemble()
    povm = povm or build_povms()
    out = np.empty((2, 2, 4, 4, 4, 4), dtype=complex)
    eye = np.eye(4)
    for a, b in OUTCOMES:
        eff = joint_effect(povm, a, b)
        for s in range(4):
            for t in range(4):
                # Tr[E (tau (x) rho (x) omega)] = Tr[Tr_{A'B'}[E (tau (x) 1 (x) omega)] rho]
                op = eff @ kron_all(alice[s].matrix, eye, bob[t].matrix)
                out[a, b, s, t] = partial_trace(op, [2, 2, 2, 2], [1, 2])
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def default_effective_operators() -> np.ndarray:
    return effective_operators(tetrahedral_ensemble(), tetrahedral_ensemble(), build_povms())


def tables_from_operators(ops: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    """Batch of raw tables, shape (..., 2, 2, 4, 4), for a batch of 4x4 matrices."""
    return np.real(np.einsum("abstij,...ji->...abst", ops, rhos))


def werner_closed_form(z: float, a: int, b: int) -> float:
    """(3 - 2a)(3 - 2b)/16 + z (1 - 2a)(1 - 2b)/48, with no input dependence."""
    return (3 - 2 * a) * (3 - 2 * b) / 16 + z * (1 - 2 * a) * (1 - 2 * b) / 48


def werner_closed_form_max(z: float) -> float:
    return (27 + z) / 48


def closed_form_agreement(rho_table: CorrelationTable, z: float, atol: float = 1e-10):
    """Split input pairs into those matching the input-independent closed form and the rest."""
    matching, mismatching = [], []
    for s in range(4):
        for t in range(4):
            ok = all(abs(rho_table.p[a, b, s, t] - werner_closed_form(z, a, b)) <= atol for a, b in OUTCOMES)
            (matching if ok else mismatching).append((s, t))
    return matching, mismatching


def pauli_basis_correlation(i: int, j: int, s: int, t: int, a: int, b: int, povm: JointPovm | None = None,
                            alice: InputEnsemble | None = None, bob: InputEnsemble | None = None) -> float:
    """Tr[(P_a (x) Q_b)(tau_s (x) sigma_i (x) sigma_j (x) omega_t)]; may be negative."""
    povm = povm or build_povms()
    alice = alice or tetrahedral_ensemble()
    bob = bob or tetrahedral_ensemble()
    joint = kron_all(alice[s].matrix, PAULIS[i], PAULIS[j], bob[t].matrix)
    return float(np.real(np.trace(joint_effect(povm, a, b) @ joint)))


def pauli_basis_correlations(povm: JointPovm | None = None) -> np.ndarray:
    """All basis correlations, indexed [i, j, s, t, a, b]."""
    out = np.empty((4, 4, 4, 4, 2, 2))
    for idx in np.ndindex(out.shape):
        out[idx] = pauli_basis_correlation(*idx, povm=povm)
    return out


def analytic_max_correlation() -> float:
    """(9 + sqrt 3)/16, the quoted upper bound on any single correlation entry."""
    return (9 + np.sqrt(3.0)) / 16


@dataclass(frozen=True, eq=False)
class MaxCorrelationResult:
    value: float
    argmax: DensityMatrix
    indices: tuple[int, int, int, int]  # (a, b, s, t)
    analytic: float

    @property
    def verdict(self) -> str:
        """PASS when the search stays below the analytic constant, else VIOLATION."""
        return "PASS" if self.value <= self.analytic + 1e-9 else "VIOLATION"


def _max_entry(ops: np.ndarray):
    def objective(x: np.ndarray) -> np.ndarray:
        tables = tables_from_operators(ops, _ascent.to_states(x))
        return tables.reshape(len(x), -1).max(axis=1)
    return objective


def brute_force_max_correlation(restarts: int = 64, seed: int = 0, *, werner_line: bool = False,
                                step_init: float = 0.1, step_min: float = 1e-6,
                                tol: float = 1e-9) -> MaxCorrelationResult:
    """Largest single entry P(a, b | s, t) found by multi-start ascent over two-qubit states.

    With ``werner_line=True`` the search is restricted to Werner states; the
    maximum 7/12 is then attained at both ends of the line (z = 1 on aligned
    input pairs, z = -1/3 on anti-aligned ones).
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    ops = effective_operators()
    if werner_line:
        zs = np.linspace(-1 / 3, 1.0, 4001)
        rhos = np.array([werner(z).matrix for z in zs])
        tables = tables_from_operators(ops, rhos).reshape(len(zs), -1)
        k = int(np.argmax(tables.max(axis=1)))
        best = werner(zs[k])
    else:
        objective = _max_entry(ops)
        results = [
            _ascent.ascend(objective, _ascent.random_start(rng), step_init=step_init, step_min=step_min, tol=tol)
            for rng in _ascent.restart_generators(seed, restarts)
        ]
        # ties resolve to the lowest restart index so the result is order independent
        top = max(range(len(results)), key=lambda i: (results[i].value, -i))
        best = DensityMatrix(_ascent.to_states(results[top].x))
    table = correlation_table(best)
    return MaxCorrelationResult(table.max_entry(), best, table.argmax(), analytic_max_correlation())
