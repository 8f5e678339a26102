"""Multi-start local ascent over two-qubit states in the factor parameterization rho = M M^dag / Tr."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

N_PARAMS = 32
FD_STEP = 1e-7


def to_states(x: np.ndarray) -> np.ndarray:
    """Parameter vectors (..., 32) -> density matrices (..., 4, 4)."""
    m = (x[..., :16] + 1j * x[..., 16:]).reshape(x.shape[:-1] + (4, 4))
    rho = m @ np.conj(np.swapaxes(m, -1, -2))
    tr = np.real(np.trace(rho, axis1=-2, axis2=-1))
    return rho / tr[..., None, None]


def from_state(rho: np.ndarray) -> np.ndarray:
    """A unit-norm parameter vector whose state is ``rho``."""
    lam, vec = np.linalg.eigh((rho + np.conj(rho.T)) / 2)
    m = vec * np.sqrt(np.clip(lam, 0.0, None))
    x = np.concatenate([m.real.reshape(-1), m.imag.reshape(-1)])
    return x / np.linalg.norm(x)


def random_start(rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=N_PARAMS)
    return x / np.linalg.norm(x)


@dataclass
class AscentResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool


def ascend(
    objective: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    *,
    step_init: float = 0.1,
    step_min: float = 1e-6,
    tol: float = 1e-9,
    max_iter: int = 5000,
    repair: Callable[[np.ndarray, np.ndarray], np.ndarray | None] | None = None,
    constraint: Callable[[np.ndarray], np.ndarray] | None = None,
    active_tol: float = 1e-7,
) -> AscentResult:
    """Normalized-gradient ascent with step halving on rejection.

    ``objective`` maps a batch of parameter vectors to values; the gradient is
    a forward difference computed in a single batched call. ``repair(candidate,
    current)`` may move a candidate back into the feasible set or return None
    to reject it. ``constraint`` maps a batch to values that must stay <= 0;
    while it is nearly active the outward component of the gradient is
    dropped so steps slide along the boundary.
    """
    x = x0 / np.linalg.norm(x0)
    fx = float(objective(x[None])[0])
    step = step_init
    eye = np.eye(len(x)) * FD_STEP
    for it in range(1, max_iter + 1):
        probe = x[None] + eye
        grad = (objective(probe) - fx) / FD_STEP
        if constraint is not None:
            cx = float(constraint(x[None])[0])
            if cx > -active_tol:
                normal = (constraint(probe) - cx) / FD_STEP
                outward = grad @ normal
                if outward > 0:
                    grad = grad - outward / (normal @ normal) * normal
        gnorm = np.linalg.norm(grad)
        if not np.isfinite(gnorm) or gnorm == 0:
            return AscentResult(x, fx, it, True)
        direction = grad / gnorm
        halved = False
        while step >= step_min:
            cand = x + step * direction
            cand /= np.linalg.norm(cand)
            if repair is not None:
                cand = repair(cand, x)
            fc = float(objective(cand[None])[0]) if cand is not None else -np.inf
            if fc > fx:
                gain = fc - fx
                x, fx = cand, fc
                if gain <= tol * max(abs(fx), 1e-300) and not halved:
                    return AscentResult(x, fx, it, True)
                step = min(2 * step, step_init)
                break
            step /= 2
            halved = True
        else:
            return AscentResult(x, fx, it, True)
    return AscentResult(x, fx, max_iter, False)


def restart_generators(seed: int, restarts: int) -> list[np.random.Generator]:
    """Per-restart generators; restart k is the same whatever the total count."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(restarts)]
