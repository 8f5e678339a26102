"""Adversary's best guessing probability over resource states reaching a target Bell-like value.

The adversary replays stored outcomes on some rounds and measures a resource
state rho' on the others, mixed so the observed Bell-like value equals the
target I_t. Its guessing probability is

    p = (I' - I_t)/I' + (I_t/I') * maxP(rho'),    I' <= I_t < 0,

maximized here by multi-start ascent with numerical gradients. The result is
a lower bound on the adversary's power (local search), hence an upper bound
on the randomness this route certifies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _ascent
from .certification import CurvePoint, min_entropy, werner_bell_value
from .linalg import LinalgError, as_square, dagger, hermitian_eig, is_hermitian
from .protocol import correlation_table, effective_operators, tables_from_operators
from .states import SEPARABLE_Z, DensityMatrix, werner
from .witness import WitnessDecomposition, decompose_witness, werner_witness

SOFTMAX_TEMPERATURE = 1e-3
FEASIBILITY_ATOL = 1e-9


class InfeasibleTargetError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    step_init: float = 0.1
    step_min: float = 1e-6
    tol: float = 1e-9
    seed: int = 0
    max_iter: int = 2000

    def __post_init__(self):
        if self.restarts < 1 or self.max_iter < 1:
            raise ValueError("restarts and max_iter must be positive")
        if not (0 < self.step_min < self.step_init and self.tol > 0):
            raise ValueError("need 0 < step_min < step_init and tol > 0")


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    p_guess_star: float
    rho_star: DensityMatrix
    i_rho_star: float
    p_max_star: float
    i_target: float
    converged: bool
    iterations: int


def guess_objective(i_rho: float, p_max: float, i_target: float) -> float:
    ratio = i_target / i_rho
    return (1 - ratio) + ratio * p_max


def project_psd_trace_one(m) -> DensityMatrix:
    """Nearest-by-spectrum density matrix: clip negative eigenvalues, renormalize the trace."""
    m = np.asarray(as_square(m), dtype=complex)
    if not is_hermitian(m, 1e-8):
        m = (m + dagger(m)) / 2
    eig = hermitian_eig((m + dagger(m)) / 2)
    lam = np.clip(eig.eigenvalues, 0.0, None)
    if lam.sum() <= 0:
        raise LinalgError("matrix has no positive part to project onto")
    v = eig.eigenvectors
    rho = (v * (lam / lam.sum())) @ dagger(v)
    return DensityMatrix((rho + dagger(rho)) / 2)


class _Problem:
    """Vectorized evaluation of the objective for parameter batches."""

    def __init__(self, beta: WitnessDecomposition, i_target: float, p_max_floor: float):
        self.ops = effective_operators()
        # Bell-like value as a linear functional: I(rho) = Tr(w_eff rho)
        self.w_eff = np.einsum("st,stij->ij", beta.beta, self.ops[1, 1])
        self.i_target = i_target
        self.p_max_floor = p_max_floor
        self.anchor = self.ground_state()
        self.i_anchor = float(self.evaluate(self.anchor)[0])

    def evaluate(self, rhos: np.ndarray):
        tables = tables_from_operators(self.ops, rhos).reshape(rhos.shape[:-2] + (-1,))
        i_val = np.real(np.einsum("ij,...ji->...", self.w_eff, rhos))
        return i_val, tables

    def smooth(self, x: np.ndarray) -> np.ndarray:
        i_val, tables = self.evaluate(_ascent.to_states(x))
        top = tables.max(axis=-1)
        smax = top + SOFTMAX_TEMPERATURE * np.log(np.exp((tables - top[..., None]) / SOFTMAX_TEMPERATURE).sum(-1))
        smax = np.minimum(smax, 1.0)
        i_val = np.minimum(i_val, -1e-15)
        return guess_objective(i_val, smax, self.i_target)

    def constraint(self, x: np.ndarray) -> np.ndarray:
        return self.evaluate(_ascent.to_states(x))[0] - self.i_target

    def exact(self, rho: np.ndarray) -> tuple[float, float, float]:
        i_val, tables = self.evaluate(rho)
        p_max = float(tables.max())
        return guess_objective(float(i_val), p_max, self.i_target), float(i_val), p_max

    def feasible(self, rho: np.ndarray) -> bool:
        i_val, tables = self.evaluate(rho)
        return i_val <= self.i_target + FEASIBILITY_ATOL and tables.max() >= self.p_max_floor - FEASIBILITY_ATOL

    def repair(self, cand: np.ndarray, current: np.ndarray | None = None):
        """Mix an infeasible candidate toward the witness ground state until I' <= I_t."""
        rho_c = _ascent.to_states(cand)
        i_c = float(self.evaluate(rho_c)[0])
        if i_c > self.i_target:
            rho_f = self.anchor
            i_f = self.i_anchor
            if i_c - i_f <= 0:
                return None
            lam = min((i_c - self.i_target) / (i_c - i_f) * (1 + 1e-12) + 1e-15, 1.0)
            rho_c = (1 - lam) * rho_c + lam * rho_f
            cand = _ascent.from_state(rho_c)
            rho_c = _ascent.to_states(cand)
        return cand if self.feasible(rho_c) else None

    def ground_state(self) -> np.ndarray:
        eig = hermitian_eig(self.w_eff)
        v = eig.eigenvectors[:, 0]
        return np.outer(v, v.conj())


def maximize_guess(beta: WitnessDecomposition, i_target: float, cfg: OptimizerConfig | None = None, *,
                   p_max_floor: float = 0.0, initial_states: Sequence = ()) -> OptimizationResult:
    """Best guessing probability over resource states with Bell-like value at most ``i_target``.

    Restart 0 starts from the ground state of the witness functional; the
    others from random states mixed into feasibility. ``initial_states`` are
    extra feasible starting points (e.g. a neighbouring grid solution).
    """
    cfg = cfg or OptimizerConfig()
    if not i_target < 0:
        raise ValueError(f"target Bell-like value {i_target} must be negative")
    prob = _Problem(beta, float(i_target), p_max_floor)
    anchor = prob.anchor
    if not prob.feasible(anchor):
        _, i_min, p_anchor = prob.exact(anchor)
        if i_min <= i_target + FEASIBILITY_ATOL:
            raise InfeasibleTargetError(
                f"largest entry {p_anchor} of the witness ground state is below the floor {p_max_floor}"
            )
        raise InfeasibleTargetError(f"target {i_target} is below the smallest attainable value {i_min}")
    anchor_x = _ascent.from_state(anchor)

    starts = [anchor_x]
    for rng in _ascent.restart_generators(cfg.seed, cfg.restarts)[1:]:
        x = prob.repair(_ascent.random_start(rng), anchor_x)
        starts.append(anchor_x if x is None else x)
    for rho in initial_states:
        rho = np.asarray(rho)
        if prob.feasible(rho):
            starts.append(_ascent.from_state(rho))

    best = None
    iterations = 0
    for x0 in starts:
        run = _ascent.ascend(prob.smooth, x0, step_init=cfg.step_init, step_min=cfg.step_min, tol=cfg.tol,
                             max_iter=cfg.max_iter, repair=prob.repair,
                             constraint=prob.constraint)
        iterations += run.iterations
        rho = _ascent.to_states(run.x)
        p, i_val, p_max = prob.exact(rho)
        if best is None or p > best[0]:
            best = (p, rho, i_val, p_max, run.converged)
    p, rho, i_val, p_max, converged = best
    return OptimizationResult(p, DensityMatrix((rho + dagger(rho)) / 2), i_val, p_max, float(i_target),
                              converged, iterations)


def werner_beta() -> WitnessDecomposition:
    return decompose_witness(werner_witness())


def optimize_curve(z_grid: Iterable[float], cfg: OptimizerConfig | None = None,
                   beta: WitnessDecomposition | None = None) -> dict[float, OptimizationResult]:
    """Optimizer results for each entangled grid point, keyed by z.

    Points are solved from large to small z; each solution is feasible for the
    next (weaker) target and seeds it, which keeps the curve monotone.
    """
    cfg = cfg or OptimizerConfig()
    beta = beta or werner_beta()
    out: dict[float, OptimizationResult] = {}
    carry = []
    for z in sorted({float(z) for z in z_grid if z > SEPARABLE_Z}, reverse=True):
        floor = correlation_table(werner(z)).max_entry()
        res = maximize_guess(beta, werner_bell_value(z), cfg, p_max_floor=floor, initial_states=carry)
        out[z] = res
        carry = [res.rho_star.matrix]
    return out


def sdp_randomness_curve(z_grid: Iterable[float], cfg: OptimizerConfig | None = None) -> list[CurvePoint]:
    """Bits per round certified against the numerically optimized adversary; 0 for z <= 1/3."""
    z_grid = [float(z) for z in z_grid]
    results = optimize_curve(z_grid, cfg)
    return [CurvePoint(z, min_entropy(results[z].p_guess_star) if z in results else 0.0) for z in z_grid]
