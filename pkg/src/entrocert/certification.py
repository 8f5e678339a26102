"""Guessing-probability bounds and min-entropy curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .protocol import analytic_max_correlation
from .states import SEPARABLE_Z

BELL_STATE_VALUE = -1.0 / 8.0  # most negative Tr(W rho)/4 for the Werner witness


class NoCertificationError(ValueError):
    """Raised when a Bell-like value is not negative, so nothing can be certified."""


class CurvePoint(NamedTuple):
    z: float
    h_bits: float

    @property
    def certifying(self) -> bool:
        return self.z > SEPARABLE_Z


@dataclass(frozen=True)
class CertificateReport:
    bell_like_value: float
    i_optimal: float
    p_max: float
    p_guess_bound: float
    min_entropy_bits: float
    stderr: float = 0.0
    n_rounds: int = 0

    def __post_init__(self):
        if not 0 < self.p_guess_bound <= 1:
            raise ValueError(f"guessing bound {self.p_guess_bound} outside (0, 1]")
        if self.bell_like_value < self.i_optimal:
            raise ValueError("Bell-like value below the quantum optimum")

    @property
    def certified_bits(self) -> float:
        return self.n_rounds * self.min_entropy_bits


def guessing_probability_bound(i_target: float, i_optimal: float, p_max: float) -> float:
    """(I_opt - I)/I_opt + (I/I_opt) * p_max, clamped to [p_max, 1]."""
    if i_target >= 0:
        raise NoCertificationError(f"Bell-like value {i_target} is not negative: no certification possible")
    if i_target < i_optimal:
        raise ValueError(f"target {i_target} exceeds the quantum optimum {i_optimal}")
    if not 0 <= p_max <= 1:
        raise ValueError(f"p_max={p_max} is not a probability")
    ratio = i_target / i_optimal
    p = (1 - ratio) + ratio * p_max
    return min(max(p, p_max), 1.0)


def min_entropy(p: float) -> float:
    if not 0 < p <= 1:
        raise ValueError(f"min-entropy needs 0 < p <= 1, got {p}")
    return max(-math.log2(p), 0.0)


def werner_bell_value(z: float) -> float:
    return (1 - 3 * z) / 16


def werner_guess_bound(z: float, p_max: float | None = None) -> float:
    p_max = analytic_max_correlation() if p_max is None else p_max
    return guessing_probability_bound(werner_bell_value(z), BELL_STATE_VALUE, p_max)


def werner_randomness(z: float, p_max: float | None = None) -> float:
    """Certified bits per round for a Werner state; 0 at or below the separability point."""
    if z <= SEPARABLE_Z:
        return 0.0
    return min_entropy(werner_guess_bound(z, p_max))


def werner_randomness_curve(z_grid: Iterable[float], p_max: float | None = None) -> list[CurvePoint]:
    return [CurvePoint(float(z), werner_randomness(z, p_max)) for z in z_grid]


def chsh_randomness(z: float) -> float:
    """1 - log2(1 + sqrt(2 - I^2/4)) with I = 2 sqrt(2) z, clamped at 0."""
    if not 0 <= z <= 1:
        raise ValueError(f"z={z} outside [0, 1]")
    chsh = 2 * math.sqrt(2) * z
    h = 1 - math.log2(1 + math.sqrt(max(2 - chsh * chsh / 4, 0.0)))
    return max(h, 0.0)


def chsh_randomness_curve(z_grid: Iterable[float]) -> list[CurvePoint]:
    return [CurvePoint(float(z), chsh_randomness(z)) for z in z_grid]


def certify(i_value: float, i_optimal: float = BELL_STATE_VALUE, p_max: float | None = None,
            stderr: float = 0.0, n_rounds: int = 0) -> CertificateReport:
    """Certificate for an observed Bell-like value; zero bits when it is not negative."""
    p_max = analytic_max_correlation() if p_max is None else p_max
    if i_value >= 0:
        return CertificateReport(i_value, i_optimal, p_max, 1.0, 0.0, stderr, n_rounds)
    i_used = max(i_value, i_optimal)
    p = guessing_probability_bound(i_used, i_optimal, p_max)
    return CertificateReport(i_used, i_optimal, p_max, p, min_entropy(p), stderr, n_rounds)
