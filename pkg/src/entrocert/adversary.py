"""Monte Carlo protocol rounds, the stored-output faking attack, and the Bell-like value estimator.

Random streams: every block of :data:`CHUNK` rounds draws from its own
Philox4x64 generator keyed by the master seed with the block index in the
most significant counter word. Any block can therefore be regenerated on its own, and sharded runs
concatenated in round order reproduce the single-process stream exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .certification import CertificateReport, certify
from .protocol import OUTCOMES, CorrelationTable, correlation_table
from .states import DensityMatrix, as_density, bell_state
from .witness import WitnessDecomposition

CHUNK = 1 << 16
_OUTCOME_A = np.array([a for a, _ in OUTCOMES], dtype=np.int8)
_OUTCOME_B = np.array([b for _, b in OUTCOMES], dtype=np.int8)


def chunk_generator(seed: int, chunk_index: int) -> np.random.Generator:
    # the low counter words advance while drawing; the block index lives in the top word
    bitgen = np.random.Philox(key=int(seed) & (2**64 - 1), counter=[0, 0, 0, int(chunk_index)])
    return np.random.Generator(bitgen)


class TrialRecord(NamedTuple):
    s: int
    t: int
    a: int
    b: int
    faked: bool


@dataclass(frozen=True, eq=False)
class Trials:
    """Columnar list of protocol rounds; iterating yields :class:`TrialRecord` items."""

    s: np.ndarray
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    faked: np.ndarray

    def __len__(self) -> int:
        return len(self.s)

    def __getitem__(self, k: int) -> TrialRecord:
        return TrialRecord(int(self.s[k]), int(self.t[k]), int(self.a[k]), int(self.b[k]), bool(self.faked[k]))

    def __iter__(self) -> Iterator[TrialRecord]:
        for k in range(len(self)):
            yield self[k]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trials):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f)) for f in ("s", "t", "a", "b", "faked"))

    @classmethod
    def concatenate(cls, parts: list["Trials"]) -> "Trials":
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in ("s", "t", "a", "b", "faked")))

    def write_csv(self, fh, debug: bool = False) -> None:
        """``round,s,t,a,b`` lines; ``debug`` adds the hidden ``faked`` column."""
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "s", "t", "a", "b"] + (["faked"] if debug else []))
        cols = [np.arange(len(self)), self.s, self.t, self.a, self.b]
        if debug:
            cols.append(self.faked.astype(np.int8))
        w.writerows(zip(*(c.tolist() for c in cols)))

    def to_csv(self, debug: bool = False) -> str:
        buf = io.StringIO()
        self.write_csv(buf, debug)
        return buf.getvalue()

    @classmethod
    def read_csv(cls, fh) -> "Trials":
        rows = list(csv.DictReader(fh))
        col = lambda k: np.array([int(r[k]) for r in rows], dtype=np.int8)  # noqa: E731
        faked = col("faked").astype(bool) if rows and "faked" in rows[0] else np.zeros(len(rows), bool)
        return cls(col("s"), col("t"), col("a"), col("b"), faked)


def _sample_chunk(table: CorrelationTable, rng: np.random.Generator, n: int):
    s = rng.integers(0, 4, size=n, dtype=np.int8)
    t = rng.integers(0, 4, size=n, dtype=np.int8)
    u = rng.random(n)
    cum = np.cumsum(table.p.reshape(4, 4, 4), axis=0)  # [outcome, s, t]
    k = (u[:, None] >= cum[:3, s, t].T).sum(axis=1)
    return s, t, _OUTCOME_A[k], _OUTCOME_B[k], u


def simulate_honest(rho, n: int, seed: int, table: CorrelationTable | None = None) -> Trials:
    """Uniform input labels, outcomes drawn from the Born-rule table of ``rho``."""
    if n < 1:
        raise ValueError("need at least one round")
    table = table or correlation_table(as_density(rho))
    parts = []
    for c, start in enumerate(range(0, n, CHUNK)):
        m = min(CHUNK, n - start)
        s, t, a, b, _ = _sample_chunk(table, chunk_generator(seed, c), m)
        parts.append(Trials(s, t, a, b, np.zeros(m, dtype=bool)))
    return Trials.concatenate(parts)


@dataclass(frozen=True, eq=False)
class AttackStrategy:
    """Replay a stored outcome on a fraction of rounds, measure a built-in state on the rest."""

    fake_fraction: float
    fake_output: tuple[int, int] = (0, 0)
    resource_state: DensityMatrix = field(default_factory=bell_state)
    bernoulli: bool = False
    resource_table: CorrelationTable = field(init=False)

    def __post_init__(self):
        if not 0 <= self.fake_fraction <= 1:
            raise ValueError(f"fake fraction {self.fake_fraction} outside [0, 1]")
        if tuple(self.fake_output) == (1, 1):
            raise ValueError("fake output (1, 1) would shift the Bell-like value")
        object.__setattr__(self, "resource_state", as_density(self.resource_state))
        object.__setattr__(self, "resource_table", correlation_table(self.resource_state))

    def honest_mask(self, n: int, seed: int) -> np.ndarray:
        if self.bernoulli:
            parts = [chunk_generator(seed ^ 0x5EED, c).random(min(CHUNK, n - st)) >= self.fake_fraction
                     for c, st in enumerate(range(0, n, CHUNK))]
            return np.concatenate(parts)
        # round r is honest when floor((r + 1) h) steps past floor(r h), h = honest fraction
        h = 1.0 - self.fake_fraction
        r = np.arange(n + 1, dtype=np.float64)
        steps = np.floor(r * h + 1e-9)
        return np.diff(steps) > 0


def optimal_fake_fraction(i_target: float, i_resource: float) -> float:
    """Fraction f solving 0 * f + i_resource * (1 - f) = i_target."""
    if not i_resource < 0 or not i_target < 0:
        raise ValueError("both Bell-like values must be negative")
    if i_target < i_resource:
        raise ValueError("resource state cannot reach the target value")
    return 1.0 - i_target / i_resource


def attack_guessing_probability(f: float, p_max_resource: float) -> float:
    if not (0 <= f <= 1 and 0 <= p_max_resource <= 1):
        raise ValueError("arguments must be probabilities")
    return f + (1 - f) * p_max_resource


def simulate_attack(strategy: AttackStrategy, n: int, seed: int) -> Trials:
    if n < 1:
        raise ValueError("need at least one round")
    honest = simulate_honest(strategy.resource_state, n, seed, table=strategy.resource_table)
    mask = strategy.honest_mask(n, seed)
    fa, fb = strategy.fake_output
    a = np.where(mask, honest.a, np.int8(fa)).astype(np.int8)
    b = np.where(mask, honest.b, np.int8(fb)).astype(np.int8)
    return Trials(honest.s, honest.t, a, b, ~mask)


def true_guess_rate(records: Trials, resource_table: CorrelationTable) -> tuple[float, float]:
    """Fraction of rounds an informed adversary predicts, with its binomial standard error.

    Faked rounds are predicted exactly; other rounds are predicted by the most
    likely outcome of the resource state for that round's inputs.
    """
    guess = resource_table.best_guess()[records.s, records.t]
    hit = records.faked | ((_OUTCOME_A[guess] == records.a) & (_OUTCOME_B[guess] == records.b))
    n = len(records)
    rate = float(hit.mean())
    return rate, float(np.sqrt(rate * (1 - rate) / n))


def expected_attack_guess_rate(strategy: AttackStrategy) -> float:
    """Expected value of :func:`true_guess_rate` under uniform inputs."""
    return attack_guessing_probability(strategy.fake_fraction, strategy.resource_table.average_guess_probability())


class BellEstimate(NamedTuple):
    value: float
    stderr: float
    p11: np.ndarray
    counts: np.ndarray


def estimate_bell_value(records: Trials, beta: WitnessDecomposition) -> BellEstimate:
    """Empirical sum beta[s, t] P(1, 1 | s, t) with binomial error propagation."""
    if len(records) == 0:
        raise ValueError("no records to estimate from")
    idx = records.s.astype(np.int64) * 4 + records.t
    counts = np.bincount(idx, minlength=16).reshape(4, 4)
    ones = np.bincount(idx, weights=(records.a == 1) & (records.b == 1), minlength=16).reshape(4, 4)
    if (counts == 0).any():
        raise ValueError("some input pair never occurred; need more rounds")
    p11 = ones / counts
    value = float(np.sum(beta.beta * p11))
    var = np.sum(beta.beta**2 * p11 * (1 - p11) / counts)
    return BellEstimate(value, float(np.sqrt(var)), p11, counts)


def estimate_and_certify(records: Trials, beta: WitnessDecomposition, i_optimal: float,
                         p_max: float) -> CertificateReport:
    est = estimate_bell_value(records, beta)
    return certify(est.value, i_optimal, p_max, stderr=est.stderr, n_rounds=len(records))
