import io
import math

import numpy as np
import pytest

from entrocert.adversary import (
    CHUNK,
    AttackStrategy,
    Trials,
    attack_guessing_probability,
    chunk_generator,
    estimate_and_certify,
    estimate_bell_value,
    expected_attack_guess_rate,
    optimal_fake_fraction,
    simulate_attack,
    simulate_honest,
    true_guess_rate,
)
from entrocert.certification import BELL_STATE_VALUE, guessing_probability_bound, min_entropy
from entrocert.protocol import analytic_max_correlation, correlation_table
from entrocert.states import bell_state, werner
from entrocert.witness import bell_like_value_direct, decompose_witness, werner_witness

BETA = decompose_witness(werner_witness())


def conditional(records, a, b, s, t):
    sel = (records.s == s) & (records.t == t)
    n = sel.sum()
    hits = ((records.a[sel] == a) & (records.b[sel] == b)).sum()
    return hits / n, n


def test_optimal_fake_fraction():
    assert optimal_fake_fraction(-1 / 800, -1 / 8) == pytest.approx(0.99, abs=1e-15)
    assert optimal_fake_fraction(-1 / 8, -1 / 8) == 0.0
    assert optimal_fake_fraction(-1 / 16, -1 / 8) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        optimal_fake_fraction(0.01, -1 / 8)
    with pytest.raises(ValueError):
        optimal_fake_fraction(-0.2, -1 / 8)


def test_attack_guessing_probability():
    assert attack_guessing_probability(0.99, 7 / 12) == pytest.approx(0.99 + 0.01 * 7 / 12)
    assert attack_guessing_probability(0.99, 7 / 12) == pytest.approx(0.995833333, abs=1e-9)
    assert attack_guessing_probability(0.0, 7 / 12) == pytest.approx(7 / 12)
    assert attack_guessing_probability(1.0, 7 / 12) == 1.0


def test_honest_bell_statistics():
    records = simulate_honest(werner(1), 1_000_000, seed=5)
    p, n = conditional(records, 0, 0, 0, 0)
    assert abs(p - 7 / 12) <= 3 * math.sqrt(7 / 12 * 5 / 12 / n)
    assert not records.faked.any()


def test_honest_mixed_statistics():
    records = simulate_honest(np.eye(4) / 4, 1_000_000, seed=6)
    for s, t in [(0, 0), (1, 3), (2, 1)]:
        p, n = conditional(records, 1, 1, s, t)
        assert abs(p - 1 / 16) <= 3 * math.sqrt(1 / 16 * 15 / 16 / n)


def test_inputs_uniform():
    records = simulate_honest(werner(0.5), 160_000, seed=9)
    counts = np.bincount(records.s * 4 + records.t, minlength=16)
    assert np.all(np.abs(counts - 10_000) < 5 * math.sqrt(10_000))


def test_determinism_and_seed_sensitivity():
    a = simulate_honest(werner(0.5), 200_000, seed=3)
    b = simulate_honest(werner(0.5), 200_000, seed=3)
    c = simulate_honest(werner(0.5), 200_000, seed=4)
    assert a == b
    assert not a == c
    assert a.to_csv() == b.to_csv()


def long_part(records, start, stop):
    return Trials(*(getattr(records, f)[start:stop] for f in ("s", "t", "a", "b", "faked")))


def short_tail(records):
    return long_part(records, CHUNK, len(records))


def test_chunks_are_independent_of_run_length():
    long = simulate_honest(werner(0.5), 3 * CHUNK, seed=8)
    short = simulate_honest(werner(0.5), CHUNK + 10, seed=8)
    assert short == Trials.concatenate([long_part(long, 0, CHUNK), short_tail(short)])
    # the second block can be regenerated from its own counter
    g1 = chunk_generator(8, 1)
    assert np.array_equal(g1.integers(0, 4, size=CHUNK, dtype=np.int8), long.s[CHUNK : 2 * CHUNK])


def test_trial_records_interface():
    records = simulate_honest(werner(0.5), 10, seed=1)
    assert len(records) == 10
    first = records[0]
    assert (first.s, first.t, first.a, first.b, first.faked) == tuple(next(iter(records)))
    text = records.to_csv()
    assert text.splitlines()[0] == "round,s,t,a,b"
    assert len(text.splitlines()) == 11
    assert records.to_csv(debug=True).splitlines()[0] == "round,s,t,a,b,faked"
    back = Trials.read_csv(io.StringIO(records.to_csv(debug=True)))
    assert back == records


def test_strategy_validation():
    with pytest.raises(ValueError):
        AttackStrategy(1.5)
    with pytest.raises(ValueError):
        AttackStrategy(0.5, fake_output=(1, 1))


def test_interleaving_is_exact():
    strategy = AttackStrategy(0.99)
    mask = strategy.honest_mask(1_000_000, seed=0)
    assert mask.sum() == 10_000
    assert AttackStrategy(0.0).honest_mask(1000, 0).all()
    assert not AttackStrategy(1.0).honest_mask(1000, 0).any()
    bern = AttackStrategy(0.99, bernoulli=True).honest_mask(1_000_000, seed=0)
    assert abs(bern.sum() - 10_000) < 5 * math.sqrt(10_000)


def test_attack_with_no_fakes_is_honest():
    honest = simulate_honest(bell_state(), 50_000, seed=2)
    attack = simulate_attack(AttackStrategy(0.0), 50_000, seed=2)
    assert attack == honest


def test_fake_rounds_emit_stored_output():
    records = simulate_attack(AttackStrategy(0.5, fake_output=(0, 1)), 10_000, seed=2)
    assert np.all(records.a[records.faked] == 0)
    assert np.all(records.b[records.faked] == 1)
    assert records.faked.sum() == 5000


def test_attack_matches_target_value():
    strategy = AttackStrategy(0.99)
    records = simulate_attack(strategy, 1_000_000, seed=12)
    est = estimate_bell_value(records, BETA)
    assert abs(est.value - (-1 / 800)) <= 3 * est.stderr


def test_attack_guess_rate_expectation():
    # on anti-aligned input pairs the Bell resource is only guessable with probability 1/2
    strategy = AttackStrategy(0.99)
    assert strategy.resource_table.average_guess_probability() == pytest.approx(9 / 16)
    expected = expected_attack_guess_rate(strategy)
    assert expected == pytest.approx(0.99 + 0.01 * 9 / 16)
    rate, err = true_guess_rate(simulate_attack(strategy, 1_000_000, seed=13), strategy.resource_table)
    assert abs(rate - expected) <= 3 * err


def test_estimator_certifies_honest_werner():
    records = simulate_honest(werner(0.34), 10_000_000, seed=21)
    est = estimate_bell_value(records, BETA)
    assert abs(est.value - (-1 / 800)) <= 3 * est.stderr
    report = estimate_and_certify(records, BETA, BELL_STATE_VALUE, 7 / 12)
    assert report.n_rounds == 10_000_000
    # at the exact value the per-round bound is the 0.006 bits of the stored-output attack
    assert min_entropy(guessing_probability_bound(-1 / 800, BELL_STATE_VALUE, 7 / 12)) == pytest.approx(0.006, abs=5e-5)


def test_attack_indistinguishable_from_honest():
    honest = estimate_bell_value(simulate_honest(werner(0.34), 2_000_000, seed=31), BETA)
    attack = estimate_bell_value(simulate_attack(AttackStrategy(0.99), 2_000_000, seed=32), BETA)
    assert abs(honest.value - attack.value) <= 3 * math.hypot(honest.stderr, attack.stderr)


def test_all_fake_records_certify_nothing():
    records = simulate_attack(AttackStrategy(1.0), 100_000, seed=4)
    report = estimate_and_certify(records, BETA, BELL_STATE_VALUE, analytic_max_correlation())
    assert report.bell_like_value == pytest.approx(0.0, abs=1e-15)
    assert report.certified_bits == 0.0


def test_estimator_needs_records():
    empty = Trials(*(np.zeros(0, np.int8) for _ in range(4)), np.zeros(0, bool))
    with pytest.raises(ValueError):
        estimate_and_certify(empty, BETA, BELL_STATE_VALUE, 0.6)


def test_estimator_consistency_over_seeds():
    rho = werner(0.6)
    table = correlation_table(rho)
    exact = bell_like_value_direct(werner_witness(), rho)
    inside = 0
    for seed in range(100):
        est = estimate_bell_value(simulate_honest(rho, 100_000, seed, table=table), BETA)
        inside += abs(est.value - exact) <= 3 * est.stderr
    assert inside >= 99


@pytest.mark.parametrize("f", [0.0, 0.3, 0.9])
def test_bound_covers_attack(f):
    strategy = AttackStrategy(f)
    i_expected = (1 - f) * bell_like_value_direct(werner_witness(), bell_state())
    bound = guessing_probability_bound(i_expected, BELL_STATE_VALUE, analytic_max_correlation())
    rate, err = true_guess_rate(simulate_attack(strategy, 200_000, seed=7), strategy.resource_table)
    assert bound >= rate - 3 * err
