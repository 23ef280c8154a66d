"""Probabilistic solver models and their success accounting."""

import numpy as np
import pytest

from mvamp.field import PrimeField
from mvamp.linalg import FpMatrix, FpVector, enumerate_matrices, enumerate_vectors, matvec, random_matrix, random_vector
from mvamp.oracle import SOURCE_ALG, SOURCE_MATRIX, SOURCE_VECTOR, QueryLedger, wrap_matrix, wrap_vector
from mvamp.solver import (
    GoodBadProfile,
    NoisySolver,
    PlantedAdversarialProfile,
    UniformProfile,
    estimate_average_success,
    exact_average_success,
    invoke,
)

F5 = PrimeField(5)


def make_instance(n=3, seed=0, field=F5):
    rng = np.random.default_rng(seed)
    return random_matrix(n, n, field, rng), random_vector(n, field, rng)


def test_uniform_profile_constant():
    prof = UniformProfile(0.3)
    m, v = make_instance()
    assert prof.success_probability(m, v) == 0.3
    assert prof.declared_average == 0.3
    for bad in (-0.1, 1.5):
        with pytest.raises(ValueError):
            UniformProfile(bad)


def test_goodbad_profile_splits_on_predicate():
    prof = GoodBadProfile(lambda m, v: v.entry(0).value == 0, alpha_good=0.9, alpha_bad=0.1)
    m, _ = make_instance()
    assert prof.success_probability(m, FpVector(F5, [0, 1, 2])) == 0.9
    assert prof.success_probability(m, FpVector(F5, [1, 1, 2])) == 0.1


def test_planted_profile_is_deterministic():
    a = PlantedAdversarialProfile(average=0.25, bad_fraction=0.5, seed=7)
    b = PlantedAdversarialProfile(average=0.25, bad_fraction=0.5, seed=7)
    m, v = make_instance()
    assert a.is_bad(m, v) == b.is_bad(m, v)
    assert a.success_probability(m, v) == b.success_probability(m, v)


def test_planted_profile_success_levels():
    prof = PlantedAdversarialProfile(average=0.25, bad_fraction=0.5, seed=3)
    # off the bad set the rate is average / (1 - bad_fraction); on it, zero
    hits = {True: 0, False: 0}
    for seed in range(200):
        m, v = make_instance(seed=seed)
        p = prof.success_probability(m, v)
        if prof.is_bad(m, v):
            assert p == 0.0
            hits[True] += 1
        else:
            assert p == pytest.approx(0.5)
            hits[False] += 1
    # bad_fraction 0.5 over 200 draws: both sides seen (P[miss] ~ 2^-200)
    assert hits[True] > 0 and hits[False] > 0
    # binomial(200, .5): 4 sigma is ~28, allow a wide band
    assert 60 <= hits[True] <= 140


def test_planted_profile_seed_changes_bad_set():
    a = PlantedAdversarialProfile(average=0.25, bad_fraction=0.5, seed=0)
    b = PlantedAdversarialProfile(average=0.25, bad_fraction=0.5, seed=1)
    differs = False
    for seed in range(50):
        m, v = make_instance(seed=seed)
        if a.is_bad(m, v) != b.is_bad(m, v):
            differs = True
            break
    assert differs


def test_planted_profile_validates_average():
    with pytest.raises(ValueError):
        PlantedAdversarialProfile(average=0.6, bad_fraction=0.5)
    PlantedAdversarialProfile(average=0.5, bad_fraction=0.5)  # boundary allowed


def test_exact_average_success_uniform():
    assert exact_average_success(UniformProfile(0.3), 2, PrimeField(2)) == pytest.approx(0.3)


def test_exact_average_success_goodbad_closed_form():
    # predicate "first vector entry is 0" holds for exactly 1/p of inputs
    for p in (2, 3):
        f = PrimeField(p)
        prof = GoodBadProfile(lambda m, v: v.entry(0).value == 0, alpha_good=1.0, alpha_bad=0.0)
        expect = 1.0 / p
        assert exact_average_success(prof, 2, f) == pytest.approx(expect)


def test_exact_average_success_planted_matches_manual_enumeration():
    f = PrimeField(2)
    prof = PlantedAdversarialProfile(average=0.25, bad_fraction=0.5, seed=11)
    total, count = 0.0, 0
    for m in enumerate_matrices(f, 2, 2):
        for v in enumerate_vectors(f, 2):
            total += prof.success_probability(m, v)
            count += 1
    assert exact_average_success(prof, 2, f) == pytest.approx(total / count)


def test_invoke_perfect_solver_returns_truth_and_charges():
    led = QueryLedger()
    m, v = make_instance(n=3)
    solver = NoisySolver(UniformProfile(1.0))
    out = invoke(solver, wrap_matrix(m, led), wrap_vector(v, led), np.random.default_rng(0))
    assert out == matvec(m, v)
    assert led.get(SOURCE_ALG) == 1
    assert led.get(SOURCE_MATRIX) == 9  # default budget is n^2
    assert led.get(SOURCE_VECTOR) == 3


def test_invoke_queries_per_call_override():
    led = QueryLedger()
    m, v = make_instance(n=3)
    solver = NoisySolver(UniformProfile(1.0), queries_per_call=5)
    invoke(solver, wrap_matrix(m, led), wrap_vector(v, led), np.random.default_rng(0))
    assert led.get(SOURCE_MATRIX) == 5
    assert led.get(SOURCE_VECTOR) == 3


def test_invoke_zero_solver_never_correct():
    led = QueryLedger()
    m, v = make_instance(n=2)
    truth = matvec(m, v)
    solver = NoisySolver(UniformProfile(0.0))
    rng = np.random.default_rng(1)
    for _ in range(50):
        out = invoke(solver, wrap_matrix(m, led), wrap_vector(v, led), rng)
        assert out != truth


def test_invoke_perturb_mode_differs_in_one_coordinate():
    led = QueryLedger()
    m, v = make_instance(n=4)
    truth = matvec(m, v)
    solver = NoisySolver(UniformProfile(0.0), failure_mode="perturb")
    rng = np.random.default_rng(2)
    for _ in range(50):
        out = invoke(solver, wrap_matrix(m, led), wrap_vector(v, led), rng)
        diffs = sum(1 for a, b in zip(out.to_list(), truth.to_list()) if a != b)
        assert diffs == 1


def test_invoke_rejects_bad_shapes():
    led = QueryLedger()
    solver = NoisySolver(UniformProfile(1.0))
    rng = np.random.default_rng(0)
    rect = wrap_matrix(FpMatrix(F5, [[1, 2, 3], [4, 0, 1]]), led)
    vec3 = wrap_vector(FpVector(F5, [1, 2, 3]), led)
    with pytest.raises(ValueError):
        invoke(solver, rect, vec3, rng)
    sq = wrap_matrix(FpMatrix(F5, [[1, 2], [3, 4]]), led)
    with pytest.raises(ValueError):
        invoke(solver, sq, vec3, rng)
    other = wrap_vector(FpVector(PrimeField(7), [1, 2]), led)
    with pytest.raises(ValueError):
        invoke(solver, sq, other, rng)


def test_invoke_failure_mode_validated():
    with pytest.raises(ValueError):
        NoisySolver(UniformProfile(0.5), failure_mode="garble")


def test_estimate_average_success_extremes():
    rng = np.random.default_rng(0)
    perfect = estimate_average_success(NoisySolver(UniformProfile(1.0)), 2, F5, 50, rng)
    assert perfect.successes == 50 and perfect.estimate == 1.0
    never = estimate_average_success(NoisySolver(UniformProfile(0.0)), 2, F5, 50, rng)
    assert never.successes == 0 and never.estimate == 0.0
    with pytest.raises(ValueError):
        estimate_average_success(NoisySolver(UniformProfile(1.0)), 2, F5, 0, rng)


def test_estimate_average_success_midpoint():
    rng = np.random.default_rng(123)
    est = estimate_average_success(NoisySolver(UniformProfile(0.5)), 2, F5, 2000, rng)
    assert est.trials == 2000
    # 4 sigma of binomial(2000, .5) is about 0.045
    assert abs(est.estimate - 0.5) < 0.05
    assert est.std_error == pytest.approx(
        (est.estimate * (1 - est.estimate) / 2000) ** 0.5, rel=1e-9, abs=1e-12
    )


def test_estimate_does_not_touch_caller_ledger():
    # sampling for calibration must not pollute any shared ledger; the
    # estimator builds its own private one
    rng = np.random.default_rng(5)
    est = estimate_average_success(NoisySolver(UniformProfile(0.7)), 3, F5, 100, rng)
    assert 0 <= est.estimate <= 1
