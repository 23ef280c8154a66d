"""Simulated average-case solvers with per-input success probabilities.

A profile maps each concrete (M, v) pair to a success probability. The map
is a deterministic function of the input (and the profile's own seed), so
repeated calls on the same input draw from the same Bernoulli; adversarial
profiles cannot be washed out by retrying the identical input. An invoke
charges the modeled access cost (one ALG call, Q matrix reads, n vector
reads) to the canonical sources; its internal materialization of the input
is muted in the ledger.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .field import PrimeField
from .linalg import (
    FpMatrix,
    FpVector,
    count_matrices,
    count_vectors,
    enumerate_matrices,
    enumerate_vectors,
    matvec_values,
    random_matrix,
    random_vector,
)
from .oracle import (
    SOURCE_ALG,
    SOURCE_MATRIX,
    SOURCE_VECTOR,
    MatrixOracleHandle,
    QueryLedger,
    VectorOracleHandle,
    wrap_matrix,
    wrap_vector,
)

# Exhaustive enumeration over all (M, v) pairs is refused beyond this many
# pairs; keeps exact-average and good-fraction sweeps at desk scale.
MAX_EXHAUSTIVE_PAIRS = 2**24


def _check_probability(name: str, x: float):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")


def _input_digest(matrix: FpMatrix, vector: FpVector, seed: int) -> int:
    """64-bit digest of (modulus, shapes, entries, seed), stable across runs."""
    h = hashlib.blake2b(digest_size=8)
    h.update(
        struct.pack(
            "<qqqqq",
            seed,
            matrix.field.modulus,
            matrix.rows,
            matrix.cols,
            vector.length,
        )
    )
    h.update(matrix.values.astype("<u8").tobytes())
    h.update(vector.values.astype("<u8").tobytes())
    return int.from_bytes(h.digest(), "little")


class SolverProfile:
    """Base class: a deterministic per-input success probability."""

    def success_probability(self, matrix: FpMatrix, vector: FpVector) -> float:
        raise NotImplementedError

    @property
    def declared_average(self) -> Optional[float]:
        """The profile's nominal average success over uniform inputs, if known."""
        return None


class UniformProfile(SolverProfile):
    """Every input succeeds with the same probability alpha."""

    def __init__(self, alpha: float):
        _check_probability("alpha", alpha)
        self.alpha = float(alpha)

    def success_probability(self, matrix, vector) -> float:
        return self.alpha

    @property
    def declared_average(self):
        return self.alpha

    def __repr__(self):
        return f"UniformProfile(alpha={self.alpha})"


class GoodBadProfile(SolverProfile):
    """Inputs split by a predicate into two success levels."""

    def __init__(
        self,
        predicate: Callable[[FpMatrix, FpVector], bool],
        alpha_good: float,
        alpha_bad: float,
        declared_average: Optional[float] = None,
    ):
        _check_probability("alpha_good", alpha_good)
        _check_probability("alpha_bad", alpha_bad)
        if declared_average is not None:
            _check_probability("declared_average", declared_average)
        self.predicate = predicate
        self.alpha_good = float(alpha_good)
        self.alpha_bad = float(alpha_bad)
        self._declared = declared_average

    def success_probability(self, matrix, vector) -> float:
        return self.alpha_good if self.predicate(matrix, vector) else self.alpha_bad

    @property
    def declared_average(self):
        return self._declared

    def __repr__(self):
        return f"GoodBadProfile(alpha_good={self.alpha_good}, alpha_bad={self.alpha_bad})"


class PlantedAdversarialProfile(SolverProfile):
    """Success 0 on a pseudorandom bad_fraction of inputs, boosted elsewhere.

    Membership in the bad set is keyed by a hash of the input and the
    profile seed, so it is a fixed property of each (M, v) pair. Surviving
    inputs succeed with average/(1 - bad_fraction), putting the overall
    average at the declared level.
    """

    def __init__(self, average: float, bad_fraction: float, seed: int = 0):
        _check_probability("average", average)
        if not 0.0 <= bad_fraction < 1.0:
            raise ValueError(f"bad_fraction must lie in [0, 1), got {bad_fraction}")
        if average > 1.0 - bad_fraction + 1e-12:
            raise ValueError(
                f"average {average} unreachable with bad_fraction {bad_fraction}: "
                f"surviving inputs would need success probability above 1"
            )
        self.average = float(average)
        self.bad_fraction = float(bad_fraction)
        self.seed = int(seed)
        self._threshold = int(self.bad_fraction * 2.0**64)

    def is_bad(self, matrix: FpMatrix, vector: FpVector) -> bool:
        return _input_digest(matrix, vector, self.seed) < self._threshold

    def success_probability(self, matrix, vector) -> float:
        if self.is_bad(matrix, vector):
            return 0.0
        return min(1.0, self.average / (1.0 - self.bad_fraction))

    @property
    def declared_average(self):
        return self.average

    def __repr__(self):
        return (
            f"PlantedAdversarialProfile(average={self.average}, "
            f"bad_fraction={self.bad_fraction}, seed={self.seed})"
        )


def exact_average_success(profile: SolverProfile, n: int, field: PrimeField) -> float:
    """Average success probability over every (M, v) pair, by enumeration.

    Refuses domains larger than MAX_EXHAUSTIVE_PAIRS pairs.
    """
    pairs = count_matrices(field, n, n) * count_vectors(field, n)
    if pairs > MAX_EXHAUSTIVE_PAIRS:
        raise ValueError(f"domain has {pairs} pairs, beyond exhaustive bound {MAX_EXHAUSTIVE_PAIRS}")
    total = 0.0
    for m in enumerate_matrices(field, n, n):
        for v in enumerate_vectors(field, n):
            total += profile.success_probability(m, v)
    return total / pairs


@dataclass
class NoisySolver:
    """An average-case solver simulacrum.

    queries_per_call is the modeled number of matrix-oracle reads one call
    spends; None means n^2 for the instance actually handed in. On failure
    the output is wrong by construction: either a uniform wrong vector or
    the true product with one coordinate shifted.
    """

    profile: SolverProfile
    queries_per_call: Optional[int] = None
    failure_mode: str = "uniform"

    def __post_init__(self):
        if self.failure_mode not in ("uniform", "perturb"):
            raise ValueError(f"unknown failure_mode {self.failure_mode!r}")
        if self.queries_per_call is not None and self.queries_per_call < 0:
            raise ValueError("queries_per_call must be nonnegative")


def _wrong_output(truth: FpVector, mode: str, rng: np.random.Generator) -> FpVector:
    field = truth.field
    n = truth.length
    if mode == "perturb":
        vals = truth.values.copy()
        i = int(rng.integers(n))
        shift = 1 + int(rng.integers(field.modulus - 1))
        vals[i] = (vals[i] + shift) % field.modulus
        return FpVector(field, vals)
    while True:
        w = random_vector(n, field, rng)
        if w != truth:
            return w


def invoke(
    solver: NoisySolver,
    mat_handle: MatrixOracleHandle,
    vec_handle: VectorOracleHandle,
    rng: np.random.Generator,
) -> FpVector:
    """One solver call on a square instance presented through oracles.

    Charges 1 to ALG, Q to U_M, and n to U_v on the handles' ledgers; the
    solver's own reads of the instance are not itemized. Returns the true
    product on success and a wrong vector (never equal to the truth) on
    failure.
    """
    if mat_handle.rows != mat_handle.cols:
        raise ValueError(f"solver expects a square matrix, got {mat_handle.rows}x{mat_handle.cols}")
    if vec_handle.length != mat_handle.cols:
        raise ValueError(
            f"dimension mismatch: matrix is {mat_handle.rows}x{mat_handle.cols}, "
            f"vector has length {vec_handle.length}"
        )
    if mat_handle.field != vec_handle.field:
        raise ValueError("field mismatch between matrix and vector handles")
    n = mat_handle.cols
    field = mat_handle.field
    q = solver.queries_per_call if solver.queries_per_call is not None else n * n

    mat_handle.ledger.charge(SOURCE_ALG, 1)
    mat_handle.ledger.charge(SOURCE_MATRIX, q)
    vec_handle.ledger.charge(SOURCE_VECTOR, n)
    with mat_handle.ledger.paused(), vec_handle.ledger.paused():
        m_vals = mat_handle.read_all()
        v_vals = vec_handle.read_all()

    matrix = FpMatrix._trusted(field, m_vals)
    vector = FpVector._trusted(field, v_vals)
    truth = FpVector._trusted(field, matvec_values(m_vals, v_vals, field.modulus))
    if rng.random() < solver.profile.success_probability(matrix, vector):
        return truth
    wrong = _wrong_output(truth, solver.failure_mode, rng)
    assert wrong != truth
    return wrong


@dataclass(frozen=True)
class SuccessEstimate:
    successes: int
    trials: int
    estimate: float
    std_error: float


def estimate_average_success(
    solver: NoisySolver,
    n: int,
    field: PrimeField,
    trials: int,
    rng: np.random.Generator,
) -> SuccessEstimate:
    """Monte Carlo estimate of average success over uniform (M, v).

    Success means the invocation returned the true product. Uses a private
    ledger; the caller's accounting is untouched.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    ledger = QueryLedger()
    successes = 0
    for _ in range(trials):
        m = random_matrix(n, n, field, rng)
        v = random_vector(n, field, rng)
        out = invoke(solver, wrap_matrix(m, ledger), wrap_vector(v, ledger), rng)
        truth = matvec_values(m.values, v.values, field.modulus)
        if np.array_equal(out.values, truth):
            successes += 1
    est = successes / trials
    return SuccessEstimate(
        successes=successes,
        trials=trials,
        estimate=est,
        std_error=math.sqrt(max(est * (1.0 - est), 1e-12) / trials),
    )
