"""Worst-case matrix-vector multiplication from an average-case solver.

The pipeline lifts a solver that succeeds on an alpha fraction of uniform
instances to one that succeeds on EVERY instance with high probability,
spending O(1/alpha^2) solver calls. It is built in stages:

  solve_strip            a d x n strip against a solver-friendly vector,
                         by planting the strip at a random block position
                         of a fresh uniform square instance and verifying;
  solve_strip_any_matrix the same for every strip, via a uniform additive
                         split M = R1 + R2 solved strip-wise;
  solve_block            a d x d block against a solver-friendly vector,
                         by planting the vector in a random concatenation
                         and widening the block with structural zeros;
  solve_block_any_input  the same for every vector, via a uniform additive
                         split v = r1 + r2;
  worst_case_matvec      the full instance: pad so the block count divides
                         n, solve each of the k^2 blocks under a boost
                         loop, then assemble row sums.

Vector "goodness" (the solver succeeding on an above-half-of-alpha share
of matrices for that vector) is an analysis device: the pipeline never
tests it, while is_good / good_fraction_exhaustive measure it offline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field, replace
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
    SOURCE_SCRATCH,
    SOURCE_VECTOR,
    SOURCE_VERIFIER,
    MatrixOracleHandle,
    QueryLedger,
    VectorOracleHandle,
    concat_rows,
    concat_vectors,
    embed_block_matrix,
    extract_block,
    extract_subvector,
    pad_square_matrix,
    pad_vector,
    sum_vector_oracles,
    wrap_matrix,
    wrap_vector,
)
from .solver import MAX_EXHAUSTIVE_PAIRS, NoisySolver, invoke
from .verify import VerifierConfig, verified_call, verify_product

# Per-attempt failure bound for the final stage on worst-case inputs; the
# boost round count is sized against it.
STAGE4_FAILURE_BOUND = 0.04

K_MODES = ("desk", "paper")

# Constant in the asymptotic block-count rule k >= C * ln(4/alpha); the
# desk variant swaps C for a small configurable c0.
PAPER_K_CONSTANT = 3200.0


def choose_block_count(alpha: float, n: Optional[int] = None, mode: str = "desk", c0: float = 8.0) -> int:
    """Pick the block count k for a target average success rate alpha.

    "paper" mode returns the smallest k with 4*exp(-k/3200) <= alpha, the
    constant-faithful rule (k in the thousands even for moderate alpha).
    "desk" mode keeps the ln(4/alpha) shape at a bench-friendly constant:
    k = ceil(c0 * ln(4/alpha)). Divisibility with n needs no adjustment
    here because the pipeline pads n up to the next multiple of k.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if mode not in K_MODES:
        raise ValueError(f"unknown block count mode {mode!r}")
    if mode == "paper":
        k = math.ceil(PAPER_K_CONSTANT * math.log(4.0 / alpha))
    else:
        if c0 <= 0:
            raise ValueError(f"c0 must be positive, got {c0}")
        k = math.ceil(c0 * math.log(4.0 / alpha))
    return max(1, k)


def boost_rounds_for(k: int, delta: float) -> int:
    """Rounds needed to push per-block failure below delta/k^2.

    With each attempt failing with probability at most STAGE4_FAILURE_BOUND,
    t = ceil(ln(k^2/delta) / ln(1/bound)) attempts suffice, and a union
    bound over the k^2 blocks leaves overall failure below delta.
    """
    if k < 1:
        raise ValueError(f"block count must be positive, got {k}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return max(1, math.ceil(math.log(k * k / delta) / math.log(1.0 / STAGE4_FAILURE_BOUND)))


@dataclass
class ReductionConfig:
    """Knobs for the amplification pipeline.

    alpha is the solver's assumed average success rate; delta the target
    overall failure probability. k overrides the block count (None means
    choose_block_count decides via k_mode/c0). c1 and c2 scale the retry
    budgets ceil(c1/alpha), ceil(c2/alpha) of the planting stages. seed
    feeds standalone runs; the harness derives per-trial streams itself.
    """

    alpha: float
    delta: float = 0.01
    k: Optional[int] = None
    k_mode: str = "desk"
    c0: float = 8.0
    c1: float = 32.0
    c2: float = 32.0
    boost_rounds: Optional[int] = None
    verifier: VerifierConfig = dataclass_field(default_factory=VerifierConfig)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.k is not None and self.k < 1:
            raise ValueError(f"block count must be positive, got {self.k}")
        if self.k_mode not in K_MODES:
            raise ValueError(f"unknown block count mode {self.k_mode!r}")
        if self.c0 <= 0 or self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c0, c1, c2 must be positive")
        if self.boost_rounds is not None and self.boost_rounds < 1:
            raise ValueError(f"boost_rounds must be positive, got {self.boost_rounds}")

    def stage1_budget(self) -> int:
        return math.ceil(self.c1 / self.alpha)

    def stage3_budget(self) -> int:
        return math.ceil(self.c2 / self.alpha)

    def resolved_k(self, n: Optional[int] = None) -> int:
        if self.k is not None:
            return self.k
        return choose_block_count(self.alpha, n, self.k_mode, self.c0)

    def resolved_boost_rounds(self, k: int) -> int:
        if self.boost_rounds is not None:
            return self.boost_rounds
        return boost_rounds_for(k, self.delta)


@dataclass
class StageStats:
    """Iteration counters accumulated across one pipeline run."""

    stage1_iters: int = 0
    stage3_iters: int = 0
    boost_rounds_total: int = 0
    verify_calls: int = 0


# ---------------------------------------------------------------------------
# goodness measurement (offline diagnostics, not used by the pipeline)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GoodnessEstimate:
    estimate: float
    std_error: float
    threshold: float
    is_good: bool


def _resolve_alpha(solver: NoisySolver, alpha: Optional[float]) -> float:
    if alpha is not None:
        return alpha
    declared = solver.profile.declared_average
    if declared is None:
        raise ValueError("profile declares no average success rate; pass alpha explicitly")
    return declared


def is_good(
    vector: FpVector,
    solver: NoisySolver,
    n: int,
    trials: int,
    rng: np.random.Generator,
    alpha: Optional[float] = None,
) -> GoodnessEstimate:
    """Monte Carlo estimate of Pr over uniform M of success on (M, vector).

    A vector is called good when that probability reaches alpha/2. Runs on
    a private ledger.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if vector.length != n:
        raise ValueError(f"vector length {vector.length} does not match n={n}")
    alpha = _resolve_alpha(solver, alpha)
    field = vector.field
    ledger = QueryLedger()
    successes = 0
    for _ in range(trials):
        m = random_matrix(n, n, field, rng)
        out = invoke(solver, wrap_matrix(m, ledger), wrap_vector(vector, ledger), rng)
        if np.array_equal(out.values, matvec_values(m.values, vector.values, field.modulus)):
            successes += 1
    est = successes / trials
    se = math.sqrt(max(est * (1.0 - est), 1e-12) / trials)
    threshold = alpha / 2.0
    return GoodnessEstimate(estimate=est, std_error=se, threshold=threshold, is_good=est >= threshold)


def good_fraction_exhaustive(
    solver: NoisySolver,
    n: int,
    field: PrimeField,
    alpha: Optional[float] = None,
) -> float:
    """Exact fraction of vectors whose matrix-averaged success reaches alpha/2.

    Uses the profile's per-input probabilities directly (no sampling) and
    enumerates the whole domain, so it is restricted to tiny sizes.
    """
    pairs = count_matrices(field, n, n) * count_vectors(field, n)
    if pairs > MAX_EXHAUSTIVE_PAIRS:
        raise ValueError(f"domain has {pairs} pairs, beyond exhaustive bound {MAX_EXHAUSTIVE_PAIRS}")
    alpha = _resolve_alpha(solver, alpha)
    threshold = alpha / 2.0
    matrices = list(enumerate_matrices(field, n, n))
    good = 0
    total_vectors = count_vectors(field, n)
    for v in enumerate_vectors(field, n):
        mean = sum(solver.profile.success_probability(m, v) for m in matrices) / len(matrices)
        # 1e-12 slack keeps float summation from dropping exact-boundary vectors
        if mean >= threshold - 1e-12:
            good += 1
    return good / total_vectors


# ---------------------------------------------------------------------------
# pipeline stages
# ---------------------------------------------------------------------------


def solve_strip(
    mat_handle: MatrixOracleHandle,
    vec_handle: VectorOracleHandle,
    solver: NoisySolver,
    config: ReductionConfig,
    rng: np.random.Generator,
    stats: Optional[StageStats] = None,
) -> Optional[FpVector]:
    """Product of a d x n strip with a full vector, assuming the vector is good.

    Each attempt plants the strip at a uniform block position among fresh
    uniform co-strips, runs one verified solver call on the assembled
    square instance, and on acceptance extracts the strip's block of the
    output. Up to ceil(c1/alpha) attempts. Requires d | n.
    """
    if stats is None:
        stats = StageStats()
    d, n = mat_handle.rows, mat_handle.cols
    if n % d != 0:
        raise ValueError(f"strip height {d} does not divide width {n}")
    if vec_handle.length != n:
        raise ValueError(f"vector length {vec_handle.length} does not match width {n}")
    if mat_handle.field != vec_handle.field:
        raise ValueError("field mismatch between matrix and vector handles")
    k = n // d
    field = mat_handle.field
    ledger = mat_handle.ledger
    p = field.modulus

    for _ in range(config.stage1_budget()):
        stats.stage1_iters += 1
        slot = int(rng.integers(k))
        co_vals = rng.integers(0, p, size=(k - 1, d, n), dtype=np.int64)
        parts: list[MatrixOracleHandle] = []
        ci = 0
        for t in range(k):
            if t == slot:
                parts.append(mat_handle)
            else:
                co = FpMatrix._trusted(field, co_vals[ci])
                parts.append(wrap_matrix(co, ledger, SOURCE_SCRATCH))
                ci += 1
        assembled = concat_rows(parts)
        stats.verify_calls += 1
        w = verified_call(solver, assembled, vec_handle, config.verifier, rng)
        if w is not None:
            w_handle = wrap_vector(w, ledger, SOURCE_SCRATCH)
            return extract_subvector(w_handle, slot * d, d).to_vector()
    return None


def solve_strip_any_matrix(
    mat_handle: MatrixOracleHandle,
    vec_handle: VectorOracleHandle,
    solver: NoisySolver,
    config: ReductionConfig,
    rng: np.random.Generator,
    stats: Optional[StageStats] = None,
) -> Optional[FpVector]:
    """solve_strip for an arbitrary strip, via a uniform additive split.

    Draws R1 uniform, reads the strip once (d*n charged oracle queries) to
    form R2 = M - R1, solves both halves strip-wise, and returns the sum.
    Both halves are uniformly distributed, which is what solve_strip's
    guarantee needs.
    """
    if stats is None:
        stats = StageStats()
    d, n = mat_handle.rows, mat_handle.cols
    field = mat_handle.field
    ledger = mat_handle.ledger
    p = field.modulus

    r1 = random_matrix(d, n, field, rng)
    m_vals = mat_handle.read_all()
    r2 = FpMatrix._trusted(field, (m_vals - r1.values) % p)
    assert np.array_equal((r1.values + r2.values) % p, m_vals), "additive split must recompose"

    w1 = solve_strip(wrap_matrix(r1, ledger, SOURCE_SCRATCH), vec_handle, solver, config, rng, stats)
    if w1 is None:
        return None
    w2 = solve_strip(wrap_matrix(r2, ledger, SOURCE_SCRATCH), vec_handle, solver, config, rng, stats)
    if w2 is None:
        return None
    summed = sum_vector_oracles(
        [wrap_vector(w1, ledger, SOURCE_SCRATCH), wrap_vector(w2, ledger, SOURCE_SCRATCH)]
    )
    return summed.to_vector()


def solve_block(
    mat_handle: MatrixOracleHandle,
    vec_handle: VectorOracleHandle,
    solver: NoisySolver,
    config: ReductionConfig,
    rng: np.random.Generator,
    stats: Optional[StageStats] = None,
) -> Optional[FpVector]:
    """Product of a d x d block with a length-d vector, randomized over vectors.

    Each attempt plants the vector at a uniform slot of a concatenation
    with fresh uniform co-vectors, widens the block to d x (k*d) with
    structural zeros, solves that strip for the concatenated vector, and
    verifies the result against the widened instance before returning it.
    Up to ceil(c2/alpha) attempts.
    """
    if stats is None:
        stats = StageStats()
    if mat_handle.rows != mat_handle.cols:
        raise ValueError(f"expected a square block, got {mat_handle.rows}x{mat_handle.cols}")
    d = mat_handle.rows
    if vec_handle.length != d:
        raise ValueError(f"vector length {vec_handle.length} does not match block size {d}")
    if mat_handle.field != vec_handle.field:
        raise ValueError("field mismatch between matrix and vector handles")
    k = config.resolved_k()
    field = mat_handle.field
    ledger = mat_handle.ledger
    p = field.modulus

    for _ in range(config.stage3_budget()):
        stats.stage3_iters += 1
        slot = int(rng.integers(k))
        co_vals = rng.integers(0, p, size=(k - 1, d), dtype=np.int64)
        parts: list[VectorOracleHandle] = []
        ci = 0
        for t in range(k):
            if t == slot:
                parts.append(vec_handle)
            else:
                co = FpVector._trusted(field, co_vals[ci])
                parts.append(wrap_vector(co, ledger, SOURCE_SCRATCH))
                ci += 1
        widened_vec = concat_vectors(parts)
        widened_mat = embed_block_matrix(mat_handle, slot, k)
        w = solve_strip_any_matrix(widened_mat, widened_vec, solver, config, rng, stats)
        if w is None:
            continue
        stats.verify_calls += 1
        if verify_product(widened_mat, widened_vec, w, config.verifier, rng):
            return w
    return None


def solve_block_any_input(
    mat_handle: MatrixOracleHandle,
    vec_handle: VectorOracleHandle,
    solver: NoisySolver,
    config: ReductionConfig,
    rng: np.random.Generator,
    stats: Optional[StageStats] = None,
) -> Optional[FpVector]:
    """solve_block for an arbitrary vector, via a uniform additive split.

    Draws r1 uniform, reads the vector once (d charged oracle queries) to
    form r2 = v - r1, solves the block against both halves, and sums.
    """
    if stats is None:
        stats = StageStats()
    if mat_handle.rows != mat_handle.cols:
        raise ValueError(f"expected a square block, got {mat_handle.rows}x{mat_handle.cols}")
    d = mat_handle.rows
    if vec_handle.length != d:
        raise ValueError(f"vector length {vec_handle.length} does not match block size {d}")
    field = mat_handle.field
    ledger = mat_handle.ledger
    p = field.modulus

    r1 = random_vector(d, field, rng)
    v_vals = vec_handle.read_all()
    r2 = FpVector._trusted(field, (v_vals - r1.values) % p)
    assert np.array_equal((r1.values + r2.values) % p, v_vals), "additive split must recompose"

    w1 = solve_block(mat_handle, wrap_vector(r1, ledger, SOURCE_SCRATCH), solver, config, rng, stats)
    if w1 is None:
        return None
    w2 = solve_block(mat_handle, wrap_vector(r2, ledger, SOURCE_SCRATCH), solver, config, rng, stats)
    if w2 is None:
        return None
    summed = sum_vector_oracles(
        [wrap_vector(w1, ledger, SOURCE_SCRATCH), wrap_vector(w2, ledger, SOURCE_SCRATCH)]
    )
    return summed.to_vector()


def boost(
    attempt: Callable[[], Optional[FpVector]],
    rounds: int,
    stats: Optional[StageStats] = None,
) -> Optional[FpVector]:
    """Retry a fallible computation, returning its first non-None result."""
    if rounds < 1:
        raise ValueError(f"rounds must be positive, got {rounds}")
    for _ in range(rounds):
        if stats is not None:
            stats.boost_rounds_total += 1
        out = attempt()
        if out is not None:
            return out
    return None


@dataclass
class ReductionOutcome:
    """Result of one full pipeline run."""

    result: Optional[FpVector]
    stats: StageStats
    block_count: int
    padded_n: int
    original_n: int

    @property
    def succeeded(self) -> bool:
        return self.result is not None


def worst_case_matvec(
    mat_handle: MatrixOracleHandle,
    vec_handle: VectorOracleHandle,
    solver: NoisySolver,
    config: ReductionConfig,
    rng: np.random.Generator,
) -> ReductionOutcome:
    """Compute M v for an arbitrary square instance from the average-case solver.

    Pads the instance so the block count k divides its size, runs
    solve_block_any_input under a boost loop for each of the k^2 blocks,
    assembles the block-row sums, and truncates the padding. Any block
    exhausting its boost budget fails the whole run (result None).
    """
    n = mat_handle.rows
    if mat_handle.cols != n:
        raise ValueError(f"expected a square matrix, got {mat_handle.rows}x{mat_handle.cols}")
    if vec_handle.length != n:
        raise ValueError(f"vector length {vec_handle.length} does not match size {n}")
    if mat_handle.field != vec_handle.field:
        raise ValueError("field mismatch between matrix and vector handles")

    k = config.resolved_k(n)
    rounds = config.resolved_boost_rounds(k)
    run_config = config if config.k == k else replace(config, k=k)
    n_padded = ((n + k - 1) // k) * k
    d = n_padded // k
    padded_mat = pad_square_matrix(mat_handle, n_padded)
    padded_vec = pad_vector(vec_handle, n_padded)
    field = mat_handle.field
    ledger = mat_handle.ledger
    stats = StageStats()

    block_products: list[list[FpVector]] = []
    for i in range(k):
        row_products = []
        for j in range(k):
            block = extract_block(padded_mat, i, j, d)
            segment = extract_subvector(padded_vec, j * d, d)
            out = boost(
                lambda: solve_block_any_input(block, segment, solver, run_config, rng, stats),
                rounds,
                stats,
            )
            if out is None:
                return ReductionOutcome(
                    result=None, stats=stats, block_count=k, padded_n=n_padded, original_n=n
                )
            row_products.append(out)
        block_products.append(row_products)

    row_sums = []
    for i in range(k):
        handles = [wrap_vector(w, ledger, SOURCE_SCRATCH) for w in block_products[i]]
        row_sums.append(sum_vector_oracles(handles).to_vector())
    assembled = concat_vectors(
        [wrap_vector(s, ledger, SOURCE_SCRATCH) for s in row_sums]
    ).to_vector()
    result = FpVector(field, assembled.values[:n])
    return ReductionOutcome(result=result, stats=stats, block_count=k, padded_n=n_padded, original_n=n)


# ---------------------------------------------------------------------------
# per-run reporting
# ---------------------------------------------------------------------------


@dataclass
class ReductionReport:
    """Flat per-trial record: outcome, ledger snapshot, stage counters."""

    trial: int
    success: int
    returned: int
    alg_queries: int
    um_queries: int
    uv_queries: int
    verifier_charged: int
    stage1_iters: int
    stage3_iters: int
    boost_rounds_total: int
    wall_ms: int

    def check_consistency(self):
        """Every solver call happens in a stage-1 attempt; the counts must agree."""
        if self.alg_queries != self.stage1_iters:
            raise ValueError(
                f"ledger shows {self.alg_queries} solver calls but stage 1 ran "
                f"{self.stage1_iters} attempts"
            )

    @classmethod
    def from_run(
        cls,
        trial: int,
        outcome: ReductionOutcome,
        ledger: QueryLedger,
        correct: bool,
        wall_ms: int = 0,
    ) -> "ReductionReport":
        report = cls(
            trial=trial,
            success=1 if correct else 0,
            returned=1 if outcome.succeeded else 0,
            alg_queries=ledger.get(SOURCE_ALG),
            um_queries=ledger.get(SOURCE_MATRIX),
            uv_queries=ledger.get(SOURCE_VECTOR),
            verifier_charged=ledger.get(SOURCE_VERIFIER),
            stage1_iters=outcome.stats.stage1_iters,
            stage3_iters=outcome.stats.stage3_iters,
            boost_rounds_total=outcome.stats.boost_rounds_total,
            wall_ms=wall_ms,
        )
        report.check_consistency()
        return report
