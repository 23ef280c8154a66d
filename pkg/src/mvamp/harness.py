"""Experiment harness: configs, deterministic campaigns, scaling sweeps.

Per-trial randomness comes from counter-based Philox streams keyed by
(master seed, trial index), so a campaign's results do not depend on
worker count or scheduling. Trial rows serialize to a fixed CSV schema;
aggregates to JSON. Config files are flat `key = value` lines with `#`
comments.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field as dataclass_field, replace
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .field import MAX_MODULUS, PrimeField, is_prime
from .linalg import (
    FpMatrix,
    FpVector,
    count_matrices,
    count_vectors,
    matrix_by_index,
    matvec,
    random_matrix,
    random_vector,
    vector_by_index,
)
from .oracle import (
    SOURCE_ALG,
    SOURCE_MATRIX,
    SOURCE_VECTOR,
    SOURCE_VERIFIER,
    QueryLedger,
    wrap_matrix,
    wrap_vector,
)
from .reduction import (
    ReductionConfig,
    ReductionReport,
    worst_case_matvec,
)
from .solver import (
    MAX_EXHAUSTIVE_PAIRS,
    GoodBadProfile,
    NoisySolver,
    PlantedAdversarialProfile,
    SolverProfile,
    UniformProfile,
)
from .verify import VerifierConfig, verified_call

CSV_HEADER = (
    "trial,success,alg_queries,um_queries,uv_queries,verifier_charged,"
    "stage1_iters,stage3_iters,boost_rounds_total,wall_ms"
)

PROFILES = ("uniform", "goodbad", "planted")
INPUT_MODES = ("random", "planted-bad", "exhaustive-tiny")
PIPELINES = ("full", "baseline")
FAILURE_MODES = ("uniform", "perturb")
VERIFIER_MODES = ("probabilistic", "exact")
ACCOUNTING_MODES = ("paper", "actual")

# Named predicates for goodbad profiles, so configs stay picklable text.
PREDICATES = {
    "v_first_zero": lambda m, v: int(v.values[0]) == 0,
    "v_first_even": lambda m, v: int(v.values[0]) % 2 == 0,
    "trace_zero": lambda m, v: int(np.trace(m.values)) % m.field.modulus == 0,
}


class ConfigError(ValueError):
    """A config file or override failed validation; the message names the key."""


@dataclass
class ExperimentConfig:
    """Everything one campaign needs, in picklable plain data."""

    modulus: int
    n: int
    trials: int
    alpha: float
    seed: int = 0
    workers: int = 1
    profile: str = "uniform"
    bad_fraction: float = 0.5
    profile_seed: int = 0
    predicate: str = "v_first_zero"
    alpha_good: float = 1.0
    alpha_bad: float = 0.0
    queries_per_call: Optional[int] = None
    failure_mode: str = "uniform"
    input_mode: str = "random"
    pipeline: str = "full"
    k: Optional[int] = None
    k_mode: str = "desk"
    delta: float = 0.01
    c0: float = 8.0
    c1: float = 32.0
    c2: float = 32.0
    boost_rounds: Optional[int] = None
    verifier_epsilon: float = 1e-4
    verifier_mode: str = "probabilistic"
    accounting: str = "paper"
    measure_time: bool = False
    min_success_rate: Optional[float] = None

    def __post_init__(self):
        if not is_prime(self.modulus) or self.modulus >= MAX_MODULUS:
            raise ConfigError(f"config key 'modulus' must be a supported prime, got {self.modulus}")
        if self.n < 1:
            raise ConfigError(f"config key 'n' must be positive, got {self.n}")
        if self.trials < 1:
            raise ConfigError(f"config key 'trials' must be positive, got {self.trials}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"config key 'alpha' must lie in (0, 1], got {self.alpha}")
        if self.workers < 1:
            raise ConfigError(f"config key 'workers' must be positive, got {self.workers}")
        if self.profile not in PROFILES:
            raise ConfigError(f"config key 'profile' must be one of {PROFILES}, got {self.profile!r}")
        if self.input_mode not in INPUT_MODES:
            raise ConfigError(
                f"config key 'input_mode' must be one of {INPUT_MODES}, got {self.input_mode!r}"
            )
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"config key 'pipeline' must be one of {PIPELINES}, got {self.pipeline!r}")
        if self.predicate not in PREDICATES:
            raise ConfigError(
                f"config key 'predicate' must be one of {sorted(PREDICATES)}, got {self.predicate!r}"
            )
        if self.failure_mode not in FAILURE_MODES:
            raise ConfigError(
                f"config key 'failure_mode' must be one of {FAILURE_MODES}, got {self.failure_mode!r}"
            )
        if self.verifier_mode not in VERIFIER_MODES:
            raise ConfigError(
                f"config key 'verifier_mode' must be one of {VERIFIER_MODES}, got {self.verifier_mode!r}"
            )
        if self.accounting not in ACCOUNTING_MODES:
            raise ConfigError(
                f"config key 'accounting' must be one of {ACCOUNTING_MODES}, got {self.accounting!r}"
            )
        if self.input_mode == "planted-bad" and self.profile != "planted":
            raise ConfigError("config key 'input_mode' = planted-bad requires profile = planted")


# ---------------------------------------------------------------------------
# config file parsing
# ---------------------------------------------------------------------------

_INT_KEYS = {"modulus", "n", "trials", "seed", "workers", "profile_seed", "k", "boost_rounds", "queries_per_call"}
_FLOAT_KEYS = {
    "alpha",
    "bad_fraction",
    "alpha_good",
    "alpha_bad",
    "delta",
    "c0",
    "c1",
    "c2",
    "verifier_epsilon",
    "min_success_rate",
}
_STR_KEYS = {
    "profile",
    "predicate",
    "failure_mode",
    "input_mode",
    "pipeline",
    "k_mode",
    "verifier_mode",
    "accounting",
}
_BOOL_KEYS = {"measure_time"}
_OPTIONAL_KEYS = {"k", "boost_rounds", "queries_per_call", "min_success_rate"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _BOOL_KEYS
_REQUIRED_KEYS = ("modulus", "n", "trials", "alpha")

_BOOL_VALUES = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _coerce(key: str, raw: str):
    if raw == "":
        if key in _OPTIONAL_KEYS:
            return None
        raise ConfigError(f"config key '{key}' has an empty value")
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _BOOL_KEYS:
            return _BOOL_VALUES[raw.lower()]
    except (ValueError, KeyError):
        raise ConfigError(f"config key '{key}' has malformed value {raw!r}") from None
    return raw


def parse_config_text(text: str) -> dict:
    """Parse flat `key = value` lines (with # comments) into typed values."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.rstrip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate config key '{key}'")
        values[key] = _coerce(key, raw)
    return values


def experiment_config_from_values(values: dict, overrides: Optional[dict] = None) -> ExperimentConfig:
    merged = dict(values)
    if overrides:
        for key, val in overrides.items():
            if val is not None:
                merged[key] = val
    for key in _REQUIRED_KEYS:
        if key not in merged:
            raise ConfigError(f"missing required config key '{key}'")
    return ExperimentConfig(**merged)


def parse_config(path: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return experiment_config_from_values(parse_config_text(text), overrides)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def build_profile(config: ExperimentConfig) -> SolverProfile:
    if config.profile == "uniform":
        return UniformProfile(config.alpha)
    if config.profile == "planted":
        return PlantedAdversarialProfile(
            average=config.alpha, bad_fraction=config.bad_fraction, seed=config.profile_seed
        )
    return GoodBadProfile(
        PREDICATES[config.predicate],
        alpha_good=config.alpha_good,
        alpha_bad=config.alpha_bad,
        declared_average=config.alpha,
    )


def build_solver(config: ExperimentConfig) -> NoisySolver:
    return NoisySolver(
        profile=build_profile(config),
        queries_per_call=config.queries_per_call,
        failure_mode=config.failure_mode,
    )


def build_reduction_config(config: ExperimentConfig) -> ReductionConfig:
    return ReductionConfig(
        alpha=config.alpha,
        delta=config.delta,
        k=config.k,
        k_mode=config.k_mode,
        c0=config.c0,
        c1=config.c1,
        c2=config.c2,
        boost_rounds=config.boost_rounds,
        verifier=VerifierConfig(
            epsilon=config.verifier_epsilon,
            mode=config.verifier_mode,
            accounting=config.accounting,
        ),
        seed=config.seed,
    )


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based per-trial stream: same (seed, trial) -> same draws."""
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), trial & (2**64 - 1)]))


# ---------------------------------------------------------------------------
# trial execution
# ---------------------------------------------------------------------------

_PLANTED_SAMPLING_CAP = 100000


def _trial_input(
    config: ExperimentConfig,
    field: PrimeField,
    trial: int,
    rng: np.random.Generator,
) -> tuple[FpMatrix, FpVector]:
    n = config.n
    if config.input_mode == "random":
        return random_matrix(n, n, field, rng), random_vector(n, field, rng)
    if config.input_mode == "planted-bad":
        profile = build_profile(config)
        assert isinstance(profile, PlantedAdversarialProfile)
        for _ in range(_PLANTED_SAMPLING_CAP):
            m = random_matrix(n, n, field, rng)
            v = random_vector(n, field, rng)
            if profile.is_bad(m, v):
                return m, v
        raise RuntimeError(
            f"found no planted-bad input in {_PLANTED_SAMPLING_CAP} draws "
            f"(bad_fraction={config.bad_fraction})"
        )
    # exhaustive-tiny: enumerate (M, v) pairs lexicographically, matrix-major
    n_mats = count_matrices(field, n, n)
    n_vecs = count_vectors(field, n)
    pairs = n_mats * n_vecs
    if pairs > MAX_EXHAUSTIVE_PAIRS:
        raise ConfigError(
            f"config key 'input_mode' = exhaustive-tiny needs at most {MAX_EXHAUSTIVE_PAIRS} "
            f"pairs, domain has {pairs}"
        )
    index = trial % pairs
    return matrix_by_index(field, n, n, index // n_vecs), vector_by_index(field, n, index % n_vecs)


def run_trial(config: ExperimentConfig, trial: int) -> ReductionReport:
    """Execute one trial end to end on its own Philox stream and ledger."""
    rng = trial_rng(config.seed, trial)
    field = PrimeField(config.modulus)
    matrix, vector = _trial_input(config, field, trial, rng)
    truth = matvec(matrix, vector)
    solver = build_solver(config)
    reduction_config = build_reduction_config(config)
    ledger = QueryLedger()
    mat_handle = wrap_matrix(matrix, ledger)
    vec_handle = wrap_vector(vector, ledger)

    start = time.perf_counter() if config.measure_time else None
    if config.pipeline == "baseline":
        out = verified_call(solver, mat_handle, vec_handle, reduction_config.verifier, rng)
        wall_ms = int((time.perf_counter() - start) * 1000) if start is not None else 0
        returned = out is not None
        correct = returned and out == truth
        return ReductionReport(
            trial=trial,
            success=1 if correct else 0,
            returned=1 if returned else 0,
            alg_queries=ledger.get(SOURCE_ALG),
            um_queries=ledger.get(SOURCE_MATRIX),
            uv_queries=ledger.get(SOURCE_VECTOR),
            verifier_charged=ledger.get(SOURCE_VERIFIER),
            stage1_iters=0,
            stage3_iters=0,
            boost_rounds_total=0,
            wall_ms=wall_ms,
        )
    outcome = worst_case_matvec(mat_handle, vec_handle, solver, reduction_config, rng)
    wall_ms = int((time.perf_counter() - start) * 1000) if start is not None else 0
    correct = outcome.result is not None and outcome.result == truth
    return ReductionReport.from_run(trial, outcome, ledger, correct, wall_ms)


def _trial_task(args) -> ReductionReport:
    config, trial = args
    return run_trial(config, trial)


# ---------------------------------------------------------------------------
# campaigns
# ---------------------------------------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """95% Wilson score interval; behaves sanely at 0 and 1."""
    if trials < 1:
        raise ValueError("trials must be positive")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class CampaignReport:
    """Aggregate over one campaign's trials plus the rows themselves."""

    config: dict
    version: str
    rows: list = dataclass_field(default_factory=list)
    trials: int = 0
    successes: int = 0
    success_rate: float = 0.0
    ci_low: float = 0.0
    ci_high: float = 1.0
    wrong_returns: int = 0
    mean_alg_queries: float = 0.0
    max_alg_queries: int = 0
    mean_um_queries: float = 0.0
    mean_uv_queries: float = 0.0
    mean_verifier_charged: float = 0.0


def run_campaign(config: ExperimentConfig) -> CampaignReport:
    """Run all trials (optionally across processes) and aggregate.

    Results are independent of worker count: each trial's stream is keyed
    by (seed, trial index) and rows are ordered by trial index.
    """
    indices = list(range(config.trials))
    if config.workers == 1:
        rows = [run_trial(config, t) for t in indices]
    else:
        chunk = max(1, config.trials // (config.workers * 4))
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_trial_task, [(config, t) for t in indices], chunksize=chunk))
    rows.sort(key=lambda r: r.trial)

    successes = sum(r.success for r in rows)
    ci_low, ci_high = wilson_interval(successes, len(rows))
    report = CampaignReport(
        config=asdict(config),
        version=__version__,
        rows=rows,
        trials=len(rows),
        successes=successes,
        success_rate=successes / len(rows),
        ci_low=ci_low,
        ci_high=ci_high,
        wrong_returns=sum(1 for r in rows if r.returned and not r.success),
        mean_alg_queries=float(np.mean([r.alg_queries for r in rows])),
        max_alg_queries=max(r.alg_queries for r in rows),
        mean_um_queries=float(np.mean([r.um_queries for r in rows])),
        mean_uv_queries=float(np.mean([r.uv_queries for r in rows])),
        mean_verifier_charged=float(np.mean([r.verifier_charged for r in rows])),
    )
    return report


def write_trials_csv(rows: Sequence[ReductionReport], path: str):
    """Fixed-schema CSV; bit-identical across runs with the same seed."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(CSV_HEADER + "\n")
        for r in rows:
            f.write(
                f"{r.trial},{r.success},{r.alg_queries},{r.um_queries},{r.uv_queries},"
                f"{r.verifier_charged},{r.stage1_iters},{r.stage3_iters},"
                f"{r.boost_rounds_total},{r.wall_ms}\n"
            )


def campaign_summary(report: CampaignReport) -> dict:
    return {
        "success_rate": report.success_rate,
        "ci_low": report.ci_low,
        "ci_high": report.ci_high,
        "mean_alg_queries": report.mean_alg_queries,
        "max_alg_queries": report.max_alg_queries,
        "mean_um_queries": report.mean_um_queries,
        "mean_uv_queries": report.mean_uv_queries,
        "mean_verifier_charged": report.mean_verifier_charged,
        "trials": report.trials,
        "successes": report.successes,
        "wrong_returns": report.wrong_returns,
        "version": report.version,
        "config": report.config,
    }


def write_summary_json(summary: dict, path: str):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# scaling sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepEntry:
    alpha: float
    trials: int
    success_rate: float
    mean_alg_queries: float
    mean_um_queries: float


@dataclass
class SweepReport:
    entries: list
    slope: float
    slope_stderr: float
    intercept: float
    config: dict
    version: str


def scaling_sweep(
    config: ExperimentConfig,
    alphas: Sequence[float],
    trials_per_alpha: Optional[int] = None,
) -> SweepReport:
    """Measure mean solver calls per run as alpha varies; fit a log-log line.

    Needs at least three distinct alphas; refuses degenerate fits.
    """
    alphas = list(alphas)
    if len(alphas) < 3:
        raise ValueError(f"a slope fit needs at least 3 alpha values, got {len(alphas)}")
    if len(set(alphas)) < 3:
        raise ValueError("a slope fit needs at least 3 distinct alpha values")
    for a in alphas:
        if not 0.0 < a <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {a}")

    entries = []
    for idx, alpha in enumerate(alphas):
        sub = replace(
            config,
            alpha=alpha,
            trials=trials_per_alpha if trials_per_alpha is not None else config.trials,
            seed=config.seed + 1000003 * idx,
        )
        rep = run_campaign(sub)
        entries.append(
            SweepEntry(
                alpha=alpha,
                trials=rep.trials,
                success_rate=rep.success_rate,
                mean_alg_queries=rep.mean_alg_queries,
                mean_um_queries=rep.mean_um_queries,
            )
        )

    x = np.log(np.array([e.alpha for e in entries]))
    y_vals = np.array([e.mean_alg_queries for e in entries])
    if np.any(y_vals <= 0):
        raise ValueError("mean solver calls must be positive for a log-log fit")
    y = np.log(y_vals)
    if float(np.var(x)) == 0.0:
        raise ValueError("alpha values have zero variance; slope fit is degenerate")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = len(x) - 2
    sxx = float(np.sum((x - np.mean(x)) ** 2))
    stderr = math.sqrt(float(np.sum(resid**2)) / dof / sxx) if dof > 0 else 0.0
    return SweepReport(
        entries=entries,
        slope=float(slope),
        slope_stderr=stderr,
        intercept=float(intercept),
        config=asdict(config),
        version=__version__,
    )


def sweep_summary(report: SweepReport) -> dict:
    return {
        "slope": report.slope,
        "slope_stderr": report.slope_stderr,
        "intercept": report.intercept,
        "entries": [
            {
                "alpha": e.alpha,
                "trials": e.trials,
                "success_rate": e.success_rate,
                "mean_alg_queries": e.mean_alg_queries,
                "mean_um_queries": e.mean_um_queries,
            }
            for e in report.entries
        ],
        "version": report.version,
        "config": report.config,
    }
