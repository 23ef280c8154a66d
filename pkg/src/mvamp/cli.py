"""Command line front end.

Subcommands:
  run           one campaign from a config file; CSV rows + JSON summary
  sweep         campaigns across several alphas; log-log slope fit
  sampler-check sampler diagnostics for pseudorandom dense tuple sets
  verify-bench  verifier completeness/soundness/cost measurement

Exit codes: 0 success, 1 a --assert threshold failed, 2 bad usage/config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from .field import PrimeField
from .harness import (
    ConfigError,
    campaign_summary,
    parse_config,
    run_campaign,
    scaling_sweep,
    sweep_summary,
    trial_rng,
    write_summary_json,
    write_trials_csv,
)
from .linalg import matvec, random_matrix, random_vector
from .oracle import QueryLedger, wrap_matrix, wrap_vector
from .sampler import (
    BaseDomain,
    DenseSet,
    QueryGraph,
    check_sampler,
    lemma_condition,
    theorem_condition,
    violation_fraction_exact,
)
from .solver import NoisySolver, UniformProfile, invoke
from .verify import VerifierConfig, charged_queries, verify_product


def _ensure_out(path: str):
    os.makedirs(path, exist_ok=True)


def _parse_alphas(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"--alphas expects comma-separated floats, got {text!r}") from None


def _cmd_run(args) -> int:
    overrides = {"seed": args.seed, "trials": args.trials, "workers": args.workers}
    config = parse_config(args.config, overrides)
    print(
        f"run: modulus={config.modulus} n={config.n} trials={config.trials} "
        f"profile={config.profile} alpha={config.alpha} pipeline={config.pipeline}"
    )
    report = run_campaign(config)
    summary = campaign_summary(report)
    print(
        f"success_rate={report.success_rate:.4f} "
        f"ci=[{report.ci_low:.4f}, {report.ci_high:.4f}] "
        f"mean_alg_queries={report.mean_alg_queries:.1f} "
        f"wrong_returns={report.wrong_returns}"
    )
    if args.out:
        _ensure_out(args.out)
        csv_path = os.path.join(args.out, "trials.csv")
        json_path = os.path.join(args.out, "summary.json")
        write_trials_csv(report.rows, csv_path)
        write_summary_json(summary, json_path)
        print(f"wrote {csv_path} and {json_path}")
    if args.assert_thresholds:
        threshold = args.min_success_rate
        if threshold is None:
            threshold = config.min_success_rate
        if threshold is None:
            print("--assert needs min_success_rate (config key or --min-success-rate)", file=sys.stderr)
            return 2
        if report.success_rate < threshold:
            print(f"ASSERT FAIL: success_rate {report.success_rate:.4f} < {threshold}")
            return 1
        print(f"ASSERT OK: success_rate {report.success_rate:.4f} >= {threshold}")
    return 0


def _cmd_sweep(args) -> int:
    overrides = {"seed": args.seed, "workers": args.workers}
    config = parse_config(args.config, overrides)
    alphas = _parse_alphas(args.alphas)
    print(f"sweep: alphas={alphas} trials_per_alpha={args.trials_per_alpha or config.trials}")
    report = scaling_sweep(config, alphas, args.trials_per_alpha)
    for entry in report.entries:
        print(
            f"  alpha={entry.alpha:<8g} mean_alg_queries={entry.mean_alg_queries:<12.1f} "
            f"success_rate={entry.success_rate:.3f}"
        )
    print(f"slope={report.slope:.3f} stderr={report.slope_stderr:.3f}")
    if args.out:
        _ensure_out(args.out)
        path = os.path.join(args.out, "sweep.json")
        write_summary_json(sweep_summary(report), path)
        print(f"wrote {path}")
    if args.assert_thresholds:
        if not (args.slope_min <= report.slope <= args.slope_max):
            print(f"ASSERT FAIL: slope {report.slope:.3f} outside [{args.slope_min}, {args.slope_max}]")
            return 1
        print(f"ASSERT OK: slope {report.slope:.3f} in [{args.slope_min}, {args.slope_max}]")
    return 0


def _cmd_sampler_check(args) -> int:
    field = PrimeField(args.modulus)
    graph = QueryGraph(BaseDomain(field, args.dim), args.copies)
    print(
        f"sampler-check: |X|={graph.x_size} copies={args.copies} tuples={graph.y_size} "
        f"c={args.c} delta={args.delta} eps={args.eps} sets={args.sets} "
        f"mode={'exact' if args.exact else 'monte-carlo'}"
    )
    lemma_ok = lemma_condition(args.copies, args.c, args.delta, args.eps)
    theorem_ok = theorem_condition(args.copies, args.delta, args.eps)
    print(f"lemma condition: {'satisfied' if lemma_ok else 'NOT satisfied'}; "
          f"theorem condition: {'satisfied' if theorem_ok else 'NOT satisfied'}")

    rng = trial_rng(args.seed, 0)
    results = []
    passes = 0
    for s in range(args.sets):
        dense = DenseSet.pseudorandom(args.eps, args.seed + s)
        if args.exact:
            violation, density = violation_fraction_exact(graph, dense, args.c)
        else:
            check = check_sampler(
                graph, dense, args.c, args.delta, args.x_samples, args.y_samples, rng
            )
            violation, density = check.violation_fraction, check.density
        ok = violation <= args.delta
        passes += ok
        results.append({"set": s, "violation_fraction": violation, "density": density, "ok": ok})
        print(f"  set {s}: density={density:.4f} violation_fraction={violation:.4f} "
              f"{'ok' if ok else 'VIOLATION ABOVE delta'}")
    pass_fraction = passes / args.sets
    print(f"pass_fraction={pass_fraction:.3f}")

    if args.out:
        _ensure_out(args.out)
        path = os.path.join(args.out, "sampler_check.json")
        write_summary_json(
            {
                "x_size": graph.x_size,
                "copies": args.copies,
                "c": args.c,
                "delta": args.delta,
                "eps": args.eps,
                "lemma_condition": lemma_ok,
                "theorem_condition": theorem_ok,
                "sets": results,
                "pass_fraction": pass_fraction,
            },
            path,
        )
        print(f"wrote {path}")
    if args.assert_thresholds:
        if pass_fraction < args.min_pass_fraction:
            print(f"ASSERT FAIL: pass_fraction {pass_fraction:.3f} < {args.min_pass_fraction}")
            return 1
        print(f"ASSERT OK: pass_fraction {pass_fraction:.3f} >= {args.min_pass_fraction}")
    return 0


def _cmd_verify_bench(args) -> int:
    field = PrimeField(args.modulus)
    config = VerifierConfig(epsilon=args.eps)
    rng = trial_rng(args.seed, 0)
    ledger = QueryLedger()
    print(
        f"verify-bench: {args.rows}x{args.cols} mod {args.modulus} eps={args.eps} "
        f"trials={args.trials}"
    )

    completeness_failures = 0
    for _ in range(args.trials):
        m = random_matrix(args.rows, args.cols, field, rng)
        v = random_vector(args.cols, field, rng)
        w = matvec(m, v)
        if not verify_product(wrap_matrix(m, ledger), wrap_vector(v, ledger), w, config, rng):
            completeness_failures += 1

    false_accepts = {}
    for mode in ("uniform", "perturb"):
        # a never-succeeding solver produces wrong outputs in the chosen mode
        wrong_solver = NoisySolver(UniformProfile(0.0), failure_mode=mode)
        accepted = 0
        for _ in range(args.trials):
            m = random_matrix(args.rows, args.rows, field, rng)
            v = random_vector(args.rows, field, rng)
            mh, vh = wrap_matrix(m, ledger), wrap_vector(v, ledger)
            w = invoke(wrong_solver, mh, vh, rng)
            if verify_product(mh, vh, w, config, rng):
                accepted += 1
        false_accepts[mode] = accepted / args.trials

    charged = charged_queries(args.rows, args.eps)
    print(f"completeness failures: {completeness_failures}/{args.trials}")
    for mode, rate in false_accepts.items():
        print(f"false-accept rate ({mode} wrong outputs): {rate:.5f} (bound eps={args.eps})")
    print(f"charged cost per call at {args.rows} rows: {charged}")

    if args.out:
        _ensure_out(args.out)
        path = os.path.join(args.out, "verify_bench.json")
        write_summary_json(
            {
                "rows": args.rows,
                "cols": args.cols,
                "modulus": args.modulus,
                "eps": args.eps,
                "trials": args.trials,
                "completeness_failures": completeness_failures,
                "false_accept_rates": false_accepts,
                "charged_queries_per_call": charged,
            },
            path,
        )
        print(f"wrote {path}")
    if args.assert_thresholds:
        import math

        sigma = math.sqrt(args.eps * (1.0 - args.eps) / args.trials)
        bound = args.eps + 3.0 * sigma
        bad = completeness_failures > 0 or any(r > bound for r in false_accepts.values())
        if bad:
            print(f"ASSERT FAIL: completeness_failures={completeness_failures}, "
                  f"false accepts vs bound {bound:.5f}: {false_accepts}")
            return 1
        print("ASSERT OK: completeness exact, false accepts within bound")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvamp",
        description="Worst-case amplification experiments for finite-field matrix-vector solvers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one campaign from a config file")
    p_run.add_argument("config", help="path to a flat key = value config file")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--trials", type=int, default=None, help="override config trials")
    p_run.add_argument("--workers", type=int, default=None, help="override config workers")
    p_run.add_argument("--out", default=None, help="directory for trials.csv and summary.json")
    p_run.add_argument("--assert", dest="assert_thresholds", action="store_true",
                       help="exit 1 unless success_rate meets min_success_rate")
    p_run.add_argument("--min-success-rate", type=float, default=None,
                       help="threshold for --assert (defaults to config min_success_rate)")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run campaigns across alphas and fit a slope")
    p_sweep.add_argument("config", help="path to a flat key = value config file")
    p_sweep.add_argument("--alphas", required=True, help="comma-separated alpha values")
    p_sweep.add_argument("--trials-per-alpha", type=int, default=None)
    p_sweep.add_argument("--seed", type=int, default=None, help="override config seed")
    p_sweep.add_argument("--workers", type=int, default=None, help="override config workers")
    p_sweep.add_argument("--out", default=None, help="directory for sweep.json")
    p_sweep.add_argument("--assert", dest="assert_thresholds", action="store_true",
                         help="exit 1 unless the fitted slope lies in [--slope-min, --slope-max]")
    p_sweep.add_argument("--slope-min", type=float, default=-2.5)
    p_sweep.add_argument("--slope-max", type=float, default=-1.5)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_samp = sub.add_parser("sampler-check", help="sampler diagnostics for dense tuple sets")
    p_samp.add_argument("--modulus", type=int, default=2)
    p_samp.add_argument("--dim", type=int, default=1)
    p_samp.add_argument("--copies", type=int, required=True, help="tuple length k")
    p_samp.add_argument("--c", type=float, required=True)
    p_samp.add_argument("--delta", type=float, required=True)
    p_samp.add_argument("--eps", type=float, required=True, help="dense set density")
    p_samp.add_argument("--sets", type=int, default=20)
    p_samp.add_argument("--x-samples", type=int, default=200)
    p_samp.add_argument("--y-samples", type=int, default=2000)
    p_samp.add_argument("--exact", action="store_true", help="enumerate instead of sampling")
    p_samp.add_argument("--seed", type=int, default=0)
    p_samp.add_argument("--out", default=None)
    p_samp.add_argument("--assert", dest="assert_thresholds", action="store_true")
    p_samp.add_argument("--min-pass-fraction", type=float, default=0.95)
    p_samp.set_defaults(func=_cmd_sampler_check)

    p_ver = sub.add_parser("verify-bench", help="verifier completeness/soundness/cost bench")
    p_ver.add_argument("--rows", type=int, required=True)
    p_ver.add_argument("--cols", type=int, required=True)
    p_ver.add_argument("--modulus", type=int, default=5)
    p_ver.add_argument("--eps", type=float, default=1e-4)
    p_ver.add_argument("--trials", type=int, default=10000)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--out", default=None)
    p_ver.add_argument("--assert", dest="assert_thresholds", action="store_true")
    p_ver.set_defaults(func=_cmd_verify_bench)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
