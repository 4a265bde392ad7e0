"""Command-line front end.

Exit codes: 0 pass, 1 fail, 2 usage or configuration error, 3 unclear.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import consistency, geweke, mutants
from .distributions import Dirichlet, Gaussian, InverseGamma, Multinomial, moment_check
from .model import STATISTICS, ModelSpec, read_config, spec_from_config
from .rng import RngStream

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_UNCLEAR = 0, 1, 2, 3
DEFAULT_SEED = geweke.DEFAULT_SEED
MOMENT_N = 100_000
MIN_CALIBRATION_REPLICATES = 20


class UsageError(Exception):
    pass


def moment_suite():
    return [
        Gaussian(0.0, 1.0),
        Dirichlet([2.0, 5.0]),
        Multinomial([0.3, 0.7]),
        InverseGamma(3.0, 2.0),
    ]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat 'key = value' file")
    common.add_argument("--seed", type=int, help=f"root seed (default {DEFAULT_SEED})")
    common.add_argument("--trials", type=int, help="consistency trials per block")
    common.add_argument("--tol", type=float, help="consistency tolerance")
    common.add_argument("--num-samples", type=int, help="Geweke samples per procedure")
    common.add_argument("--data-n", type=int, help="number of data points N")
    common.add_argument("--data-d", type=int, help="data dimension D")
    common.add_argument("--thin", type=int, help="Gibbs sweeps per recorded chain sample")
    common.add_argument("--mutant", action="append", help="mutant id (repeatable for 'mutants')")
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    common.add_argument("--svg", action="store_true", help="also write P-P plots as SVG")
    common.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    parser = argparse.ArgumentParser(prog="mcmc-testkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("unit", parents=[common], help="conditional/joint consistency and moment checks")
    sub.add_parser("geweke", parents=[common], help="forward versus successive-conditional test")
    sub.add_parser("mutants", parents=[common], help="kill matrix over the mutant registry")
    cal = sub.add_parser("calibrate", parents=[common], help="null KS thresholds for the Geweke test")
    cal.add_argument("--replicates", type=int, default=50)
    return parser


class Plan:
    """Resolved settings: command line over config file over defaults."""

    def __init__(self, args: argparse.Namespace):
        cfg = read_config(args.config) if args.config else {}
        self.spec: ModelSpec = spec_from_config(cfg)

        def pick(flag, key, cast, default):
            if flag is not None:
                return flag
            if key in cfg:
                try:
                    return cast(cfg[key])
                except ValueError:
                    raise UsageError(f"bad value for {key}: {cfg[key]!r}") from None
            return default

        self.seed = pick(args.seed, "seed", int, DEFAULT_SEED)
        self.trials = pick(args.trials, "trials", int, consistency.DEFAULT_TRIALS)
        self.tol = pick(args.tol, "tol", float, consistency.DEFAULT_TOL)
        self.out: Path = args.out
        self.svg = args.svg
        self.jobs = args.jobs
        self.mutants = args.mutant or []
        if self.trials < 1:
            raise UsageError("--trials must be >= 1")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        for m in self.mutants:
            if m not in mutants.REGISTRY:
                raise UsageError(f"unknown mutant {m!r}; known: {', '.join(mutants.REGISTRY)}")

        num_samples = pick(args.num_samples, "num_samples", int, geweke.CALIBRATION_SAMPLES)
        if num_samples < 100:
            raise UsageError("--num-samples must be >= 100")
        thresholds = None
        if any(k.startswith(("pass_threshold.", "fail_threshold.")) for k in cfg):
            thresholds = geweke.default_thresholds(num_samples)
            for name in STATISTICS:
                p, f = thresholds[name]
                p = pick(None, f"pass_threshold.{name}", float, p)
                f = pick(None, f"fail_threshold.{name}", float, geweke.FAIL_FACTOR * p)
                thresholds[name] = (p, f)
        stats = pick(None, "statistics", lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
                     STATISTICS)
        try:
            self.geweke = geweke.GewekeConfig(
                num_samples=num_samples,
                n=pick(args.data_n, "N", int, 20),
                d=pick(args.data_d, "D", int, 2),
                thin=pick(args.thin, "thin", int, 1),
                statistics=stats,
                seed=self.seed,
                min_ess=pick(None, "min_ess", float, geweke.DEFAULT_MIN_ESS),
                thresholds=thresholds,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def model(self):
        if len(self.mutants) > 1:
            raise UsageError("this command takes a single --mutant")
        return mutants.apply_mutant(self.spec, self.mutants[0] if self.mutants else "none")


def cmd_unit(plan: Plan) -> int:
    model = plan.model()
    root = RngStream(plan.seed)
    report = consistency.check_all(model, plan.trials, plan.tol, root.spawn(0),
                                   plan.geweke.n, plan.geweke.d)
    plan.out.mkdir(parents=True, exist_ok=True)
    consistency.write_trials_csv(report, plan.out / "unit_trials.csv")
    print(report.summary())

    moments_ok = True
    rows = []
    for i, dist in enumerate(moment_suite()):
        mr = moment_check(dist, MOMENT_N, root.spawn(1).spawn(i))
        moments_ok &= mr.passed
        print(f"moments {mr.name}: {'ok' if mr.passed else 'FAIL'}")
        for c in mr.checks:
            rows.append([mr.name, c.moment, c.coord, repr(c.empirical), repr(c.exact), repr(c.z), c.status])
    with open(plan.out / "unit_moments.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["distribution", "moment", "coord", "empirical", "exact", "z", "status"])
        w.writerows(rows)

    if report.passed and moments_ok:
        print("OK")
        return EXIT_PASS
    if not report.passed:
        print(f"FAILED: inconsistent blocks: {', '.join(report.failing_blocks)}")
    if not moments_ok:
        print("FAILED: moment checks")
    return EXIT_FAIL


def cmd_geweke(plan: Plan) -> int:
    model = plan.model()
    report = geweke.geweke_run(model, plan.geweke, RngStream(plan.seed))
    geweke.write_report(report, plan.out, svg=plan.svg)
    print(report.summary())
    if "sigma_sq_n" in report.results:
        chain = report.results["sigma_sq_n"].chain
        chain = chain[np.isfinite(chain) & (chain > 0)]
        if chain.size >= 3:
            slope, se = geweke.drift(np.log(chain))
            print(f"log sigma_sq_n drift: slope {slope:.3e} per record ({slope / se:+.1f} s.e.)")
    return {geweke.PASS: EXIT_PASS, geweke.FAIL: EXIT_FAIL, geweke.UNCLEAR: EXIT_UNCLEAR}[report.verdict]


def cmd_mutants(plan: Plan) -> int:
    ids = plan.mutants or list(mutants.REGISTRY)
    rows = mutants.kill_matrix(plan.spec, ids, RngStream(plan.seed), plan.trials, plan.tol, plan.geweke)
    plan.out.mkdir(parents=True, exist_ok=True)
    mutants.write_kill_matrix_csv(rows, plan.out / "kill_matrix.csv")
    status = EXIT_PASS
    for mid, found in mutants.detected_by(rows).items():
        print(f"{mid:<5} {', '.join(found) if found else '(not detected)'}")
        if mid == "none":
            if found:
                print("identity mutant was flagged: the suites report false positives")
                status = EXIT_FAIL
        elif not found:
            status = EXIT_FAIL
    return status


def cmd_calibrate(plan: Plan, replicates: int) -> int:
    if replicates < 1:
        raise UsageError("--replicates must be >= 1")
    if replicates < MIN_CALIBRATION_REPLICATES:
        print(f"warning: {replicates} replicates are insufficient for a stable 95th percentile "
              f"(use at least {MIN_CALIBRATION_REPLICATES})", file=sys.stderr)
    cal = geweke.calibrate(plan.model(), plan.geweke, replicates,
                           RngStream(plan.seed).spawn(2), jobs=plan.jobs)
    text = geweke.format_thresholds(cal, plan.geweke)
    plan.out.mkdir(parents=True, exist_ok=True)
    (plan.out / "thresholds.cfg").write_text(text)
    print(text, end="")
    return EXIT_PASS


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        plan = Plan(args)
        if args.command == "unit":
            return cmd_unit(plan)
        if args.command == "geweke":
            return cmd_geweke(plan)
        if args.command == "mutants":
            return cmd_mutants(plan)
        return cmd_calibrate(plan, args.replicates)
    except (UsageError, OSError, ValueError) as exc:
        print(f"mcmc-testkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
