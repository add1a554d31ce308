"""Command-line entry point.

Subcommands:

* ``fig2``         grid outage experiment preset
* ``fig3``         disc spectral-efficiency experiment preset
* ``sweep``        Monte Carlo sweep of the configured single variant
* ``oracle-check`` cross-validate the iterated power control against the
                   closed-form fixed-point and feasibility oracles

Exit codes: 0 success, 1 failed oracle check, 2 config error, 3 numeric
error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from .config import fig2_defaults, fig3_defaults, parse_config, parse_config_text
from .errors import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_OK,
    ConfigError,
    SimError,
)
from .harness import experiment_fig2, experiment_fig3, run_monte_carlo
from .power_control import (
    feasibility_check,
    fixed_point_oracle,
    iterate_power_control,
    sample_instance,
)
from .report import emit_report


@dataclass
class OracleCheckSummary:
    total: int
    failures: list

    @property
    def passed(self):
        return self.total - len(self.failures)


def run_oracle_check(count, seed, *, rho_match=0.9, rel_tol=1e-8):
    """Cross-validate the iterated tracking algorithm on random instances.

    Per instance: the power-iteration feasibility verdict must match the
    iterate's behavior at a 1e6 W budget (converged with every user
    supported iff feasible), and on comfortably feasible systems
    (spectral radius < ``rho_match``) the iterate must match the direct
    linear-solve fixed point to ``rel_tol`` relative error.
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    failures = []
    for k in range(count):
        inst_seed = seed + k
        inst = sample_instance(np.random.default_rng(inst_seed))
        check = feasibility_check(inst.a, inst.noise, inst.targets)
        state = iterate_power_control(
            inst.a,
            inst.noise,
            inst.targets,
            1e6,
            algorithm="tpc",
            max_iters=200_000,
            tol=1e-12,
        )
        behaved = state.converged and bool(state.supported.all())
        if check.feasible != behaved:
            failures.append(
                (
                    k,
                    inst_seed,
                    f"feasibility mismatch: rho={check.spectral_radius:.6g} "
                    f"converged={state.converged} "
                    f"supported={int(state.supported.sum())}/{len(state.p)}",
                )
            )
            continue
        if check.feasible and check.spectral_radius < rho_match:
            exact = fixed_point_oracle(inst.a, inst.noise, inst.targets)
            rel = float(np.abs(state.p - exact).max() / np.abs(exact).max())
            if rel > rel_tol:
                failures.append(
                    (k, inst_seed, f"fixed-point mismatch: rel error {rel:.3e}")
                )
    return OracleCheckSummary(total=count, failures=failures)


def _add_run_options(parser):
    parser.add_argument("--config", help="config file (key = value text)")
    parser.add_argument(
        "--out", default="results", help="output directory (default: results)"
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )
    parser.add_argument("--seed", type=int, help="override mc.base_seed")
    parser.add_argument(
        "--jobs", type=int, default=1, help="parallel snapshot workers"
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hetsim",
        description="Snapshot Monte Carlo simulator for prioritized "
        "multi-tier cellular networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("fig2", "grid outage experiment (power-control comparison)"),
        ("fig3", "disc spectral-efficiency experiment (association schemes)"),
        ("sweep", "sweep the configured single algorithm/scheme"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_run_options(p)
    oc = sub.add_parser(
        "oracle-check",
        help="cross-validate power control against exact oracles",
    )
    oc.add_argument("--count", type=int, default=1000, help="instances to run")
    oc.add_argument("--seed", type=int, default=0, help="base instance seed")
    return parser


def _load_config(args, base):
    if args.config is not None:
        cfg = parse_config(args.config, overrides=args.overrides, base=base)
    else:
        cfg = parse_config_text("", overrides=args.overrides, base=base)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError(
                f"--seed must fit in u64, got {args.seed}", key="mc.base_seed"
            )
        cfg.base_seed = args.seed
    return cfg.validate()


def _run_experiment(args, base, runner):
    cfg = _load_config(args, base)
    report = runner(cfg, args.jobs)
    paths = emit_report(report, args.out)
    print(f"wrote {paths['csv']}")
    print(f"wrote {paths['json']}")
    print(f"wrote {len(paths['xy'])} xy curve files")
    for row in report.rows:
        bits = [
            f"n={row.sweep_value}",
            f"alg={row.algorithm}",
            f"scheme={row.scheme}",
        ]
        if row.hpue_outage is not None:
            bits.append(f"hpue_outage={row.hpue_outage:.4f}")
        if row.lpue_outage is not None:
            bits.append(f"lpue_outage={row.lpue_outage:.4f}")
        if row.spectral_eff_bps_hz is not None:
            bits.append(f"se={row.spectral_eff_bps_hz:.4f}")
        print("  ".join(bits))
    return EXIT_OK


def _run_oracle_check(args):
    summary = run_oracle_check(args.count, args.seed)
    for index, inst_seed, reason in summary.failures:
        print(f"FAIL instance {index} (seed {inst_seed}): {reason}")
    rate = summary.passed / summary.total
    print(f"oracle check: {summary.passed}/{summary.total} passed ({rate:.1%})")
    return EXIT_OK if not summary.failures else EXIT_CHECK_FAILED


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fig2":
            return _run_experiment(
                args,
                fig2_defaults(),
                lambda cfg, jobs: experiment_fig2(cfg, jobs=jobs),
            )
        if args.command == "fig3":
            return _run_experiment(
                args,
                fig3_defaults(),
                lambda cfg, jobs: experiment_fig3(cfg, jobs=jobs),
            )
        if args.command == "sweep":
            return _run_experiment(
                args,
                fig2_defaults(),
                lambda cfg, jobs: run_monte_carlo(cfg, jobs=jobs),
            )
        if args.command == "oracle-check":
            return _run_oracle_check(args)
        raise AssertionError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimError, ValueError) as exc:
        # generation, convergence, and oracle failures share the numeric code
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
