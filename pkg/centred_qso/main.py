#!/usr/bin/env python
# coding: utf-8

"""
CLI entry point for centred QSO simulation and verification.
"""

import argparse
import json
import logging
import sys
import time
from argparse import Namespace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from centred_qso import __version__, io
from centred_qso.analysis import ks_two_sample, summarize
from centred_qso.cf_engine import (
    IterateSpec,
    TailBoundParams,
    analytic_grid,
    fixed_point_residual,
    is_non_increasing,
    iterate_cf,
    kernel_limit_cf,
    stable_limit_check,
    symmetric_grid,
    verify_tail_bound,
)
from centred_qso.config import (
    ExperimentConfig,
    format_distribution,
    parse_distribution,
    parse_grid,
    parse_int_list,
    parse_iterations,
    resolve_config,
)
from centred_qso.distributions import moments, tail_constant
from centred_qso.errors import NumericFailure, QSOValidationError
from centred_qso.figures import replicate_figures
from centred_qso.fitting import fit_tail_power_law, fitted_tail_constant
from centred_qso.samplers import (
    chebyshev_error_bound,
    draw_approx,
    draw_exact,
    evolve_population,
    population_frame,
    population_means,
    truncation_depth,
)
from centred_qso.streams import RandomStream

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

Handler = Callable[[ExperimentConfig], List[str]]


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s - %(levelname)s - %(message)s",
        force=True,
    )


# ---------------------------------------------------------------- arguments


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config or run manifest to start from")
    parser.add_argument("--seed", dest="master_seed", type=int, help="RNG master seed")
    parser.add_argument("--streams", dest="stream_id", type=int, help="Root stream id")
    parser.add_argument("--threads", type=int, help="Worker cap")
    parser.add_argument("--output-dir", dest="output_dir", help="Directory for artifacts")
    parser.add_argument("--format", dest="output_format", choices=["csv", "json"])
    parser.add_argument("--log-level", default="INFO", help="Logging level")


def _add_budget(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--vf", dest="v_F", type=float)
    parser.add_argument("--vg", dest="v_G", type=float)
    parser.add_argument("--log", dest="log_base", choices=["base2", "natural"])
    parser.add_argument("--bonferroni-k", dest="bonferroni_K", type=int)


def _flag(parser: argparse.ArgumentParser, name: str, dest: str, value: bool, help: str) -> None:
    parser.add_argument(name, dest=dest, action="store_const", const=value, default=None, help=help)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="centred-qso", description="Centred quadratic stochastic operator toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    dist = parse_distribution

    p = sub.add_parser("simulate-population", help="Finite-population mid-parent process")
    p.add_argument("--f", dest="seed_dist", type=dist, help="Founder law")
    p.add_argument("--g", "--kernel", dest="kernel", type=dist, help="Kernel law")
    p.add_argument("--K", dest="population_size", type=int)
    p.add_argument("--n", type=parse_iterations)
    p.add_argument("--record-generations", dest="record_generations", type=parse_int_list)
    _flag(p, "--forbid-self-pairing", "forbid_self_pairing", True, "Parents must differ")

    p = sub.add_parser("draw-exact", help="Exact draws of the n-th iterate")
    p.add_argument("--f", dest="seed_dist", type=dist)
    p.add_argument("--g", "--kernel", dest="kernel", type=dist)
    p.add_argument("--n", type=parse_iterations)
    p.add_argument("--count", type=int)
    _flag(p, "--guard-override", "guard_override", True, "Allow n above the feasibility guard")
    _flag(p, "--no-reduce-sums", "reduce_sums", False, "Sum literal draws")

    p = sub.add_parser("draw-approx", help="Truncated approximate draws")
    p.add_argument("--mean", dest="seed_mean", type=float)
    p.add_argument("--f", dest="seed_dist", type=dist, help="Seed law for m and v_F")
    p.add_argument("--g", "--kernel", dest="kernel", type=dist)
    p.add_argument("--n", type=parse_iterations)
    p.add_argument("--count", type=int)
    _add_budget(p)
    _flag(p, "--no-reduce-sums", "reduce_sums", False, "Sum literal draws")

    p = sub.add_parser("depth", help="Truncation depth of an error budget")
    p.add_argument("--n", type=parse_iterations)
    _add_budget(p)

    p = sub.add_parser("cf-iterate", help="CF of the n-th iterate on a grid")
    p.add_argument("--f", dest="seed_dist", type=dist)
    p.add_argument("--g", "--kernel", dest="kernel", type=dist)
    p.add_argument("--n", type=parse_iterations)
    p.add_argument("--grid", type=parse_grid, help="delta:K_grid")

    p = sub.add_parser("cf-limit", help="Limit CF of the kernel component")
    p.add_argument("--g", "--kernel", dest="kernel", type=dist)
    p.add_argument("--grid", type=parse_grid)
    p.add_argument("--depth-cap", dest="depth_cap", type=int)
    p.add_argument("--tol", type=float)
    _add_tail(p)

    p = sub.add_parser("fixed-point", help="Residual of the fixed-point equation")
    p.add_argument("--candidate", type=dist)
    p.add_argument(
        "--candidate-grid", dest="candidate_grid", help="CF table (s, re, im) to test instead of a law"
    )
    p.add_argument("--g", "--kernel", dest="kernel", type=dist)
    p.add_argument("--grid", type=parse_grid)

    p = sub.add_parser("tail-check", help="Check a log-CF power bound near zero")
    p.add_argument("--g", "--kernel", dest="kernel", type=dist)
    p.add_argument("--grid", type=parse_grid)
    _add_tail(p)

    p = sub.add_parser("stable-limit", help="phi(s/n)^n against the Cauchy limit")
    p.add_argument("--dist", type=dist)
    p.add_argument("--C", dest="tail_C", type=float, help="Tail constant")
    p.add_argument("--n-values", dest="n_values", type=parse_int_list)
    p.add_argument("--grid", type=parse_grid)
    _flag(p, "--fit-tail", "fit_tail", True, "Estimate C by a least-squares tail fit")

    p = sub.add_parser("compare", help="Two-sample KS comparison")
    p.add_argument("--a", dest="sample_a", help="First sample file")
    p.add_argument("--b", dest="sample_b", help="Second sample file")
    p.add_argument("--f", dest="seed_dist", type=dist)
    p.add_argument("--g", "--kernel", dest="kernel", type=dist)
    p.add_argument("--n", type=parse_iterations)
    p.add_argument("--count", type=int)
    _add_budget(p)

    p = sub.add_parser("replicate-figures", help="Histogram tables of the three figures")
    p.add_argument("--population-size", dest="population_size", type=int)
    p.add_argument("--iterations", type=parse_int_list)
    p.add_argument("--figures", type=parse_int_list)
    p.add_argument("--bins", type=int)
    _flag(p, "--forbid-self-pairing", "forbid_self_pairing", True, "Parents must differ")
    _flag(p, "--no-reduce-sums", "reduce_sums", False, "Sum literal draws")

    for p in sub.choices.values():
        _add_common(p)
    return parser


def _add_tail(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tail-A", dest="tail_A", type=float)
    parser.add_argument("--tail-p", dest="tail_p", type=float)
    parser.add_argument("--tail-s0", dest="tail_s0", type=float)


def overrides_from_args(args: Namespace) -> Dict[str, object]:
    values = {k: v for k, v in vars(args).items() if k not in ("command", "config", "log_level", "grid")}
    grid = getattr(args, "grid", None)
    if grid is not None:
        values["grid_delta"], values["grid_half_count"] = grid
    return values


# ---------------------------------------------------------------- handlers


def _out(config: ExperimentConfig, name: str) -> Path:
    return Path(config.output_dir) / name


def _grid(config: ExperimentConfig) -> np.ndarray:
    return symmetric_grid(config.grid_delta, config.grid_half_count)


def _stream(config: ExperimentConfig) -> RandomStream:
    return RandomStream(config.master_seed, config.stream_id)


def _save_samples(config: ExperimentConfig, values: np.ndarray) -> str:
    name = f"samples.{config.output_format}"
    io.save_values(values, _out(config, name), config.output_format)
    return name


def _tail_params(config: ExperimentConfig) -> Optional[TailBoundParams]:
    if config.tail_A is None or config.tail_p is None or config.tail_s0 is None:
        return None
    return TailBoundParams(config.tail_A, config.tail_p, config.tail_s0)


def run_simulate_population(config: ExperimentConfig) -> List[str]:
    config.require("seed_dist", "kernel")
    assert config.seed_dist is not None and config.kernel is not None
    states = evolve_population(
        config.seed_dist,
        config.kernel,
        config.population_size,
        config.iteration_count(),
        _stream(config),
        forbid_self_pairing=config.forbid_self_pairing,
        threads=config.threads,
    )
    if config.record_generations is not None:
        keep = set(config.record_generations)
        states = [state for state in states if state.generation in keep]
    io.save_table(population_frame(states), _out(config, "population.csv"))
    means = population_means(states)
    io.save_table(means, _out(config, "means.csv"))
    print(means.to_string(index=False))
    return ["population.csv", "means.csv"]


def run_draw_exact(config: ExperimentConfig) -> List[str]:
    config.require("seed_dist", "kernel")
    assert config.seed_dist is not None and config.kernel is not None
    values = draw_exact(
        IterateSpec(config.seed_dist, config.kernel, config.iteration_count()),
        config.count,
        _stream(config),
        guard_override=config.guard_override,
        threads=config.threads,
        reduce_sums=config.reduce_sums,
    )
    return [_save_samples(config, values)]


def _with_seed_moments(config: ExperimentConfig) -> ExperimentConfig:
    """Fill seed mean, v_F and v_G from the laws when they were not given."""
    overrides: Dict[str, object] = {}
    if config.seed_dist is not None:
        seed = moments(config.seed_dist)
        if config.seed_mean is None:
            overrides["seed_mean"] = seed.mean
        if config.v_F is None:
            overrides["v_F"] = seed.variance
    if config.kernel is not None and config.v_G is None:
        overrides["v_G"] = moments(config.kernel).variance
    return config.merged(overrides)


def run_draw_approx(config: ExperimentConfig) -> List[str]:
    config = _with_seed_moments(config)
    config.require("seed_mean", "kernel")
    assert config.seed_mean is not None and config.kernel is not None
    values = draw_approx(
        config.seed_mean,
        config.kernel,
        config.budget(),
        config.count,
        _stream(config),
        threads=config.threads,
        reduce_sums=config.reduce_sums,
    )
    return [_save_samples(config, values)]


def run_depth(config: ExperimentConfig) -> List[str]:
    budget = config.budget()
    depth = truncation_depth(budget)
    io.save_json(
        {
            "depth": depth,
            "log_base": budget.log_base,
            "effective_alpha": budget.effective_alpha,
            "chebyshev_bound": chebyshev_error_bound(budget, depth),
        },
        _out(config, "depth.json"),
    )
    print(depth)
    return ["depth.json"]


def run_cf_iterate(config: ExperimentConfig) -> List[str]:
    config.require("seed_dist", "kernel")
    assert config.seed_dist is not None and config.kernel is not None
    grid = iterate_cf(IterateSpec(config.seed_dist, config.kernel, config.iteration_count()), _grid(config))
    io.save_cf_grid(grid, _out(config, "cf.csv"))
    io.save_json(
        {
            "zero_points": int(grid.zero_mask.sum()),
            "branch_points": int(grid.branch_mask.sum()),
        },
        _out(config, "cf_flags.json"),
    )
    return ["cf.csv", "cf_flags.json"]


def run_cf_limit(config: ExperimentConfig) -> List[str]:
    config.require("kernel")
    assert config.kernel is not None
    grid = kernel_limit_cf(
        config.kernel,
        _grid(config),
        depth_cap=config.depth_cap,
        tol=config.tol,
        tail_params=_tail_params(config),
    )
    io.save_cf_grid(grid, _out(config, "cf_limit.csv"))
    report = {
        "depth": grid.depth,
        "max_truncation_bound": (
            None if grid.truncation_bound is None else float(np.max(grid.truncation_bound))
        ),
    }
    io.save_json(report, _out(config, "cf_limit.json"))
    return ["cf_limit.csv", "cf_limit.json"]


def run_fixed_point(config: ExperimentConfig) -> List[str]:
    config.require("kernel")
    assert config.kernel is not None
    if config.candidate_grid is not None:
        candidate = io.load_cf_grid(config.candidate_grid)
    else:
        config.require("candidate")
        assert config.candidate is not None
        candidate = analytic_grid(config.candidate, _grid(config))
    report = fixed_point_residual(candidate, config.kernel)
    io.save_json(report.to_dict(), _out(config, "fixed_point.json"))
    print(f"sup_residual {report.sup_residual:.6g}")
    return ["fixed_point.json"]


def run_tail_check(config: ExperimentConfig) -> List[str]:
    config.require("kernel", "tail_A", "tail_p", "tail_s0")
    assert config.kernel is not None
    params = _tail_params(config)
    assert params is not None
    report = verify_tail_bound(config.kernel, params, _grid(config))
    io.save_json(report.to_dict(), _out(config, "tail_check.json"))
    print(f"holds {report.holds} worst_ratio {report.worst_ratio:.6g}")
    return ["tail_check.json"]


def run_stable_limit(config: ExperimentConfig) -> List[str]:
    config.require("dist")
    assert config.dist is not None
    C = config.tail_C
    if C is None:
        if config.fit_tail:
            C = fitted_tail_constant(fit_tail_power_law(config.dist, np.logspace(2, 4, 21), exponent=1.0))
        else:
            C, _ = tail_constant(config.dist)
    table = stable_limit_check(config.dist, C, config.n_values, _grid(config))
    io.save_table(table, _out(config, "stable_limit.csv"))
    io.save_json(
        {"C": C, "non_increasing": is_non_increasing(table["sup_error"].tolist(), slack=1e-12)},
        _out(config, "stable_limit.json"),
    )
    print(table.to_string(index=False))
    return ["stable_limit.csv", "stable_limit.json"]


def run_compare(config: ExperimentConfig) -> List[str]:
    if config.sample_a is not None and config.sample_b is not None:
        a = io.load_values(config.sample_a)
        b = io.load_values(config.sample_b)
        extra: Dict[str, object] = {"a": config.sample_a, "b": config.sample_b}
    else:
        config = _with_seed_moments(config)
        config.require("seed_dist", "kernel", "seed_mean")
        assert config.seed_dist is not None and config.kernel is not None
        assert config.seed_mean is not None
        root = _stream(config)
        budget = config.budget()
        a = draw_exact(
            IterateSpec(config.seed_dist, config.kernel, config.iteration_count()),
            config.count,
            root.substream(0),
            guard_override=config.guard_override,
            threads=config.threads,
            reduce_sums=config.reduce_sums,
        )
        b = draw_approx(
            config.seed_mean, config.kernel, budget, config.count, root.substream(1),
            threads=config.threads, reduce_sums=config.reduce_sums,
        )
        extra = {"a": "draw_exact", "b": "draw_approx", "depth": truncation_depth(budget)}
    result = ks_two_sample(a, b)
    report = {
        **extra,
        "ks": result.to_dict(),
        "summary_a": summarize(a).to_dict(),
        "summary_b": summarize(b).to_dict(),
    }
    io.save_json(report, _out(config, "compare.json"))
    print(f"ks {result.statistic:.6g} critical_1pct {result.critical_value_1pct:.6g}")
    return ["compare.json"]


def run_replicate_figures(config: ExperimentConfig) -> List[str]:
    summary = replicate_figures(config)
    print(pd.DataFrame(summary["entries"])[["figure", "row", "n", "mean", "passed"]].to_string(index=False))
    return [entry["histogram"] for entry in summary["entries"]] + ["figures_summary.json"]


HANDLERS: Dict[str, Handler] = {
    "simulate-population": run_simulate_population,
    "draw-exact": run_draw_exact,
    "draw-approx": run_draw_approx,
    "depth": run_depth,
    "cf-iterate": run_cf_iterate,
    "cf-limit": run_cf_limit,
    "fixed-point": run_fixed_point,
    "tail-check": run_tail_check,
    "stable-limit": run_stable_limit,
    "compare": run_compare,
    "replicate-figures": run_replicate_figures,
}


def write_manifest(
    config: ExperimentConfig, command: str, outputs: List[str], wall_time: float
) -> None:
    manifest = {
        "subcommand": command,
        "config": config.to_dict(),
        "master_seed": config.master_seed,
        "version": __version__,
        "log_base": config.log_base,
        "laws": {
            name: format_distribution(spec)
            for name in ("seed_dist", "kernel", "candidate", "dist")
            if (spec := getattr(config, name)) is not None
        },
        "wall_time_s": wall_time,
        "outputs": outputs,
    }
    io.save_json(manifest, _out(config, "manifest.json"))


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Execute one subcommand.

    Returns:
        int: 0 on success, 2 on validation errors, 3 on numeric failures.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_VALIDATION
    configure_logging(args.log_level)
    started = time.perf_counter()
    output_dir = getattr(args, "output_dir", None) or "."
    try:
        config = resolve_config(args.config, overrides_from_args(args))
        output_dir = config.output_dir
        outputs = HANDLERS[args.command](config)
    except (QSOValidationError, OSError) as e:
        logging.error("Validation failed: %s", e)
        diagnostic = e.diagnostic() if isinstance(e, QSOValidationError) else {"kind": type(e).__name__, "message": str(e)}
        print(json.dumps(diagnostic), file=sys.stderr)
        return EXIT_VALIDATION
    except NumericFailure as e:
        logging.error("Numeric failure: %s", e)
        Path(output_dir).mkdir(parents=True, exist_ok=True)
        io.save_json(e.diagnostic(), Path(output_dir) / "error.json")
        print(json.dumps(e.diagnostic()), file=sys.stderr)
        return EXIT_NUMERIC
    wall_time = time.perf_counter() - started
    write_manifest(config, args.command, outputs, wall_time)
    logging.info("%s finished in %.3f s", args.command, wall_time)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
