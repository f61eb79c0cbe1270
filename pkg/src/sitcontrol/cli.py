"""Batch command-line front end.

Subcommands:
    simulate     one closed-loop run -> trajectory/pulses/summary CSV (+SVG)
    montecarlo   perturbation sweep  -> mc_summary.csv
    equilibrium  print the no-release steady state (and V_c with [epi])

Exit codes: 0 run succeeded, 2 run completed but tracking failed, 1 bad
configuration or other error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

from .config import (
    ConfigError,
    RunConfig,
    apply_horizon,
    apply_preset,
    dump_config,
    load_config,
)
from .epi import critical_vector_pop, egg_target_for_female_threshold
from .experiments import (
    MonteCarloSummary,
    RunResult,
    run_monte_carlo,
    run_scenario,
)
from .plant import wild_equilibrium

TRAJECTORY_COLUMNS = ("day", "x1", "x2", "x3", "x4", "y_ref", "y_ref_dot",
                      "v_continuous", "f_est", "error")


def _fmt(value) -> str:
    """Full round-trip decimal text so output files are byte-reproducible."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trajectory_csv(path: Path, result: RunResult) -> None:
    traj = result.trajectory
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for i in range(len(traj)):
            writer.writerow([_fmt(int(traj.day[i]))] +
                            [_fmt(float(getattr(traj, c)[i]))
                             for c in TRAJECTORY_COLUMNS[1:]])


def write_pulses_csv(path: Path, result: RunResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("day", "amplitude"))
        for day, amplitude in result.pulses.entries:
            writer.writerow((_fmt(day), _fmt(amplitude)))


def write_summary_csv(path: Path, result: RunResult, config: RunConfig) -> None:
    m = result.metrics
    rows = [
        ("rmse_tracking", m.rmse_tracking),
        ("max_abs_error", m.max_abs_error),
        ("total_released", m.total_released),
        ("saturation_count", m.saturation_count),
        ("reconstruction_error", m.reconstruction_error),
        ("final_abs_error", m.final_abs_error),
        ("all_saturated", m.all_saturated),
        ("success", m.success),
        ("y_start", config.reference.y_start),
        ("y_target", config.reference.y_target),
        ("t_settle", config.reference.t_settle),
        ("alpha", config.controller.alpha),
        ("k_p", config.controller.k_p),
        ("tau", config.controller.tau),
        ("period_J", config.pulse.period_J),
        ("u_max", config.pulse.u_max),
    ]
    if result.error is not None:
        rows.append(("run_error", result.error))
    if config.epi is not None:
        v_c = critical_vector_pop(config.epi)
        rows.append(("v_c", v_c))
        rows.append(("egg_target_for_v_c",
                     egg_target_for_female_threshold(v_c, config.model)))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("metric", "value"))
        for key, value in rows:
            writer.writerow((key, _fmt(value)))


def write_mc_summary_csv(path: Path, summary: MonteCarloSummary) -> None:
    header = (["run_id", "seed"] + [f"I{i}" for i in range(1, 9)]
              + ["rmse", "total_released", "saturation_count", "success"])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for run in summary.runs:
            writer.writerow([_fmt(run.run_id), _fmt(run.seed)]
                            + [_fmt(m) for m in run.multipliers]
                            + [_fmt(run.metrics.rmse_tracking),
                               _fmt(run.metrics.total_released),
                               _fmt(run.metrics.saturation_count),
                               _fmt(run.metrics.success)])
        totals = summary.runs
        writer.writerow(["aggregate", _fmt(summary.base_seed)] + [""] * 8
                        + [_fmt(sum(r.metrics.rmse_tracking for r in totals)
                                / len(totals)),
                           _fmt(sum(r.metrics.total_released for r in totals)),
                           _fmt(sum(r.metrics.saturation_count for r in totals)),
                           _fmt(summary.success_count)])


def _prepare_config(args) -> RunConfig:
    if getattr(args, "scenario", "nominal") == "custom" and args.config is None:
        raise ConfigError("--scenario custom requires --config")
    config = load_config(args.config)
    config = apply_preset(config, getattr(args, "scenario", "nominal"))
    if getattr(args, "horizon", None) is not None:
        config = apply_horizon(config, args.horizon)
    return config


def cmd_simulate(args) -> int:
    config = _prepare_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_scenario(config.scenario(seed=args.seed))
    write_trajectory_csv(out / "trajectory.csv", result)
    write_pulses_csv(out / "pulses.csv", result)
    write_summary_csv(out / "summary.csv", result, config)
    (out / "config_used.ini").write_text(dump_config(config), encoding="utf-8")
    if args.plot:
        from .plots import render_run_figures
        render_run_figures(result, out)
    m = result.metrics
    print(f"run complete: success={_fmt(m.success)} "
          f"rmse={m.rmse_tracking:.3f} released={m.total_released:.3e} "
          f"saturated={m.saturation_count}/{len(result.pulses)}")
    if result.error is not None:
        print(f"run error: {result.error}", file=sys.stderr)
    print(f"outputs written to {out}")
    return 0 if m.success else 2


def cmd_montecarlo(args) -> int:
    config = _prepare_config(args)
    mc = config.montecarlo
    if args.runs is not None:
        mc = dataclasses.replace(mc, n_runs=args.runs)
    if args.seed is not None:
        mc = dataclasses.replace(mc, base_seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = run_monte_carlo(mc, config.scenario(seed=mc.base_seed))
    write_mc_summary_csv(out / "mc_summary.csv", summary)
    print(f"monte carlo complete: {summary.success_count}/{len(summary.runs)} "
          f"successful (base_seed={mc.base_seed})")
    print(f"outputs written to {out}")
    return 0 if summary.success_count == len(summary.runs) else 2


def cmd_equilibrium(args) -> int:
    config = _prepare_config(args)
    eq, extinct = wild_equilibrium(config.model)
    if extinct:
        print("persistence condition fails: population goes extinct "
              "without intervention")
    print(f"x1* = {eq.x1:.6g}")
    print(f"x2* = {eq.x2:.6g}")
    print(f"x3* = {eq.x3:.6g}")
    print(f"x4* = {eq.x4:.6g}")
    if config.epi is not None:
        v_c = critical_vector_pop(config.epi)
        print(f"V_c = {v_c:.6g}")
        print(f"egg target for V_c = "
              f"{egg_target_for_female_threshold(v_c, config.model):.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sitcontrol",
        description="Simulate impulsive sterile-mosquito release campaigns "
                    "driven by a model-free controller.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one suppression campaign")
    sim.add_argument("--config", metavar="PATH", default=None)
    sim.add_argument("--out", metavar="DIR", default="out")
    sim.add_argument("--scenario", choices=("nominal", "j6", "mismatch", "custom"),
                     default="nominal")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--horizon", type=float, metavar="DAYS", default=None)
    sim.add_argument("--plot", action="store_true",
                     help="also write states.svg, control_continuous.svg, "
                          "control_impulse.svg")
    sim.set_defaults(func=cmd_simulate)

    mc = sub.add_parser("montecarlo", help="run the parameter-perturbation sweep")
    mc.add_argument("--config", metavar="PATH", default=None)
    mc.add_argument("--out", metavar="DIR", default="out")
    mc.add_argument("--scenario", choices=("nominal", "j6", "mismatch", "custom"),
                    default="nominal")
    mc.add_argument("--runs", type=int, metavar="N", default=None)
    mc.add_argument("--seed", type=int, metavar="S", default=None)
    mc.add_argument("--horizon", type=float, metavar="DAYS", default=None)
    mc.set_defaults(func=cmd_montecarlo)

    eq = sub.add_parser("equilibrium", help="print the wild steady state")
    eq.add_argument("--config", metavar="PATH", default=None)
    eq.set_defaults(func=cmd_equilibrium)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
