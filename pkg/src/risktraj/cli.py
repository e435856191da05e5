"""Command-line entry point.

Subcommands: simulate one case, analyze an external trajectory CSV,
compare the three structural cases, sweep a config parameter, or render
the two-panel figure from trajectory files. All outputs are deterministic
for identical inputs.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import sys
from pathlib import Path

import numpy as np

from .errors import RisktrajError
from .io_formats import (
    ReportDocument,
    TrajectoryTable,
    apply_overrides,
    config_digest,
    config_to_parser,
    format_number,
    parser_to_config,
    read_trajectory,
    report_to_text,
    write_report,
    write_trajectory,
)
from .metrics import MetricsConfig, assemble_report
from .scenario import CASE_IDS, CaseResult, compare_cases, default_config, run_case
from .svgplot import emit_plot

_COMPARISON_SCHEMA = "risktraj.comparison.v1"


def _load_parser(config_arg: str) -> configparser.ConfigParser:
    if config_arg == "default":
        return config_to_parser(default_config())
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    with open(config_arg) as fh:
        parser.read_file(fh)
    return parser


def _resolve_config(args):
    parser = _load_parser(args.config)
    if getattr(args, "set", None):
        apply_overrides(parser, args.set)
    return parser_to_config(parser)


def _case_table(result: CaseResult) -> TrajectoryTable:
    return TrajectoryTable(
        t=result.energy.times(),
        signals={
            "E": result.energy.values,
            "P_in": result.p_in.values,
            "P_load": result.p_load.values,
            "r": result.risk.values,
        },
    )


def _disturbance_window(config) -> tuple[float, float] | None:
    d = config.disturbance
    if d.kind != "pulse":
        return None
    return (d.onset, d.onset + d.duration)


def _cmd_simulate(args) -> int:
    config = _resolve_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_case(args.case, config)
    table = _case_table(result)
    traj_path = out_dir / f"{args.case}_trajectory.csv"
    write_trajectory(table, traj_path)
    doc = ReportDocument.from_report(result.report, args.case, config_digest(config))
    report_path = out_dir / f"{args.case}_report.txt"
    write_report(doc, report_path)
    print(f"wrote {traj_path}")
    print(f"wrote {report_path}")
    if args.plot:
        plot_path = out_dir / f"{args.case}.svg"
        emit_plot(
            [table],
            plot_path,
            labels=[args.case],
            disturbance_window=_disturbance_window(config),
        )
        print(f"wrote {plot_path}")
    return 0


def _metrics_from_flags(args) -> MetricsConfig:
    return MetricsConfig(
        baseline_mode=args.baseline,
        tail_fraction=args.tail_fraction,
        fit_floor_ratio=args.fit_floor,
        min_fit_samples=args.min_fit_samples,
        tail_correction=not args.no_tail_correction,
        horizon=args.horizon,
        recovery_band_ratio=args.recovery_band_ratio,
    )


def _cmd_analyze(args) -> int:
    table = read_trajectory(args.input)
    traj = table.trajectory("r")
    t0 = traj.grid.t_start if args.t0 is None else args.t0
    report = assemble_report(traj, t0, _metrics_from_flags(args))
    digest = "sha256:" + hashlib.sha256(Path(args.input).read_bytes()).hexdigest()[:16]
    doc = ReportDocument.from_report(report, "external", digest)
    if args.out is None:
        sys.stdout.write(report_to_text(doc))
    else:
        write_report(doc, args.out)
        print(f"wrote {args.out}")
    return 0


def _comparison_text(comparison, digest: str) -> str:
    lines = [
        f"schema = {_COMPARISON_SCHEMA}",
        f"config_digest = {digest}",
        f"r0_ordering_holds = {'true' if comparison.r0_ordering_holds else 'false'}",
        "impact_ordering_holds = "
        + ("true" if comparison.impact_ordering_holds else "false"),
    ]
    for case_id in CASE_IDS:
        rep = comparison.cases[case_id].report
        lam = "absent" if rep.lambda_hat is None else format_number(rep.lambda_hat)
        closed = (
            "absent"
            if rep.impact_closed_form is None
            else format_number(rep.impact_closed_form)
        )
        lines.append(f"{case_id}.r0 = {format_number(rep.r0)}")
        lines.append(f"{case_id}.lambda_hat_per_s = {lam}")
        lines.append(f"{case_id}.impact_numeric = {format_number(rep.impact_numeric)}")
        lines.append(f"{case_id}.impact_closed_form = {closed}")
    return "\n".join(lines) + "\n"


def _cmd_compare(args) -> int:
    config = _resolve_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    comparison = compare_cases(config)
    digest = config_digest(config)
    tables = []
    for case_id in CASE_IDS:
        result = comparison.cases[case_id]
        table = _case_table(result)
        tables.append(table)
        traj_path = out_dir / f"{case_id}_trajectory.csv"
        write_trajectory(table, traj_path)
        write_report(
            ReportDocument.from_report(result.report, case_id, digest),
            out_dir / f"{case_id}_report.txt",
        )
        print(f"wrote {traj_path}")
    summary_path = out_dir / "comparison.txt"
    summary_path.write_text(_comparison_text(comparison, digest), newline="\n")
    print(f"wrote {summary_path}")
    plot_path = out_dir / "comparison.svg"
    emit_plot(
        tables,
        plot_path,
        labels=list(CASE_IDS),
        disturbance_window=_disturbance_window(config),
    )
    print(f"wrote {plot_path}")
    return 0


def _parse_range(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise RisktrajError(f"range {spec!r} is not of the form start:stop:count")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise RisktrajError(f"range {spec!r} has non-numeric parts") from None
    if count < 1:
        raise RisktrajError(f"range count must be >= 1, got {count}")
    if stop < start:
        raise RisktrajError(f"range stop {stop} is below start {start}")
    if count == 1:
        return np.array([start])
    return np.linspace(start, stop, count)


def _cmd_sweep(args) -> int:
    base_parser = _load_parser(args.config)
    if args.set:
        apply_overrides(base_parser, args.set)
    # probe the parameter path once so bad names fail before any run
    apply_overrides(_copy_parser(base_parser), [f"{args.param}=0"])
    values = _parse_range(args.range)

    header_cells = ["value"]
    for case_id in CASE_IDS:
        header_cells += [
            f"{case_id}_r0",
            f"{case_id}_lambda_hat",
            f"{case_id}_impact",
        ]
    rows = []
    for value in values:
        parser = _copy_parser(base_parser)
        apply_overrides(parser, [f"{args.param}={format_number(value)}"])
        comparison = compare_cases(parser_to_config(parser))
        cells = [format_number(value)]
        for case_id in CASE_IDS:
            rep = comparison.cases[case_id].report
            cells.append(format_number(rep.r0))
            cells.append(
                "" if rep.lambda_hat is None else format_number(rep.lambda_hat)
            )
            cells.append(format_number(rep.impact_numeric))
        rows.append(",".join(cells))
    text = ",".join(header_cells) + "\n" + "\n".join(rows) + "\n"
    Path(args.out).write_text(text, newline="\n")
    print(f"wrote {args.out}")
    return 0


def _copy_parser(parser: configparser.ConfigParser) -> configparser.ConfigParser:
    clone = configparser.ConfigParser(interpolation=None)
    clone.optionxform = str
    clone.read_dict({s: dict(parser[s]) for s in parser.sections()})
    return clone


def _cmd_emit_plot(args) -> int:
    tables = [read_trajectory(path) for path in args.inputs]
    labels = [Path(path).stem for path in args.inputs]
    window = None
    if args.config is not None:
        window = _disturbance_window(parser_to_config(_load_parser(args.config)))
    emit_plot(tables, args.out, labels=labels, disturbance_window=window)
    print(f"wrote {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risktraj",
        description="Simulate disturbance responses and quantify "
        "trajectory-based resilience.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one case and write its outputs")
    p_sim.add_argument("--case", required=True, choices=CASE_IDS)
    p_sim.add_argument("--config", default="default",
                       help="config file path, or 'default'")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config value (repeatable)")
    p_sim.add_argument("--plot", action="store_true", help="also write an SVG")
    p_sim.set_defaults(func=_cmd_simulate)

    p_an = sub.add_parser("analyze", help="report metrics for a trajectory CSV")
    p_an.add_argument("input", help="trajectory CSV with an r column")
    p_an.add_argument("--t0", type=float, default=None,
                      help="disturbance onset (default: trajectory start)")
    p_an.add_argument("--out", default=None, help="report path (default: stdout)")
    p_an.add_argument("--baseline", choices=("zero", "steady_state"),
                      default="zero")
    p_an.add_argument("--tail-fraction", type=float, default=0.25)
    p_an.add_argument("--fit-floor", type=float, default=0.05)
    p_an.add_argument("--min-fit-samples", type=int, default=10)
    p_an.add_argument("--no-tail-correction", action="store_true")
    p_an.add_argument("--horizon", type=float, default=None)
    p_an.add_argument("--recovery-band-ratio", type=float, default=0.05)
    p_an.set_defaults(func=_cmd_analyze)

    p_cmp = sub.add_parser("compare", help="run all three cases and compare")
    p_cmp.add_argument("--config", default="default")
    p_cmp.add_argument("--out", required=True, help="output directory")
    p_cmp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    p_cmp.set_defaults(func=_cmd_compare)

    p_sw = sub.add_parser("sweep", help="compare cases across a parameter range")
    p_sw.add_argument("--config", default="default")
    p_sw.add_argument("--param", required=True,
                      metavar="SECTION.KEY", help="config key to sweep")
    p_sw.add_argument("--range", required=True, metavar="START:STOP:COUNT")
    p_sw.add_argument("--out", required=True, help="output CSV path")
    p_sw.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    p_sw.set_defaults(func=_cmd_sweep)

    p_plot = sub.add_parser("emit-plot", help="render trajectory CSVs to SVG")
    p_plot.add_argument("inputs", nargs="+", help="trajectory CSV paths")
    p_plot.add_argument("--out", required=True, help="SVG path")
    p_plot.add_argument("--config", default=None,
                        help="config providing the disturbance window shading")
    p_plot.set_defaults(func=_cmd_emit_plot)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RisktrajError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
