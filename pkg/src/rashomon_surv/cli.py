"""Command line entry point: ``rashomon-surv {run,ingest,plot,compare}``.

Exit codes: 0 success, 1 partial failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys

from .experiment import (
    ConfigError,
    ExperimentConfig,
    compare_censoring,
    load_report,
    run_experiment,
    with_overrides,
)
from .ingest import (
    CensoringSpec,
    CmapssParseError,
    CovariateSpec,
    build_survival_dataset,
    drop_constant_columns,
    load_subset,
    write_dataset_csv,
)
from .plotting import emit_plot
from .rashomon import envelope_stats, read_envelope_csv

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def _cmd_run(args) -> int:
    try:
        config = with_overrides(ExperimentConfig.load(args.config), args.output_dir, args.seed)
        report = run_experiment(config)
    except (ConfigError, OSError, CmapssParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for b in report["blocks"]:
        if b["status"] == "ok":
            s = b["summary"]
            sd = "n/a" if s["c_index_sd"] is None else f"{s['c_index_sd']:.4f}"
            print(
                f"{report['subset']} t={b['censor_time']:g}: Rashomon set size {s['size']} "
                f"({', '.join(s['member_ids'])}), member C-index {s['c_index_mean']:.4f} +/- {sd}, "
                f"mean width {b['envelope_stats']['mean_width']:.4f}"
            )
        else:
            print(f"{report['subset']} t={b['censor_time']:g}: FAILED ({b['error']})")
    trend = report["uncertainty_trend"]
    if trend and trend["flag"]:
        print(f"note: {trend['flag']}")
    print(f"report: {report['report_path']}")
    return EXIT_PARTIAL if report["partial"] else EXIT_OK


def _cmd_ingest(args) -> int:
    try:
        table = load_subset(args.data, args.subset)
        table, dropped = drop_constant_columns(table)
        data = build_survival_dataset(
            table, CensoringSpec(args.censor_time), CovariateSpec(args.strategy, args.window)
        )
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"dropped constant columns: {', '.join(dropped) or 'none'}", file=sys.stderr)
    print(f"{len(data)} units, {int(data.event.sum())} events at censor_time {args.censor_time:g}", file=sys.stderr)
    if args.out:
        write_dataset_csv(data, args.out)
    else:
        write_dataset_csv(data, sys.stdout)
    return EXIT_OK


def _cmd_plot(args) -> int:
    try:
        env = read_envelope_csv(args.envelope)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    emit_plot(env, envelope_stats(env), args.out, title=args.title or "")
    return EXIT_OK


def _cmd_compare(args) -> int:
    try:
        rows = compare_censoring([load_report(p) for p in args.reports])
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    probe_times = sorted({t for r in rows for t in r.get("width_at", {})}, key=float)
    header = ["censor_time", "status", "set_size", "c_index_mean", "mean_width", "max_width"] + [
        f"width@{float(t):g}" for t in probe_times
    ]
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(
                [r["censor_time"], r["status"]]
                + [r.get(k, "") for k in ("set_size", "c_index_mean", "mean_width", "max_width")]
                + [r.get("width_at", {}).get(t, "") for t in probe_times]
            )
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rashomon-surv", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full pipeline from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--output-dir")
    run.add_argument("--seed", type=int)
    run.set_defaults(func=_cmd_run)

    ing = sub.add_parser("ingest", help="parse a CMAPSS subset into the canonical dataset CSV")
    ing.add_argument("--data", required=True, help="directory holding train_FDxxx.txt, or the file itself")
    ing.add_argument("--subset", default="FD001")
    ing.add_argument("--censor-time", type=float, default=200.0)
    ing.add_argument("--strategy", choices=["window_mean", "first_cycle"], default="window_mean")
    ing.add_argument("--window", type=int, default=30)
    ing.add_argument("--out")
    ing.set_defaults(func=_cmd_ingest)

    plot = sub.add_parser("plot", help="re-render an SVG from a saved envelope CSV")
    plot.add_argument("--envelope", required=True)
    plot.add_argument("--out", required=True)
    plot.add_argument("--title")
    plot.set_defaults(func=_cmd_plot)

    cmp_ = sub.add_parser("compare", help="tabulate envelope widths across censoring times")
    cmp_.add_argument("--reports", nargs="+", required=True)
    cmp_.add_argument("--out")
    cmp_.set_defaults(func=_cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
