"""Command line front end: single runs, parameter sweeps, plot data.

Verbs:
  run        simulate one configuration and write its report
  sweep      run a grid of configurations and aggregate a CSV
  plot-data  regroup an aggregate CSV into per-metric columnar files

Exit codes: 0 success, 1 configuration error, 2 partial sweep failure.
"""

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from .config import SweepSpec, parse_config
from .errors import ConfigError, MissingColumns, WebSyncError
from .simnet import NetworkModel
from .simulator import SimConfig, run_simulation
from .timebase import seconds_from_ms

AGGREGATE_COLUMNS = ["resource_count", "change_interval", "sync_interval",
                     "mode", "seed", "avg_consistency", "avg_latency",
                     "avg_efficiency"]


def _num(value: float) -> str:
    """Compact stable rendering for parameter values (0.1, 10, 1000)."""
    return "%g" % value


def cell_name(config: SimConfig) -> str:
    return "n%d_c%s_s%s_%s_seed%d" % (
        config.resource_count, _num(config.change_interval),
        _num(config.sync_interval), config.sync_mode, config.seed)


def config_as_dict(config: SimConfig) -> dict:
    d = dataclasses.asdict(config)
    d["network"] = dataclasses.asdict(config.network)
    return d


def write_report(report, outdir):
    """Write summary.json plus the consistency/latency/ledger CSV set."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = {
        "config": config_as_dict(report.config),
        "average_consistency": report.average_consistency,
        "average_latency": report.average_latency,
        "average_efficiency": report.average_efficiency,
        "final_consistency": report.final_consistency,
        "unresolved_changes": report.unresolved_count,
        "counts": report.counts,
    }
    (outdir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")

    with open(outdir / "consistency.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "consistency"])
        for t, value in report.breakpoints:
            writer.writerow(["%.3f" % seconds_from_ms(t), "%.6f" % value])

    with open(outdir / "latency.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["uri", "change_type", "change_time_s",
                         "resolved_time_s", "latency_s"])
        for rec in report.latencies:
            writer.writerow([rec.uri, rec.change_type.value,
                             "%.3f" % seconds_from_ms(rec.change_timestamp),
                             "%.3f" % seconds_from_ms(rec.resolved_timestamp),
                             "%.3f" % seconds_from_ms(rec.latency_ms)])

    with open(outdir / "ledger.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cycle_start_s", "cycle_end_s", "bytes_required",
                         "bytes_overhead", "bytes_total", "is_final"])
        for c in report.ledger:
            writer.writerow(["%.3f" % seconds_from_ms(c.cycle_start),
                             "%.3f" % seconds_from_ms(c.cycle_end),
                             c.bytes_required, c.bytes_overhead,
                             c.bytes_total, int(c.is_final)])


def run_sweep(spec: SweepSpec, out_dir, collect=None):
    """Run every cell, write per-cell reports and the aggregate CSV.

    Returns (aggregate csv path, failures) where failures maps cell name to
    the error string; failed cells are skipped and the sweep continues.
    When given, collect(name, report) is called after each successful cell.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    failures = {}
    for config in spec.cells():
        name = cell_name(config)
        try:
            report = run_simulation(config)
        except WebSyncError as exc:
            failures[name] = str(exc)
            continue
        write_report(report, out_dir / name)
        if collect is not None:
            collect(name, report)
        rows.append((config.resource_count, config.change_interval,
                     config.sync_interval, config.sync_mode, config.seed,
                     report.average_consistency, report.average_latency,
                     report.average_efficiency))
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3], r[4]))
    aggregate = out_dir / "aggregate.csv"
    with open(aggregate, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for row in rows:
            writer.writerow([row[0], _num(row[1]), _num(row[2]), row[3], row[4],
                             "%.6f" % row[5], "%.6f" % row[6], "%.6f" % row[7]])
    if failures:
        with open(out_dir / "failures.json", "w") as fh:
            json.dump(failures, fh, indent=2, sort_keys=True)
    return aggregate, failures


def emit_plot_data(aggregate_csv, out_dir):
    """Split the aggregate CSV into one columnar file per metric.

    Each file groups rows into (change_interval, sync_interval) panels with
    mode as series and resource_count on the x axis; values are means over
    seeds.  Returns the list of files written.
    """
    aggregate_csv = Path(aggregate_csv)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(aggregate_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        fieldnames = reader.fieldnames or []
        missing = [c for c in AGGREGATE_COLUMNS if c not in fieldnames]
        if missing:
            raise MissingColumns("aggregate CSV lacks columns: %s"
                                 % ", ".join(missing))
        rows = list(reader)

    metrics = [("consistency", "avg_consistency"),
               ("latency", "avg_latency"),
               ("efficiency", "avg_efficiency")]
    written = []
    for stem, column in metrics:
        groups = {}
        for row in rows:
            key = (float(row["change_interval"]), float(row["sync_interval"]),
                   row["mode"], int(row["resource_count"]))
            groups.setdefault(key, []).append(float(row[column]))
        path = out_dir / ("%s.dat" % stem)
        with open(path, "w") as fh:
            fh.write("# change_interval sync_interval mode resource_count "
                     "mean_%s\n" % column)
            previous_panel = None
            for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], k[3])):
                panel = key[:2]
                if previous_panel is not None and panel != previous_panel:
                    fh.write("\n")  # blank line separates panels
                previous_panel = panel
                mean = sum(groups[key]) / len(groups[key])
                fh.write("%s %s %s %d %.6f\n"
                         % (_num(key[0]), _num(key[1]), key[2], key[3], mean))
        written.append(path)
    if not rows:
        print("warning: aggregate CSV has no data rows", file=sys.stderr)
    return written


def _add_override_args(parser):
    parser.add_argument("--config", type=Path, help="configuration file")
    parser.add_argument("--out", type=Path, default=Path("out"),
                        help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--mode", choices=["baseline", "incremental"])
    parser.add_argument("--resource-count", type=int)
    parser.add_argument("--change-interval", type=float)
    parser.add_argument("--sync-interval", type=float)
    parser.add_argument("--duration", type=float)
    parser.add_argument("--max-representation-size", type=int)
    parser.add_argument("--change-mix",
                        help="create,update,delete weights, e.g. 0,1,0")
    parser.add_argument("--bandwidth", type=float,
                        help="modeled bytes per simulated second")
    parser.add_argument("--per-request-overhead", type=float,
                        help="modeled seconds per request")


def _apply_overrides(base: SimConfig, args) -> SimConfig:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.mode is not None:
        updates["sync_mode"] = args.mode
    if args.resource_count is not None:
        updates["resource_count"] = args.resource_count
    if args.change_interval is not None:
        updates["change_interval"] = args.change_interval
    if args.sync_interval is not None:
        updates["sync_interval"] = args.sync_interval
    if args.duration is not None:
        updates["duration"] = args.duration
    if args.max_representation_size is not None:
        updates["max_representation_size"] = args.max_representation_size
    if args.change_mix is not None:
        parts = [p.strip() for p in args.change_mix.split(",")]
        if len(parts) != 3:
            raise ConfigError("change_mix needs 3 weights", key="change_mix")
        try:
            updates["change_mix"] = tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError("bad change_mix %r" % args.change_mix,
                              key="change_mix") from None
    network = base.network
    if args.bandwidth is not None or args.per_request_overhead is not None:
        try:
            network = NetworkModel(
                args.bandwidth if args.bandwidth is not None else network.bandwidth,
                args.per_request_overhead if args.per_request_overhead is not None
                else network.per_request_overhead)
        except ValueError as exc:
            raise ConfigError(str(exc), key="network") from None
        updates["network"] = network
    return dataclasses.replace(base, **updates).validate()


def _load(args):
    if args.config is not None:
        return parse_config(args.config.read_bytes())
    return SimConfig()


def build_parser():
    parser = argparse.ArgumentParser(
        prog="websync",
        description="Web resource synchronization simulator and tools")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run a single simulation")
    _add_override_args(p_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid")
    _add_override_args(p_sweep)

    p_plot = sub.add_parser("plot-data", help="emit per-metric plot data")
    p_plot.add_argument("--csv", type=Path, required=True,
                        help="aggregate CSV from a sweep")
    p_plot.add_argument("--out", type=Path, default=Path("out"),
                        help="output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.verb == "run":
            loaded = _load(args)
            if isinstance(loaded, SweepSpec):
                raise ConfigError("run expects a single-cell config; "
                                  "use the sweep verb for [sweep] files")
            config = _apply_overrides(loaded, args)
            report = run_simulation(config)
            outdir = args.out / cell_name(config)
            write_report(report, outdir)
            print("run %s: consistency=%.4f latency=%.3fs efficiency=%.4f "
                  "(report in %s)" % (cell_name(config),
                                      report.average_consistency,
                                      report.average_latency,
                                      report.average_efficiency, outdir))
            return 0
        if args.verb == "sweep":
            loaded = _load(args)
            if isinstance(loaded, SweepSpec):
                spec = dataclasses.replace(loaded,
                                           base=_apply_overrides(loaded.base, args))
            else:
                base = _apply_overrides(loaded, args)
                spec = SweepSpec((base.resource_count,), (base.change_interval,),
                                 (base.sync_interval,), (base.sync_mode,),
                                 (base.seed,), base)
            aggregate, failures = run_sweep(spec, args.out)
            print("sweep complete: %d cells, %d failures, aggregate in %s"
                  % (len(spec.cells()), len(failures), aggregate))
            return 2 if failures else 0
        if args.verb == "plot-data":
            written = emit_plot_data(args.csv, args.out)
            print("wrote %s" % ", ".join(str(p) for p in written))
            return 0
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1
    except WebSyncError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
