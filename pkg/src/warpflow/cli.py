"""Command-line front end: run flows, verify claim suites, plot records.

Commands (exit codes: 0 ok, 1 usage/config, 2 flow abort, 3 verification
failure):

    warpflow run    --config cfg.txt --out outdir [--set key=value ...]
    warpflow verify SUITE --out outdir
    warpflow plot   record.csv --out figure.svg

The config format is flat ``section.key = value`` text; see KEY_SPECS
for the full key set.  All floating output carries 17 significant
digits, so repeated runs produce bitwise-identical files.
"""

import argparse
import datetime
import json
import os
import sys

from . import __version__
from .diagnostics import fit_decay_rate
from .errors import (
    ConfigurationError,
    DiagnosticError,
    FlowAbortError,
    WarpflowError,
)
from .flow import FlowConfig, run
from .verify import SUITES, run_suite

__all__ = ["parse_config", "emit_config", "cmd_run", "cmd_verify", "cmd_plot", "main"]

# key -> (config field, type, required)
KEY_SPECS = {
    "ambient.n": ("n", int, True),
    "ambient.m": ("m", float, True),
    "flow.k": ("k", int, True),
    "grid.mode": ("mode", str, True),
    "grid.resolution": ("resolution", int, False),
    "init.preset": ("preset", str, False),
    "init.rho0": ("rho0", float, True),
    "init.eps": ("eps", float, False),
    "run.t_end": ("t_end", float, True),
    "run.dt": ("dt", float, False),
    "run.dt_max": ("dt_max", float, False),
    "run.cfl_safety": ("cfl_safety", float, False),
    "run.cadence": ("cadence", int, False),
    "run.stop_dev": ("stop_dev", float, False),
}


def _parse_pairs(lines, origin):
    values = {}
    problems = []
    for lineno, raw in lines:
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            problems.append(f"{origin}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, _, val = text.partition("=")
        key, val = key.strip(), val.strip()
        if key not in KEY_SPECS:
            problems.append(f"{origin}:{lineno}: unknown key {key!r}")
            continue
        field, typ, _ = KEY_SPECS[key]
        try:
            values[field] = typ(val)
        except ValueError:
            problems.append(f"{origin}:{lineno}: cannot parse {key} value {val!r} as {typ.__name__}")
    return values, problems


def parse_config(path=None, text=None, overrides=()) -> FlowConfig:
    """Resolve a FlowConfig from a file (or raw text) plus overrides.

    Raises ConfigurationError with line/key context on parse problems
    and with the complete violation list on validation problems.
    """
    if (path is None) == (text is None):
        raise ValueError("provide exactly one of path or text")
    if path is not None:
        if not os.path.exists(path):
            raise ConfigurationError(f"config file not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            lines = list(enumerate(fh.readlines(), start=1))
        origin = str(path)
    else:
        lines = list(enumerate(text.splitlines(), start=1))
        origin = "<config>"
    values, problems = _parse_pairs(lines, origin)
    over_lines = list(enumerate(overrides, start=1))
    over_values, over_problems = _parse_pairs(over_lines, "<override>")
    problems += over_problems
    values.update(over_values)

    missing = [key for key, (fieldname, _, req) in KEY_SPECS.items()
               if req and fieldname not in values]
    if missing:
        problems.append("missing required keys: " + ", ".join(missing))
    if problems:
        raise ConfigurationError("; ".join(problems))
    config = FlowConfig(**values)
    config.validate()
    return config


def emit_config(config: FlowConfig) -> str:
    """Canonical text form; parse_config(text=...) round-trips exactly."""
    out = []
    for key, (fieldname, typ, _) in KEY_SPECS.items():
        value = getattr(config, fieldname)
        if value is None:
            continue
        if typ is float:
            out.append(f"{key} = {float(value):.17g}")
        else:
            out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_manifest(out_dir, config_echo, started, outputs, claims):
    manifest = {
        "tool": "warpflow",
        "version": __version__,
        "started": started,
        "finished": _now(),
        "config_echo": config_echo,
        "outputs": outputs,
        "claim_summary": claims,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _dump_abort(out_dir, exc: FlowAbortError) -> str:
    path = os.path.join(out_dir, "abort_state.csv")
    state = exc.state
    with open(path, "w", encoding="ascii") as fh:
        fh.write("node,rho\n")
        if state is not None:
            for j, r in enumerate(state.rho):
                fh.write(f"{j},{r:.17g}\n")
    meta = {
        "t": exc.t,
        "node": exc.node,
        "kappa": None if exc.kappa is None else [float(x) for x in exc.kappa],
        "message": str(exc),
    }
    with open(os.path.join(out_dir, "abort.json"), "w", encoding="ascii") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def cmd_run(config: FlowConfig, out_dir) -> int:
    """Run a flow; write record.csv, snapshots, and a manifest."""
    os.makedirs(out_dir, exist_ok=True)
    started = _now()
    echo = emit_config(config)
    try:
        result = run(config, out_dir=out_dir)
    except FlowAbortError as exc:
        dump = _dump_abort(out_dir, exc)
        print(f"flow aborted: {exc}", file=sys.stderr)
        print(f"state dump: {dump}", file=sys.stderr)
        return 2
    record_path = os.path.join(out_dir, "record.csv")
    result.record.to_csv(record_path)
    snapshots = sorted(n for n in os.listdir(out_dir) if n.startswith("snapshot_"))
    _write_manifest(out_dir, echo, started,
                    ["record.csv", "manifest.json"] + snapshots,
                    {"steps": result.step_count,
                     "final_t": float(result.final_state.t),
                     "final_dev_max": float(result.record.dev_max[-1]),
                     "stopped_early": result.stopped_early})
    print(f"completed {result.step_count} steps to t = {result.final_state.t:.17g}; "
          f"record: {record_path}")
    return 0


def cmd_verify(suite: str, out_dir) -> int:
    """Run a verification suite; exit 0 iff every claim passes."""
    if suite not in SUITES:
        print(f"unknown suite {suite!r}; choose from {', '.join(sorted(SUITES))}",
              file=sys.stderr)
        return 1
    os.makedirs(out_dir, exist_ok=True)
    started = _now()
    report = run_suite(suite)
    report_path = os.path.join(out_dir, f"report_{suite.replace('-', '_')}.txt")
    report.write(report_path)
    _write_manifest(out_dir, f"suite = {suite}\n", started,
                    [os.path.basename(report_path), "manifest.json"],
                    {e.claim: bool(e.passed) for e in report.entries})
    for e in report.entries:
        print(f"{'pass' if e.passed else 'FAIL'}  {e.claim}: {e.measured:.6g} "
              f"(bound {e.bound})")
    print(f"report: {report_path}")
    return 0 if report.passed else 3


def cmd_plot(record_path, out_path) -> int:
    """Render the standard four-panel diagnostic figure from a record CSV."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .flow import FlowRecord

    record = FlowRecord.from_csv(record_path)
    t = record.t
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    panels = [
        (axes[0, 0], "max |kappa - 1|", [("dev", record.dev_max)], True),
        (axes[0, 1], "max |grad potential|", [("grad", record.grad_phi_max)], True),
        (axes[1, 0], "speed extremes", [("F_min", record.F_min), ("F_max", record.F_max)], False),
        (axes[1, 1], "rescaled radius extremes",
         [("rs_min", record.rs_min), ("rs_max", record.rs_max)], False),
    ]
    for ax, title, series, fit in panels:
        for label, y in series:
            positive = bool(len(y)) and bool((y > 0).all())
            ax.plot(t, y, label=label)
            if positive:
                ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel("t")
        ax.legend(loc="best", fontsize=8)
        if fit and len(t) >= 3:
            y = series[0][1]
            window = (0.5 * (t[0] + t[-1]), t[-1])
            try:
                rate = fit_decay_rate(t, y, window)
            except (DiagnosticError, ValueError):
                continue
            ax.annotate(f"slope {rate.slope:.2f}", xy=(0.05, 0.05),
                        xycoords="axes fraction")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    print(f"figure: {out_path}")
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="warpflow",
                     description="inverse curvature flow simulator and verifier")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a flow configuration")
    p_run.add_argument("--config", required=True, help="path to a config file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key")

    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("suite", help=f"one of: {', '.join(sorted(SUITES))}")
    p_ver.add_argument("--out", required=True, help="output directory")

    p_plot = sub.add_parser("plot", help="plot a record CSV")
    p_plot.add_argument("record", help="path to record.csv")
    p_plot.add_argument("--out", required=True, help="output image path (vector format)")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            config = parse_config(path=args.config, overrides=args.set)
            return cmd_run(config, args.out)
        if args.command == "verify":
            return cmd_verify(args.suite, args.out)
        if args.command == "plot":
            return cmd_plot(args.record, args.out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except FlowAbortError as exc:
        print(f"flow aborted: {exc}", file=sys.stderr)
        return 2
    except (WarpflowError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
