"""Command-line entry point: run, sweep, verify-lemmas, and report.

Exit codes are the only success/failure channel: 0 on success, 2 for
configuration or usage errors, 3 for runtime failures. Stdout carries data,
stderr carries diagnostics.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import ContractViolation, SizeError
from .harness import (
    ConfigError,
    ExperimentConfig,
    ParseError,
    SweepFailure,
    canonical_json,
    curve_rows,
    curve_table_csv,
    load_report,
    persist,
    run_experiment,
    sweep,
)
from .lemma_lab import run_all_verifiers

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _apply_override(config: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    dotted, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = config
    keys = dotted.split(".")
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {dotted!r} crosses a non-object value")
    node[keys[-1]] = value


def _load_config_dict(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e


def _config_from_args(raw: dict, args) -> ExperimentConfig:
    for assignment in args.set or []:
        _apply_override(raw, assignment)
    if args.seed is not None:
        raw["master_seed"] = args.seed
    if args.jobs is not None:
        raw["jobs"] = args.jobs
    if args.clip_bounds:
        raw["clip_bounds"] = True
    return ExperimentConfig.from_json_dict(raw)


def _cmd_run(args) -> int:
    config = _config_from_args(_load_config_dict(args.config), args)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = run_experiment(config, keep_tables=args.dump_tables)
    persist(report, out / "report.json")
    (out / "curves.csv").write_text(curve_table_csv(curve_rows(report)),
                                    encoding="utf-8")
    if args.verbose:
        for res in report.supersamples:
            mi = (f" mean_mi={sum(res.mi_per_index) / len(res.mi_per_index):.5f}"
                  if res.mi_per_index else "")
            print(f"{res.supersample_id}: gap={res.gap_mean:+.4f}{mi}",
                  file=sys.stderr)
    if args.dump_tables:
        tdir = out / "tables"
        tdir.mkdir(exist_ok=True)
        for table in report.tables:
            persist(table, tdir / f"{table.supersample_id}.json")
    print(f"gap_mean={report.gap_mean:.6f} "
          + " ".join(f"{b.name}={b.value:.6f}" for b in report.bounds)
          + f" wall_clock={report.wall_clock_sec:.2f}s", file=sys.stderr)
    return EXIT_OK


def _sweep_configs(raw: dict, args) -> list[ExperimentConfig]:
    if "configs" in raw:
        members = [dict(c) for c in raw["configs"]]
    elif "base" in raw and "vary" in raw:
        members = []
        for patch in raw["vary"]:
            merged = json.loads(json.dumps(raw["base"]))
            for key, value in patch.items():
                merged[key] = value
            members.append(merged)
    else:
        raise ConfigError("sweep config needs either 'configs' or 'base' + 'vary'")
    if not members:
        raise ConfigError("sweep config lists no members")
    return [_config_from_args(m, args) for m in members]


def _cmd_sweep(args) -> int:
    configs = _sweep_configs(_load_config_dict(args.config), args)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        reports, rows = sweep(configs)
    except SweepFailure as e:
        for idx, report in enumerate(e.completed):
            persist(report, out / f"report_{idx:03d}.json")
        persist({"failed_index": e.index, "error": str(e.cause)},
                out / "errors.json")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    for idx, report in enumerate(reports):
        persist(report, out / f"report_{idx:03d}.json")
    (out / "curves.csv").write_text(curve_table_csv(rows), encoding="utf-8")
    print(f"swept {len(reports)} configs -> {out}/curves.csv", file=sys.stderr)
    return EXIT_OK


def _cmd_verify_lemmas(args) -> int:
    reports = run_all_verifiers(instances=args.instances, seed=args.seed or 0)
    payload = [r.to_json_dict() for r in reports]
    text = canonical_json({"verifiers": payload})
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    bad = [r for r in reports if r.violations > 0]
    for r in reports:
        status = "ok" if r.violations == 0 else "VIOLATED"
        print(f"{r.lemma}: {r.instances} instances, min_margin={r.min_margin:.3e} "
              f"[{status}]", file=sys.stderr)
    return EXIT_RUNTIME if bad else EXIT_OK


def _cmd_report(args) -> int:
    rows = []
    for path in args.reports:
        report = load_report(path)
        rows.extend(curve_rows(report))
    csv_text = curve_table_csv(rows)
    if args.csv:
        Path(args.csv).write_text(csv_text, encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
    if args.svg:
        svg_dir = Path(args.svg)
        svg_dir.mkdir(parents=True, exist_ok=True)
        for name in sorted({r["bound_name"] for r in rows}):
            series = [r for r in rows if r["bound_name"] == name]
            (svg_dir / f"{name}.svg").write_text(render_curves_svg(name, series),
                                                 encoding="utf-8")
    return EXIT_OK


def render_curves_svg(bound_name: str, rows: list[dict]) -> str:
    """Deterministic line chart: gap and bound curves against n, with error bars."""
    rows = sorted(rows, key=lambda r: (r["n"], r["learner"]))
    width, height, pad = 640, 440, 60.0
    xs = [r["n"] for r in rows]
    series = {
        "gap": [(r["gap_mean"], r["gap_std"] or 0.0) for r in rows],
        "bound": [(r["bound_value"], r["bound_spread"] or 0.0) for r in rows],
    }
    ymax = max(v + e for pts in series.values() for v, e in pts)
    ymax = max(ymax, 1e-9)
    ymin = min(0.0, min(v - e for pts in series.values() for v, e in pts))
    xmin, xmax = min(xs), max(xs)
    xspan = max(xmax - xmin, 1)

    def px(x):
        return pad + (x - xmin) / xspan * (width - 2 * pad)

    def py(y):
        return height - pad - (y - ymin) / (ymax - ymin) * (height - 2 * pad)

    colors = {"gap": "#1f77b4", "bound": "#d62728"}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad:.2f}" y1="{height - pad:.2f}" x2="{width - pad:.2f}" '
        f'y2="{height - pad:.2f}" stroke="black"/>',
        f'<line x1="{pad:.2f}" y1="{pad:.2f}" x2="{pad:.2f}" '
        f'y2="{height - pad:.2f}" stroke="black"/>',
        f'<text x="{width / 2:.2f}" y="{height - 20:.2f}" font-size="14" '
        f'text-anchor="middle">n</text>',
        f'<text x="{width / 2:.2f}" y="30" font-size="14" '
        f'text-anchor="middle">{bound_name}: gap vs bound</text>',
        f'<text x="{pad:.2f}" y="{height - pad + 18:.2f}" font-size="12" '
        f'text-anchor="middle">{xmin}</text>',
        f'<text x="{width - pad:.2f}" y="{height - pad + 18:.2f}" font-size="12" '
        f'text-anchor="middle">{xmax}</text>',
        f'<text x="{pad - 8:.2f}" y="{py(ymax):.2f}" font-size="12" '
        f'text-anchor="end">{ymax:.3g}</text>',
        f'<text x="{pad - 8:.2f}" y="{py(0.0):.2f}" font-size="12" '
        f'text-anchor="end">0</text>',
    ]
    for label, pts in series.items():
        color = colors[label]
        coords = " ".join(f"{px(x):.2f},{py(v):.2f}" for x, (v, _) in zip(xs, pts))
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                     f'stroke-width="2"/>')
        for x, (v, e) in zip(xs, pts):
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(v):.2f}" r="3" '
                         f'fill="{color}"/>')
            if e > 0:
                parts.append(f'<line x1="{px(x):.2f}" y1="{py(v - e):.2f}" '
                             f'x2="{px(x):.2f}" y2="{py(v + e):.2f}" '
                             f'stroke="{color}" stroke-width="1"/>')
    for idx, label in enumerate(series):
        y = pad + 16 * idx
        parts.append(f'<line x1="{width - pad - 120:.2f}" y1="{y:.2f}" '
                     f'x2="{width - pad - 96:.2f}" y2="{y:.2f}" '
                     f'stroke="{colors[label]}" stroke-width="2"/>')
        parts.append(f'<text x="{width - pad - 90:.2f}" y="{y + 4:.2f}" '
                     f'font-size="12">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fcmi",
        description="Estimate prediction-based generalization bounds and verify "
                    "their underlying inequalities numerically.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment config")
    run_p.add_argument("config")
    run_p.add_argument("-o", "--output-dir", default=".")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override master_seed")
    run_p.add_argument("--jobs", type=int, default=None,
                       help="worker pool size for supersamples")
    run_p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dotted-path config override")
    run_p.add_argument("--clip-bounds", action="store_true",
                       help="clip plotted bound values at 1")
    run_p.add_argument("--dump-tables", action="store_true",
                       help="also write per-supersample prediction tables")
    run_p.add_argument("-v", "--verbose", action="store_true",
                       help="per-supersample diagnostics on stderr")

    sweep_p = sub.add_parser("sweep", help="run a list of experiment configs")
    sweep_p.add_argument("config")
    sweep_p.add_argument("-o", "--output-dir", default=".")
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--jobs", type=int, default=None)
    sweep_p.add_argument("--set", action="append", metavar="KEY=VALUE")
    sweep_p.add_argument("--clip-bounds", action="store_true")

    ver_p = sub.add_parser("verify-lemmas",
                           help="check every implemented inequality numerically")
    ver_p.add_argument("--instances", type=int, default=1000)
    ver_p.add_argument("--seed", type=int, default=0)
    ver_p.add_argument("-o", "--output", default=None,
                       help="write the JSON summary here instead of stdout")

    rep_p = sub.add_parser("report", help="merge reports into a curve table")
    rep_p.add_argument("reports", nargs="+")
    rep_p.add_argument("--csv", default=None, help="write CSV here instead of stdout")
    rep_p.add_argument("--svg", default=None, metavar="DIR",
                       help="also render one SVG chart per bound")

    return parser


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "verify-lemmas": _cmd_verify_lemmas,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ParseError, SizeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContractViolation, OSError, RuntimeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
