"""Batch front-end: ``eval``, ``sweep``, ``reproduce`` and ``validate``.

Every run writes a CSV (to ``--out`` or stdout) and a JSON manifest holding
the full configuration, seed, mode and warnings. With ``--out results.csv``
the manifest goes to ``results.csv.manifest.json``; without ``--out`` it is
printed to stderr. A manifest can be passed back as ``--config`` to rerun.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence,
4 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import time
from importlib import metadata
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, NonConvergence
from .evaluate import analytic_row, analytic_rows, simulated_row, validate
from .params import DEFAULT_CONFIG, INT_KEYS, apply_overrides, build_params, load_config, parse_value, validate_config
from .recipes import FIGURE_IDS, reproduce
from .simulator import SCHEMES, estimate_all

CSV_COLUMNS = ("sweep_var", "value", "scheme", "mode", "p_cov", "p_cov_g", "p_cov_ul", "p_cov_un", "a_g",
               "a_ul", "a_un", "a_f", "s_backhaul", "ci_low", "ci_high", "n_trials")
REPRODUCE_COLUMNS = ("figure", "series", "kind", "x", "reference", "computed", "deviation", "ci_low", "ci_high")
VALIDATE_COLUMNS = ("metric", "analytic", "estimate", "ci_low", "ci_high", "delta", "n", "status")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_FAIL = 0, 2, 3, 4


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def fmt(value: Any) -> str:
    """CSV cell: ``repr`` for floats so values round-trip exactly; empty for
    missing or NaN."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "" if math.isnan(v) else repr(v)
    return str(value)


def render_csv(columns: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


# -- configuration ---------------------------------------------------------------

def _parse_set(items: Sequence[str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"expected KEY=VALUE, got {item!r}", field="--set")
        key, text = item.split("=", 1)
        out[key.strip()] = parse_value(key.strip(), text.strip())
    return out


def resolve_config(path: str | None, overrides: Sequence[str]) -> dict[str, Any]:
    """Flat configuration from a config file (or a run manifest) plus overrides.

    Without a file the default scenario is used.
    """
    if path is None:
        cfg = dict(DEFAULT_CONFIG)
    elif str(path).endswith(".json"):
        try:
            manifest = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read manifest: {exc}") from None
        if not isinstance(manifest, dict) or "config" not in manifest:
            raise ConfigError("manifest has no 'config' entry")
        cfg = validate_config(manifest["config"])
    else:
        cfg = load_config(path)
    cfg = validate_config(apply_overrides(cfg, _parse_set(overrides)))
    build_params(cfg)  # surface range errors before any work starts
    return cfg


def _params_snapshot(cfg: dict[str, Any]) -> dict[str, Any]:
    p = build_params(cfg)

    def plain(obj):
        if dataclasses.is_dataclass(obj):
            return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        if isinstance(obj, tuple):
            return [plain(x) for x in obj]
        return obj

    return plain(p)


# -- output --------------------------------------------------------------------------

def emit(args, text: str, manifest: dict) -> None:
    manifest_text = json.dumps(manifest, indent=2, sort_keys=True, allow_nan=False, default=str) + "\n"
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8", newline="\n")
        Path(f"{out}.manifest.json").write_text(manifest_text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
        sys.stderr.write(manifest_text)


def _clean(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def base_manifest(args, cfg: dict[str, Any], started: float, warnings: Sequence[str], **extra) -> dict:
    m = {
        "command": args.command,
        "config": cfg,
        "params": _params_snapshot(cfg),
        "mode": getattr(args, "mode", None),
        "scheme": getattr(args, "scheme", None),
        "seed": args.seed,
        "trials": args.trials,
        "workers": args.workers,
        "tool_version": tool_version(),
        "wall_time_s": round(time.perf_counter() - started, 3),
        "warnings": list(dict.fromkeys(warnings)),
        "argv": list(getattr(args, "argv", [])),
    }
    m.update(extra)
    return _clean(m)


# -- commands --------------------------------------------------------------------------

def _check_mode(args) -> None:
    if args.scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {args.scheme!r}", field="--scheme")
    if args.scheme == "instantaneous" and args.mode != "simulate":
        raise ConfigError("the instantaneous scheme exists only in simulate mode", field="--scheme")


def _rows_for(cfgs: list[dict], args, sweep_var: str | None, values: list) -> tuple[list[dict], list[str]]:
    rows: list[dict] = []
    warnings: list[str] = []
    points = [build_params(c) for c in cfgs]
    analytic = []
    if args.mode in ("analytic", "both"):
        analytic = analytic_rows(points, args.scheme, args.workers, not args.no_cache)
    for i, p in enumerate(points):
        head = {"sweep_var": sweep_var, "value": values[i] if sweep_var else None, "scheme": args.scheme}
        if analytic:
            row, warns = analytic[i]
            warnings.extend(warns)
            rows.append({**head, "mode": "analytic", **row})
        if args.mode in ("simulate", "both"):
            est = estimate_all(p, args.trials, args.seed, args.workers)
            rows.append({**head, "mode": "simulate", **simulated_row(est, args.scheme)})
    return rows, warnings


def cmd_eval(args) -> int:
    started = time.perf_counter()
    _check_mode(args)
    cfg = resolve_config(args.config, args.set)
    rows, warnings = _rows_for([cfg], args, None, [None])
    emit(args, render_csv(CSV_COLUMNS, rows), base_manifest(args, cfg, started, warnings))
    return EXIT_OK


def parse_values(var: str, values: str | None, span: str | None) -> list:
    if var not in DEFAULT_CONFIG:
        raise ConfigError("sweep variable must be a configuration key", field=var)
    out: list = []
    if values:
        out = [parse_value(var, v.strip()) for v in values.split(",") if v.strip()]
    if span:
        try:
            start, stop, step = (float(t) for t in span.split(":"))
        except ValueError:
            raise ConfigError(f"expected START:STOP:STEP, got {span!r}", field="--range") from None
        if step <= 0:
            raise ConfigError("step must be positive", field="--range")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        grid = [start + i * step for i in range(max(n, 0))]
        out.extend(int(round(v)) if var in INT_KEYS else float(round(v, 12)) for v in grid)
    return out


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    _check_mode(args)
    cfg = resolve_config(args.config, args.set)
    values = parse_values(args.var, args.values, args.range)
    cfgs = [validate_config(apply_overrides(cfg, {args.var: v})) for v in values]
    rows, warnings = _rows_for(cfgs, args, args.var, values)
    manifest = base_manifest(args, cfg, started, warnings, sweep_var=args.var, values=values)
    emit(args, render_csv(CSV_COLUMNS, rows), manifest)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    started = time.perf_counter()
    cfg = resolve_config(args.config, args.set)
    report = reproduce(args.figure_id, args.mode, cfg, args.trials, args.seed, args.workers)
    rows = [{"figure": args.figure_id, "series": pt.series, "kind": pt.kind, "x": pt.x,
             "reference": pt.reference, "computed": pt.computed, "deviation": pt.deviation,
             "ci_low": pt.ci_low, "ci_high": pt.ci_high} for pt in report.points]
    summary = report.max_abs_dev()
    for key, dev in summary.items():
        print(f"max |dev| {args.figure_id} {key}: {dev:.4f}", file=sys.stderr)
    for note in report.skipped:
        print(f"skipped {note}", file=sys.stderr)
    manifest = base_manifest(args, cfg, started, report.warnings, figure_id=args.figure_id,
                             max_abs_deviation=summary, skipped=report.skipped)
    emit(args, render_csv(REPRODUCE_COLUMNS, rows), manifest)
    return EXIT_OK


def cmd_validate(args) -> int:
    started = time.perf_counter()
    cfg = resolve_config(args.config, args.set)
    # Optional perturbation of the analytic side only (negative controls).
    cfg_analytic = validate_config(apply_overrides(cfg, _parse_set(args.perturb_analytic)))
    checks = validate(build_params(cfg_analytic), build_params(cfg), args.trials, args.seed, args.workers,
                      args.slack, not args.no_cache)
    rows = [{"metric": c.metric, "analytic": c.analytic, "estimate": c.estimate, "ci_low": c.ci_low,
             "ci_high": c.ci_high, "delta": c.delta, "n": c.n, "status": c.status} for c in checks]
    failed = [c.metric for c in checks if c.status == "FAIL"]
    verdict = "FAIL" if failed else "PASS"
    print(f"validate: {verdict}" + (f" ({', '.join(failed)})" if failed else ""), file=sys.stderr)
    manifest = base_manifest(args, cfg, started, [], verdict=verdict, failed=failed, slack=args.slack,
                             analytic_config=cfg_analytic if args.perturb_analytic else None)
    emit(args, render_csv(VALIDATE_COLUMNS, rows), manifest)
    return EXIT_FAIL if failed else EXIT_OK


# -- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavbackhaul", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat TOML config file or a previous run manifest (.json)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--trials", type=int, default=None, help="Monte-Carlo trials per point (default 10000)")
    common.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--no-cache", action="store_true", help="evaluate UAV survival integrals directly")
    modes = ("analytic", "simulate", "both")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", parents=[common], help="evaluate one scenario")
    p_eval.add_argument("--mode", choices=modes, default="analytic")
    p_eval.add_argument("--scheme", choices=SCHEMES, default="aware")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", parents=[common], help="sweep one config key")
    p_sweep.add_argument("var", help="configuration key to sweep")
    p_sweep.add_argument("--values", help="comma-separated values")
    p_sweep.add_argument("--range", help="START:STOP:STEP, stop inclusive")
    p_sweep.add_argument("--mode", choices=modes, default="analytic")
    p_sweep.add_argument("--scheme", choices=SCHEMES, default="aware")
    p_sweep.set_defaults(func=cmd_sweep)

    p_rep = sub.add_parser("reproduce", parents=[common], help="recompute a reference figure")
    p_rep.add_argument("figure_id", choices=FIGURE_IDS)
    p_rep.add_argument("--mode", choices=modes, default="analytic")
    p_rep.set_defaults(func=cmd_reproduce)

    p_val = sub.add_parser("validate", parents=[common], help="analytic vs simulation check")
    p_val.add_argument("--slack", type=float, default=0.02)
    p_val.add_argument("--perturb-analytic", action="append", default=[], metavar="KEY=VALUE",
                       help="override applied to the analytic side only")
    p_val.set_defaults(func=cmd_validate)
    return parser


def _fill_run_defaults(args) -> None:
    """Seed and trial count come from the flags, else from a manifest passed
    as ``--config``, else the defaults."""
    saved: dict = {}
    if args.config and str(args.config).endswith(".json"):
        try:
            saved = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read manifest: {exc}") from None
    for name, default in (("seed", 0), ("trials", 10_000)):
        if getattr(args, name) is None:
            value = saved.get(name) if isinstance(saved, dict) else None
            setattr(args, name, default if value is None else int(value))


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    try:
        _fill_run_defaults(args)
        if args.trials < 1 or args.workers < 1:
            raise ConfigError("--trials and --workers must be positive")
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergence as exc:
        print(f"numerical error: {exc} (estimate {exc.estimate!r}, error {exc.error!r})", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
