"""Command-line interface.

Subcommands: ``bounds``, ``sweep``, ``classify`` and ``tone``. Exit codes are
0 on success, 1 for usage or validation errors, 2 when a computed eigenvalue
falls outside its bounds and 3 when the fundamental tone did not converge.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import geometry, spectral, stochastic
from .errors import WarpeigError
from .numerics import Quadrature
from .warping import make_manifold, warping_from_string

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_SANDWICH, EXIT_NOT_CONVERGED = 0, 1, 2, 3
PROFILE_SCALE = {"fast": 1e3, "accurate": 1e-2}
SWEEP_COLUMNS = ["r", "lower_bound", "cheng_upper", "lambda1", "error"]

DEFAULTS = {
    "metric": None,
    "dim": 2,
    "radius": None,
    "radius_range": None,
    "extent": None,
    "tol_eig": 1e-10,
    "tol_quad": 1e-10,
    "profile": None,
    "format": None,
    "output": None,
    "emit_plot_data": None,
    "horizon": stochastic.DEFAULT_HORIZON,
    "r_max": 80.0,
    "tone_tol": 1e-2,
    "jobs": 1,
    "no_picard": False,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for sandwich violations here.
    def error(self, message):
        self.print_usage(sys.stderr)
        _report_error("UsageError", message)
        raise SystemExit(EXIT_USAGE)


@dataclass
class RunConfig:
    command: str
    metric: str
    dim: int
    radius: float | None
    radius_range: tuple | None
    extent: float | None
    tol_eig: float
    tol_quad: float
    format: str
    output: str | None
    emit_plot_data: str | None
    horizon: float
    r_max: float
    tone_tol: float
    jobs: int
    no_picard: bool

    def manifold(self):
        return make_manifold(warping_from_string(self.metric, self.extent), self.dim)

    @property
    def quadrature(self):
        return Quadrature(rel_tol=self.tol_quad, abs_tol=min(1e-14, self.tol_quad))


def _parse_range(text):
    try:
        lo, hi, steps = text.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError:
        raise UsageError(f"--radius-range must look like lo:hi:steps, got {text!r}") from None
    if not lo < hi:
        raise UsageError(f"--radius-range needs lo < hi, got {lo!r}:{hi!r}")
    if steps < 2:
        raise UsageError(f"--radius-range needs at least 2 steps, got {steps}")
    return lo, hi, steps


def build_parser():
    parser = _Parser(prog="warpeig", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys mirror the long flag names")
    common.add_argument("--metric", help="sphere | euclidean | hyperbolic | expr:<f(t)>")
    common.add_argument("--dim", type=int, help="manifold dimension n >= 2 (default 2)")
    common.add_argument("--extent", type=float, help="finite extent R for an expr: metric")
    common.add_argument("--tol-eig", type=float, help="absolute eigenvalue tolerance (default 1e-10)")
    common.add_argument("--tol-quad", type=float, help="relative quadrature tolerance (default 1e-10)")
    common.add_argument("--profile", choices=sorted(PROFILE_SCALE), help="scale both tolerances")
    common.add_argument("--format", choices=["json", "csv", "table"])
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--emit-plot-data", metavar="PATH", help="write whitespace-separated columns for plotting")

    p = sub.add_parser("bounds", parents=[common], help="lower bound, Cheng bound and eigenvalue of one ball")
    p.add_argument("--radius", type=float)
    p.add_argument("--no-picard", action="store_true", default=None, help="skip the fixed-point solver")

    p = sub.add_parser("sweep", parents=[common], help="tabulate bounds over a range of radii")
    p.add_argument("--radius-range", metavar="LO:HI:STEPS")
    p.add_argument("--jobs", type=int, help="rows computed concurrently (default 1)")

    p = sub.add_parser("classify", parents=[common], help="stochastic completeness test")
    p.add_argument("--horizon", type=float, help="base horizon H; V/S is probed at H, 2H, 4H (default 8)")

    p = sub.add_parser("tone", parents=[common], help="fundamental tone along doubling radii")
    p.add_argument("--r-max", type=float, help="largest radius tried (default 80)")
    p.add_argument("--tone-tol", type=float, help="convergence tolerance between radii (default 1e-2)")
    p.add_argument("--horizon", type=float, help="horizon for the accompanying lower bound")
    p.add_argument("--jobs", type=int, help="radii computed concurrently (default 1)")
    return parser


def load_config(args):
    """Merge defaults, the optional config file and explicit flags (flags win)."""
    values = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in data.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r}")
            values[key] = value
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            values[key] = value
    if not values["metric"]:
        raise UsageError("--metric is required")
    if values["profile"]:
        scale = PROFILE_SCALE[values["profile"]]
        values["tol_eig"] *= scale
        values["tol_quad"] *= scale
    command = args.command
    if command == "bounds" and values["radius"] is None:
        raise UsageError("bounds needs --radius")
    rng = values["radius_range"]
    if command == "sweep":
        if rng is None:
            raise UsageError("sweep needs --radius-range")
        rng = _parse_range(rng) if isinstance(rng, str) else _parse_range(":".join(map(str, rng)))
    fmt = values["format"] or ("csv" if command == "sweep" else "json")
    return RunConfig(
        command=command, metric=str(values["metric"]), dim=int(values["dim"]),
        radius=None if values["radius"] is None else float(values["radius"]),
        radius_range=rng, extent=values["extent"], tol_eig=float(values["tol_eig"]),
        tol_quad=float(values["tol_quad"]), format=fmt, output=values["output"],
        emit_plot_data=values["emit_plot_data"], horizon=float(values["horizon"]),
        r_max=float(values["r_max"]), tone_tol=float(values["tone_tol"]),
        jobs=int(values["jobs"]), no_picard=bool(values["no_picard"]),
    )


# --------------------------------------------------------------------------
# Serialization

def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (np.floating, np.integer)):
        return _clean(value.item())
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    return value


def render(payload, fmt, rows_key=None):
    """Serialize a flat report (or a list of rows under ``rows_key``)."""
    payload = _clean(payload)
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    rows = payload[rows_key] if rows_key else [payload]
    columns = list(rows[0].keys()) if rows else SWEEP_COLUMNS
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if row[c] is None else _cell(row[c]) for c in columns])
        return buf.getvalue()
    if rows_key:
        widths = {c: max(len(c), *(len(_cell(r[c])) for r in rows)) for c in columns}
        lines = ["  ".join(c.rjust(widths[c]) for c in columns)]
        lines += ["  ".join(_cell(r[c]).rjust(widths[c]) for c in columns) for r in rows]
        return "\n".join(lines) + "\n"
    width = max(len(k) for k in payload)
    return "".join(f"{k.ljust(width)}  {_cell(v)}\n" for k, v in payload.items())


def _cell(value):
    if value is None:
        return "-"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return " ".join(_cell(v) for v in value)
    return str(value)


def write_plot_data(path, header, columns):
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in zip(*columns):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


# --------------------------------------------------------------------------
# Commands

def cmd_bounds(cfg: RunConfig):
    m = cfg.manifold()
    report = spectral.bounds_report(m, cfg.radius, cfg.tol_eig, cfg.quadrature, picard=not cfg.no_picard)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "bounds",
        "metric": m.warping.name,
        "dim": m.n,
        "radius": cfg.radius,
        "lower_bound": report.lower,
        "cheng_upper": report.cheng_upper,
        "ricci_certified": report.ricci_status == "certified_nonneg",
        "ricci_status": report.ricci_status,
        "lambda1_shooting": report.lambda1,
        "lambda1_picard": report.lambda1_picard,
        "sandwich_ok": report.sandwich_ok,
        "diagnostics": report.diagnostics,
    }
    if cfg.emit_plot_data:
        prof = spectral.shooting_profile(m, cfg.radius, report.lambda1, samples=513)
        write_plot_data(cfg.emit_plot_data, ["t", "u"], [prof.t, prof.u])
    return payload, None, EXIT_OK if report.sandwich_ok else EXIT_SANDWICH


def _sweep_row(m, r, cfg):
    try:
        lower = spectral.bcg_lower_bound(m, r, cfg.quadrature)
        cheng = spectral.cheng_upper_bound(m, r)
        lam = spectral.first_eigenvalue(m, r, cfg.tol_eig, q=cfg.quadrature)
        return {"r": r, "lower_bound": lower, "cheng_upper": cheng.value, "lambda1": lam, "error": None}
    except WarpeigError as exc:
        return {"r": r, "lower_bound": None, "cheng_upper": None, "lambda1": None,
                "error": f"{type(exc).__name__}: {exc}"}


def cmd_sweep(cfg: RunConfig):
    m = cfg.manifold()
    lo, hi, steps = cfg.radius_range
    radii = [float(r) for r in np.linspace(lo, hi, steps)]
    if cfg.jobs > 1:
        with ThreadPoolExecutor(cfg.jobs) as pool:
            rows = list(pool.map(lambda r: _sweep_row(m, r, cfg), radii))
    else:
        rows = [_sweep_row(m, r, cfg) for r in radii]
    payload = {"schema_version": SCHEMA_VERSION, "command": "sweep", "metric": m.warping.name,
               "dim": m.n, "rows": rows}
    if cfg.emit_plot_data:
        def col(key):
            return [math.nan if row[key] is None else row[key] for row in rows]

        write_plot_data(cfg.emit_plot_data, ["r", "lower_bound", "cheng_upper", "lambda1"],
                        [radii, col("lower_bound"), col("cheng_upper"), col("lambda1")])
    ok = any(row["error"] is None for row in rows)
    return payload, "rows", EXIT_OK if ok else EXIT_USAGE


def cmd_classify(cfg: RunConfig):
    m = cfg.manifold()
    dyn = stochastic.dynamics_verdict(m, cfg.horizon, cfg.quadrature)
    v = dyn.stochastic
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "classify",
        "metric": m.warping.name,
        "dim": m.n,
        "verdict": v.verdict,
        "tail_slope": v.tail_slope,
        "partial_integral": v.partial_integral,
        "tail_estimate": v.tail_estimate,
        "horizons": v.horizons,
        "slopes": v.slopes,
        "tone_lower_bound": dyn.tone_lower_bound,
        "tone_positive": dyn.tone_positive,
        "transient_flag": dyn.transient_flag,
        "diagnostics": v.diagnostics,
    }
    if cfg.emit_plot_data:
        sigma = np.geomspace(0.01, v.horizons[-1], 200)
        ratio = [geometry.exit_ratio(m, s, cfg.quadrature) for s in sigma]
        write_plot_data(cfg.emit_plot_data, ["sigma", "exit_ratio"], [sigma, ratio])
    return payload, None, EXIT_OK


def cmd_tone(cfg: RunConfig):
    m = cfg.manifold()
    est = spectral.fundamental_tone(m, cfg.tone_tol, cfg.r_max, workers=cfg.jobs, eig_tol=cfg.tol_eig)
    try:
        bound = spectral.fundamental_tone_lower_bound(m, cfg.horizon, cfg.quadrature).value
    except WarpeigError:
        bound = None
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "tone",
        "metric": m.warping.name,
        "dim": m.n,
        "estimate": est.value,
        "converged": est.converged,
        "radii": est.radii,
        "values": est.values,
        "tone_lower_bound": bound,
    }
    if cfg.emit_plot_data:
        write_plot_data(cfg.emit_plot_data, ["r", "lambda1"], [est.radii, est.values])
    return payload, None, EXIT_OK if est.converged else EXIT_NOT_CONVERGED


COMMANDS = {"bounds": cmd_bounds, "sweep": cmd_sweep, "classify": cmd_classify, "tone": cmd_tone}


def _report_error(kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message)}) + "\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        payload, rows_key, code = COMMANDS[cfg.command](cfg)
    except (UsageError, WarpeigError, OSError, json.JSONDecodeError) as exc:
        _report_error(type(exc).__name__, exc)
        return EXIT_USAGE
    text = render(payload, cfg.format, rows_key)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
