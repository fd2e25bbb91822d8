"""Command-line front end: ``iwatsuka {bands,accheck,comparison,layer,gauge-debug}``.

Runs are described by a JSON file (``--config``) whose ``schema`` field must
be 1; the common flags override it. Exit codes: 0 success, 1 numerical
failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .bands import diagnose, export_sweep, sweep, tail_interval
from .comparison import convergence_study, write_convergence_csv
from .errors import ConfigError, IwatsukaError, NumericalError, ProfileError
from .fiber import SolverOptions, select_box
from .gauge import GaugeFunction, turning_points
from .layer import (builtin_curve, effective_profile, layer_ac_check, layer_bands, load_curve_csv,
                    write_curve_csv, write_effective_profile_csv)
from .profiles import Constant, Profile, ac_condition, catalog_entry, profile_from_dict, tail_bounds

__all__ = ["RunConfig", "parse_config", "run", "emit_plot_script", "main", "WORKFLOWS", "CONFIG_SCHEMA"]

WORKFLOWS = ("bands", "accheck", "comparison", "layer", "gauge-debug")
SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_OBJ = {"type": "object"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "workflow": {"enum": list(WORKFLOWS)},
        "profiles": {
            "type": "object", "additionalProperties": False,
            "properties": {"builtin": {"type": "string"}, "B": _OBJ, "W": _OBJ},
        },
        "xi": {
            "type": "object", "additionalProperties": False,
            "properties": {"min": _NUM, "max": _NUM, "count": {"type": "integer", "minimum": 1}},
        },
        "k": {"type": "integer", "minimum": 1},
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "h_max": _POS, "margin": _POS, "tol": _POS, "gap_tol": _POS, "decay_action": _POS,
                "workers": {"type": "integer", "minimum": 1},
                "box": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "search_box": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
            },
        },
        "diagnostics": {
            "type": "object", "additionalProperties": False,
            "properties": {"tail_tol": _POS, "osc_tol": _POS, "xi_tail": _POS},
        },
        "comparison": {
            "type": "object", "additionalProperties": False,
            "properties": {"omega": _POS, "omega_tilde": _POS, "x0": _NUM,
                           "alphas": {"type": "array", "items": _NUM, "minItems": 1},
                           "k": {"type": "integer", "minimum": 1}},
        },
        "layer": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "B0": _POS,
                "curve": {
                    "type": "object", "additionalProperties": False,
                    "properties": {"builtin": {"type": "string"}, "params": _OBJ, "csv": {"type": "string"}},
                },
            },
        },
        "gauge": {
            "type": "object", "additionalProperties": False,
            "properties": {"base_point": _NUM, "xi": {"type": "array", "items": _NUM, "minItems": 1},
                           "x_min": _NUM, "x_max": _NUM, "count": {"type": "integer", "minimum": 2}},
        },
        "output": {"type": "string"},
    },
}

# curve parameters given in degrees in config files
_DEGREE_KEYS = ("angle", "angle_in", "angle_out")


@dataclass
class RunConfig:
    workflow: str
    b: Profile | None = None
    w: Profile | None = None
    profile_name: str = ""
    xi_min: float = -40.0
    xi_max: float = 40.0
    xi_count: int = 161
    k: int = 3
    solver: SolverOptions = field(default_factory=SolverOptions)
    tail_tol: float = 5e-2
    osc_tol: float = 1e-6
    xi_tail: float | None = None
    comparison: dict = field(default_factory=lambda: {"omega": 1.0, "omega_tilde": 0.5, "x0": 0.0,
                                                      "alphas": [2.0, 4.0, 8.0, 16.0], "k": 2})
    curve: dict = field(default_factory=lambda: {"builtin": "circular_bend",
                                                 "params": {"radius": 2.0, "angle_in": 0.0,
                                                            "angle_out": 60.0}})
    B0: float = 1.0
    gauge: dict = field(default_factory=lambda: {"base_point": 0.0, "xi": [-10.0, 0.0, 10.0],
                                                 "x_min": -20.0, "x_max": 20.0, "count": 401})
    output: str | None = "out"
    plot: bool = False
    base_dir: str = "."

    def xi_grid(self) -> np.ndarray:
        if self.xi_count == 1:
            return np.array([self.xi_min])
        return np.linspace(self.xi_min, self.xi_max, self.xi_count)


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _schema_error(exc: jsonschema.ValidationError) -> ConfigError:
    where = "/".join(str(p) for p in exc.absolute_path) or "<top level>"
    return ConfigError(f"config error at {where}: {exc.message}")


def parse_config(path: str | None = None, workflow: str | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Validated RunConfig from a JSON file and/or flag overrides.

    ``overrides`` uses the flag names (k, xi_min, xi_max, xi_count, h_max,
    margin, box, workers, output, plot, builtin). Raises ConfigError.
    """
    raw = _load_json(path) if path else {"schema": SCHEMA_VERSION}
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise _schema_error(exc) from exc
    wf = raw.get("workflow", workflow)
    if workflow is not None and wf != workflow:
        raise ConfigError(f"config declares workflow {wf!r} but subcommand is {workflow!r}")
    if wf is None:
        raise ConfigError("no workflow given")
    cfg = RunConfig(wf, base_dir=os.path.dirname(os.path.abspath(path)) if path else os.getcwd())
    if wf == "accheck":
        cfg.output = None
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}

    prof = dict(raw.get("profiles", {}))
    if "builtin" in ov:
        prof = {"builtin": ov["builtin"]}
    if prof:
        _apply_profiles(cfg, prof)
    elif wf in ("bands", "accheck", "gauge-debug"):
        _apply_profiles(cfg, {"builtin": "iwatsuka-step"})

    xi = raw.get("xi", {})
    cfg.xi_min = float(ov.get("xi_min", xi.get("min", cfg.xi_min)))
    cfg.xi_max = float(ov.get("xi_max", xi.get("max", cfg.xi_max)))
    cfg.xi_count = int(ov.get("xi_count", xi.get("count", cfg.xi_count)))
    if cfg.xi_count < 1:
        raise ConfigError(f"xi/count must be >= 1, got {cfg.xi_count}")
    if not cfg.xi_min < cfg.xi_max and cfg.xi_count > 1:
        raise ConfigError(f"xi/min must be < xi/max, got {cfg.xi_min} >= {cfg.xi_max}")
    cfg.k = int(ov.get("k", raw.get("k", cfg.k)))
    if cfg.k < 1:
        raise ConfigError(f"k must be >= 1, got {cfg.k}")

    solver = dict(raw.get("solver", {}))
    for key in ("h_max", "margin", "box", "workers"):
        if key in ov:
            solver[key] = ov[key]
    for key in ("h_max", "margin", "tol", "gap_tol", "decay_action"):
        if key in solver and not solver[key] > 0:
            raise ConfigError(f"solver/{key} must be positive, got {solver[key]}")
    if "box" in solver:
        box = tuple(float(v) for v in solver["box"])
        if len(box) != 2 or not box[0] < box[1]:
            raise ConfigError(f"solver/box must be [left, right] with left < right, got {solver['box']}")
        solver["box"] = box
    if "search_box" in solver:
        solver["search_box"] = tuple(float(v) for v in solver["search_box"])
    if "workers" in solver and int(solver["workers"]) < 1:
        raise ConfigError("solver/workers must be >= 1")
    cfg.solver = SolverOptions(**solver)

    diag = raw.get("diagnostics", {})
    cfg.tail_tol = float(diag.get("tail_tol", cfg.tail_tol))
    cfg.osc_tol = float(diag.get("osc_tol", cfg.osc_tol))
    cfg.xi_tail = diag.get("xi_tail")

    if "comparison" in raw:
        cfg.comparison = {**cfg.comparison, **raw["comparison"]}
        alphas = cfg.comparison["alphas"]
        if any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise ConfigError("comparison/alphas must be strictly increasing")
    if "layer" in raw:
        cfg.B0 = float(raw["layer"].get("B0", cfg.B0))
        if "curve" in raw["layer"]:
            cfg.curve = dict(raw["layer"]["curve"])
            if ("builtin" in cfg.curve) == ("csv" in cfg.curve):
                raise ConfigError("layer/curve needs exactly one of 'builtin' or 'csv'")
    if "gauge" in raw:
        cfg.gauge = {**cfg.gauge, **raw["gauge"]}
    cfg.output = ov.get("output", raw.get("output", cfg.output))
    cfg.plot = bool(ov.get("plot", False))
    return cfg


def _apply_profiles(cfg: RunConfig, prof: dict) -> None:
    if "builtin" in prof:
        if set(prof) != {"builtin"}:
            raise ConfigError("profiles: 'builtin' cannot be combined with 'B'/'W'")
        try:
            entry = catalog_entry(prof["builtin"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"profiles/builtin: {exc}") from exc
        cfg.b, cfg.w, cfg.profile_name = entry.b, entry.w, entry.name
        return
    if "B" not in prof:
        raise ConfigError("profiles needs 'builtin' or a 'B' profile object")
    try:
        cfg.b = profile_from_dict(prof["B"], cfg.base_dir)
        cfg.w = profile_from_dict(prof["W"], cfg.base_dir) if "W" in prof else Constant(0.0)
    except ProfileError as exc:
        raise ConfigError(f"profiles: {exc}") from exc
    cfg.profile_name = "custom"


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _short(v: float) -> str:
    return f"{v:.6g}"


def _band_lines(sw, diag) -> list[str]:
    lines = []
    by_band = {}
    for e in diag.tail_report:
        by_band.setdefault(e.band, []).append(e)
    ac = diag.ac
    for v in diag.nonconstancy:
        parts = [f"band {v.band}:"]
        for e in by_band.get(v.band, []):
            if e.interval is None:
                parts.append(f"xi={_short(e.xi)} -> {_short(e.value)} ({e.tail_side} tail, not judged)")
            else:
                status = {True: "ok", False: "OUT", None: "n/a"}[e.ok]
                parts.append(f"xi={_short(e.xi)} -> {_short(e.value)} in "
                             f"[{_short(e.interval[0])}, {_short(e.interval[1])}] {status}")
        reasons = [name for name, flag in (("tail intervals", v.by_tail_intervals),
                                           ("divergence", v.by_divergence),
                                           ("oscillation", v.by_oscillation)) if flag]
        parts.append(f"nonconstant={'yes' if v.nonconstant else 'no'}"
                     + (f" ({', '.join(reasons)})" if reasons else ""))
        parts.append(f"AC={'true' if ac.verdict else 'false'} ({ac.matched_condition})")
        lines.append(" ".join(parts[:1]) + " " + "; ".join(parts[1:]))
    return lines


def _run_bands(cfg: RunConfig) -> int:
    sw = sweep(cfg.b, cfg.w, cfg.xi_grid(), cfg.k, cfg.solver)
    d = diagnose(sw, tail_tol=cfg.tail_tol, osc_tol=cfg.osc_tol, xi_tail=cfg.xi_tail)
    extra = {"workflow": "bands", "profile_name": cfg.profile_name,
             "defaults": {"tail_tol": cfg.tail_tol, "osc_tol": cfg.osc_tol, "xi_tail": cfg.xi_tail}}
    if cfg.output:
        csv_path, _ = export_sweep(sw, d, cfg.output, extra=extra)
        if cfg.plot:
            emit_plot_script(csv_path, os.path.join(cfg.output, "plot.gp"), tails=sw.tails)
    for line in _band_lines(sw, d):
        print(line)
    print(f"min gap {_short(d.min_gap)}" if math.isfinite(d.min_gap) else "min gap n/a (k=1)")
    return 0


def _run_accheck(cfg: RunConfig) -> int:
    t = tail_bounds(cfg.b, cfg.w)
    dec = ac_condition(t)
    out = {"profile": cfg.profile_name, "verdict": dec.verdict, "condition": dec.matched_condition,
           "margin": dec.margin, "all_matches": list(dec.all_matches), "heuristic": dec.heuristic,
           "tails": t.to_dict()}
    text = json.dumps(out, sort_keys=True)
    print(text)
    if cfg.output:
        os.makedirs(cfg.output, exist_ok=True)
        with open(os.path.join(cfg.output, "accheck.json"), "w") as fh:
            fh.write(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return 0


def _run_comparison(cfg: RunConfig) -> int:
    c = cfg.comparison
    table = convergence_study(float(c["omega"]), float(c["omega_tilde"]), float(c["x0"]),
                              c["alphas"], int(c["k"]), cfg.solver)
    if cfg.output:
        os.makedirs(cfg.output, exist_ok=True)
        write_convergence_csv(table, os.path.join(cfg.output, "convergence.csv"))
        meta = {"workflow": "comparison", "omega": table.omega, "omega_tilde": table.omega_tilde,
                "x0": table.x0, "k": table.k, "solver": cfg.solver.to_dict(),
                "empirical_rates": [[None if not math.isfinite(r) else float(r) for r in row]
                                    for row in table.empirical_rates()]}
        with open(os.path.join(cfg.output, "meta.json"), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    for a, s, e in zip(table.alphas, table.sigma, table.errors):
        print(f"alpha={_short(a)}: " + ", ".join(f"sigma_{n}={_short(v)} (err {e[n - 1]:.3e})"
                                                 for n, v in enumerate(s, start=1)))
    for n, start in enumerate(table.nonincreasing_from(), start=1):
        print(f"band {n}: error non-increasing from alpha={_short(table.alphas[start])}")
    return 0


def _build_curve(cfg: RunConfig):
    spec = cfg.curve
    if "csv" in spec:
        path = spec["csv"]
        if not os.path.isabs(path):
            path = os.path.join(cfg.base_dir, path)
        return load_curve_csv(path)
    params = dict(spec.get("params", {}))
    for key in _DEGREE_KEYS:
        if key in params:
            params[key] = math.radians(float(params[key]))
    return builtin_curve(spec["builtin"], **params)


def _run_layer(cfg: RunConfig) -> int:
    try:
        curve = _build_curve(cfg)
        e = effective_profile(curve, cfg.B0)
    except ProfileError as exc:
        raise ConfigError(f"layer/curve: {exc}") from exc
    res = layer_ac_check(e)
    print(json.dumps({"verdict": res.decision.verdict, "condition": res.decision.matched_condition,
                      "clause": res.clause, "swapped": res.swapped, "scaled_margin": res.scaled_margin,
                      "limit_clause": res.limit_clause}, sort_keys=True))
    sw = layer_bands(e, cfg.xi_grid(), cfg.k, cfg.solver)
    d = diagnose(sw, tail_tol=cfg.tail_tol, osc_tol=cfg.osc_tol, xi_tail=cfg.xi_tail)
    if cfg.output:
        os.makedirs(cfg.output, exist_ok=True)
        write_curve_csv(curve, os.path.join(cfg.output, "curve.csv"))
        write_effective_profile_csv(e, os.path.join(cfg.output, "effective_profile.csv"))
        extra = {"workflow": "layer", "B0": cfg.B0, "curve": {"name": curve.name, **cfg.curve},
                 "profiles": {"B": "B0 * dx/ds, see effective_profile.csv",
                              "W": "-kappa^2/4, see effective_profile.csv"},
                 "layer_verdict": res.to_dict()}
        csv_path, _ = export_sweep(sw, d, cfg.output, extra=extra)
        if cfg.plot:
            emit_plot_script(csv_path, os.path.join(cfg.output, "plot.gp"), tails=sw.tails)
    for line in _band_lines(sw, d):
        print(line)
    return 0


def _run_gauge_debug(cfg: RunConfig) -> int:
    gp = cfg.gauge
    g = GaugeFunction(cfg.b, float(gp["base_point"]))
    t = tail_bounds(cfg.b, cfg.w)
    xs = np.linspace(float(gp["x_min"]), float(gp["x_max"]), int(gp["count"]))
    a = g(xs)
    if cfg.output:
        os.makedirs(cfg.output, exist_ok=True)
        with open(os.path.join(cfg.output, "gauge.csv"), "w") as fh:
            fh.write("x,A_y\n")
            for xv, av in zip(xs, a):
                fh.write(f"{_fmt(xv)},{_fmt(av)}\n")
    for xi in gp["xi"]:
        tp = turning_points(g, float(xi), cfg.solver.search_box)
        row = {"xi": float(xi), "roots": list(tp.roots), "uniqueness": tp.uniqueness}
        try:
            grid = select_box(g, cfg.w, float(xi), cfg.k, cfg.solver.margin, tails=t,
                              h_max=cfg.solver.h_max, decay_action=cfg.solver.decay_action,
                              search_box=cfg.solver.search_box)
            row["box"] = [grid.left, grid.right]
            row["n_interior"] = grid.n_interior
        except NumericalError as exc:
            row["box"] = None
            row["error"] = str(exc)
        print(json.dumps(row, sort_keys=True))
    return 0


_RUNNERS = {"bands": _run_bands, "accheck": _run_accheck, "comparison": _run_comparison,
            "layer": _run_layer, "gauge-debug": _run_gauge_debug}


def run(cfg: RunConfig) -> int:
    """Execute one workflow; returns the process exit code."""
    try:
        return _RUNNERS[cfg.workflow](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def emit_plot_script(csv_path, out_path, tails=None) -> str:
    """Write a gnuplot script for ``bands.csv``; returns its path.

    The CSV is referenced relative to the script's directory. When ``tails``
    are given, horizontal guide-lines mark b_under (2n-1) + w_under on both
    half-lines for every band.
    """
    if not os.path.isfile(csv_path):
        raise FileNotFoundError(f"bands CSV not found: {csv_path}")
    with open(csv_path, newline="") as fh:
        header = next(csv.reader(fh), None)
    if not header or header[0] != "xi" or len(header) < 2:
        raise ValueError(f"{csv_path}: expected a header 'xi,lambda_1,...'")
    k = len(header) - 1
    rel = os.path.relpath(os.path.abspath(csv_path), os.path.dirname(os.path.abspath(out_path)))
    rel = rel.replace(os.sep, "/")
    lines = [
        "# band functions lambda_n(xi)",
        'set datafile separator ","',
        'set xlabel "xi"',
        'set ylabel "lambda"',
        "set key outside right autotitle columnhead",
    ]
    items = [f'"{rel}" using 1:{n + 1} with lines lw 2 title "lambda_{n}"'
             for n in range(1, k + 1)]
    if tails is not None:
        for n in range(1, k + 1):
            for side, dash in (("plus", 2), ("minus", 3)):
                level = tail_interval(tails, side, n)[0]
                items.append(f'{_fmt(level)} with lines dt {dash} lc rgb "gray" '
                             f'title "{side} tail n={n}"')
    lines.append("plot " + ", \\\n     ".join(items))
    text = "\n".join(lines) + "\n"
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    with open(out_path, "w") as fh:
        fh.write(text)
    return out_path


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", dest="output", help="output directory")
    common.add_argument("--k", type=int, help="number of bands")
    common.add_argument("--xi-min", type=float)
    common.add_argument("--xi-max", type=float)
    common.add_argument("--xi-count", type=int)
    common.add_argument("--h-max", type=float, help="largest grid spacing")
    common.add_argument("--margin", type=float, help="potential margin above the top level at the box walls")
    common.add_argument("--box", type=float, nargs=2, metavar=("LEFT", "RIGHT"),
                        help="fixed Dirichlet box instead of the adaptive one")
    common.add_argument("--workers", type=int, help="processes for the per-xi solves")
    common.add_argument("--builtin", help="builtin (B, W) pair, e.g. iwatsuka-step")
    common.add_argument("--plot", action="store_true", default=None, help="also write plot.gp")
    p = argparse.ArgumentParser(prog="iwatsuka", description="Band functions of Iwatsuka-type fiber operators.")
    sub = p.add_subparsers(dest="workflow", required=True)
    for name, help_ in (("bands", "band functions over a xi grid"),
                        ("accheck", "absolute-continuity verdict from the tail bounds"),
                        ("comparison", "convergence study of the comparison operator"),
                        ("layer", "curved thin layer in a homogeneous field"),
                        ("gauge-debug", "vector potential, turning points and boxes")):
        sub.add_parser(name, parents=[common], help=help_)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in ("output", "k", "xi_min", "xi_max", "xi_count", "h_max",
                                               "margin", "box", "workers", "builtin", "plot")}
    try:
        cfg = parse_config(args.config, args.workflow, overrides)
    except IwatsukaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
