"""Batch front-end.

    modcorr <command> --config FILE [--threads T] [--out DIR]

The config file holds ``key = value`` lines; ``#`` starts a comment.  Every
field is validated before any computation starts.  Each run writes

    <out>/<output>          CSV, fixed row order, floats with 17 significant digits
    <out>/<stem>.gp         gnuplot script reading the CSV
    <out>/manifest.json     config, version, threads, wall time, alpha name

Exit status: 0 success, 2 config error, 3 precondition violation,
4 cost-guard refusal, 5 precision loss.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from modcorr import __version__
from modcorr._threads import get_threads, set_threads
from modcorr.correlate import MAX_TUPLE_VISITS, CorrelationRequest, convergence_scan, estimated_tuples
from modcorr.counting import moment_scan
from modcorr.errors import ConfigError, CostGuardError, ModcorrError, PreconditionError
from modcorr.oscphase import (
    bound_exponential,
    bprocess_sum,
    oscillatory_integral_direct,
    stationary_phase_leading,
)
from modcorr.seqgen import Family, SequenceSpec, _check_args, parse_alpha, phases_dd
from modcorr.testfn import TestFunctionProduct, make_factor
from modcorr.weyl import theorem_threshold, threshold_scan, weyl_scan, weyl_sum_direct

COMMANDS = ("points", "correlate", "moments", "weyl", "bprocess", "thresholds", "spi-sweep")


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        v = float(text)
        if not v.is_integer():
            raise ValueError(f"{text!r} is not an integer") from None
        return int(v)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _list_of(conv):
    def parse(text: str):
        items = [s for s in (p.strip() for p in text.split(",")) if s]
        if not items:
            raise ValueError("empty list")
        return tuple(conv(s) for s in items)

    return parse


KEYS = {
    "family": str,
    "alpha": str,
    "beta": float,
    "m": _parse_int,
    "tau": float,
    "tau_list": _list_of(float),
    "N": _parse_int,
    "N_grid": _list_of(_parse_int),
    "k_max": _parse_int,
    "k_min": _parse_int,
    "k_list": _list_of(_parse_int),
    "fn_kind": str,
    "fn_radius": float,
    "fn_lo": float,
    "fn_hi": float,
    "n_cases": _parse_int,
    "tol": float,
    "compare_direct": _parse_bool,
    "record_timing": _parse_bool,
    "plot": _parse_bool,
    "output": str,
    "threads": _parse_int,
    "rng_seed": _parse_int,
}

REQUIRED = {
    "points": ("family", "alpha", "N"),
    "correlate": ("family", "alpha", "m", "tau", "N_grid"),
    "moments": ("family", "alpha", "m", "tau", "N_grid"),
    "weyl": ("family", "alpha", "N", "k_max"),
    "bprocess": ("alpha", "N_grid", "k_list"),
    "thresholds": ("family", "alpha", "m", "tau_list", "N_grid"),
    "spi-sweep": ("alpha", "N", "k_min", "k_max", "n_cases"),
}


@dataclass
class ExperimentConfig:
    command: str
    values: dict
    raw: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def __getitem__(self, key):
        return self.values[key]


def parse_config(text: str, command: str) -> ExperimentConfig:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    values, raw = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "command":
            if val != command:
                raise ConfigError(f"line {lineno}: config is for {val!r}, invoked as {command!r}")
            continue
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = KEYS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        raw[key] = val
    missing = [k for k in REQUIRED[command] if k not in values]
    if missing:
        raise ConfigError(f"{command} needs {', '.join(missing)}")
    return ExperimentConfig(command, values, raw)


def load_config(path: str, command: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, command)


def _spec(cfg: ExperimentConfig, default_family: str | None = None) -> SequenceSpec:
    fam = cfg.get("family", default_family)
    try:
        family = Family[fam.strip().upper()]
    except KeyError:
        raise ConfigError(f"unknown family {fam!r}; choose quadratic, sqrt or power") from None
    try:
        alpha, label = parse_alpha(cfg["alpha"])
    except PreconditionError as exc:
        raise ConfigError(str(exc)) from None
    return SequenceSpec(family, alpha, cfg.get("beta"), label)


def _test_function(cfg: ExperimentConfig) -> TestFunctionProduct:
    try:
        fac = make_factor(cfg.get("fn_kind", "bump"), cfg.get("fn_radius", 1.0), cfg.get("fn_lo"), cfg.get("fn_hi"))
    except PreconditionError as exc:
        raise ConfigError(str(exc)) from None
    return TestFunctionProduct.repeat(fac, cfg["m"] - 1)


def _ascending(grid, name):
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise PreconditionError(f"{name} must be strictly ascending")
    if grid[0] < 1:
        raise PreconditionError(f"{name} entries must be >= 1")


# ---------------------------------------------------------------------------
# validation: every check runs before any computation


def validate(cfg: ExperimentConfig) -> dict:
    """Build the objects a command needs, raising on any invalid field."""
    cmd = cfg.command
    if cfg.get("threads") is not None and cfg["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    if cmd == "bprocess":
        spec = _spec(cfg, "sqrt")
        if spec.family is not Family.SQRT:
            raise PreconditionError("bprocess needs family = sqrt")
    elif cmd == "spi-sweep":
        spec = _spec(cfg, "sqrt")
    else:
        spec = _spec(cfg)
    out = {"spec": spec}
    if cmd == "points":
        if cfg["N"] < 1:
            raise PreconditionError("N must be >= 1")
        phases_dd(spec, np.array([cfg["N"]]), 1)
    elif cmd == "correlate":
        grid = cfg["N_grid"]
        _ascending(grid, "N_grid")
        f = _test_function(cfg)
        for N in grid:
            CorrelationRequest(spec, cfg["m"], cfg["tau"], N, f)
            est = estimated_tuples(f, N, cfg["tau"])
            if est > MAX_TUPLE_VISITS:
                raise CostGuardError(f"N = {N}: about {est:.3g} tuple visits (limit {MAX_TUPLE_VISITS:.0e})")
            phases_dd(spec, np.array([N]), 1)
        out["f"] = f
    elif cmd == "moments":
        grid = cfg["N_grid"]
        _ascending(grid, "N_grid")
        if cfg["m"] < 1:
            raise PreconditionError("m must be >= 1")
        if not 0.0 < cfg["tau"] < 1.0:
            raise PreconditionError("tau must lie in (0, 1)")
        for N in grid:
            if N < 2:
                raise PreconditionError("window width L/N = N**-tau must be < 1; need N >= 2")
            phases_dd(spec, np.array([N]), 1)
    elif cmd == "weyl":
        if cfg["N"] < 1 or cfg["k_max"] < 1:
            raise PreconditionError("need N >= 1 and k_max >= 1")
        phases_dd(spec, np.array([cfg["N"]]), cfg["k_max"])
    elif cmd == "bprocess":
        grid = cfg["N_grid"]
        _ascending(grid, "N_grid")
        if grid[0] < 2 or min(cfg["k_list"]) < 1:
            raise PreconditionError("need N >= 2 and k >= 1")
        if cfg.get("compare_direct", True):
            phases_dd(spec, np.array([grid[-1]]), max(cfg["k_list"]))
    elif cmd == "thresholds":
        grid = cfg["N_grid"]
        _ascending(grid, "N_grid")
        if cfg["m"] not in (2, 3, 4):
            raise PreconditionError("m must be 2, 3 or 4")
        for tau in cfg["tau_list"]:
            if not 0.0 < tau < 1.0:
                raise PreconditionError(f"tau must lie in (0, 1), got {tau}")
        _check_args(spec, grid[-1], 1)
    elif cmd == "spi-sweep":
        if spec.alpha.hi <= 0:
            raise PreconditionError("spi-sweep needs alpha > 0")
        if cfg["N"] < 2:
            raise PreconditionError("N must be >= 2")
        if not 1 <= cfg["k_min"] <= cfg["k_max"]:
            raise PreconditionError("need 1 <= k_min <= k_max")
        if cfg["n_cases"] < 1:
            raise PreconditionError("n_cases must be >= 1")
        if not cfg.get("tol", 1e-9) >= 1e-12:
            raise PreconditionError("tol must be >= 1e-12")
        ka = float(spec.alpha) * cfg["k_max"]
        if math.floor(ka / 2.0 - 1e-12) < math.floor(ka / (2.0 * math.sqrt(cfg["N"]))) + 1:
            raise PreconditionError("no k in [k_min, k_max] has a stationary point inside (1, N)")
    return out


# ---------------------------------------------------------------------------
# commands; each returns (header, rows)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    return str(v)


def _status(err: str) -> str:
    return "ok" if not err else err.replace("\n", " ")


def cmd_points(cfg, ctx):
    from modcorr.seqgen import generate_points

    pts = generate_points(ctx["spec"], cfg["N"])
    header = ["n", "x"]
    rows = [[int(n), float(x)] for n, x in zip(pts.permutation, pts.values)]
    return header, rows


def cmd_correlate(cfg, ctx):
    spec = ctx["spec"]
    f = ctx["f"]
    header = ["spec", "N", "m", "tau", "fn", "smooth", "value", "poisson_target", "ratio", "n_tuples", "status"]
    rows = []
    for row in convergence_scan(spec, cfg["m"], cfg["tau"], f, cfg["N_grid"]):
        r = row.report
        if r is None:
            rows.append([spec.describe(), row.N, cfg["m"], cfg["tau"], f.label, f.smooth, None, None, None, None, _status(row.error)])
            if cfg.get("record_timing"):
                rows[-1].append(None)
        else:
            rows.append(
                [spec.describe(), r.N, r.m, r.tau, r.fn_label, f.smooth, r.value, r.poisson_target, r.ratio, r.n_tuples_counted, "ok"]
            )
            if cfg.get("record_timing"):
                rows[-1].append(r.elapsed)
    if cfg.get("record_timing"):
        header.append("seconds")
    return header, rows


def cmd_moments(cfg, ctx):
    spec = ctx["spec"]
    header = ["spec", "N", "m", "tau", "L", "moment", "target", "ratio", "status"]
    rows = []
    for row in moment_scan(spec, cfg["m"], cfg["tau"], cfg["N_grid"]):
        s = row.stat
        if s is None:
            rows.append([spec.describe(), row.N, cfg["m"], cfg["tau"], None, None, None, None, _status(row.error)])
        else:
            rows.append([spec.describe(), s.N, s.m, s.tau, s.L, s.exact_moment, s.target, s.ratio, "ok"])
    return header, rows


def cmd_weyl(cfg, ctx):
    spec = ctx["spec"]
    N = cfg["N"]
    scan = weyl_scan(spec, N, cfg["k_max"])
    header = ["spec", "N", "k", "magnitude", "bound", "ratio", "cum_abs", "cum_sq"]
    rows = []
    for i, k in enumerate(scan.ks):
        # Sqrt family: the exponential-sum bound; otherwise the trivial bound N
        bound = bound_exponential(N, int(k)) if spec.family is Family.SQRT and N >= 2 else float(N)
        mag = scan.magnitudes[i]
        rows.append([spec.describe(), N, int(k), mag, bound, mag / bound, scan.sum_abs[i], scan.sum_sq[i]])
    return header, rows


def cmd_bprocess(cfg, ctx):
    spec = ctx["spec"]
    direct = cfg.get("compare_direct", True)
    header = ["spec", "N", "k", "bprocess_re", "bprocess_im", "n_terms", "budget"]
    if direct:
        header += ["direct_re", "direct_im", "abs_diff", "criterion_bound", "within"]
    timing = cfg.get("record_timing")
    if timing:
        header += ["bprocess_seconds"] + (["direct_seconds"] if direct else [])
    rows = []
    for N in cfg["N_grid"]:
        for k in cfg["k_list"]:
            res = bprocess_sum(spec, N, k)
            v = res.record.value
            row = [spec.describe(), N, k, v.real, v.imag, res.n_terms, res.error_budget]
            if direct:
                d = weyl_sum_direct(spec, N, k)
                diff = abs(d.value - v)
                crit = 5.0 * bound_exponential(N, k)
                row += [d.value.real, d.value.imag, diff, crit, diff <= crit]
            if timing:
                row.append(res.record.elapsed)
                if direct:
                    row.append(d.elapsed)
            rows.append(row)
    return header, rows


def cmd_thresholds(cfg, ctx):
    spec = ctx["spec"]
    m = cfg["m"]
    header = ["spec", "m", "tau", "N", "M", "threshold", "inside", "E_m_rhs", "combined", "E_m", "E_m_minus_1", "status"]
    rows = []
    for r in threshold_scan(spec, m, cfg["tau_list"], cfg["N_grid"]):
        rep = r.report
        vals = [None] * 4 if rep is None else [rep.E_m_rhs, rep.combined, rep.per_level[0][1], rep.per_level[1][1]]
        rows.append([spec.describe(), m, r.tau, r.N, r.M, r.threshold, r.inside, *vals, _status(r.error)])
    return header, rows


def cmd_spi_sweep(cfg, ctx):
    spec = ctx["spec"]
    alpha = spec.alpha
    N = cfg["N"]
    tol = cfg.get("tol", 1e-9)
    rng = np.random.default_rng(cfg.get("rng_seed", 0))
    header = ["k", "r", "gamma", "leading_re", "leading_im", "oracle_re", "oracle_im", "envelope", "within_envelope"]
    rows = []
    attempts = 0
    while len(rows) < cfg["n_cases"]:
        attempts += 1
        if attempts > 100 * cfg["n_cases"]:
            raise PreconditionError("too few (k, r) pairs with a stationary point inside (1, N)")
        k = int(rng.integers(cfg["k_min"], cfg["k_max"] + 1))
        ka = float(alpha) * k
        r_lo = math.floor(ka / (2.0 * math.sqrt(N))) + 1
        r_hi = math.ceil(ka / 2.0) - 1
        if r_hi < r_lo:
            continue
        r = int(rng.integers(r_lo, r_hi + 1))
        s = stationary_phase_leading(k, r, alpha, N)
        o = oscillatory_integral_direct(k, r, alpha, 1.0, float(N), tol)
        within = abs(o - s.leading) <= s.envelope
        rows.append([k, r, s.gamma, s.leading.real, s.leading.imag, o.real, o.imag, s.envelope, within])
    return header, rows


HANDLERS = {
    "points": cmd_points,
    "correlate": cmd_correlate,
    "moments": cmd_moments,
    "weyl": cmd_weyl,
    "bprocess": cmd_bprocess,
    "thresholds": cmd_thresholds,
    "spi-sweep": cmd_spi_sweep,
}

# (x column, y column, log-x, log-y) for the generated gnuplot script
PLOTS = {
    "points": ("n", "x", False, False),
    "correlate": ("N", "ratio", True, False),
    "moments": ("N", "ratio", True, False),
    "weyl": ("k", "ratio", True, False),
    "bprocess": ("k", "abs_diff", True, True),
    "thresholds": ("N", "combined", True, True),
    "spi-sweep": ("k", "envelope", False, True),
}


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _plot_script(command: str, csv_name: str, header) -> str:
    x, y, logx, logy = PLOTS[command]
    if command == "bprocess" and "abs_diff" not in header:
        y = "budget"
    xi, yi = header.index(x) + 1, header.index(y) + 1
    lines = [
        "set datafile separator ','",
        "set key off",
        f"set xlabel '{x}'",
        f"set ylabel '{y}'",
    ]
    if logx:
        lines.append("set logscale x")
    if logy:
        lines.append("set logscale y")
    lines.append(f"plot '{csv_name}' every ::1 using {xi}:{yi} with linespoints")
    return "\n".join(lines) + "\n"


def run(cfg: ExperimentConfig, out_dir: str = ".", threads: int | None = None) -> int:
    """Validate, compute and write the artifacts.  Returns the exit status."""
    t0 = time.perf_counter()
    ctx = validate(cfg)
    nthreads = threads if threads is not None else cfg.get("threads")
    if nthreads is not None:
        if nthreads < 1:
            raise ConfigError("threads must be >= 1")
        set_threads(nthreads)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from None
    if not os.access(out_dir, os.W_OK):
        raise ConfigError(f"output directory {out_dir} is not writable")
    header, rows = HANDLERS[cfg.command](cfg, ctx)
    csv_name = cfg.get("output", f"{cfg.command}.csv")
    with open(os.path.join(out_dir, csv_name), "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(header, rows))
    stem = os.path.splitext(csv_name)[0]
    if cfg.get("plot", True):
        with open(os.path.join(out_dir, stem + ".gp"), "w", encoding="utf-8") as fh:
            fh.write(_plot_script(cfg.command, csv_name, header))
    spec = ctx["spec"]
    manifest = {
        "command": cfg.command,
        "config": cfg.raw,
        "version": __version__,
        "threads": get_threads(),
        "wall_time_s": time.perf_counter() - t0,
        "alpha": {"name": spec.label, "hi": spec.alpha.hi, "lo": spec.alpha.lo},
        "sequence": spec.describe(),
        "csv": csv_name,
        "rows": len(rows),
    }
    if cfg.command in ("thresholds",):
        manifest["threshold"] = theorem_threshold(spec, cfg["m"])
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modcorr", description="Experiments on sequences modulo one.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--threads", type=int, default=None, help="worker threads (overrides the config)")
    p.add_argument("--out", default=".", help="output directory")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = load_config(args.config, args.command)
        return run(cfg, args.out, args.threads)
    except ModcorrError as exc:
        print(f"modcorr: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
