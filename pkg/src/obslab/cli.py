"""obslab command line: simulate, freqresp, sweep, compare.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import config
from .errors import (BudgetExceededError, ConfigError, DegenerateInputError, IntegrationDivergedError,
                     InvalidArgumentError, ObslabError, SingularSystemError)
from .estimators import freq_response, highgain_matrices
from .metrics import compute_metrics, has_estimates, metrics_json
from .numkit import observer_noise_tf
from .plotscript import compare_plot_script, trace_plot_script
from .simkit import run_closed_loop, steady_observer_error

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
NUMERIC_ERRORS = (IntegrationDivergedError, DegenerateInputError, SingularSystemError)


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(float(v), ".17g")


def _scenario(args):
    if getattr(args, "preset", None):
        s = config.load_preset(args.preset)
    elif getattr(args, "config", None):
        s = config.load_scenario(args.config)
    else:
        raise UsageError("give a scenario with -c FILE or --preset NAME")
    if getattr(args, "seed", None) is not None:
        s = config.with_seed(s, args.seed)
    return s


def write_run(s, outdir: Path):
    outdir.mkdir(parents=True, exist_ok=True)
    trace = run_closed_loop(s)
    trace.to_csv(outdir / "trace.csv")
    metrics = compute_metrics(trace)
    (outdir / "metrics.json").write_text(metrics_json(metrics))
    (outdir / "plot.gp").write_text(trace_plot_script(trace.columns, estimates=has_estimates(trace)))
    (outdir / "scenario.toml").write_text(config.dump_scenario(s))
    return trace, metrics


def cmd_simulate(args) -> int:
    s = _scenario(args)
    t0 = time.perf_counter()
    _, metrics = write_run(s, Path(args.output))
    print(f"{s.name}: {s.nsteps} steps in {time.perf_counter() - t0:.2f} s; "
          f"max|e1| after settle = {metrics['max_abs_e1_after_settle']:.3g}; output in {args.output}")
    return EXIT_OK


def cmd_freqresp(args) -> int:
    s = _scenario(args)
    gains = s.estimator.gains(s.n)
    if gains is None:
        raise UsageError("freqresp needs an [estimator] section with kind != none")
    if not (0 < args.wmin < args.wmax):
        raise UsageError("need 0 < --wmin < --wmax (ascending range)")
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    if not 1 <= args.channel <= gains.n + 1:
        raise UsageError(f"--channel must be within 1..{gains.n + 1}")
    a_hg, l_hg = highgain_matrices(gains)
    buf = io.StringIO()
    buf.write(f"# obslab freqresp; channel {args.channel}; epsilon {gains.epsilon!r}; a {list(gains.a)}; "
              "phase in radians\n")
    buf.write("omega,mag_ic,phase_ic,mag_hg,phase_hg\n")
    for w in np.logspace(math.log10(args.wmin), math.log10(args.wmax), args.points):
        h_ic = freq_response(gains, args.channel, w)
        h_hg = observer_noise_tf(a_hg, l_hg, args.channel, w)
        buf.write(",".join(_fmt(v) for v in (w, abs(h_ic), np.angle(h_ic), abs(h_hg), np.angle(h_hg))) + "\n")
    _write_text(args.output, buf.getvalue())
    return EXIT_OK


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _sweep_one(job):
    base, param, value = job
    t0 = time.perf_counter()
    row = {"value": value, "status": "ok", "steady_z": math.nan, "rms_e1": math.nan,
           "runtime_s": math.nan, "message": ""}
    try:
        s = config.set_parameter(base, param, value)
        s.validate()
    except (ConfigError, InvalidArgumentError, BudgetExceededError) as exc:
        row.update(status="rejected", message=str(exc))
        return row
    try:
        trace = run_closed_loop(s)
    except ObslabError as exc:
        row.update(status="failed", message=str(exc), runtime_s=time.perf_counter() - t0)
        return row
    if has_estimates(trace):
        row["steady_z"] = steady_observer_error(trace, 0.5 * s.t_end)
    w = trace.t >= 0.5 * s.t_end
    row["rms_e1"] = float(np.sqrt(np.mean(trace["e1"][w] ** 2)))
    row["runtime_s"] = time.perf_counter() - t0
    return row


def worker_count(requested: Optional[int] = None) -> int:
    cap = os.environ.get("OBSLAB_THREADS")
    n = requested or (int(cap) if cap else (os.cpu_count() or 1))
    if cap:
        n = min(n, int(cap))
    return max(1, n)


def run_sweep(base, param: str, values: List[float], workers: int = 1):
    jobs = [(base, param, v) for v in values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(j) for j in jobs]


def sweep_csv(param: str, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# obslab sweep over {param}; steady_z = max ||z|| over the second half of the run\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "status", "steady_z", "rms_e1", "runtime_s", "message"])
    for r in rows:
        w.writerow([_fmt(r["value"]), r["status"], _fmt(r["steady_z"]), _fmt(r["rms_e1"]),
                    _fmt(r["runtime_s"]), r["message"]])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    base = _scenario(args)
    config.resolve_parameter(args.param)
    rows = run_sweep(base, args.param, args.values, worker_count(args.threads))
    _write_text(args.output, sweep_csv(args.param, rows))
    for r in rows:
        print(f"{args.param}={r['value']:g}: {r['status']} steady_z={_fmt(r['steady_z'])} {r['message']}")
    return EXIT_OK if any(r["status"] == "ok" for r in rows) else EXIT_NUMERIC


COMPARE_COLUMNS = ("max_abs_e1_after_settle", "rms_e1", "fhat_rel_error", "max_abs_u", "saturation_duty",
                   "velocity_rms_error", "noise_amplification")
COMPARE_PRESETS = ("fig3", "fig4", "fig5")


def cmd_compare(args) -> int:
    names = [p.strip() for p in args.presets.split(",") if p.strip()]
    for name in names:
        if name not in COMPARE_PRESETS:
            raise UsageError(f"unknown preset {name!r} for compare; choose from {', '.join(COMPARE_PRESETS)}")
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    rows, runs = [], {}
    for name in names:
        s = config.load_preset(name)
        if args.seed is not None:
            s = config.with_seed(s, args.seed)
        try:
            trace, m = write_run(s, outdir / name)
            runs[name] = trace.columns
            rows.append([name, "ok"] + [_fmt(m[c]) for c in COMPARE_COLUMNS])
        except ObslabError as exc:
            rows.append([name, f"failed: {exc}"] + [""] * len(COMPARE_COLUMNS))
    buf = io.StringIO()
    buf.write("# obslab compare; metrics over t >= 2 s; velocity columns only for runs with estimates\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["preset", "status", *COMPARE_COLUMNS])
    w.writerows(rows)
    (outdir / "compare.csv").write_text(buf.getvalue())
    if runs:
        (outdir / "compare.gp").write_text(compare_plot_script(runs))
    print(buf.getvalue(), end="")
    return EXIT_OK if runs else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="obslab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_opts(sp):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("-c", "--config", help="scenario TOML file")
        src.add_argument("--preset", choices=config.PRESETS, help="builtin scenario")
        sp.add_argument("--seed", type=int, help="override the noise seed")

    sp = sub.add_parser("simulate", help="run one scenario and write trace.csv, metrics.json, plot.gp")
    scenario_opts(sp)
    sp.add_argument("-o", "--output", required=True, help="output directory")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("freqresp", help="tabulate integral-chain vs classical high-gain frequency response")
    scenario_opts(sp)
    sp.add_argument("--channel", type=int, default=1)
    sp.add_argument("--wmin", type=float, default=1e-3)
    sp.add_argument("--wmax", type=float, default=1e5)
    sp.add_argument("--points", type=int, default=200)
    sp.add_argument("-o", "--output", default="-", help="CSV path (default stdout)")
    sp.set_defaults(func=cmd_freqresp)

    sp = sub.add_parser("sweep", help="rerun a scenario over values of one parameter")
    scenario_opts(sp)
    sp.add_argument("--param", default="epsilon")
    sp.add_argument("--values", type=float, nargs="+", required=True)
    sp.add_argument("--threads", type=int, help="worker processes (capped by OBSLAB_THREADS)")
    sp.add_argument("-o", "--output", default="-", help="summary CSV path (default stdout)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("compare", help="run fig3/fig4/fig5 side by side")
    sp.add_argument("--presets", default="fig3,fig4,fig5")
    sp.add_argument("--seed", type=int)
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, InvalidArgumentError, BudgetExceededError) as exc:
        print(f"obslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"obslab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
