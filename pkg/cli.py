"""Command-line front end: every computation as a subcommand writing CSV or JSON.

Usage examples::

    python cli.py wln --state fock:1
    python cli.py delta --state cubic:0.1,0.5
    python cli.py sweep cubic --u 0.05:1.0:20
    python cli.py concentrate --input fock:1 --detector het --T 0.5 --c 0.01:2:50 --logspace
    python cli.py check convex-roof --N 2..5 --trials 1000 --seed 7
"""

import argparse
import csv
import json
import logging
import math
import sys
from functools import partial
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from config import DEFAULT_TOLERANCES, RunConfig, Tolerances, VERSION, configure_logging
from errors import InvalidArgumentError, NonGaussianityError
from fock_core import ModeLayout, mean_photon_number
import gaussian_calculus
import phase_space
import property_checks
import protocols
import state_factory

logger = logging.getLogger("cli")

COUNTEREXAMPLE_ALPHA = 2.5
COUNTEREXAMPLE_HALF_ANGLE = math.pi / 6
CONVEX_ROOF_FLOOR = -1e-6


# --- argument grammars ------------------------------------------------------

def parse_range(text: str, logspace: bool = False) -> np.ndarray:
    """``lo:hi:n`` (inclusive), a comma list, or a single value."""
    text = str(text).strip()
    try:
        if ":" not in text:
            values = np.array([float(v) for v in text.split(",") if v.strip()])
        else:
            lo, hi, n = text.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise InvalidArgumentError(f"cannot parse range {text!r}; expected lo:hi:n or a,b,c") from None
    if ":" not in text:
        if values.size == 0:
            raise InvalidArgumentError("empty value list")
        return values
    if n < 1:
        raise InvalidArgumentError(f"range {text!r} needs at least one point")
    if logspace:
        if lo <= 0 or hi <= 0:
            raise InvalidArgumentError(f"log-spaced range {text!r} needs positive bounds")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def parse_int_range(text: str) -> List[int]:
    """``2..5`` or ``2,3,5``."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidArgumentError(f"cannot parse integer range {text!r}; expected lo..hi or a,b,c") from None


# --- output -----------------------------------------------------------------

def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return str(value)


def to_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default)


def _format_cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_csv(handle, rows: Sequence[dict], columns: Sequence[str], header: Dict[str, object]) -> None:
    for key, value in header.items():
        handle.write(f"# {key}={value}\n")
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_cell(row.get(c, "")) for c in columns])


def emit_table(cfg: RunConfig, output: Optional[str], name: str, rows: Sequence[dict],
               columns: Sequence[str], extra: Optional[dict] = None) -> Optional[Path]:
    """Write rows as CSV (with provenance block) or JSON; ``-`` means stdout."""
    header = {**cfg.provenance(), "command": name, **(extra or {})}
    if output == "-":
        if cfg.fmt == "csv":
            write_csv(sys.stdout, rows, columns, header)
        else:
            print(to_json({"provenance": header, "rows": [{c: r.get(c) for c in columns} for r in rows]}))
        return None
    path = Path(output) if output else cfg.output_dir / f"{name}.{cfg.fmt}"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        if cfg.fmt == "csv":
            write_csv(f, rows, columns, header)
        else:
            f.write(to_json({"provenance": header, "rows": [{c: r.get(c) for c in columns} for r in rows]}))
            f.write("\n")
    logger.info("wrote %d rows to %s", len(rows), path)
    return path


def emit_json(output: Optional[str], payload: dict) -> None:
    text = to_json(payload)
    if output and output != "-":
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
        logger.info("wrote %s", path)
    else:
        print(text)


def _record(kind: str, parameters: dict, result: dict, converged: bool, gaps: Iterable = ()) -> None:
    from app import create_app
    from database import record_run

    app = create_app()
    with app.app_context():
        run = record_run(kind, parameters, result, converged, list(gaps), VERSION)
        logger.info("recorded run %d (%s)", run.id, kind)


# --- shared computations (also used by the web API) ------------------------

def wln_summary(state_text: str, dim: Optional[int] = None, tol: Tolerances = DEFAULT_TOLERANCES,
                half_width: Optional[float] = None) -> dict:
    state = state_factory.build_text(state_text, dim, tol)
    report = phase_space.negativity_report(state, tol, half_width)
    return {"state": state_text, "wln": report.wln, "negativity": report.negativity,
            "abs_integral": report.abs_integral, "dim_used": list(report.dim_used),
            "grid": report.grid, "evaluations": report.evaluations}


def delta_summary(state_text: str, dim: Optional[int] = None, tol: Tolerances = DEFAULT_TOLERANCES) -> dict:
    spec = state_factory.parse_state(state_text)
    layout = ModeLayout(tuple([dim] * spec.n_modes)) if dim else None
    state = state_factory.build(spec, layout, tol)
    numeric = gaussian_calculus.delta_pure(state, tol=tol)
    closed = gaussian_calculus.delta_closed_form(spec)
    payload = {"state": state_text, "delta_numeric": numeric, "dim_used": list(state.layout.dims)}
    if closed is not None:
        payload["delta_closed_form"] = float(closed)
        payload["difference"] = numeric - float(closed)
    return payload


# --- subcommands ------------------------------------------------------------

def cmd_wln(args, cfg: RunConfig) -> int:
    payload = wln_summary(args.state, cfg.dim, cfg.tolerances, args.half_width)
    emit_json(args.output, payload)
    if args.record:
        _record("wln", {"state": args.state, "dim": cfg.dim}, payload, True)
    return 0


def cmd_delta(args, cfg: RunConfig) -> int:
    payload = delta_summary(args.state, cfg.dim, cfg.tolerances)
    emit_json(args.output, payload)
    if args.record:
        _record("delta", {"state": args.state, "dim": cfg.dim}, payload, True)
    return 0


def _failed_row(row: dict, error: Exception) -> dict:
    logger.warning("point %s failed: %s", row, error)
    return {**row, "error": str(error)}


def _cubic_point(u: float, dim: Optional[int], tol: Tolerances) -> dict:
    r = state_factory.energy_optimal_squeezing(u)
    row = {"u": u, "gamma": u * math.exp(-3 * r), "r": r, "delta_closed": gaussian_calculus.delta_cubic_closed(u)}
    try:
        state = state_factory.cubic_from_u(u, dim, tol)
        row.update(delta=gaussian_calculus.delta_pure(state, tol=tol), wln=phase_space.wln(state, tol))
    except NonGaussianityError as e:
        row = _failed_row(row, e)
    return row


def _addsub_point(r: float, alpha: float, tol: Tolerances) -> dict:
    row = {"alpha": alpha, "r": r}
    try:
        sub = state_factory.build(state_factory.StateSpec("sub", {"alpha": alpha, "r": r}), None, tol)
        add = state_factory.build(state_factory.StateSpec("add", {"alpha": alpha, "r": r}), None, tol)
        row.update(wln_sub=phase_space.wln(sub, tol), wln_add=phase_space.wln(add, tol),
                   wln_sub_two_level=phase_space.wln(state_factory.two_level_sub(alpha, r), tol),
                   wln_add_two_level=phase_space.wln(state_factory.two_level_add(alpha, r), tol),
                   delta_sub=gaussian_calculus.delta_pure(sub, tol=tol),
                   delta_add=gaussian_calculus.delta_pure(add, tol=tol))
    except NonGaussianityError as e:
        row = _failed_row(row, e)
    return row


def _cat_point(alpha: float, phi: float, theta: float, dim: Optional[int], tol: Tolerances) -> dict:
    row = {"alpha": alpha, "phi": phi, "theta": theta}
    try:
        spec = state_factory.StateSpec("cat", {"alpha": alpha, "phi": phi, "theta": theta})
        state = state_factory.build(spec, ModeLayout.of(dim) if dim else None, tol)
        row.update(nbar=mean_photon_number(state), delta=gaussian_calculus.delta_pure(state, tol=tol),
                   wln=phase_space.wln(state, tol))
    except NonGaussianityError as e:
        row = _failed_row(row, e)
    return row


def _sweep_cubic(args, cfg: RunConfig):
    job = partial(_cubic_point, dim=cfg.dim, tol=cfg.tolerances)
    rows = protocols.parallel_map(job, [float(u) for u in parse_range(args.u)], cfg.workers, "cubic", args.progress)
    return rows, ["u", "gamma", "r", "delta", "delta_closed", "wln"]


def _sweep_addsub(args, cfg: RunConfig):
    job = partial(_addsub_point, alpha=args.alpha, tol=cfg.tolerances)
    rows = protocols.parallel_map(job, [float(r) for r in parse_range(args.r)], cfg.workers, "addsub", args.progress)
    return rows, ["alpha", "r", "wln_sub", "wln_add", "wln_sub_two_level", "wln_add_two_level",
                  "delta_sub", "delta_add"]


def _sweep_cat(args, cfg: RunConfig):
    job = partial(_cat_point, phi=args.phi, theta=args.theta, dim=cfg.dim, tol=cfg.tolerances)
    alphas = [float(a) for a in parse_range(args.alpha)]
    rows = protocols.parallel_map(job, alphas, cfg.workers, "cat", args.progress)
    return rows, ["alpha", "phi", "theta", "nbar", "delta", "wln"]


def _sweep_lossy(args, cfg: RunConfig):
    cs = parse_range(args.c, args.logspace)
    rows = protocols.lossy_sweep(parse_range(args.beta), cs, args.T, cfg.tolerances, cfg.workers, args.progress)
    return rows, ["beta", "T", "c", "p", "wln_out", "eta", "epsilon"]


def _sweep_fock(args, cfg: RunConfig):
    cs = parse_range(args.c, args.logspace)
    rows = protocols.fock_sweep(parse_int_range(args.n), cs, args.T, cfg.tolerances, cfg.workers, args.progress)
    return rows, ["n", "T", "c", "p", "wln_out", "eta", "epsilon", "ratio"]


SWEEPS = {"cubic": _sweep_cubic, "addsub": _sweep_addsub, "cat": _sweep_cat,
          "lossy": _sweep_lossy, "fock": _sweep_fock}


def _converged(rows: Sequence[dict], columns: Sequence[str]) -> bool:
    for row in rows:
        if "error" in row:
            return False
        for c in columns:
            value = row.get(c)
            if isinstance(value, float) and math.isnan(value):
                return False
    return True


def cmd_sweep(args, cfg: RunConfig) -> int:
    rows, columns = SWEEPS[args.family](args, cfg)
    emit_table(cfg, args.output, f"sweep_{args.family}", rows, columns)
    ok = _converged(rows, columns)
    if args.record:
        _record(f"sweep_{args.family}", vars_for_record(args), {"rows": rows}, ok)
    return 0 if ok else 1


def _frontier_points(task, tol: Tolerances):
    family, nbar = task
    return gaussian_calculus.energy_frontier(family, [nbar], tol)


def cmd_frontier(args, cfg: RunConfig) -> int:
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    tasks = [(family, float(n)) for family in families for n in parse_range(args.nbar)]
    job = partial(_frontier_points, tol=cfg.tolerances)
    points = [p for chunk in protocols.parallel_map(job, tasks, cfg.workers, "frontier", args.progress)
              for p in chunk]
    rows = [{**p.row(), "converged": p.converged} for p in points]
    emit_table(cfg, args.output, "frontier", rows, ["nbar", "family", "wln", "params", "converged"])
    ok = all(p.converged for p in points)
    if args.record:
        _record("frontier", vars_for_record(args), {"rows": rows}, ok)
    return 0 if ok else 1


def cmd_concentrate(args, cfg: RunConfig) -> int:
    Ts = parse_range(args.T) if args.T else protocols.DEFAULT_TRANSMISSIVITIES
    cs = parse_range(args.c, args.logspace)
    rows = protocols.concentration_sweep(args.input, args.detector, Ts, cs, cfg.dim, args.center, args.mirrored,
                                         cfg.workers, cfg.tolerances, progress=args.progress)
    columns = ["T", "c", "p", "wln_out", "eta", "epsilon"]
    emit_table(cfg, args.output, "concentrate", rows, columns,
               {"input": args.input, "detector": args.detector})
    ok = _converged(rows, columns)
    if args.record:
        _record("concentrate", vars_for_record(args), {"rows": rows}, ok)
    return 0 if ok else 1


def cmd_counterexample(args, cfg: RunConfig) -> int:
    window = protocols.DetectorWindow.heterodyne_sector(args.a1, math.inf, -args.th, args.th)
    betas = parse_range(args.beta)
    results, best = protocols.counterexample_scan(betas, window, cfg.tolerances, progress=args.progress)
    payload = {"window": window.describe(), "target": protocols.COUNTEREXAMPLE_TARGET,
               "best": best.row() if best else None, "scan": [r.row() for r in results],
               "provenance": cfg.provenance()}
    emit_json(args.output, payload)
    if args.record:
        _record("counterexample", vars_for_record(args), payload, best is not None)
    return 0 if best is not None and best.delta_wln > 0 else 1


def cmd_check(args, cfg: RunConfig) -> int:
    if args.check == "monotones":
        report = property_checks.monotone_axiom_suite(cfg.seed, args.trials, cfg.tolerances)
        print(report.to_json())
        rows = [{"name": c.name, "passed": c.passed, "worst_margin": c.worst_margin,
                 "tolerance": c.tolerance, "cases": c.cases} for c in report.checks]
        if args.output:
            emit_table(cfg, args.output, "check_monotones", rows,
                       ["name", "passed", "worst_margin", "tolerance", "cases"])
        if args.record:
            _record("monotones", vars_for_record(args), json.loads(report.to_json()), report.passed)
        return 0 if report.passed else 1

    dims = parse_int_range(args.N)
    if not dims:
        raise InvalidArgumentError("no local dimensions requested")
    detectors = [d.strip() for d in args.detectors.split(",") if d.strip()]
    records = property_checks.convex_roof_check(dims, args.trials, cfg.seed, detectors, cfg.tolerances,
                                                progress=args.progress)
    summary = property_checks.summarize_gaps(records)
    rows = [{"detector": r.detector, "N": r.local_dim, "trial": r.trial, "delta_gap": r.delta_gap,
             "delta_state": r.delta_state, "coverage": r.coverage, "digest": r.digest} for r in records]
    emit_table(cfg, args.output, "convex_roof", rows,
               ["detector", "N", "trial", "delta_gap", "delta_state", "coverage", "digest"],
               {"rng": property_checks.RNG_ALGORITHM})
    worst = min(r.delta_gap for r in records)
    ok = worst >= CONVEX_ROOF_FLOOR
    print(to_json({"summary": summary, "min_gap": worst, "passed": ok}))
    if args.record:
        _record("convex_roof", vars_for_record(args), {"summary": summary, "min_gap": worst}, ok, records)
    return 0 if ok else 1


def vars_for_record(args) -> dict:
    skip = {"handler", "record", "verbose", "log_file", "progress"}
    return {k: v for k, v in vars(args).items() if k not in skip}


# --- parser -----------------------------------------------------------------

GLOBAL_DEFAULTS = {"verbose": False, "log_file": None, "output": None, "fmt": "csv", "seed": 0, "workers": 1,
                   "dim": None, "tol": None, "leakage": None, "record": False, "progress": False}


def _shared_options(suppress: bool) -> argparse.ArgumentParser:
    """Options accepted both before and after the subcommand.

    The subcommand copies use SUPPRESS so that a value given only before the
    subcommand is not overwritten by the subparser's default.
    """
    parent = argparse.ArgumentParser(add_help=False)

    def default(name):
        return argparse.SUPPRESS if suppress else GLOBAL_DEFAULTS[name]

    parent.add_argument("--verbose", "-v", action="store_true", default=default("verbose"), help="debug logging")
    parent.add_argument("--log-file", default=default("log_file"), help="mirror log output to this file")
    parent.add_argument("--output", "-o", default=default("output"), help="output file ('-' for stdout)")
    parent.add_argument("--format", dest="fmt", choices=("csv", "json"), default=default("fmt"))
    parent.add_argument("--seed", type=int, default=default("seed"))
    parent.add_argument("--workers", type=int, default=default("workers"), help="worker processes for sweeps")
    parent.add_argument("--dim", type=int, default=default("dim"), help="Fock cutoff per mode (default: automatic)")
    parent.add_argument("--tol", type=float, default=default("tol"), help="integration tolerance")
    parent.add_argument("--leakage", type=float, default=default("leakage"), help="truncation leakage budget")
    parent.add_argument("--record", action="store_true", default=default("record"),
                        help="store the run in the results database")
    parent.add_argument("--progress", action="store_true", default=default("progress"), help="show progress bars")
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = _shared_options(suppress=True)
    parser = argparse.ArgumentParser(prog="nongauss", description="Non-Gaussianity and Wigner negativity toolkit",
                                     parents=[_shared_options(suppress=False)])
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wln", parents=[common], help="Wigner logarithmic negativity of a state")
    p.add_argument("--state", required=True)
    p.add_argument("--half-width", type=float, default=None)
    p.set_defaults(handler=cmd_wln)

    p = sub.add_parser("delta", parents=[common], help="relative entropy of non-Gaussianity of a pure state")
    p.add_argument("--state", required=True)
    p.set_defaults(handler=cmd_delta)

    p = sub.add_parser("sweep", parents=[common], help="parameter sweeps of state families")
    families = p.add_subparsers(dest="family", required=True)
    s = families.add_parser("cubic", parents=[common])
    s.add_argument("--u", required=True, help="lo:hi:n")
    s = families.add_parser("addsub", parents=[common])
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--r", required=True, help="lo:hi:n")
    s = families.add_parser("cat", parents=[common])
    s.add_argument("--phi", type=float, default=math.pi / 4)
    s.add_argument("--theta", type=float, default=math.pi)
    s.add_argument("--alpha", required=True, help="lo:hi:n")
    s = families.add_parser("lossy", parents=[common])
    s.add_argument("--beta", default="0.5,0.8,0.95")
    s.add_argument("--c", required=True)
    s.add_argument("--T", type=float, default=0.5)
    s.add_argument("--logspace", action="store_true")
    s = families.add_parser("fock", parents=[common])
    s.add_argument("--n", default="1..5")
    s.add_argument("--c", required=True)
    s.add_argument("--T", type=float, default=0.5)
    s.add_argument("--logspace", action="store_true")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("frontier", parents=[common], help="maximal WLN per family at fixed mean energy")
    p.add_argument("--families", default=",".join(gaussian_calculus.FRONTIER_FAMILIES))
    p.add_argument("--nbar", required=True, help="lo:hi:n")
    p.set_defaults(handler=cmd_frontier)

    p = sub.add_parser("concentrate", parents=[common], help="two-copy Gaussian concentration sweep")
    p.add_argument("--input", required=True)
    p.add_argument("--detector", choices=("hom", "het"), required=True)
    p.add_argument("--T", default=None, help="transmissivities, a,b,c or lo:hi:n")
    p.add_argument("--c", required=True, help="window widths, lo:hi:n")
    p.add_argument("--logspace", action="store_true")
    p.add_argument("--center", type=float, default=0.0, help="homodyne window center")
    p.add_argument("--mirrored", action="store_true", help="add the mirrored homodyne window")
    p.set_defaults(handler=cmd_concentrate)

    p = sub.add_parser("counterexample", parents=[common], help="single-copy heterodyne-sector scan of the pair state")
    p.add_argument("--beta", default="0.005:0.2:40")
    p.add_argument("--a1", type=float, default=COUNTEREXAMPLE_ALPHA)
    p.add_argument("--th", type=float, default=COUNTEREXAMPLE_HALF_ANGLE)
    p.set_defaults(handler=cmd_counterexample)

    p = sub.add_parser("check", parents=[common], help="property checks")
    checks = p.add_subparsers(dest="check", required=True)
    c = checks.add_parser("monotones", parents=[common])
    c.add_argument("--trials", type=int, default=2)
    c = checks.add_parser("convex-roof", parents=[common])
    c.add_argument("--N", default="2..5")
    c.add_argument("--trials", type=int, default=1000)
    c.add_argument("--detectors", default="het,hom")
    p.set_defaults(handler=cmd_check)
    return parser


def _run_config(args) -> RunConfig:
    tol = DEFAULT_TOLERANCES.override(integration_tol=args.tol, truncation_leakage=args.leakage)
    return RunConfig(tolerances=tol, dim=args.dim, fmt=args.fmt, seed=args.seed, workers=args.workers)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(logging.DEBUG if args.verbose else logging.WARNING, args.log_file)
    try:
        cfg = _run_config(args)
        return args.handler(args, cfg)
    except NonGaussianityError as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
