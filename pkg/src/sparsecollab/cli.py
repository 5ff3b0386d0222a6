"""Command line harness: scenarios, single solves, sweeps and oracle comparisons.

Exit codes::

    0  success (solve: converged)
    1  unexpected solver failure
    2  bad parameters or paths, empty grid, oracle budget exceeded
    3  solve finished but did not converge (result is still feasible)
    4  solve target infeasible
    5  sweep: fewer than half of the rows succeeded

``COLLAB_LOG`` sets the log level (DEBUG, INFO, WARNING, ...).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CollabError, DomainError, InfeasibleError, ParameterError
from .model import DEFAULT_PARAMS, Scenario, build_forms, build_scenario, info_from_dnorm
from .oracle import EnumerationBudget, exhaustive_energy, exhaustive_info, exhaustive_joint
from .spectral import info_bound_J0, min_distortion_D0
from .strategies import SolverConfig, solve_energy_constrained, solve_info_constrained, solve_joint
from .sweeps import AXES, COLUMNS, SweepSpec, run_sweep, succeeded

log = logging.getLogger("sparsecollab")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_INFEASIBLE, EXIT_SWEEP = 0, 1, 2, 3, 4, 5


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {val}")
    return val


def _param(text: str) -> tuple[str, float]:
    key, sep, val = text.partition("=")
    if not sep or key not in DEFAULT_PARAMS:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE with KEY in {sorted(DEFAULT_PARAMS)}, got {text!r}")
    try:
        return key, float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {val!r}") from None


def _scenario_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--scenario", type=Path, help="scenario JSON (otherwise one is drawn from --n/--seed)")
    g.add_argument("--n", type=int, help="number of sensors")
    g.add_argument("--seed", type=int, default=0, help="placement seed (default 0)")
    g.add_argument("--set", dest="params", type=_param, action="append", default=[], metavar="KEY=VALUE",
                   help="override a scenario parameter, e.g. --set alpha_c=0.05 (repeatable)")


def _solver_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--rho", type=float, help="ADMM penalty (default 20)")
    g.add_argument("--eps", type=float, help="reweighting offset epsilon (default 1e-3)")
    g.add_argument("--zero-tol", type=float, help="relative threshold for a nonzero entry (default 1e-3)")
    g.add_argument("--max-admm", type=int, help="ADMM iteration cap (default 500)")
    g.add_argument("--fixed-rho", action="store_true", help="never raise rho when ADMM stalls")


def _target_args(p: argparse.ArgumentParser, *, required: bool) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--dnorm", type=float, help="normalized distortion target in (0, 1]")
    g.add_argument("--jcheck", type=float, help="raw Fisher-information threshold")
    g.add_argument("--budget", type=float, help="energy budget (energy problem)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sparsecollab", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sc = sub.add_parser("scenario", help="generate or inspect a scenario")
    scs = sc.add_subparsers(dest="action", required=True)
    gen = scs.add_parser("gen", help="write a scenario JSON")
    _scenario_args(gen)
    gen.add_argument("--out", type=Path, help="output path (default stdout)")
    show = scs.add_parser("show", help="print geometry and derived constants")
    _scenario_args(show)

    so = sub.add_parser("solve", help="solve one problem instance")
    so.add_argument("kind", choices=("info", "energy", "joint"))
    _scenario_args(so)
    _target_args(so, required=True)
    _solver_args(so)
    so.add_argument("--out", type=Path, help="report JSON path (default stdout)")
    so.add_argument("--trace", type=Path, help="per-iteration ADMM trace CSV")

    sw = sub.add_parser("sweep", help="sweep one axis and write CSV, sidecar JSON, .dat and SVG")
    sw.add_argument("kind", choices=("info", "energy", "joint"))
    sw.add_argument("--axis", required=True, choices=sorted(AXES))
    grid = sw.add_mutually_exclusive_group(required=True)
    grid.add_argument("--grid", help="comma-separated values")
    grid.add_argument("--logspace", help="START,STOP,NUM (base-10 exponents of the ends)")
    grid.add_argument("--linspace", help="START,STOP,NUM")
    _scenario_args(sw)
    _target_args(sw, required=False)
    _solver_args(sw)
    sw.add_argument("--jobs", type=_positive_int, default=1, help="rows solved in parallel")
    sw.add_argument("--out", type=Path, required=True, help="output directory")
    sw.add_argument("--no-plot", action="store_true", help="skip the SVG figure")

    orc = sub.add_parser("oracle", help="compare a solver with exhaustive search")
    orc.add_argument("kind", choices=("info", "energy", "joint"))
    _scenario_args(orc)
    _target_args(orc, required=True)
    _solver_args(orc)
    orc.add_argument("--max-n", type=int, help="raise the enumeration size limit (slow)")
    orc.add_argument("--out", type=Path, help="comparison JSON path (default stdout)")
    return ap


def _load_scenario(args) -> Scenario:
    params = dict(args.params)
    if args.scenario is not None:
        try:
            s = Scenario.from_json(args.scenario.read_text())
        except OSError as exc:
            raise UsageError(f"cannot read scenario: {exc}") from None
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"malformed scenario file {args.scenario}: {exc}") from None
        return s.replace(**params) if params else s
    if args.n is None:
        raise UsageError("give --scenario or --n")
    return build_scenario(args.n, args.seed, **params)


def _solver_config(args) -> SolverConfig:
    kw = {}
    for name, key in (("rho", "rho"), ("eps", "epsilon"), ("zero_tol", "zero_tol"), ("max_admm", "max_admm")):
        val = getattr(args, name, None)
        if val is not None:
            kw[key] = val
    if getattr(args, "fixed_rho", False):
        kw["adaptive_rho"] = False
    if getattr(args, "trace", None) is not None:
        kw["trace"] = True
    return SolverConfig(**kw)


def _resolve_J(forms, args) -> float:
    if args.budget is not None:
        raise UsageError("--budget applies to the energy problem; use --dnorm or --jcheck")
    if args.jcheck is not None:
        return args.jcheck
    return info_from_dnorm(args.dnorm, min_distortion_D0(forms), forms.eta2)


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text + "\n")
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.10g}"
    return str(v)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_scenario(args) -> int:
    s = _load_scenario(args)
    if args.action == "gen":
        _emit(s.to_json(), args.out)
        return EXIT_OK
    forms = build_forms(s)
    print(f"N            {s.N}")
    print(f"seed         {s.seed}")
    print(f"fc_pos       {s.fc_pos[0]:.6g} {s.fc_pos[1]:.6g}")
    for n, (x, y) in enumerate(s.sensor_pos):
        print(f"sensor[{n}]    {x:.6g} {y:.6g}")
    print(f"J0           {info_bound_J0(forms):.8g}")
    print(f"D0           {min_distortion_D0(forms):.8g}")
    print(f"link_cost    {forms.total_link_cost:.8g}")
    print(f"select_cost  {float(np.sum(forms.d)):.8g}")
    return EXIT_OK


def cmd_solve(args) -> int:
    s = _load_scenario(args)
    forms = build_forms(s)
    cfg = _solver_config(args)
    try:
        if args.kind == "energy":
            if args.budget is None:
                raise UsageError("the energy problem needs --budget")
            rep = solve_energy_constrained(forms, args.budget, cfg)
        else:
            J = _resolve_J(forms, args)
            rep = (solve_info_constrained if args.kind == "info" else solve_joint)(forms, J, cfg)
    except (InfeasibleError, DomainError) as exc:
        log.error("infeasible: %s", exc)
        _emit(json.dumps({"status": "infeasible", "message": str(exc)}, indent=2), args.out)
        return EXIT_INFEASIBLE
    out = rep.to_dict()
    out["scenario"] = s.to_dict()
    _emit(json.dumps(out, indent=2, sort_keys=True), args.out)
    if args.trace is not None:
        _write_trace(rep.admm_states, args.trace)
    if rep.status == "infeasible":
        return EXIT_INFEASIBLE
    return EXIT_OK if rep.status == "converged" else EXIT_NONCONVERGED


def _write_trace(states, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["run", "k", "primal_residual", "dual_residual", "objective"])
        for run, st in enumerate(states):
            for k, row in enumerate(zip(st.primal_res, st.dual_res, st.objective), start=1):
                out.writerow([run, k, *(f"{x:.12g}" for x in row)])


def _grid(args) -> list[float]:
    try:
        if args.grid is not None:
            return [float(x) for x in args.grid.split(",") if x.strip()]
        spec = args.logspace or args.linspace
        a, b, n = spec.split(",")
        fn = np.logspace if args.logspace else np.linspace
        return [float(x) for x in fn(float(a), float(b), int(n))]
    except ValueError as exc:
        raise UsageError(f"bad grid: {exc}") from None


def cmd_sweep(args) -> int:
    s = _load_scenario(args)
    grid = _grid(args)
    try:
        spec = SweepSpec(kind=args.kind, axis=args.axis, grid=grid, dnorm=args.dnorm, jcheck=args.jcheck,
                         budget=args.budget, solver=_solver_config(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = run_sweep(s, spec, jobs=args.jobs)

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    stem = f"sweep_{args.kind}_{args.axis}"
    with open(out / f"{stem}.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(COLUMNS)
        for r in rows:
            wr.writerow([_fmt(r[c]) for c in COLUMNS])
    side = {
        "library_version": __version__,
        "command": "sweep",
        "config": spec.to_dict(),
        "scenario": s.to_dict(),
        "columns": list(COLUMNS),
        "rows": [{"axis_value": r["axis_value"], "status": r["status"], "w": r.get("w")} for r in rows],
    }
    (out / f"{stem}.json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")

    from .plotting import PANELS, save_sweep_svg, write_dat

    ok = [r for r in rows if succeeded(r)]
    write_dat(ok, ("axis_value", *PANELS[args.axis]), out / f"{stem}.dat",
              header=f"sparsecollab {__version__} sweep {args.kind} over {args.axis}")
    if not args.no_plot:
        save_sweep_svg(ok, args.axis, out / f"{stem}.svg")

    n_ok = len(ok)
    log.info("sweep finished: %d/%d rows succeeded", n_ok, len(rows))
    print(f"{n_ok}/{len(rows)} rows succeeded; wrote {out / stem}.{{csv,json,dat{',svg' if not args.no_plot else ''}}}")
    return EXIT_OK if 2 * n_ok >= len(rows) else EXIT_SWEEP


def cmd_oracle(args) -> int:
    s = _load_scenario(args)
    forms = build_forms(s)
    cfg = _solver_config(args)
    budget = EnumerationBudget()
    if args.max_n is not None:
        budget = EnumerationBudget(max_N=args.max_n, max_N_joint=args.max_n, max_supports=1 << 62)
    limit = budget.max_N_joint if args.kind == "joint" else budget.max_N
    if forms.N > limit:
        raise UsageError(f"N={forms.N} exceeds the enumeration limit {limit} (see --max-n)")
    try:
        if args.kind == "energy":
            if args.budget is None:
                raise UsageError("the energy problem needs --budget")
            orc = exhaustive_energy(forms, args.budget, budget)
            rep = solve_energy_constrained(forms, args.budget, cfg)
            strategy, oracle = rep.metrics.J, orc.value
            gap = (oracle - strategy) / max(oracle, 1e-12)
        else:
            J = _resolve_J(forms, args)
            if args.kind == "info":
                orc = exhaustive_info(forms, J, budget)
                rep = solve_info_constrained(forms, J, cfg)
            else:
                orc = exhaustive_joint(forms, J, budget)
                rep = solve_joint(forms, J, cfg)
            strategy, oracle = rep.metrics.P, orc.value
            gap = (strategy - oracle) / max(oracle, 1e-12)
    except (InfeasibleError, DomainError) as exc:
        log.error("infeasible: %s", exc)
        _emit(json.dumps({"status": "infeasible", "message": str(exc)}, indent=2), args.out)
        return EXIT_INFEASIBLE
    result = {
        "library_version": __version__,
        "kind": args.kind,
        "target": rep.target,
        "oracle": {"value": oracle, "support": orc.support, "selected": orc.selected,
                   "evaluated": orc.evaluated, "w": [float(x) for x in orc.w]},
        "strategy": {"value": strategy, "support": rep.support, "selected": rep.selected,
                     "status": rep.status, "w": [float(x) for x in rep.w_final]},
        "gap": gap,
    }
    _emit(json.dumps(result, indent=2, sort_keys=True), args.out)
    return EXIT_OK


COMMANDS = {"scenario": cmd_scenario, "solve": cmd_solve, "sweep": cmd_sweep, "oracle": cmd_oracle}


def _setup_logging() -> None:
    level = os.environ.get("COLLAB_LOG", "WARNING").strip().upper()
    numeric = int(level) if level.isdigit() else logging.getLevelName(level)
    if not isinstance(numeric, int):
        numeric = logging.WARNING
    log.setLevel(numeric)
    for h in log.handlers:
        if getattr(h, "_sparsecollab", False):
            h.stream = sys.stderr  # stderr may have been swapped since the last call
            return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    handler._sparsecollab = True
    log.addHandler(handler)
    log.propagate = False


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ParameterError, DomainError, ValueError) as exc:
        print(f"sparsecollab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"sparsecollab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CollabError as exc:
        print(f"sparsecollab: solver failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
