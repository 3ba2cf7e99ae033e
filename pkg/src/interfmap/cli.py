"""Command-line interface.

Exit codes: 0 success, 1 parse or solver failure, 2 infeasible when a
solution was requested.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .asymptotic import derive_asymptotic
from .core import ConvergenceError, MonotoneNorm, check_axioms
from .feasibility import compute_fixed_point, has_fixed_point
from .loadmodel import (
    NetworkScenario,
    capped_load_mapping,
    coupling_matrix,
    load_mapping,
    maxmin_problem,
    power_asymptotic_radius,
    power_mapping,
)
from .maxmin import CanonicalProblem, asymptotic_radius, solve_canonical, sweep, transition_point
from .report import FORMATS, Report, emit_report
from .scenario import ScenarioFileError, load_input, scenario_digest
from .spectral import SolverConfig, matrix_spectral_radius, refine_with_budgets, spectral_radius

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_INFEASIBLE = 0, 1, 2
COMMANDS = ("feasibility", "fixed-point", "spectral-radius", "maxmin", "sweep", "verify-axioms")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for infeasibility.
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def parse_budgets(grid: str) -> np.ndarray:
    """``"a:b:n"`` for n linear points, ``"a:b:nlog"`` for n log-spaced points."""
    parts = grid.split(":")
    if len(parts) != 3:
        raise ValueError(f"budget grid {grid!r} must look like a:b:n or a:b:nlog")
    a, b = float(parts[0]), float(parts[1])
    count = parts[2]
    log_spaced = count.endswith("log")
    n = int(count[:-3] if log_spaced else count)
    if n < 1 or not (0 < a <= b) or (n > 1 and a == b):
        raise ValueError(f"budget grid {grid!r} needs 0 < a < b and n >= 1")
    return np.geomspace(a, b, n) if log_spaced else np.linspace(a, b, n)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--scenario", required=True, metavar="PATH",
                        help="scenario JSON file or builtin:NAME")
    common.add_argument("--norm", choices=("l1", "linf"), default=None,
                        help="monotone norm (default: linf for networks, l1 otherwise)")
    common.add_argument("--capped", action="store_true", help="use the rate-capped load mapping")
    common.add_argument("--tol", type=float, default=1e-10, metavar="R", help="relative solver tolerance")
    common.add_argument("--max-iter", type=int, default=100_000, metavar="N")
    common.add_argument("--seed", type=int, default=0, metavar="N", help="seed for sampled checks")
    common.add_argument("--format", choices=FORMATS, default="table")
    common.add_argument("--output", metavar="PATH", help="write the report here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="interfmap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("feasibility", parents=[common], help="does a fixed point exist")
    sub.add_parser("fixed-point", parents=[common], help="compute the fixed point")
    sub.add_parser("spectral-radius", parents=[common], help="spectral radius of the asymptotic mapping")
    mm = sub.add_parser("maxmin", parents=[common], help="max-min utility at one budget")
    mm.add_argument("--budget", type=float, required=True, metavar="W")
    sw = sub.add_parser("sweep", parents=[common], help="max-min utility over a budget grid")
    sw.add_argument("--budgets", required=True, metavar="a:b:n[log]")
    sw.add_argument("--jobs", type=int, default=1, metavar="N", help="solve rows concurrently")
    ax = sub.add_parser("verify-axioms", parents=[common], help="sampled axiom checks")
    ax.add_argument("--samples", type=int, default=200, metavar="N")
    return p


# ---------------------------------------------------------------------------
# Mapping selection
# ---------------------------------------------------------------------------


def _norm(args, scenario) -> MonotoneNorm:
    name = args.norm or ("linf" if isinstance(scenario, NetworkScenario) else "l1")
    return MonotoneNorm.from_name(name)


def _with_power(s: NetworkScenario, diag: dict) -> NetworkScenario:
    if s.power is None:
        diag["power_note"] = "power_w absent; using 1 W per resource block"
        return s.replace(power=np.ones(s.num_bs))
    return s


def _fixed_point_mapping(args, s, diag):
    """The mapping whose fixed point the feasibility commands study."""
    if isinstance(s, NetworkScenario):
        s = _with_power(s, diag)
        return capped_load_mapping(s) if args.capped else load_mapping(s)
    if args.capped:
        raise ValueError("--capped needs a network scenario")
    return s.mapping


def _canonical_problem(args, s) -> CanonicalProblem:
    if isinstance(s, NetworkScenario):
        if args.capped:
            raise ValueError("--capped does not apply to the max-min rate problem")
        return maxmin_problem(s, _norm(args, s))
    n = _norm(args, s)
    return CanonicalProblem(s.mapping, n, n)


def _rho_inf(args, s, prob, cfg) -> float:
    if isinstance(s, NetworkScenario):
        return power_asymptotic_radius(s, prob.norm_a, cfg)
    return asymptotic_radius(prob, cfg)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_feasibility(args, s, cfg):
    diag = {}
    T = _fixed_point_mapping(args, s, diag)
    v = has_fixed_point(T, norm=_norm(args, s), cfg=cfg)
    result = {
        "rho": v.rho,
        "feasible": v.feasible,
        "boundary_inconclusive": v.boundary_inconclusive,
        "status": v.spectral.status,
        "rho_lower": v.spectral.lower,
        "rho_upper": v.spectral.upper,
    }
    if isinstance(s, NetworkScenario):
        result["rho_coupling"] = matrix_spectral_radius(coupling_matrix(s), cfg.tol, cfg.max_iter)[0]
    diag["iterations"] = v.spectral.iterations
    return EXIT_OK, result, diag


def _cmd_fixed_point(args, s, cfg):
    diag = {}
    T = _fixed_point_mapping(args, s, diag)
    fp = compute_fixed_point(T, cfg)
    result = {"exists": fp.exists, "status": fp.status,
              "point": fp.point if fp.exists else None}
    diag.update(iterations=fp.iterations, residual=fp.residual, monotone_direction=fp.monotone_direction)
    if fp.status == "diverged":
        return EXIT_INFEASIBLE, result, diag
    if fp.status != "converged":
        return EXIT_FAIL, result, diag
    return EXIT_OK, result, diag


def _cmd_spectral_radius(args, s, cfg):
    diag = {}
    T = _fixed_point_mapping(args, s, diag)
    n = _norm(args, s)
    sr = spectral_radius(derive_asymptotic(T), n, cfg)
    if sr.status == "needs_budget_method":
        sr = refine_with_budgets(T, sr, n, cfg)
    result = {"rho": sr.value, "status": sr.status, "lower": sr.lower, "upper": sr.upper,
              "eigenvector": sr.vector}
    diag["iterations"] = sr.iterations
    return EXIT_OK, result, diag


def _cmd_maxmin(args, s, cfg):
    prob = _canonical_problem(args, s)
    sol = solve_canonical(prob, args.budget, cfg)
    result = {"budget": args.budget, "power": sol.power, "utility": sol.utility, "lambda": sol.lam}
    return EXIT_OK, result, {"iterations": sol.iterations, "residual": sol.residual}


def _cmd_sweep(args, s, cfg):
    budgets = parse_budgets(args.budgets)
    prob = _canonical_problem(args, s)
    rho = _rho_inf(args, s, prob, cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows = sweep(prob, budgets, cfg, rho_inf=rho, jobs=args.jobs)
    result = {
        "transition_point": transition_point(prob, rho),
        "rho_inf": rho,
        "rows": [
            {"budget": r.budget, "utility": r.utility, "efficiency": r.efficiency,
             "utility_bound": r.utility_bound, "efficiency_bound": r.efficiency_bound,
             "lambda": r.lam}
            for r in rows
        ],
    }
    failed = [r for r in rows if not r.ok]
    diag = {
        "iterations": [r.iterations for r in rows],
        "residuals": [r.residual for r in rows],
        "failed_rows": len(failed),
        "warnings": [str(w.message) for w in caught],
    }
    for r in failed:
        log.error("budget %g: %s", r.budget, r.error)
    return (EXIT_FAIL if failed else EXIT_OK), result, diag


def _cmd_verify_axioms(args, s, cfg):
    diag = {}
    if isinstance(s, NetworkScenario):
        sp = _with_power(s, diag)
        maps = {"load": load_mapping(sp), "power": power_mapping(sp)}
        if sp.rate_cap is not None:
            maps["capped_load"] = capped_load_mapping(sp)
    else:
        maps = {s.kind: s.mapping}
    result = {}
    ok = True
    for name, T in maps.items():
        rep = check_axioms(T, samples=args.samples, seed=args.seed)
        # Only the axioms implied by the declared class are required.
        required = ["monotonicity"]
        if T.is_si:
            required += ["scalability", "positivity"]
        elif T.is_wsi:
            required += ["weak_scalability"]
        passed = all(rep[k].passed for k in required)
        ok &= passed
        result[name] = {"class": T.class_tag.value, "passed": passed, **rep.summary()}
        for k in required:
            if not rep[k].passed:
                diag[f"{name}.{k}.witness"] = repr(rep[k].witness)
    return (EXIT_OK if ok else EXIT_FAIL), result, diag


_HANDLERS = {
    "feasibility": _cmd_feasibility,
    "fixed-point": _cmd_fixed_point,
    "spectral-radius": _cmd_spectral_radius,
    "maxmin": _cmd_maxmin,
    "sweep": _cmd_sweep,
    "verify-axioms": _cmd_verify_axioms,
}


def _run(argv):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = SolverConfig(tol_x=args.tol, tol_lambda=args.tol, max_iter=args.max_iter)
    s = load_input(args.scenario)
    code, result, diag = _HANDLERS[args.command](args, s, cfg)
    return code, Report(args.command, scenario_digest(s), result, diag), args


def run_command(argv: Optional[Sequence[str]] = None):
    """Parse ``argv`` and run one command; returns ``(exit_code, report)``.

    Usage, scenario and solver errors propagate as exceptions; :func:`main`
    maps them to exit code 1.
    """
    code, report, _ = _run(argv)
    return code, report


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        code, report, args = _run(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_FAIL
    except (ScenarioFileError, ConvergenceError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    try:
        text = emit_report(report, args.format, args.output)
    except OSError as exc:
        print(f"error: cannot write {args.output}: {exc.strerror}", file=sys.stderr)
        return EXIT_FAIL
    if args.output is None:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
