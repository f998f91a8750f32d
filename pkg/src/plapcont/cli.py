"""Command-line orchestration: solve / sweep / threshold / eigen / verify.

Each command reads a flat dotted-key config, runs the corresponding
pipeline, and writes its artifacts plus a ``run.json`` reproducibility
manifest into the output directory.  Exit codes: 0 success, 1 config
parse error, 2 violated precondition, 3 no solvability dichotomy,
4 runtime/solver failure.  Failures print a machine-readable JSON
object to stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import calibration
from .barriers import BarrierConstructionError
from .config import ConfigError, RunConfig, build_mesh, build_problem, load_config
from .continuum import (
    ThresholdPreconditionError,
    check_connectedness,
    branch_to_csv,
    branch_to_json,
    exploratory_solve,
    find_threshold,
    solve_branch_point,
    trace_branch,
    trace_branch_parallel,
)
from .dirichlet_solver import SolverFailure
from .eigen import comparability_constants, first_eigenpair
from .fixedpoint import FixedPointOptions, context_for, solve_fixed_point
from .grid import distance_field
from .nonlin import DomainError
from .problem import prepare_problem
from .verify import run_verification

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_PRECONDITION = 2
EXIT_NO_DICHOTOMY = 3
EXIT_RUNTIME = 4


class PreconditionError(RuntimeError):
    """A command-level precondition on the config or data failed."""


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write_text(out_dir: str, name: str, text: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
        fh.write(text)


def _print_error(kind: str, message: str, code: int, line: int | None = None) -> int:
    doc: dict = {"error": {"kind": kind, "message": message, "code": code}}
    if line:
        doc["error"]["line"] = line
    print(json.dumps(doc, sort_keys=True))
    return code


def _nest_config(source: dict) -> dict:
    """Turn flat dotted keys into nested dicts for the manifest."""
    root: dict = {}
    for key, value in source.items():
        parts = key.split(".")
        node = root
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return root


def _calibration_constants() -> dict:
    return {
        "simon_c": {f"{p:g}": v for p, v in calibration.SIMON_C.items()},
        "hardy_c": {f"{p:g}": v for p, v in calibration.HARDY_C.items()},
        "m_disc": {f"{p:g}": v for p, v in calibration.M_DISC.items()},
        "gap_tol": calibration.GAP_TOL,
        "gap_ref_sup": calibration.GAP_REF_SUP,
        "t_continuity_k": calibration.T_CONTINUITY_K,
    }


def _barrier_constants(prepared, upper=None) -> dict:
    pack = prepared.pack
    build = prepared.build
    out = {
        "lambda_star": pack.lambda_star,
        "delta": pack.delta,
        "gamma": pack.gamma,
        "r": pack.r,
        "eps_cut": pack.eps_cut,
        "eps0": build.eps0,
        "c1_phi": build.c1_phi,
        "c2_phi": build.c2_phi,
        "c1_eig": build.c1_eig,
        "c2_eig": build.c2_eig,
        "eigenvalue1": build.eigen.lambda1,
        "beta": prepared.report.beta,
        "a_const": prepared.report.a_const,
        "a_onset": prepared.report.a_onset,
        "b_const": prepared.report.b_const,
        "c_small": prepared.report.c_small,
    }
    if upper is not None:
        out.update(
            {
                "m_upper": upper.m_const,
                "eps_bar": upper.eps_bar,
                "a1_split": upper.a1_split,
                "c_split": upper.c_split,
                "lam_max": upper.lam_max,
            }
        )
    return out


def _manifest(command: str, cfg: RunConfig, args, constants: dict, summary: dict) -> dict:
    return {
        "command": command,
        "config": _nest_config(cfg.source),
        "flags": {
            "exploratory": bool(getattr(args, "exploratory", False)),
            "jobs": int(getattr(args, "jobs", 1)),
            "seed": int(args.seed if args.seed is not None else cfg.seeds),
        },
        "package": {"name": "plapcont", "version": "0.1.0"},
        "constants": constants,
        "summary": summary,
    }


def _fp_options(cfg: RunConfig) -> FixedPointOptions:
    return FixedPointOptions(
        tol=cfg.solver_tol, max_picard=cfg.solver_max_iter, damping=cfg.solver_damping
    )


def _solution_csv(mesh, u_values, u_lower, u_upper) -> str:
    d = distance_field(mesh)
    lines = ["x,u,d,u_lower,u_upper"]
    for i in range(mesh.n_nodes):
        lines.append(
            f"{mesh.coords[i]:.17g},{u_values[i]:.17g},{d.values[i]:.17g},"
            f"{u_lower[i]:.17g},{u_upper[i]:.17g}"
        )
    return "\n".join(lines) + "\n"


def cmd_solve(cfg: RunConfig, args, out_dir: str) -> int:
    if cfg.lam is None:
        raise PreconditionError("solve needs a scalar lambda in the config")
    problem = build_problem(cfg)
    prepared = prepare_problem(problem)
    pack = prepared.pack
    lam = cfg.lam
    constants = _calibration_constants()
    if lam < pack.lambda_star * (1.0 - 1e-12):
        if not args.exploratory:
            raise PreconditionError(
                f"lambda below lambda_star ({lam:.6e} < {pack.lambda_star:.6e}); "
                "pass --exploratory to probe anyway"
            )
        result = exploratory_solve(problem, lam, tol=cfg.solver_tol)
        if not result.converged:
            return _print_error(
                "runtime",
                f"exploratory solve did not converge (residual {result.residual:.3e}, "
                f"floor_active={result.floor_active})",
                EXIT_RUNTIME,
            )
        nan = np.full(problem.mesh.n_nodes, np.nan)
        csv_text = _solution_csv(problem.mesh, result.u.values, nan, nan)
        constants["barrier"] = _barrier_constants(prepared)
        summary = {
            "lambda": lam,
            "mode": "exploratory",
            "converged": True,
            "iterations": result.iterations,
            "residual": result.residual,
            "sup_norm": result.u.sup_norm,
        }
    else:
        upper = prepared.upper_for(max(lam, pack.lambda_star * (1.0 + 1e-9)))
        ctx = context_for(lam, pack, upper, problem.f, prepared.report.beta)
        result = solve_fixed_point(lam, ctx, problem.h, problem.p, _fp_options(cfg))
        if not result.converged:
            return _print_error(
                "runtime",
                f"fixed-point iteration did not converge (residual {result.residual:.3e})",
                EXIT_RUNTIME,
            )
        csv_text = _solution_csv(
            problem.mesh, result.u_star.values, ctx.u_lower.values, ctx.u_upper.values
        )
        constants["barrier"] = _barrier_constants(prepared, upper)
        summary = {
            "lambda": lam,
            "mode": "truncated_fixed_point",
            "converged": True,
            "iterations": result.iterations,
            "residual": result.residual,
            "in_sandwich": result.in_sandwich,
            "sup_norm": result.u_star.sup_norm,
        }
    _write_text(out_dir, "solution.csv", csv_text)
    _write_text(out_dir, "run.json", _dump_json(_manifest("solve", cfg, args, constants, summary)))
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args, out_dir: str) -> int:
    if cfg.grid is None:
        raise PreconditionError("sweep needs a lambda.grid in the config")
    try:
        values = cfg.grid.values()
    except ValueError as exc:
        raise PreconditionError(str(exc)) from exc
    problem = build_problem(cfg)
    prepared = prepare_problem(problem)
    fp_opts = _fp_options(cfg)
    try:
        if args.jobs > 1:
            branch = trace_branch_parallel(
                problem, values, jobs=args.jobs, prepared=prepared, fp_opts=fp_opts
            )
            mode = "cold_parallel"
        else:
            branch = trace_branch(problem, values, prepared=prepared, fp_opts=fp_opts)
            mode = "warm_sequential"
    except ValueError as exc:
        raise PreconditionError(str(exc)) from exc
    # the gap measure is absolute, so scale the frozen tolerance up to the
    # branch magnitude (never below the reference calibration)
    peak = max((pt.sup_norm for pt in branch.points if pt.converged), default=0.0)
    gap_tol = calibration.GAP_TOL * max(1.0, peak / calibration.GAP_REF_SUP)
    conn = check_connectedness(branch, gap_tol)
    constants = _calibration_constants()
    upper = prepared.upper_for(float(values[-1]))
    constants["barrier"] = _barrier_constants(prepared, upper)
    meta = {
        "mode": mode,
        "connectedness": {
            "passed": conn.passed,
            "largest_gap": conn.largest_gap,
            "gap_tol": gap_tol,
        },
    }
    # path-independence record: redo the last converged point from a cold
    # start (or warm, under --jobs) and log the sup-norm disagreement
    last_ok = next((pt for pt in reversed(branch.points) if pt.converged), None)
    if last_ok is not None:
        other = solve_branch_point(
            prepared, upper, last_ok.lam, fp_opts,
            u0=None if mode == "warm_sequential"
            else next((pt.u for pt in branch.points if pt.converged), None),
        )
        if other.converged:
            meta["warm_cold_agreement"] = {
                "lambda": last_ok.lam,
                "sup_diff": float(np.max(np.abs(other.u.values - last_ok.u.values))),
            }
    _write_text(out_dir, "branch.csv", branch_to_csv(branch))
    _write_text(out_dir, "branch.json", branch_to_json(branch, constants, meta))
    summary = {
        "points": len(branch.points),
        "converged_points": sum(1 for pt in branch.points if pt.converged),
        "failures": len(branch.failures),
        "connectedness_passed": conn.passed,
    }
    _write_text(out_dir, "run.json", _dump_json(_manifest("sweep", cfg, args, constants, summary)))
    return EXIT_OK


def cmd_threshold(cfg: RunConfig, args, out_dir: str) -> int:
    if cfg.grid is None:
        raise PreconditionError(
            "threshold needs a bracket via lambda.grid.min / lambda.grid.max"
        )
    lo, hi = cfg.grid.lo, cfg.grid.hi
    if not (0.0 < lo < hi):
        raise PreconditionError(f"reversed or empty bracket [{lo!r}, {hi!r}]")
    problem = build_problem(cfg)
    prepared = prepare_problem(problem)
    trials: list = []
    estimate = find_threshold(
        problem,
        lo,
        hi,
        width_rel_tol=0.01,
        prepared=prepared,
        fp_opts=_fp_options(cfg),
        trials=trials,
    )
    constants = _calibration_constants()
    constants["barrier"] = _barrier_constants(prepared)
    doc = {
        "lambda0_lo": estimate.lambda0_lo,
        "lambda0_hi": estimate.lambda0_hi,
        "width": estimate.width,
        "bracket": {"lo": lo, "hi": hi},
        "width_rel_tol": 0.01,
        "trials": trials,
        "constants": constants,
    }
    _write_text(out_dir, "threshold.json", _dump_json(doc))
    summary = {
        "lambda0_lo": estimate.lambda0_lo,
        "lambda0_hi": estimate.lambda0_hi,
        "width": estimate.width,
        "trials": len(trials),
    }
    _write_text(
        out_dir, "run.json", _dump_json(_manifest("threshold", cfg, args, constants, summary))
    )
    return EXIT_OK


def cmd_eigen(cfg: RunConfig, args, out_dir: str) -> int:
    mesh = build_mesh(cfg)
    pair = first_eigenpair(cfg.p, mesh)
    d = distance_field(mesh)
    c1, c2 = comparability_constants(pair.phi1, d)
    lines = ["x,phi,d"]
    for i in range(mesh.n_nodes):
        lines.append(f"{mesh.coords[i]:.17g},{pair.phi1.values[i]:.17g},{d.values[i]:.17g}")
    _write_text(out_dir, "eigen.csv", "\n".join(lines) + "\n")
    doc = {
        "lambda1": pair.lambda1,
        "c1": c1,
        "c2": c2,
        "boundary_slope": [float(s) for s in np.atleast_1d(pair.boundary_slope)],
        "p": cfg.p,
        "n": cfg.domain_n,
        "kind": cfg.domain_kind,
    }
    _write_text(out_dir, "eigen.json", _dump_json(doc))
    constants = _calibration_constants()
    summary = {"lambda1": pair.lambda1, "c1": c1, "c2": c2}
    _write_text(out_dir, "run.json", _dump_json(_manifest("eigen", cfg, args, constants, summary)))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args, out_dir: str) -> int:
    seed = args.seed if args.seed is not None else cfg.seeds
    doc = run_verification(n=cfg.domain_n, p=cfg.p, seed=seed)
    _write_text(out_dir, "verify.json", _dump_json(doc))
    constants = _calibration_constants()
    summary = {
        "passed": doc["passed"],
        "suites": {name: s["passed"] for name, s in doc["suites"].items()},
    }
    _write_text(
        out_dir, "run.json", _dump_json(_manifest("verify", cfg, args, constants, summary))
    )
    if not doc["passed"]:
        return _print_error("runtime", "verification suites failed; see verify.json", EXIT_RUNTIME)
    return EXIT_OK


_COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "threshold": cmd_threshold,
    "eigen": cmd_eigen,
    "verify": cmd_verify,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plapcont",
        description="Singular p-Laplacian continuation: solve, sweep, threshold, eigen, verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat dotted-key config file",
                        required=name in ("solve", "sweep", "threshold"))
        sp.add_argument("--out", help="artifact directory (default: config output or '.')")
        sp.add_argument("--jobs", type=int, default=1,
                        help="parallel cold-start workers (sweep only)")
        sp.add_argument("--exploratory", action="store_true",
                        help="allow probing below lambda_star (solve only)")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config RNG seed")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
    except ConfigError as exc:
        return _print_error("parse", exc.message, EXIT_PARSE, line=exc.line)
    out_dir = args.out or cfg.output or "."
    try:
        return _COMMANDS[args.command](cfg, args, out_dir)
    except ConfigError as exc:
        return _print_error("parse", exc.message, EXIT_PARSE, line=exc.line)
    except PreconditionError as exc:
        return _print_error("precondition", str(exc), EXIT_PRECONDITION)
    except ThresholdPreconditionError as exc:
        if exc.reason == "no_dichotomy":
            return _print_error("no_dichotomy", str(exc), EXIT_NO_DICHOTOMY)
        return _print_error("precondition", str(exc), EXIT_PRECONDITION)
    except (SolverFailure, BarrierConstructionError, DomainError) as exc:
        return _print_error("runtime", str(exc), EXIT_RUNTIME)
    except ValueError as exc:
        return _print_error("precondition", str(exc), EXIT_PRECONDITION)


if __name__ == "__main__":
    sys.exit(main())
