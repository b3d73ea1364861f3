"""Command-line front end.

Exit codes: 0 success, 1 error (bad config, bad input), 2 ``check`` found the
system uncontrollable or the horizon outside the convergence bound, 3 resource
budget exceeded, 4 the solver stopped without reaching the tolerance.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys as _sys
import warnings
from pathlib import Path

import numpy as np

from . import magnus
from .algebra import S_X, S_Z, exp_anti_hermitian, log_unitary
from .config import ConfigError, load_config
from .errors import BudgetExceededError, ConvergenceWarning
from .lie import closure, is_operator_controllable
from .magnus import SystemSpec, Term
from .moment import build_relaxation
from .pipeline import (
    assemble_constraints,
    assemble_objective,
    propagate_profile,
    pulses_to_csv,
    read_pulses_csv,
    solve_control,
    truncation_errors,
)
from .poly import monomial_str
from .sdpa import export_sdpa

EXIT_OK, EXIT_ERROR, EXIT_CHECK, EXIT_BUDGET, EXIT_SOLVER = 0, 1, 2, 3, 4

log = logging.getLogger("meqoc")


class CliError(Exception):
    pass


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(report), indent=2, sort_keys=False)
    lines = []

    def emit(prefix, v):
        if isinstance(v, dict):
            for k, w in v.items():
                emit(f"{prefix}.{k}" if prefix else str(k), w)
        elif isinstance(v, list) and v and isinstance(v[0], (list, dict)):
            for i, w in enumerate(v):
                emit(f"{prefix}[{i}]", w)
        else:
            lines.append(f"{prefix}: {_jsonable(v)}")

    emit("", report)
    return "\n".join(lines)


def _read_config(args):
    if not args.config:
        raise CliError("--config is required")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config: {exc}") from None
    return load_config(text, {"magnus_order": args.order, "relax_order": args.relax_order,
                              "K": args.knots, "tol": args.tol})


def cmd_check(cfg) -> tuple:
    sys = cfg.sys
    basis = closure([t.matrix for t in sys.terms], sys.dim)
    controllable = is_operator_controllable(basis, sys.dim)
    value, convergent = magnus.convergence_bound(sys, cfg.bounds)
    report = {
        "command": "check",
        "dim": sys.dim,
        "lie_dimension": len(basis),
        "full_dimension": sys.dim**2 - 1,
        "depth_log": basis.depth_log,
        "controllable": controllable,
        "convergence_bound": value,
        "convergent": convergent,
    }
    return report, EXIT_OK if controllable and convergent else EXIT_CHECK


def _relaxation(cfg):
    problem = cfg.problem()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        J = assemble_objective(problem)
    return problem, build_relaxation(J, assemble_constraints(problem), problem.relax_order,
                                     variables=problem.variables, max_basis=problem.max_basis)


def _out_path(out, default_name: str) -> Path:
    p = Path(out or ".")
    if p.suffix:
        p.parent.mkdir(parents=True, exist_ok=True)
        return p
    p.mkdir(parents=True, exist_ok=True)
    return p / default_name


def cmd_build(cfg, out) -> tuple:
    problem, relax = _relaxation(cfg)
    sdp = relax.to_sdp()
    path = _out_path(out, "relaxation.dat-s")
    comment = f"meqoc relaxation order {relax.basis.order}, {len(problem.variables)} variables"
    path.write_text(export_sdpa(sdp, comment))
    index = path.with_suffix(".index.tsv")
    index.write_text("position\tmonomial\n" + "".join(
        f"{i + 1}\t{monomial_str(m)}\n" for i, m in enumerate(relax.moments)))
    report = {
        "command": "build",
        "sdpa": str(path),
        "index": str(index),
        "mDIM": sdp.num_vars,
        "blocks": [b.side for b in sdp.blocks],
        "basis": len(relax.basis),
    }
    return report, EXIT_OK


def cmd_solve(cfg, out, fmt) -> tuple:
    problem = cfg.problem()
    sol = solve_control(problem, progress=lambda m: log.info(m))
    verdict = closure([t.matrix for t in cfg.sys.terms], cfg.sys.dim)
    report = {
        "command": "solve",
        "problem": {
            "dim": cfg.sys.dim, "K": cfg.sys.K, "T": cfg.sys.T, "magnus_order": problem.magnus_order,
            "relax_order": problem.relax_order, "lambda_energy": problem.lambda_energy,
            "quadrature": problem.quadrature,
        },
        "convergence_bound": sol.convergence[0],
        "convergent": sol.convergence[1],
        "controllable": is_operator_controllable(verdict, cfg.sys.dim),
        "relaxation": sol.relaxation_size,
        "solver": {
            "status": sol.sdp.status, "iterations": sol.sdp.iterations, "primal": sol.sdp.primal_value,
            "dual": sol.sdp.dual_value, "gap": sol.sdp.gap,
            "primal_infeasibility": sol.sdp.primal_infeasibility,
            "dual_infeasibility": sol.sdp.dual_infeasibility,
            "min_eigenvalues": sol.sdp.min_eigenvalues,
        },
        "lower_bound": sol.lower_bound,
        "achieved": sol.achieved,
        "gap": sol.gap,
        "certificates": sol.certificates,
        "label": sol.label,
        "refined": sol.refined,
        "pulses": {j: list(v) for j, v in sol.pulses.items()},
        "metrics": sol.metrics,
    }
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "pulses.csv").write_text(pulses_to_csv(sol.pulses))
        (d / ("report.json" if fmt == "json" else "report.txt")).write_text(render(report, fmt) + "\n")
    return report, EXIT_OK if sol.sdp.optimal else EXIT_SOLVER


def cmd_verify(cfg, pulses_path) -> tuple:
    if not pulses_path:
        raise CliError("--pulses is required")
    try:
        u = read_pulses_csv(Path(pulses_path).read_text())
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read pulses: {exc}") from None
    expected = set(cfg.sys.variables())
    if set(u) != expected:
        extra = sorted(set(u) - expected)
        missing = sorted(expected - set(u))
        raise CliError(f"pulse CSV does not match the config (missing {missing[:3]}, unexpected {extra[:3]})")
    errs = truncation_errors(cfg.sys, u, cfg.magnus_order, cfg.quadrature, cfg.substeps)
    report = {
        "command": "verify",
        "orders": list(range(1, cfg.magnus_order + 1)),
        "errors": errs,
        "non_increasing": all(b <= a + 1e-12 for a, b in zip(errs, errs[1:])),
    }
    return report, EXIT_OK


def cmd_oracle(a: float, b: float, T: float, n_terms: int, steps: int = 100_000) -> tuple:
    if not 0 <= n_terms <= len(magnus.LINEAR_DRIVE_COEFFS):
        raise CliError(f"n_terms must be in 0..{len(magnus.LINEAR_DRIVE_COEFFS)}")
    omega = magnus.linear_drive_oracle(a, b, T, n_terms)
    sys = SystemSpec.from_horizon([Term(S_Z, a), Term(S_X)], T, 1)
    U_ref = propagate_profile(sys, {1: lambda t: b * t}, steps)
    U = exp_anti_hermitian(omega)
    report = {
        "command": "oracle",
        "a": a, "b": b, "T": T, "n_terms": n_terms,
        "sy_coefficients": magnus.linear_drive_sy_coefficients(a, b, T, n_terms),
        "coefficient_ratios": magnus.coefficient_ratios(),
        "ratio_limit": -1.0 / (4 * np.pi**2),
        "radius_parameter": a * T / (2 * np.pi),
        "omega_error": float(np.linalg.norm(omega - log_unitary(U_ref))),
        "unitary_error": float(np.linalg.norm(U - U_ref)),
        "omega_oracle": omega,
        "omega_reference": log_unitary(U_ref),
    }
    if a * T / (2 * np.pi) >= 1:
        report["warning"] = "aT/2pi >= 1: the series is outside its convergence radius"
    return report, EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="problem config (JSON)")
    common.add_argument("--out", help="output directory (or file for build)")
    common.add_argument("--order", type=int, help="Magnus truncation order")
    common.add_argument("--knots", type=int, help="number of knots K")
    common.add_argument("--relax-order", type=int, help="relaxation order r")
    common.add_argument("--tol", type=float, help="solver tolerance")
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="meqoc", description="Magnus-expansion quantum optimal control")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="controllability and convergence checks")
    sub.add_parser("build", parents=[common], help="write the relaxation as SDPA .dat-s")
    sub.add_parser("solve", parents=[common], help="solve and extract pulses")
    v = sub.add_parser("verify", parents=[common], help="truncation errors of a pulse file")
    v.add_argument("--pulses", help="pulse CSV (control,knot,value)")
    o = sub.add_parser("oracle", parents=[common], help="analytic linear-driving oracle")
    o.add_argument("--a", type=float, default=0.5)
    o.add_argument("--b", type=float, default=0.5)
    o.add_argument("--T", type=float, default=1.0)
    o.add_argument("--n-terms", type=int, default=5)
    o.add_argument("--steps", type=int, default=100_000)
    return p


def _thread_limit():
    n = os.environ.get("QOC_THREADS")
    if not n:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, int(n)))


def run(argv=None) -> tuple:
    """Parse ``argv`` and run one command; returns ``(report, exit_code)``."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=_sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit():
            if args.command == "oracle":
                return cmd_oracle(args.a, args.b, args.T, args.n_terms, args.steps)
            cfg = _read_config(args)
            if args.command == "check":
                return cmd_check(cfg)
            if args.command == "build":
                return cmd_build(cfg, args.out)
            if args.command == "solve":
                return cmd_solve(cfg, args.out, args.format)
            return cmd_verify(cfg, args.pulses)
    except BudgetExceededError as exc:
        return {"command": args.command, "status": "budget-exceeded", "error": str(exc)}, EXIT_BUDGET
    except (CliError, ConfigError, ValueError) as exc:
        return {"command": args.command, "status": "error", "error": str(exc)}, EXIT_ERROR


def main(argv=None) -> int:
    argv = list(_sys.argv[1:] if argv is None else argv)
    fmt = build_parser().parse_args(argv).format
    report, code = run(argv)
    print(render(report, fmt))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
