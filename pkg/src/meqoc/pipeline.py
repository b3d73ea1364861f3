"""End-to-end pulse synthesis: objective, relaxation, solve, extraction, checks."""
from __future__ import annotations

import csv
import io
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import magnus
from .algebra import (
    as_cmatrix,
    exp_anti_hermitian,
    fidelity,
    frobenius_overlap,
    hs_inner,
    is_unitary,
    log_unitary,
    trace_norm,
)
from .errors import ConvergenceWarning, DimensionError, StructureError
from .magnus import OperatorPolynomial, SystemSpec
from .moment import DEFAULT_BASIS_BUDGET, MomentRelaxation, build_relaxation, flat_extension, numerical_rank
from .poly import Polynomial, VarId
from .sdp import LmiBlock, SdpProblem, SdpSolution, solve

log = logging.getLogger(__name__)


@dataclass
class ControlProblem:
    """One MEQOC instance.

    ``bounds`` is anything :func:`meqoc.magnus.normalize_bounds` accepts.
    ``mu`` maps free control index to its energy scale (default 1).
    """

    sys: SystemSpec
    target: np.ndarray
    bounds: object
    magnus_order: int = 2
    relax_order: int | None = None
    lambda_energy: float = 0.0
    mu: Mapping | None = None
    quadrature: str = "simplex"
    refine: bool = True
    polish: bool = True
    tol: float = 1e-7
    max_iter: int = 100
    max_basis: int = DEFAULT_BASIS_BUDGET
    reference_state: np.ndarray | None = None

    def __post_init__(self):
        self.target = as_cmatrix(self.target, "target")
        if self.target.shape[0] != self.sys.dim:
            raise DimensionError("target dimension differs from the system")
        if not is_unitary(self.target, 1e-8):
            raise StructureError("target is not unitary")
        if self.relax_order is None:
            self.relax_order = self.magnus_order
        if self.relax_order < self.magnus_order:
            raise ValueError("relaxation order must be at least the Magnus order (objective degree 2m)")
        if self.lambda_energy < 0:
            raise ValueError("lambda_energy must be >= 0")
        self.nbounds = magnus.normalize_bounds(self.sys, self.bounds) if self.sys.free_controls else {}
        mu = dict(self.mu or {})
        self.mu = {j: float(mu.get(j, 1.0)) for j in self.sys.free_controls}
        if any(v <= 0 for v in self.mu.values()):
            raise ValueError("energy scales mu must be positive")

    @property
    def pins(self) -> dict:
        """Free variables with ``lo == hi``; these are substituted, not optimised."""
        out = {}
        for j, b in self.nbounds.items():
            for k in range(self.sys.K):
                if b[k, 0] == b[k, 1]:
                    out[VarId(j, k + 1)] = float(b[k, 0])
        return out

    @property
    def variables(self) -> list:
        return self.sys.variables(self.pins)

    def bound_of(self, v: VarId) -> tuple:
        lo, hi = self.nbounds[v.control][v.knot - 1]
        return float(lo), float(hi)


@dataclass
class PulseSolution:
    pulses: dict
    lower_bound: float
    achieved: float
    gap: float
    certificates: dict
    metrics: dict
    label: str
    sdp: SdpSolution
    relaxation_size: dict = field(default_factory=dict)
    convergence: tuple = (0.0, True)
    refined: bool = False

    def assignment(self) -> dict:
        return {VarId(j, k + 1): float(v) for j, row in self.pulses.items() for k, v in enumerate(row)}


def omega_of(problem: ControlProblem) -> OperatorPolynomial:
    return magnus.assemble(problem.sys, problem.magnus_order, problem.pins, problem.quadrature)


def assemble_objective(problem: ControlProblem, omega: OperatorPolynomial | None = None) -> Polynomial:
    """``||Omega(u) - log U*||_F^2 + lambda sum_jk u_j(k)^2 / mu_j`` as a polynomial."""
    value, ok = magnus.convergence_bound(problem.sys, problem.bounds) if problem.sys.free_controls else (0.0, True)
    if not ok:
        warnings.warn(f"Magnus convergence bound {value:.4g} >= pi", ConvergenceWarning, stacklevel=2)
    if omega is None:
        omega = omega_of(problem)
    target_log = log_unitary(problem.target)
    parts = omega.parts
    J = Polynomial.constant(hs_inner(target_log, target_log))
    for i, (oi, pi) in enumerate(parts):
        J = J - pi * (2.0 * hs_inner(oi, target_log))
        J = J + (pi * pi) * hs_inner(oi, oi)
        for oj, pj in parts[i + 1:]:
            g = hs_inner(oi, oj)
            if g != 0.0:
                J = J + (pi * pj) * (2.0 * g)
    if problem.lambda_energy:
        for v in problem.variables:
            J = J + Polynomial({((v, 2),): problem.lambda_energy / problem.mu[v.control]})
    return J


def objective_direct(problem: ControlProblem, u: Mapping, omega: OperatorPolynomial | None = None) -> float:
    """Same objective evaluated numerically from the residual matrix."""
    if omega is None:
        omega = omega_of(problem)
    resid = omega.evaluate(u) - log_unitary(problem.target)
    energy = sum(problem.lambda_energy / problem.mu[v.control] * u[v] ** 2 for v in problem.variables)
    return float(np.linalg.norm(resid) ** 2 + energy)


def assemble_constraints(problem: ControlProblem) -> list:
    """``(u - lo)(hi - u) >= 0`` for every optimised variable."""
    out = []
    for v in problem.variables:
        lo, hi = problem.bound_of(v)
        if lo > hi:
            raise ValueError(f"{v}: lo > hi")
        x = Polynomial.var(v)
        out.append((x - lo) * (hi - x))
    return out


def _trace_refinement(relax: MomentRelaxation, sdp: SdpProblem, level: float) -> SdpProblem:
    """Minimise tr M_r(y) over moments whose objective stays below ``level``."""
    c = np.zeros(relax.n_moments)
    for (r, col), terms in relax.blocks[0].entries.items():
        if r == col:
            for mono, coef in terms.items():
                c[relax.moment_index[mono]] += coef
    cap = LmiBlock(1, {(0, 0): level}, {pos: {(0, 0): -coef} for pos, coef in relax.objective.items() if coef})
    return SdpProblem(sdp.num_vars, c, list(sdp.blocks) + [cap], list(sdp.pinned))


def _partial(p: Polynomial, v: VarId) -> Polynomial:
    terms = {}
    for mono, coef in p.terms.items():
        for i, (w, e) in enumerate(mono):
            if w == v:
                rest = mono[:i] + (((w, e - 1),) if e > 1 else ()) + mono[i + 1:]
                terms[rest] = terms.get(rest, 0.0) + coef * e
    return Polynomial(terms)


def polish_pulse(J: Polynomial, u0: Mapping, variables: list, bounds: list, max_iter: int = 200) -> dict:
    """Bounded local descent on ``J`` from ``u0``; returns the better of start and result."""
    from scipy.optimize import minimize

    grads = [_partial(J, v) for v in variables]
    base = dict(u0)

    def point(x):
        base.update(zip(variables, x))
        return base

    def f(x):
        pt = point(x)
        return J.evaluate(pt), np.array([g.evaluate(pt) for g in grads])

    x0 = np.array([u0[v] for v in variables])
    res = minimize(f, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-12})
    out = dict(u0)
    if res.fun < f(x0)[0]:
        out.update(zip(variables, (float(x) for x in res.x)))
    return out


def solve_control(problem: ControlProblem, progress: Callable[[str], None] | None = None) -> PulseSolution:
    """Relax, solve, extract and verify one control problem.

    Pulses are read off the first-order moments and, with ``polish``, improved
    by a bounded local descent on the objective (the bound is unaffected). If the moment matrix is not
    rank one, an optional second solve minimises its trace over the near
    optimal face (objective within a small slack of the bound), which favours
    a rank-one moment matrix without changing the reported lower bound.
    """
    say = progress or (lambda msg: log.info(msg))
    sys = problem.sys
    if not problem.variables:
        raise ValueError("problem has no free control variables to optimise")
    conv = magnus.convergence_bound(sys, problem.bounds)
    say(f"convergence bound {conv[0]:.6g} ({'ok' if conv[1] else 'violated'})")

    omega = omega_of(problem)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        J = assemble_objective(problem, omega)
    constraints = assemble_constraints(problem)
    say(f"objective degree {J.degree}, {len(J)} monomials, {len(constraints)} box constraints")

    relax = build_relaxation(J, constraints, problem.relax_order, variables=problem.variables,
                             max_basis=problem.max_basis)
    sdp = relax.to_sdp()
    say(f"relaxation: basis {len(relax.basis)}, moments {relax.n_moments}, blocks {len(relax.blocks)}")
    sol = solve(sdp, problem.tol, problem.max_iter)
    say(f"sdp {sol.status} after {sol.iterations} iterations, value {sol.primal_value:.10g}")
    lower = min(sol.primal_value, sol.dual_value) if sol.optimal else sol.primal_value

    y = sol.y
    rank = numerical_rank(relax.moment_matrix(y))
    refined = False
    if rank > 1 and problem.refine and sol.optimal:
        slack = max(problem.tol * max(1.0, abs(lower)), 2 * abs(sol.gap))
        ref = solve(_trace_refinement(relax, sdp, sol.primal_value + slack), problem.tol, problem.max_iter)
        say(f"trace refinement {ref.status} after {ref.iterations} iterations")
        if ref.status in ("optimal", "max_iter") and numerical_rank(relax.moment_matrix(ref.y)) < rank:
            y = ref.y
            refined = True
            rank = numerical_rank(relax.moment_matrix(y))
    flat = flat_extension(relax, y)
    certificates = {"rank_one": rank == 1, "rank_loop": bool(flat[2]), "moment_rank": rank}

    u = dict(problem.pins)
    for v, val in relax.first_moments(y).items():
        lo, hi = problem.bound_of(v)
        u[v] = float(np.clip(val, lo, hi))
    if problem.polish:
        u = polish_pulse(J, u, problem.variables, [problem.bound_of(v) for v in problem.variables])
    achieved = J.evaluate(u)
    pulses = {j: np.array([u[VarId(j, k)] for k in range(1, sys.K + 1)]) for j in sys.free_controls}

    U = exp_anti_hermitian(omega.evaluate(u))
    metrics = evaluate_metrics(U, problem.target, problem.reference_state)
    label = "certified" if (certificates["rank_one"] or certificates["rank_loop"]) else "lower bound + heuristic pulse"
    return PulseSolution(
        pulses=pulses,
        lower_bound=float(lower),
        achieved=float(achieved),
        gap=float(achieved - lower),
        certificates=certificates,
        metrics=metrics,
        label=label,
        sdp=sol,
        relaxation_size={"basis": len(relax.basis), "moments": relax.n_moments,
                         "blocks": [b.side for b in relax.blocks]},
        convergence=conv,
        refined=refined,
    )


def _knot_generators(sys: SystemSpec, u) -> np.ndarray:
    """``A(k)`` for k = 1..K as an array ``(K, N, N)``."""
    out = np.zeros((sys.K, sys.dim, sys.dim), dtype=complex)
    for j, t in enumerate(sys.terms):
        if t.pinned is not None:
            amp = np.full(sys.K, t.pinned)
        else:
            amp = np.array([u[VarId(j, k)] for k in range(1, sys.K + 1)], dtype=float)
        out += amp[:, None, None] * (t.matrix / 1j)[None]
    return out


def _ordered_product(steps: np.ndarray) -> np.ndarray:
    U = np.eye(steps.shape[-1], dtype=complex)
    for s in steps:
        U = s @ U
    return U


def propagate_reference(sys: SystemSpec, u: Mapping, substeps: int = 1) -> np.ndarray:
    """``prod_k exp(dt A(k))`` for piecewise-constant knot controls (later knots on the left)."""
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    A = _knot_generators(sys, u)
    step = exp_anti_hermitian(A * (sys.dt / substeps))
    if substeps > 1:
        step = np.repeat(step, substeps, axis=0)
    return _ordered_product(step)


def propagate_profile(sys: SystemSpec, profiles: Mapping, steps: int) -> np.ndarray:
    """Propagate continuous control profiles ``{j: f(t)}`` by ``steps`` midpoint slices over [0, T]."""
    h = sys.T / steps
    t = (np.arange(steps) + 0.5) * h
    A = np.zeros((steps, sys.dim, sys.dim), dtype=complex)
    for j, term in enumerate(sys.terms):
        if term.pinned is not None:
            amp = np.full(steps, term.pinned)
        else:
            f = profiles[j]
            amp = np.array([f(x) for x in t], dtype=float)
        A += amp[:, None, None] * (term.matrix / 1j)[None]
    return _ordered_product(exp_anti_hermitian(A * h))


def evaluate_metrics(U, target, reference_state=None) -> dict:
    """Operator trace distance, state fidelity from a reference state, Frobenius overlap."""
    U = as_cmatrix(U, "U")
    target = as_cmatrix(target, "target")
    if U.shape != target.shape:
        raise DimensionError("metric arguments differ in dimension")
    n = U.shape[0]
    psi0 = np.zeros(n, dtype=complex)
    psi0[0] = 1.0
    if reference_state is not None:
        psi0 = np.asarray(reference_state, dtype=complex)
        psi0 = psi0 / np.linalg.norm(psi0)
    a = U @ psi0
    b = target @ psi0
    return {
        "trace_distance": 0.5 * trace_norm(U - target),
        "fidelity": fidelity(np.outer(a, a.conj()), np.outer(b, b.conj())),
        "frobenius_overlap": frobenius_overlap(U, target),
    }


def truncation_errors(sys: SystemSpec, u: Mapping, order: int, quadrature="simplex", substeps: int = 1) -> list:
    """``||exp(sum_{m<=k} Omega_m(u)) - U_ref||_F`` for k = 1..order."""
    ref = propagate_reference(sys, u, substeps)
    acc = np.zeros((sys.dim, sys.dim), dtype=complex)
    errs = []
    for m in range(1, order + 1):
        acc = acc + magnus.discretize_term(sys, m, u, quadrature).evaluate({})
        errs.append(float(np.linalg.norm(exp_anti_hermitian(acc) - ref)))
    return errs


def pulses_to_csv(pulses: Mapping) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["control", "knot", "value"])
    for j in sorted(pulses):
        for k, v in enumerate(pulses[j], start=1):
            w.writerow([j, k, repr(float(v))])
    return buf.getvalue()


def read_pulses_csv(text: str) -> dict:
    """Parse ``control,knot,value`` rows into ``{VarId: value}``."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["control", "knot", "value"]:
        raise ValueError(f"pulse CSV header must be control,knot,value, got {reader.fieldnames}")
    out = {}
    for row in reader:
        out[VarId(int(row["control"]), int(row["knot"]))] = float(row["value"])
    return out


def hierarchy_bounds(p: Polynomial, constraints=(), orders=(1, 2, 3), variables=None,
                     tol: float = 1e-8, max_iter: int = 100) -> list:
    """Relaxation values for several orders.

    An order whose moment matrix cannot carry every monomial of ``p`` and the
    constraints (``2r`` below the largest degree) imposes no condition, so its
    bound is ``-inf``.
    """
    constraints = list(constraints)
    top = max([p.degree] + [q.degree for q in constraints])
    out = []
    for r in orders:
        if 2 * r < top:
            out.append(-np.inf)
            continue
        sol = solve(build_relaxation(p, constraints, r, variables).to_sdp(), tol, max_iter)
        out.append(sol.primal_value)
    return out
