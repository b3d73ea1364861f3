"""Dense primal-dual interior-point solver for linear objectives under LMIs.

Problem (free variables ``y``)::

    minimise   c @ y
    subject to F_b(y) = A_b0 + sum_i y_i A_bi  >= 0   for every block b
               y_p = v_p                               for pinned p

and its conic dual::

    maximise   -sum_b tr(A_b0 Z_b)
    subject to sum_b tr(A_bi Z_b) = c_i,   Z_b >= 0 .

Pinned variables are substituted before iterating. The search direction is
HKM (``dZ = mu S^-1 - Z - S^-1 dS Z``, symmetrised) with a Mehrotra
predictor-corrector and separate primal and dual step lengths.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

log = logging.getLogger(__name__)

STEP_FRACTION = 0.98
SCHUR_RIDGE = 1e-12


@dataclass
class LmiBlock:
    """``A_0 + sum_i y_i A_i`` with sparse symmetric matrices stored by upper triangle.

    ``constant`` maps ``(row, col)`` to a value; ``linear`` maps a variable
    index to such a mapping. ``diagonal`` marks LP-style blocks (negative size
    in SDPA files).
    """

    side: int
    constant: dict = field(default_factory=dict)
    linear: dict = field(default_factory=dict)
    diagonal: bool = False

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("block side must be >= 1")
        for cells in [self.constant, *self.linear.values()]:
            for r, c in list(cells):
                if not (0 <= r < self.side and 0 <= c < self.side):
                    raise ValueError(f"entry ({r}, {c}) outside a block of side {self.side}")
                if r > c:
                    v = cells.pop((r, c))
                    cells[(c, r)] = cells.get((c, r), 0.0) + v

    @staticmethod
    def _dense(cells: dict, side: int) -> np.ndarray:
        m = np.zeros((side, side))
        for (r, c), v in cells.items():
            m[r, c] += v
            if r != c:
                m[c, r] += v
        return m

    def dense(self, num_vars: int) -> tuple:
        a0 = self._dense(self.constant, self.side)
        a = np.zeros((num_vars, self.side, self.side))
        for i, cells in self.linear.items():
            a[i] = self._dense(cells, self.side)
        return a0, a

    def value(self, y) -> np.ndarray:
        out = self._dense(self.constant, self.side)
        for i, cells in self.linear.items():
            out += y[i] * self._dense(cells, self.side)
        return out


@dataclass
class SdpProblem:
    num_vars: int
    c: np.ndarray
    blocks: list
    pinned: list = field(default_factory=list)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.shape != (self.num_vars,):
            raise ValueError(f"objective has shape {self.c.shape}, expected ({self.num_vars},)")
        for b in self.blocks:
            for i in b.linear:
                if not 0 <= i < self.num_vars:
                    raise ValueError(f"block references variable {i} outside 0..{self.num_vars - 1}")

    def objective(self, y) -> float:
        return float(self.c @ y)

    def min_eigenvalues(self, y) -> list:
        return [float(np.linalg.eigvalsh(b.value(y))[0]) for b in self.blocks]


@dataclass
class SdpSolution:
    y: np.ndarray
    primal_value: float
    dual_value: float
    dual_certificate: list
    gap: float
    status: str
    iterations: int
    primal_infeasibility: float = 0.0
    dual_infeasibility: float = 0.0
    min_eigenvalues: list = field(default_factory=list)
    schur_regularized: bool = False

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with ``x + alpha dx`` PSD, for PSD ``x``."""
    try:
        chol = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    li = sla.solve_triangular(chol, np.eye(len(x)), lower=True)
    w = np.linalg.eigvalsh(li @ dx @ li.T)
    lo = w[0]
    return np.inf if lo >= 0 else -1.0 / lo


def _sym(m):
    return (m + np.swapaxes(m, -1, -2)) / 2


def solve(problem: SdpProblem, tol: float = 1e-7, max_iter: int = 100) -> SdpSolution:
    """Solve ``problem`` to a relative duality gap and infeasibility of ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not problem.blocks:
        raise ValueError("problem has no LMI blocks")

    M = problem.num_vars
    pinned = dict(problem.pinned)
    free = np.array([i for i in range(M) if i not in pinned], dtype=int)
    y_full = np.zeros(M)
    for i, v in pinned.items():
        y_full[i] = v
    c = problem.c[free]
    c0 = float(sum(problem.c[i] * v for i, v in pinned.items()))
    m = len(free)

    A0, A = [], []
    for b in problem.blocks:
        a0, a = b.dense(M)
        for i, v in pinned.items():
            a0 = a0 + v * a[i]
        A0.append(a0)
        A.append(a[free])
    sides = [b.side for b in problem.blocks]
    n_total = sum(sides)
    if m == 0:
        vals = [float(np.linalg.eigvalsh(a0)[0]) for a0 in A0]
        status = "optimal" if min(vals) >= -tol else "infeasible-suspected"
        return SdpSolution(y_full, c0, c0, [np.zeros_like(a0) for a0 in A0], 0.0, status, 0, min_eigenvalues=vals)

    flat = [a.reshape(m, -1) for a in A]
    norm_a0 = 1.0 + max(np.linalg.norm(a0) for a0 in A0)
    norm_c = 1.0 + np.linalg.norm(c)

    def lmi(yv):
        return [A0[b] + np.tensordot(yv, A[b], axes=1) for b in range(len(A0))]

    # y = 0 with the slack inflated by an identity shift; Z scaled to c
    y = np.zeros(m)
    S, Z = [], []
    for b, a0 in enumerate(A0):
        lam = max(0.0, -float(np.linalg.eigvalsh(a0)[0])) + max(1.0, np.linalg.norm(a0) / np.sqrt(sides[b]))
        S.append(a0 + lam * np.eye(sides[b]))
        anorm = np.linalg.norm(flat[b], axis=1)
        zeta = max(1.0, np.sqrt(sides[b]) * float(np.max((1.0 + np.abs(c)) / (1.0 + anorm))))
        Z.append(zeta * np.eye(sides[b]))

    regularized = False
    best = None
    status = "max_iter"
    it = 0

    def measures(yv, S, Z):
        F = lmi(yv)
        rp = [F[b] - S[b] for b in range(len(S))]
        rd = c - sum(flat[b] @ Z[b].ravel() for b in range(len(Z)))
        pobj = float(c @ yv) + c0
        dobj = -float(sum(np.vdot(A0[b], Z[b]) for b in range(len(Z)))) + c0
        pinf = max(np.linalg.norm(r) for r in rp) / norm_a0
        dinf = float(np.linalg.norm(rd)) / norm_c
        gap = pobj - dobj
        return rp, rd, pobj, dobj, pinf, dinf, gap

    for it in range(1, max_iter + 1):
        rp, rd, pobj, dobj, pinf, dinf, gap = measures(y, S, Z)
        compl = float(sum(np.vdot(S[b], Z[b]) for b in range(len(S))))
        scale = max(1.0, abs(pobj), abs(dobj))
        merit = max(abs(gap) / scale, compl / scale, pinf, dinf)
        if best is None or merit < best[0]:
            best = (merit, y.copy(), [s.copy() for s in S], [z.copy() for z in Z])
        if abs(gap) <= tol * scale and compl <= tol * scale and pinf <= tol and dinf <= tol:
            status = "optimal"
            break
        if np.linalg.norm(y) > 1e12 or max(np.trace(z) for z in Z) > 1e14:
            status = "infeasible-suspected"
            break

        mu = compl / n_total
        Sinv = []
        for s in S:
            try:
                cf = sla.cho_factor(s)
                Sinv.append(sla.cho_solve(cf, np.eye(len(s))))
            except np.linalg.LinAlgError:
                Sinv.append(np.linalg.pinv(s))
        # Schur complement M_ij = sum_b tr(A_i S^-1 A_j Z)
        H = np.zeros((m, m))
        for b in range(len(S)):
            G = Sinv[b] @ A[b] @ Z[b]
            H += flat[b] @ np.swapaxes(G, 1, 2).reshape(m, -1).T
        H = _sym(H)
        try:
            factor = sla.cho_factor(H)
        except np.linalg.LinAlgError:
            regularized = True
            factor = sla.cho_factor(H + SCHUR_RIDGE * max(1.0, np.max(np.abs(np.diag(H)))) * np.eye(m))

        def direction(targets):
            # targets[b] = T_b in dZ = T - Z - S^-1 dS Z
            rhs = -c.copy()
            for b in range(len(S)):
                rhs += flat[b] @ (targets[b] - Sinv[b] @ rp[b] @ Z[b]).ravel()
            dy = sla.cho_solve(factor, rhs)
            dS = [np.tensordot(dy, A[b], axes=1) + rp[b] for b in range(len(S))]
            dZ = [_sym(targets[b] - Z[b] - Sinv[b] @ dS[b] @ Z[b]) for b in range(len(S))]
            return dy, dS, dZ

        def steps(dS, dZ):
            ap = min([1.0] + [STEP_FRACTION * _max_step(S[b], dS[b]) for b in range(len(S))])
            ad = min([1.0] + [STEP_FRACTION * _max_step(Z[b], dZ[b]) for b in range(len(Z))])
            return ap, ad

        # predictor
        dy, dS, dZ = direction([np.zeros_like(s) for s in S])
        ap, ad = steps(dS, dZ)
        mu_aff = sum(np.vdot(S[b] + ap * dS[b], Z[b] + ad * dZ[b]) for b in range(len(S))) / n_total
        sigma = min(1.0, max(0.0, float(mu_aff / mu))) ** 3
        # corrector
        targets = [sigma * mu * Sinv[b] - Sinv[b] @ dS[b] @ dZ[b] for b in range(len(S))]
        dy, dS, dZ = direction(targets)
        ap, ad = steps(dS, dZ)
        if ap <= 1e-14 and ad <= 1e-14:
            log.debug("sdp: step lengths vanished at iteration %d", it)
            break
        y = y + ap * dy
        S = [_sym(S[b] + ap * dS[b]) for b in range(len(S))]
        Z = [_sym(Z[b] + ad * dZ[b]) for b in range(len(Z))]
        log.debug("sdp it %d pobj %.10g dobj %.10g pinf %.2e dinf %.2e mu %.2e", it, pobj, dobj, pinf, dinf, mu)

    if status != "optimal" and best is not None:
        _, y, S, Z = best
    rp, rd, pobj, dobj, pinf, dinf, gap = measures(y, S, Z)
    y_full[free] = y
    return SdpSolution(
        y=y_full,
        primal_value=pobj,
        dual_value=dobj,
        dual_certificate=Z,
        gap=float(gap),
        status=status,
        iterations=it,
        primal_infeasibility=float(pinf),
        dual_infeasibility=float(dinf),
        min_eigenvalues=problem.min_eigenvalues(y_full),
        schur_regularized=regularized,
    )
