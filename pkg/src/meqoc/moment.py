"""Order-r moment relaxations of polynomial optimisation problems.

Blocks are first built symbolically, with entries mapping a canonical
monomial to a coefficient. :meth:`MomentRelaxation.to_sdp` then numbers the
moments and emits an LMI problem for :mod:`meqoc.sdp`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import BudgetExceededError
from .poly import (
    UNIT,
    Polynomial,
    VarId,
    Word,
    canonicalize,
    grlex_key,
    monomial_degree,
    monomial_mul,
    monomial_str,
    monomials_up_to,
)
from .sdp import LmiBlock, SdpProblem

DEFAULT_BASIS_BUDGET = 500
RANK_REL_TOL = 1e-6


@dataclass
class MomentBasis:
    variables: list
    order: int
    words: list
    commutative: bool = True
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self):
        return len(self.words)

    def prefix_size(self, order: int) -> int:
        """Number of basis words of degree <= ``order`` (a leading block)."""
        return sum(1 for w in self.words if len(w) <= order) if not self.commutative else sum(
            1 for w in self.words if monomial_degree(w) <= order
        )


@dataclass
class SymbolicBlock:
    """LMI block with entries ``(row, col) -> {monomial: coefficient}``, upper triangle."""

    name: str
    side: int
    entries: dict = field(default_factory=dict)
    labels: list = field(default_factory=list)

    def evaluate(self, moments) -> np.ndarray:
        """Numeric value with moments supplied as a mapping monomial -> value."""
        out = np.zeros((self.side, self.side))
        for (r, c), terms in self.entries.items():
            v = sum(coef * moments[m] for m, coef in terms.items())
            out[r, c] = v
            out[c, r] = v
        return out


def enumerate_basis(variables, r: int, commutative: bool = True, max_size: int = DEFAULT_BASIS_BUDGET) -> MomentBasis:
    """All monomials (or words) of degree <= r in graded-lex order."""
    if r < 0:
        raise ValueError("relaxation order must be >= 0")
    variables = sorted(VarId(*v) for v in variables)
    n = len(variables)
    size = math.comb(n + r, r) if commutative else sum(n**d for d in range(r + 1))
    if size > max_size:
        raise BudgetExceededError(f"moment basis of size {size} exceeds the budget of {max_size}")
    if commutative:
        words = monomials_up_to(variables, r)
    else:
        words = [()]
        for d in range(1, r + 1):
            words.extend(tuple(p) for p in product(variables, repeat=d))
    return MomentBasis(variables, r, words, commutative)


def _product_key(basis: MomentBasis, nu, omega):
    if basis.commutative:
        return monomial_mul(nu, omega)
    return canonicalize(Word(nu).dagger() * Word(omega), commutative=False)


def _label(basis: MomentBasis, w) -> str:
    if basis.commutative:
        return monomial_str(w)
    return "*".join(str(v) for v in w) or "1"


def build_moment_block(basis: MomentBasis) -> SymbolicBlock:
    """Moment matrix ``M_r(y)``: entry ``(nu, omega)`` is ``y`` of ``nu^dagger omega``."""
    s = len(basis)
    block = SymbolicBlock("moment", s, labels=[_label(basis, w) for w in basis.words])
    for i in range(s):
        for j in range(i, s):
            block.entries[(i, j)] = {_product_key(basis, basis.words[i], basis.words[j]): 1.0}
    return block


def localizing_half_degree(q: Polynomial) -> int:
    return (q.degree + 1) // 2


def build_localizing_block(q: Polynomial, basis: MomentBasis, r: int | None = None, name="localizing") -> SymbolicBlock:
    """Localising matrix ``M_{r-d}(q y)`` with ``d = ceil(deg q / 2)``."""
    if not basis.commutative:
        raise NotImplementedError("localising blocks are built for commuting variables only")
    r = basis.order if r is None else r
    if q.degree > 2 * r:
        raise ValueError(f"constraint of degree {q.degree} does not fit relaxation order {r}")
    d = localizing_half_degree(q)
    words = [w for w in basis.words if monomial_degree(w) <= r - d]
    block = SymbolicBlock(name, len(words), labels=[_label(basis, w) for w in words])
    for i in range(len(words)):
        for j in range(i, len(words)):
            nu_omega = monomial_mul(words[i], words[j])
            terms: dict = {}
            for mu, coef in q.terms.items():
                key = monomial_mul(nu_omega, mu)
                terms[key] = terms.get(key, 0.0) + coef
            block.entries[(i, j)] = terms
    return block


@dataclass
class MomentRelaxation:
    basis: MomentBasis
    moments: list
    moment_index: dict
    objective: dict
    blocks: list
    constraint_degrees: list = field(default_factory=list)

    @property
    def n_moments(self) -> int:
        return len(self.moments)

    def to_sdp(self) -> SdpProblem:
        """LMI form over the moment vector; ``y_1`` pinned to one."""
        m = self.n_moments
        c = np.zeros(m)
        for pos, coef in self.objective.items():
            c[pos] = coef
        blocks = []
        for sb in self.blocks:
            lin: dict = {}
            for (r, col), terms in sb.entries.items():
                for mono, coef in terms.items():
                    if coef == 0.0:
                        continue
                    pos = self.moment_index[mono]
                    cell = lin.setdefault(pos, {})
                    cell[(r, col)] = cell.get((r, col), 0.0) + coef
            blocks.append(LmiBlock(sb.side, {}, lin))
        return SdpProblem(m, c, blocks, pinned=[(self.moment_index[UNIT], 1.0)])

    def point_moments(self, point) -> np.ndarray:
        """Moment vector of the Dirac measure at ``point``."""
        return np.array([Polynomial({mono: 1.0}).evaluate(point) for mono in self.moments])

    def moment_map(self, y) -> dict:
        return {mono: float(y[i]) for i, mono in enumerate(self.moments)}

    def moment_matrix(self, y) -> np.ndarray:
        return self.blocks[0].evaluate(self.moment_map(y))

    def objective_value(self, y) -> float:
        return float(sum(coef * y[pos] for pos, coef in self.objective.items()))

    def first_moments(self, y) -> dict:
        return {v: float(y[self.moment_index[((v, 1),)]]) for v in self.basis.variables}


def build_relaxation(p: Polynomial, constraints=(), r: int | None = None, variables=None,
                     max_basis: int = DEFAULT_BASIS_BUDGET) -> MomentRelaxation:
    """Order-r relaxation of ``min p s.t. q_i >= 0``.

    ``variables`` defaults to those appearing in ``p`` and the constraints.
    """
    constraints = list(constraints)
    degs = [p.degree] + [q.degree for q in constraints]
    if r is None:
        r = max(1, (max(degs) + 1) // 2)
    if 2 * r < max(degs):
        raise ValueError(f"relaxation order {r} too small for degree {max(degs)}")
    if variables is None:
        vs = set(p.variables())
        for q in constraints:
            vs.update(q.variables())
        variables = sorted(vs)
    basis = enumerate_basis(variables, r, max_size=max_basis)
    moments = monomials_up_to(basis.variables, 2 * r)
    index = {mono: i for i, mono in enumerate(moments)}
    objective = {index[mono]: coef for mono, coef in p.terms.items()}
    blocks = [build_moment_block(basis)]
    for i, q in enumerate(constraints):
        blocks.append(build_localizing_block(q, basis, r, name=f"localizing[{i}]"))
    return MomentRelaxation(basis, moments, index, objective, blocks, [q.degree for q in constraints])


def numerical_rank(m: np.ndarray, rel_tol: float = RANK_REL_TOL) -> int:
    w = np.linalg.eigvalsh((m + m.T) / 2)
    top = max(float(np.max(np.abs(w))), 0.0)
    if top == 0.0:
        return 0
    return int(np.sum(w > rel_tol * top))


def flat_extension(relax: MomentRelaxation, y, rel_tol: float = RANK_REL_TOL) -> tuple:
    """``(rank M_r, rank M_{r-d}, flag)`` with ``d = max(1, ceil(deg q_i / 2))``."""
    mm = relax.moment_matrix(y)
    d = max([1] + [(deg + 1) // 2 for deg in relax.constraint_degrees])
    r = relax.basis.order
    k = relax.basis.prefix_size(max(r - d, 0))
    full = numerical_rank(mm, rel_tol)
    sub = numerical_rank(mm[:k, :k], rel_tol)
    return full, sub, full == sub


def format_block(block: SymbolicBlock, max_entry_width: int = 18) -> str:
    """Monomial-labelled table of a symbolic block, for debugging."""
    def cell(i, j):
        terms = block.entries.get((min(i, j), max(i, j)), {})
        s = " + ".join(
            (f"{c:g}*" if c != 1.0 else "") + "y[" + monomial_str(m) + "]"
            for m, c in sorted(terms.items(), key=lambda t: grlex_key(t[0]))
        )
        return (s or "0")[:max_entry_width]

    width = max([len(lab) for lab in block.labels] + [1])
    lines = [f"{block.name} ({block.side}x{block.side})"]
    for i in range(block.side):
        row = " | ".join(cell(i, j).ljust(max_entry_width) for j in range(block.side))
        lines.append(f"{block.labels[i].rjust(width)} : {row}")
    return "\n".join(lines)


def format_relaxation(relax: MomentRelaxation) -> str:
    lines = [
        f"order {relax.basis.order}, {len(relax.basis.variables)} variables, basis {len(relax.basis)}, "
        f"{relax.n_moments} moments, {len(relax.blocks)} blocks"
    ]
    for b in relax.blocks:
        lines.append(f"  {b.name}: side {b.side}")
    return "\n".join(lines)
