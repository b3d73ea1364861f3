"""Discretised Magnus terms as operator-valued polynomials in the controls.

The generator at knot ``k`` is ``A(k) = sum_j u_j(k) H_j / 1j``. Each term
``Omega_m`` is a nested sum over ordered knot tuples ``k_1 >= ... >= k_m`` of
nested commutators. Grouping by the tuple of Hamiltonian indices
``(j_1, ..., j_m)`` separates a constant matrix from a scalar control
polynomial, so

    Omega_m = sum_i P_i(u) O_i .
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Mapping, Sequence

import numpy as np

from .algebra import as_cmatrix, hs_inner, is_anti_hermitian, is_hermitian, S_X, S_Y, S_Z
from .errors import BudgetExceededError, DimensionError, StructureError
from .poly import Polynomial, VarId

MAX_ORDER = 4
DEDUP_TOL = 1e-12
DEFAULT_MONOMIAL_BUDGET = 200_000

# |B_2n| / (2n)! for the linear-driving series, n = 1..5
LINEAR_DRIVE_COEFFS = (1 / 12, 1 / 720, 1 / 30240, 1 / 1209600, 1 / 47900160)
# Sign of every S_y coefficient, fixed against fine product propagation
# (tests/test_magnus.py::test_oracle_sign_matches_propagation).
LINEAR_DRIVE_SIGN = -1.0

_ORDER_DENOMINATOR = {1: 1, 2: 2, 3: 6, 4: 12}


@dataclass(frozen=True)
class Term:
    """One Hamiltonian term ``u_j(t) H_j``; ``pinned`` fixes a constant amplitude."""

    matrix: np.ndarray
    pinned: float | None = None
    label: str = ""

    @property
    def free(self) -> bool:
        return self.pinned is None


@dataclass(frozen=True)
class SystemSpec:
    terms: tuple
    K: int
    dt: float

    def __post_init__(self):
        terms = tuple(t if isinstance(t, Term) else Term(*t) for t in self.terms)
        if not terms:
            raise ValueError("system needs at least one Hamiltonian term")
        dim = None
        checked = []
        for j, t in enumerate(terms):
            h = as_cmatrix(t.matrix, f"H_{j}")
            if dim is None:
                dim = h.shape[0]
            elif h.shape[0] != dim:
                raise DimensionError(f"H_{j} has dimension {h.shape[0]}, expected {dim}")
            if not is_hermitian(h):
                raise StructureError(f"H_{j} is not Hermitian")
            checked.append(Term(h, None if t.pinned is None else float(t.pinned), t.label or f"H{j}"))
        if int(self.K) < 1:
            raise ValueError("K must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "terms", tuple(checked))
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "dt", float(self.dt))

    @classmethod
    def from_horizon(cls, terms, T: float, K: int) -> "SystemSpec":
        return cls(tuple(terms), K, T / K)

    @property
    def dim(self) -> int:
        return self.terms[0].matrix.shape[0]

    @property
    def T(self) -> float:
        return self.K * self.dt

    @property
    def free_controls(self) -> list:
        return [j for j, t in enumerate(self.terms) if t.free]

    def variables(self, pins: Mapping | None = None) -> list:
        pins = pins or {}
        return [VarId(j, k) for j in self.free_controls for k in range(1, self.K + 1) if VarId(j, k) not in pins]

    def generator(self, j: int) -> np.ndarray:
        return self.terms[j].matrix / 1j


@dataclass
class OperatorPolynomial:
    """``sum_i P_i(u) O_i`` with constant anti-Hermitian ``O_i``."""

    dim: int
    parts: list = field(default_factory=list)

    def evaluate(self, u: Mapping) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for o, p in self.parts:
            out += p.evaluate(u) * o
        return out

    @property
    def degree(self) -> int:
        return max((p.degree for _, p in self.parts), default=0)

    @property
    def n_monomials(self) -> int:
        return sum(len(p) for _, p in self.parts)

    def variables(self) -> list:
        return sorted({v for _, p in self.parts for v in p.variables()})

    def __add__(self, other: "OperatorPolynomial") -> "OperatorPolynomial":
        if other.dim != self.dim:
            raise DimensionError("operator polynomials of different dimension")
        out = OperatorPolynomial(self.dim)
        for o, p in self.parts + other.parts:
            _accumulate(out.parts, o, p)
        return out


def _accumulate(parts: list, o: np.ndarray, p: Polynomial, tol=DEDUP_TOL) -> None:
    """Add ``p * o`` to ``parts``, merging into an existing parallel matrix."""
    if p.is_zero():
        return
    norm_o = np.linalg.norm(o)
    if norm_o == 0:
        return
    for i, (q, pq) in enumerate(parts):
        s = hs_inner(q, o) / hs_inner(q, q)
        if s != 0 and np.linalg.norm(o - s * q) <= tol * max(1.0, norm_o):
            parts[i] = (q, pq + p * s)
            if parts[i][1].is_zero():
                parts.pop(i)
            return
    parts.append((o, p))


def _nested_commutators(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Sum of the bracket patterns of the ``len(mats)``-th Magnus term."""

    def c(a, b):
        return a @ b - b @ a

    m = len(mats)
    if m == 1:
        return mats[0]
    if m == 2:
        a1, a2 = mats
        return c(a1, a2)
    if m == 3:
        a1, a2, a3 = mats
        return c(a1, c(a2, a3)) + c(c(a1, a2), a3)
    if m == 4:
        a1, a2, a3, a4 = mats
        return (
            c(c(c(a1, a2), a3), a4)
            + c(a1, c(c(a2, a3), a4))
            + c(a1, c(a2, c(a3, a4)))
            + c(a2, c(a3, c(a4, a1)))
        )
    raise ValueError(f"Magnus order {m} not supported (max {MAX_ORDER})")


def knot_coefficients(sys: SystemSpec, pins: Mapping | None = None) -> list:
    """Per term, the list of K coefficient polynomials (constant or a variable)."""
    pins = pins or {}
    out = []
    for j, t in enumerate(sys.terms):
        row = []
        for k in range(1, sys.K + 1):
            v = VarId(j, k)
            if t.pinned is not None:
                row.append(Polynomial.constant(t.pinned))
            elif v in pins:
                row.append(Polynomial.constant(pins[v]))
            else:
                row.append(Polynomial.var(v))
        out.append(row)
    return out


def _run_weight(quadrature: str) -> Callable[[int], float]:
    if quadrature == "simplex":
        return lambda r: 1.0 / math.factorial(r)
    if quadrature == "rectangle":
        return lambda r: 1.0
    raise ValueError(f"unknown quadrature {quadrature!r}")


def ordered_knot_sum(coeffs: Sequence[Sequence[Polynomial]], quadrature="simplex") -> Polynomial:
    """``sum_{k_1 >= ... >= k_m} w(k) prod_p coeffs[p][k_p]``.

    With ``"simplex"`` weights a run of ``r`` equal consecutive knot indices
    carries ``1/r!``, the volume fraction of the tied cell of the ordered time
    simplex; this makes each term exact for piecewise-constant controls.
    ``"rectangle"`` uses weight one everywhere. Runs in O(K m^2) polynomial
    operations by carrying, for every knot, the partial sums keyed by the
    length of the current run of ties.
    """
    weight = _run_weight(quadrature)
    m = len(coeffs)
    K = len(coeffs[0])
    runs = [{1: coeffs[m - 1][k]} for k in range(K)]
    for p in range(m - 2, -1, -1):
        nxt = []
        below = Polynomial()
        for k in range(K):
            c = coeffs[p][k]
            entry = {}
            if not below.is_zero() and not c.is_zero():
                entry[1] = c * below
            for r, poly in runs[k].items():
                entry[r + 1] = c * poly
            nxt.append(entry)
            for r, poly in runs[k].items():
                below = below + poly * weight(r)
        runs = nxt
    total = Polynomial()
    for entry in runs:
        for r, poly in entry.items():
            total = total + poly * weight(r)
    return total


def discretize_term(
    sys: SystemSpec,
    m: int,
    pins: Mapping | None = None,
    quadrature: str = "simplex",
    max_monomials: int = DEFAULT_MONOMIAL_BUDGET,
) -> OperatorPolynomial:
    """Discretised Magnus term ``Omega_m`` as an :class:`OperatorPolynomial`.

    Parameters
    ----------
    sys : SystemSpec
    m : int
        Order, 1 to 4.
    pins : mapping VarId -> float, optional
        Free-control values to substitute as constants.
    quadrature : {"simplex", "rectangle"}
        Weighting of tied knot indices, see :func:`ordered_knot_sum`.
    max_monomials : int
        Resource cap on the total number of monomials.
    """
    if m not in _ORDER_DENOMINATOR:
        raise ValueError(f"Magnus order must be in 1..{MAX_ORDER}, got {m}")
    gens = [sys.generator(j) for j in range(len(sys.terms))]
    coeffs = knot_coefficients(sys, pins)
    scale = sys.dt**m / _ORDER_DENOMINATOR[m]
    ref = max(np.linalg.norm(g) for g in gens) ** m
    out = OperatorPolynomial(sys.dim)
    count = 0
    for js in product(range(len(gens)), repeat=m):
        mat = _nested_commutators([gens[j] for j in js])
        if np.linalg.norm(mat) <= 1e-14 * max(ref, 1.0):
            continue
        poly = ordered_knot_sum([coeffs[j] for j in js], quadrature) * scale
        count += len(poly)
        if count > max_monomials:
            raise BudgetExceededError(
                f"Omega_{m} exceeds the monomial budget of {max_monomials}; reduce K or the order"
            )
        _accumulate(out.parts, mat, poly)
    return out


def assemble(sys: SystemSpec, order: int, pins=None, quadrature="simplex", max_monomials=DEFAULT_MONOMIAL_BUDGET):
    """Truncated expansion ``sum_{m <= order} Omega_m``."""
    if order not in _ORDER_DENOMINATOR:
        raise ValueError(f"Magnus order must be in 1..{MAX_ORDER}, got {order}")
    total = OperatorPolynomial(sys.dim)
    for m in range(1, order + 1):
        total = total + discretize_term(sys, m, pins, quadrature, max_monomials)
    return total


def evaluate_omega(op: OperatorPolynomial, u: Mapping) -> np.ndarray:
    return op.evaluate(u)


def normalize_bounds(sys: SystemSpec, bounds) -> dict:
    """Bounds as ``{j: array (K, 2)}`` for every free control.

    Accepts a single ``(lo, hi)`` pair for all controls, or a mapping from
    control index to either a pair or a length-K list of pairs.
    """
    free = sys.free_controls
    if bounds is None:
        raise ValueError("bounds are required for every free control")
    if not isinstance(bounds, Mapping):
        bounds = {j: bounds for j in free}
    out = {}
    for j in free:
        if j not in bounds:
            raise ValueError(f"no bounds for free control {j}")
        b = np.asarray(bounds[j], dtype=float)
        if b.shape == (2,):
            b = np.tile(b, (sys.K, 1))
        if b.shape != (sys.K, 2):
            raise ValueError(f"bounds for control {j} must be a pair or K pairs, got shape {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError(f"control {j} is unbounded")
        if np.any(b[:, 0] > b[:, 1]):
            raise ValueError(f"control {j} has lo > hi")
        out[j] = b
    return out


def convergence_bound(sys: SystemSpec, bounds=None) -> tuple:
    """Upper bound on ``int_0^T ||A(s)||_2 ds`` and whether it is below pi."""
    nb = normalize_bounds(sys, bounds) if sys.free_controls else {}
    total = 0.0
    for j, t in enumerate(sys.terms):
        norm = float(np.linalg.norm(t.matrix, 2))
        if t.pinned is not None:
            total += sys.T * abs(t.pinned) * norm
        else:
            amp = np.max(np.abs(nb[j]), axis=1)
            total += sys.dt * float(np.sum(amp)) * norm
    return total, total < np.pi


def midpoint_samples(profile: Callable[[float], float], K: int, dt: float) -> np.ndarray:
    """Knot values ``u(k) = profile((k - 1/2) dt)``, k = 1..K."""
    return np.array([profile((k - 0.5) * dt) for k in range(1, K + 1)], dtype=float)


def linear_drive_sy_coefficients(a: float, b: float, T: float, n_terms: int) -> np.ndarray:
    """Per-order coefficients of ``S_y / 1j`` in the linear-driving series."""
    if not 0 <= n_terms <= len(LINEAR_DRIVE_COEFFS):
        raise ValueError(f"n_terms must be in 0..{len(LINEAR_DRIVE_COEFFS)}")
    n = np.arange(1, n_terms + 1)
    return LINEAR_DRIVE_SIGN * b * np.array(LINEAR_DRIVE_COEFFS[:n_terms]) * a ** (2 * n - 1) * T ** (2 * n + 1)


def linear_drive_oracle(a: float, b: float, T: float, n_terms: int = 5) -> np.ndarray:
    """Analytic Magnus exponent for ``H(t) = a S_z + b t S_x``.

    The series is exact to first order in ``b``: the neglected terms start at
    ``a b^2 T^5`` (an ``S_z`` contribution of the third Magnus term).
    """
    sy = float(np.sum(linear_drive_sy_coefficients(a, b, T, n_terms)))
    return (a * T * S_Z + 0.5 * b * T**2 * S_X + sy * S_Y) / 1j


def coefficient_ratios() -> np.ndarray:
    """Successive ratios of the tabulated series coefficients (signed Bernoulli form)."""
    signed = np.array([(-1) ** (n + 1) * c for n, c in enumerate(LINEAR_DRIVE_COEFFS)])
    return signed[1:] / signed[:-1]


def check_anti_hermitian(op: OperatorPolynomial, tol=1e-9) -> bool:
    return all(is_anti_hermitian(o, tol) for o, _ in op.parts)
