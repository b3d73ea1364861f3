"""Lie closure of control generators and the operator-controllability test."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import as_cmatrix, is_anti_hermitian, is_hermitian
from .errors import DimensionError, StructureError

RANK_TOL = 1e-8


@dataclass
class LieBasis:
    """Orthonormal (under ``Re tr(A^dagger B)``) basis of a real matrix Lie algebra.

    ``depth_log`` holds ``(depth, n_new)`` per round; depth 1 is the span of
    the generators themselves, depth k adds brackets of k generators.
    """

    dim: int
    elements: list = field(default_factory=list)
    depth_log: list = field(default_factory=list)

    def __len__(self):
        return len(self.elements)


def _vec(m: np.ndarray) -> np.ndarray:
    return np.concatenate([m.real.ravel(), m.imag.ravel()])


def _normalize_generator(g: np.ndarray, n: int) -> np.ndarray:
    if is_hermitian(g):
        a = 1j * g
    elif is_anti_hermitian(g):
        a = g
    else:
        raise StructureError("generators must be Hermitian or anti-Hermitian")
    return a - np.trace(a) / n * np.eye(n)


class _Span:
    def __init__(self, n):
        self.n = n
        self.vecs = []
        self.mats = []

    def _su(self, m: np.ndarray) -> np.ndarray:
        # project onto traceless anti-Hermitian matrices to stop rounding drift
        a = (m - m.conj().T) / 2
        return a - np.trace(a) / self.n * np.eye(self.n)

    def insert(self, m: np.ndarray, tol=RANK_TOL):
        """Gram-Schmidt insert; returns the new unit element or None."""
        v = _vec(self._su(m))
        norm = np.linalg.norm(v)
        if norm == 0:
            return None
        r = v.copy()
        for _ in range(2):  # re-orthogonalise once for stability
            for q in self.vecs:
                r -= (q @ r) * q
        rn = np.linalg.norm(r)
        if rn <= tol * norm:
            return None
        half = self.n * self.n
        mat = self._su((r[:half] + 1j * r[half:]).reshape(self.n, self.n))
        q = _vec(mat)
        for p in self.vecs:
            q -= (p @ q) * p
        q /= np.linalg.norm(q)
        mat = (q[:half] + 1j * q[half:]).reshape(self.n, self.n)
        self.vecs.append(q)
        self.mats.append(mat)
        return mat


def closure(generators, n: int | None = None, max_rounds: int | None = None) -> LieBasis:
    """Smallest real Lie algebra containing ``generators``.

    Hermitian generators are mapped to ``1j * H``; traces are removed. Each
    round brackets the generators with the elements added in the previous
    round (right-normed brackets of generators span the whole algebra) and
    inserts the results by Gram-Schmidt in a fixed order.
    """
    gens = [as_cmatrix(g, "generator") for g in generators]
    if not gens:
        raise ValueError("closure needs at least one generator")
    if n is None:
        n = gens[0].shape[0]
    for g in gens:
        if g.shape != (n, n):
            raise DimensionError(f"generator of shape {g.shape}, expected ({n}, {n})")
    gens = [_normalize_generator(g, n) for g in gens]
    span = _Span(n)
    basis = LieBasis(n)
    frontier = [m for m in (span.insert(g) for g in gens) if m is not None]
    basis.depth_log.append((1, len(frontier)))
    cap = n * n - 1
    rounds = max_rounds if max_rounds is not None else n * n
    depth = 1
    while frontier and len(span.mats) < cap and depth < rounds:
        depth += 1
        new = []
        for g in gens:
            for x in frontier:
                added = span.insert(g @ x - x @ g)
                if added is not None:
                    new.append(added)
        basis.depth_log.append((depth, len(new)))
        frontier = new
    basis.elements = list(span.mats)
    return basis


def is_operator_controllable(basis: LieBasis, n: int | None = None) -> bool:
    n = basis.dim if n is None else n
    return len(basis.elements) == n * n - 1


def identify_elements(basis: LieBasis, labelled: dict, tol=1e-9) -> list:
    """Names from ``labelled`` whose (anti-Hermitian) matrices lie in the span."""
    span = _Span(basis.dim)
    for e in basis.elements:
        span.vecs.append(_vec(e))
    found = []
    for name, m in labelled.items():
        a = _normalize_generator(as_cmatrix(m), basis.dim)
        v = _vec(a)
        r = v - sum((q @ v) * q for q in span.vecs)
        if np.linalg.norm(r) <= tol * max(1.0, np.linalg.norm(v)):
            found.append(name)
    return found
