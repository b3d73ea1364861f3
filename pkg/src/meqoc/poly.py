"""Sparse real polynomials over indexed control variables ``u_j(k)``.

A monomial is a canonical tuple of ``(VarId, exponent)`` pairs sorted by
variable; the empty tuple is the unit monomial. Non-commutative words are kept
separately (:class:`Word`) and only used to index moments.
"""
from __future__ import annotations

import math
from typing import Iterable, Mapping, NamedTuple

PRUNE_TOL = 1e-15


class VarId(NamedTuple):
    """Discretised control value: term index ``control`` at 1-based knot ``knot``."""

    control: int
    knot: int

    def __str__(self):
        return f"u{self.control}_{self.knot}"


Monomial = tuple  # tuple[tuple[VarId, int], ...]

UNIT = ()


def monomial_degree(mono: Monomial) -> int:
    return sum(e for _, e in mono)


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


def monomial_letters(mono: Monomial) -> tuple:
    """Expand to the sorted sequence of variables with repetition."""
    return tuple(v for v, e in mono for _ in range(e))


def monomial_from_letters(letters: Iterable[VarId]) -> Monomial:
    exps: dict = {}
    for v in letters:
        exps[v] = exps.get(v, 0) + 1
    return tuple(sorted(exps.items()))


def grlex_key(mono: Monomial):
    """Graded lexicographic sort key (degree first, then the letter sequence)."""
    return (monomial_degree(mono), monomial_letters(mono))


def monomial_str(mono: Monomial) -> str:
    if not mono:
        return "1"
    return "*".join(str(v) if e == 1 else f"{v}^{e}" for v, e in mono)


class Word:
    """Ordered product of letters, each a variable with an optional dagger.

    For real (Hermitian) variables the dagger acts as the identity on single
    letters, so ``dagger()`` only reverses the word.
    """

    __slots__ = ("letters", "real")

    def __init__(self, letters=(), real=True):
        norm = []
        for item in letters:
            if isinstance(item, tuple) and len(item) == 2 and isinstance(item[1], bool):
                v, d = item
            else:
                v, d = item, False
            norm.append((VarId(*v), False if real else d))
        self.letters = tuple(norm)
        self.real = real

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters, real=self.real and other.real)

    def dagger(self) -> "Word":
        return Word(tuple((v, not d if not self.real else False) for v, d in reversed(self.letters)), real=self.real)

    def __eq__(self, other):
        return isinstance(other, Word) and self.letters == other.letters

    def __hash__(self):
        return hash(self.letters)

    def __repr__(self):
        if not self.letters:
            return "Word(1)"
        return "Word(" + "*".join(str(v) + ("^+" if d else "") for v, d in self.letters) + ")"


def canonicalize(word: Word, commutative: bool = True) -> tuple:
    """Canonical key of a word.

    Commutative mode gives the sorted exponent form (a :data:`Monomial`);
    otherwise an order-preserving tuple of letters.
    """
    if commutative:
        if not word.real and any(d for _, d in word.letters):
            raise ValueError("commutative canonical form is only defined for real variables")
        return monomial_from_letters(v for v, _ in word.letters)
    if word.real:
        return tuple(v for v, _ in word.letters)
    return word.letters


class Polynomial:
    """Sparse real polynomial ``{monomial: coefficient}`` with zero pruning."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms = {}
        if terms:
            for mono, c in terms.items():
                c = float(c)
                if abs(c) >= PRUNE_TOL:
                    self.terms[mono] = c

    @classmethod
    def constant(cls, c: float) -> "Polynomial":
        return cls({UNIT: c})

    @classmethod
    def var(cls, v, coeff: float = 1.0) -> "Polynomial":
        return cls({((VarId(*v), 1),): coeff})

    @classmethod
    def _raw(cls, terms: dict) -> "Polynomial":
        p = cls.__new__(cls)
        p.terms = {m: c for m, c in terms.items() if abs(c) >= PRUNE_TOL}
        return p

    # -- structure ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not m for m in self.terms)

    @property
    def degree(self) -> int:
        return max((monomial_degree(m) for m in self.terms), default=0)

    def variables(self) -> list:
        return sorted({v for m in self.terms for v, _ in m})

    def coefficient(self, mono: Monomial) -> float:
        return self.terms.get(mono, 0.0)

    def __len__(self):
        return len(self.terms)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) + c
        return Polynomial._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            s = float(other)
            return Polynomial._raw({m: s * c for m, c in self.terms.items()})
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = monomial_mul(m1, m2)
                out[m] = out.get(m, 0.0) + c1 * c2
        return Polynomial._raw(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        out = Polynomial.constant(1.0)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return self.terms == other.terms

    def allclose(self, other: "Polynomial", atol=1e-12) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= atol for k in keys)

    # -- evaluation --------------------------------------------------------
    def evaluate(self, point: Mapping) -> float:
        total = 0.0
        for mono, c in self.terms.items():
            term = c
            for v, e in mono:
                try:
                    term *= point[v] ** e
                except KeyError:
                    raise KeyError(f"no value assigned to {v}") from None
            total += term
        return float(total)

    def substitute(self, pins: Mapping) -> "Polynomial":
        out: dict = {}
        for mono, c in self.terms.items():
            keep = []
            for v, e in mono:
                if v in pins:
                    c *= pins[v] ** e
                else:
                    keep.append((v, e))
            key = tuple(keep)
            out[key] = out.get(key, 0.0) + c
        return Polynomial._raw(out)

    # -- presentation ------------------------------------------------------
    def to_strings(self) -> list:
        """Sorted ``"coefficient * monomial"`` strings, stable across runs."""
        return [f"{c!r} * {monomial_str(m)}" for m, c in sorted(self.terms.items(), key=lambda t: grlex_key(t[0]))]

    def __repr__(self):
        return "Polynomial(" + (" + ".join(self.to_strings()) or "0") + ")"


def add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def evaluate(p: Polynomial, point: Mapping) -> float:
    return p.evaluate(point)


def substitute_pinned(p: Polynomial, pins: Mapping) -> Polynomial:
    return p.substitute(pins)


def monomials_up_to(variables, degree: int) -> list:
    """All commutative monomials of degree <= ``degree``, graded-lex order."""
    variables = sorted(VarId(*v) for v in variables)
    out = [UNIT]
    for d in range(1, degree + 1):
        for combo in _multisets(len(variables), d):
            out.append(monomial_from_letters(variables[i] for i in combo))
    return out


def _multisets(n: int, d: int):
    from itertools import combinations_with_replacement

    return combinations_with_replacement(range(n), d)


def n_monomials(n_vars: int, degree: int) -> int:
    return math.comb(n_vars + degree, degree)
