import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meqoc.errors import BudgetExceededError
from meqoc.moment import (
    build_localizing_block,
    build_moment_block,
    build_relaxation,
    enumerate_basis,
    flat_extension,
    format_relaxation,
    numerical_rank,
)
from meqoc.pipeline import hierarchy_bounds
from meqoc.poly import UNIT, Polynomial, VarId
from meqoc.sdp import solve

U, V = VarId(0, 1), VarId(0, 2)
u, v = Polynomial.var(U), Polynomial.var(V)


def grid_min(f, lo=-1.0, hi=1.0, step=1e-4):
    x = np.arange(lo, hi + step / 2, step)
    return float(np.min(f(x)))


@pytest.mark.parametrize("n, r, size", [(1, 1, 2), (2, 2, 6), (3, 2, 10), (2, 3, 10)])
def test_basis_size(n, r, size):
    b = enumerate_basis([VarId(0, k) for k in range(1, n + 1)], r)
    assert len(b) == size == math.comb(n + r, r)
    assert b.words[0] == UNIT and b.index[UNIT] == 0


def test_single_letter_noncommutative_matches():
    c = enumerate_basis([U], 2, commutative=True)
    nc = enumerate_basis([U], 2, commutative=False)
    assert len(c) == len(nc) == 3


def test_noncommutative_words_distinguish_order():
    nc = enumerate_basis([U, V], 2, commutative=False)
    assert len(nc) == 1 + 2 + 4
    block = build_moment_block(nc)
    keys = {next(iter(t)) for t in block.entries.values()}
    assert (U, V) in keys and (V, U) in keys


def test_basis_budget():
    with pytest.raises(BudgetExceededError):
        enumerate_basis([VarId(0, k) for k in range(1, 11)], 3, max_size=100)
    with pytest.raises(ValueError):
        enumerate_basis([U], -1)


def test_moment_block_structure():
    b = enumerate_basis([U], 1)
    blk = build_moment_block(b)
    assert blk.side == 2
    assert blk.entries[(0, 0)] == {UNIT: 1.0}
    assert blk.entries[(0, 1)] == {((U, 1),): 1.0}
    assert blk.entries[(1, 1)] == {((U, 2),): 1.0}


def test_point_moments_psd():
    relax = build_relaxation(u * u, [], 1)
    y = relax.point_moments({U: 0.3})
    m = relax.moment_matrix(y)
    assert np.allclose(m, [[1, 0.3], [0.3, 0.09]])
    assert np.linalg.eigvalsh(m)[0] >= -1e-15


def test_localizing_examples():
    b = enumerate_basis([U], 1)
    q = 1 - u * u
    blk = build_localizing_block(q, b, 1)
    assert blk.side == 1
    assert blk.entries[(0, 0)] == {UNIT: 1.0, ((U, 2),): -1.0}
    relax = build_relaxation(u * u, [q], 1)
    y = relax.point_moments({U: 0.5})
    assert relax.blocks[1].evaluate(relax.moment_map(y))[0, 0] == pytest.approx(0.75)


def test_localizing_constant_scales_moment_block():
    b = enumerate_basis([U, V], 1)
    blk = build_localizing_block(Polynomial.constant(2.5), b, 1)
    mom = build_moment_block(b)
    assert blk.side == mom.side
    for key, terms in mom.entries.items():
        assert blk.entries[key] == {m: 2.5 * c for m, c in terms.items()}


def test_localizing_degree_too_high():
    with pytest.raises(ValueError):
        build_localizing_block(u**3, enumerate_basis([U], 1), 1)


def test_order_too_small():
    with pytest.raises(ValueError):
        build_relaxation(u**4 - u**2, [1 - u * u], 1)


@pytest.mark.parametrize(
    "p, q, r, expected",
    [
        (u * u, [], 1, 0.0),
        (u, [u, 1 - u], 1, 0.0),
        (u**4 - u**2, [1 - u * u], 2, grid_min(lambda x: x**4 - x**2)),
    ],
)
def test_relaxation_values(p, q, r, expected):
    relax = build_relaxation(p, q, r)
    sol = solve(relax.to_sdp())
    assert sol.optimal
    assert sol.primal_value == pytest.approx(expected, abs=1e-6)


def test_quartic_grid_oracle_value():
    assert grid_min(lambda x: x**4 - x**2) == pytest.approx(-0.25, abs=1e-8)


def test_hierarchy_monotone():
    p, q = u**4 - u**2, [1 - u * u]
    b = hierarchy_bounds(p, q, orders=(1, 2, 3))
    assert b[0] == -np.inf
    assert b[0] <= b[1] <= b[2] + 1e-7


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_point_evaluation_is_feasible(a, c):
    p = u**2 * v - 3 * u * v + v**4
    cons = [1 - u * u, 1 - v * v]
    relax = build_relaxation(p, cons, 2)
    y = relax.point_moments({U: a, V: c})
    sdp = relax.to_sdp()
    assert min(sdp.min_eigenvalues(y)) >= -1e-12
    assert relax.objective_value(y) == pytest.approx(p.evaluate({U: a, V: c}), abs=1e-12)


def test_flat_extension_on_point_moments():
    relax = build_relaxation(u**4 - u**2, [1 - u * u], 2)
    y = relax.point_moments({U: 1 / np.sqrt(2)})
    assert flat_extension(relax, y) == (1, 1, True)


def test_flat_extension_on_solution():
    relax = build_relaxation(u**4 - u**2, [1 - u * u], 3)
    sol = solve(relax.to_sdp())
    full, sub, flag = flat_extension(relax, sol.y)
    # two global minimisers at +-1/sqrt(2)
    assert flag and full == 2


def test_numerical_rank():
    assert numerical_rank(np.diag([1.0, 1e-7, 0.0])) == 1
    assert numerical_rank(np.diag([1.0, 1e-5])) == 2
    assert numerical_rank(np.zeros((2, 2))) == 0


def test_pretty_printer():
    relax = build_relaxation(u * u, [1 - u * u], 1)
    text = format_relaxation(relax)
    assert "basis 2" in text and "localizing[0]" in text
