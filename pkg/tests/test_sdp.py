import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meqoc.moment import build_relaxation
from meqoc.poly import Polynomial, VarId
from meqoc.sdp import LmiBlock, SdpProblem, solve

u = Polynomial.var(VarId(0, 1))


def two_by_two():
    # [[y, 1], [1, y]] >= 0
    return SdpProblem(1, [1.0], [LmiBlock(2, {(0, 1): 1.0}, {0: {(0, 0): 1.0, (1, 1): 1.0}})])


def test_two_by_two():
    sol = solve(two_by_two())
    assert sol.optimal
    assert sol.y[0] == pytest.approx(1.0, abs=1e-7)
    assert abs(sol.gap) < 1e-7
    assert sol.dual_value <= sol.primal_value + abs(sol.gap) + 1e-12


def test_quartic_relaxation():
    sol = solve(build_relaxation(u**4 - u**2, [1 - u * u], 2).to_sdp())
    assert sol.primal_value == pytest.approx(-0.25, abs=1e-6)
    assert min(sol.min_eigenvalues) >= -1e-6


def test_zero_objective_feasibility():
    relax = build_relaxation(Polynomial(), [], 1, variables=[VarId(0, 1), VarId(0, 2)])
    sol = solve(relax.to_sdp())
    assert sol.optimal and sol.primal_value == pytest.approx(0, abs=1e-8)
    assert sol.y[relax.moment_index[()]] == 1.0


def test_pinned_only_problem():
    p = SdpProblem(1, [2.0], [LmiBlock(1, {(0, 0): 1.0}, {0: {(0, 0): 1.0}})], pinned=[(0, 3.0)])
    sol = solve(p)
    assert sol.optimal and sol.primal_value == 6.0


def test_diagonal_blocks_lp():
    # min -y1 - y2 s.t. y1 <= 1, y2 <= 2, y1, y2 >= 0
    blk = LmiBlock(4, {(0, 0): 1.0, (1, 1): 2.0}, {0: {(0, 0): -1.0, (2, 2): 1.0}, 1: {(1, 1): -1.0, (3, 3): 1.0}},
                   diagonal=True)
    sol = solve(SdpProblem(2, [-1.0, -1.0], [blk]))
    assert sol.optimal
    assert np.allclose(sol.y, [1, 2], atol=1e-6)


def test_infeasible_detected():
    # y >= 1 and y <= 0
    p = SdpProblem(1, [0.0], [LmiBlock(1, {(0, 0): -1.0}, {0: {(0, 0): 1.0}}), LmiBlock(1, {}, {0: {(0, 0): -1.0}})])
    sol = solve(p, max_iter=200)
    assert not sol.optimal


def test_max_iter_status():
    sol = solve(build_relaxation(u**4 - u**2, [1 - u * u], 3).to_sdp(), max_iter=2)
    assert sol.status == "max_iter" and sol.iterations == 2


def test_argument_errors():
    with pytest.raises(ValueError):
        solve(two_by_two(), tol=0)
    with pytest.raises(ValueError):
        solve(SdpProblem(1, [1.0], []))
    with pytest.raises(ValueError):
        SdpProblem(1, [1.0, 2.0], [])
    with pytest.raises(ValueError):
        LmiBlock(2, {(2, 0): 1.0})


def test_lower_triangle_entries_normalized():
    b = LmiBlock(2, {(1, 0): 3.0})
    assert b.constant == {(0, 1): 3.0}
    assert np.array_equal(b.value(np.zeros(0)), [[0, 3], [3, 0]])


def test_deterministic():
    a = solve(build_relaxation(u**4 - u**2, [1 - u * u], 2).to_sdp())
    b = solve(build_relaxation(u**4 - u**2, [1 - u * u], 2).to_sdp())
    assert np.array_equal(a.y, b.y) and a.iterations == b.iterations


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_psd_projection_problems(seed):
    # min tr(C X) over X = y-parametrized 3x3 PSD with trace 1 written as an LMI in 5 free entries
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 3))
    c = (a + a.T) / 2
    basis = [(0, 1), (0, 2), (1, 2), (1, 1), (2, 2)]
    lin = {i: {rc: 1.0} for i, rc in enumerate(basis)}
    # X00 = 1 - X11 - X22
    lin[3][(0, 0)] = -1.0
    lin[4][(0, 0)] = -1.0
    cost = np.array([2 * c[0, 1], 2 * c[0, 2], 2 * c[1, 2], c[1, 1] - c[0, 0], c[2, 2] - c[0, 0]])
    sol = solve(SdpProblem(5, cost, [LmiBlock(3, {(0, 0): 1.0}, lin)]))
    assert sol.optimal
    # optimum of tr(C X) over density matrices is the least eigenvalue
    assert sol.primal_value + c[0, 0] == pytest.approx(np.linalg.eigvalsh(c)[0], abs=1e-6)
    assert min(sol.min_eigenvalues) >= -1e-6
