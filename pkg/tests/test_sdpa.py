import numpy as np
import pytest

from meqoc.moment import build_relaxation
from meqoc.poly import Polynomial, VarId
from meqoc.sdp import LmiBlock, SdpProblem, solve
from meqoc.sdpa import SdpaParseError, export_sdpa, import_sdpa

u = Polynomial.var(VarId(0, 1))
v = Polynomial.var(VarId(0, 2))

# min y  s.t.  y I - F0 >= 0 with F0 = -[[0, 1], [1, 0]]; written by hand from the format definition
REFERENCE_2X2 = """1
1
2
1.0
1 1 1 1 1.0
0 1 1 2 -1.0
1 1 2 2 1.0
"""


def two_by_two():
    return SdpProblem(1, [1.0], [LmiBlock(2, {(0, 1): 1.0}, {0: {(0, 0): 1.0, (1, 1): 1.0}})])


def same_problem(a: SdpProblem, b: SdpProblem):
    assert a.num_vars == b.num_vars
    assert np.array_equal(a.c, b.c)
    assert a.pinned == b.pinned
    assert len(a.blocks) == len(b.blocks)
    for x, y in zip(a.blocks, b.blocks):
        assert (x.side, x.diagonal) == (y.side, y.diagonal)
        assert {k: w for k, w in x.constant.items() if w} == y.constant
        assert {i: {k: w for k, w in c.items() if w} for i, c in x.linear.items() if any(c.values())} == y.linear


def test_hand_written_reference():
    assert export_sdpa(two_by_two()) == REFERENCE_2X2


def test_reference_imports_and_solves():
    p = import_sdpa(REFERENCE_2X2)
    same_problem(two_by_two(), p)
    assert solve(p).y[0] == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("r", [2, 3])
def test_round_trip_relaxation_bit_identical(r):
    p = build_relaxation(u**4 - 0.3 * u**2 * v + v**2 * (1 / 3), [1 - u * u, (v + 0.2) * (0.7 - v)], r).to_sdp()
    text = export_sdpa(p)
    q = import_sdpa(text)
    same_problem(p, q)
    assert export_sdpa(q) == text
    assert q.pinned == [(0, 1.0)]


def test_pinned_block_marker_and_rows():
    p = build_relaxation(u * u, [1 - u * u], 1).to_sdp()
    text = export_sdpa(p)
    assert "*pinned-block 3" in text.splitlines()[0]
    assert text.splitlines()[3].split() == ["2", "1", "-2"]


def test_no_pinned_rows_without_pins():
    text = export_sdpa(two_by_two())
    assert "pinned" not in text
    assert text.splitlines()[1] == "1"


def test_diagonal_block_negative_size():
    p = SdpProblem(1, [1.0], [LmiBlock(3, {(0, 0): 1.0}, {0: {(1, 1): 2.0}}, diagonal=True)])
    text = export_sdpa(p)
    assert text.splitlines()[2] == "-3"
    assert import_sdpa(text).blocks[0].diagonal


def test_comments_skipped():
    text = '"a comment\n* another\n' + REFERENCE_2X2
    same_problem(two_by_two(), import_sdpa(text))
    assert export_sdpa(two_by_two(), comment="hello").startswith('"hello\n')


def test_deterministic_bytes():
    p = build_relaxation(u**4 - u**2, [1 - u * u], 2)
    assert export_sdpa(p.to_sdp()) == export_sdpa(p.to_sdp())


def test_entries_sorted_by_block_row_col_var():
    lines = export_sdpa(build_relaxation(u**4 - u**2, [1 - u * u], 2).to_sdp()).splitlines()
    body = [line for line in lines if line[0] not in '"*'][4:]
    entries = [tuple(int(t) for t in line.split()[:4]) for line in body]
    keys = [(b, i, j, m) for m, b, i, j in entries]
    assert keys == sorted(keys)
    assert all(i <= j for _, _, i, j in entries)


@pytest.mark.parametrize(
    "text, line",
    [
        ("x\n1\n2\n1.0\n", 1),
        ("1\n1\n2\n1.0\n0 2 1 1 1.0\n", 5),
        ("1\n1\n2\n1.0\n3 1 1 1 1.0\n", 5),
        ("1\n1\n2\n1.0\n0 1 3 1 1.0\n", 5),
        ("1\n1\n2\n1.0 2.0\n", 4),
        ("1\n1\n2\n1.0\n0 1 1\n", 5),
    ],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(SdpaParseError) as exc:
        import_sdpa(text)
    assert exc.value.lineno == line
