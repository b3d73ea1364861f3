import itertools

import numpy as np
import pytest

from meqoc.algebra import S_X, S_Y, S_Z, commutator
from meqoc.algebra import two_qubit_generator as T
from meqoc.errors import DimensionError, StructureError
from meqoc.lie import closure, identify_elements, is_operator_controllable

from conftest import random_hermitian

TRANSMON = [T("x", "0"), T("z", "0"), T("x", "x"), T("y", "y")]
LABELLED = {a + b: T(a, b) for a in "0xyz" for b in "0xyz" if a + b != "00"}


def svd_closure_dim(gens, tol=1e-8):
    """Independent oracle: saturate the span under all pairwise brackets, ranks by SVD."""
    n = gens[0].shape[0]
    mats = [1j * g - np.trace(1j * g) / n * np.eye(n) for g in gens]

    def basis(ms):
        v = np.array([np.concatenate([m.real.ravel(), m.imag.ravel()]) for m in ms])
        _, s, vt = np.linalg.svd(v, full_matrices=False)
        r = int(np.sum(s > tol * s[0]))
        return [(row[: n * n] + 1j * row[n * n:]).reshape(n, n) for row in vt[:r]]

    cur = basis(mats)
    while True:
        nxt = basis(cur + [commutator(a, b) for a, b in itertools.combinations(cur, 2)])
        if len(nxt) == len(cur):
            return len(cur)
        cur = nxt


def test_su2_from_two_spins():
    b = closure([S_X, S_Z])
    assert len(b) == 3 and is_operator_controllable(b, 2)
    assert identify_elements(b, {"y": S_Y}) == ["y"]


def test_single_generator():
    b = closure([S_Z])
    assert len(b) == 1 and not is_operator_controllable(b, 2)


def test_transmon_closure_is_ten_dimensional():
    b = closure(TRANSMON)
    assert len(b) == 10 == svd_closure_dim(TRANSMON)
    assert not is_operator_controllable(b, 4)
    assert b.depth_log == [(1, 4), (2, 4), (3, 2), (4, 0)]


def test_transmon_closure_contains_single_qubit_z_on_second_factor():
    # [T_xx, T_xy] = i T_0z; T_xy itself appears at depth three
    assert np.allclose(commutator(T("x", "x"), T("x", "y")), 1j * T("0", "z"))
    found = identify_elements(closure(TRANSMON), LABELLED)
    assert sorted(found) == sorted(["x0", "y0", "z0", "xx", "xy", "yx", "yy", "zx", "zy", "0z"])


def test_transmon_with_zz_is_controllable():
    b = closure(TRANSMON + [T("z", "z")])
    assert len(b) == 15 and is_operator_controllable(b, 4)


def test_basis_orthonormal_traceless(rng):
    gens = [random_hermitian(rng, 3) for _ in range(2)]
    b = closure(gens)
    v = np.array([np.concatenate([e.real.ravel(), e.imag.ravel()]) for e in b.elements])
    assert np.allclose(v @ v.T, np.eye(len(b)), atol=1e-9)
    assert all(abs(np.trace(e)) < 1e-9 for e in b.elements)
    assert all(np.allclose(e, -e.conj().T) for e in b.elements)
    assert len(b) == 8


def test_idempotent():
    b = closure(TRANSMON)
    assert len(closure(b.elements)) == len(b)


@pytest.mark.parametrize("perm", list(itertools.permutations(range(4)))[::5])
def test_order_independent(perm):
    assert len(closure([TRANSMON[i] for i in perm])) == 10


def test_monotone_and_capped(rng):
    gens = [T("z", "0"), T("0", "z")]
    dims = []
    for extra in [T("x", "0"), T("x", "x"), T("y", "z"), random_hermitian(rng, 4)]:
        gens.append(extra)
        dims.append(len(closure(gens)))
    assert dims == sorted(dims) and dims[-1] <= 15


def test_identity_component_dropped():
    assert len(closure([np.eye(2), S_X])) == 1


def test_errors():
    with pytest.raises(DimensionError):
        closure([S_X, np.eye(3)])
    with pytest.raises(StructureError):
        closure([np.array([[0, 1], [0, 0]])])
    with pytest.raises(ValueError):
        closure([])
