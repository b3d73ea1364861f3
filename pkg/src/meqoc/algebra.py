"""Dense complex linear algebra for small operator problems.

Matrices are plain complex ``numpy`` arrays of shape ``(N, N)``. Hamiltonians
are in angular-frequency units with hbar = 1, so the generator of the
Schrodinger flow is ``A = H / 1j``.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy import linalg as sla

from .errors import BranchCutWarning, DimensionError, StructureError

DEFAULT_TOL = 1e-9

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI = {"0": SIGMA_0, "x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

# spin-1/2 operators, S = sigma / 2
S_X = SIGMA_X / 2
S_Y = SIGMA_Y / 2
S_Z = SIGMA_Z / 2


def as_cmatrix(a, name="matrix") -> np.ndarray:
    """Coerce to a complex square matrix, raising on anything else."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    return m


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a, tol=DEFAULT_TOL) -> bool:
    a = np.asarray(a, dtype=complex)
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= tol)


def is_anti_hermitian(a, tol=DEFAULT_TOL) -> bool:
    a = np.asarray(a, dtype=complex)
    return bool(np.max(np.abs(a + dagger(a)), initial=0.0) <= tol)


def is_unitary(a, tol=DEFAULT_TOL) -> bool:
    a = np.asarray(a, dtype=complex)
    eye = np.eye(a.shape[-1])
    return bool(np.max(np.abs(dagger(a) @ a - eye), initial=0.0) <= tol)


def is_traceless(a, tol=DEFAULT_TOL) -> bool:
    return bool(abs(np.trace(np.asarray(a, dtype=complex))) <= tol)


def hs_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Real Hilbert-Schmidt inner product ``Re tr(a^dagger b)``."""
    return float(np.real(np.vdot(a, b)))


def commutator(a, b) -> np.ndarray:
    a = as_cmatrix(a, "A")
    b = as_cmatrix(b, "B")
    _same_dim(a, b)
    return a @ b - b @ a


def kron(a, b) -> np.ndarray:
    return np.kron(as_cmatrix(a, "A"), as_cmatrix(b, "B"))


def two_qubit_generator(alpha: str, beta: str) -> np.ndarray:
    """Two-qubit generator ``T_ab = sigma_a (x) sigma_b / 2``.

    ``alpha`` labels the first tensor factor; ``"0"`` stands for the identity,
    so ``two_qubit_generator("x", "0")`` is ``sigma_x (x) I / 2``.
    """
    return np.kron(PAULI[alpha], PAULI[beta]) / 2


def exp_anti_hermitian(a, tol=DEFAULT_TOL) -> np.ndarray:
    """Unitary ``exp(a)`` of an anti-Hermitian matrix (or a stack of them).

    Uses the eigendecomposition of the Hermitian matrix ``1j * a`` so that the
    phases are exponentiated exactly and the result is unitary to rounding.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {a.shape}")
    if not is_anti_hermitian(a, tol * max(1.0, float(np.max(np.abs(a), initial=0.0)))):
        raise StructureError("exp_anti_hermitian: input is not anti-Hermitian")
    h = 1j * a
    h = (h + dagger(h)) / 2
    w, v = np.linalg.eigh(h)
    # a = -1j * h
    return (v * np.exp(-1j * w)[..., None, :]) @ dagger(v)


def log_unitary(u, tol=DEFAULT_TOL) -> np.ndarray:
    """Principal anti-Hermitian logarithm of a unitary matrix.

    Eigenphases are taken in (-pi, pi]. An eigenvalue at -1 sits on the branch
    cut; its phase is mapped to +pi and a :class:`BranchCutWarning` is issued.
    """
    u = as_cmatrix(u, "U")
    if not is_unitary(u, max(tol, 1e-9)):
        raise StructureError("log_unitary: input is not unitary")
    # complex Schur form of a normal matrix is diagonal with a unitary basis,
    # which stays orthonormal for degenerate eigenvalues (unlike eig)
    t, q = sla.schur(u, output="complex")
    phases = np.angle(np.diag(t))
    near_cut = np.abs(np.abs(phases) - np.pi) < 1e-8
    if np.any(near_cut):
        warnings.warn("unitary has an eigenvalue at -1; phase mapped to +pi", BranchCutWarning, stacklevel=2)
        phases = np.where(near_cut, np.pi, phases)
    log = (q * (1j * phases)[None, :]) @ dagger(q)
    return (log - dagger(log)) / 2


def trace_norm(a) -> float:
    """Sum of singular values."""
    return float(np.sum(np.linalg.svd(np.asarray(a, dtype=complex), compute_uv=False)))


def trace_distance(rho, sigma, tol=DEFAULT_TOL) -> float:
    """``tr|rho - sigma| / 2`` for Hermitian arguments."""
    rho = as_cmatrix(rho, "rho")
    sigma = as_cmatrix(sigma, "sigma")
    _same_dim(rho, sigma)
    if not (is_hermitian(rho, tol) and is_hermitian(sigma, tol)):
        raise StructureError("trace_distance expects Hermitian inputs")
    diff = rho - sigma
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + dagger(diff)) / 2))))


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((a + dagger(a)) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ dagger(v)


def fidelity(rho, sigma, tol=1e-8) -> float:
    """Uhlmann fidelity ``tr sqrt(sqrt(sigma) rho sqrt(sigma))`` of two density matrices."""
    rho = as_cmatrix(rho, "rho")
    sigma = as_cmatrix(sigma, "sigma")
    _same_dim(rho, sigma)
    for name, m in (("rho", rho), ("sigma", sigma)):
        if not is_hermitian(m, tol):
            raise StructureError(f"fidelity: {name} is not Hermitian")
        if np.min(np.linalg.eigvalsh((m + dagger(m)) / 2)) < -tol:
            raise StructureError(f"fidelity: {name} is not positive semidefinite")
        if abs(np.trace(m) - 1) > tol:
            raise StructureError(f"fidelity: {name} does not have unit trace")
    root = _psd_sqrt(sigma)
    w = np.linalg.eigvalsh(root @ rho @ root)
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))))
    return min(f, 1.0)


def frobenius_overlap(u, v) -> float:
    """``sqrt(|tr(v^dagger u)|)``; insensitive to a global phase of either argument."""
    u = as_cmatrix(u, "U")
    v = as_cmatrix(v, "V")
    _same_dim(u, v)
    return float(np.sqrt(abs(np.vdot(v, u))))


def matrix_from_pairs(rows) -> np.ndarray:
    """Parse a row-major nested list of ``[re, im]`` pairs."""
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"matrix literal must be N x N x 2, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def matrix_to_pairs(m) -> list:
    m = as_cmatrix(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]
