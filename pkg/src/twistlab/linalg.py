"""Dense complex linear algebra shared by every other module.

Operators are plain numpy arrays (or scipy sparse matrices for the lattice
code).  Everything here is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh
from scipy.sparse.linalg import norm as sparse_fro_norm

TAU_ALG = 1e-10

NORM_RTOL = 1e-12
NORM_MAX_ITER = 10_000
DENSE_NORM_CUTOFF = 64
_START_SEED = 20_240_611


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class NotHermitianError(ValueError):
    pass


class PowerIterationError(RuntimeError):
    """Power iteration hit its iteration cap; carries the last iterate."""

    def __init__(self, message: str, estimate: float, vector: np.ndarray):
        super().__init__(message)
        self.estimate = estimate
        self.vector = vector


def as_matrix(obj) -> np.ndarray:
    """Validate a square, finite complex matrix and return it as complex128."""
    mat = np.asarray(obj, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix has non-finite entries")
    return mat


def _check_same_shape(*ops) -> None:
    shapes = {op.shape for op in ops}
    if len(shapes) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(shapes)}")


def adjoint(op):
    """Conjugate transpose."""
    return op.conj().T


def commutator(a, b):
    _check_same_shape(a, b)
    return a @ b - b @ a


def anticommutator(a, b):
    _check_same_shape(a, b)
    return a @ b + b @ a


def conjugate_by(k, x):
    """Inner action x -> k x k^dagger."""
    _check_same_shape(k, x)
    return k @ x @ adjoint(k)


def twisted_commutator(d, a, k):
    """D a - rho(a) D with rho(a) = K a K^dagger.

    ``k`` may be a raw matrix or anything with a ``k_matrix`` attribute.
    """
    kmat = getattr(k, "k_matrix", k)
    _check_same_shape(d, a, kmat)
    return d @ a - conjugate_by(kmat, a) @ d


def _start_vector(dim: int) -> np.ndarray:
    # A fixed pseudo-random start.  An all-ones start sits in the zero-momentum
    # sector of translation-invariant lattice operators and never leaves it.
    rng = np.random.default_rng(_START_SEED)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def operator_norm(op, rtol: float = NORM_RTOL, max_iter: int = NORM_MAX_ITER,
                  dense_cutoff: int = DENSE_NORM_CUTOFF, method: str = "auto") -> float:
    """Largest singular value of a square operator.

    Small matrices go straight to a Hermitian eigensolve of O^dagger O.  Larger
    dense ones use power iteration on O^dagger O.  Large sparse ones use
    Lanczos (ARPACK) instead, because lattice operators have nearly degenerate
    top singular values and plain power iteration stalls on them.
    ``method`` forces "power" or "lanczos".
    """
    if method not in ("auto", "power", "lanczos"):
        raise ValueError(f"unknown norm method {method!r}")
    dim = op.shape[0]
    if op.shape != (dim, dim):
        raise DimensionError(f"expected a square operator, got shape {op.shape}")
    if dim == 0:
        return 0.0
    if dim <= dense_cutoff:
        dense = op.toarray() if sp.issparse(op) else np.asarray(op, dtype=complex)
        evals = np.linalg.eigvalsh(adjoint(dense) @ dense)
        return float(np.sqrt(max(evals[-1], 0.0)))

    if method == "lanczos" or (method == "auto" and sp.issparse(op)):
        return _lanczos_norm(op, rtol)
    op_h = adjoint(op)
    v = _start_vector(dim)
    est = 0.0
    for _ in range(max_iter):
        w = op_h @ (op @ v)
        new_est = float(np.vdot(v, w).real)
        wnorm = np.linalg.norm(w)
        if wnorm == 0.0:
            return 0.0
        v = w / wnorm
        if abs(new_est - est) <= rtol * abs(new_est):
            return float(np.sqrt(new_est))
        est = new_est
    raise PowerIterationError(
        f"power iteration did not converge in {max_iter} steps", float(np.sqrt(est)), v)


def _lanczos_norm(op, rtol: float) -> float:
    op_h = adjoint(op)
    dim = op.shape[0]
    gram = LinearOperator((dim, dim), matvec=lambda x: op_h @ (op @ x), dtype=complex)
    val = eigsh(gram, k=1, which="LA", tol=rtol, v0=_start_vector(dim),
                return_eigenvectors=False)
    return float(np.sqrt(max(val[0].real, 0.0)))


def residual_norm(op) -> float:
    """Size of a residual operator: exact for small matrices, Frobenius above.

    The Frobenius norm bounds the operator norm from above, so a residual that
    passes under it also passes under the operator norm.
    """
    if sp.issparse(op):
        if op.shape[0] <= DENSE_NORM_CUTOFF:
            return operator_norm(op)
        return float(sparse_fro_norm(op))
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] <= DENSE_NORM_CUTOFF:
        return operator_norm(op) if op.ndim == 2 else float(np.linalg.norm(op))
    return float(np.linalg.norm(op))


def is_hermitian(h, tol: float = TAU_ALG) -> bool:
    return residual_norm(h - adjoint(h)) <= tol


def is_unitary(u, tol: float = TAU_ALG) -> bool:
    eye = np.eye(u.shape[0])
    return residual_norm(adjoint(u) @ u - eye) <= tol


def matrix_function_hermitian(h, f: Callable[[np.ndarray], np.ndarray],
                              tol: float = TAU_ALG) -> np.ndarray:
    """V f(Lambda) V^dagger for Hermitian H = V Lambda V^dagger."""
    h = as_matrix(h)
    if not is_hermitian(h, tol):
        raise NotHermitianError("matrix is not Hermitian")
    h = 0.5 * (h + adjoint(h))
    evals, vecs = np.linalg.eigh(h)
    return (vecs * f(evals)) @ adjoint(vecs)


@dataclass(frozen=True)
class AntiUnitaryOp:
    """psi -> u conj(psi)."""

    u: np.ndarray

    def __post_init__(self):
        u = as_matrix(self.u)
        if not is_unitary(u):
            raise ValueError("unitary part is not unitary")
        object.__setattr__(self, "u", u)

    @property
    def dim(self) -> int:
        return self.u.shape[0]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return antiunitary_apply(self, psi)

    def square(self) -> np.ndarray:
        """The linear operator J^2 = u conj(u)."""
        return self.u @ self.u.conj()

    def conjugate(self, op):
        """The linear operator J O J^{-1} = u conj(O) u^dagger."""
        _check_same_shape(self.u, op)
        return self.u @ op.conj() @ adjoint(self.u)


def antiunitary_apply(j: AntiUnitaryOp, psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[0] != j.dim:
        raise DimensionError(f"vector of length {psi.shape[0]} for operator of dim {j.dim}")
    return j.u @ psi.conj()
