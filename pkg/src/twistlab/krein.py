"""Inner twists rho(x) = K x K^dagger, K-products, K-adjoints and Krein structure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (TAU_ALG, adjoint, as_matrix, conjugate_by, is_hermitian, is_unitary,
                     operator_norm, residual_norm)


class TwistError(ValueError):
    pass


@dataclass(frozen=True)
class Twist:
    """Unitary implementer K of an inner twist.

    ``theta`` is set when K^2 = e^{i theta} I; ``fundamental`` when K = K^dagger
    and K^2 = I, in which case K also defines a Krein product.
    """

    k_matrix: np.ndarray
    theta: float | None = None
    fundamental: bool = False

    def __post_init__(self):
        k = as_matrix(self.k_matrix)
        object.__setattr__(self, "k_matrix", k)
        if not is_unitary(k):
            raise TwistError("twist implementer is not unitary")
        eye = np.eye(k.shape[0])
        if self.fundamental and (not is_hermitian(k) or operator_norm(k @ k - eye) > TAU_ALG):
            raise TwistError("implementer marked fundamental but K != K^dagger or K^2 != I")
        if self.theta is not None and operator_norm(k @ k - np.exp(1j * self.theta) * eye) > TAU_ALG:
            raise TwistError(f"K^2 is not e^(i*{self.theta}) I")

    @classmethod
    def from_matrix(cls, k) -> "Twist":
        k = as_matrix(k)
        theta = check_regularity_form(k)
        fundamental = theta is not None and abs(theta) <= TAU_ALG and is_hermitian(k)
        return cls(k, theta, fundamental)

    @classmethod
    def identity(cls, dim: int) -> "Twist":
        return cls(np.eye(dim, dtype=complex), 0.0, True)

    @property
    def dim(self) -> int:
        return self.k_matrix.shape[0]

    @property
    def is_identity(self) -> bool:
        return operator_norm(self.k_matrix - np.eye(self.dim)) <= TAU_ALG

    def rho(self, x: np.ndarray) -> np.ndarray:
        return conjugate_by(self.k_matrix, x)

    def rho_inverse(self, x: np.ndarray) -> np.ndarray:
        return conjugate_by(adjoint(self.k_matrix), x)


def _kmat(k) -> np.ndarray:
    return k.k_matrix if isinstance(k, Twist) else np.asarray(k, dtype=complex)


@dataclass(frozen=True)
class KreinDecomposition:
    p_plus: np.ndarray
    p_minus: np.ndarray

    @classmethod
    def from_fundamental(cls, k) -> "KreinDecomposition":
        kmat = _kmat(k)
        eye = np.eye(kmat.shape[0])
        return cls(0.5 * (eye + kmat), 0.5 * (eye - kmat))

    @property
    def dims(self) -> tuple[int, int]:
        return (int(round(np.trace(self.p_plus).real)), int(round(np.trace(self.p_minus).real)))

    def residuals(self, k) -> dict[str, float]:
        kmat = _kmat(k)
        eye = np.eye(kmat.shape[0])
        return {
            "completeness": operator_norm(self.p_plus + self.p_minus - eye),
            "orthogonality": operator_norm(self.p_plus @ self.p_minus),
            "eigen_plus": operator_norm(kmat @ self.p_plus - self.p_plus),
            "eigen_minus": operator_norm(kmat @ self.p_minus + self.p_minus),
        }


def k_inner(psi: np.ndarray, phi: np.ndarray, k) -> complex:
    """<psi, K phi>, conjugate-linear in psi."""
    kmat = _kmat(k)
    psi = np.asarray(psi)
    phi = np.asarray(phi)
    if not psi.shape == phi.shape == (kmat.shape[0],):
        raise TwistError(f"dimension mismatch: {psi.shape}, {phi.shape}, K {kmat.shape}")
    return complex(np.vdot(psi, kmat @ phi))


def k_adjoint(op, k):
    """K O^dagger K^dagger."""
    kmat = _kmat(k)
    if op.shape != kmat.shape:
        raise TwistError(f"dimension mismatch: {op.shape} vs K {kmat.shape}")
    return kmat @ adjoint(op) @ adjoint(kmat)


def is_k_unitary(u, k, tol: float = TAU_ALG) -> bool:
    u_k = k_adjoint(u, k)
    eye = np.eye(u.shape[0])
    return residual_norm(u @ u_k - eye) <= tol and residual_norm(u_k @ u - eye) <= tol


def is_k_selfadjoint(op, k, tol: float = TAU_ALG) -> bool:
    return residual_norm(k_adjoint(op, k) - op) <= tol


def check_regularity_form(k, tol: float = TAU_ALG) -> float | None:
    """theta with K^2 = e^{i theta} I and K = e^{i theta} K^dagger, else None.

    None stands for "not scalar": K^2 is not a multiple of the identity.
    """
    kmat = as_matrix(_kmat(k))
    eye = np.eye(kmat.shape[0])
    sq = kmat @ kmat
    lam = sq[0, 0]
    if abs(abs(lam) - 1.0) > tol:
        return None
    theta = float(np.angle(lam))
    if theta <= -np.pi + tol:
        theta = float(np.pi)
    phase = np.exp(1j * theta)
    if operator_norm(sq - phase * eye) > tol:
        return None
    if operator_norm(kmat - phase * adjoint(kmat)) > tol:
        return None
    return theta


@dataclass(frozen=True)
class KreinWitness:
    vector: np.ndarray
    sign: int
    phase: complex
    residual: float


@dataclass(frozen=True)
class HermiticityClass:
    kind: str
    theta: float
    decomposition: KreinDecomposition
    witnesses: tuple[KreinWitness, ...]

    @property
    def witness_residual(self) -> float:
        return max((w.residual for w in self.witnesses), default=0.0)


def _witness(proj: np.ndarray, kmat: np.ndarray, sign: int, phase: complex) -> KreinWitness | None:
    cols = np.linalg.norm(proj, axis=0)
    j = int(np.argmax(cols))
    if cols[j] <= TAU_ALG:
        return None
    psi = proj[:, j] / cols[j]
    expected = sign * phase * np.vdot(psi, psi)
    res = abs(k_inner(psi, psi, kmat) - expected)
    return KreinWitness(psi, sign, complex(sign * phase), float(res))


def hermiticity_classification(k) -> HermiticityClass:
    """Classify the K-product as positive definite, Hermitian indefinite, or phase-twisted."""
    kmat = as_matrix(_kmat(k))
    if not is_unitary(kmat):
        raise TwistError("K is not unitary")
    theta = check_regularity_form(kmat)
    if theta is None:
        raise TwistError("K^2 is not a multiple of the identity")
    eye = np.eye(kmat.shape[0])
    half_phase = np.exp(0.5j * theta)
    rotated = kmat / half_phase
    decomposition = KreinDecomposition(0.5 * (eye + rotated), 0.5 * (eye - rotated))
    witnesses = tuple(w for w in (
        _witness(decomposition.p_plus, kmat, +1, half_phase),
        _witness(decomposition.p_minus, kmat, -1, half_phase)) if w is not None)

    if abs(theta) <= TAU_ALG:
        if operator_norm(kmat - eye) <= TAU_ALG:
            kind = "positive_definite"
        elif operator_norm(kmat + eye) <= TAU_ALG:
            kind = "negative_definite"
        else:
            kind = "hermitian_indefinite"
    else:
        kind = "non_hermitian_phase"
    return HermiticityClass(kind, theta, decomposition, witnesses)


DEFAULT_PAIR_SAMPLES = (
    (1, 0), (0, 1), (1, 1), (1, -1), (1j, 0), (0, 1j), (1j, 1), (1, 1j),
    (2, -3), (0.5, 2j), (1 + 1j, 1 - 1j), (-1, 2), (3j, -1j), (0.25, -4),
    (1 + 2j, 0), (0, -2 + 1j),
)


@dataclass(frozen=True)
class GradingTwistReport:
    diagonal_block_norm: float
    block_form_residual: float
    block_unitarity_residual: float
    swap_residual: float
    sigma: np.ndarray
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.diagonal_block_norm, self.block_form_residual,
                   self.block_unitarity_residual, self.swap_residual) <= self.tolerance


def twist_by_grading_form_check(k, grading: np.ndarray, samples=DEFAULT_PAIR_SAMPLES,
                                tol: float = TAU_ALG) -> GradingTwistReport:
    """Check that K swaps the chiral blocks and hence the pair (a1, a2)."""
    kmat = as_matrix(_kmat(k))
    dim = kmat.shape[0]
    half = dim // 2
    chiral = np.diag([1.0] * half + [-1.0] * half)
    if grading.shape != kmat.shape or operator_norm(grading - chiral) > tol:
        raise TwistError("grading is not in chiral diagonal form")
    top_left, top_right = kmat[:half, :half], kmat[:half, half:]
    bottom_left, bottom_right = kmat[half:, :half], kmat[half:, half:]
    diag_norm = max(operator_norm(top_left), operator_norm(bottom_right))
    if is_hermitian(kmat):
        form_res = operator_norm(bottom_left - adjoint(top_right))
    else:
        form_res = 0.0
    eye = np.eye(half)
    unit_res = max(operator_norm(adjoint(top_right) @ top_right - eye),
                   operator_norm(adjoint(bottom_left) @ bottom_left - eye))
    p_plus, p_minus = 0.5 * (np.eye(dim) + grading), 0.5 * (np.eye(dim) - grading)
    swap = 0.0
    for a1, a2 in samples:
        a = a1 * p_plus + a2 * p_minus
        swapped = a2 * p_plus + a1 * p_minus
        swap = max(swap, operator_norm(conjugate_by(kmat, a) - swapped))
    return GradingTwistReport(diag_norm, form_res, unit_res, swap, top_right.copy(), tol)
