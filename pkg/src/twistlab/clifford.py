"""Gamma matrices in any even dimension and signature, gradings, reflections.

Signature (n, 2m-n): the first n frame directions square to +1, the remaining
2m-n to -1.  Pseudo-Riemannian gammas are the Euclidean ones with the last
2m-n multiplied by i, so both families share one grading.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .linalg import (TAU_ALG, adjoint, anticommutator, as_matrix, is_hermitian,
                     operator_norm)

log = logging.getLogger(__name__)

SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_1, SIGMA_2, SIGMA_3)


class CliffordError(ValueError):
    pass


@dataclass(frozen=True)
class Signature:
    m: int
    n: int

    def __post_init__(self):
        if self.m < 1:
            raise CliffordError(f"half-dimension must be positive, got m={self.m}")
        if not 0 <= self.n <= 2 * self.m:
            raise CliffordError(f"n={self.n} outside [0, {2 * self.m}]")

    @property
    def dim(self) -> int:
        return 2 * self.m

    @property
    def spinor_dim(self) -> int:
        return 2 ** self.m

    @property
    def is_euclidean(self) -> bool:
        return self.n == 2 * self.m

    @property
    def signs(self) -> np.ndarray:
        return np.array([1.0] * self.n + [-1.0] * (2 * self.m - self.n))

    @property
    def metric(self) -> np.ndarray:
        return np.diag(self.signs)

    def euclidean(self) -> "Signature":
        return Signature(self.m, 2 * self.m)


@dataclass(frozen=True)
class Reflection:
    """Frame-diagonal reflection; +1 entries are the fixed directions."""

    signs: tuple[int, ...]

    def __post_init__(self):
        signs = tuple(int(s) for s in self.signs)
        if any(s not in (1, -1) for s in signs):
            raise CliffordError(f"reflection signs must be +-1, got {signs}")
        object.__setattr__(self, "signs", signs)

    @classmethod
    def fixing(cls, dim: int, fixed: Sequence[int]) -> "Reflection":
        """Reflection fixing the listed (0-based) frame directions."""
        fixed = set(fixed)
        return cls(tuple(1 if a in fixed else -1 for a in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.signs)

    @property
    def k(self) -> int:
        return sum(1 for s in self.signs if s == 1)

    @property
    def fixed_indices(self) -> tuple[int, ...]:
        return tuple(a for a, s in enumerate(self.signs) if s == 1)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(np.array(self.signs, dtype=float))


@dataclass(frozen=True)
class CliffordRep:
    sig: Signature
    gammas: tuple[np.ndarray, ...]
    grading: np.ndarray
    basis_tag: str = "raw"
    chiral_change: np.ndarray | None = None
    # Raw value of i^{-m(2m-1)-n} prod(gammas) and the sign applied to it.
    grading_formula: np.ndarray | None = field(default=None, repr=False)
    grading_phase: complex = 1.0
    grading_convention: str = "formula"

    @property
    def dim(self) -> int:
        return self.grading.shape[0]

    @property
    def metric(self) -> np.ndarray:
        return self.sig.metric

    def chiral_projectors(self) -> tuple[np.ndarray, np.ndarray]:
        eye = np.eye(self.dim)
        return 0.5 * (eye + self.grading), 0.5 * (eye - self.grading)


def _euclidean_gammas(m: int) -> list[np.ndarray]:
    gammas = [SIGMA_1, SIGMA_2]
    for _ in range(m - 1):
        eye = np.eye(gammas[0].shape[0])
        gammas = ([np.kron(g, SIGMA_3) for g in gammas]
                  + [np.kron(eye, SIGMA_1), np.kron(eye, SIGMA_2)])
    return gammas


def _product(mats: Sequence[np.ndarray], dim: int) -> np.ndarray:
    return reduce(np.matmul, mats, np.eye(dim, dtype=complex))


def grading_prefactor(m: int, n: int) -> complex:
    return 1j ** ((-m * (2 * m - 1) - n) % 4)


def grading_residuals(gammas: Sequence[np.ndarray], grading: np.ndarray) -> dict[str, float]:
    eye = np.eye(grading.shape[0])
    return {
        "square": operator_norm(grading @ grading - eye),
        "hermitian": operator_norm(grading - adjoint(grading)),
        "anticommutes": max(operator_norm(anticommutator(grading, g)) for g in gammas),
    }


def clifford_residuals(rep: CliffordRep) -> dict[str, float]:
    """Max residual of every representation invariant."""
    g = rep.metric
    eye = np.eye(rep.dim)
    anti = max(
        operator_norm(anticommutator(ga, gb) - 2 * g[a, b] * eye)
        for a, ga in enumerate(rep.gammas) for b, gb in enumerate(rep.gammas))
    unit = max(operator_norm(adjoint(ga) @ ga - eye) for ga in rep.gammas)
    out = {"anticommutation": anti, "unitarity": unit}
    out.update({f"grading_{k}": v for k, v in grading_residuals(rep.gammas, rep.grading).items()})
    if rep.basis_tag == "chiral":
        half = rep.dim // 2
        target = np.diag([1.0] * half + [-1.0] * half)
        out["chiral_form"] = operator_norm(rep.grading - target)
    return out


def build_gamma(sig: Signature) -> CliffordRep:
    """Gamma matrices for ``sig`` with a grading shared with the Euclidean rep."""
    m, n = sig.m, sig.n
    euclid = _euclidean_gammas(m)
    gammas = tuple(g if a < n else 1j * g for a, g in enumerate(euclid))
    dim = sig.spinor_dim

    formula = grading_prefactor(m, n) * _product(gammas, dim)
    # Euclidean grading: the same formula at n = 2m, equal to i^m prod(gamma_R).
    euclid_grading = grading_prefactor(m, 2 * m) * _product(euclid, dim)

    res = grading_residuals(gammas, formula)
    if max(res.values()) > TAU_ALG:
        raise CliffordError(f"grading formula violates its invariants for {sig}: {res}")

    # Fix the overall sign so every signature shares the Euclidean grading.
    phase = complex(np.trace(adjoint(formula) @ euclid_grading) / dim)
    if abs(abs(phase) - 1) > TAU_ALG or operator_norm(phase * formula - euclid_grading) > TAU_ALG:
        raise CliffordError(f"grading for {sig} is not a phase multiple of the Euclidean one")
    phase = complex(np.round(phase.real), np.round(phase.imag))
    convention = "formula" if phase == 1 else f"formula*({phase.real:+.0f})"
    log.debug("grading convention for %s: %s", sig, convention)
    return CliffordRep(sig=sig, gammas=gammas, grading=phase * formula,
                       grading_formula=formula, grading_phase=phase,
                       grading_convention=convention)


def to_chiral_basis(rep: CliffordRep) -> CliffordRep:
    """Conjugate into the eigenbasis of the grading, +1 eigenspace first."""
    grading = rep.grading
    dim = rep.dim
    off_diag = grading - np.diag(np.diag(grading))
    if np.max(np.abs(off_diag)) <= TAU_ALG:
        order = np.argsort(-np.diag(grading).real, kind="stable")
        change = np.eye(dim, dtype=complex)[:, order]
    else:
        evals, vecs = np.linalg.eigh(0.5 * (grading + adjoint(grading)))
        change = vecs[:, ::-1]
        if not np.allclose(np.sort(evals), [-1.0] * (dim // 2) + [1.0] * (dim // 2), atol=1e-8):
            raise CliffordError("grading spectrum is not {+1, -1} with equal multiplicity")

    def conj(x):
        return adjoint(change) @ x @ change

    total = change if rep.chiral_change is None else rep.chiral_change @ change
    formula = None if rep.grading_formula is None else conj(rep.grading_formula)
    return CliffordRep(sig=rep.sig, gammas=tuple(conj(g) for g in rep.gammas),
                       grading=conj(grading), basis_tag="chiral", chiral_change=total,
                       grading_formula=formula, grading_phase=rep.grading_phase,
                       grading_convention=rep.grading_convention)


def chiral_rep(sig: Signature) -> CliffordRep:
    return to_chiral_basis(build_gamma(sig))


def chiral_blocks(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(top-left, top-right, bottom-left, bottom-right) halves of a chiral-basis matrix."""
    h = x.shape[0] // 2
    return x[:h, :h], x[:h, h:], x[h:, :h], x[h:, h:]


def frame_vector(dim: int, a: int) -> np.ndarray:
    v = np.zeros(dim)
    v[a] = 1.0
    return v


def clifford_action(rep: CliffordRep, v: Sequence[complex]) -> np.ndarray:
    """c(v) = sum_a v^a gamma^a."""
    v = np.asarray(v)
    if v.shape != (rep.sig.dim,):
        raise CliffordError(f"expected {rep.sig.dim} components, got shape {v.shape}")
    return np.tensordot(v, np.stack(rep.gammas), axes=1)


def negative_fixed_count(sig: Signature, r: Reflection) -> int:
    """Fixed directions of r on which the metric is negative."""
    return sum(1 for a in r.fixed_indices if sig.signs[a] < 0)


def fundamental_symmetry_from_reflection(rep: CliffordRep, r: Reflection,
                                         l: int | None = None) -> np.ndarray:
    """i^{-k(k-1)/2 - l} times the product of gammas over the fixed directions."""
    if r.dim != rep.sig.dim:
        raise CliffordError(f"reflection acts on {r.dim} directions, rep has {rep.sig.dim}")
    k = r.k
    if k == 0:
        raise CliffordError("reflection fixes no direction")
    if l is None:
        l = negative_fixed_count(rep.sig, r)
    phase = 1j ** ((-(k * (k - 1) // 2) - l) % 4)
    j_r = phase * _product([rep.gammas[a] for a in r.fixed_indices], rep.dim)
    eye = np.eye(rep.dim)
    if not is_hermitian(j_r) or operator_norm(j_r @ j_r - eye) > TAU_ALG:
        raise CliffordError(f"J_r for {r.signs} with l={l} is not a fundamental symmetry")
    return j_r


def parity_apply(j_r: np.ndarray, k: int, x: np.ndarray) -> np.ndarray:
    """(-1)^{k+1} J_r X J_r."""
    if j_r.shape != x.shape:
        raise CliffordError(f"dimension mismatch {j_r.shape} vs {x.shape}")
    return (-1) ** (k + 1) * (j_r @ x @ j_r)


def _scalar_part(x: np.ndarray, what: str) -> complex:
    dim = x.shape[0]
    value = np.trace(x) / dim
    if operator_norm(x - value * np.eye(dim)) > TAU_ALG:
        raise CliffordError(f"{what} is not proportional to the identity")
    return complex(value)


def reflected_metric(rep: CliffordRep, r: Reflection) -> np.ndarray:
    """g(v, r w) in the frame, read off from (1/2){c(E_a), c(r E_b)}."""
    size = rep.sig.dim
    out = np.zeros((size, size))
    for a in range(size):
        for b in range(size):
            x = 0.5 * anticommutator(rep.gammas[a], r.signs[b] * rep.gammas[b])
            val = _scalar_part(x, "anticommutator")
            out[a, b] = val.real
    return out


def metric_from_trace(rep: CliffordRep, v, w) -> float:
    """2^{-m} Tr(c(v) c(w))."""
    val = np.trace(clifford_action(rep, v) @ clifford_action(rep, w)) / rep.dim
    if abs(val.imag) > TAU_ALG:
        raise CliffordError(f"trace metric has imaginary part {val.imag:.3e}")
    return float(val.real)


@dataclass(frozen=True)
class TwistedCliffordReport:
    residual: float
    tolerance: float
    worst_pair: tuple[int, int]

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def twisted_clifford_check(rep: CliffordRep, k, g_target: np.ndarray,
                           tol: float = TAU_ALG) -> TwistedCliffordReport:
    """Compare (1/2){c(E_a), K c(E_b) K^dagger} with g_target[a, b] I.

    The residual is measured on the metric scale, so a flipped diagonal entry
    shows up as a residual of 2.
    """
    kmat = as_matrix(getattr(k, "k_matrix", k))
    eye = np.eye(rep.dim)
    worst, where = 0.0, (0, 0)
    for a, ga in enumerate(rep.gammas):
        for b, gb in enumerate(rep.gammas):
            twisted = kmat @ gb @ adjoint(kmat)
            res = operator_norm(0.5 * anticommutator(ga, twisted) - g_target[a, b] * eye)
            if res > worst:
                worst, where = res, (a, b)
    return TwistedCliffordReport(residual=worst, tolerance=tol, worst_pair=where)
