"""K-morphisms: D -> K D together with product -> K-product and rho -> rho o rho_K."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .clifford import CliffordRep, Reflection, reflected_metric
from .krein import Twist
from .linalg import TAU_ALG, adjoint, commutator, operator_norm, residual_norm
from .triples import GeneralizedSpectralTriple, TripleError, kind_for

KIND_ARROWS = {"ST": "TPRST", "TPRST": "ST", "PRST": "TST", "TST": "PRST"}


class CompositionError(ValueError):
    def __init__(self, message: str, commutator_norm: float):
        super().__init__(message)
        self.commutator_norm = commutator_norm


@dataclass(frozen=True)
class KMorphism:
    k: Twist
    # The frame reflection K was built from, when known.
    reflection: Reflection | None = None

    def __post_init__(self):
        k = self.k if isinstance(self.k, Twist) else Twist.from_matrix(self.k)
        if not k.fundamental:
            raise TripleError("a K-morphism needs a fundamental symmetry (K = K^dagger, K^2 = I)")
        object.__setattr__(self, "k", k)

    @property
    def matrix(self) -> np.ndarray:
        return self.k.k_matrix

    def __call__(self, t: GeneralizedSpectralTriple) -> GeneralizedSpectralTriple:
        return apply(self, t)


def _compose_implementer(k: np.ndarray, other: Twist, what: str) -> Twist:
    comm = operator_norm(commutator(k, other.k_matrix))
    if comm > TAU_ALG:
        raise CompositionError(f"K does not commute with the {what} implementer", comm)
    return Twist.from_matrix(k @ other.k_matrix)


def apply(phi: KMorphism, t: GeneralizedSpectralTriple) -> GeneralizedSpectralTriple:
    """Image of t: algebra K a K, Dirac K D, twist and product composed with K."""
    k = phi.matrix
    if k.shape != t.dirac.shape:
        raise TripleError(f"K of dim {k.shape[0]} on a triple of dim {t.dim}")
    twist = _compose_implementer(k, t.twist, "twist")
    product = _compose_implementer(k, t.product_k, "product")
    real = None if t.real is None else t.real.with_twist(k)
    # The kind follows from the composed implementers; with K the triple's own
    # implementer this realizes KIND_ARROWS, and K = I changes nothing.
    return replace(
        t, kind=kind_for(twist, product), algebra=tuple(k @ a @ k for a in t.algebra),
        dirac=k @ t.dirac, real=real, twist=twist, product_k=product)


def compose(phi1: KMorphism, phi2: KMorphism) -> KMorphism:
    """Morphism implemented by K1 K2; only defined when the implementers commute."""
    k1, k2 = phi1.matrix, phi2.matrix
    if k1.shape != k2.shape:
        raise TripleError("morphisms act on different dimensions")
    comm = operator_norm(commutator(k1, k2))
    if comm > TAU_ALG:
        raise CompositionError(f"[K1, K2] has norm {comm:.3e}; composition is not fundamental", comm)
    return KMorphism(Twist.from_matrix(k1 @ k2))


def triple_distance(t1: GeneralizedSpectralTriple, t2: GeneralizedSpectralTriple) -> float:
    """Largest residual between the matrix fields of two triples."""
    if len(t1.algebra) != len(t2.algebra):
        return float("inf")
    parts = [t1.dirac - t2.dirac, t1.grading - t2.grading,
             t1.twist.k_matrix - t2.twist.k_matrix,
             t1.product_k.k_matrix - t2.product_k.k_matrix]
    parts += [a - b for a, b in zip(t1.algebra, t2.algebra)]
    if t1.real is not None and t2.real is not None:
        parts.append(t1.real.j.u - t2.real.j.u)
    out = max(residual_norm(p) for p in parts)
    return out if t1.kind == t2.kind else float("inf")


@dataclass(frozen=True)
class TransportReport:
    k_selfadjoint_residual: float
    source_selfadjoint_residual: float
    target_selfadjoint_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.k_selfadjoint_residual, self.source_selfadjoint_residual,
                   self.target_selfadjoint_residual) <= self.tolerance


def selfadjointness_transport_check(phi: KMorphism, t: GeneralizedSpectralTriple,
                                    tol: float = TAU_ALG) -> TransportReport:
    """K D self-adjoint for (., .)_2 = (., K .)_1, given K = K^{dagger_1}."""
    k = phi.matrix
    k1 = t.product_k.k_matrix
    d = t.dirac
    # O is self-adjoint for <., M .> iff M O = O^dagger M.
    k_res = residual_norm(k1 @ adjoint(k) @ k1 - k)
    src_res = residual_norm(k1 @ d - adjoint(d) @ k1)
    target_product = k1 @ k
    kd = k @ d
    tgt_res = residual_norm(target_product @ kd - adjoint(kd) @ target_product)
    return TransportReport(k_res, src_res, tgt_res, tol)


def trace_metric_array(k: np.ndarray, rep: CliffordRep) -> np.ndarray:
    """2^{-m} Tr(K c(E_a) K c(E_b)) over frame indices."""
    size = rep.sig.dim
    out = np.zeros((size, size), dtype=complex)
    for a, ga in enumerate(rep.gammas):
        kgk = k @ ga @ k
        for b, gb in enumerate(rep.gammas):
            out[a, b] = np.trace(kgk @ gb) / rep.dim
    return out


def metric_transport(phi: KMorphism, rep: CliffordRep, tol: float = TAU_ALG) -> np.ndarray:
    """Metric read through K; equals g(r., .) when K comes from an odd reflection r.

    For a reflection fixing an even number of directions K c(v) K = -c(r v),
    so the comparison carries the sign (-1)^{k+1}.
    """
    k = phi.matrix
    if k.shape != (rep.dim, rep.dim):
        raise TripleError("K and the Clifford representation have different dimensions")
    arr = trace_metric_array(k, rep)
    if np.max(np.abs(arr.imag)) > tol or np.max(np.abs(arr - arr.T)) > tol:
        raise TripleError("K is not of reflection form: trace metric is not real symmetric")
    metric = arr.real
    if phi.reflection is not None:
        r = phi.reflection
        expected = (-1) ** (r.k + 1) * reflected_metric(rep, r)
        if np.max(np.abs(metric - expected)) > tol:
            raise TripleError("trace metric differs from the reflected metric")
    return metric


def adjoint_of_k(k: np.ndarray, k1: np.ndarray) -> np.ndarray:
    """K^{dagger_1} = K1 K^dagger K1."""
    return k1 @ adjoint(k) @ k1
