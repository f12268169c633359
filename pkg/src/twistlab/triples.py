"""The four kinds of generalized spectral triples and their structure maps.

A triple is stored as dense matrices on H = V (x) S, where S carries the
chiral Clifford representation and V carries the "functions".  Algebra
elements are pairs (f, g) acting as f on the +1 chirality and g on the -1
chirality.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .clifford import (CliffordRep, Reflection, Signature, chiral_rep,
                       fundamental_symmetry_from_reflection)
from .krein import Twist, is_k_unitary, k_adjoint
from .linalg import (TAU_ALG, AntiUnitaryOp, adjoint, commutator, is_hermitian,
                     matrix_function_hermitian, residual_norm, twisted_commutator)

KINDS = ("ST", "PRST", "TST", "TPRST")
TWISTED_KINDS = ("TST", "TPRST")
KREIN_KINDS = ("PRST", "TPRST")


class TripleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# algebra


@dataclass(frozen=True)
class AlgebraElement:
    """A pair (f, g): scalars, or one value per point of V."""

    f: np.ndarray
    g: np.ndarray
    label: str = ""

    def __post_init__(self):
        f = np.asarray(self.f, dtype=complex)
        g = np.asarray(self.g, dtype=complex)
        if f.shape != g.shape:
            raise TripleError(f"pair components differ in shape: {f.shape} vs {g.shape}")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            raise TripleError("algebra element has non-finite values")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    @classmethod
    def pair(cls, a1: complex, a2: complex, label: str = "") -> "AlgebraElement":
        return cls(np.asarray(a1), np.asarray(a2), label)

    @property
    def kind(self) -> str:
        return "pair-scalar" if self.f.ndim == 0 else "per-site-pair"

    @property
    def in_a_prime(self) -> bool:
        return bool(np.max(np.abs(self.f - self.g), initial=0.0) <= TAU_ALG)

    def swapped(self) -> "AlgebraElement":
        return AlgebraElement(self.g, self.f, self.label)

    def star(self) -> "AlgebraElement":
        return AlgebraElement(self.f.conj(), self.g.conj(), self.label)


@dataclass(frozen=True)
class ChiralCarrier:
    """How pairs of functions act on H = V (x) S.

    ``point_action`` is "scalar" (V = C), "sites" (V = C^N, multiplication) or
    "matrix" (V = M_N(C), left multiplication by diagonal matrices).
    """

    spin_grading: np.ndarray
    point_action: str = "scalar"
    n_points: int = 1

    @property
    def v_dim(self) -> int:
        return {"scalar": 1, "sites": self.n_points, "matrix": self.n_points ** 2}[self.point_action]

    @property
    def dim(self) -> int:
        return self.v_dim * self.spin_grading.shape[0]

    def function_op(self, values: np.ndarray) -> np.ndarray:
        if self.point_action == "scalar":
            return np.asarray(values, dtype=complex).reshape(1, 1)
        values = np.broadcast_to(np.asarray(values, dtype=complex), (self.n_points,))
        if self.point_action == "sites":
            return np.diag(values)
        return np.kron(np.diag(values), np.eye(self.n_points))

    def lift(self, spin_op: np.ndarray) -> np.ndarray:
        """I_V (x) spin_op."""
        return np.kron(np.eye(self.v_dim), spin_op)

    @property
    def grading(self) -> np.ndarray:
        return self.lift(self.spin_grading)

    def render(self, a: AlgebraElement) -> np.ndarray:
        eye = np.eye(self.spin_grading.shape[0])
        p_plus = 0.5 * (eye + self.spin_grading)
        p_minus = 0.5 * (eye - self.spin_grading)
        return np.kron(self.function_op(a.f), p_plus) + np.kron(self.function_op(a.g), p_minus)


def random_elements(rng: np.random.Generator, n_points: int | None, count: int,
                    prime: bool = False, prefix: str = "a") -> list[AlgebraElement]:
    shape = () if n_points is None else (n_points,)
    out = []
    for i in range(count):
        f = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        g = f if prime else rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        out.append(AlgebraElement(f, g, f"{prefix}{i}"))
    return out


def random_unitary_element(rng: np.random.Generator, n_points: int | None,
                           prime: bool = False) -> AlgebraElement:
    shape = () if n_points is None else (n_points,)
    alpha = rng.uniform(0, 2 * np.pi, shape)
    beta = alpha if prime else rng.uniform(0, 2 * np.pi, shape)
    return AlgebraElement(np.exp(1j * alpha), np.exp(1j * beta), "u")


def random_k_unitary_element(rng: np.random.Generator, n_points: int | None) -> AlgebraElement:
    """(f, 1/conj(f)): unitary for the product twisted by a pair swap, not unitary itself."""
    shape = () if n_points is None else (n_points,)
    f = rng.uniform(0.5, 2.0, shape) * np.exp(1j * rng.uniform(0, 2 * np.pi, shape))
    return AlgebraElement(f, 1.0 / f.conj(), "u_K")


# ---------------------------------------------------------------------------
# real structure


def charge_conjugation(gammas: Sequence[np.ndarray], sign: int) -> np.ndarray | None:
    """Unitary u with u conj(gamma) u^dagger = sign * gamma for every gamma, if any."""
    dim = gammas[0].shape[0]
    eye = np.eye(dim)
    # Row-major vec: vec(A X B) = (A kron B^T) vec(X).
    system = np.vstack([np.kron(eye, adjoint(g)) - sign * np.kron(g, eye)
                        for g in gammas])
    _, svals, vh = np.linalg.svd(system)
    if svals[-1] > 1e-8:
        return None
    x = vh[-1].conj().reshape(dim, dim)
    scale = np.trace(adjoint(x) @ x).real / dim
    x = x / np.sqrt(scale)
    pivot = x.flat[np.argmax(np.abs(x) > 1e-8)]
    x = x * (abs(pivot) / pivot)
    return x


def spinor_charge_conjugation(rep: CliffordRep) -> tuple[np.ndarray, int]:
    for sign in (1, -1):
        u = charge_conjugation(rep.gammas, sign)
        if u is not None:
            return u, sign
    raise TripleError(f"no charge conjugation for {rep.sig}")


def transpose_permutation(n: int) -> np.ndarray:
    """Permutation sending vec(psi) to vec(psi^T) for psi in M_n (row-major)."""
    perm = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            perm[j * n + i, i * n + j] = 1.0
    return perm


def _best_sign(target: np.ndarray, reference: np.ndarray) -> tuple[int, float]:
    res = {s: residual_norm(target - s * reference) for s in (1, -1)}
    sign = min(res, key=res.get)
    return sign, res[sign]


@dataclass(frozen=True)
class RealStructure:
    j: AntiUnitaryOp
    eps: int
    eps_p: int
    eps_pp: int
    eps_ppp: int | None
    residuals: dict = field(default_factory=dict, compare=False)

    @classmethod
    def measure(cls, u: np.ndarray, dirac: np.ndarray, grading: np.ndarray,
                k: np.ndarray | None = None, tol: float = TAU_ALG) -> "RealStructure":
        """Read the four signs off J = u o conj against D, Gamma and K."""
        j = AntiUnitaryOp(u)
        dim = u.shape[0]
        eps, r_eps = _best_sign(j.square(), np.eye(dim))
        eps_p, r_p = _best_sign(j.conjugate(dirac), dirac)
        eps_pp, r_pp = _best_sign(j.conjugate(grading), grading)
        kmat = np.eye(dim) if k is None else k
        eps_ppp, r_ppp = _best_sign(kmat @ u @ adjoint(kmat).conj(), u)
        residuals = {"eps": r_eps, "eps_p": r_p, "eps_pp": r_pp, "eps_ppp": r_ppp}
        if max(r_eps, r_p, r_pp) > tol:
            raise TripleError(f"J does not square/commute to a sign: {residuals}")
        return cls(j, eps, eps_p, eps_pp, eps_ppp if r_ppp <= tol else None, residuals)

    def with_twist(self, k: np.ndarray, tol: float = TAU_ALG) -> "RealStructure":
        eps_ppp, r_ppp = _best_sign(k @ self.j.u @ adjoint(k).conj(), self.j.u)
        residuals = dict(self.residuals, eps_ppp=r_ppp)
        return replace(self, eps_ppp=eps_ppp if r_ppp <= tol else None, residuals=residuals)

    def conjugate(self, op: np.ndarray) -> np.ndarray:
        return self.j.conjugate(op)


# ---------------------------------------------------------------------------
# triples


@dataclass(frozen=True)
class GeneralizedSpectralTriple:
    kind: str
    algebra: tuple[np.ndarray, ...]
    dirac: np.ndarray
    grading: np.ndarray
    real: RealStructure | None
    twist: Twist
    product_k: Twist
    labels: tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TripleError(f"unknown kind {self.kind!r}")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"a{i}" for i in range(len(self.algebra))))

    @property
    def dim(self) -> int:
        return self.dirac.shape[0]

    @property
    def twisted(self) -> bool:
        return self.kind in TWISTED_KINDS

    @property
    def duality_k(self) -> np.ndarray:
        """The non-trivial implementer among twist and product (identity for ST)."""
        for t in (self.twist, self.product_k):
            if not t.is_identity:
                return t.k_matrix
        return np.eye(self.dim, dtype=complex)

    def derivation(self, a: np.ndarray) -> np.ndarray:
        if self.twisted:
            return twisted_commutator(self.dirac, a, self.twist.k_matrix)
        return commutator(self.dirac, a)

    def rho(self, a: np.ndarray) -> np.ndarray:
        return self.twist.rho(a)

    def residuals(self) -> dict[str, float]:
        """Self-adjointness for the kind's product, and the commutant property."""
        if self.kind in KREIN_KINDS:
            sa = residual_norm(k_adjoint(self.dirac, self.product_k) - self.dirac)
        else:
            sa = residual_norm(self.dirac - adjoint(self.dirac))
        out = {"selfadjoint": sa}
        if self.real is not None:
            opp = [opposite_action(b, self.real) for b in self.algebra]
            out["commutant"] = max((residual_norm(commutator(a, bo))
                                    for a in self.algebra for bo in opp), default=0.0)
        return out


def opposite_action(b, real: RealStructure | None) -> np.ndarray:
    """J b^dagger J^{-1}."""
    if real is None:
        raise TripleError("opposite action needs a real structure")
    return real.conjugate(adjoint(b))


def kind_for(twist: Twist, product: Twist) -> str:
    return {(True, True): "ST", (True, False): "PRST",
            (False, True): "TST", (False, False): "TPRST"}[(twist.is_identity, product.is_identity)]


def build_four_kinds(base: GeneralizedSpectralTriple, k) -> dict[str, GeneralizedSpectralTriple]:
    """ST, K-PRST (D^K = K D), K-TST and K-TPRST (D^K = K D) sharing V, Gamma and J."""
    if base.kind != "ST":
        raise TripleError("base triple must be an ST")
    twist = k if isinstance(k, Twist) else Twist.from_matrix(k)
    if not twist.fundamental:
        raise TripleError("K must be a fundamental symmetry")
    real = None if base.real is None else base.real.with_twist(twist.k_matrix)
    if real is not None and real.eps_ppp is None:
        raise TripleError("rho(J) is not +-J for this K; pairing rejected")
    dual_dirac = twist.k_matrix @ base.dirac
    out = {
        "ST": replace(base, real=real),
        "PRST": replace(base, kind="PRST", dirac=dual_dirac, real=real, product_k=twist),
        "TST": replace(base, kind="TST", real=real, twist=twist),
        "TPRST": replace(base, kind="TPRST", dirac=dual_dirac, real=real, twist=twist,
                         product_k=twist),
    }
    for kind, t in out.items():
        res = t.residuals()["selfadjoint"]
        if res > TAU_ALG:
            raise TripleError(f"{kind} Dirac operator fails its self-adjointness class ({res:.3e})")
    return out


# ---------------------------------------------------------------------------
# one-forms, fluctuations, actions


@dataclass(frozen=True)
class OneForm:
    terms: tuple[tuple[np.ndarray, np.ndarray], ...]
    twisted: bool
    rendered: np.ndarray


def one_form(t: GeneralizedSpectralTriple, terms: Sequence[tuple[np.ndarray, np.ndarray]]) -> OneForm:
    """sum a [D, b] for untwisted kinds, sum rho(a) [D, b]_rho for twisted ones."""
    rendered = np.zeros((t.dim, t.dim), dtype=complex)
    for a, b in terms:
        left = t.rho(a) if t.twisted else a
        rendered = rendered + left @ t.derivation(b)
    return OneForm(tuple(terms), t.twisted, rendered)


def fluctuation_sign(t: GeneralizedSpectralTriple) -> int:
    if t.real is None:
        raise TripleError("fluctuations need a real structure")
    if t.kind in KREIN_KINDS:
        if t.real.eps_ppp is None:
            raise TripleError("rho(J) is not +-J")
        return t.real.eps_p * t.real.eps_ppp
    return t.real.eps_p


def fluctuate(t: GeneralizedSpectralTriple, a_form) -> np.ndarray:
    """D + A + s J A J^{-1}."""
    a_mat = a_form.rendered if isinstance(a_form, OneForm) else a_form
    if a_mat.shape != t.dirac.shape:
        raise TripleError("one-form lives on a different space")
    s = fluctuation_sign(t)
    return t.dirac + a_mat + s * t.real.conjugate(a_mat)


def implement_unitary(t: GeneralizedSpectralTriple, u: np.ndarray) -> np.ndarray:
    """U = u J u J^{-1}."""
    if t.real is None:
        raise TripleError("needs a real structure")
    return u @ t.real.conjugate(u)


def inner_fluctuation(t: GeneralizedSpectralTriple, u: np.ndarray, flavor: str = "unitary",
                      k: np.ndarray | None = None) -> np.ndarray:
    """Conjugate D by U = u J u J^{-1} the way the triple's kind requires.

    flavor "unitary": ST U D U^dagger, TST U D U^{dagger K}, PRST U D U^dagger,
    TPRST U D U^{dagger K}.  flavor "k_unitary" swaps the two adjoints.
    """
    kmat = t.duality_k if k is None else k
    if flavor == "unitary":
        if not is_k_unitary(u, np.eye(t.dim)):
            raise TripleError("u is not unitary")
        use_k_adjoint = t.kind in TWISTED_KINDS
    elif flavor == "k_unitary":
        if not is_k_unitary(u, kmat):
            raise TripleError("u is not K-unitary")
        use_k_adjoint = t.kind not in TWISTED_KINDS
    else:
        raise TripleError(f"unknown flavor {flavor!r}")
    big_u = implement_unitary(t, u)
    right = k_adjoint(big_u, kmat) if use_k_adjoint else adjoint(big_u)
    return big_u @ t.dirac @ right


def inner_product_matrix(t: GeneralizedSpectralTriple) -> np.ndarray:
    return t.product_k.k_matrix


def fermionic_action(t: GeneralizedSpectralTriple, psi: np.ndarray,
                     a_form=None) -> complex:
    """<psi, D_A psi> in the triple's own product."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (t.dim,):
        raise TripleError(f"spinor of shape {psi.shape} for a triple of dim {t.dim}")
    d_a = t.dirac if a_form is None else fluctuate(t, a_form)
    return complex(np.vdot(psi, inner_product_matrix(t) @ (d_a @ psi)))


def cutoff(name: str) -> Callable[[np.ndarray], np.ndarray]:
    table = {
        "exp": lambda x: np.exp(-x),
        "gauss": lambda x: np.exp(-x * x),
    }
    if name not in table:
        raise TripleError(f"unknown cutoff function {name!r}; choose from {sorted(table)}")
    return table[name]


def spectral_action(t: GeneralizedSpectralTriple, a_form=None, cutoff_scale: float = 1.0,
                    f: Callable[[np.ndarray], np.ndarray] | str = "exp") -> float:
    """Tr f(D_A D_A^dagger / Lambda^2)."""
    if cutoff_scale <= 0:
        raise TripleError("cutoff scale must be positive")
    fn = cutoff(f) if isinstance(f, str) else f
    d_a = t.dirac if a_form is None else fluctuate(t, a_form)
    h = d_a @ adjoint(d_a) / cutoff_scale ** 2
    return float(np.trace(matrix_function_hermitian(h, fn)).real)


# ---------------------------------------------------------------------------
# axiom checks


@dataclass(frozen=True)
class ResidualReport:
    residual: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def first_order_check(t: GeneralizedSpectralTriple, tol: float = TAU_ALG) -> ResidualReport:
    """[[D, a], b°] (untwisted) or [[D, a]_rho, b°]_{rho°} over generator pairs."""
    if t.real is None:
        raise TripleError("first-order condition needs a real structure")
    kmat = t.twist.k_matrix
    worst = 0.0
    for a in t.algebra:
        da = t.derivation(a)
        for b in t.algebra:
            bo = opposite_action(b, t.real)
            if t.twisted:
                res = da @ bo - adjoint(kmat) @ bo @ kmat @ da
            else:
                res = commutator(da, bo)
            worst = max(worst, residual_norm(res))
    return ResidualReport(worst, tol, t.kind)


def self_adjointness_residual(t: GeneralizedSpectralTriple) -> float:
    return t.residuals()["selfadjoint"]


# ---------------------------------------------------------------------------
# exact finite instances


def matrix_dirac(rep: CliffordRep, hermitians: Sequence[np.ndarray]) -> np.ndarray:
    """sum_mu ad(M_mu) (x) gamma^mu on M_N(C) (x) S."""
    n = hermitians[0].shape[0]
    eye = np.eye(n)
    out = 0
    for m_mu, g in zip(hermitians, rep.gammas):
        ad = np.kron(m_mu, eye) - np.kron(eye, m_mu.T)
        out = out + np.kron(ad, g)
    return out


def _random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (x + adjoint(x))


@dataclass(frozen=True)
class ContextTriples:
    """Everything needed to exercise one signature-change context."""

    context: int
    sig: Signature
    rep: CliffordRep
    carrier: ChiralCarrier
    reflection: Reflection
    k: np.ndarray
    real_u: np.ndarray
    base_full: GeneralizedSpectralTriple
    base_prime: GeneralizedSpectralTriple
    clifford_dirac: np.ndarray
    rng_seed: int


def matrix_model_context(sig: Signature, context: int, n_points: int = 3, seed: int = 0,
                         n_generators: int = 8,
                         reflection: Reflection | None = None) -> ContextTriples:
    """Exact finite triples on M_N(C) (x) S for one signature-change context.

    Context 1 starts from the Euclidean Dirac operator and twists with the
    reflection implementer in the Euclidean rep.  Context 2 starts from the
    pseudo-Riemannian Dirac operator D_PR, which is K-self-adjoint, and uses
    K D_PR as the Hilbert-space Dirac operator.
    """
    if context not in (1, 2):
        raise TripleError("context must be 1 or 2")
    if sig.n % 2 == 0:
        raise TripleError("the twist by grading needs a reflection with an odd number of fixed directions")
    rng = np.random.default_rng(seed)
    rep = chiral_rep(sig.euclidean() if context == 1 else sig)
    if reflection is None:
        reflection = Reflection.fixing(sig.dim, range(sig.n))
    k_spin = fundamental_symmetry_from_reflection(rep, reflection)
    carrier = ChiralCarrier(rep.grading, "matrix", n_points)
    hermitians = [_random_hermitian(rng, n_points) for _ in range(sig.dim)]
    clifford_dirac = matrix_dirac(rep, hermitians)
    k = carrier.lift(k_spin)
    hilbert_dirac = clifford_dirac if context == 1 else k @ clifford_dirac
    u_spin, _ = spinor_charge_conjugation(rep)
    real_u = np.kron(transpose_permutation(n_points), u_spin)
    grading = carrier.grading
    real = RealStructure.measure(real_u, hilbert_dirac, grading)

    def base(prime: bool) -> GeneralizedSpectralTriple:
        elems = random_elements(rng, n_points, n_generators, prime=prime)
        return GeneralizedSpectralTriple(
            "ST", tuple(carrier.render(e) for e in elems), hilbert_dirac, grading, real,
            Twist.identity(carrier.dim), Twist.identity(carrier.dim),
            tuple(e.label for e in elems), name=f"ST({context}){' prime' if prime else ''}")

    return ContextTriples(context, sig, rep, carrier, reflection, k, real_u,
                          base(False), base(True), clifford_dirac, seed)


def pair_scalar_triple(rep: CliffordRep, dirac: np.ndarray,
                       elements: Sequence[AlgebraElement]) -> GeneralizedSpectralTriple:
    """ST on the spinor space alone with the pair-scalar algebra C^2."""
    carrier = ChiralCarrier(rep.grading)
    u, _ = spinor_charge_conjugation(rep)
    real = RealStructure.measure(u, dirac, carrier.grading)
    if not is_hermitian(dirac):
        raise TripleError("Dirac operator of an ST must be self-adjoint")
    return GeneralizedSpectralTriple(
        "ST", tuple(carrier.render(e) for e in elements), dirac, carrier.grading, real,
        Twist.identity(carrier.dim), Twist.identity(carrier.dim),
        tuple(e.label for e in elements))
