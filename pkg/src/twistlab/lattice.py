"""Flat periodic lattices in even dimension and their Dirac operators.

H = C^{sites} (x) S with sites in row-major order (axis 0 slowest) and the
spinor index fastest.  Operators are scipy sparse CSR matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .clifford import (CliffordRep, Reflection, Signature, chiral_rep,
                       fundamental_symmetry_from_reflection)
from .linalg import TAU_ALG, matrix_function_hermitian, operator_norm, residual_norm
from .morphism import KMorphism, metric_transport

DEFAULT_BUDGET = 2 ** 16
BOUNDED_SLOPE = 0.1
UNBOUNDED_SLOPE = 0.8
SCHEMES = ("central", "spectral")


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class TorusLattice:
    m: int
    n_sites: int
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.n_sites < 4:
            raise LatticeError(f"need at least 4 sites per axis, got {self.n_sites}")
        if self.total_dim > self.budget:
            raise LatticeError(f"lattice dimension {self.total_dim} exceeds budget {self.budget}")

    @property
    def dim(self) -> int:
        return 2 * self.m

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_sites

    @property
    def site_count(self) -> int:
        return self.n_sites ** self.dim

    @property
    def spinor_dim(self) -> int:
        return 2 ** self.m

    @property
    def total_dim(self) -> int:
        return self.site_count * self.spinor_dim

    def coords(self) -> np.ndarray:
        """(site_count, 2m) array of points in [0, 1)^{2m}, row-major."""
        axes = [np.arange(self.n_sites) / self.n_sites] * self.dim
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return np.asarray(fn(self.coords()), dtype=complex)


def derivative_1d(n: int, scheme: str) -> sp.csr_matrix:
    """d/dx on n periodic points of the unit circle."""
    h = 1.0 / n
    if scheme == "central":
        shift = sp.eye(n, k=1, format="csr") + sp.eye(n, k=-(n - 1), format="csr")
        return ((shift - shift.T) / (2 * h)).tocsr()
    if scheme == "spectral":
        k = np.fft.fftfreq(n, d=1.0 / n)
        if n % 2 == 0:
            k[n // 2] = 0.0  # the Nyquist mode has no antisymmetric derivative
        dft = np.fft.fft(np.eye(n), axis=0)
        d = np.fft.ifft(2j * np.pi * k[:, None] * dft, axis=0)
        return sp.csr_matrix(np.real(d))
    raise LatticeError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")


def axis_derivative(lattice: TorusLattice, axis: int, scheme: str) -> sp.csr_matrix:
    n = lattice.n_sites
    before = sp.identity(n ** axis, format="csr")
    after = sp.identity(n ** (lattice.dim - axis - 1), format="csr")
    return sp.kron(sp.kron(before, derivative_1d(n, scheme)), after, format="csr")


def spin_lift(lattice: TorusLattice, spin_op: np.ndarray) -> sp.csr_matrix:
    return sp.kron(sp.identity(lattice.site_count, format="csr"), sp.csr_matrix(spin_op), format="csr")


@dataclass(frozen=True)
class LatticeDirac:
    lattice: TorusLattice
    scheme: str
    rep_r: CliffordRep
    rep_pr: CliffordRep
    d_r: sp.csr_matrix
    d_pr: sp.csr_matrix

    @property
    def sig(self) -> Signature:
        return self.rep_pr.sig

    @property
    def grading(self) -> sp.csr_matrix:
        return spin_lift(self.lattice, self.rep_r.grading)

    def pair(self, f: np.ndarray, g: np.ndarray) -> sp.csr_matrix:
        """Multiplication by (f, g): f on +1 chirality, g on -1 chirality."""
        eye = np.eye(self.lattice.spinor_dim)
        p_plus = 0.5 * (eye + self.rep_r.grading)
        p_minus = 0.5 * (eye - self.rep_r.grading)
        return (sp.kron(sp.diags(f), sp.csr_matrix(p_plus))
                + sp.kron(sp.diags(g), sp.csr_matrix(p_minus))).tocsr()

    def reflection_k(self, reflection: Reflection, pseudo: bool) -> sp.csr_matrix:
        rep = self.rep_pr if pseudo else self.rep_r
        return spin_lift(self.lattice, fundamental_symmetry_from_reflection(rep, reflection))

    def clifford_differential(self, f: np.ndarray, g: np.ndarray, pseudo: bool = False) -> sp.csr_matrix:
        """sum_mu gamma^mu (d_mu a) with the scheme's derivative applied to f and g.

        Equals i [D, a]_rho in the continuum; on the lattice it is free of the
        product-rule error that the matrix commutator picks up.
        """
        rep = self.rep_pr if pseudo else self.rep_r
        out = sp.csr_matrix((self.lattice.total_dim,) * 2, dtype=complex)
        for axis, gamma in enumerate(rep.gammas):
            d = axis_derivative(self.lattice, axis, self.scheme)
            out = out + spin_lift(self.lattice, gamma) @ self.pair(d @ f, d @ g)
        return out.tocsr()


def build_lattice_dirac(sig: Signature, n_sites: int, scheme: str = "central",
                        budget: int = DEFAULT_BUDGET) -> LatticeDirac:
    """D_R = -i sum gamma_R^a d_a and D_PR = -i sum gamma_PR^a d_a on the unit torus."""
    if scheme not in SCHEMES:
        raise LatticeError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    lattice = TorusLattice(sig.m, n_sites, budget)
    rep_r = chiral_rep(sig.euclidean())
    rep_pr = chiral_rep(sig)
    derivs = [axis_derivative(lattice, a, scheme) for a in range(lattice.dim)]

    def assemble(rep: CliffordRep) -> sp.csr_matrix:
        out = sum(sp.kron(d, sp.csr_matrix(g)) for d, g in zip(derivs, rep.gammas))
        return (-1j * out).tocsr()

    return LatticeDirac(lattice, scheme, rep_r, rep_pr, assemble(rep_r), assemble(rep_pr))


# ---------------------------------------------------------------------------
# boundedness


def classify_slope(slope: float, bounded: float = BOUNDED_SLOPE,
                   unbounded: float = UNBOUNDED_SLOPE) -> str:
    if slope <= bounded:
        return "bounded"
    if slope >= unbounded:
        return "unbounded"
    return "inconclusive"


def fit_slope(ns: Sequence[int], values: Sequence[float]) -> float:
    return float(np.polyfit(np.log(ns), np.log(values), 1)[0])


@dataclass(frozen=True)
class ScalingReport:
    n_list: tuple[int, ...]
    untwisted_norms: tuple[float, ...]
    twisted_norms: tuple[float, ...]
    untwisted_slope: float
    twisted_slope: float
    untwisted_verdict: str
    twisted_verdict: str
    transport_residual: float
    in_a_prime: bool

    @property
    def expected_untwisted(self) -> str:
        return "bounded" if self.in_a_prime else "unbounded"

    @property
    def passed(self) -> bool:
        return (self.untwisted_verdict == self.expected_untwisted
                and self.twisted_verdict == "bounded"
                and self.transport_residual <= TAU_ALG)


def lattice_commutators(ld: LatticeDirac, f: np.ndarray, g: np.ndarray,
                        k: sp.csr_matrix) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """([D_R, a], [D_R, a]_rho) for a = (f, g) and rho = K . K with K swapping chiralities.

    The central scheme uses the matrix commutators.  The spectral scheme uses
    [D, a]_rho = -i c(d a) with exact Fourier derivatives of f and g, and
    [D, a] = [D, a]_rho + (rho(a) - a) D; the matrix commutator of a Fourier
    multiplier with a pointwise product carries band-edge aliasing that grows
    like N.
    """
    a = ld.pair(f, g)
    rho_a = k @ a @ k
    d = ld.d_r
    if ld.scheme == "spectral":
        twisted = -1j * ld.clifford_differential(f, g)
    else:
        twisted = d @ a - rho_a @ d
    plain = twisted + (rho_a - a) @ d
    return plain.tocsr(), twisted.tocsr()


def commutator_scaling_scan(sig: Signature, f: Callable, g: Callable, n_list: Sequence[int],
                            scheme: str = "central", reflection: Reflection | None = None,
                            bounded: float = BOUNDED_SLOPE,
                            unbounded: float = UNBOUNDED_SLOPE) -> ScalingReport:
    """Growth of ||[D_R, a]|| and ||[D_R, a]_rho|| with N for a = (f, g)."""
    n_list = tuple(sorted(n_list))
    if len(n_list) < 3:
        raise LatticeError("need at least three lattice sizes to fit a slope")
    if reflection is None:
        reflection = Reflection.fixing(sig.dim, [0])
    untw, tw = [], []
    transport = 0.0
    prime = True
    for n in n_list:
        ld = build_lattice_dirac(sig, n, scheme)
        fv, gv = ld.lattice.sample(f), ld.lattice.sample(g)
        prime = prime and bool(np.max(np.abs(fv - gv)) <= TAU_ALG)
        a = ld.pair(fv, gv)
        k = ld.reflection_k(reflection, pseudo=False)
        d = ld.d_r
        plain, twisted = lattice_commutators(ld, fv, gv, k)
        untw.append(operator_norm(plain))
        tw.append(operator_norm(twisted))
        # Transport of the derivation, [K D, a]_rho' = K [D, a], is algebraic
        # and is checked on the matrix commutators.
        kd = k @ d
        dual = kd @ a - (k @ a @ k) @ kd
        transport = max(transport, residual_norm(dual - k @ (d @ a - a @ d)))
    s_u, s_t = fit_slope(n_list, untw), fit_slope(n_list, tw)
    return ScalingReport(n_list, tuple(untw), tuple(tw), s_u, s_t,
                         classify_slope(s_u, bounded, unbounded),
                         classify_slope(s_t, bounded, unbounded), transport, prime)


# ---------------------------------------------------------------------------
# distance / Lipschitz norms


def gradient_sup_oracle(grad: Callable[[np.ndarray], np.ndarray], dim: int,
                        resolution: int) -> float:
    """max |grad f| over a dense periodic grid (the Euclidean frame norm)."""
    axes = [np.arange(resolution) / resolution] * dim
    grid = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([x.ravel() for x in grid], axis=1)
    vals = np.asarray(grad(pts))
    return float(np.max(np.sqrt(np.sum(np.abs(vals) ** 2, axis=1))))


@dataclass(frozen=True)
class LipschitzReport:
    n_sites: int
    scheme: str
    commutator_norm: float
    gradient_sup: float
    relative_error: float
    collocation_norm: float | None
    tst_norm: float | None
    tst_relative_error: float | None


def _lipschitz_norm(ld: LatticeDirac, fv: np.ndarray, pseudo: bool, k: sp.csr_matrix | None) -> float:
    """||[D, a]|| (or ||K [D_PR, a]|| for the twisted-by-K2 variant)."""
    if ld.scheme == "spectral":
        op = ld.clifford_differential(fv, fv, pseudo=pseudo)
    else:
        d = ld.d_pr if pseudo else ld.d_r
        a = ld.pair(fv, fv)
        op = d @ a - a @ d
    if k is not None:
        op = k @ op
    return _block_or_power_norm(op, ld)


def _block_or_power_norm(op: sp.csr_matrix, ld: LatticeDirac) -> float:
    # Site-diagonal operators (spectral Clifford differentials) split into
    # spinor blocks, whose norms are exact.
    s = ld.lattice.spinor_dim
    coo = op.tocoo()
    if np.all(coo.row // s == coo.col // s):
        dense = np.zeros((ld.lattice.site_count, s, s), dtype=complex)
        np.add.at(dense, (coo.row // s, coo.row % s, coo.col % s), coo.data)
        return float(np.max(np.linalg.norm(dense, ord=2, axis=(1, 2))))
    return operator_norm(op)


def lipschitz_norm_check(sig: Signature, f: Callable, grad: Callable, n_sites: int,
                         scheme: str = "central", oracle_factor: int = 10,
                         reflection: Reflection | None = None) -> LipschitzReport:
    """Compare ||[D_R, a]|| for a = (f, f) with sup |grad f|.

    For odd n the same quantity is computed through the twisted triple built on
    K2 D_PR, whose twisted commutator is K2 [D_PR, a].
    """
    ld = build_lattice_dirac(sig, n_sites, scheme)
    fv = ld.lattice.sample(f)
    exact = gradient_sup_oracle(grad, sig.dim, oracle_factor * n_sites)
    norm = _lipschitz_norm(ld, fv, pseudo=False, k=None)
    rel = abs(norm - exact) / exact if exact > 0 else abs(norm)
    colloc = None
    if scheme == "spectral":
        a = ld.pair(fv, fv)
        colloc = operator_norm(ld.d_r @ a - a @ ld.d_r)
    tst = tst_rel = None
    if sig.n % 2 == 1:
        if reflection is None:
            reflection = Reflection.fixing(sig.dim, range(sig.n))
        k2 = ld.reflection_k(reflection, pseudo=True)
        tst = _lipschitz_norm(ld, fv, pseudo=True, k=k2)
        tst_rel = abs(tst - exact) / exact if exact > 0 else abs(tst)
    return LipschitzReport(n_sites, scheme, norm, exact, rel, colloc, tst, tst_rel)


# ---------------------------------------------------------------------------
# adjoint relations for the Clifford differential


@dataclass(frozen=True)
class UsefulRelationsReport:
    riemannian_residual: float
    pseudo_residual: float | None
    tolerance: float

    @property
    def passed(self) -> bool:
        worst = max(self.riemannian_residual, self.pseudo_residual or 0.0)
        return worst <= self.tolerance


def useful_relations_check(sig: Signature, f: Callable, g: Callable, n_sites: int,
                           scheme: str = "central", c_lat: float = 1.0,
                           reflection: Reflection | None = None) -> UsefulRelationsReport:
    """c_R(da)^dagger = c_R(d rho(a*)) and c_PR(da)^dagger = K2 c_PR(d a*) K2.

    c(da) := i [D, a]_rho, which is i [D, a] on functions with f = g.
    """
    ld = build_lattice_dirac(sig, n_sites, scheme)
    fv, gv = ld.lattice.sample(f), ld.lattice.sample(g)
    k1 = ld.reflection_k(Reflection.fixing(sig.dim, [0]), pseudo=False)

    def c_of(d, k, first, second):
        a = ld.pair(first, second)
        return 1j * (d @ a - (k @ a @ k) @ d)

    lhs = c_of(ld.d_r, k1, fv, gv).conj().T
    rhs = c_of(ld.d_r, k1, gv.conj(), fv.conj())
    r_res = residual_norm(lhs - rhs)
    p_res = None
    if sig.n % 2 == 1:
        if reflection is None:
            reflection = Reflection.fixing(sig.dim, range(sig.n))
        k2 = ld.reflection_k(reflection, pseudo=True)
        lhs = c_of(ld.d_pr, k2, fv, gv).conj().T
        rhs = k2 @ c_of(ld.d_pr, k2, fv.conj(), gv.conj()) @ k2
        p_res = residual_norm(lhs - rhs)
    tol = TAU_ALG if scheme == "spectral" else c_lat / n_sites
    return UsefulRelationsReport(r_res, p_res, tol)


# ---------------------------------------------------------------------------
# 4D Lorentzian demo


@dataclass(frozen=True)
class DemoReport:
    residuals: dict
    metric: np.ndarray
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.residuals.values()) <= self.tolerance


def boost(rep: CliffordRep, axis: int, rapidity: float) -> np.ndarray:
    """exp(rapidity/2 * gamma^1 gamma^axis), Hermitian for a space axis."""
    gen = rep.gammas[0] @ rep.gammas[axis]
    return matrix_function_hermitian(0.5 * rapidity * gen, np.exp)


def rotation(rep: CliffordRep, a: int, b: int, angle: float) -> np.ndarray:
    gen = rep.gammas[a] @ rep.gammas[b]
    # gen is anti-Hermitian for two space axes; i*gen is Hermitian.
    return matrix_function_hermitian(0.5j * angle * gen, lambda x: np.exp(-1j * x))


def lorentz4d_demo(n_sites: int = 4, seed: int = 0, n_spinors: int = 16,
                   rapidities: Sequence[float] = (0.0, 0.3, 1.0),
                   scheme: str = "central", tol: float = TAU_ALG) -> DemoReport:
    """Signature (1, 3): Krein self-adjointness, dual actions and boosts."""
    sig = Signature(2, 1)
    ld = build_lattice_dirac(sig, n_sites, scheme)
    reflection = Reflection.fixing(4, [0])
    k_spin = fundamental_symmetry_from_reflection(ld.rep_pr, reflection)
    k2 = spin_lift(ld.lattice, k_spin)
    d_pr = ld.d_pr
    d_hat = (k2 @ d_pr).tocsr()
    res = {
        "k_selfadjoint": residual_norm(k2 @ d_pr.conj().T @ k2 - d_pr),
        "dual_selfadjoint": residual_norm(d_hat - d_hat.conj().T),
    }

    rng = np.random.default_rng(seed)
    dim = ld.lattice.total_dim
    psis = rng.standard_normal((n_spinors, dim)) + 1j * rng.standard_normal((n_spinors, dim))
    ferm = 0.0
    for psi in psis:
        krein = np.vdot(psi, k2 @ (d_pr @ psi))
        hilbert = np.vdot(psi, d_hat @ psi)
        ferm = max(ferm, abs(krein - hilbert) / max(abs(hilbert), 1.0))
    res["fermionic_action"] = ferm

    inv, kunit = 0.0, 0.0
    transforms = [boost(ld.rep_pr, ax, s) for ax in (1, 2, 3) for s in rapidities]
    transforms += [rotation(ld.rep_pr, 1, 2, 0.7), rotation(ld.rep_pr, 2, 3, -1.1)]
    for u_spin in transforms:
        u = spin_lift(ld.lattice, u_spin)
        u_k = (k2 @ u.conj().T @ k2).tocsr()
        kunit = max(kunit, residual_norm(u_k @ u - sp.identity(dim)))
        d_u = u @ d_pr @ u_k
        for psi in psis[:4]:
            before = np.vdot(psi, k2 @ (d_pr @ psi))
            upsi = u @ psi
            after = np.vdot(upsi, k2 @ (d_u @ upsi))
            inv = max(inv, abs(after - before) / max(abs(before), 1.0))
    res["k_unitary"] = kunit
    res["action_invariance"] = inv

    phi = KMorphism(k_spin, reflection)
    metric = metric_transport(phi, ld.rep_pr)
    res["metric_transport"] = float(np.max(np.abs(metric - np.eye(4))))
    return DemoReport(res, metric, tol)
