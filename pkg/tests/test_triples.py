from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistlab.checks import corrupt_dirac
from twistlab.clifford import Reflection, Signature, chiral_rep, fundamental_symmetry_from_reflection
from twistlab.krein import Twist, is_k_selfadjoint, k_adjoint
from twistlab.linalg import adjoint, commutator, operator_norm
from twistlab.triples import (AlgebraElement, ChiralCarrier, GeneralizedSpectralTriple, RealStructure,
                              TripleError, build_four_kinds, fermionic_action, first_order_check,
                              fluctuate, implement_unitary, inner_fluctuation, matrix_model_context,
                              one_form, opposite_action, pair_scalar_triple, random_k_unitary_element,
                              random_unitary_element, spectral_action, transpose_permutation)

from conftest import random_complex

CASES = [(Signature(1, 1), 1), (Signature(1, 1), 2), (Signature(2, 1), 1), (Signature(2, 3), 2)]


def kinds_for(sig, context, seed=0, prime=False):
    ctx = matrix_model_context(sig, context, n_points=2 if sig.m > 1 else 3, seed=seed,
                               n_generators=4)
    base = ctx.base_prime if prime else ctx.base_full
    return ctx, build_four_kinds(base, ctx.k)


def terms_of(kinds):
    alg = kinds["ST"].algebra
    return [(alg[i], alg[(i + 1) % len(alg)]) for i in range(len(alg))]


class TestAlgebraElement:
    def test_chiral_rendering_block_diagonal(self):
        carrier = ChiralCarrier(np.diag([1.0, -1.0]))
        assert np.allclose(carrier.render(AlgebraElement.pair(2, 3j)), np.diag([2, 3j]))

    def test_membership(self):
        assert AlgebraElement.pair(1, 1).in_a_prime
        assert not AlgebraElement.pair(1, 2).in_a_prime
        assert AlgebraElement(np.ones(3), np.ones(3)).kind == "per-site-pair"

    def test_shape_mismatch(self):
        with pytest.raises(TripleError):
            AlgebraElement(np.ones(2), np.ones(3))

    def test_nonfinite(self):
        with pytest.raises(TripleError):
            AlgebraElement.pair(np.nan, 0)

    def test_random_k_unitary_is_not_unitary(self, rng):
        el = random_k_unitary_element(rng, None)
        assert el.g == pytest.approx(1 / np.conj(el.f))


class TestOppositeAction:
    def setup_method(self):
        self.ctx, self.kinds = kinds_for(Signature(1, 1), 1)
        self.real = self.kinds["ST"].real

    def test_identity(self):
        eye = np.eye(self.kinds["ST"].dim)
        assert np.allclose(opposite_action(eye, self.real), eye)

    def test_trivial_conjugation(self):
        real = RealStructure.measure(np.eye(2), np.zeros((2, 2)), np.eye(2))
        b = np.diag([2.0, -1.0])
        assert np.allclose(opposite_action(b, real), b)

    def test_commutes_with_algebra(self):
        t = self.kinds["ST"]
        for b in t.algebra:
            bo = opposite_action(b, self.real)
            assert max(operator_norm(commutator(a, bo)) for a in t.algebra) <= 1e-10

    def test_missing_real_structure(self):
        with pytest.raises(TripleError):
            opposite_action(np.eye(2), None)


def test_transpose_permutation():
    x = np.arange(9.0).reshape(3, 3)
    assert np.array_equal(transpose_permutation(3) @ x.ravel(), x.T.ravel())


class TestBuildFourKinds:
    def test_identity_collapses(self):
        ctx, _ = kinds_for(Signature(1, 1), 1)
        kinds = build_four_kinds(ctx.base_full, np.eye(ctx.base_full.dim))
        for t in kinds.values():
            assert np.allclose(t.dirac, ctx.base_full.dirac)
            assert t.twist.is_identity and t.product_k.is_identity

    def test_two_dim_euclidean(self):
        rep = chiral_rep(Signature(1, 2))
        base = pair_scalar_triple(rep, rep.gammas[1], [AlgebraElement.pair(1, 2)])
        kinds = build_four_kinds(base, rep.gammas[0])
        assert is_k_selfadjoint(kinds["TPRST"].dirac, rep.gammas[0])
        assert np.allclose(kinds["TPRST"].dirac, rep.gammas[0] @ rep.gammas[1])

    @pytest.mark.parametrize("sig,context", CASES, ids=str)
    def test_derivation_correspondence(self, sig, context):
        ctx, kinds = kinds_for(sig, context)
        for a in kinds["ST"].algebra:
            for src, dual in (("ST", "TPRST"), ("TST", "PRST")):
                assert operator_norm(kinds[dual].derivation(a) - ctx.k @ kinds[src].derivation(a)) <= 1e-10

    def test_rejects_non_fundamental(self):
        ctx, _ = kinds_for(Signature(1, 1), 1)
        with pytest.raises(TripleError):
            build_four_kinds(ctx.base_full, 1j * ctx.k)

    def test_requires_st_base(self):
        _, kinds = kinds_for(Signature(1, 1), 1)
        with pytest.raises(TripleError):
            build_four_kinds(kinds["TST"], kinds["TST"].twist)

    def test_context_requires_odd_n(self):
        with pytest.raises(TripleError):
            matrix_model_context(Signature(1, 2), 1)


class TestFirstOrder:
    @pytest.mark.parametrize("sig,context", CASES, ids=str)
    def test_table(self, sig, context):
        # which kinds satisfy the condition on which algebra
        table = {(1, True): {"ST", "TPRST"}, (1, False): {"TST", "PRST"},
                 (2, False): {"ST", "TPRST"}, (2, True): {"TST", "PRST"}}
        for prime in (False, True):
            _, kinds = kinds_for(sig, context, prime=prime)
            passing = {k for k, t in kinds.items() if first_order_check(t).passed}
            assert table[(context, prime)] <= passing
            for a, b in (("ST", "TPRST"), ("TST", "PRST")):
                assert (a in passing) == (b in passing)
            if not prime:
                assert passing == table[(context, prime)]

    def test_corrupted_dirac_detected(self):
        ctx, _ = kinds_for(Signature(1, 1), 1, prime=True)
        bad = corrupt_dirac(ctx.base_prime, np.random.default_rng(1))
        assert first_order_check(bad).residual > 0.1


class TestFluctuations:
    def setup_method(self):
        self.ctx, self.kinds = kinds_for(Signature(1, 1), 1, prime=True)

    def test_zero_form(self):
        t = self.kinds["ST"]
        assert np.allclose(fluctuate(t, np.zeros_like(t.dirac)), t.dirac)

    def test_gauge_form(self, rng):
        t = self.kinds["ST"]
        u = self.ctx.carrier.render(random_unitary_element(rng, 3, prime=True))
        big = implement_unitary(t, u)
        gauge = fluctuate(t, one_form(t, [(u, adjoint(u))]))
        assert operator_norm(gauge - big @ t.dirac @ adjoint(big)) <= 1e-10

    def test_twisted_type_one(self, rng):
        _, kinds = kinds_for(Signature(1, 1), 1, prime=False)
        t = kinds["TST"]
        u = self.ctx.carrier.render(random_unitary_element(rng, 3))
        gauge = fluctuate(t, one_form(t, [(u, adjoint(u))]))
        assert operator_norm(gauge - inner_fluctuation(t, t.rho(u))) <= 1e-10

    def test_wrong_space(self):
        with pytest.raises(TripleError):
            fluctuate(self.kinds["ST"], np.zeros((2, 2)))

    @pytest.mark.parametrize("sig,context", CASES, ids=str)
    def test_one_form_and_fluctuation_correspondence(self, sig, context):
        ctx, kinds = kinds_for(sig, context)
        terms = terms_of(kinds)
        for src, dual in (("ST", "TPRST"), ("TST", "PRST")):
            a_src, a_dual = one_form(kinds[src], terms), one_form(kinds[dual], terms)
            assert operator_norm(a_dual.rendered - ctx.k @ a_src.rendered) <= 1e-10
            assert operator_norm(fluctuate(kinds[dual], a_dual) - ctx.k @ fluctuate(kinds[src], a_src)) <= 1e-10


class TestInnerFluctuation:
    def test_identity(self):
        _, kinds = kinds_for(Signature(1, 1), 2)
        for t in kinds.values():
            assert np.allclose(inner_fluctuation(t, np.eye(t.dim)), t.dirac)

    def test_self_adjointness_preserved(self, rng):
        ctx, kinds = kinds_for(Signature(1, 1), 1)
        t = kinds["ST"]
        out = inner_fluctuation(t, ctx.carrier.render(random_unitary_element(rng, 3)))
        assert operator_norm(out - adjoint(out)) <= 1e-10

    def test_flavor_validation(self, rng):
        ctx, kinds = kinds_for(Signature(1, 1), 1)
        ku = ctx.carrier.render(random_k_unitary_element(rng, 3))
        with pytest.raises(TripleError):
            inner_fluctuation(kinds["ST"], ku, "unitary")
        with pytest.raises(TripleError):
            inner_fluctuation(kinds["ST"], ku, "other")

    @settings(max_examples=10)
    @given(st.sampled_from(CASES), st.integers(0, 2 ** 32 - 1))
    def test_dual_identities(self, case, seed):
        sig, context = case
        rng = np.random.default_rng(seed)
        ctx, kinds = kinds_for(sig, context, seed=seed % 1000)
        k = ctx.k
        pool = {"unitary": random_unitary_element(rng, ctx.carrier.n_points),
                "k_unitary": random_k_unitary_element(rng, ctx.carrier.n_points)}
        for flavor, el in pool.items():
            u = ctx.carrier.render(el)
            for src, dual in (("ST", "TPRST"), ("TST", "PRST")):
                lhs = inner_fluctuation(kinds[dual], u, flavor)
                rhs = k @ inner_fluctuation(kinds[src], k @ u @ k, flavor, k=k)
                assert operator_norm(lhs - rhs) <= 1e-10 * max(1.0, operator_norm(lhs))

    def test_implementer_unitarity(self, rng):
        ctx, kinds = kinds_for(Signature(2, 1), 2)
        t = kinds["ST"]
        big = implement_unitary(t, ctx.carrier.render(random_k_unitary_element(rng, 2)))
        assert operator_norm(k_adjoint(big, ctx.k) @ big - np.eye(t.dim)) <= 1e-10


class TestActions:
    def test_unit_dirac(self):
        t = GeneralizedSpectralTriple("ST", (), np.eye(2), np.diag([1.0, -1.0]), None,
                                      Twist.identity(2), Twist.identity(2))
        psi = np.array([0.6, 0.8j])
        assert fermionic_action(t, psi) == pytest.approx(1.0)

    def test_zero_dirac_spectral(self):
        t = GeneralizedSpectralTriple("ST", (), np.zeros((4, 4)), np.eye(4), None,
                                      Twist.identity(4), Twist.identity(4))
        assert spectral_action(t) == pytest.approx(4.0)

    def test_sign_dirac_spectral(self):
        t = GeneralizedSpectralTriple("ST", (), np.diag([1.0, -1.0]), np.eye(2), None,
                                      Twist.identity(2), Twist.identity(2))
        assert spectral_action(t, cutoff_scale=1.0, f="exp") == pytest.approx(2 * np.exp(-1))

    def test_bad_inputs(self):
        _, kinds = kinds_for(Signature(1, 1), 1)
        with pytest.raises(TripleError):
            fermionic_action(kinds["ST"], np.ones(3))
        with pytest.raises(TripleError):
            spectral_action(kinds["ST"], cutoff_scale=0.0)
        with pytest.raises(TripleError):
            spectral_action(kinds["ST"], f="cosine")

    @pytest.mark.parametrize("sig,context", CASES, ids=str)
    def test_dual_actions(self, sig, context, rng):
        _, kinds = kinds_for(sig, context)
        terms = terms_of(kinds)[:2]
        for src, dual in (("ST", "TPRST"), ("TST", "PRST")):
            for _ in range(4):
                psi = random_complex(rng, kinds[src].dim)
                a, b = fermionic_action(kinds[src], psi), fermionic_action(kinds[dual], psi)
                assert abs(a - b) <= 1e-10 * max(1.0, abs(a))
            for scale in (0.5, 1.0, 2.0):
                a = spectral_action(kinds[src], one_form(kinds[src], terms), scale)
                b = spectral_action(kinds[dual], one_form(kinds[dual], terms), scale)
                assert abs(a - b) <= 1e-10 * abs(a)


@pytest.mark.parametrize("sig,context", CASES, ids=str)
def test_axiom_transport(sig, context):
    ctx, kinds = kinds_for(sig, context)
    src, t = kinds["ST"], kinds["TPRST"]
    real = t.real
    assert real.eps_ppp in (1, -1)
    sign = real.eps_p * real.eps_ppp
    assert operator_norm(real.conjugate(t.dirac) - sign * t.dirac) <= 1e-10
    rho_grading = ctx.k @ t.grading @ ctx.k
    assert np.allclose(rho_grading, -t.grading)
    lhs = t.dirac @ t.grading + rho_grading @ t.dirac
    assert operator_norm(lhs - ctx.k @ (src.dirac @ t.grading + t.grading @ src.dirac)) <= 1e-10


@pytest.mark.parametrize("sig,context", CASES, ids=str)
def test_chirality_exchange(sig, context):
    _, kinds = kinds_for(sig, context)
    g = kinds["ST"].grading

    def even_part(x):
        return operator_norm(0.5 * (x + g @ x @ g))

    def odd_part(x):
        return operator_norm(0.5 * (x - g @ x @ g))

    d, kd = kinds["ST"].dirac, kinds["TPRST"].dirac
    # the Euclidean D flips chirality and K D preserves it; context 2 starts from K D_PR
    if context == 1:
        assert even_part(d) <= 1e-10 and odd_part(kd) <= 1e-10
    else:
        assert odd_part(d) <= 1e-10 and even_part(kd) <= 1e-10
    assert min(operator_norm(d), operator_norm(kd)) > 0.1


def test_real_structure_without_twist_sign():
    ctx, _ = kinds_for(Signature(1, 1), 1)
    real = ctx.base_full.real.with_twist(np.diag([1.0, 1j] * (ctx.base_full.dim // 2)))
    assert real.eps_ppp is None
    with pytest.raises(TripleError):
        fluctuate(replace(ctx.base_full, kind="PRST", real=real), np.zeros_like(ctx.base_full.dirac))
