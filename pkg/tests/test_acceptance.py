"""Acceptance criteria 1-10, each at its stated tolerance and runtime budget.

A summary with one PASS/FAIL line per criterion is written to the terminal at the
end of the module.  Known unattainable parts are strict xfails and print as FAIL.
"""

import json
import time

import numpy as np
import pytest

from twistlab.checks import (_composition, _lipschitz, _metric_examples, _product_class, _regularity_form,
                             clifford_checks, connection_checks, morphism_checks)
from twistlab.cli import main
from twistlab.clifford import (Reflection, Signature, chiral_rep, fundamental_symmetry_from_reflection,
                               twisted_clifford_check)
from twistlab.config import RunConfig
from twistlab.krein import hermiticity_classification, k_adjoint
from twistlab.lattice import commutator_scaling_scan, lipschitz_norm_check, lorentz4d_demo
from twistlab.linalg import operator_norm

TAU = 1e-10
TWO_PI = 2 * np.pi
TORUS = Signature(1, 1)
LATTICE_N = (8, 16, 32, 64)

RESULTS: dict[int, list[tuple[str, bool, str]]] = {}
TITLES = {
    1: "Clifford suite", 2: "Krein structure", 3: "connection suite", 4: "K-morphism",
    5: "signature change", 6: "lattice boundedness", 7: "Lipschitz norms", 8: "Lorentz 4D demo",
    9: "negative controls", 10: "determinism",
}


def record(criterion: int, part: str, passed: bool, detail: str = "") -> bool:
    RESULTS.setdefault(criterion, []).append((part, bool(passed), detail))
    return bool(passed)


@pytest.fixture(scope="module", autouse=True)
def summary(request):
    yield
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is None:
        return
    reporter.write_line("")
    reporter.write_line("acceptance summary")
    for criterion in sorted(RESULTS):
        parts = RESULTS[criterion]
        ok = all(p for _, p, _ in parts)
        failed = [f"{name} ({detail})" if detail else name for name, p, detail in parts if not p]
        tail = f"; failing: {'; '.join(failed)}" if failed else ""
        reporter.write_line(f"criterion {criterion:>2} {'PASS' if ok else 'FAIL'}  {TITLES[criterion]}"
                            f" [{sum(p for _, p, _ in parts)}/{len(parts)} parts]{tail}")


def run_all(checks):
    return [c.run() for c in checks]


def worst_residual(results) -> float:
    return max((r.residual for r in results if r.residual is not None), default=0.0)


# --------------------------------------------------------------------------- 1


def test_c1_clifford_suite():
    cfg = RunConfig(dims=(1, 2, 3), sigs=(0, 1, 2, 3, 4, 5, 6))
    start = time.perf_counter()
    results = run_all(c for c in clifford_checks(cfg) if c.check_id == "clifford.representation")
    elapsed = time.perf_counter() - start
    cases = {r.case for r in results}
    assert cases == {f"m={m},n={n}" for m in (1, 2, 3) for n in range(2 * m + 1)}
    worst = worst_residual(results)
    ok = all(r.status == "pass" for r in results) and worst <= TAU and elapsed <= 30
    record(1, "15 signatures", ok, f"max residual {worst:.1e}, {elapsed:.1f} s")
    assert ok


# --------------------------------------------------------------------------- 2


def test_c2_norm_equality():
    rng = np.random.default_rng(2)
    worst = 0.0
    ks = [fundamental_symmetry_from_reflection(chiral_rep(Signature(m, n)), Reflection.fixing(2 * m, range(n)))
          for m, n in ((1, 1), (2, 1), (2, 3))]
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    ks.append(q)
    for i in range(100):
        k = ks[i % len(ks)]
        op = rng.standard_normal(k.shape) + 1j * rng.standard_normal(k.shape)
        worst = max(worst, abs(operator_norm(k_adjoint(op, k)) - operator_norm(op)) / operator_norm(op))
    assert record(2, "norm equality", worst <= TAU, f"{worst:.1e}")


def test_c2_theta_extraction():
    res = _regularity_form(RunConfig())
    # exact up to the last bits of arctan2 on the constructed phases
    assert record(2, "theta extraction", res.status == "pass" and res.residual <= 1e-15, f"{res.residual:.1e}")


def test_c2_classification():
    res = _product_class(RunConfig(dims=(1, 2, 3), sigs=(1, 3, 5)))
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    kinds = [hermiticity_classification(k).kind for k in (np.diag([1.0, -1.0]), np.eye(2),
                                                           np.exp(0.25j * np.pi) * s1)]
    ok = res.status == "pass" and kinds == ["hermitian_indefinite", "positive_definite", "non_hermitian_phase"]
    assert record(2, "classification with witnesses", ok, res.detail)


# --------------------------------------------------------------------------- 3


CONNECTION_CFG = RunConfig(dims=(1, 2), sigs=(1, 3), n_generators=8, n_spinors=16,
                           cutoff="exp", cutoff_scales=(0.5, 1.0, 2.0))


@pytest.fixture(scope="module")
def connection_results():
    return run_all(connection_checks(CONNECTION_CFG))


@pytest.mark.parametrize("check_id", [
    "connection.dual-dirac", "connection.chirality-exchange", "connection.dual-derivation",
    "connection.first-order-equivalence", "connection.dual-one-form", "connection.dual-fluctuation",
    "connection.unitary-implementer", "connection.dual-inner-fluctuation", "connection.gauge-form",
    "connection.axiom-transport", "connection.dual-fermionic-action", "connection.dual-spectral-action",
])
def test_c3_connection(connection_results, check_id):
    results = [r for r in connection_results if r.check_id == check_id]
    # dims 2 and 4, odd n, both signature-change contexts
    assert {r.case for r in results} == {"m=1,n=1,ctx=1", "m=1,n=1,ctx=2", "m=2,n=1,ctx=1",
                                         "m=2,n=1,ctx=2", "m=2,n=3,ctx=1", "m=2,n=3,ctx=2"}
    worst = worst_residual(results)
    ok = all(r.status == "pass" for r in results) and worst <= TAU
    assert record(3, check_id.split(".")[1], ok, f"{worst:.1e}")


# --------------------------------------------------------------------------- 4


@pytest.fixture(scope="module")
def morphism_results():
    return run_all(morphism_checks(RunConfig(dims=(1, 2), sigs=(1, 3))))


def test_c4_involution(morphism_results):
    results = [r for r in morphism_results if r.check_id == "morphism.involution"]
    worst = worst_residual(results)
    assert record(4, "involution", all(r.status == "pass" for r in results) and worst <= TAU, f"{worst:.1e}")


def test_c4_composition():
    res = _composition(RunConfig(), None)
    assert record(4, "composition accept/reject", res.status == "pass", res.detail)


def test_c4_metric_arrays(morphism_results):
    examples = _metric_examples(RunConfig())
    contexts = [r for r in morphism_results if r.check_id == "morphism.metric-transport"]
    # context 1 is reported rather than judged, but its arrays must still match numerically
    worst = max(examples.residual, worst_residual(contexts))
    ok = examples.status == "pass" and all(r.status in ("pass", "reported") for r in contexts) and worst <= 1e-12
    assert record(4, "metric arrays", ok, f"{worst:.1e}")


# --------------------------------------------------------------------------- 5


@pytest.mark.parametrize("label, sig, fixed, to_pseudo", [
    ("2D euclidean to (1,1)", Signature(1, 1), [0], True),
    ("4D (1,3) to euclidean", Signature(2, 1), [0], False),
])
def test_c5_signature_change(label, sig, fixed, to_pseudo):
    r = Reflection.fixing(sig.dim, fixed)
    rep = chiral_rep(sig.euclidean() if to_pseudo else sig)
    target = np.diag(sig.signs.astype(float)) if to_pseudo else np.eye(sig.dim)
    report = twisted_clifford_check(rep, fundamental_symmetry_from_reflection(rep, r), target, TAU)
    assert record(5, label, report.passed and report.residual <= TAU, f"{report.residual:.1e}")


# --------------------------------------------------------------------------- 6


def zero(x):
    return np.zeros(len(x))


def sin_x(x):
    return np.sin(TWO_PI * x[:, 0])


@pytest.fixture(scope="module")
def scans():
    start = time.perf_counter()
    out = {prime: commutator_scaling_scan(TORUS, sin_x, sin_x if prime else zero, LATTICE_N, "spectral")
           for prime in (False, True)}
    return out, time.perf_counter() - start


def test_c6_untwisted_unbounded(scans):
    out, elapsed = scans
    slope = out[False].untwisted_slope
    assert record(6, "untwisted slope >= 0.8", slope >= 0.8 and elapsed <= 120, f"{slope:.3f}")


def test_c6_twisted_bounded(scans):
    slope = scans[0][False].twisted_slope
    assert record(6, "twisted slope <= 0.1", slope <= 0.1, f"{slope:.3f}")


def test_c6_prime_bounded(scans):
    slope = scans[0][True].untwisted_slope
    assert record(6, "diagonal pair untwisted slope <= 0.1", slope <= 0.1, f"{slope:.3f}")


def test_c6_central_scheme_informational(capsys):
    rep = commutator_scaling_scan(TORUS, sin_x, zero, LATTICE_N, "central")
    with capsys.disabled():
        print(f"\n  central scheme (informational): untwisted slope {rep.untwisted_slope:.3f}, "
              f"twisted slope {rep.twisted_slope:.3f} ({rep.twisted_verdict})")
    assert rep.untwisted_slope >= 0.8


# --------------------------------------------------------------------------- 7


def test_c7_central_within_five_percent():
    res = _lipschitz(RunConfig(), 64, "central")
    assert record(7, "central N=64 within 5%", res.status == "pass" and res.residual <= 0.05,
                  f"{res.residual:.4f}")


def mode(kx, ky, phase=0.0):
    def f(x):
        return np.sin(TWO_PI * (kx * x[:, 0] + ky * x[:, 1]) + phase)

    def grad(x):
        c = TWO_PI * np.cos(TWO_PI * (kx * x[:, 0] + ky * x[:, 1]) + phase)
        return np.stack([kx * c, ky * c], axis=1)
    return f, grad


AXIS_MODES = {"sin x": (1, 0, 0.0), "sin y": (0, 1, 0.0), "cos 2x": (2, 0, np.pi / 2), "sin 3y": (0, 3, 0.0)}
DIAGONAL_MODES = {"sin(x+y)": (1, 1, 0.0), "sin(x-2y)": (1, -2, 0.0)}


@pytest.mark.parametrize("name", list(AXIS_MODES) + list(DIAGONAL_MODES))
def test_c7_spectral_single_modes(name, capsys):
    f, grad = mode(*{**AXIS_MODES, **DIAGONAL_MODES}[name])
    rep = lipschitz_norm_check(TORUS, f, grad, 64, "spectral")
    with capsys.disabled():
        print(f"\n  {name}: ||[D, a]|| {rep.commutator_norm:.10f}, gradient {rep.gradient_sup:.10f}, "
              f"collocation ||D a - a D|| {rep.collocation_norm:.6f}")
    assert record(7, f"spectral {name}", rep.relative_error <= 1e-8, f"{rep.relative_error:.1e}")


@pytest.mark.parametrize("name", list(AXIS_MODES))
def test_c7_twisted_variant_axis_modes(name):
    f, grad = mode(*AXIS_MODES[name])
    rep = lipschitz_norm_check(TORUS, f, grad, 64, "spectral")
    assert record(7, f"twisted-triple variant {name}", rep.tst_relative_error <= 1e-8, f"{rep.tst_relative_error:.1e}")


@pytest.mark.xfail(strict=True, reason="twisted norm is |v1| + |v2| for gradients off the axes")
@pytest.mark.parametrize("name", list(DIAGONAL_MODES))
def test_c7_twisted_variant_diagonal_modes(name):
    f, grad = mode(*DIAGONAL_MODES[name])
    rep = lipschitz_norm_check(TORUS, f, grad, 64, "spectral")
    ok = record(7, f"twisted-triple variant {name}", rep.tst_relative_error <= 1e-8,
                f"{rep.tst_relative_error:.3f} relative, expected xfail")
    assert ok


# --------------------------------------------------------------------------- 8


def test_c8_lorentz_demo():
    start = time.perf_counter()
    rep = lorentz4d_demo(4, seed=0, n_spinors=16, tol=TAU)
    elapsed = time.perf_counter() - start
    worst = max(rep.residuals.values())
    ok = (rep.passed and worst <= TAU and np.array_equal(rep.metric.round(12), np.eye(4))
          and elapsed <= 60)
    assert record(8, "N=4 identities and metric diag(1,1,1,1)", ok, f"{worst:.1e}, {elapsed:.1f} s")


# --------------------------------------------------------------------------- 9 and 10


def verify_json(tmp_path, name, *argv):
    path = tmp_path / f"{name}.json"
    code = main(["verify", "--json", str(path), *argv])
    return code, json.loads(path.read_text())


@pytest.mark.parametrize("fault", ["corrupt-dirac", "noncommuting-compose", "even-k"])
def test_c9_negative_controls(tmp_path, capsys, fault):
    code, rep = verify_json(tmp_path, fault, "--inject-fault", fault)
    capsys.readouterr()
    if fault == "even-k":
        skipped = [r for r in rep["records"] if r["case"].endswith("fault")]
        ok = code == 0 and len(skipped) == 1 and skipped[0]["status"] == "skipped"
    else:
        ok = code == 1 and rep["summary"]["fail"] >= 1
    assert record(9, fault, ok, f"exit {code}")


def test_c10_determinism(tmp_path, capsys):
    _, first = verify_json(tmp_path, "first", "--seed", "11")
    _, second = verify_json(tmp_path, "second", "--seed", "11")
    capsys.readouterr()
    ok = first["determinism_hash"] == second["determinism_hash"] and first["records"] == second["records"]
    assert record(10, "identical hashes", ok, first["determinism_hash"][:12])
