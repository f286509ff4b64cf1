"""The ten acceptance criteria; each test records one pass/fail line for the summary."""

import time
from contextlib import contextmanager
from fractions import Fraction

from conftest import ACCEPTANCE
from tractorquant import golden
from tractorquant.calculus import CURVED, FLAT, laplacian, nabla
from tractorquant.cli import cmd_quantize
from tractorquant.coeff_ring import D, FIELD, N, W, free_params
from tractorquant.coordinate_oracle import Chart, random_instances
from tractorquant.critical_weights import (
    Affine, disjoint_check, sigma, sigma_step, zero_shift_check,
)
from tractorquant.index_algebra import Expr
from tractorquant.quantization import (
    QuantizationOp, build_critical_Q, build_Q, build_Q_k0, casimir_ptilde, leading_symbol,
    ledger_expected, nine_term_ledger, p_tilde,
)
from tractorquant.tractor_core import (
    apply_tractor_D, commute_laplacian_flat, commute_sym_gradient_flat, direct_laplacian,
    direct_sym_gradient,
)

f = Expr.field("f")
CHARTS = [Chart(n, sig) for n in (3, 4, 5) for sig in ((n, 0), (n - 1, 1))]


@contextmanager
def criterion(num: int, title: str, budget: float):
    ACCEPTANCE[num] = (False, title)
    start = time.monotonic()
    yield
    elapsed = time.monotonic() - start
    assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"
    ACCEPTANCE[num] = (True, f"{title} ({elapsed:.1f}s)")


def product_formula(k):
    out = FIELD(1)
    for i in range(1, k + 1):
        out *= D + N + k + i - 2
    return out


def test_1_p_tilde():
    with criterion(1, "leading coefficient of Q_{k',0} is the p~ product, k'=1,2,3", 180):
        for k in (1, 2, 3):
            assert leading_symbol(build_Q_k0(k))[1] == product_formula(k) == p_tilde(k)


def test_2_nine_term_ledger():
    with criterion(2, "nine-term ledger entries and w-free sum, k'<=4, l<=3", 60):
        for k in range(5):
            for ell in range(4):
                got = dict(nine_term_ledger(k, ell))
                assert got == ledger_expected(k, ell)
                assert got["YY"] == got["YZ"] == got["ZY"] == 0
                total = sum(got.values(), FIELD(0))
                assert "w" not in free_params(total)
                assert total == -(D - ell) * (N + 2 * D + 2 * (k - ell) - 2)


def test_3_example_one():
    with criterion(3, "third-order example sigma' nabla^3 matches the M.D~ pairing", 300):
        q = QuantizationOp.loads(cmd_quantize(3, 0, mode=CURVED, fmt="json", check=False))
        assert q.expr == golden.example1_pairing()
        assert leading_symbol(q)[1] == (N + D + 2) * (N + D + 3) * (N + D + 4)
        assert golden.example1_top_channel() == golden.example1_leading()


def test_4_example_two():
    with criterion(4, "example sigma' nabla Delta matches -d(n+d)(n+2d) display", 300):
        q = QuantizationOp.loads(cmd_quantize(1, 1, mode=CURVED, fmt="json", check=False))
        assert q.expr == golden.example2_pairing()
        lead = -D * (N + D) * (N + 2 * D)
        assert leading_symbol(q)[1] == lead
        channel = golden.example2_top_channel()
        assert channel == golden.example2_leading()
        # the display typed in with iterated derivatives, independent of the golden module
        yam = laplacian(f, CURVED) + (Expr.field("J") * f).scale(W)
        grad_f = Expr.field("f", (), ["p"])
        display = nabla(yam, "b", CURVED) + (Expr.field("P", ("b", "p")) * grad_f).scale(N + 2 * W - 2)
        assert channel == (Expr.field("sigma", ("b",)) * display).scale(lead)


def test_5_critical_sets():
    with criterion(5, "critical sets, step recursion, zero shift and disjointness, k',l<=8", 10):
        half = Fraction(1, 2)
        for k in range(9):
            s = sigma(k, 0)
            assert s.sigma0 == [Affine.of(-1, -(k + i - 2)) for i in range(1, k + 1)]
            for ell in range(9):
                full = sigma(k, ell)
                assert full.sigmaPrime == [Affine.of(0, j - 1) for j in range(1, ell + 1)]
                assert full.sigmaDoublePrime == [Affine.of(-half, -(k - j)) for j in range(1, ell + 1)]
                assert s == full
                assert zero_shift_check(k, ell) and disjoint_check(k, ell)
                s = sigma_step(s)


FLAT_CASES = [(k, ell) for ell in range(3) for k in range(6) if k + 2 * ell <= 5]
CURVED_CASES = [(k, ell) for ell in range(2) for k in range(4) if k + 2 * ell <= 3]


def test_6_symbolic_invariance():
    with criterion(6, "symbolic residual 0: flat k'+2l<=5, curved k'+2l<=3", 600):
        for k, ell in FLAT_CASES:
            assert build_Q(k, ell).residual().is_zero(), (k, ell, FLAT)
        for k, ell in CURVED_CASES:
            assert build_Q(k, ell, mode=CURVED).residual().is_zero(), (k, ell, CURVED)


def test_7_oracle_invariance():
    with criterion(7, "oracle residual 0 on 120 instances per operator, nonzero for Delta", 600):
        ops = {"tractor-D": apply_tractor_D(f, mode=CURVED)}
        for k, ell in [(1, 0), (2, 0), (0, 1), (1, 1), (3, 0)]:
            ops[f"Q{k}{ell}"] = build_Q(k, ell, mode=CURVED).expr
        for name, op in ops.items():
            inst = random_instances(op, Fraction(1, 3), Fraction(2, 7), CHARTS, 20, seed=1000)
            assert len(inst) == 120
            assert {(i.n, i.signature) for i in inst} == {(c.n, c.signature) for c in CHARTS}
            assert all(i.residual == 0 for i in inst), name
        lap = random_instances(laplacian(f), 0, None, CHARTS, 20, seed=1000)
        assert any(i.residual != 0 for i in lap)


def test_8_critical_flat():
    with criterion(8, "critical quantizations at d'=0 and d'=-n, oracle-certified at n=4", 300):
        chart = [Chart(4), Chart(4, (3, 1))]
        for delta, fam, source in ((0, "critical-Sigma'Sigma''", Fraction(-1)), (-N, "critical-Sigma0", Fraction(1))):
            q = build_critical_Q(1, 1, delta, FLAT, n=4)
            assert q.provenance == fam
            assert q.w == source
            assert leading_symbol(q)[1] == 1
            inst = random_instances(q.expr, q.w, q.delta, chart, 10, seed=40, flat_model=True)
            assert all(i.residual == 0 for i in inst)
            curved = build_critical_Q(1, 1, delta, CURVED, n=4)
            inst = random_instances(curved.expr, curved.w, curved.delta, chart, 10, seed=40)
            assert all(i.residual == 0 for i in inst)


def test_9_flat_consistency():
    with criterion(9, "flat commutation closed forms equal iterated connection, k<=4, l<=2", 300):
        for which in "XYZ":
            for k in range(5):
                assert commute_sym_gradient_flat(k, which) == direct_sym_gradient(k, which)
            for ell in range(3):
                assert commute_laplacian_flat(ell, which) == direct_laplacian(ell, which)


def test_10_casimir():
    with criterion(10, "Casimir eigen-differences reproduce p~ up to a constant, k'=1,2", 300):
        for k, ratio in ((1, -1), (2, 2)):
            assert casimir_ptilde(k) == FIELD(ratio) * p_tilde(k)
