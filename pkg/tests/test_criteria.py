from __future__ import annotations

import math

import numpy as np
import pytest

from ringmod.criteria import (
    DivergenceVerdict,
    alpha_ratio,
    construct_psi,
    divergence_test,
    fmo_estimate,
    inverted_field,
    log_growth_test,
    psi_formula,
)
from ringmod.errors import ContractViolationError, InputError, PreconditionError
from ringmod.quadrature import QuadratureConfig, WeightField

CFG = QuadratureConfig()


# ---------------------------------------------------------------- divergence


def test_divergence_constant_weights():
    # int dt/t diverges regardless of the constant
    for c in (0.2, 1.0, 7.0):
        v = divergence_test(lambda t, c=c: c, p=2.0, n=2)
        assert v.verdict == "diverges"
        v3 = divergence_test(lambda t, c=c: c, p=3.0, n=3)
        assert v3.verdict == "diverges"


def test_divergence_power_weights_converge_with_value():
    # q(t) = t^(-(n-1)a), p = n: integrand t^(a-1), value delta^a / a
    delta = 0.5
    for n, p in ((2, 2.0), (3, 3.0)):
        for a in (0.5, 1.0, 2.0):
            v = divergence_test(
                lambda t, a=a, n=n: t ** (-(n - 1) * a), p=p, n=n, delta=delta
            )
            assert v.verdict == "converges"
            assert v.value == pytest.approx(delta**a / a, rel=1e-6)


def test_divergence_exponent_comparison_case():
    # q(t) = t^(n-p) with p < n: integrand exponent (2n-p-1)/(p-1);
    # symbolically (2n-p-1) - (p-1) = 2(n-p) > 0, so it diverges
    n, p = 3, 2.5
    exponent = (2 * n - p - 1) / (p - 1)
    assert exponent > 1.0
    v = divergence_test(lambda t: t ** (n - p), p=p, n=n)
    assert v.verdict == "diverges"
    # same conclusion in another admissible corner of p < n
    v2 = divergence_test(lambda t: t ** (2 - 1.5), p=1.5, n=2)
    assert v2.verdict == "diverges"


def test_divergence_vanishing_weight_annotated():
    v = divergence_test(lambda t: max(0.0, t - 0.25), p=2.0, n=2)
    assert v.verdict == "diverges"
    assert "vanishes" in v.note


def test_divergence_trace_shape():
    v = divergence_test(lambda t: 1.0, p=2.0, n=2)
    cutoffs = [c for (c, _) in v.probe_trace]
    partials = [P for (_, P) in v.probe_trace]
    assert all(b < a for a, b in zip(cutoffs, cutoffs[1:]))
    assert all(b > a for a, b in zip(partials, partials[1:]))
    # converging case: increments settle (Cauchy within tolerance)
    vc = divergence_test(lambda t: t**-1.0, p=2.0, n=2)
    incs = np.diff([0.0] + [P for (_, P) in vc.probe_trace])
    assert incs[-1] < incs[0]
    assert vc.verdict == "converges"


def test_divergence_escape_threshold():
    # strongly singular weight: partials blow up fast and escape
    v = divergence_test(lambda t: t**4.0, p=2.0, n=2, escape=1e6)
    assert v.verdict == "diverges"
    assert max(P for (_, P) in v.probe_trace) > 1e6


def test_divergence_input_validation():
    with pytest.raises(InputError):
        divergence_test(lambda t: 1.0, p=1.0, n=2)
    with pytest.raises(InputError):
        divergence_test(lambda t: 1.0, p=2.5, n=2)
    with pytest.raises(InputError):
        divergence_test(lambda t: 1.0, p=2.0, n=2, delta=0.0)
    with pytest.raises(InputError):
        divergence_test(lambda t: -1.0, p=2.0, n=2)


def test_verdict_csv_round_trip(tmp_path):
    v = divergence_test(lambda t: 1.0, p=2.0, n=2)
    path = tmp_path / "trace.csv"
    v.to_csv(path)
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "cutoff,partial_integral"
    assert len(lines) == 1 + len(v.probe_trace)
    first = lines[1].split(",")
    assert float(first[0]) == v.probe_trace[0][0]
    assert float(first[1]) == v.probe_trace[0][1]


# ----------------------------------------------------------------------- fmo


def test_fmo_constant_weight_zero_score():
    Q = WeightField.constant(3.0, 2)
    score, trace = fmo_estimate(Q, [0.0, 0.0], [2.0**-k for k in range(1, 8)], CFG)
    assert score == 0.0
    assert all(d == 0.0 for (_, d) in trace)


def test_fmo_log_weight_finite_plateau():
    # Q = log(1/|x|): mean over B(0, eps) is log(1/eps) + 1/2 and the mean
    # absolute deviation is exactly 1/e, independent of eps
    Q = WeightField.radial(lambda r: np.log(1.0 / r), 2)
    eps_seq = [2.0**-k for k in range(1, 16)]
    score, trace = fmo_estimate(Q, [0.0, 0.0], eps_seq, QuadratureConfig(sphere_rule=20000))
    assert math.isfinite(score)
    assert score == pytest.approx(math.exp(-1.0), rel=5e-2)
    devs = [d for (_, d) in trace]
    assert max(devs) - min(devs) < 0.05  # plateau, no growth


def test_fmo_inverse_norm_escapes():
    # Q = 1/|x| in the plane: deviation over B(0, eps) is exactly 1/eps
    Q = WeightField.radial(lambda r: 1.0 / r, 2)
    eps_seq = [4.0**-k for k in range(1, 14)]
    score, trace = fmo_estimate(Q, [0.0, 0.0], eps_seq, CFG)
    assert score == math.inf
    devs = [d for (_, d) in trace if math.isfinite(d)]
    assert devs[-1] > 1e6 or any(not math.isfinite(d) for (_, d) in trace)


def test_fmo_requires_decreasing_sequence():
    Q = WeightField.constant(1.0, 2)
    with pytest.raises(InputError):
        fmo_estimate(Q, [0.0, 0.0], [0.1, 0.2], CFG)
    with pytest.raises(InputError):
        fmo_estimate(Q, [0.0, 0.0], [], CFG)


def test_fmo_at_infinity_via_inversion():
    # Q = 1/|x| is badly oscillating at 0 but tame at infinity:
    # the inverted field is |y|, smooth near the origin
    Q = WeightField.radial(lambda r: 1.0 / r, 2)
    Qi = inverted_field(Q)
    assert Qi.evaluate([0.5, 0.0]) == pytest.approx(0.5, rel=1e-12)
    score, _ = fmo_estimate(Qi, [0.0, 0.0], [2.0**-k for k in range(1, 12)], CFG)
    assert math.isfinite(score)


# ---------------------------------------------------------------- log growth


def test_log_growth_examples():
    assert log_growth_test(lambda r: 1.0, 2) is True
    assert log_growth_test(lambda r: np.log(1.0 / r), 2) is True
    assert log_growth_test(lambda r: 1.0 / r, 2) is False
    # n = 3 bound is log^2(1/r)
    assert log_growth_test(lambda r: np.log(1.0 / r) ** 2, 3) is True
    assert log_growth_test(lambda r: np.log(1.0 / r) ** 3, 3) is False


# ----------------------------------------------------------------------- psi


def test_psi_calculus_c_constant_weight():
    pc = construct_psi("calculus_c", lambda t: 1.0, 2.0, 2, eps0=0.5)
    assert pc.case_tag == "calculus_c"
    assert pc.psi(0.1) == pytest.approx(10.0, rel=1e-12)
    for k in (2, 5, 9):
        eps = 0.5 * 2.0**-k
        assert pc.I(eps, 0.5) == pytest.approx(math.log(0.5 / eps), rel=1e-9)


def test_psi_fmo_case_formulas():
    pc = construct_psi("fmo", None, 2.0, 2, eps0=0.5, evidence=0.0)
    t = math.exp(-2.0)
    assert pc.psi(t) == pytest.approx(math.exp(2.0) / 2.0, rel=1e-12)
    eps = 1e-4
    expected = math.log(math.log(1.0 / eps) / math.log(2.0))
    assert pc.I(eps, 0.5) == pytest.approx(expected, rel=1e-12)


def test_psi_formula_unit_integrand_case():
    # q(t) = t^-(n-1), p = n gives psi identically 1 and I = eps0 - eps.
    # This weight fails the divergence hypothesis (its integral converges),
    # so only the unverified formula layer produces it; construct_psi refuses.
    pc = psi_formula("calculus_c", lambda t: t**-1.0, 2.0, 2, eps0=0.5)
    assert pc.psi(0.3) == pytest.approx(1.0, rel=1e-12)
    assert pc.I(0.1, 0.5) == pytest.approx(0.4, rel=1e-9)
    with pytest.raises(PreconditionError):
        construct_psi("calculus_c", lambda t: t**-1.0, 2.0, 2, eps0=0.5)


def test_construct_psi_refusals():
    with pytest.raises(PreconditionError):
        construct_psi("fmo", None, 2.0, 2)  # no evidence
    with pytest.raises(PreconditionError):
        construct_psi("fmo", None, 2.0, 2, evidence=math.inf)
    with pytest.raises(PreconditionError):
        construct_psi("log_growth", lambda r: 1.0 / r, 2.0, 2)
    with pytest.raises(InputError):
        construct_psi("unknown", lambda r: 1.0, 2.0, 2)


def test_construct_psi_accepts_prior_evidence():
    verdict = divergence_test(lambda t: 1.0, 2.0, 2)
    pc = construct_psi("calculus_c", lambda t: 1.0, 2.0, 2, evidence=verdict)
    assert pc.psi(0.25) == pytest.approx(4.0, rel=1e-12)
    with pytest.raises(PreconditionError):
        construct_psi("calculus_c", lambda t: 1.0, 2.0, 2, evidence="not-a-verdict")


def test_psi_positivity_probe_grid():
    # direct assertion of the finiteness/positivity contract
    for case, q, evidence in (
        ("calculus_c", lambda t: 1.0, None),
        ("fmo", None, 0.0),
        ("log_growth", lambda r: np.log(1.0 / r), None),
    ):
        pc = construct_psi(case, q, 2.0, 2, eps0=0.5, evidence=evidence)
        for k in range(1, 11):
            eps = 0.5 * 2.0**-k
            assert 0.0 < pc.I(eps, 0.5) < math.inf


# --------------------------------------------------------------- alpha ratio


def test_alpha_ratio_constant_weight_decay():
    Q = WeightField.constant(1.0, 2)
    pc = construct_psi("calculus_c", lambda t: 1.0, 2.0, 2, eps0=0.5)
    prev = math.inf
    for k in range(1, 21):
        eps = 0.5 * 2.0**-k
        ratio = alpha_ratio(Q, [0.0, 0.0], pc, eps, 0.5, 2.0, CFG)
        expected = 2.0 * math.pi / math.log(0.5 / eps)
        assert ratio == pytest.approx(expected, rel=1e-6)
        assert ratio < prev
        prev = ratio


def test_alpha_ratio_zero_weight():
    Q = WeightField.constant(0.0, 2)
    pc = construct_psi("calculus_c", lambda t: 1.0, 2.0, 2, eps0=0.5)
    assert alpha_ratio(Q, [0.0, 0.0], pc, 0.01, 0.5, 2.0, CFG) == pytest.approx(
        0.0, abs=1e-10
    )


def test_alpha_ratio_convergent_weight_fails_hypothesis():
    # q(t) = t^(-2(n-1)), p = n = 2: the (5E) integral converges, so the
    # ratio must NOT decay to 0.  Analytically alpha = omega / I^(p-1) with
    # I = (eps0^2 - eps^2)/2 increasing to a finite limit, hence alpha
    # stays bounded away from zero (4*pi/eps0^2 in the limit).
    eps0 = 0.5
    q = lambda t: t**-2.0
    pc = psi_formula("calculus_c", q, 2.0, 2, eps0=eps0)
    Q = WeightField.radial(q, 2)
    ratios = []
    for k in range(1, 16):
        eps = eps0 * 2.0**-k
        ratio = alpha_ratio(Q, [0.0, 0.0], pc, eps, eps0, 2.0, CFG)
        expected = 4.0 * math.pi / (eps0**2 - eps**2)
        assert ratio == pytest.approx(expected, rel=1e-6)
        ratios.append(ratio)
    floor = 4.0 * math.pi / eps0**2
    assert min(ratios) >= floor * (1.0 - 1e-9)


def test_alpha_ratio_contract_violation():
    # a broken construction whose I degenerates must be rejected, not divided by
    from ringmod.criteria import PsiConstruction

    Q = WeightField.constant(1.0, 2)
    for bad_I in (lambda e, e0: 0.0, lambda e, e0: math.inf):
        pc = PsiConstruction(psi=lambda t: 1.0, eps0=0.5, case_tag="fmo", I=bad_I)
        with pytest.raises(ContractViolationError):
            alpha_ratio(Q, [0.0, 0.0], pc, 0.1, 0.5, 2.0, CFG)


def test_verdict_type_validation():
    with pytest.raises(InputError):
        DivergenceVerdict("maybe", None, tuple())
