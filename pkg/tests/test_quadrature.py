from __future__ import annotations

import math

import numpy as np
import pytest

from ringmod.errors import InputError, IntegralDivergenceError
from ringmod.quadrature import (
    QuadratureConfig,
    WeightField,
    annulus_integral_mc,
    annulus_weighted_integral,
    radial_integral,
    sphere_average,
)

CFG = QuadratureConfig()


def test_sphere_average_constant():
    Q = WeightField.constant(5.0, 2)
    assert sphere_average(Q, [0.0, 0.0], 1.7, CFG) == pytest.approx(5.0, rel=1e-14)
    Q3 = WeightField.constant(5.0, 3)
    assert sphere_average(Q3, [0.0, 0.0, 0.0], 0.3, CFG) == pytest.approx(5.0, rel=1e-14)


def test_sphere_average_radius_squared():
    for n in (2, 3, 4):
        Q = WeightField.from_callable(
            lambda x: float(np.dot(x, x)), n, vectorized=False
        )
        got = sphere_average(Q, [0.0] * n, 2.0, CFG)
        assert got == pytest.approx(4.0, rel=1e-12)


def test_sphere_average_first_coordinate_squared():
    # (1/2pi) int cos^2 = 1/2
    Q = WeightField.from_callable(lambda x: float(x[0]) ** 2, 2)
    assert sphere_average(Q, [0.0, 0.0], 1.0, CFG) == pytest.approx(0.5, rel=1e-12)
    # in R^3 the average of y1^2 over the unit sphere is 1/3
    Q3 = WeightField.from_callable(lambda x: float(x[0]) ** 2, 3)
    assert sphere_average(Q3, [0.0, 0.0, 0.0], 1.0, CFG) == pytest.approx(
        1.0 / 3.0, rel=1e-10
    )


def test_sphere_average_off_center():
    # Q(y) = |y|^2 averaged over S(x0, r) equals |x0|^2 + r^2
    Q = WeightField.from_callable(lambda x: float(np.dot(x, x)), 2)
    got = sphere_average(Q, [3.0, 0.0], 1.0, CFG)
    assert got == pytest.approx(10.0, rel=1e-12)


def test_sphere_average_infinite_flag():
    Q = WeightField.from_callable(lambda x: math.inf, 2)
    assert sphere_average(Q, [0.0, 0.0], 1.0, CFG) == math.inf


def test_sphere_average_monte_carlo_seeded():
    Q = WeightField.from_callable(lambda x: float(x[0]) ** 2, 4)
    cfg = QuadratureConfig(sphere_rule=20000, rng_seed=7)
    got = sphere_average(Q, [0.0] * 4, 1.0, cfg)
    # average of y1^2 over S^3 is 1/4; MC at this budget lands within a percent
    assert got == pytest.approx(0.25, rel=2e-2)
    again = sphere_average(Q, [0.0] * 4, 1.0, cfg)
    assert got == again


def test_radial_integral_constant():
    assert radial_integral(lambda t: 1.0, 0.0, 1.0, CFG) == pytest.approx(1.0, rel=1e-12)


def test_radial_integral_inverse_sqrt():
    got = radial_integral(lambda t: t**-0.5, 0.0, 1.0, CFG)
    assert got == pytest.approx(2.0, rel=1e-10)


def test_radial_integral_log_oracle():
    got = radial_integral(lambda t: 1.0 / t, 1.0, math.e, CFG)
    assert got == pytest.approx(1.0, rel=1e-12)


def test_radial_integral_power_battery():
    # int_0^1 t^(-beta) = 1/(1-beta) for beta < 1
    for beta in (0.2, 0.5, 0.75, 0.9):
        got = radial_integral(lambda t, b=beta: t**-b, 0.0, 1.0, CFG)
        assert got == pytest.approx(1.0 / (1.0 - beta), rel=1e-9)


def test_radial_integral_right_endpoint_singularity():
    # accuracy here is limited by cancellation in 1 - t near t = 1 (about
    # ulp^(1-beta)), not by the rule; left-endpoint singularities at 0 are exact
    got = radial_integral(lambda t: (1.0 - t) ** -0.5, 0.0, 1.0, CFG)
    assert got == pytest.approx(2.0, rel=1e-6)


def test_radial_integral_divergence_signal():
    with pytest.raises(IntegralDivergenceError):
        radial_integral(lambda t: 1.0 / t, 0.0, 1.0, CFG)
    with pytest.raises(IntegralDivergenceError):
        radial_integral(lambda t: t**-1.5, 0.0, 1.0, CFG)


def test_radial_integral_input_validation():
    with pytest.raises(InputError):
        radial_integral(lambda t: 1.0, 1.0, 1.0, CFG)
    with pytest.raises(InputError):
        radial_integral(lambda t: 1.0, -1.0, 1.0, CFG)


def test_annulus_area():
    Q = WeightField.constant(1.0, 2)
    got = annulus_weighted_integral(Q, [0.0, 0.0], 1.0, 2.0, lambda t: 1.0, 2.0, CFG)
    assert got == pytest.approx(3.0 * math.pi, rel=1e-12)


def test_annulus_log_weight():
    Q = WeightField.constant(1.0, 2)
    got = annulus_weighted_integral(
        Q, [0.0, 0.0], 1.0, math.e, lambda t: 1.0 / t, 2.0, CFG
    )
    assert got == pytest.approx(2.0 * math.pi, rel=1e-12)


def test_annulus_zero_weight():
    Q = WeightField.constant(0.0, 2)
    got = annulus_weighted_integral(Q, [0.0, 0.0], 1.0, 2.0, lambda t: 3.0, 2.0, CFG)
    assert got == pytest.approx(0.0, abs=1e-12)


def test_annulus_radial_shortcut_matches_pointwise_route():
    prof = lambda r: 2.0 + np.sin(3.0 * r)
    Qfast = WeightField.radial(prof, 2)
    Qslow = WeightField.from_callable(
        lambda x: 2.0 + math.sin(3.0 * float(np.linalg.norm(x))), 2
    )
    args = ([0.0, 0.0], 0.5, 2.0, lambda t: 1.0 / t, 2.0, CFG)
    fast = annulus_weighted_integral(Qfast, *args)
    slow = annulus_weighted_integral(Qslow, *args)
    assert fast == pytest.approx(slow, rel=1e-9)


def test_coarea_consistency_against_monte_carlo():
    rng = np.random.default_rng(99)
    for trial in range(3):
        coeffs = rng.uniform(0.5, 2.0, size=3)
        prof = lambda r, c=coeffs: c[0] + c[1] * r + c[2] * r**2
        Q = WeightField.radial(prof, 2)
        psi = lambda t: 1.0 / t
        exact = annulus_weighted_integral(Q, [0.0, 0.0], 0.5, 2.0, psi, 2.0, CFG)
        est, stderr = annulus_integral_mc(
            Q, [0.0, 0.0], 0.5, 2.0, psi, 2.0, samples=60000, seed=trial
        )
        assert abs(est - exact) <= 3.0 * stderr


def test_annulus_infinite_weight_flag():
    Q = WeightField.radial(lambda r: np.where(r < 1.5, np.inf, 1.0), 2)
    got = annulus_weighted_integral(Q, [0.0, 0.0], 1.0, 2.0, lambda t: 1.0, 2.0, CFG)
    assert got == math.inf


def test_monotonicity_in_weight():
    Q1 = WeightField.radial(lambda r: 1.0 + 0.0 * r, 2)
    Q2 = WeightField.radial(lambda r: 1.0 + 0.5 * r, 2)
    psi = lambda t: 1.0 / t
    v1 = annulus_weighted_integral(Q1, [0.0, 0.0], 0.5, 2.0, psi, 2.0, CFG)
    v2 = annulus_weighted_integral(Q2, [0.0, 0.0], 0.5, 2.0, psi, 2.0, CFG)
    assert v1 <= v2 + 1e-9


def test_determinism_bit_identical():
    Q = WeightField.from_callable(lambda x: 1.0 + float(x[0]) ** 2, 4)
    cfg = QuadratureConfig(sphere_rule=5000, rng_seed=1234)
    a = sphere_average(Q, [0.0] * 4, 1.0, cfg)
    b = sphere_average(Q, [0.0] * 4, 1.0, cfg)
    assert a == b
    est1 = annulus_integral_mc(
        WeightField.constant(1.0, 2), [0.0, 0.0], 1.0, 2.0, lambda t: 1.0, 2.0,
        samples=5000, seed=42,
    )
    est2 = annulus_integral_mc(
        WeightField.constant(1.0, 2), [0.0, 0.0], 1.0, 2.0, lambda t: 1.0, 2.0,
        samples=5000, seed=42,
    )
    assert est1 == est2


def test_weight_field_radial_consistency():
    Q = WeightField.radial(lambda r: 1.0 + r**2, 3, center=[1.0, 0.0, 0.0])
    assert Q.check_radial_consistency() < 1e-10


def test_weight_field_validation():
    with pytest.raises(InputError):
        WeightField.constant(1.0, 1)
    Q = WeightField.constant(1.0, 2)
    with pytest.raises(InputError):
        Q.sample(np.zeros((4, 3)))


def test_quadrature_config_validation():
    with pytest.raises(InputError):
        QuadratureConfig(sphere_rule=0)
    with pytest.raises(InputError):
        QuadratureConfig(target_rel_tol=1.5)
