from math import exp, log, sqrt

import numpy as np
import pytest

from inverse_erm.ext.error import AdmissibilityError, DivergentIntegralError, PreconditionError
from inverse_erm.models.nets import NetSpec, enumerate_net
from inverse_erm.models.operators import DiagonalOperator, apply_A_seq
from inverse_erm.models.rates import (
    DENSE_EQUATION, RateModel, additive_risk_bound, dense_conditions, density_c_tau, density_constants,
    entropy_integral, entropy_integral_numeric, lower_bound_exponent, net_risk_bound, optimal_delta, oracle_constants,
    rate_additive, rate_convolution, rate_exponent_net, rate_radon, rate_summary, solve_lower_rate_equation,
    solve_rate_equation, white_noise_xi_lower
)
from inverse_erm.models.sequence_core import EllipsoidSpec, MultiIndex, evaluate_series, periodic_grid


def test_exponents():
    assert rate_exponent_net(0.5, 0.5) == pytest.approx(1.0 / 3.5)
    assert rate_convolution(2.0, 1.0, 1) == pytest.approx(4.0 / 7.0)
    assert rate_convolution(2.0, 0.0, 1) == pytest.approx(0.8)
    assert rate_radon(2.0) == pytest.approx(4.0 / 7.0)
    assert rate_additive([(2.0, 0.0), (2.0, 1.0)]) == pytest.approx(4.0 / 7.0)
    assert lower_bound_exponent(0.5, 0.5) == pytest.approx(rate_exponent_net(0.5, 0.5))
    with pytest.raises(PreconditionError):
        rate_convolution(0.0, 1.0, 1)
    with pytest.raises(PreconditionError):
        rate_exponent_net(0.5, 0.0)
    with pytest.raises(PreconditionError):
        rate_additive([])


def test_rate_summary():
    summary = rate_summary(2.0, 1.0, 1)
    assert summary["a"] == 0.5
    assert summary["b"] == 0.5
    assert summary["psi_exponent"] == pytest.approx(0.2857142857142857)
    assert summary["mise_exponent"] == pytest.approx(0.5714285714285714)
    assert summary["lower_bound_mise_exponent"] == pytest.approx(summary["mise_exponent"])
    assert summary["dense_eligible"] is True


def test_oracle_constants():
    C1, C2 = oracle_constants(0.48, 9.0)
    assert C1 == pytest.approx(49.0)
    assert C2 == pytest.approx(108.0)


def test_net_risk_bound():
    assert net_risk_bound(0.1, 1.0, 15.0, 100.0, 0.48, 9.0) == pytest.approx(17.77)


def test_admissible_interval():
    lower = white_noise_xi_lower(9.0)
    assert lower == pytest.approx(sqrt(2.0) / 3.0)
    with pytest.raises(AdmissibilityError) as exc:
        net_risk_bound(0.1, 1.0, 15.0, 100.0, 0.45, 9.0)
    assert exc.value.interval == pytest.approx((lower, 0.5))
    with pytest.raises(AdmissibilityError):
        net_risk_bound(0.1, 1.0, 15.0, 100.0, 0.5, 9.0)
    with pytest.raises(PreconditionError):
        net_risk_bound(0.1, 1.0, 15.0, 100.0, 0.48, 9.0, model="density")


def test_additive_risk_bound():
    assert additive_risk_bound(0.1, [1.0, 2.0], [3.0, 4.0], 100.0, 1.0) == pytest.approx(8.99)
    with pytest.raises(PreconditionError):
        additive_risk_bound(0.1, [1.0], [3.0, 4.0], 100.0, 1.0)


def test_entropy_integral_closed_form_matches_quadrature():
    model = RateModel(a=0.25, b=0.5)
    closed = entropy_integral(model, 0.3)
    assert closed == pytest.approx(2.0 * sqrt(0.3))
    numeric = entropy_integral_numeric(model.rho, model.log_cardinality, 0.3)
    assert numeric == pytest.approx(closed, rel=1e-6)


def test_entropy_integral_diverges():
    model = RateModel(a=1.0, b=1.0)
    assert not dense_conditions(model).eligible
    with pytest.raises(DivergentIntegralError):
        entropy_integral(model, 0.1)
    with pytest.raises(DivergentIntegralError):
        solve_rate_equation(100.0, model, DENSE_EQUATION)


def test_dense_conditions():
    conditions = dense_conditions(RateModel.from_ellipsoid(2.0, 1.0, 1))
    assert conditions.eligible
    assert conditions.integral_exponent == pytest.approx(0.25)
    assert not dense_conditions(RateModel.from_ellipsoid(1.0, 1.0, 1)).eligible


@pytest.mark.parametrize("n", [1e2, 1e4, 1e6])
def test_net_rate_equation(n):
    model = RateModel.from_ellipsoid(2.0, 1.0, 1)
    psi = solve_rate_equation(n, model)
    assert psi == pytest.approx(n ** (-1.0 / 3.5), rel=1e-8)
    assert n * psi ** 2 == pytest.approx(model.rho(psi) ** 2 * model.log_cardinality(psi), rel=1e-8)


def test_net_rate_slope():
    model = RateModel.from_ellipsoid(2.0, 1.0, 1)
    slope = (log(solve_rate_equation(1e6, model)) - log(solve_rate_equation(1e3, model))) / (log(1e6) - log(1e3))
    assert slope == pytest.approx(-rate_exponent_net(model.a, model.b), abs=1e-8)


def test_dense_rate_equation():
    model = RateModel.from_ellipsoid(2.0, 1.0, 1)
    n = 1e4
    psi = solve_rate_equation(n, model, DENSE_EQUATION)
    assert psi == pytest.approx(exp((log(4.0) - 0.5 * log(n)) / 1.75), rel=1e-8)
    assert psi ** 2 == pytest.approx(entropy_integral(model, psi) / sqrt(n), rel=1e-8)


def test_lower_equation_matches_upper_with_unit_constants():
    for n in (1e3, 1e5):
        assert solve_lower_rate_equation(n, 0.5, 0.5) == pytest.approx(
            solve_rate_equation(n, RateModel(a=0.5, b=0.5)), rel=1e-8)
    with pytest.raises(PreconditionError):
        solve_lower_rate_equation(1.0, 0.5, 0.5)


def test_optimal_delta():
    assert optimal_delta(1e4, 2.0, 1.0, 1) == pytest.approx(1e4 ** (-2.0 / 7.0))
    assert optimal_delta(1e4, 2.0, 1.0, 1, kappa=3.0) == pytest.approx(3.0 * 1e4 ** (-2.0 / 7.0))
    with pytest.raises(PreconditionError):
        optimal_delta(1.0, 2.0, 1.0, 1)


def test_density_c_tau_doubles_until_admissible():
    assert density_c_tau(1.0, 1.0, 0.48, 9.0) == 18.0
    assert density_c_tau(0.01, 0.01, 0.48, 9.0) == 9.0


@pytest.mark.parametrize("xi", [0.0, 0.5, 0.7])
def test_density_c_tau_rejects_xi_outside_the_interval(xi):
    with pytest.raises(AdmissibilityError) as exc:
        density_c_tau(1.0, 1.0, xi, 9.0)
    assert exc.value.interval == (0.0, 0.5)


def test_density_constants_bound_every_net_point():
    op = DiagonalOperator.convolution(1.0, 1)
    net = NetSpec.from_grid(EllipsoidSpec(1, 1.0, 1.0), [MultiIndex((0,)), MultiIndex((2,))], 0.25)
    B, B_prime = density_constants(op, net)
    assert B == pytest.approx(1.0 + sqrt(2.0) / 4.0)
    assert B_prime == pytest.approx(1.0 + sqrt(2.0))

    nodes, _ = periodic_grid(1, 512)
    images = [evaluate_series(op.output_basis, apply_A_seq(op, g), nodes) for g in enumerate_net(net)]
    assert max(float(np.max(np.abs(v))) for v in images) == pytest.approx(B)
