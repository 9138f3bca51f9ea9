import numpy as np
import pytest

from inverse_erm.ext.error import BoxMismatchError, ComponentDeclarationError
from inverse_erm.models.estimators import (
    DIRECT_SUM, GRID_ARGMIN, PROJECTION, additive_estimate, additive_nets, brute_force_argmin, delta_net_estimate,
    dense_estimate, mise
)
from inverse_erm.models.nets import NetSpec, build_net, enumerate_net
from inverse_erm.models.operators import DiagonalOperator
from inverse_erm.models.sequence_core import CoefVec, EllipsoidSpec, MultiIndex, box_indices
from inverse_erm.models.simulate import empirical_risk, simulate_white_noise
from inverse_erm.models.truth import random_feasible

SPEC = EllipsoidSpec(1, 2.0, 1.0)
OP = DiagonalOperator.convolution(1.0, 1)


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_grid_estimate_matches_brute_force(seed):
    net = NetSpec.from_grid(SPEC, box_indices(1, 2), 0.25)
    truth = CoefVec({MultiIndex((0,)): 0.4, MultiIndex((1,)): -0.2})
    obs = simulate_white_noise(OP, truth, 20.0, net.indices, seed)
    report = delta_net_estimate(obs, net)
    assert report.certificate.kind == GRID_ARGMIN
    assert report.certificate.exact_grid_argmin
    assert report.theta_hat == brute_force_argmin(obs, enumerate_net(net))
    assert report.risk_value == pytest.approx(empirical_risk(obs, report.theta_hat))


def test_grid_estimate_box_mismatch():
    net = build_net(SPEC, 0.2)
    obs = simulate_white_noise(OP, CoefVec(), 20.0, box_indices(1, 5), 0)
    with pytest.raises(BoxMismatchError):
        delta_net_estimate(obs, net)


def test_noiseless_grid_estimate_is_within_delta():
    net = build_net(SPEC, 0.1)
    truth = CoefVec.from_array(net.indices, random_feasible(SPEC, net.indices, 1, 8)[0])
    obs = simulate_white_noise(OP, truth, 100.0, net.indices, 0, zero_noise=True)
    assert mise(delta_net_estimate(obs, net).theta_hat, truth) <= 0.1 ** 2


def test_dense_estimate_inside_returns_data():
    indices = box_indices(1, 3)
    y = CoefVec({MultiIndex((0,)): 0.3, MultiIndex((1,)): 0.1})
    obs = simulate_white_noise(OP, y, 100.0, indices, 0, zero_noise=True)
    report = dense_estimate(obs, SPEC)
    assert report.theta_hat == y
    assert report.certificate.kind == PROJECTION
    assert report.certificate.lagrange_multiplier == 0.0
    assert report.certificate.dense_conditions.eligible


def test_dense_estimate_projects_onto_the_boundary():
    indices = box_indices(1, 6)
    rng = np.random.default_rng(5)
    y = CoefVec.from_array(indices, 2.0 * rng.standard_normal(len(indices)))
    obs = simulate_white_noise(OP, y, 1.0, indices, 0, zero_noise=True)
    report = dense_estimate(obs, SPEC)
    cert = report.certificate
    assert cert.lagrange_multiplier > 0.0
    assert cert.kkt_residual <= 1e-12
    assert cert.suboptimality_bound >= 0.0
    assert SPEC.contains(report.theta_hat, 1e-10)
    competitors = random_feasible(SPEC, indices, 500, 6)
    yv = y.to_array(indices)
    risks = -2.0 * competitors @ yv + np.sum(competitors ** 2, axis=1)
    assert np.all(report.risk_value <= risks + 1e-12)


def test_additive_noiseless_estimate():
    components = [(SPEC, 0.0), (SPEC, 1.0)]
    deltas = [0.2, 0.2]
    nets = additive_nets(components, deltas)
    assert [net.indices for net in nets] == [
        (MultiIndex((1, 0)), MultiIndex((2, 0))),
        (MultiIndex((0, 1)), MultiIndex((0, 2))),
    ]
    active = nets[0].indices + nets[1].indices
    truth = CoefVec({MultiIndex((1, 0)): 0.3, MultiIndex((0, 2)): 0.1})
    op = DiagonalOperator.additive([0.0, 1.0])
    obs = simulate_white_noise(op, truth, 100.0, active, 0, zero_noise=True)
    report = additive_estimate(obs, components, deltas)
    assert report.certificate.kind == DIRECT_SUM
    assert len(report.certificate.per_component) == 2
    assert mise(report.theta_hat, truth) <= sum(d ** 2 for d in deltas)


def test_additive_component_mismatch():
    components = [(SPEC, 0.0), (SPEC, 2.0)]
    nets = additive_nets([(SPEC, 0.0), (SPEC, 1.0)], [0.2, 0.2])
    active = nets[0].indices + nets[1].indices
    obs = simulate_white_noise(DiagonalOperator.additive([0.0, 1.0]), CoefVec(), 100.0, active, 0)
    with pytest.raises(ComponentDeclarationError):
        additive_estimate(obs, components, [0.2, 0.2])
    with pytest.raises(ComponentDeclarationError):
        additive_nets(components, [0.2])


def test_mise():
    a = CoefVec({MultiIndex((0,)): 1.0})
    b = CoefVec({MultiIndex((1,)): 1.0})
    assert mise(a, b) == pytest.approx(2.0)
    assert mise(a, a) == 0.0
