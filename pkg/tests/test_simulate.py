from dataclasses import replace
from math import sqrt

import numpy as np
import pytest

from inverse_erm.ext.error import BoxMismatchError, NonPositiveDensityError, UnsupportedOperatorError
from inverse_erm.models.operators import DiagonalOperator
from inverse_erm.models.seeding import make_generator, standard_normals
from inverse_erm.models.sequence_core import CoefVec, MultiIndex, box_indices
from inverse_erm.models.simulate import (
    DensityObs, density_statistics, empirical_risk, nu_n, sample_density, simulate_white_noise
)

OP = DiagonalOperator.convolution(1.0, 1)
ACTIVE = box_indices(1, 3)
TRUTH = CoefVec({MultiIndex((0,)): 0.5, MultiIndex((2,)): -0.1})


def test_zero_noise_returns_truth():
    obs = simulate_white_noise(OP, TRUTH, 100.0, ACTIVE, 5, zero_noise=True)
    assert obs.y == TRUTH
    assert all(v == 0.0 for v in obs.xi.values())
    assert obs.active == ACTIVE


def test_truth_outside_the_box():
    with pytest.raises(BoxMismatchError):
        simulate_white_noise(OP, CoefVec({MultiIndex((7,)): 0.1}), 100.0, ACTIVE, 5)


def test_same_seed_same_draw():
    first = simulate_white_noise(OP, TRUTH, 100.0, ACTIVE, 42)
    second = simulate_white_noise(OP, TRUTH, 100.0, ACTIVE, 42)
    other = simulate_white_noise(OP, TRUTH, 100.0, ACTIVE, 43)
    assert first.y == second.y
    assert first.y != other.y


def test_noise_scale():
    n = 400.0
    obs = simulate_white_noise(OP, TRUTH, n, ACTIVE, 9)
    expected_xi = standard_normals(make_generator(9), len(ACTIVE))
    for pos, idx in enumerate(ACTIVE):
        b = 1.0 / max(1, idx.j[0])
        assert obs.xi[idx] == expected_xi[pos]
        assert obs.y[idx] - TRUTH.get(idx, 0.0) == pytest.approx(expected_xi[pos] / (sqrt(n) * b))


def test_empirical_risk_formula():
    obs = simulate_white_noise(OP, TRUTH, 50.0, ACTIVE, 1)
    c = CoefVec({MultiIndex((1,)): 0.2, MultiIndex((3,)): -0.4})
    expected = sum(-2.0 * c.get(idx, 0.0) * obs.y[idx] + c.get(idx, 0.0) ** 2 for idx in ACTIVE)
    assert empirical_risk(obs, c) == pytest.approx(expected)
    with pytest.raises(BoxMismatchError):
        empirical_risk(obs, CoefVec({MultiIndex((9,)): 1.0}))


def test_white_noise_risk_identity():
    obs = simulate_white_noise(OP, TRUTH, 50.0, ACTIVE, 2)
    t = CoefVec({MultiIndex((1,)): 0.3, MultiIndex((2,)): 0.05})
    t0 = CoefVec({MultiIndex((0,)): 0.4})
    lhs = (t.plus(TRUTH, -1.0).norm_sq() - empirical_risk(obs, t)
           + empirical_risk(obs, t0) - t0.plus(TRUTH, -1.0).norm_sq())
    assert lhs == pytest.approx(2.0 * nu_n(obs, t.plus(t0, -1.0)), abs=1e-12)


def test_density_sampling_moments():
    truth = CoefVec({MultiIndex((0,)): 1.0, MultiIndex((1,)): 0.3})
    sample = sample_density(OP, truth, 20000, 17)
    assert sample.points.shape == (20000, 1)
    assert np.all((sample.points > 0.0) & (sample.points < 1.0))
    assert 0.0 < sample.acceptance_rate <= 1.0
    z = density_statistics(DensityObs(sample=sample, op=OP, theta_true=truth), box_indices(1, 2))
    assert z[MultiIndex((0,))] == pytest.approx(1.0)
    assert z[MultiIndex((1,))] == pytest.approx(0.3, abs=0.05)
    assert z[MultiIndex((2,))] == pytest.approx(0.0, abs=0.1)


def test_density_sampling_is_deterministic():
    truth = CoefVec({MultiIndex((0,)): 1.0, MultiIndex((1,)): 0.3})
    first = sample_density(OP, truth, 500, 3)
    second = sample_density(OP, truth, 500, 3)
    np.testing.assert_array_equal(first.points, second.points)


def test_density_risk_identity():
    truth = CoefVec({MultiIndex((0,)): 1.0, MultiIndex((1,)): 0.3})
    obs = DensityObs(sample=sample_density(OP, truth, 2000, 4), op=OP, theta_true=truth)
    t = CoefVec({MultiIndex((0,)): 1.0, MultiIndex((1,)): 0.2})
    t0 = CoefVec({MultiIndex((0,)): 1.0, MultiIndex((2,)): 0.1})
    lhs = (t.plus(truth, -1.0).norm_sq() - empirical_risk(obs, t)
           + empirical_risk(obs, t0) - t0.plus(truth, -1.0).norm_sq())
    assert lhs == pytest.approx(2.0 * nu_n(obs, t.plus(t0, -1.0)), abs=1e-10)


@pytest.mark.parametrize("truth", [
    CoefVec({MultiIndex((0,)): 0.5}),
    CoefVec({MultiIndex((0,)): 1.0, MultiIndex((1,)): 1.0}),
])
def test_density_rejects_bad_truths(truth):
    with pytest.raises(NonPositiveDensityError):
        sample_density(OP, truth, 10, 0)


def test_density_needs_a_self_basis_operator():
    truth = CoefVec({MultiIndex((0, 0)): 1.0})
    with pytest.raises(UnsupportedOperatorError):
        sample_density(DiagonalOperator.radon(), truth, 10, 0)


def test_replacing_the_data_vector():
    obs = simulate_white_noise(OP, TRUTH, 50.0, ACTIVE, 2)
    y = CoefVec({MultiIndex((1,)): 1.0})
    assert empirical_risk(replace(obs, y=y), y) == pytest.approx(-1.0)
