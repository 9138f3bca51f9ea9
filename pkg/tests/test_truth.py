from math import sqrt

import numpy as np
import pytest

from inverse_erm.ext.error import PreconditionError
from inverse_erm.models.sequence_core import CoefVec, EllipsoidSpec, MultiIndex, box_indices, ell_weighted_norm_sq
from inverse_erm.models.truth import (
    check_membership, component_part, make_additive_truth, make_truth, parse_coefficients, random_feasible
)

SPEC = EllipsoidSpec(1, 2.0, 1.0)


def test_fixed_trig_and_boundary():
    fixed = make_truth(SPEC, "fixed_trig", fraction=0.9)
    assert set(fixed) == {MultiIndex((1,)), MultiIndex((2,))}
    assert sqrt(ell_weighted_norm_sq(SPEC, fixed)) == pytest.approx(0.9)
    assert check_membership(SPEC, make_truth(SPEC, "boundary")) == pytest.approx(1.0)


def test_random_interior_is_seeded_and_inside():
    first = make_truth(SPEC, "random_interior", seed=3)
    assert first == make_truth(SPEC, "random_interior", seed=3)
    assert first != make_truth(SPEC, "random_interior", seed=4)
    assert check_membership(SPEC, first) <= 0.9 * SPEC.L + 1e-12


def test_parse_coefficients():
    theta = parse_coefficients("0=1, 1=0.3, 2=0.1", 1)
    assert theta == CoefVec({MultiIndex((0,)): 1.0, MultiIndex((1,)): 0.3, MultiIndex((2,)): 0.1})
    assert parse_coefficients("1.0=0.2", 2) == CoefVec({MultiIndex((1, 0)): 0.2})
    with pytest.raises(PreconditionError):
        parse_coefficients("1:0.2", 1)
    with pytest.raises(PreconditionError):
        parse_coefficients("1.0=0.2", 1)
    with pytest.raises(PreconditionError):
        parse_coefficients("1=abc", 1)


def test_membership_violation():
    with pytest.raises(PreconditionError):
        check_membership(SPEC, CoefVec({MultiIndex((2,)): 0.5}))


def test_additive_truth_components():
    truth = make_additive_truth([SPEC, SPEC], "fixed_trig")
    assert set(component_part(truth, 0)) == {MultiIndex((1, 0)), MultiIndex((2, 0))}
    assert set(component_part(truth, 1)) == {MultiIndex((0, 1)), MultiIndex((0, 2))}
    with pytest.raises(PreconditionError):
        make_additive_truth([SPEC, SPEC], "random_interior")


def test_random_feasible_points_are_inside():
    indices = box_indices(1, 5)
    points = random_feasible(SPEC, indices, 200, 1)
    weighted = np.sum((SPEC.coefficients(indices) * points) ** 2, axis=1)
    assert points.shape == (200, 6)
    assert np.all(weighted <= SPEC.L ** 2)
