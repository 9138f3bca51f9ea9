import numpy as np
import pytest

from inverse_erm.ext.error import DomainViolationError, ParityError, PreconditionError
from inverse_erm.models.polynomials import chebyshev_U, zernike_radial


def test_chebyshev_values():
    assert chebyshev_U(0, 0.3) == 1.0
    assert chebyshev_U(1, 0.5) == pytest.approx(1.0)
    assert chebyshev_U(2, 0.5) == pytest.approx(0.0, abs=1e-15)


def test_chebyshev_matches_trigonometric_form():
    theta = np.linspace(0.1, 3.0, 25)
    for m in range(8):
        np.testing.assert_allclose(chebyshev_U(m, np.cos(theta)), np.sin((m + 1) * theta) / np.sin(theta),
                                   atol=1e-12)


def test_chebyshev_domain():
    with pytest.raises(DomainViolationError):
        chebyshev_U(2, 1.5)
    with pytest.raises(PreconditionError):
        chebyshev_U(-1, 0.5)


def test_zernike_values():
    assert zernike_radial(0, 0, 0.7) == 1.0
    assert zernike_radial(1, 1, 0.5) == pytest.approx(0.5)
    assert zernike_radial(2, 0, 0.5) == pytest.approx(-0.5)
    # R_a^b(1) = 1 for every valid pair
    for a in range(7):
        for b in range(a % 2, a + 1, 2):
            assert zernike_radial(a, b, 1.0) == pytest.approx(1.0)


def test_zernike_errors():
    with pytest.raises(ParityError):
        zernike_radial(2, 1, 0.5)
    with pytest.raises(PreconditionError):
        zernike_radial(1, 2, 0.5)
    with pytest.raises(DomainViolationError):
        zernike_radial(2, 0, 1.2)
