from math import inf, pi

import pytest

from inverse_erm.controllers import verification
from inverse_erm.controllers.verification import (
    FAST, FULL, check_convolution_svd, check_gram, check_grid_argmin, check_risk_identity, check_radon_svd, report_text,
    run_verification_suite
)
from inverse_erm.ext.error import PreconditionError
from inverse_erm.models.operators import DiagonalOperator
from inverse_erm.models.sequence_core import MultiIndex


def test_fast_suite_passes():
    report = run_verification_suite(FAST)
    failed = [check.name for check in report.checks if not check.passed]
    assert failed == []
    names = [check.name for check in report.checks]
    assert names[:5] == ["gram_fourier_1d", "gram_fourier_2d", "gram_zernike", "gram_chebyshev", "gram_additive"]
    assert "projection_kkt" in names
    assert report_text(report).endswith("overall: PASS\n")


def test_perturbed_radon_singular_value_fails():
    op = DiagonalOperator.radon(overrides={MultiIndex((0, 0)): 1.001 / pi})
    result = check_radon_svd(FAST, op)
    assert not result.passed
    assert result.max_residual > 1e-6


def test_individual_checks_are_deterministic():
    assert check_risk_identity(FAST, 5) == check_risk_identity(FAST, 5)
    assert check_grid_argmin(FAST, 5).max_residual == 0.0
    assert check_convolution_svd(FAST).passed


def test_raising_check_is_reported_as_failure(monkeypatch):
    def broken(level, seed):
        raise PreconditionError("no samples")

    monkeypatch.setattr(verification, "check_covering", broken)
    report = run_verification_suite(FAST)
    covering = next(check for check in report.checks if check.name == "covering")
    assert not covering.passed
    assert covering.max_residual == inf
    assert covering.detail == "no samples"
    assert not report.passed
    assert report_text(report).endswith("overall: FAIL\n")


def test_unknown_level():
    with pytest.raises(PreconditionError):
        run_verification_suite("thorough")


def test_additive_gram_covers_both_coordinates():
    additive = next(check for check in check_gram(FAST) if check.name == "gram_additive")
    assert additive.passed
    assert additive.detail == "12 basis functions over 2 coordinates"


@pytest.mark.slow
def test_full_gram_uses_fine_periodic_grids():
    results = check_gram(FULL)
    assert [check.name for check in results if not check.passed] == []
    assert next(check for check in results if check.name == "gram_additive").detail == \
        "20 basis functions over 2 coordinates"
