"""
Oracle suite: every check compares a fast path with an independent
computation and records the largest residual it saw.
"""
from dataclasses import replace
from math import pi
from typing import Callable, List, Optional, Tuple
import logging

import numpy as np

from inverse_erm.config import COVERING_TRIALS_FAST, COVERING_TRIALS_FULL, DEFAULT_BASE_SEED, KKT_TOLERANCE
from inverse_erm.ext.error import BaseCustomError, PreconditionError
from inverse_erm.models.estimators import brute_force_argmin, delta_net_estimate, dense_estimate
from inverse_erm.models.nets import NetSpec, build_net, build_packing, enumerate_net, verify_covering, verify_packing
from inverse_erm.models.operators import (
    DiagonalOperator, periodic_convolution, radon_forward_quadrature, radon_svd_prediction, singular_value
)
from inverse_erm.models.seeding import make_generator, standard_normals, substream_seed
from inverse_erm.models.sequence_core import (
    BasisId, CoefVec, EllipsoidSpec, MultiIndex, basis_values, box_indices, gram_matrix, periodic_grid
)
from inverse_erm.models.simulate import empirical_risk, nu_n, simulate_white_noise
from inverse_erm.models.truth import random_feasible
from inverse_erm.schemas.results import CheckResult, VerificationReport

logger = logging.getLogger(__name__)

FAST = "fast"
FULL = "full"


def _result(name: str, residual: float, tolerance: float, detail: str = "", passed: Optional[bool] = None) -> CheckResult:
    ok = residual <= tolerance if passed is None else passed
    logger.info(f"Check {name}: {'PASS' if ok else 'FAIL'} (max residual {residual:.3g})")
    return CheckResult(name=name, passed=bool(ok), max_residual=float(residual), tolerance=tolerance, detail=detail)


def _zernike_indices(max_degree: int) -> List[MultiIndex]:
    return [MultiIndex((j, k)) for j in range(max_degree + 1) for k in range(max_degree + 1 - j)]


def _additive_gram(d: int, top: int, points: int) -> Tuple[np.ndarray, int]:
    """Gram matrix of the cosine components of every coordinate taken together."""
    nodes, weight = periodic_grid(d, points)
    rows = []
    for coordinate in range(d):
        basis = BasisId.additive(coordinate, d)
        for freq in range(1, top + 1):
            j = [0] * d
            j[coordinate] = freq
            rows.append(basis_values(basis, MultiIndex(tuple(j)), nodes, check=False))
    values = np.stack(rows)
    return (values * weight) @ values.T, len(rows)


# -------------------------------------------------------------------------------- Checks

def check_gram(level: str) -> List[CheckResult]:
    top = 6 if level == FAST else 10
    # periodic grids per axis; the disk and half-plane rules carry their own nodes
    grid_2d = 64 if level == FAST else 512
    cases = [
        ("gram_fourier_1d", BasisId.fourier(1), box_indices(1, 2 * top, parity=True)),
        ("gram_fourier_2d", BasisId.fourier(2), box_indices(2, 3, parity=True)),
        ("gram_zernike", BasisId.zernike(), _zernike_indices(top)),
        ("gram_chebyshev", BasisId.chebyshev(), _zernike_indices(top)),
    ]
    results = []
    for name, basis, indices in cases:
        points = grid_2d if basis.d == 2 else 512
        gram = gram_matrix(basis, indices, points)
        residual = float(np.max(np.abs(gram - np.eye(len(indices)))))
        results.append(_result(name, residual, 1e-10, f"{len(indices)} basis functions"))
    gram, count = _additive_gram(2, top, grid_2d)
    residual = float(np.max(np.abs(gram - np.eye(count))))
    results.append(_result("gram_additive", residual, 1e-10, f"{count} basis functions over 2 coordinates"))
    return results


def check_radon_svd(level: str, op: Optional[DiagonalOperator] = None) -> CheckResult:
    op = op or DiagonalOperator.radon()
    max_degree = 6
    n_points = 50 if level == FAST else 200
    # fixed low-discrepancy offsets and angles
    k = np.arange(n_points)
    us = 0.95 * ((k * 0.6180339887498949) % 1.0)
    phis = 2 * pi * ((k * 0.7548776662466927) % 1.0)
    residual = 0.0
    for idx in _zernike_indices(max_degree):
        f = CoefVec({idx: 1.0})
        for u, phi in zip(us, phis):
            quadrature = radon_forward_quadrature(f, float(u), float(phi), geometry=op.geometry)
            predicted = radon_svd_prediction(op, f, float(u), float(phi))
            residual = max(residual, abs(quadrature - predicted))
    return _result("radon_svd", residual, 1e-6, f"degree <= {max_degree}, {n_points} chords")


def check_convolution_svd(level: str) -> CheckResult:
    op = DiagonalOperator.convolution(1.0, 1)
    xs = np.linspace(0.0, 1.0, 17 if level == FAST else 65)
    residual = 0.0
    basis = op.input_basis
    for idx in box_indices(1, 8, parity=True):
        direct = periodic_convolution(op, idx, xs[:, None])
        predicted = singular_value(op, idx) * basis_values(basis, idx, xs[:, None])
        residual = max(residual, float(np.max(np.abs(direct - predicted))))
    return _result("convolution_svd", residual, 1e-8, "|j| <= 8")


def check_risk_identity(level: str, seed: int) -> CheckResult:
    """||t - f||^2 - gamma(t) + gamma(t0) - ||t0 - f||^2 = 2 nu_n(Q(t - t0)) on random instances."""
    instances = 20 if level == FAST else 100
    op = DiagonalOperator.convolution(1.0, 1)
    spec = EllipsoidSpec(1, 2.0, 1.0)
    net = build_net(spec, 0.2)
    residual = 0.0
    for i in range(instances):
        truth = CoefVec.from_array(net.indices, random_feasible(spec, net.indices, 1, substream_seed(seed, i, 1.0, 1))[0])
        obs = simulate_white_noise(op, truth, 100.0, net.indices, substream_seed(seed, i, 100.0, 2))
        estimate = delta_net_estimate(obs, net).theta_hat
        rng = make_generator(substream_seed(seed, i, 0.0, 3))
        other = CoefVec.from_array(net.indices, standard_normals(rng, net.n_active) * 0.1)
        lhs = (estimate.plus(truth, -1.0).norm_sq() - empirical_risk(obs, estimate)
               + empirical_risk(obs, other) - other.plus(truth, -1.0).norm_sq())
        rhs = 2.0 * nu_n(obs, estimate.plus(other, -1.0))
        residual = max(residual, abs(lhs - rhs))
    return _result("risk_identity", residual, 1e-10, f"{instances} white-noise instances")


def covering_configs():
    return [
        (EllipsoidSpec(1, 1.0, 1.0), 0.3),
        (EllipsoidSpec(1, 2.0, 1.0), 0.2),
        (EllipsoidSpec(1, 2.0, 1.0), 0.05),
        (EllipsoidSpec(1, 3.0, 2.0), 0.1),
        (EllipsoidSpec(2, 2.0, 1.0), 0.3),
        (EllipsoidSpec(2, 3.0, 1.0), 0.2),
    ]


def check_covering(level: str, seed: int) -> CheckResult:
    trials = COVERING_TRIALS_FAST if level == FAST else COVERING_TRIALS_FULL
    worst = 0.0
    passed = True
    for spec, delta in covering_configs():
        distance = verify_covering(build_net(spec, delta), trials, seed)
        worst = max(worst, distance / delta)
        passed = passed and distance <= delta
    return _result("covering", worst, 1.0, f"{trials} samples per configuration, residual is distance/delta", passed)


def check_packing(level: str, seed: int) -> CheckResult:
    configs = [(EllipsoidSpec(1, 2.0, 1.0), 0.05), (EllipsoidSpec(1, 1.0, 1.0), 0.02),
               (EllipsoidSpec(2, 2.0, 1.0), 0.02)]
    if level == FULL:
        configs.append((EllipsoidSpec(1, 2.0, 1.0), 0.001))
    worst = 0.0
    passed = True
    for spec, delta in configs:
        packing = build_packing(spec, delta, seed)
        lo, hi, count = verify_packing(packing)
        ok = lo >= delta * (1.0 - 1e-12) and hi <= 2.0 * delta * (1.0 + 1e-12)
        ok = ok and all(spec.contains(p, 1e-12) for p in packing.points())
        passed = passed and ok
        worst = max(worst, max(0.0, delta - lo, hi - 2.0 * delta))
    return _result("packing", worst, 1e-12, "min >= delta and max <= 2 delta", passed)


def _tiny_nets() -> List[NetSpec]:
    return [
        NetSpec.from_grid(EllipsoidSpec(1, 1.0, 1.0), box_indices(1, 1), 0.5),
        NetSpec.from_grid(EllipsoidSpec(1, 2.0, 1.0), box_indices(1, 2), 0.25),
        NetSpec.from_grid(EllipsoidSpec(2, 1.0, 1.0), box_indices(2, 1), 0.5),
    ]


def check_grid_argmin(level: str, seed: int) -> CheckResult:
    trials = 5 if level == FAST else 25
    mismatches = 0
    total = 0
    for k, net in enumerate(_tiny_nets()):
        op = DiagonalOperator.identity(net.spec.d)
        points = enumerate_net(net)
        for i in range(trials):
            rng = make_generator(substream_seed(seed, i, float(k), 4))
            y = CoefVec.from_array(net.indices, standard_normals(rng, net.n_active))
            obs = simulate_white_noise(op, CoefVec(), 1.0, net.indices, 0, zero_noise=True)
            obs = replace(obs, y=y)
            fast = delta_net_estimate(obs, net).theta_hat
            mismatches += int(fast != brute_force_argmin(obs, points))
            total += 1
    return _result("grid_argmin", float(mismatches), 0.0, f"{total} instances, residual counts mismatches")


def check_projection(level: str, seed: int) -> CheckResult:
    instances = 5 if level == FAST else 20
    samples = 1000
    spec = EllipsoidSpec(1, 2.0, 1.0)
    indices = box_indices(1, 6)
    op = DiagonalOperator.convolution(1.0, 1)
    worst = 0.0
    passed = True
    for i in range(instances):
        rng = make_generator(substream_seed(seed, i, 0.0, 5))
        y = CoefVec.from_array(indices, 2.0 * standard_normals(rng, len(indices)))
        obs = simulate_white_noise(op, CoefVec(), 1.0, indices, 0, zero_noise=True)
        obs = replace(obs, y=y)
        report = dense_estimate(obs, spec)
        residual = report.certificate.kkt_residual
        worst = max(worst, residual)
        candidates = random_feasible(spec, indices, samples, substream_seed(seed, i, 0.0, 6))
        yv = y.to_array(indices)
        risks = -2.0 * candidates @ yv + np.sum(candidates ** 2, axis=1)
        passed = passed and residual <= KKT_TOLERANCE and bool(np.all(report.risk_value <= risks + 1e-12))
    return _result("projection_kkt", worst, KKT_TOLERANCE, f"{instances} instances, {samples} feasible competitors", passed)


# -------------------------------------------------------------------------------- Suite

def run_verification_suite(level: str = FAST, radon_op: Optional[DiagonalOperator] = None,
                           seed: int = DEFAULT_BASE_SEED) -> VerificationReport:
    if level not in (FAST, FULL):
        raise PreconditionError(f"Unknown verification level '{level}'")
    logger.info(f"Verification suite ({level}) starting")
    steps: List[Tuple[str, Callable[[], object]]] = [
        ("gram", lambda: check_gram(level)),
        ("radon_svd", lambda: check_radon_svd(level, radon_op)),
        ("convolution_svd", lambda: check_convolution_svd(level)),
        ("risk_identity", lambda: check_risk_identity(level, seed)),
        ("covering", lambda: check_covering(level, seed)),
        ("packing", lambda: check_packing(level, seed)),
        ("grid_argmin", lambda: check_grid_argmin(level, seed)),
        ("projection_kkt", lambda: check_projection(level, seed)),
    ]
    checks: List[CheckResult] = []
    for name, step in steps:
        try:
            outcome = step()
        except BaseCustomError as e:
            logger.error(f"Check {name} raised: {e.message}")
            outcome = CheckResult(name=name, passed=False, max_residual=float("inf"),
                                  tolerance=0.0, detail=e.message)
        checks.extend(outcome if isinstance(outcome, list) else [outcome])
    return VerificationReport(level=level, checks=checks)


def report_text(report: VerificationReport) -> str:
    lines = [f"level = {report.level}"]
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        lines.append(f"{check.name}: {status} max_residual = {check.max_residual:.17g} "
                     f"tolerance = {check.tolerance:.17g} ({check.detail})")
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"
