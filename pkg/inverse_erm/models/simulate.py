"""
Observations under the white-noise and density models, the empirical risk and
the centered empirical operator.

White noise is simulated in sequence space: pairing dY_n with Q phi_j gives
y_j = theta_j + n^-1/2 b_j^-1 xi_j with independent standard normals xi_j.
"""
from dataclasses import dataclass, field
from math import ceil, sqrt
from typing import Optional, Tuple, Union
import logging

import numpy as np

from inverse_erm.config import DENSITY_CHECK_POINTS, DENSITY_CHECK_POINTS_2D, ENVELOPE_INFLATION, TRAPEZOID_POINTS
from inverse_erm.ext.error import (
    BoxMismatchError, EnvelopeError, NonPositiveDensityError, PreconditionError, UnsupportedOperatorError
)
from inverse_erm.models.operators import DiagonalOperator, apply_A_seq, apply_Q_seq, q_values, singular_values
from inverse_erm.models.seeding import GAUSSIAN_METHOD, GENERATOR_NAME, make_generator, open_uniforms, standard_normals
from inverse_erm.models.sequence_core import CoefVec, MultiIndex, evaluate_series, periodic_grid, sorted_indices

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class WhiteNoiseObs:
    y: CoefVec
    n: float
    active: Tuple[MultiIndex, ...]
    xi: CoefVec
    seed: int
    theta_true: CoefVec
    op: DiagonalOperator
    generator: str = GENERATOR_NAME
    gaussian_method: str = GAUSSIAN_METHOD


@dataclass(frozen=True, eq=False)
class DensitySample:
    points: np.ndarray
    n: int
    seed: int
    acceptance_rate: float = 1.0


@dataclass(frozen=True, eq=False)
class DensityObs:
    """A density sample paired with the operator that produced it."""
    sample: DensitySample
    op: DiagonalOperator
    theta_true: Optional[CoefVec] = field(default=None)


Observation = Union[WhiteNoiseObs, DensityObs]


def simulate_white_noise(op: DiagonalOperator, theta_true: CoefVec, n: float, active, seed: int,
                         zero_noise: bool = False) -> WhiteNoiseObs:
    """
    Draw y_j = theta_j + n^-1/2 b_j^-1 xi_j on the active indices.

    Args:
        op: diagonal operator giving b_j.
        theta_true: truth, supported inside active.
        n: noise level parameter (inverse variance).
        active: active index box.
        seed: substream seed; draws follow the sorted active order.
        zero_noise: force every xi_j to 0.
    """
    if n <= 0:
        raise PreconditionError(f"n must be positive, got {n}")
    active = sorted_indices(active)
    if not theta_true.support_within(active):
        raise BoxMismatchError("theta_true has nonzero coefficients outside the active box")

    if zero_noise:
        xi = np.zeros(len(active))
    else:
        xi = standard_normals(make_generator(seed), len(active))
    b = singular_values(op, active)
    y = theta_true.to_array(active) + xi / (sqrt(n) * b)
    return WhiteNoiseObs(
        y=CoefVec.from_array(active, y), n=float(n), active=active, xi=CoefVec.from_array(active, xi),
        seed=int(seed), theta_true=theta_true.restrict(active), op=op,
    )


def _check_self_basis(op: DiagonalOperator):
    if not op.self_basis:
        raise UnsupportedOperatorError(f"The density model needs a self-basis operator, not {op.kind}")


def empirical_risk(obs: Observation, c: CoefVec) -> float:
    if isinstance(obs, WhiteNoiseObs):
        if not c.support_within(obs.active):
            raise BoxMismatchError("Candidate has nonzero coefficients outside the active box")
        indices = obs.active
        values = c.to_array(indices)
        return float(-2.0 * np.dot(values, obs.y.to_array(indices)) + c.norm_sq())

    _check_self_basis(obs.op)
    if not any(v != 0.0 for v in c.values()):
        return 0.0
    qg = q_values(obs.op, c, obs.sample.points)
    return float(-2.0 * np.mean(qg) + c.norm_sq())


def _integral_q_af(op: DiagonalOperator, c: CoefVec, theta: CoefVec, points: int) -> float:
    nodes, weight = periodic_grid(op.d, points)
    basis = op.output_basis
    qg = evaluate_series(basis, apply_Q_seq(op, c), nodes, check=False)
    af = evaluate_series(basis, apply_A_seq(op, theta), nodes, check=False)
    return float(weight * np.sum(qg * af))


def nu_n(obs: Observation, g: CoefVec, points: Optional[int] = None) -> float:
    """Centered empirical operator at Qg; uses the stored truth."""
    if isinstance(obs, WhiteNoiseObs):
        if not g.support_within(obs.active):
            raise BoxMismatchError("g has nonzero coefficients outside the active box")
        indices = obs.active
        residual = obs.y.to_array(indices) - obs.theta_true.to_array(indices)
        return float(np.dot(g.to_array(indices), residual))

    _check_self_basis(obs.op)
    if obs.theta_true is None:
        raise PreconditionError("Density observation carries no truth to center at")
    if not any(v != 0.0 for v in g.values()):
        return 0.0
    points = points or (TRAPEZOID_POINTS if obs.op.d == 1 else DENSITY_CHECK_POINTS_2D)
    empirical = float(np.mean(q_values(obs.op, g, obs.sample.points)))
    return empirical - _integral_q_af(obs.op, g, obs.theta_true, points)


def _check_grid(d: int) -> np.ndarray:
    if d == 1:
        nodes, _ = periodic_grid(1, DENSITY_CHECK_POINTS)
    else:
        nodes, _ = periodic_grid(2, DENSITY_CHECK_POINTS_2D)
    return nodes


def sample_density(op: DiagonalOperator, theta_true: CoefVec, n: int, seed: int) -> DensitySample:
    """
    Rejection sampling from Af with a uniform proposal on [0,1]^d.

    The envelope is the maximum of Af on the check grid inflated by 1%; a
    proposal above the envelope means the grid was too coarse.
    """
    _check_self_basis(op)
    if op.d > 2:
        raise PreconditionError(f"Density sampling supports d <= 2, got d = {op.d}")
    if n < 1:
        raise PreconditionError(f"Sample size must be positive, got {n}")

    image = apply_A_seq(op, theta_true)
    basis = op.output_basis
    grid_values = evaluate_series(basis, image, _check_grid(op.d), check=False)
    if np.any(grid_values < 0.0):
        raise NonPositiveDensityError(f"Af is negative on the check grid (min {grid_values.min():.6g})")
    total = float(np.mean(grid_values))
    if abs(total - 1.0) > 1e-8:
        raise NonPositiveDensityError(f"Af integrates to {total!r}, not 1")
    envelope = ENVELOPE_INFLATION * float(np.max(grid_values))

    rng = make_generator(seed)
    accepted = []
    count = 0
    proposed = 0
    hits = 0
    while count < n:
        batch = int(ceil((n - count) * envelope * 1.2)) + 16
        proposals = open_uniforms(rng, (batch, op.d))
        heights = open_uniforms(rng, batch) * envelope
        values = evaluate_series(basis, image, proposals, check=False)
        if np.any(values > envelope):
            raise EnvelopeError(f"Af exceeds the envelope {envelope:.6g} at a proposal; refine the check grid")
        if np.any(values < 0.0):
            raise NonPositiveDensityError("Af is negative at a proposal point")
        keep = proposals[heights < values]
        hits += len(keep)
        accepted.append(keep[: n - count])
        count += min(len(keep), n - count)
        proposed += batch

    points = np.concatenate(accepted, axis=0)
    rate = hits / proposed
    logger.debug(f"Density sample: n={n}, envelope={envelope:.6g}, acceptance rate={rate:.4f}")
    return DensitySample(points=points, n=n, seed=int(seed), acceptance_rate=rate)


def density_statistics(obs: DensityObs, indices) -> CoefVec:
    """z_j = n^-1 sum_i (Q phi_j)(Y_i) = b_j^-1 times the sample mean of phi_j."""
    _check_self_basis(obs.op)
    indices = sorted_indices(indices)
    basis = obs.op.output_basis
    b = singular_values(obs.op, indices)
    means = np.array([np.mean(evaluate_series(basis, CoefVec({idx: 1.0}), obs.sample.points)) for idx in indices])
    return CoefVec.from_array(indices, means / b)
