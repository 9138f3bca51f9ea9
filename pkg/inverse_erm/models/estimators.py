"""
Empirical risk minimizers with optimality certificates.

gamma_n(c) = ||c - y||^2 - ||y||^2 in sequence coordinates, so minimizing over a
product grid is coordinate-wise rounding and minimizing over the ellipsoid is a
weighted Euclidean projection.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from inverse_erm.config import BISECTION_MAX_ITER, KKT_TOLERANCE
from inverse_erm.ext.error import BisectionError, BoxMismatchError, ComponentDeclarationError, PreconditionError
from inverse_erm.models.nets import NetSpec, build_net, quantize, truncation_level
from inverse_erm.models.operators import ADDITIVE_CONVOLUTION
from inverse_erm.models.rates import DenseConditions, RateModel, dense_conditions
from inverse_erm.models.sequence_core import CoefVec, EllipsoidSpec, component_indices, l2_dist
from inverse_erm.models.simulate import Observation, WhiteNoiseObs, density_statistics, empirical_risk

logger = logging.getLogger(__name__)

GRID_ARGMIN = "exact_grid_argmin"
PROJECTION = "ellipsoid_projection"
DIRECT_SUM = "direct_sum"


@dataclass(frozen=True)
class Certificate:
    kind: str
    exact_grid_argmin: bool = False
    kkt_residual: Optional[float] = None
    lagrange_multiplier: Optional[float] = None
    eps_n: Optional[float] = None
    suboptimality_bound: Optional[float] = None
    dense_conditions: Optional[DenseConditions] = None
    per_component: Tuple["Certificate", ...] = ()


@dataclass(frozen=True, eq=False)
class EstimateReport:
    theta_hat: CoefVec
    risk_value: float
    certificate: Certificate
    nets: Tuple[NetSpec, ...] = field(default=())


def _data_vector(obs: Observation, net: NetSpec) -> CoefVec:
    if isinstance(obs, WhiteNoiseObs):
        if set(obs.active) != set(net.indices):
            raise BoxMismatchError(
                f"Net box has {net.n_active} indices but the observation box has {len(obs.active)}"
            )
        return obs.y
    return density_statistics(obs, net.indices)


def delta_net_estimate(obs: Observation, net: NetSpec) -> EstimateReport:
    """Exact argmin of gamma_n over the grid net: quantize the data vector."""
    data = _data_vector(obs, net)
    theta_hat = quantize(net, data)
    return EstimateReport(theta_hat=theta_hat, risk_value=empirical_risk(obs, theta_hat),
                          certificate=Certificate(kind=GRID_ARGMIN, exact_grid_argmin=True), nets=(net,))


def brute_force_argmin(obs: Observation, points: Sequence[CoefVec]) -> CoefVec:
    """First minimizer of gamma_n over an explicit list of candidates."""
    if not points:
        raise PreconditionError("No candidates to minimize over")
    risks = np.array([empirical_risk(obs, p) for p in points])
    return points[int(np.argmin(risks))]


def _projection(y: np.ndarray, a_sq: np.ndarray, lam: float) -> np.ndarray:
    return y / (1.0 + lam * a_sq)


def dense_estimate(obs: WhiteNoiseObs, spec: EllipsoidSpec, eps_n: Optional[float] = None) -> EstimateReport:
    """
    Minimize gamma_n over the ellipsoid restricted to the active box, which is
    the projection of y onto {sum a_j^2 c_j^2 <= L^2}.

    theta_j = y_j / (1 + lambda a_j^2) with lambda >= 0 the root of
    sum a_j^2 y_j^2 / (1 + lambda a_j^2)^2 = L^2, found by bisection.
    """
    indices = obs.active
    y = obs.y.to_array(indices)
    if eps_n is None:
        eps_n = 1e-10 * (1.0 + float(np.dot(y, y)))
    if eps_n < 0:
        raise PreconditionError(f"eps_n must be nonnegative, got {eps_n}")

    a_sq = spec.coefficients(indices) ** 2
    L_sq = spec.L ** 2
    weighted = float(np.sum(a_sq * y ** 2))
    conditions = dense_conditions(RateModel.from_ellipsoid(spec.s, obs.op.q or 0.0, spec.d))

    if weighted <= L_sq:
        theta = CoefVec.from_array(indices, y)
        cert = Certificate(kind=PROJECTION, kkt_residual=0.0, lagrange_multiplier=0.0, eps_n=eps_n,
                           suboptimality_bound=0.0, dense_conditions=conditions)
        return EstimateReport(theta_hat=theta, risk_value=empirical_risk(obs, theta), certificate=cert)

    def constraint(lam: float) -> float:
        return float(np.sum(a_sq * y ** 2 / (1.0 + lam * a_sq) ** 2)) / L_sq - 1.0

    lo = 0.0
    hi = (np.sqrt(weighted) / spec.L - 1.0) * float(np.max(a_sq)) + 1.0
    expansions = 0
    while constraint(hi) > 0:
        lo, hi = hi, 2.0 * hi
        expansions += 1
        if expansions > BISECTION_MAX_ITER:
            raise BisectionError("Cannot bracket the Lagrange multiplier of the projection")

    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        value = constraint(mid)
        if value > 0:
            lo = mid
        else:
            hi = mid
        if abs(value) <= KKT_TOLERANCE and value <= 0:
            break

    # hi is always on the feasible side
    residual = abs(constraint(hi))
    if residual > KKT_TOLERANCE:
        raise BisectionError(f"Projection constraint residual {residual} exceeds {KKT_TOLERANCE}")

    theta_hi = _projection(y, a_sq, hi)
    theta_lo = _projection(y, a_sq, lo)
    # gamma_n increases along the multiplier path, so the bracket bounds the gap
    gap = float(np.sum((theta_hi - y) ** 2) - np.sum((theta_lo - y) ** 2))
    theta = CoefVec.from_array(indices, theta_hi)
    cert = Certificate(kind=PROJECTION, kkt_residual=residual, lagrange_multiplier=hi, eps_n=eps_n,
                       suboptimality_bound=max(gap, 0.0), dense_conditions=conditions)
    logger.debug(f"Dense estimate: lambda={hi:.17g}, residual={residual:.3g}, gap={gap:.3g}")
    return EstimateReport(theta_hat=theta, risk_value=empirical_risk(obs, theta), certificate=cert)


def additive_nets(components: Sequence[Tuple[EllipsoidSpec, float]], delta_list: Sequence[float]) -> List[NetSpec]:
    """Per-component nets over the single-coordinate indices j e_k, 1 <= j <= M_k."""
    if len(components) != len(delta_list):
        raise ComponentDeclarationError(f"Got {len(components)} components and {len(delta_list)} deltas")
    nets = []
    for k, ((spec, _), delta) in enumerate(zip(components, delta_list)):
        if spec.d != 1:
            raise ComponentDeclarationError(f"Component {k} must be one-dimensional, got d = {spec.d}")
        M = truncation_level(spec, delta)
        nets.append(build_net(spec, delta, indices=component_indices(k, len(components), M)))
    return nets


def additive_estimate(obs: WhiteNoiseObs, components: Sequence[Tuple[EllipsoidSpec, float]],
                      delta_list: Sequence[float]) -> EstimateReport:
    """
    Direct-sum net estimate. Components use mean-zero cosine systems in
    distinct coordinates, so gamma_n separates and each component is
    quantized on its own.
    """
    K = len(components)
    if obs.op.kind != ADDITIVE_CONVOLUTION or obs.op.d != K:
        raise ComponentDeclarationError(f"Observation operator {obs.op.kind} (d={obs.op.d}) does not declare {K} components")
    for k, (_, q) in enumerate(components):
        if q != obs.op.q_list[k]:
            raise ComponentDeclarationError(f"Component {k} declares q = {q}, the operator uses {obs.op.q_list[k]}")
    for idx in obs.active:
        if sum(1 for v in idx.j if v > 0) != 1 or idx.k is not None:
            raise ComponentDeclarationError(f"Index {idx} is not a mean-zero single-coordinate cosine index")

    nets = additive_nets(components, delta_list)
    union = set()
    for net in nets:
        union.update(net.indices)
    if union != set(obs.active):
        raise BoxMismatchError(f"Component nets cover {len(union)} indices, the observation has {len(obs.active)}")

    theta_hat = CoefVec()
    for net in nets:
        theta_hat = theta_hat.plus(quantize(net, obs.y.restrict(net.indices)))
    per_component = tuple(Certificate(kind=GRID_ARGMIN, exact_grid_argmin=True) for _ in nets)
    cert = Certificate(kind=DIRECT_SUM, exact_grid_argmin=True, per_component=per_component)
    return EstimateReport(theta_hat=theta_hat, risk_value=empirical_risk(obs, theta_hat), certificate=cert,
                          nets=tuple(nets))


def mise(theta_hat: CoefVec, theta_true: CoefVec) -> float:
    return l2_dist(theta_hat, theta_true) ** 2
