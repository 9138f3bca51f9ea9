"""
Rate calculators, oracle-inequality bounds and the entropy integral.

Polynomial entropy model: rho(Q, F_delta) = c' delta^-a and
log #F_delta = C delta^-b; for Sobolev ellipsoids a = q/s and b = d/s.
"""
from dataclasses import dataclass
from math import exp, log, sqrt
from typing import Callable, Dict, Optional, Sequence, Tuple
import logging

from scipy.integrate import quad

from inverse_erm.config import (
    BISECTION_MAX_ITER, DENSITY_CHECK_POINTS, DENSITY_CHECK_POINTS_2D, RATE_RESIDUAL_TOLERANCE
)
from inverse_erm.ext.error import AdmissibilityError, BisectionError, DivergentIntegralError, PreconditionError
from inverse_erm.models.operators import DENSITY, WHITE_NOISE, DiagonalOperator, image_sup_norms
from inverse_erm.models.nets import NetSpec

logger = logging.getLogger(__name__)

NET_EQUATION = "net"
DENSE_EQUATION = "dense"


@dataclass(frozen=True)
class RateModel:
    a: float
    b: float
    c_prime: float = 1.0
    C: float = 1.0

    def __post_init__(self):
        if self.a < 0:
            raise PreconditionError(f"Operator-norm exponent a must be nonnegative, got {self.a}")
        if self.b <= 0:
            raise PreconditionError(f"Entropy exponent b must be positive, got {self.b}")
        if self.c_prime <= 0 or self.C <= 0:
            raise PreconditionError("Rate constants must be positive")

    @classmethod
    def from_ellipsoid(cls, s: float, q: float, d: int, c_prime: float = 1.0, C: float = 1.0) -> "RateModel":
        if s <= 0:
            raise PreconditionError(f"Smoothness must be positive, got {s}")
        return cls(a=q / s, b=d / s, c_prime=c_prime, C=C)

    def rho(self, delta: float) -> float:
        return self.c_prime * delta ** (-self.a)

    def log_cardinality(self, delta: float) -> float:
        return self.C * delta ** (-self.b)

    @property
    def integral_exponent(self) -> float:
        return 1.0 - self.a - self.b / 2.0


# -------------------------------------------------------------------------------- Exponents

def rate_exponent_net(a: float, b: float) -> float:
    if b <= 0:
        raise PreconditionError(f"Entropy exponent b must be positive, got {b}")
    if a < 0:
        raise PreconditionError(f"Operator-norm exponent a must be nonnegative, got {a}")
    return 1.0 / (2.0 * (a + 1.0) + b)


def rate_convolution(s: float, q: float, d: int) -> float:
    """MISE exponent 2s/(2s + 2q + d)."""
    if s <= 0:
        raise PreconditionError(f"Smoothness must be positive, got {s}")
    if q < 0:
        raise PreconditionError(f"Degree of ill-posedness must be nonnegative, got {q}")
    if d < 1:
        raise PreconditionError(f"Dimension must be at least 1, got {d}")
    return 2.0 * s / (2.0 * s + 2.0 * q + d)


def rate_radon(s: float) -> float:
    if s <= 0:
        raise PreconditionError(f"Smoothness must be positive, got {s}")
    return 2.0 * s / (2.0 * s + 3.0)


def rate_additive(components: Sequence[Tuple[float, float]]) -> float:
    """The slowest component rate, each component being a one-dimensional deconvolution."""
    if not components:
        raise PreconditionError("Additive model needs at least one component")
    return min(rate_convolution(s, q, 1) for s, q in components)


def lower_bound_exponent(a_K: float, b: float) -> float:
    """psi exponent of psi^2 rho_K(psi)^2 = n^-1 log #D_psi with rho_K = c psi^a_K."""
    if b <= 0:
        raise PreconditionError(f"Entropy exponent b must be positive, got {b}")
    if a_K < 0:
        raise PreconditionError(f"Kullback exponent must be nonnegative, got {a_K}")
    return 1.0 / (2.0 * (1.0 + a_K) + b)


def optimal_delta(n: float, s: float, q: float, d: int, kappa: float = 1.0) -> float:
    """kappa n^(-s/(2s+2q+d)), balancing the bias and variance terms."""
    if n <= 1:
        raise PreconditionError(f"n must exceed 1, got {n}")
    if kappa <= 0:
        raise PreconditionError(f"kappa must be positive, got {kappa}")
    return kappa * n ** (-rate_convolution(s, q, d) / 2.0)


# -------------------------------------------------------------------------------- Bounds

def white_noise_xi_lower(C_tau: float) -> float:
    return sqrt(2.0 / C_tau)


def density_xi_lower(B_inf: float, B_prime_inf: float, C_tau: float) -> float:
    return (4.0 * B_prime_inf / 3.0 + sqrt(2.0 * (8.0 * B_prime_inf ** 2 / 9.0 + C_tau * B_inf))) / C_tau


def density_constants(op: DiagonalOperator, net: NetSpec) -> Tuple[float, float]:
    """
    (B_inf, B'_inf) bounding sup |Ag| and sup |Qg| over every point g of the
    net: each coordinate of a net point is at most levels_j * eps in size.
    """
    points = DENSITY_CHECK_POINTS if op.d == 1 else DENSITY_CHECK_POINTS_2D
    a_sup, q_sup = image_sup_norms(op, net.indices, points)
    radii = net.levels.astype(float) * net.eps
    return float(radii @ a_sup), float(radii @ q_sup)


def density_c_tau(B_inf: float, B_prime_inf: float, xi: float, C_tau: float) -> float:
    """Smallest C_tau * 2^k that admits xi for the density model."""
    if not 0.0 < xi < 0.5:
        raise AdmissibilityError(f"xi = {xi} is outside (0, 0.5) for every C_tau", interval=(0.0, 0.5))
    for _ in range(BISECTION_MAX_ITER):
        if density_xi_lower(B_inf, B_prime_inf, C_tau) <= xi:
            return C_tau
        C_tau *= 2.0
    raise AdmissibilityError(f"No C_tau admits xi = {xi}", interval=(density_xi_lower(B_inf, B_prime_inf, C_tau), 0.5))


def oracle_constants(xi: float, C_tau: float) -> Tuple[float, float]:
    """(C1, C2) = ((1+2 xi)/(1-2 xi), xi C_tau/(1-2 xi))."""
    return (1.0 + 2.0 * xi) / (1.0 - 2.0 * xi), xi * C_tau / (1.0 - 2.0 * xi)


def net_risk_bound(delta: float, rho: float, logN: float, n: float, xi: float, C_tau: float,
                   model: str = WHITE_NOISE, density_consts: Optional[Tuple[float, float]] = None) -> float:
    """
    C1 delta^2 + C2 rho^2 (log N + 1)/n for the delta-net estimator.

    xi must lie in [xi_min, 1/2) where xi_min = sqrt(2/C_tau) for white noise
    and depends on (B_inf, B'_inf) for densities.
    """
    if C_tau <= 0:
        raise PreconditionError(f"C_tau must be positive, got {C_tau}")
    if n <= 0:
        raise PreconditionError(f"n must be positive, got {n}")
    if model == WHITE_NOISE:
        lower = white_noise_xi_lower(C_tau)
    elif model == DENSITY:
        if density_consts is None:
            raise PreconditionError("The density bound needs (B_inf, B'_inf)")
        lower = density_xi_lower(density_consts[0], density_consts[1], C_tau)
    else:
        raise PreconditionError(f"Unknown model '{model}'")
    if not lower <= xi < 0.5:
        raise AdmissibilityError(f"xi = {xi} is outside the admissible interval [{lower}, 0.5)", interval=(lower, 0.5))

    C1, C2 = oracle_constants(xi, C_tau)
    return C1 * delta ** 2 + C2 * rho ** 2 * (logN + 1.0) / n


def additive_risk_bound(delta: float, rho_list: Sequence[float], lambda_list: Sequence[float],
                        n: float, c: float) -> float:
    """3 delta^2 + 32 c^-1 n^-1 [sum rho_k^2 lambda_k + (sum rho_k)^2]."""
    if len(rho_list) != len(lambda_list):
        raise PreconditionError(f"Got {len(rho_list)} operator norms and {len(lambda_list)} entropies")
    if c <= 0:
        raise PreconditionError(f"c must be positive, got {c}")
    bracket = sum(r * r * lam for r, lam in zip(rho_list, lambda_list)) + sum(rho_list) ** 2
    return 3.0 * delta ** 2 + 32.0 * bracket / (c * n)


# -------------------------------------------------------------------------------- Entropy integral

@dataclass(frozen=True)
class DenseConditions:
    eligible: bool
    integral_exponent: float


def dense_conditions(model: RateModel) -> DenseConditions:
    """
    Class conditions of the dense minimizer for the polynomial model. With
    a >= 0 and b > 0 the integrand rho sqrt(log #) is nonincreasing and
    G(delta)/delta^2 decreases whenever G is finite, so finiteness of the
    entropy integral (a + b/2 < 1) is the only condition left.
    """
    p = model.integral_exponent
    return DenseConditions(eligible=p > 0, integral_exponent=p)


def entropy_integral(model: RateModel, delta: float) -> float:
    """G(delta) = c' sqrt(C) delta^p / p with p = 1 - a - b/2."""
    if delta <= 0:
        raise PreconditionError(f"delta must be positive, got {delta}")
    p = model.integral_exponent
    if p <= 0:
        raise DivergentIntegralError(f"Entropy integral diverges: a + b/2 = {model.a + model.b / 2.0} >= 1")
    return model.c_prime * sqrt(model.C) * delta ** p / p


def entropy_integral_numeric(rho: Callable[[float], float], log_cardinality: Callable[[float], float],
                             delta: float) -> float:
    """Adaptive quadrature of rho(u) sqrt(log #F_u) over (0, delta]."""
    if delta <= 0:
        raise PreconditionError(f"delta must be positive, got {delta}")
    value, error = quad(lambda u: rho(u) * sqrt(log_cardinality(u)), 0.0, delta, epsrel=1e-12, limit=500)
    logger.debug(f"Entropy integral: {value} (estimated error {error})")
    return float(value)


# -------------------------------------------------------------------------------- Rate equations

def _bisect_log(residual: Callable[[float], float], label: str) -> float:
    """Root of an increasing residual in t = log psi on (-inf, 0]."""
    hi = 0.0
    if residual(hi) < 0:
        raise BisectionError(f"{label}: no root with psi <= 1")
    lo = -1.0
    steps = 0
    while residual(lo) > 0:
        lo *= 2.0
        steps += 1
        if steps > 64:
            raise BisectionError(f"{label}: cannot bracket the root from below")

    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        value = residual(mid)
        if abs(value) <= RATE_RESIDUAL_TOLERANCE:
            return mid
        if value > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, abs(lo)):
            break
    mid = 0.5 * (lo + hi)
    if abs(residual(mid)) > RATE_RESIDUAL_TOLERANCE:
        raise BisectionError(f"{label}: bisection stalled with residual {residual(mid)}")
    return mid


def solve_rate_equation(n: float, model: RateModel, which: str = NET_EQUATION) -> float:
    """
    Solve n psi^2 = rho(psi)^2 log #F_psi (net) or psi^2 = n^-1/2 G(psi) (dense)
    for psi in (0, 1], residuals taken in log scale.
    """
    if n <= 1:
        raise PreconditionError(f"n must exceed 1, got {n}")
    log_n = log(n)

    if which == NET_EQUATION:
        const = log(model.c_prime ** 2 * model.C)
        slope = 2.0 + 2.0 * model.a + model.b

        def residual(t: float) -> float:
            return log_n + slope * t - const
    elif which == DENSE_EQUATION:
        p = model.integral_exponent
        if p <= 0:
            raise DivergentIntegralError(f"Dense rate equation needs a + b/2 < 1, got {model.a + model.b / 2.0}")
        const = log(model.c_prime * sqrt(model.C) / p)

        def residual(t: float) -> float:
            return (2.0 - p) * t + 0.5 * log_n - const
    else:
        raise PreconditionError(f"Unknown rate equation '{which}'")

    return exp(_bisect_log(residual, f"{which} rate equation"))


def solve_lower_rate_equation(n: float, a_K: float, b: float, c: float = 1.0, C: float = 1.0) -> float:
    """Solve psi^2 (c psi^a_K)^2 = n^-1 C psi^-b for psi in (0, 1]."""
    if n <= 1:
        raise PreconditionError(f"n must exceed 1, got {n}")
    if b <= 0 or a_K < 0 or c <= 0 or C <= 0:
        raise PreconditionError("Lower-bound rate equation needs a_K >= 0 and positive b, c, C")
    log_n = log(n)
    slope = 2.0 + 2.0 * a_K + b
    const = log(C) - 2.0 * log(c)

    def residual(t: float) -> float:
        return slope * t + log_n - const

    return exp(_bisect_log(residual, "lower-bound rate equation"))


def rate_summary(s: float, q: float, d: int) -> Dict[str, float]:
    """Exponents of a deconvolution problem keyed for plain-text output."""
    model = RateModel.from_ellipsoid(s, q, d)
    net = rate_exponent_net(model.a, model.b)
    return {
        "a": model.a,
        "b": model.b,
        "psi_exponent": net,
        "mise_exponent": rate_convolution(s, q, d),
        "lower_bound_mise_exponent": 2.0 * lower_bound_exponent(model.a, model.b),
        "dense_eligible": dense_conditions(model).eligible,
    }
