"""
Diagonal-SVD operators A and Q = (A^-1)* in sequence coordinates, the Radon
chord quadrature used as an independent oracle, and operator norms.
"""
from dataclasses import dataclass, field
from math import pi, sqrt
from typing import Dict, Mapping, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy.special import roots_legendre

from inverse_erm.config import GAUSS_LEGENDRE_ORDER, TRAPEZOID_POINTS
from inverse_erm.ext.error import (
    DomainViolationError, NonPositiveDensityError, OverflowGuardError, PreconditionError,
    UnsupportedOperatorError
)
from inverse_erm.models.sequence_core import (
    BasisId, CoefVec, MultiIndex, basis_values, evaluate_series, periodic_grid, sorted_indices
)

logger = logging.getLogger(__name__)

IDENTITY = "identity"
CONVOLUTION = "convolution"
RADON = "radon2d"
ADDITIVE_CONVOLUTION = "additive_convolution"

WHITE_NOISE = "white_noise"
DENSITY = "density"


@dataclass(frozen=True)
class RadonGeometry:
    """
    Observation space Y = [0,1] x [0, 2pi) with dnu = 2/pi sqrt(1-u^2) du dphi.

    chord_prefactor "svd" scales the chord integral by 1/(2pi sqrt(1-u^2)),
    which makes A phi_jk = pi^-1 (j+k+1)^-1/2 psi_jk exact; "printed" uses
    pi/(2 sqrt(1-u^2)) and multiplies every singular value by pi^2.
    """
    chord_prefactor: str = "svd"

    def __post_init__(self):
        if self.chord_prefactor not in ("svd", "printed"):
            raise PreconditionError(f"Unknown chord prefactor '{self.chord_prefactor}'")

    @property
    def singular_scale(self) -> float:
        return 1.0 if self.chord_prefactor == "svd" else pi ** 2

    def density(self, u):
        return 2.0 / pi * np.sqrt(1.0 - np.asarray(u, dtype=float) ** 2)

    def prefactor(self, u: float) -> float:
        h = sqrt(1.0 - u * u)
        if self.chord_prefactor == "svd":
            return 1.0 / (2.0 * pi * h)
        return pi / (2.0 * h)

    def total_measure(self, order: int = GAUSS_LEGENDRE_ORDER) -> float:
        # u = cos t turns the weight into a smooth trigonometric integrand
        x, w = roots_legendre(order)
        t = 0.25 * pi * (x + 1.0)
        inner = float(np.sum(0.25 * pi * w * self.density(np.cos(t)) * np.sin(t)))
        return 2 * pi * inner


@dataclass(frozen=True)
class DiagonalOperator:
    kind: str
    d: int = 1
    q: Optional[float] = None
    kernel: Tuple[Tuple[MultiIndex, float], ...] = ()
    q_list: Tuple[float, ...] = ()
    overrides: Tuple[Tuple[MultiIndex, float], ...] = ()
    geometry: RadonGeometry = field(default_factory=RadonGeometry)

    def __post_init__(self):
        if self.kind not in (IDENTITY, CONVOLUTION, RADON, ADDITIVE_CONVOLUTION):
            raise UnsupportedOperatorError(f"Unknown operator kind '{self.kind}'")
        if self.kind == CONVOLUTION and self.q is None and not self.kernel:
            raise PreconditionError("Convolution needs a degree q or explicit kernel coefficients")
        if self.q is not None and self.q < 0:
            raise PreconditionError(f"Degree of ill-posedness must be nonnegative, got {self.q}")
        for idx, value in self.kernel:
            if not 0.0 < value <= 1.0:
                raise PreconditionError(f"Kernel multiplier at {idx} must lie in (0, 1], got {value}")
        for idx, value in self.overrides:
            if value <= 0.0:
                raise PreconditionError(f"Singular value override at {idx} must be positive, got {value}")

    # ---------------------------------------------------------------- constructors

    @classmethod
    def identity(cls, d: int = 1) -> "DiagonalOperator":
        return cls(IDENTITY, d=d, q=0.0)

    @classmethod
    def convolution(cls, q: float, d: int = 1) -> "DiagonalOperator":
        return cls(CONVOLUTION, d=d, q=float(q))

    @classmethod
    def convolution_kernel(cls, multipliers: Mapping[MultiIndex, float], d: int = 1,
                           q: Optional[float] = None) -> "DiagonalOperator":
        """Convolution with explicit Fourier multipliers; q (if given) covers missing indices."""
        items = tuple((MultiIndex(idx.j), float(v)) for idx, v in sorted(multipliers.items(), key=lambda kv: kv[0].sort_key()))
        return cls(CONVOLUTION, d=d, q=q, kernel=items)

    @classmethod
    def radon(cls, geometry: Optional[RadonGeometry] = None,
              overrides: Optional[Mapping[MultiIndex, float]] = None) -> "DiagonalOperator":
        items = tuple(sorted((overrides or {}).items(), key=lambda kv: kv[0].sort_key()))
        return cls(RADON, d=2, q=0.5, overrides=items, geometry=geometry or RadonGeometry())

    @classmethod
    def additive(cls, q_list: Sequence[float]) -> "DiagonalOperator":
        return cls(ADDITIVE_CONVOLUTION, d=len(q_list), q=max(q_list), q_list=tuple(float(q) for q in q_list))

    # ---------------------------------------------------------------- bases

    @property
    def input_basis(self) -> BasisId:
        if self.kind == RADON:
            return BasisId.zernike()
        return BasisId.fourier(self.d)

    @property
    def output_basis(self) -> BasisId:
        if self.kind == RADON:
            return BasisId.chebyshev()
        return BasisId.fourier(self.d)

    @property
    def self_basis(self) -> bool:
        return self.kind in (IDENTITY, CONVOLUTION, ADDITIVE_CONVOLUTION)


def singular_value(op: DiagonalOperator, j: MultiIndex) -> float:
    if j.d != op.d:
        raise PreconditionError(f"Index {j} does not match operator dimension {op.d}")

    for idx, value in op.overrides:
        if idx == j:
            return value

    if op.kind == IDENTITY:
        return 1.0

    if op.kind == CONVOLUTION:
        if op.kernel:
            base = MultiIndex(j.j)
            for idx, value in op.kernel:
                if idx == base:
                    return value
            if op.q is None:
                raise PreconditionError(f"No kernel multiplier given for index {j}")
        return float(max(1, j.norm1)) ** (-op.q)

    if op.kind == RADON:
        return op.geometry.singular_scale / (pi * sqrt(j.norm1 + 1))

    # additive_convolution
    nonzero = [(i, v) for i, v in enumerate(j.j) if v > 0]
    if len(nonzero) != 1:
        raise PreconditionError(f"Index {j} is not a single-coordinate additive index")
    component, freq = nonzero[0]
    return float(freq) ** (-op.q_list[component])


def singular_values(op: DiagonalOperator, indices: Sequence[MultiIndex]) -> np.ndarray:
    return np.array([singular_value(op, idx) for idx in indices], dtype=float)


def apply_A_seq(op: DiagonalOperator, theta: CoefVec) -> CoefVec:
    return CoefVec({idx: singular_value(op, idx) * v for idx, v in theta.items()})


def apply_Q_seq(op: DiagonalOperator, c: CoefVec) -> CoefVec:
    out: Dict[MultiIndex, float] = {}
    for idx, v in c.items():
        value = v / singular_value(op, idx)
        if not np.isfinite(value):
            raise OverflowGuardError(f"Q coefficient at {idx} is not finite")
        out[idx] = value
    return CoefVec(out)


def q_values(op: DiagonalOperator, c: CoefVec, points: np.ndarray) -> np.ndarray:
    """(Qg)(y) at each row of points, for self-basis operators."""
    if not op.self_basis:
        raise UnsupportedOperatorError(f"Pointwise Q is only available for self-basis operators, not {op.kind}")
    return evaluate_series(op.output_basis, apply_Q_seq(op, c), points)


def q_point_eval(op: DiagonalOperator, c: CoefVec, y) -> float:
    return float(q_values(op, c, np.atleast_2d(np.asarray(y, dtype=float)).reshape(1, op.d))[0])


# -------------------------------------------------------------------------------- Convolution kernels

def kernel_eval(op: DiagonalOperator, x, max_index: int) -> np.ndarray:
    """
    Periodic kernel a(x) = sum_j b_j prod_i c(j_i) cos(2 pi j_i x_i) with
    c(0) = 1 and c(j) = 2, truncated to j in {0..max_index}^d. Its Fourier
    multipliers are the singular values, so a * phi_jk = b_j phi_jk.
    """
    if op.kind not in (IDENTITY, CONVOLUTION):
        raise UnsupportedOperatorError(f"Kernel evaluation needs a convolution operator, not {op.kind}")
    pts = np.atleast_2d(np.asarray(x, dtype=float)).reshape(-1, op.d)
    total = np.zeros(pts.shape[0])
    grids = np.meshgrid(*([np.arange(max_index + 1)] * op.d), indexing="ij")
    for j in zip(*(g.ravel() for g in grids)):
        term = np.full(pts.shape[0], singular_value(op, MultiIndex(tuple(j))))
        for i, jv in enumerate(j):
            if jv > 0:
                term = term * 2.0 * np.cos(2 * pi * jv * pts[:, i])
        total += term
    return total


def periodic_convolution(op: DiagonalOperator, index: MultiIndex, x, points: int = TRAPEZOID_POINTS,
                         max_index: Optional[int] = None) -> np.ndarray:
    """(a * phi_index)(x) by direct tensor-trapezoid quadrature over [0,1)^d."""
    pts = np.atleast_2d(np.asarray(x, dtype=float)).reshape(-1, op.d)
    nodes, weight = periodic_grid(op.d, points)
    basis = op.input_basis
    phi = basis_values(basis, index, nodes, check=False)
    top = max_index if max_index is not None else max(index.j) + 1
    out = np.empty(pts.shape[0])
    for row, xv in enumerate(pts):
        shifted = np.mod(xv - nodes, 1.0)
        out[row] = weight * np.sum(kernel_eval(op, shifted, top) * phi)
    return out


# -------------------------------------------------------------------------------- Radon transform

def radon_forward_quadrature(f: CoefVec, u: float, phi: float, order: int = GAUSS_LEGENDRE_ORDER,
                             geometry: Optional[RadonGeometry] = None) -> float:
    """
    Chord transform of a Zernike-basis function at offset u and normal angle phi,
    integrated over t in [-sqrt(1-u^2), +sqrt(1-u^2)] by Gauss-Legendre.
    """
    geometry = geometry or RadonGeometry()
    if u >= 1.0:
        raise DomainViolationError(f"Degenerate chord at u = {u}")
    if u < 0.0:
        raise DomainViolationError(f"Offset u must be nonnegative, got {u}")
    if not 0.0 <= phi < 2 * pi:
        raise DomainViolationError(f"Angle must lie in [0, 2pi), got {phi}")
    if order < 8:
        raise PreconditionError(f"Quadrature order must be at least 8, got {order}")

    h = sqrt(1.0 - u * u)
    nodes, weights = roots_legendre(order)
    t = h * nodes
    xs = u * np.cos(phi) - t * np.sin(phi)
    ys = u * np.sin(phi) + t * np.cos(phi)
    r = np.minimum(np.hypot(xs, ys), 1.0)
    theta = np.arctan2(ys, xs)
    values = evaluate_series(BasisId.zernike(), f, np.stack([r, theta], axis=1), check=False)
    integral = h * float(np.sum(weights * values))
    return geometry.prefactor(u) * integral


def radon_svd_prediction(op: DiagonalOperator, f: CoefVec, u: float, phi: float) -> float:
    """sum_jk b_jk f_jk psi_jk(u, phi)."""
    if op.kind != RADON:
        raise UnsupportedOperatorError(f"SVD prediction is for the Radon operator, not {op.kind}")
    return float(evaluate_series(op.output_basis, apply_A_seq(op, f), np.array([[u, phi]]))[0])


# -------------------------------------------------------------------------------- Norms and divergences

def _stack(points: Sequence[CoefVec]) -> Tuple[Tuple[MultiIndex, ...], np.ndarray]:
    indices = sorted_indices(set().union(*[set(p) for p in points]))
    return indices, np.stack([p.to_array(indices) for p in points]) if indices else np.zeros((len(points), 0))


def _max_pair_ratio(points: Sequence[CoefVec], weights: np.ndarray, matrix: np.ndarray,
                    allow_identical: bool) -> float:
    best = 0.0
    distinct = False
    for a in range(len(points) - 1):
        diff = matrix[a + 1:] - matrix[a]
        denom = np.sum(diff ** 2, axis=1)
        if np.any(denom == 0.0) and not allow_identical:
            raise PreconditionError("Packing contains an identical pair")
        mask = denom > 0.0
        if not np.any(mask):
            continue
        distinct = True
        ratios = np.sum(weights * diff[mask] ** 2, axis=1) / denom[mask]
        best = max(best, float(np.max(ratios)))
    if not distinct:
        raise PreconditionError("At least two distinct points are required")
    return best


def op_norm_rho(op: DiagonalOperator, net: Sequence[CoefVec]) -> float:
    """max over distinct pairs of ||Q(phi - phi')|| / ||phi - phi'||, brute force."""
    if len(net) < 2:
        raise PreconditionError(f"Operator norm needs at least two net points, got {len(net)}")
    indices, matrix = _stack(net)
    weights = singular_values(op, indices) ** -2.0
    return sqrt(_max_pair_ratio(net, weights, matrix, allow_identical=True))


def _density_grid(op: DiagonalOperator, points: int) -> np.ndarray:
    if op.d > 2:
        raise PreconditionError(f"Density quadrature supports d <= 2, got d = {op.d}")
    nodes, _ = periodic_grid(op.d, points)
    return nodes


def _positive_values(basis: BasisId, theta: CoefVec, nodes: np.ndarray, label: str) -> np.ndarray:
    values = evaluate_series(basis, theta, nodes, check=False)
    if np.any(values <= 0.0):
        raise NonPositiveDensityError(f"{label} is not strictly positive on the quadrature grid (min {values.min():.6g})")
    return values


def rho_K(op: DiagonalOperator, packing: Sequence[CoefVec], model: str = WHITE_NOISE,
          points: int = TRAPEZOID_POINTS) -> float:
    """
    White noise: (1/sqrt2) max ||A(f-g)|| / ||f-g||.
    Density: max D_K(Af, Ag) / ||f-g|| with D_K by tensor quadrature.
    """
    if len(packing) < 2:
        raise PreconditionError(f"rho_K needs at least two packing points, got {len(packing)}")
    indices, matrix = _stack(packing)

    if model == WHITE_NOISE:
        weights = singular_values(op, indices) ** 2
        return sqrt(_max_pair_ratio(packing, weights, matrix, allow_identical=False)) / sqrt(2.0)

    if model != DENSITY:
        raise PreconditionError(f"Unknown model '{model}'")
    if not op.self_basis:
        raise UnsupportedOperatorError(f"Density rho_K needs a self-basis operator, not {op.kind}")

    nodes = _density_grid(op, points)
    images = [_positive_values(op.output_basis, apply_A_seq(op, p), nodes, "Af") for p in packing]
    best = 0.0
    for a in range(len(packing) - 1):
        for b in range(a + 1, len(packing)):
            dist_sq = float(np.sum((matrix[a] - matrix[b]) ** 2))
            if dist_sq == 0.0:
                raise PreconditionError("Packing contains an identical pair")
            kl = max(0.0, float(np.mean(np.log(images[a] / images[b]) * images[a])))
            best = max(best, sqrt(kl) / sqrt(dist_sq))
    return best


def kl_distance(f: CoefVec, g: CoefVec, basis: BasisId, points: int = TRAPEZOID_POINTS) -> float:
    """D_K(f, g) = sqrt(int log(f/g) f) on [0,1]^d, d <= 2."""
    if basis.d > 2:
        raise PreconditionError(f"KL quadrature supports d <= 2, got d = {basis.d}")
    nodes, _ = periodic_grid(basis.d, points)
    fv = _positive_values(basis, f, nodes, "f")
    gv = _positive_values(basis, g, nodes, "g")
    return sqrt(max(0.0, float(np.mean(np.log(fv / gv) * fv))))


def image_sup_norms(op: DiagonalOperator, indices: Sequence[MultiIndex], points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-index sup |A phi_j| and sup |Q phi_j| on the density grid, for self-basis operators."""
    if not op.self_basis:
        raise UnsupportedOperatorError(f"Pointwise images need a self-basis operator, not {op.kind}")
    nodes = _density_grid(op, points)
    peaks = np.array([float(np.max(np.abs(basis_values(op.output_basis, idx, nodes, check=False))))
                      for idx in indices])
    b = singular_values(op, indices)
    return b * peaks, peaks / b
