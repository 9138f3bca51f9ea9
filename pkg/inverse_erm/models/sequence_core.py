"""
Index sets, ellipsoids, coefficient vectors, norms and basis evaluation.

Functions are represented by their coefficients in a real orthonormal basis,
so L2 geometry is Euclidean geometry on finitely supported sequences.
"""
from collections.abc import Mapping
from dataclasses import dataclass
from itertools import product
from math import sqrt, pi
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy.special import roots_legendre

from inverse_erm.config import TRAPEZOID_POINTS
from inverse_erm.ext.error import DomainViolationError, PreconditionError
from inverse_erm.models.polynomials import chebyshev_U, zernike_radial

logger = logging.getLogger(__name__)

FOURIER = "fourier_periodic"
ZERNIKE = "zernike_disk"
CHEBYSHEV = "chebyshev_halfplane"
ADDITIVE = "additive_component"


# -------------------------------------------------------------------------------- Multi-indices

@dataclass(frozen=True)
class MultiIndex:
    """
    A d-tuple j of nonnegative integers with an optional parity tuple k
    (k_i = 1 selects the sine factor in coordinate i). An all-zero parity
    is stored as None so that cosine indices have a single representation.
    """
    j: Tuple[int, ...]
    k: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        j = tuple(int(v) for v in self.j)
        if not j:
            raise PreconditionError("MultiIndex needs at least one coordinate")
        if any(v < 0 for v in j):
            raise PreconditionError(f"MultiIndex entries must be nonnegative, got {j}")
        k = self.k
        if k is not None:
            k = tuple(int(v) for v in k)
            if len(k) != len(j):
                raise PreconditionError(f"Parity tuple {k} does not match index {j}")
            if any(v not in (0, 1) for v in k):
                raise PreconditionError(f"Parity entries must be bits, got {k}")
            if any(kv == 1 and jv == 0 for jv, kv in zip(j, k)):
                raise PreconditionError(f"Parity bit set on a zero frequency in {j}/{k}")
            if not any(k):
                k = None
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "k", k)

    @classmethod
    def of(cls, *j: int) -> "MultiIndex":
        return cls(tuple(j))

    @classmethod
    def parse(cls, token: str) -> "MultiIndex":
        """Parse `j1.j2` or `j1.j2/k1.k2`."""
        token = token.strip()
        try:
            if "/" in token:
                j_part, k_part = token.split("/", 1)
                return cls(tuple(int(v) for v in j_part.split(".")), tuple(int(v) for v in k_part.split(".")))
            return cls(tuple(int(v) for v in token.split(".")))
        except ValueError as e:
            raise PreconditionError(f"Cannot parse multi-index '{token}': {str(e)}")

    @property
    def d(self) -> int:
        return len(self.j)

    @property
    def norm1(self) -> int:
        return sum(self.j)

    @property
    def parity(self) -> Tuple[int, ...]:
        return self.k if self.k is not None else (0,) * len(self.j)

    def sort_key(self) -> Tuple:
        return (self.norm1, self.j, self.parity)

    def __str__(self) -> str:
        text = ".".join(str(v) for v in self.j)
        if self.k is not None:
            text += "/" + ".".join(str(v) for v in self.k)
        return text


def sorted_indices(indices: Iterable[MultiIndex]) -> Tuple[MultiIndex, ...]:
    return tuple(sorted(indices, key=MultiIndex.sort_key))


def parity_patterns(j: Tuple[int, ...]) -> List[Optional[Tuple[int, ...]]]:
    """All parity tuples allowed for j: k_i free where j_i >= 1, zero otherwise."""
    choices = [(0, 1) if jv > 0 else (0,) for jv in j]
    return [k for k in product(*choices)]


def box_indices(d: int, M: int, lower: int = 0, parity: bool = False) -> Tuple[MultiIndex, ...]:
    """Indices of the box {lower, ..., M}^d, optionally with every sine/cosine pattern."""
    if M < lower:
        return ()
    indices = []
    for j in product(range(lower, M + 1), repeat=d):
        if parity:
            indices.extend(MultiIndex(j, k) for k in parity_patterns(j))
        else:
            indices.append(MultiIndex(j))
    return sorted_indices(indices)


def component_indices(component: int, n_components: int, M: int) -> Tuple[MultiIndex, ...]:
    """Single-coordinate indices j e_k, 1 <= j <= M, of an additive component."""
    indices = []
    for j in range(1, M + 1):
        entries = [0] * n_components
        entries[component] = j
        indices.append(MultiIndex(tuple(entries)))
    return tuple(indices)


# -------------------------------------------------------------------------------- Ellipsoids

@dataclass(frozen=True)
class EllipsoidSpec:
    d: int
    s: float
    L: float
    parity: bool = False

    def __post_init__(self):
        if self.d < 1:
            raise PreconditionError(f"Ellipsoid dimension must be positive, got {self.d}")
        if self.s <= 0:
            raise PreconditionError(f"Smoothness must be positive, got {self.s}")
        if self.L <= 0:
            raise PreconditionError(f"Radius must be positive, got {self.L}")

    def coefficients(self, indices: Sequence[MultiIndex]) -> np.ndarray:
        norms = np.array([idx.norm1 for idx in indices], dtype=float)
        return np.maximum(1.0, norms) ** self.s

    def contains(self, theta: "CoefVec", tol: float = 0.0) -> bool:
        return ell_weighted_norm_sq(self, theta) <= self.L ** 2 * (1.0 + tol)


def ell_coeff(spec: EllipsoidSpec, j: MultiIndex) -> float:
    return float(max(1, j.norm1)) ** spec.s


def ell_weighted_norm_sq(spec: EllipsoidSpec, theta: "CoefVec") -> float:
    if not theta:
        return 0.0
    indices = theta.indices()
    values = theta.to_array(indices)
    return float(np.sum(spec.coefficients(indices) ** 2 * values ** 2))


# -------------------------------------------------------------------------------- Coefficient vectors

class CoefVec(Mapping):
    """Finitely supported map MultiIndex -> float; absent indices are zero."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Optional[Mapping] = None):
        data: Dict[MultiIndex, float] = {}
        for key, value in (entries or {}).items():
            if not isinstance(key, MultiIndex):
                key = MultiIndex(tuple(key) if isinstance(key, (tuple, list)) else (int(key),))
            data[key] = float(value)
        self._entries = data

    def __getitem__(self, key: MultiIndex) -> float:
        return self._entries[key]

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        body = ", ".join(f"{idx}: {val!r}" for idx, val in sorted(self._entries.items(), key=lambda kv: kv[0].sort_key()))
        return f"CoefVec({{{body}}})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoefVec):
            return NotImplemented
        keys = set(self._entries) | set(other._entries)
        return all(self.get(k, 0.0) == other.get(k, 0.0) for k in keys)

    __hash__ = None

    @classmethod
    def from_array(cls, indices: Sequence[MultiIndex], values: np.ndarray) -> "CoefVec":
        return cls(dict(zip(indices, np.asarray(values, dtype=float).tolist())))

    def indices(self) -> Tuple[MultiIndex, ...]:
        return sorted_indices(self._entries)

    def to_array(self, indices: Sequence[MultiIndex]) -> np.ndarray:
        return np.array([self._entries.get(idx, 0.0) for idx in indices], dtype=float)

    def restrict(self, indices: Iterable[MultiIndex]) -> "CoefVec":
        keep = set(indices)
        return CoefVec({k: v for k, v in self._entries.items() if k in keep})

    def support_within(self, indices: Iterable[MultiIndex]) -> bool:
        allowed = set(indices)
        return all(k in allowed for k, v in self._entries.items() if v != 0.0)

    def scaled(self, factor: float) -> "CoefVec":
        return CoefVec({k: factor * v for k, v in self._entries.items()})

    def plus(self, other: "CoefVec", weight: float = 1.0) -> "CoefVec":
        merged = dict(self._entries)
        for k, v in other.items():
            merged[k] = merged.get(k, 0.0) + weight * v
        return CoefVec(merged)

    def norm_sq(self) -> float:
        return float(sum(v * v for v in self._entries.values()))


def l2_dist(theta: CoefVec, other: CoefVec) -> float:
    keys = sorted_indices(set(theta) | set(other))
    diff = theta.to_array(keys) - other.to_array(keys)
    return float(np.sqrt(np.sum(diff ** 2)))


# -------------------------------------------------------------------------------- Bases

@dataclass(frozen=True)
class BasisId:
    kind: str
    d: int = 1
    coordinate: Optional[int] = None

    @classmethod
    def fourier(cls, d: int = 1) -> "BasisId":
        return cls(FOURIER, d)

    @classmethod
    def zernike(cls) -> "BasisId":
        return cls(ZERNIKE, 2)

    @classmethod
    def chebyshev(cls) -> "BasisId":
        return cls(CHEBYSHEV, 2)

    @classmethod
    def additive(cls, coordinate: int, d: int) -> "BasisId":
        return cls(ADDITIVE, d, coordinate)


def _as_points(x, d: int) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.shape[-1] != d:
        pts = pts.reshape(-1, d)
    return pts


def _check_domain(basis: BasisId, pts: np.ndarray):
    if basis.kind in (FOURIER, ADDITIVE):
        if np.any(pts < 0.0) or np.any(pts > 1.0):
            raise DomainViolationError(f"Point outside [0,1]^{basis.d} for basis {basis.kind}")
    elif basis.kind == ZERNIKE:
        if np.any(pts[:, 0] < 0.0) or np.any(pts[:, 0] > 1.0):
            raise DomainViolationError("Radius outside [0, 1] for the Zernike disk basis")
    elif basis.kind == CHEBYSHEV:
        if np.any(pts[:, 0] < 0.0) or np.any(pts[:, 0] > 1.0):
            raise DomainViolationError("Offset u outside [0, 1] for the Chebyshev half-plane basis")
        if np.any(pts[:, 1] < 0.0) or np.any(pts[:, 1] >= 2 * pi):
            raise DomainViolationError("Angle outside [0, 2pi) for the Chebyshev half-plane basis")
    else:
        raise PreconditionError(f"Unknown basis kind {basis.kind}")


def _angular(j: int, k: int, angle: np.ndarray) -> np.ndarray:
    # Real form of e^{i(j-k)angle}: sqrt2 Re for j > k, 1 for j = k, sqrt2 Im for j < k
    if j > k:
        return sqrt(2.0) * np.cos((j - k) * angle)
    if j == k:
        return np.ones_like(angle)
    return sqrt(2.0) * np.sin((j - k) * angle)


def basis_values(basis: BasisId, index: MultiIndex, x, check: bool = True) -> np.ndarray:
    """Vectorized basis evaluation; x has shape (n, d) or (d,)."""
    pts = _as_points(x, basis.d)
    if check:
        _check_domain(basis, pts)

    if basis.kind == FOURIER:
        if index.d != basis.d:
            raise PreconditionError(f"Index {index} does not match Fourier dimension {basis.d}")
        values = np.ones(pts.shape[0])
        for i, (jv, kv) in enumerate(zip(index.j, index.parity)):
            if jv == 0:
                continue
            arg = 2 * pi * jv * pts[:, i]
            values = values * sqrt(2.0) * (np.sin(arg) if kv else np.cos(arg))
        return values

    if basis.kind == ADDITIVE:
        nonzero = [i for i, jv in enumerate(index.j) if jv > 0]
        if nonzero != [basis.coordinate]:
            raise PreconditionError(f"Index {index} is not a single-coordinate index of component {basis.coordinate}")
        return sqrt(2.0) * np.cos(2 * pi * index.j[basis.coordinate] * pts[:, basis.coordinate])

    if index.d != 2:
        raise PreconditionError(f"Disk and half-plane bases use (j, k) indices, got {index}")
    j, k = index.j
    degree = j + k
    if basis.kind == ZERNIKE:
        scale = sqrt(degree + 1) / sqrt(pi)
        radial = zernike_radial(degree, abs(j - k), pts[:, 0])
        return scale * radial * _angular(j, k, pts[:, 1])

    # chebyshev_halfplane
    return chebyshev_U(degree, pts[:, 0]) * _angular(j, k, pts[:, 1]) / sqrt(pi)


def basis_eval(basis: BasisId, index: MultiIndex, x) -> float:
    return float(basis_values(basis, index, x)[0])


def evaluate_series(basis: BasisId, theta: CoefVec, x, check: bool = True) -> np.ndarray:
    """Values of sum_j theta_j phi_j at the rows of x."""
    pts = _as_points(x, basis.d)
    total = np.zeros(pts.shape[0])
    for idx, coef in theta.items():
        if coef != 0.0:
            total += coef * basis_values(basis, idx, pts, check=check)
    return total


# -------------------------------------------------------------------------------- Quadrature rules

def periodic_grid(d: int, points: int = TRAPEZOID_POINTS) -> Tuple[np.ndarray, float]:
    """Tensor trapezoid nodes on [0,1)^d with the common weight."""
    axis = np.arange(points) / points
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    return nodes, 1.0 / points ** d


def disk_rule(radial: int = 32, angular: int = 64) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre in r times trapezoid in theta, area measure r dr dtheta."""
    t, w = roots_legendre(radial)
    r = 0.5 * (t + 1.0)
    wr = 0.5 * w * r
    theta = 2 * pi * np.arange(angular) / angular
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    weights = np.outer(wr, np.full(angular, 2 * pi / angular))
    return np.stack([rr.ravel(), tt.ravel()], axis=1), weights.ravel()


def halfplane_rule(radial: int = 64, angular: int = 64) -> Tuple[np.ndarray, np.ndarray]:
    """
    Quadrature for the measure 2/pi sqrt(1-u^2) du dphi on [0,1] x [0, 2pi).
    Substituting u = cos t removes the endpoint singularity of the weight.
    """
    x, w = roots_legendre(radial)
    t = 0.25 * pi * (x + 1.0)
    wt = 0.25 * pi * w * (2.0 / pi) * np.sin(t) ** 2
    u = np.cos(t)
    phi = 2 * pi * np.arange(angular) / angular
    uu, pp = np.meshgrid(u, phi, indexing="ij")
    weights = np.outer(wt, np.full(angular, 2 * pi / angular))
    return np.stack([uu.ravel(), pp.ravel()], axis=1), weights.ravel()


def gram_matrix(basis: BasisId, indices: Sequence[MultiIndex], points: int = TRAPEZOID_POINTS) -> np.ndarray:
    """Quadrature inner products <phi_a, phi_b> on the basis' own domain."""
    if basis.kind in (FOURIER, ADDITIVE):
        nodes, weight = periodic_grid(basis.d, points)
        weights = np.full(nodes.shape[0], weight)
    elif basis.kind == ZERNIKE:
        nodes, weights = disk_rule()
    else:
        nodes, weights = halfplane_rule()

    values = np.stack([basis_values(basis, idx, nodes, check=False) for idx in indices])
    gram = (values * weights) @ values.T
    logger.debug(f"Gram matrix for {basis.kind} over {len(indices)} indices computed")
    return gram
