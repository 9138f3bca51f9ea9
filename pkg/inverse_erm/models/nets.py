"""
Truncate-then-quantize delta-nets and sign-codebook packings of Sobolev ellipsoids.

A net keeps the indices of the box {0..M}^d, where the ellipsoid tail beyond the
box carries at most delta^2/2, and puts the grid eps*Z inside [-L/a_j, L/a_j] on
each kept coordinate, where rounding costs at most another delta^2/2.
"""
from dataclasses import dataclass
from itertools import product
from math import ceil, comb, floor, log, sqrt
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from inverse_erm.config import (
    CODEBOOK_BATCH, CODEBOOK_MAX_REJECTIONS, CODEBOOK_MAX_WORDS, EXHAUSTIVE_CODEBOOK_BITS,
    NET_ENUMERATION_CAP, PACKING_MAX_LEVEL
)
from inverse_erm.ext.error import InfeasiblePackingError, NetCardinalityError, PreconditionError
from inverse_erm.models.operators import DiagonalOperator, singular_values
from inverse_erm.models.seeding import index_hash, make_generator, standard_normals, open_uniforms, substream_seed
from inverse_erm.models.sequence_core import (
    CoefVec, EllipsoidSpec, MultiIndex, box_indices, ell_weighted_norm_sq, sorted_indices
)

logger = logging.getLogger(__name__)


# -------------------------------------------------------------------------------- Nets

@dataclass(frozen=True, eq=False)
class NetSpec:
    delta: float
    M: int
    eps: float
    spec: EllipsoidSpec
    indices: Tuple[MultiIndex, ...]
    bounds: np.ndarray
    levels: np.ndarray

    @property
    def n_active(self) -> int:
        return len(self.indices)

    @classmethod
    def from_grid(cls, spec: EllipsoidSpec, indices: Sequence[MultiIndex], eps: float,
                  delta: Optional[float] = None, M: Optional[int] = None) -> "NetSpec":
        """Grid net over explicit indices with step eps and box bounds L/a_j."""
        if eps <= 0:
            raise PreconditionError(f"Grid step must be positive, got {eps}")
        indices = sorted_indices(indices)
        bounds = spec.L / spec.coefficients(indices)
        # the relative slack keeps exact ratios such as 1/0.5 on their integer
        levels = np.floor(bounds / eps * (1.0 + 1e-12)).astype(np.int64)
        top = max((idx.norm1 for idx in indices), default=0) if M is None else M
        return cls(delta=delta if delta is not None else eps * sqrt(len(indices) / 2.0), M=top,
                   eps=float(eps), spec=spec, indices=indices, bounds=bounds, levels=levels)


def truncation_level(spec: EllipsoidSpec, delta: float) -> int:
    """Smallest M >= 0 with L (M+1)^-s <= delta/sqrt2."""
    target = delta / sqrt(2.0)
    M = max(0, ceil((spec.L / target) ** (1.0 / spec.s)) - 1)
    while M > 0 and spec.L * float(M) ** (-spec.s) <= target:
        M -= 1
    while spec.L * float(M + 1) ** (-spec.s) > target:
        M += 1
    return M


def build_net(spec: EllipsoidSpec, delta: float, indices: Optional[Sequence[MultiIndex]] = None) -> NetSpec:
    """
    Build the delta-net of the ellipsoid.

    Args:
        spec: ellipsoid (d, s, L).
        delta: covering radius.
        indices: active index set; defaults to the box {0..M}^d (with every
            parity pattern when spec.parity is set).

    Returns:
        NetSpec with eps = delta sqrt2 / sqrt(N_active).
    """
    if delta <= 0:
        raise PreconditionError(f"delta must be positive, got {delta}")
    M = truncation_level(spec, delta)
    active = box_indices(spec.d, M, parity=spec.parity) if indices is None else sorted_indices(indices)
    eps = delta * sqrt(2.0) / sqrt(max(1, len(active)))
    net = NetSpec.from_grid(spec, active, eps, delta=delta, M=M)
    logger.debug(f"Built net: delta={delta}, M={M}, active={len(active)}, eps={eps}")
    return net


def _quantize_array(values: np.ndarray, eps: float, levels: np.ndarray) -> np.ndarray:
    # nearest multiple of eps, half-grid ties toward zero, then clamp to the box
    steps = np.sign(values) * np.ceil(np.abs(values) / eps - 0.5)
    steps = np.clip(steps, -levels, levels)
    return steps * eps


def quantize(net: NetSpec, y: CoefVec) -> CoefVec:
    values = y.to_array(net.indices)
    return CoefVec.from_array(net.indices, _quantize_array(values, net.eps, net.levels))


def net_cardinality(net: NetSpec) -> int:
    count = 1
    for level in net.levels.tolist():
        count *= 2 * int(level) + 1
    return count


def _grid_values(level: int, eps: float) -> List[float]:
    # ordered by |m| with the negative value first, so product order breaks ties toward zero
    steps = [0]
    for m in range(1, level + 1):
        steps.extend((-m, m))
    return [m * eps for m in steps]


def enumerate_net(net: NetSpec, cap: int = NET_ENUMERATION_CAP) -> List[CoefVec]:
    count = net_cardinality(net)
    if count > cap:
        raise NetCardinalityError(f"Net has {count} points, above the enumeration cap {cap}", count=count)
    axes = [_grid_values(int(level), net.eps) for level in net.levels.tolist()]
    return [CoefVec(dict(zip(net.indices, point))) for point in product(*axes)]


def net_log_cardinality(net: NetSpec) -> float:
    return float(np.sum(np.log(2.0 * net.levels + 1.0)))


def net_rho(op: DiagonalOperator, net: NetSpec) -> float:
    """
    rho(Q, F_delta) for a grid net: max of b_j^-1 over coordinates carrying at
    least two grid values, since two net points differing in one such
    coordinate attain it.
    """
    varying = [idx for idx, level in zip(net.indices, net.levels.tolist()) if level >= 1]
    if not varying:
        raise PreconditionError("Net has a single point; the operator norm is undefined")
    return float(np.max(1.0 / singular_values(op, varying)))


def sample_ellipsoid(spec: EllipsoidSpec, indices: Sequence[MultiIndex], trials: int, seed: int) -> np.ndarray:
    """
    Points of the ellipsoid restricted to indices: spherically symmetric
    direction, scaled to the weighted boundary, times u^(1/N).
    """
    N = len(indices)
    rng = make_generator(substream_seed(seed, 0, 0.0, index_hash(indices)))
    directions = standard_normals(rng, (trials, N))
    weights = spec.coefficients(indices)
    radius = np.sqrt(np.sum((weights * directions) ** 2, axis=1))
    scale = spec.L * open_uniforms(rng, trials) ** (1.0 / N) / radius
    return directions * scale[:, None]


def verify_covering(net: NetSpec, trials: int, seed: int, points: Optional[Sequence[CoefVec]] = None) -> float:
    """Largest observed distance from a sampled ellipsoid point to its quantized net point."""
    if trials < 1:
        raise PreconditionError(f"trials must be at least 1, got {trials}")
    if points is not None:
        return max(
            float(np.sqrt(np.sum((p.to_array(net.indices) - quantize(net, p).to_array(net.indices)) ** 2)
                          + (p.norm_sq() - float(np.sum(p.to_array(net.indices) ** 2)))))
            for p in points
        )
    samples = sample_ellipsoid(net.spec, net.indices, trials, seed)
    errors = samples - _quantize_array(samples, net.eps, net.levels[None, :])
    worst = float(np.max(np.sqrt(np.sum(errors ** 2, axis=1))))
    logger.info(f"Covering check: {trials} trials, max distance {worst:.6g} (delta {net.delta:.6g})")
    return worst


# -------------------------------------------------------------------------------- Packings

@dataclass(frozen=True, eq=False)
class PackingSpec:
    delta: float
    spec: EllipsoidSpec
    M: int
    M_star: int
    shell: Tuple[MultiIndex, ...]
    theta_star: CoefVec
    gamma: float
    codebook: np.ndarray
    seed: int

    @property
    def m(self) -> int:
        return len(self.shell)

    @property
    def count(self) -> int:
        return int(self.codebook.shape[0])

    @property
    def hamming_threshold(self) -> int:
        return hamming_threshold(self.m)

    @property
    def gv_log_cardinality(self) -> float:
        """log of the Varshamov-Gilbert guaranteed size 2^m / V(m, t-1)."""
        volume = sum(comb(self.m, i) for i in range(self.hamming_threshold))
        return self.m * log(2.0) - log(volume)

    def points(self) -> List[CoefVec]:
        out = []
        for word in self.codebook:
            shell_part = CoefVec(dict(zip(self.shell, (self.gamma * word).tolist())))
            out.append(self.theta_star.plus(shell_part))
        return out


def hamming_threshold(m: int) -> int:
    """Smallest integer distance >= m/4."""
    return max(1, ceil(m / 4))


def _shell(d: int, M: int) -> Tuple[int, Tuple[MultiIndex, ...]]:
    M_star = M // 2
    return M_star, box_indices(d, M, lower=M_star)


def _packing_level(spec: EllipsoidSpec, delta: float, budget: float) -> int:
    """Largest M with delta * max(1, dM)^s <= budget."""
    if delta > budget:
        return -1
    M = max(0, floor((budget / delta) ** (1.0 / spec.s) / spec.d))
    while M > 0 and delta * float(max(1, spec.d * M)) ** spec.s > budget:
        M -= 1
    while M < PACKING_MAX_LEVEL and delta * float(max(1, spec.d * (M + 1))) ** spec.s <= budget:
        M += 1
    return M


def _popcount(values: np.ndarray) -> np.ndarray:
    v = values.astype(np.uint32)
    v = v - ((v >> 1) & 0x55555555)
    v = (v & 0x33333333) + ((v >> 2) & 0x33333333)
    v = (v + (v >> 4)) & 0x0F0F0F0F
    return ((v * 0x01010101) & 0xFFFFFFFF) >> 24


def _lexicographic_codebook(m: int, threshold: int, max_words: int) -> np.ndarray:
    words = np.zeros(0, dtype=np.uint32)
    for candidate in range(1 << m):
        if words.size and np.min(_popcount(words ^ np.uint32(candidate))) < threshold:
            continue
        words = np.append(words, np.uint32(candidate))
        if words.size >= max_words:
            break
    bits = (words[:, None] >> np.arange(m, dtype=np.uint32)[None, :]) & 1
    return bits.astype(bool)


def _random_codebook(m: int, threshold: int, seed: int, max_words: int, max_rejections: int) -> np.ndarray:
    first = np.zeros(m, dtype=bool)
    second = np.zeros(m, dtype=bool)
    second[:threshold] = True
    words = [first, second]
    rng = make_generator(seed)
    rejections = 0
    while len(words) < max_words and rejections < max_rejections:
        batch = rng.random((CODEBOOK_BATCH, m)) < 0.5
        for candidate in batch:
            code = np.stack(words)
            if np.min(np.sum(code != candidate, axis=1)) >= threshold:
                words.append(candidate)
                rejections = 0
                if len(words) >= max_words:
                    break
            else:
                rejections += 1
                if rejections >= max_rejections:
                    break
    return np.stack(words)


def greedy_codebook(m: int, seed: int, max_words: int = CODEBOOK_MAX_WORDS,
                    max_rejections: int = CODEBOOK_MAX_REJECTIONS) -> np.ndarray:
    """
    Greedy Varshamov-Gilbert sign codebook over {-1,+1}^m with pairwise Hamming
    distance >= m/4. Position 0 is the lowest shell index. Both constructions
    start from the all -1 word and the word flipping the first ceil(m/4) positions.
    """
    threshold = hamming_threshold(m)
    if m <= EXHAUSTIVE_CODEBOOK_BITS:
        bits = _lexicographic_codebook(m, threshold, max_words)
    else:
        bits = _random_codebook(m, threshold, seed, max_words, max_rejections)
    return np.where(bits, 1, -1).astype(np.int8)


def build_packing(spec: EllipsoidSpec, delta: float, seed: int, theta_star: Optional[CoefVec] = None) -> PackingSpec:
    """Sign-perturbation packing theta* + gamma sigma on the shell {M*..M}^d."""
    if delta <= 0:
        raise PreconditionError(f"delta must be positive, got {delta}")
    theta_star = theta_star or CoefVec()
    remaining = spec.L ** 2 - ell_weighted_norm_sq(spec, theta_star)
    if remaining <= 0:
        raise InfeasiblePackingError("Baseline theta* leaves no room inside the ellipsoid", feasible_range=(0.0, 0.0))
    budget = sqrt(remaining)

    M = _packing_level(spec, delta, budget)
    if M < 0:
        raise InfeasiblePackingError(
            f"delta={delta} is too large for a packing inside the ellipsoid; feasible range (0, {budget}]",
            feasible_range=(0.0, budget),
        )
    M_star, shell = _shell(spec.d, M)
    overlap = [idx for idx in shell if theta_star.get(idx, 0.0) != 0.0]
    if overlap:
        raise InfeasiblePackingError(
            f"Baseline theta* is nonzero on the shell at {overlap[0]}; decrease delta",
            feasible_range=(0.0, delta),
        )

    m = len(shell)
    gamma = delta / sqrt(m)
    a_max = float(np.max(spec.coefficients(shell)))
    if m * a_max ** 2 * gamma ** 2 > remaining * (1.0 + 1e-12):
        raise InfeasiblePackingError(f"Packing at delta={delta} leaves the ellipsoid", feasible_range=(0.0, budget))

    codebook = greedy_codebook(m, substream_seed(seed, 0, delta, index_hash(shell)))
    logger.info(f"Built packing: delta={delta}, M={M}, shell size={m}, codewords={codebook.shape[0]}")
    return PackingSpec(delta=delta, spec=spec, M=M, M_star=M_star, shell=shell, theta_star=theta_star,
                       gamma=gamma, codebook=codebook, seed=seed)


def verify_packing(p: PackingSpec) -> Tuple[float, float, int]:
    """Exact pairwise (min, max) distance over all packing points and their count."""
    if p.count < 2:
        raise PreconditionError(f"Packing needs at least two points, got {p.count}")
    indices = sorted_indices(set(p.shell) | set(p.theta_star))
    matrix = np.stack([pt.to_array(indices) for pt in p.points()])
    lo, hi = np.inf, 0.0
    for a in range(p.count - 1):
        dist = np.sqrt(np.sum((matrix[a + 1:] - matrix[a]) ** 2, axis=1))
        lo = min(lo, float(np.min(dist)))
        hi = max(hi, float(np.max(dist)))
    return lo, hi, p.count
