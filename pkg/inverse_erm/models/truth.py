"""Named truth generators for experiments."""
from math import sqrt
from typing import Optional, Sequence
import logging

import numpy as np

from inverse_erm.ext.error import PreconditionError
from inverse_erm.models.seeding import make_generator, open_uniforms, standard_normals
from inverse_erm.models.sequence_core import (
    CoefVec, EllipsoidSpec, MultiIndex, box_indices, component_indices, ell_weighted_norm_sq
)

logger = logging.getLogger(__name__)

FIXED_TRIG = "fixed_trig"
BOUNDARY = "boundary"
RANDOM_INTERIOR = "random_interior"
EXPLICIT = "explicit"

GENERATORS = (FIXED_TRIG, BOUNDARY, RANDOM_INTERIOR, EXPLICIT)


def _equal_energy(spec: EllipsoidSpec, indices: Sequence[MultiIndex], radius: float) -> CoefVec:
    # every index carries the same weighted energy radius^2 / |indices|
    a = spec.coefficients(indices)
    return CoefVec.from_array(indices, radius / (sqrt(len(indices)) * a))


def low_frequency_indices(d: int, top: int = 2) -> Sequence[MultiIndex]:
    return tuple(idx for idx in box_indices(d, top) if 1 <= idx.norm1 <= top)


def parse_coefficients(text: str, d: int) -> CoefVec:
    """Parse `j=value` pairs such as `0=1, 1=0.3` or `1.0=0.2, 0.2=0.1`."""
    entries = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        if "=" not in item:
            raise PreconditionError(f"Coefficient entry '{item}' is not of the form index=value")
        key, value = item.split("=", 1)
        idx = MultiIndex.parse(key)
        if idx.d != d:
            raise PreconditionError(f"Index {idx} has dimension {idx.d}, expected {d}")
        try:
            entries[idx] = float(value)
        except ValueError:
            raise PreconditionError(f"Coefficient value '{value.strip()}' is not a number")
    return CoefVec(entries)


def make_truth(spec: EllipsoidSpec, generator: str, fraction: float = 0.9, seed: int = 0,
               coefficients: Optional[str] = None) -> CoefVec:
    """
    fixed_trig: equal weighted energy on 1 <= |j| <= 2 with weighted norm fraction * L.
    boundary: the same support saturating the ellipsoid.
    random_interior: seeded Gaussian direction on |j| <= 4 scaled inside the ellipsoid.
    explicit: coefficients given as text.
    """
    if generator == FIXED_TRIG:
        return _equal_energy(spec, low_frequency_indices(spec.d), fraction * spec.L)
    if generator == BOUNDARY:
        return _equal_energy(spec, low_frequency_indices(spec.d), spec.L)
    if generator == RANDOM_INTERIOR:
        indices = box_indices(spec.d, 4)
        indices = tuple(idx for idx in indices if idx.norm1 <= 4)
        rng = make_generator(seed)
        direction = CoefVec.from_array(indices, standard_normals(rng, len(indices)))
        radius = fraction * spec.L * (0.5 + 0.5 * float(open_uniforms(rng, 1)[0]))
        return direction.scaled(radius / sqrt(ell_weighted_norm_sq(spec, direction)))
    if generator == EXPLICIT:
        if not coefficients:
            raise PreconditionError("The explicit truth needs coefficients")
        return parse_coefficients(coefficients, spec.d)
    raise PreconditionError(f"Unknown truth generator '{generator}'")


def make_additive_truth(specs: Sequence[EllipsoidSpec], generator: str, fraction: float = 0.9,
                        coefficients: Optional[str] = None) -> CoefVec:
    """Component-wise truth on indices j e_k; each component is checked against its own ellipsoid."""
    K = len(specs)
    if generator == EXPLICIT:
        if not coefficients:
            raise PreconditionError("The explicit truth needs coefficients")
        return parse_coefficients(coefficients, K)
    if generator not in (FIXED_TRIG, BOUNDARY):
        raise PreconditionError(f"Additive truths support fixed_trig, boundary and explicit, not '{generator}'")
    scale = fraction if generator == FIXED_TRIG else 1.0
    truth = CoefVec()
    for k, spec in enumerate(specs):
        truth = truth.plus(_equal_energy(spec, component_indices(k, K, 2), scale * spec.L))
    return truth


def component_part(theta: CoefVec, component: int) -> CoefVec:
    return CoefVec({idx: v for idx, v in theta.items()
                    if idx.j[component] > 0 and sum(idx.j) == idx.j[component]})


def check_membership(spec: EllipsoidSpec, theta: CoefVec) -> float:
    """Weighted norm of theta; raises when it leaves the ellipsoid."""
    weighted = sqrt(ell_weighted_norm_sq(spec, theta))
    if weighted > spec.L * (1.0 + 1e-12):
        raise PreconditionError(f"Truth has weighted norm {weighted:.6g} > L = {spec.L}")
    return weighted


def random_feasible(spec: EllipsoidSpec, indices: Sequence[MultiIndex], count: int, seed: int) -> np.ndarray:
    """count random points of the ellipsoid restricted to indices, as rows."""
    rng = make_generator(seed)
    z = standard_normals(rng, (count, len(indices)))
    a = spec.coefficients(indices)
    radius = np.sqrt(np.sum((a * z) ** 2, axis=1))
    u = open_uniforms(rng, count)
    return z * (spec.L * u / radius)[:, None]
