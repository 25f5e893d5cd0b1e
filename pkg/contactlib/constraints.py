"""
Interior convex approximation K(Z) of the feasible set: every non-overlap constraint D_ij(q) >= 0 is replaced by its
first-order expansion at the reference configuration Z, which gives one affine constraint phi_ij(q) <= 0 per pair.
"""

import logging
import math
from typing import Optional, Tuple
import numpy as np
from .broad_phase import candidate_pairs
from .errors import ValidationError, InfeasibleConfigurationError, SingularGradientError
from .geometry import all_pairs, pairwise_signed_distances
from .models import Configuration, DomainSpec, ConstraintEval, ActiveSet

logger = logging.getLogger(__name__)

ACTIVE_TOL = 1e-9
FEASIBILITY_TOL = 1e-9


def linearize(qref: Configuration, dom: Optional[DomainSpec] = None, tol: float = FEASIBILITY_TOL,
              strict: bool = False, pairs: Optional[np.ndarray] = None, broad_phase: bool = False,
              cutoff: Optional[float] = None, clamp: bool = True) -> ConstraintEval:
    """
    Builds the affine constraints phi_ij(q) = -D_ij(Z) - G_ij(Z).(q - Z) at the reference configuration Z = qref.

    In tolerant mode (the default), signed distances in [-tol, 0) are accepted, and clamped to 0 before linearizing
    unless clamp is False; in strict mode any negative distance is an error. Unclamped, the constraint of an overlapping
    pair requires the step to separate it.

    :param qref: Reference configuration Z
    :param dom: Domain; on the torus distances and gradients use the nearest periodic image
    :param tol: Overlap tolerated (and clamped) in tolerant mode
    :param strict: Reject every negative signed distance
    :param pairs: Explicit constraint pairs (i < j); all pairs by default
    :param broad_phase: Restrict the pairs to those found by the cell-list broad phase
    :param cutoff: Broad-phase signed-distance cutoff (defaults to twice the largest radius)
    :param clamp: Replace tolerated negative distances by 0
    :return: ConstraintEval with pairs in lexicographic order
    :raises InfeasibleConfigurationError: If some pair overlaps beyond the tolerance
    :raises SingularGradientError: If two centers coincide
    """
    dom = dom or DomainSpec.plane()
    if tol < 0:
        raise ValidationError('Feasibility tolerance must be nonnegative', 'tol')
    if pairs is not None:
        pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    elif broad_phase:
        pairs = candidate_pairs(qref, dom, cutoff)
    else:
        pairs = all_pairs(qref.n_particles)
    if len(pairs) == 0:
        return ConstraintEval(qref.flat, pairs, np.zeros(0), np.zeros((0, 2)), dom)
    distances, separations = pairwise_signed_distances(qref, dom, pairs)
    allowed = 0.0 if strict else tol
    worst = int(np.argmin(distances))
    if distances[worst] < -allowed:
        i, j = pairs[worst]
        raise InfeasibleConfigurationError((int(i), int(j)), float(distances[worst]))
    norms = np.linalg.norm(separations, axis=1)
    if np.any(norms == 0.0):
        i, j = pairs[int(np.argmax(norms == 0.0))]
        raise SingularGradientError((int(i), int(j)))
    clamped = distances < 0
    if clamp and np.any(clamped):
        logger.debug('Clamped %d slightly negative signed distances (min %.3e) before linearizing',
                     int(clamped.sum()), float(distances.min()))
        distances = np.where(clamped, 0.0, distances)
    return ConstraintEval(qref.flat, pairs, distances, separations / norms[:, None], dom)


def evaluate(ce: ConstraintEval, q) -> np.ndarray:
    """Constraint values phi_ij(q) in lexicographic pair order."""
    return ce.values(_flat(q))


def active_set(ce: ConstraintEval, q, tol: float = ACTIVE_TOL) -> ActiveSet:
    """Pairs whose constraint value is within tol of zero."""
    if tol < 0:
        raise ValidationError('Active-set tolerance must be nonnegative', 'tol')
    values = evaluate(ce, q)
    return ActiveSet(ce.pairs[np.abs(values) <= tol])


def penalty_value(ce: ConstraintEval, q) -> Tuple[float, np.ndarray]:
    """
    Exterior quadratic penalty psi(q) = 1/2 sum max(phi_ij(q), 0)^2 and its gradient sum max(phi_ij, 0) grad(phi_ij).
    psi vanishes exactly on K(qref).
    """
    violations = np.maximum(evaluate(ce, q), 0.0)
    return 0.5 * float(violations @ violations), ce.apply_transpose(violations)


def multiplier_bound(u_norm: float, n_v: int, n: int, n_particles: int) -> float:
    """
    Upper bound |U| b^{N_p} on the contact multipliers, with b = 2 sqrt(n_v) / min(sin(pi / (n_v + 1)), sin(pi / N)).
    :param u_norm: Magnitude of the force U
    :param n_v: Maximal number of neighbours of any disk
    :param n: Angular parameter N of the bound
    :param n_particles: Number of disks N_p
    """
    if n_v < 1:
        raise ValidationError('multiplier_bound needs n_v >= 1', 'n_v')
    if n < 3:
        raise ValidationError('multiplier_bound needs N >= 3', 'N')
    b = 2.0 * math.sqrt(n_v) / min(math.sin(math.pi / (n_v + 1)), math.sin(math.pi / n))
    return float(u_norm) * b ** n_particles


def contact_degree(pairs: np.ndarray, multipliers: np.ndarray, tol: float = 0.0) -> int:
    """Largest number of contacts with multiplier above tol that any single disk takes part in (0 without contacts)."""
    pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
    engaged = pairs[np.asarray(multipliers, dtype=float) > tol]
    if len(engaged) == 0:
        return 0
    return int(np.max(np.bincount(engaged.ravel())))


def _flat(q) -> np.ndarray:
    if isinstance(q, Configuration):
        return q.flat
    return np.asarray(q, dtype=float).reshape(-1)
