"""
Signed distances between disks, their gradients and feasibility tests, in the plane and on the flat torus.

On the torus the separation x = q_j - q_i is first wrapped into [0, L) x [0, H); the nearest image of j is then one of
the four shifts x - (h L, k H) with (h, k) in {0, 1}^2, which is the minimum over all integer shifts.
"""

import math
from typing import Optional, Sequence, Tuple, Union
import numpy as np
from .errors import ValidationError, SingularGradientError
from .models import Configuration, DomainSpec, PairGradient, PeriodicDistance

# Relative tolerance for calling two image distances equal
EPSILON = 1e-12
# Image shifts in lexicographic order, so argmin ties resolve to the smallest (h, k)
IMAGE_OFFSETS = np.array([(0, 0), (0, 1), (1, 0), (1, 1)])


def all_pairs(n_particles: int) -> np.ndarray:
    """All pairs i < j in lexicographic order, shape (N_p (N_p - 1) / 2, 2)."""
    i, j = np.triu_indices(n_particles, k=1)
    return np.stack([i, j], axis=1)


def pair_index(i: int, j: int, n_particles: int) -> int:
    """Position of pair (i, j), i < j, in the lexicographic ordering of all_pairs."""
    return i * (2 * n_particles - i - 1) // 2 + (j - i - 1)


def wrap(x: Union[Sequence[float], np.ndarray], dom: DomainSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Maps a point (or an array of points) of the plane into the torus cell [0, L) x [0, H).
    :param x: Point(s), shape (..., 2)
    :param dom: Torus domain
    :return: Tuple of (wrapped point(s), integer cell indices (n^x, n^y)) with x = wrapped + (n^x L, n^y H)
    """
    if not dom.is_torus:
        raise ValidationError('wrap requires a torus domain', 'domain.kind')
    x = np.asarray(x, dtype=float)
    periods = dom.periods
    cells = np.floor(x / periods)
    wrapped = x - cells * periods
    # rounding can land a tiny negative coordinate exactly on the period
    overflow = wrapped >= periods
    wrapped = np.where(overflow, wrapped - periods, wrapped)
    cells = np.where(overflow, cells + 1, cells)
    return wrapped, cells.astype(int)


def nearest_images(separations: np.ndarray, dom: DomainSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Reduces raw separations q_j - q_i to their nearest periodic images.
    :param separations: Array of shape (P, 2)
    :param dom: Domain; on the plane the separations are returned unchanged
    :return: Tuple of (shifted separations (P, 2), total integer cell offsets (P, 2), degeneracy flags (P,))
    """
    separations = np.asarray(separations, dtype=float).reshape(-1, 2)
    if not dom.is_torus:
        zeros = np.zeros(separations.shape, dtype=int)
        return separations, zeros, np.zeros(len(separations), dtype=bool)
    periods = dom.periods
    wrapped, cells = wrap(separations, dom)
    candidates = wrapped[:, None, :] - IMAGE_OFFSETS[None, :, :] * periods
    norms = np.linalg.norm(candidates, axis=2)
    best = np.argmin(norms, axis=1)
    rows = np.arange(len(separations))
    shortest = norms[rows, best]
    degenerate = np.sum(norms <= shortest[:, None] + EPSILON * (1.0 + shortest[:, None]), axis=1) > 1
    return candidates[rows, best], cells + IMAGE_OFFSETS[best], degenerate


def pairwise_signed_distances(q: Configuration, dom: Optional[DomainSpec] = None,
                              pairs: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized signed distances for a set of pairs (all pairs by default).
    :return: Tuple of (distances (P,), nearest-image separations (P, 2))
    """
    dom = dom or DomainSpec.plane()
    pairs = all_pairs(q.n_particles) if pairs is None else np.asarray(pairs, dtype=int).reshape(-1, 2)
    raw = q.positions[pairs[:, 1]] - q.positions[pairs[:, 0]]
    separations, _, _ = nearest_images(raw, dom)
    gaps = np.linalg.norm(separations, axis=1) - (q.radii[pairs[:, 0]] + q.radii[pairs[:, 1]])
    return gaps, separations


def signed_distance(q: Configuration, i: int, j: int) -> float:
    """
    Signed distance D_ij = |q_j - q_i| - (r_i + r_j) in the plane; negative iff the disks overlap.
    """
    _check_pair(q, i, j)
    return float(np.linalg.norm(q.positions[j] - q.positions[i]) - (q.radii[i] + q.radii[j]))


def distance_gradient(q: Configuration, i: int, j: int) -> PairGradient:
    """
    Gradient of D_ij in the plane.
    :raises SingularGradientError: If the two centers coincide
    """
    _check_pair(q, i, j)
    return _gradient_from_separation(q.positions[j] - q.positions[i], (i, j), q.n_particles)


def periodic_signed_distance(q: Configuration, i: int, j: int, dom: DomainSpec) -> PeriodicDistance:
    """
    Signed distance between disk i and the nearest periodic image of disk j.
    :return: PeriodicDistance holding the distance, the minimizing image offsets (h, k) in {0, 1}^2, a flag set when
        several images are equally near (the lexicographically smallest one is reported), and the shifted separation
    """
    _check_pair(q, i, j)
    if not dom.is_torus:
        raise ValidationError('periodic_signed_distance requires a torus domain', 'domain.kind')
    raw = q.positions[j] - q.positions[i]
    wrapped, cells = wrap(raw, dom)
    separations, offsets, degenerate = nearest_images(raw[None], dom)
    h, k = (offsets[0] - cells).tolist()
    distance = float(np.linalg.norm(separations[0]) - (q.radii[i] + q.radii[j]))
    return PeriodicDistance(distance, (int(h), int(k)), bool(degenerate[0]), separations[0])


def periodic_gradient(q: Configuration, i: int, j: int, dom: DomainSpec) -> PairGradient:
    """
    Gradient of the periodic distance d_ij: the unit vector of q_j - q_i shifted by the minimizing cell offsets. When
    the minimizing image is not unique, the lexicographically smallest one is used (one subgradient).
    :raises SingularGradientError: If the shifted separation vanishes
    """
    result = periodic_signed_distance(q, i, j, dom)
    return _gradient_from_separation(result.separation, (i, j), q.n_particles, result.offsets)


def is_feasible(q: Configuration, dom: Optional[DomainSpec] = None, tol: float = 0.0) -> bool:
    """Returns True if every pair's (domain-appropriate) signed distance is at least -tol."""
    if tol < 0:
        raise ValidationError('Feasibility tolerance must be nonnegative', 'tol')
    if q.n_particles < 2:
        return True
    distances, _ = pairwise_signed_distances(q, dom)
    return bool(np.all(distances >= -tol))


def min_signed_distance(q: Configuration, dom: Optional[DomainSpec] = None) -> float:
    """Smallest signed distance over all pairs, +inf for a single disk."""
    if q.n_particles < 2:
        return math.inf
    distances, _ = pairwise_signed_distances(q, dom)
    return float(distances.min())


def prox_regularity_eta(n_particles: int, n_neighbours: int, radii: Sequence[float]) -> float:
    """
    Radius eta for which the feasible set is eta-prox-regular:

        eta = 1 / (N_p n_n) * (min(sin(pi / (n_n + 1)), sin(2 pi / N_p)) / (2 sqrt(n_n)))^N_p * min_{i<j}(r_i + r_j)

    :param n_particles: Number of disks N_p
    :param n_neighbours: Maximal number of neighbours n_n of any disk
    :param radii: Disk radii
    :return: eta; +inf for a single disk (no constraints)
    """
    if n_particles < 1 or n_neighbours < 1:
        raise ValidationError('prox_regularity_eta needs N_p >= 1 and n_n >= 1', 'n_particles')
    if n_particles == 1:
        return math.inf
    radii = np.sort(np.asarray(radii, dtype=float))
    # sin(2 pi / 2) is exactly zero, not the rounded 1.2e-16
    particle_sine = 0.0 if n_particles == 2 else math.sin(2 * math.pi / n_particles)
    sine = min(math.sin(math.pi / (n_neighbours + 1)), particle_sine)
    base = sine / (2 * math.sqrt(n_neighbours))
    return base ** n_particles * float(radii[0] + radii[1]) / (n_particles * n_neighbours)


def _check_pair(q: Configuration, i: int, j: int):
    n = q.n_particles
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f'Pair ({i}, {j}) is out of range for {n} particles')
    if i >= j:
        raise ValidationError(f'Pair indices must satisfy i < j, got ({i}, {j})', 'pair')


def _gradient_from_separation(separation: np.ndarray, pair: Tuple[int, int], n_particles: int,
                              offsets: Tuple[int, int] = (0, 0)) -> PairGradient:
    norm = float(np.linalg.norm(separation))
    if norm == 0.0:
        raise SingularGradientError(pair)
    return PairGradient(pair, separation / norm, n_particles, offsets)
