"""
Uniform cell-list broad phase. Disks are binned into square cells no smaller than the largest possible interaction
range, so every pair within the cutoff lies in the same or an adjacent cell. On the torus, cell neighbourhoods wrap
around. Candidate pairs are then filtered by their exact signed distance.
"""

import logging
from collections import defaultdict
from typing import Dict, List, Optional, Tuple
import numpy as np
from .geometry import all_pairs, pairwise_signed_distances, wrap
from .models import Configuration, DomainSpec

logger = logging.getLogger(__name__)

# Fewer cells than this per axis make adjacent cells alias each other on the torus
MIN_CELLS_PER_AXIS = 3


def default_cutoff(q: Configuration) -> float:
    return 2.0 * float(q.radii.max())


def candidate_pairs(q: Configuration, dom: Optional[DomainSpec] = None, cutoff: Optional[float] = None) -> np.ndarray:
    """
    Returns the pairs i < j whose signed distance is at most cutoff, in lexicographic order.
    :param q: Configuration
    :param dom: Domain (plane by default)
    :param cutoff: Signed-distance cutoff; defaults to twice the largest radius
    :return: Integer array of shape (P, 2)
    """
    dom = dom or DomainSpec.plane()
    cutoff = default_cutoff(q) if cutoff is None else float(cutoff)
    if q.n_particles < 2:
        return np.zeros((0, 2), dtype=int)
    cell_size = 2.0 * float(q.radii.max()) + max(cutoff, 0.0)
    pairs = _cell_list_pairs(q, dom, cell_size)
    if len(pairs) == 0:
        return pairs
    distances, _ = pairwise_signed_distances(q, dom, pairs)
    kept = pairs[distances <= cutoff]
    logger.debug('Broad phase kept %d of %d candidate pairs', len(kept), len(pairs))
    return kept


def _cell_list_pairs(q: Configuration, dom: DomainSpec, cell_size: float) -> np.ndarray:
    if dom.is_torus:
        points, _ = wrap(q.positions, dom)
        n_cells = np.floor(dom.periods / cell_size).astype(int)
        if np.any(n_cells < MIN_CELLS_PER_AXIS):
            return all_pairs(q.n_particles)
        indices = np.minimum(np.floor(points / (dom.periods / n_cells)).astype(int), n_cells - 1)
    else:
        origin = q.positions.min(axis=0)
        indices = np.floor((q.positions - origin) / cell_size).astype(int)
        n_cells = None
    cells: Dict[Tuple[int, int], List[int]] = defaultdict(list)
    for particle, (cx, cy) in enumerate(indices):
        cells[(cx, cy)].append(particle)
    found = set()
    for (cx, cy), members in cells.items():
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                neighbour = (cx + dx, cy + dy)
                if n_cells is not None:
                    neighbour = (neighbour[0] % n_cells[0], neighbour[1] % n_cells[1])
                for i in members:
                    for j in cells.get(neighbour, ()):
                        if i < j:
                            found.add((i, j))
    if not found:
        return np.zeros((0, 2), dtype=int)
    return np.array(sorted(found), dtype=int)
